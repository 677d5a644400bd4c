use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;

use chrono::NaiveDate;
use seqcast_core::market_data::{fetch_remote, parse_csv, FetchError};

/// Serves one canned HTTP response per accepted connection and records the
/// request lines.
fn serve(status: &'static str, body: &'static str, connections: usize) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = thread::spawn(move || {
        let mut requests = Vec::new();
        for stream in listener.incoming().take(connections) {
            let mut stream = stream.unwrap();
            let mut buf = [0u8; 4096];
            let n = stream.read(&mut buf).unwrap();
            let text = String::from_utf8_lossy(&buf[..n]).to_string();
            requests.push(text.lines().next().unwrap_or_default().to_string());
            let response = format!(
                "HTTP/1.1 {status}\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
        requests
    });
    (format!("http://{addr}"), handle)
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

const THREE_ROWS: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n\
2022-01-03,10,11,9,10.5,10.4,1000\n\
2022-01-04,10.5,11.5,10,11,10.9,1200\n\
2022-01-05,11,12,10.5,11.75,11.6,900\n";

#[test]
fn passthrough_of_csv_body() {
    let (base, server) = serve("200 OK", THREE_ROWS, 1);
    let template = format!("{base}/prices/{{symbol}}?from={{start}}&to={{end}}");
    let body = fetch_remote(&template, "VNQ", day(2022, 1, 1), day(2022, 1, 31)).unwrap();
    assert_eq!(body, THREE_ROWS);
    assert_eq!(parse_csv(&body, "VNQ").unwrap().len(), 3);
    let requests = server.join().unwrap();
    assert_eq!(requests[0], "GET /prices/VNQ?from=2022-01-01&to=2022-01-31 HTTP/1.1");
}

#[test]
fn http_error_status() {
    let (base, server) = serve("404 Not Found", "no such ticker", 1);
    let err = fetch_remote(&format!("{base}/{{symbol}}"), "XYZ", day(2022, 1, 1), day(2022, 2, 1)).unwrap_err();
    assert_eq!(err, FetchError::HttpStatus(404));
    server.join().unwrap();
}

#[test]
fn empty_body() {
    let (base, server) = serve("200 OK", "", 1);
    let err = fetch_remote(&format!("{base}/{{symbol}}"), "VNQ", day(2022, 1, 1), day(2022, 2, 1)).unwrap_err();
    assert_eq!(err, FetchError::EmptyBody);
    server.join().unwrap();
}

#[test]
fn unreachable_endpoint() {
    // Bind and drop to get a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = fetch_remote(&format!("http://127.0.0.1:{port}/{{symbol}}"), "VNQ", day(2022, 1, 1), day(2022, 2, 1))
        .unwrap_err();
    assert!(matches!(err, FetchError::Network(_)), "{err:?}");
}
