use std::time::Duration;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("network error: {0}")]
    Network(String),
    #[error("server answered with HTTP status {0}")]
    HttpStatus(u16),
    #[error("server answered with an empty body")]
    EmptyBody,
}

/// Substitutes `{symbol}`, `{start}`, `{end}` (YYYY-MM-DD) and
/// `{start_unix}`, `{end_unix}` (seconds since the epoch at UTC midnight).
pub fn expand_template(template: &str, symbol: &str, start: NaiveDate, end: NaiveDate) -> String {
    let unix = |d: NaiveDate| {
        d.and_hms_opt(0, 0, 0)
            .expect("midnight is valid")
            .and_utc()
            .timestamp()
            .to_string()
    };
    template
        .replace("{symbol}", symbol)
        .replace("{start_unix}", &unix(start))
        .replace("{end_unix}", &unix(end))
        .replace("{start}", &start.format("%Y-%m-%d").to_string())
        .replace("{end}", &end.format("%Y-%m-%d").to_string())
}

/// Downloads csv text for `symbol` from an HTTP(S) endpoint. Blocking.
pub fn fetch_remote(
    endpoint_template: &str,
    symbol: &str,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<String, FetchError> {
    let url = expand_template(endpoint_template, symbol, start, end);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(60)))
        .build()
        .into();
    let mut response = agent.get(&url).call().map_err(|e| match e {
        ureq::Error::StatusCode(code) => FetchError::HttpStatus(code),
        other => FetchError::Network(other.to_string()),
    })?;
    let status = response.status().as_u16();
    if status != 200 {
        return Err(FetchError::HttpStatus(status));
    }
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| FetchError::Network(e.to_string()))?;
    if body.trim().is_empty() {
        return Err(FetchError::EmptyBody);
    }
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_placeholders() {
        let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2022, 12, 21).unwrap();
        let url = expand_template(
            "http://h/{symbol}.csv?from={start}&to={end}&p1={start_unix}&p2={end_unix}",
            "VNQ",
            start,
            end,
        );
        assert_eq!(
            url,
            "http://h/VNQ.csv?from=2012-01-01&to=2022-12-21&p1=1325376000&p2=1671580800"
        );
    }

    #[test]
    fn unreachable_host_is_network_error() {
        let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
        // Port 9 on loopback: nothing listens there.
        let err = fetch_remote("http://127.0.0.1:9/{symbol}", "X", start, start).unwrap_err();
        assert!(matches!(err, FetchError::Network(_)), "{err:?}");
    }
}
