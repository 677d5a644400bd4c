//! Stacked-LSTM forecasting of daily closing prices.
//!
//! The crate covers the whole pipeline: csv ingestion and cleaning
//! ([`market_data`]), leakage-free scaling and windowing ([`preprocess`]),
//! the recurrent network and its exact gradients ([`lstm`]), Adam training
//! ([`training`]), regression metrics ([`evaluate`]) and the end-to-end
//! driver used by the command-line tool ([`pipeline`]).

pub mod chart;
pub mod checkpoint;
pub mod evaluate;
pub mod lstm;
pub mod market_data;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synthetic;
pub mod training;
