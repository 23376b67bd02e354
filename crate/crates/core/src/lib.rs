//! Moment-free Sharpe ratio estimation from record statistics.
//!
//! The cumulated path of a return series spends `t_minus` steps in drawdown
//! and `t_plus` steps in drawup; equivalently it sets `r_plus` upper and
//! `r_minus` lower records. Averaging `R_plus - R_minus` over random
//! permutations of the returns gives a bounded, outlier-robust statistic
//! `R0` whose expectation is a monotone function of the Sharpe ratio
//! `theta = c / sigma`. This crate measures that function by Monte Carlo
//! over series length, Sharpe ratio and Student tail index, inverts it into
//! an estimator, and ships analytic validators plus a market-analysis layer
//! (rolling estimation, ranking comparison, a naive threshold backtest).

pub mod analytic;
pub mod calibration;
pub mod error;
pub mod estimator;
pub mod interp;
pub mod isotonic;
pub mod market;
pub mod powser;
pub mod rank;
pub mod records;
pub mod seed;
pub mod series;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use records::{count_records, exhaustive_r0, r0_statistic, RecordSummary};
pub use series::{PricePath, ReturnSeries};
pub use synthetic::{generate_series, IncrementFamily, IncrementSpec};
