//! Return series and cumulated price paths.

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// An ordered sequence of per-period returns, the universal input of the
/// estimators. Values must be finite; emptiness is rejected at construction
/// so downstream code never revalidates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    timestamps: Option<Vec<NaiveDate>>,
    symbol: Option<String>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "return series must contain at least one value",
            ));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "return series contains a non-finite value at index {bad}"
            )));
        }
        Ok(ReturnSeries {
            values,
            timestamps: None,
            symbol: None,
        })
    }

    pub fn with_symbol(mut self, symbol: impl Into<String>) -> Self {
        self.symbol = Some(symbol.into());
        self
    }

    pub fn with_timestamps(mut self, timestamps: Vec<NaiveDate>) -> Result<Self> {
        if timestamps.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "timestamp count {} does not match value count {}",
                timestamps.len(),
                self.values.len()
            )));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // guaranteed non-empty at construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[NaiveDate]> {
        self.timestamps.as_deref()
    }

    pub fn symbol(&self) -> Option<&str> {
        self.symbol.as_deref()
    }

    /// Series with every return negated (metadata preserved).
    pub fn negated(&self) -> Self {
        ReturnSeries {
            values: self.values.iter().map(|v| -v).collect(),
            timestamps: self.timestamps.clone(),
            symbol: self.symbol.clone(),
        }
    }

    /// Series with every return multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid("scale factor must be positive and finite"));
        }
        Ok(ReturnSeries {
            values: self.values.iter().map(|v| v * factor).collect(),
            timestamps: self.timestamps.clone(),
            symbol: self.symbol.clone(),
        })
    }
}

/// Cumulated levels `S_0..S_n` of a return series, with `S_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    levels: Vec<f64>,
}

impl PricePath {
    /// Cumulate a return series into a path anchored at zero.
    pub fn from_returns(series: &ReturnSeries) -> Self {
        let mut levels = Vec::with_capacity(series.len() + 1);
        let mut s = 0.0;
        levels.push(s);
        for r in series.values() {
            s += r;
            levels.push(s);
        }
        PricePath { levels }
    }

    /// Adopt explicit levels. The first level must be exactly zero and the
    /// path must contain at least one step.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::invalid("price path needs at least one step"));
        }
        if levels[0] != 0.0 {
            return Err(Error::invalid("price path must start at zero"));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("price path contains a non-finite level"));
        }
        Ok(PricePath { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of steps (returns), one less than the number of levels.
    pub fn num_steps(&self) -> usize {
        self.levels.len() - 1
    }
}
