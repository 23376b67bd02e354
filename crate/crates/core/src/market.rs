//! Market data layer: CSV ingestion into a validated panel, liquidity
//! filtering, rolling-window estimation with both estimators, ranking
//! divergence metrics between them, and a naive threshold trading backtest.
//!
//! Estimators consume log close-to-close returns (record statistics live on
//! cumulated sums); strategy profit and loss uses simple returns.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;

use crate::calibration::CalibrationTable;
use crate::error::{Error, Result};
use crate::estimator::{
    effectively_constant, estimate_sharpe, fit_student_nu, vanilla_sharpe, Diagnostic,
    EstimateOptions, NuEstimate,
};
use crate::rank::{blest_symmetric, kendall_tau, spearman};
use crate::seed::{derive_seed, label_index, StreamPurpose};
use crate::series::ReturnSeries;
use crate::stats::sample_variance;

/// One observation of one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub date: NaiveDate,
    pub close: f64,
    pub volume: f64,
}

/// Close/volume panel keyed by symbol, dates strictly increasing per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel {
    symbols: Vec<String>,
    data: Vec<Vec<Bar>>,
}

/// A rejected input row with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

/// Ingestion result: the validated panel plus the per-line reject report.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub panel: MarketPanel,
    pub rejected: Vec<RejectedRow>,
}

/// Fraction of unparsable rows tolerated before ingestion aborts.
pub const DEFAULT_MAX_REJECT_FRACTION: f64 = 0.05;

impl MarketPanel {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn bars(&self, symbol_idx: usize) -> &[Bar] {
        &self.data[symbol_idx]
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    /// Log close-to-close returns of one symbol, one per consecutive pair of
    /// observations; entry `k` spans `dates[k] -> dates[k+1]`.
    pub fn log_returns(&self, symbol_idx: usize) -> Vec<f64> {
        self.data[symbol_idx]
            .windows(2)
            .map(|w| (w[1].close / w[0].close).ln())
            .collect()
    }

    /// Simple close-to-close returns, aligned like [`MarketPanel::log_returns`].
    pub fn simple_returns(&self, symbol_idx: usize) -> Vec<f64> {
        self.data[symbol_idx]
            .windows(2)
            .map(|w| w[1].close / w[0].close - 1.0)
            .collect()
    }

    /// All distinct dates in the panel, ascending.
    pub fn calendar(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self
            .data
            .iter()
            .flat_map(|bars| bars.iter().map(|b| b.date))
            .collect();
        dates.sort_unstable();
        dates.dedup();
        dates
    }

    /// Panel restricted to observations dated at or before `cutoff`.
    /// Symbols left without observations are dropped.
    pub fn truncated_at(&self, cutoff: NaiveDate) -> MarketPanel {
        let mut symbols = Vec::new();
        let mut data = Vec::new();
        for (symbol, bars) in self.symbols.iter().zip(&self.data) {
            let kept: Vec<Bar> = bars.iter().filter(|b| b.date <= cutoff).cloned().collect();
            if !kept.is_empty() {
                symbols.push(symbol.clone());
                data.push(kept);
            }
        }
        MarketPanel { symbols, data }
    }

    /// Assemble a panel from per-symbol bar lists (test and synthetic use).
    pub fn from_parts(parts: Vec<(String, Vec<Bar>)>) -> Result<MarketPanel> {
        let mut parts = parts;
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        let mut symbols = Vec::new();
        let mut data = Vec::new();
        for (symbol, bars) in parts {
            if symbols.contains(&symbol) {
                return Err(Error::market(format!("duplicate symbol {symbol}")));
            }
            if bars.is_empty() {
                return Err(Error::market(format!(
                    "symbol {symbol} has no observations"
                )));
            }
            for w in bars.windows(2) {
                if w[1].date <= w[0].date {
                    return Err(Error::market(format!(
                        "symbol {symbol}: dates not strictly increasing at {}",
                        w[1].date
                    )));
                }
            }
            if bars.iter().any(|b| !(b.close > 0.0) || b.volume < 0.0) {
                return Err(Error::market(format!(
                    "symbol {symbol}: non-positive price"
                )));
            }
            symbols.push(symbol);
            data.push(bars);
        }
        Ok(MarketPanel { symbols, data })
    }
}

/// Parse a `date,symbol,close,volume` CSV (ISO dates) into a panel.
///
/// Rows with missing fields, unparsable values, or non-positive prices are
/// rejected with their line numbers; more than `max_reject_fraction` of
/// rejects aborts. Out-of-order or duplicate `(date, symbol)` keys are hard
/// errors naming the symbol.
pub fn ingest_csv_reader<R: Read>(reader: R, max_reject_fraction: f64) -> Result<IngestOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::market(e.to_string()))?;
        let expected = ["date", "symbol", "close", "volume"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::market(format!(
                "expected header date,symbol,close,volume; got {}",
                got.join(",")
            )));
        }
    }

    let mut per_symbol: BTreeMap<String, Vec<Bar>> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut total_rows = 0usize;
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::market(e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        total_rows += 1;
        let reject = |reason: String, rejected: &mut Vec<RejectedRow>| {
            rejected.push(RejectedRow { line, reason });
        };
        if record.len() != 4 {
            reject(
                format!("expected 4 fields, got {}", record.len()),
                &mut rejected,
            );
            continue;
        }
        let date = match NaiveDate::parse_from_str(&record[0], "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                reject(format!("bad date {:?}", &record[0]), &mut rejected);
                continue;
            }
        };
        let symbol = record[1].trim();
        if symbol.is_empty() {
            reject("empty symbol".to_string(), &mut rejected);
            continue;
        }
        let close: f64 = match record[2].parse() {
            Ok(v) => v,
            Err(_) => {
                reject(format!("bad close {:?}", &record[2]), &mut rejected);
                continue;
            }
        };
        let volume: f64 = match record[3].parse() {
            Ok(v) => v,
            Err(_) => {
                reject(format!("bad volume {:?}", &record[3]), &mut rejected);
                continue;
            }
        };
        if !(close > 0.0) || !close.is_finite() {
            reject(format!("non-positive price {close}"), &mut rejected);
            continue;
        }
        if !(volume >= 0.0) || !volume.is_finite() {
            reject(format!("negative volume {volume}"), &mut rejected);
            continue;
        }

        let bars = per_symbol.entry(symbol.to_string()).or_default();
        if let Some(last) = bars.last() {
            if date == last.date {
                return Err(Error::market(format!(
                    "duplicate (date, symbol) key ({date}, {symbol}) at line {line}"
                )));
            }
            if date < last.date {
                return Err(Error::market(format!(
                    "out-of-order dates for symbol {symbol} at line {line}"
                )));
            }
        }
        bars.push(Bar {
            date,
            close,
            volume,
        });
    }

    if total_rows == 0 {
        return Err(Error::market("no data rows in csv"));
    }
    if (rejected.len() as f64) > max_reject_fraction * total_rows as f64 {
        return Err(Error::market(format!(
            "{} of {} rows rejected, above the {:.1}% tolerance; first: line {} ({})",
            rejected.len(),
            total_rows,
            max_reject_fraction * 100.0,
            rejected.first().map(|r| r.line).unwrap_or(0),
            rejected.first().map(|r| r.reason.as_str()).unwrap_or("")
        )));
    }
    let panel = MarketPanel::from_parts(per_symbol.into_iter().collect())?;
    Ok(IngestOutcome { panel, rejected })
}

/// [`ingest_csv_reader`] on a file path with the default reject tolerance.
pub fn ingest_csv(path: &Path) -> Result<IngestOutcome> {
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(std::io::BufReader::new(file), DEFAULT_MAX_REJECT_FRACTION)
}

/// Liquidity thresholds: price floor and rolling-median volume floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidityParams {
    pub min_price: f64,
    pub min_median_volume: f64,
    pub volume_window: usize,
}

impl Default for LiquidityParams {
    fn default() -> Self {
        LiquidityParams {
            min_price: 20.0,
            min_median_volume: 250_000.0,
            volume_window: 60,
        }
    }
}

/// Per-(symbol, observation) eligibility mask, parallel to the panel.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidityMask {
    eligible: Vec<Vec<bool>>,
}

impl LiquidityMask {
    pub fn is_eligible(&self, symbol_idx: usize, bar_idx: usize) -> bool {
        self.eligible[symbol_idx][bar_idx]
    }

    /// Symbols eligible on a given date.
    pub fn eligible_on(&self, panel: &MarketPanel, date: NaiveDate) -> Vec<usize> {
        (0..panel.num_symbols())
            .filter(|&s| {
                panel
                    .bars(s)
                    .binary_search_by_key(&date, |b| b.date)
                    .map(|i| self.eligible[s][i])
                    .unwrap_or(false)
            })
            .collect()
    }
}

/// A symbol is eligible on an observation date when its close is strictly
/// above the price floor and the median volume over the trailing
/// `volume_window` observations (through that date) is strictly above the
/// volume floor. Histories shorter than the window are ineligible, not an
/// error.
pub fn liquidity_filter(panel: &MarketPanel, params: &LiquidityParams) -> LiquidityMask {
    let window = params.volume_window.max(1);
    let eligible = (0..panel.num_symbols())
        .map(|s| {
            let bars = panel.bars(s);
            let mut flags = vec![false; bars.len()];
            let mut sorted: Vec<f64> = Vec::with_capacity(window);
            for (i, bar) in bars.iter().enumerate() {
                let pos = sorted.partition_point(|v| *v < bar.volume);
                sorted.insert(pos, bar.volume);
                if sorted.len() > window {
                    let old = bars[i - window].volume;
                    let at = sorted.partition_point(|v| *v < old);
                    sorted.remove(at);
                }
                if sorted.len() == window && bar.close > params.min_price {
                    let median = if window % 2 == 1 {
                        sorted[window / 2]
                    } else {
                        0.5 * (sorted[window / 2 - 1] + sorted[window / 2])
                    };
                    flags[i] = median > params.min_median_volume;
                }
            }
            flags
        })
        .collect();
    LiquidityMask { eligible }
}

/// One rolling estimate of one symbol at one window end.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub symbol_idx: usize,
    pub date: NaiveDate,
    pub n: usize,
    pub r0: f64,
    /// None when the window variance was zero and no tail fit was possible.
    pub nu: Option<NuEstimate>,
    pub theta_record: f64,
    pub theta_record_annualized: f64,
    /// None on degenerate (zero-variance) windows.
    pub theta_vanilla: Option<f64>,
    pub theta_vanilla_annualized: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Rolling-window estimation options.
#[derive(Debug, Clone)]
pub struct RollingOptions {
    pub window: usize,
    pub estimate: EstimateOptions,
    /// Periods per year behind the annualized columns.
    pub periods_per_year: f64,
    /// Restrict estimates to (symbol, date) pairs the mask marks eligible.
    pub liquidity: Option<LiquidityMask>,
}

impl RollingOptions {
    pub fn new(window: usize, estimate: EstimateOptions) -> Self {
        RollingOptions {
            window,
            estimate,
            periods_per_year: 252.0,
            liquidity: None,
        }
    }
}

/// Rolling estimates over the panel, sorted by (date, symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct RollingEstimates {
    pub rows: Vec<EstimateRow>,
    pub window: usize,
}

/// Slide a window of `window` log returns one observation at a time over
/// every symbol and estimate both ways at each end date.
///
/// Each window gets a seed derived from (master, symbol label, end date), so
/// estimates do not depend on how much later history exists, and a
/// degenerate window reports `r0 = +/- n` with no vanilla value instead of
/// failing the sweep.
pub fn rolling_estimates(
    panel: &MarketPanel,
    table: &CalibrationTable,
    options: &RollingOptions,
) -> Result<RollingEstimates> {
    if options.window < crate::estimator::MIN_ESTIMATION_LENGTH {
        return Err(Error::invalid(format!(
            "rolling window must be at least {}",
            crate::estimator::MIN_ESTIMATION_LENGTH
        )));
    }
    let window = options.window;
    let mut rows: Vec<EstimateRow> = (0..panel.num_symbols())
        .into_par_iter()
        .map(|symbol_idx| -> Result<Vec<EstimateRow>> {
            let bars = panel.bars(symbol_idx);
            let log_returns = panel.log_returns(symbol_idx);
            let simple_symbol_seed = derive_seed(
                options.estimate.seed,
                StreamPurpose::Symbol,
                label_index(&panel.symbols()[symbol_idx]),
            );
            let mut out = Vec::new();
            if log_returns.len() < window {
                return Ok(out);
            }
            for end in window..=log_returns.len() {
                let end_bar = &bars[end]; // return k spans bars k -> k+1
                if let Some(mask) = &options.liquidity {
                    if !mask.is_eligible(symbol_idx, end) {
                        continue;
                    }
                }
                let date = end_bar.date;
                let window_seed = derive_seed(
                    simple_symbol_seed,
                    StreamPurpose::Window,
                    date.num_days_from_ce() as u64,
                );
                let slice = &log_returns[end - window..end];
                let series = ReturnSeries::new(slice.to_vec())?;
                let mut est_options = options.estimate.clone();
                est_options.seed = window_seed;
                est_options.periods_per_year = None;

                let degenerate = effectively_constant(slice);
                let estimate = estimate_sharpe(&series, table, &est_options)?;
                let vanilla = if degenerate {
                    None
                } else {
                    Some(vanilla_sharpe(&series)?)
                };
                let factor = options.periods_per_year.sqrt();
                out.push(EstimateRow {
                    symbol_idx,
                    date,
                    n: window,
                    r0: estimate.r0,
                    nu: if degenerate { None } else { Some(estimate.nu) },
                    theta_record: estimate.theta,
                    theta_record_annualized: estimate.theta * factor,
                    theta_vanilla: vanilla,
                    theta_vanilla_annualized: vanilla.map(|v| v * factor),
                    diagnostics: estimate.diagnostics,
                })
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| (a.date, a.symbol_idx).cmp(&(b.date, b.symbol_idx)));
    Ok(RollingEstimates { rows, window })
}

/// Ranking agreement between the two estimators on one window end.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub date: NaiveDate,
    pub num_assets: usize,
    /// Fraction of common symbols between the two top-quantile sets.
    pub top_overlap: f64,
    /// Same for the bottom quantile.
    pub bottom_overlap: f64,
    /// Rank correlations over assets with positive record-method estimates.
    pub spearman_positive: Option<f64>,
    pub kendall_positive: Option<f64>,
    /// Rank correlations over assets with negative record-method estimates.
    pub spearman_negative: Option<f64>,
    pub kendall_negative: Option<f64>,
    /// Symmetrized top-weighted rank correlation over all assets.
    pub blest: Option<f64>,
    /// Cross-sectional moments of the fitted Student tail indices
    /// (Gaussian-clamped fits excluded).
    pub nu_mean: Option<f64>,
    pub nu_sd: Option<f64>,
}

/// Per-date ranking divergence between the record-method and vanilla
/// estimates. Dates with fewer assets than one quantile seat are skipped.
pub fn ranking_divergence(
    estimates: &RollingEstimates,
    quantile: f64,
) -> Result<Vec<RankingReport>> {
    if !(0.0 < quantile && quantile < 0.5) {
        return Err(Error::invalid("quantile must lie in (0, 0.5)"));
    }
    let mut by_date: BTreeMap<NaiveDate, Vec<&EstimateRow>> = BTreeMap::new();
    for row in &estimates.rows {
        if row.theta_vanilla.is_some() {
            by_date.entry(row.date).or_default().push(row);
        }
    }

    let mut reports = Vec::new();
    for (date, rows) in by_date {
        let m = rows.len();
        let seats = (quantile * m as f64).floor() as usize;
        if seats < 1 {
            continue;
        }
        let record: Vec<f64> = rows.iter().map(|r| r.theta_record).collect();
        let vanilla: Vec<f64> = rows.iter().map(|r| r.theta_vanilla.unwrap()).collect();

        let top_overlap = quantile_overlap(&record, &vanilla, seats, true);
        let bottom_overlap = quantile_overlap(&record, &vanilla, seats, false);

        let positive: Vec<usize> = (0..m).filter(|&i| record[i] > 0.0).collect();
        let negative: Vec<usize> = (0..m).filter(|&i| record[i] < 0.0).collect();
        let corr_pair = |idx: &[usize]| -> (Option<f64>, Option<f64>) {
            if idx.len() < 3 {
                return (None, None);
            }
            let a: Vec<f64> = idx.iter().map(|&i| record[i]).collect();
            let b: Vec<f64> = idx.iter().map(|&i| vanilla[i]).collect();
            (spearman(&a, &b).ok(), kendall_tau(&a, &b).ok())
        };
        let (spearman_positive, kendall_positive) = corr_pair(&positive);
        let (spearman_negative, kendall_negative) = corr_pair(&negative);
        let blest = if m >= 2 {
            blest_symmetric(&record, &vanilla).ok()
        } else {
            None
        };

        let nus: Vec<f64> = rows
            .iter()
            .filter_map(|r| match r.nu {
                Some(NuEstimate::Student(v)) => Some(v),
                _ => None,
            })
            .collect();
        let (nu_mean, nu_sd) = if nus.len() >= 2 {
            (
                Some(crate::stats::mean(&nus)),
                Some(sample_variance(&nus).sqrt()),
            )
        } else {
            (None, None)
        };

        reports.push(RankingReport {
            date,
            num_assets: m,
            top_overlap,
            bottom_overlap,
            spearman_positive,
            kendall_positive,
            spearman_negative,
            kendall_negative,
            blest,
            nu_mean,
            nu_sd,
        });
    }
    Ok(reports)
}

/// Overlap fraction of the `seats`-element extreme sets of two score
/// vectors; ties broken by index order (symbol order) for determinism.
fn quantile_overlap(a: &[f64], b: &[f64], seats: usize, top: bool) -> f64 {
    let pick = |scores: &[f64]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&i, &j| {
            let ord = scores[i].partial_cmp(&scores[j]).expect("finite scores");
            let ord = if top { ord.reverse() } else { ord };
            ord.then(i.cmp(&j))
        });
        idx.truncate(seats);
        idx
    };
    let sa: std::collections::BTreeSet<usize> = pick(a).into_iter().collect();
    let sb: std::collections::BTreeSet<usize> = pick(b).into_iter().collect();
    sa.intersection(&sb).count() as f64 / seats as f64
}

/// Which estimate stream drives a backtest variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BacktestMethod {
    Record,
    Vanilla,
}

impl BacktestMethod {
    pub fn label(&self) -> &'static str {
        match self {
            BacktestMethod::Record => "record",
            BacktestMethod::Vanilla => "vanilla",
        }
    }
}

/// One day of the aggregate strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestDay {
    pub date: NaiveDate,
    /// Equal-weight mean of the active positions' simple returns (0 when
    /// flat).
    pub aggregate_return: f64,
    /// Cumulative sum of `ln(1 + aggregate_return)`.
    pub log_wealth: f64,
    pub positions: usize,
}

/// Backtest output for one estimate stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub method: BacktestMethod,
    pub threshold: f64,
    pub days: Vec<BacktestDay>,
}

impl BacktestResult {
    pub fn final_log_wealth(&self) -> f64 {
        self.days.last().map(|d| d.log_wealth).unwrap_or(0.0)
    }
}

/// Naive threshold strategy: when the absolute annualized estimate at the
/// end of a window exceeds `threshold`, hold `sign(estimate)` of the symbol
/// for its next observed return (one-observation lag); aggregate active
/// positions equal-weight each day and compound.
pub fn threshold_backtest(
    panel: &MarketPanel,
    estimates: &RollingEstimates,
    method: BacktestMethod,
    threshold: f64,
) -> Result<BacktestResult> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::invalid("threshold must be non-negative and finite"));
    }
    // (date, symbol) -> signed position applied to the NEXT return of that
    // symbol after the estimate date.
    let mut contributions: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for row in &estimates.rows {
        let annualized = match method {
            BacktestMethod::Record => Some(row.theta_record_annualized),
            BacktestMethod::Vanilla => row.theta_vanilla_annualized,
        };
        let Some(est) = annualized else { continue };
        if est.abs() <= threshold {
            continue;
        }
        let bars = panel.bars(row.symbol_idx);
        let pos = bars.partition_point(|b| b.date <= row.date);
        if pos >= bars.len() {
            continue; // estimate on the last observation: nothing to hold
        }
        let simple_return = bars[pos].close / bars[pos - 1].close - 1.0;
        contributions
            .entry(bars[pos].date)
            .or_default()
            .push(est.signum() * simple_return);
    }

    // Calendar starts after the warm-up: the first date an estimate could
    // act on is the first date following the earliest estimate.
    let first_estimate = estimates.rows.first().map(|r| r.date);
    let mut days = Vec::new();
    let mut log_wealth = 0.0;
    for date in panel.calendar() {
        match first_estimate {
            Some(start) if date > start => {}
            _ => continue,
        }
        let (aggregate, count) = match contributions.get(&date) {
            Some(list) => (list.iter().sum::<f64>() / list.len() as f64, list.len()),
            None => (0.0, 0),
        };
        log_wealth += (1.0 + aggregate).ln();
        days.push(BacktestDay {
            date,
            aggregate_return: aggregate,
            log_wealth,
            positions: count,
        });
    }
    Ok(BacktestResult {
        method,
        threshold,
        days,
    })
}

/// Synthetic market panel: one geometric price path per spec, constant
/// volume, weekday-agnostic consecutive dates. Prices start at `base_price`
/// and compound the generated log returns.
pub fn synthetic_panel(
    specs: &[(String, crate::synthetic::IncrementSpec)],
    num_days: usize,
    base_price: f64,
    volume: f64,
    start: NaiveDate,
    master_seed: u64,
) -> Result<MarketPanel> {
    if num_days < 2 {
        return Err(Error::invalid("synthetic panel needs at least 2 days"));
    }
    let mut parts = Vec::with_capacity(specs.len());
    for (symbol, spec) in specs {
        let seed = derive_seed(master_seed, StreamPurpose::Panel, label_index(symbol));
        let series = crate::synthetic::generate_series(spec, num_days - 1, seed)?;
        let mut bars = Vec::with_capacity(num_days);
        let mut log_price = 0.0;
        bars.push(Bar {
            date: start,
            close: base_price,
            volume,
        });
        for (k, r) in series.values().iter().enumerate() {
            log_price += r;
            bars.push(Bar {
                date: start + chrono::Days::new(k as u64 + 1),
                close: base_price * log_price.exp(),
                volume,
            });
        }
        parts.push((symbol.clone(), bars));
    }
    MarketPanel::from_parts(parts)
}

/// Re-fit the cross-sectional tail index of one window of a symbol; used by
/// reports that need `nu` without a full estimate.
pub fn window_nu(
    panel: &MarketPanel,
    symbol_idx: usize,
    end: usize,
    window: usize,
) -> Option<NuEstimate> {
    let log_returns = panel.log_returns(symbol_idx);
    if end < window || end > log_returns.len() {
        return None;
    }
    let series = ReturnSeries::new(log_returns[end - window..end].to_vec()).ok()?;
    fit_student_nu(&series).ok().map(|f| f.nu)
}
