//! From transaction logs to fitted strategies and back.
//!
//! The estimation route runs: parse `(log_price, side)` records, take the
//! sample mean and unbiased variance, and fit the minimal-information pure
//! strategy matching them (`mu = (n + 1/2) / risk`). The reverse direction
//! draws synthetic transactions from a strategy by seeded inverse-CDF
//! sampling, which closes the loop for the Cramer-Rao Monte Carlo: the
//! variance of the sample-mean estimator across many seeded trials must
//! stay above `1 / (samples * I_F)`.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fisher::fisher_information_grid;
use crate::grid::GridSpec;
use crate::strategy::Strategy;

/// Which side of the book a transaction hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransactionRecord {
    pub log_price: f64,
    pub side: Side,
}

/// A batch of transactions plus a provenance note (file origin or the
/// generator that produced them).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransactionSample {
    records: Vec<TransactionRecord>,
    source: String,
}

impl TransactionSample {
    pub fn new(records: Vec<TransactionRecord>, source: impl Into<String>) -> Self {
        TransactionSample {
            records,
            source: source.into(),
        }
    }

    pub fn records(&self) -> &[TransactionRecord] {
        &self.records
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn log_prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.log_price)
    }
}

/// Sample mean and unbiased variance of the log-prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Unbiased sample variance (the risk estimate).
    pub risk: f64,
    pub n: usize,
    /// Standard error of the mean, `sqrt(risk / n)`.
    pub se_mean: f64,
}

/// Parses `log_price,side` CSV. Malformed rows are collected and reported
/// together (1-based data row indices), never silently dropped.
pub fn parse_transactions(input: impl Read) -> Result<TransactionSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| CoreError::InvalidParameter(format!("unreadable CSV header: {e}")))?;
    if headers.len() != 2 || &headers[0] != "log_price" || &headers[1] != "side" {
        return Err(CoreError::InvalidParameter(format!(
            "expected header 'log_price,side', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    let mut malformed: Vec<(usize, String)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let index = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                malformed.push((index, format!("unreadable row: {e}")));
                continue;
            }
        };
        if row.len() != 2 {
            malformed.push((index, format!("expected 2 fields, got {}", row.len())));
            continue;
        }
        let log_price = match row[0].parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                malformed.push((index, format!("log_price {v} is not finite")));
                continue;
            }
            Err(_) => {
                malformed.push((index, format!("log_price '{}' is not a number", &row[0])));
                continue;
            }
        };
        let side = if row[1].eq_ignore_ascii_case("buy") {
            Side::Buy
        } else if row[1].eq_ignore_ascii_case("sell") {
            Side::Sell
        } else {
            malformed.push((index, format!("side must be buy or sell, got '{}'", &row[1])));
            continue;
        };
        records.push(TransactionRecord { log_price, side });
    }

    if !malformed.is_empty() {
        return Err(CoreError::MalformedRows(malformed));
    }
    if records.is_empty() {
        return Err(CoreError::EmptyInput(
            "no data rows after the header".into(),
        ));
    }
    Ok(TransactionSample::new(records, "csv"))
}

/// Mean and unbiased variance; needs at least two records.
pub fn estimate_moments(sample: &TransactionSample) -> Result<MomentEstimate> {
    let n = sample.len();
    if n < 2 {
        return Err(CoreError::TooFewRecords(format!(
            "variance needs at least 2 records, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = sample.log_prices().sum::<f64>() / nf;
    let risk = sample
        .log_prices()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (nf - 1.0);
    Ok(MomentEstimate {
        mean,
        risk,
        n,
        se_mean: (risk / nf).sqrt(),
    })
}

/// The pure strategy at level `n` whose analytic moments reproduce
/// `(m_hat, r_hat)`: center `m_hat`, scale `mu = (n + 1/2) / r_hat`.
pub fn fit_minimal_strategy(m_hat: f64, r_hat: f64, n: usize) -> Result<Strategy> {
    if !r_hat.is_finite() || r_hat <= 0.0 {
        return Err(CoreError::DegenerateRisk(format!(
            "risk estimate {r_hat} admits no strategy"
        )));
    }
    Strategy::pure(n, (n as f64 + 0.5) / r_hat, m_hat)
}

/// Precomputed inverse of a strategy's cumulative price distribution,
/// piecewise linear on the default grid.
struct InverseCdf {
    spec: GridSpec,
    cum: Vec<f64>,
}

impl InverseCdf {
    fn new(s: &Strategy) -> Result<Self> {
        let spec = s.default_grid();
        let pdf = s.pdf(spec)?;
        let h = spec.h();
        let mut cum = Vec::with_capacity(spec.points);
        cum.push(0.0);
        let mut acc = 0.0;
        for pair in pdf.values().windows(2) {
            acc += 0.5 * h * (pair[0] + pair[1]);
            cum.push(acc);
        }
        let total = *cum.last().expect("grid has points");
        for c in cum.iter_mut() {
            *c /= total;
        }
        Ok(InverseCdf { spec, cum })
    }

    fn draw(&self, u: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c <= u).clamp(1, self.cum.len() - 1);
        let (c0, c1) = (self.cum[i - 1], self.cum[i]);
        let x0 = self.spec.x(i - 1);
        if c1 - c0 <= f64::EPSILON {
            x0
        } else {
            x0 + (u - c0) / (c1 - c0) * self.spec.h()
        }
    }
}

/// Draws `count` transactions by inverse-CDF sampling; deterministic for a
/// fixed seed, sides alternating buy/sell. The generator and seed are
/// recorded in the sample's provenance.
pub fn sample_strategy(s: &Strategy, count: usize, seed: u64) -> Result<TransactionSample> {
    if count == 0 {
        return Err(CoreError::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let inverse = InverseCdf::new(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..count)
        .map(|i| TransactionRecord {
            log_price: inverse.draw(rng.gen::<f64>()),
            side: if i % 2 == 0 { Side::Buy } else { Side::Sell },
        })
        .collect();
    Ok(TransactionSample::new(
        records,
        format!("inverse-cdf chacha8 seed={seed} grid={}", inverse.spec.points),
    ))
}

/// Outcome of a Cramer-Rao Monte Carlo run; serializes to the report JSON
/// `{"bound", "empirical", "ratio", "trials", "seed"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CramerRaoReport {
    /// `1 / (n_per_trial * I_F)`.
    pub bound: f64,
    /// Variance of the per-trial sample means.
    pub empirical: f64,
    pub ratio: f64,
    pub trials: usize,
    pub seed: u64,
}

impl CramerRaoReport {
    /// The bound holds up to the sampling noise of the variance estimate.
    pub fn satisfied(&self) -> bool {
        self.ratio >= 1.0 - 3.0 / (self.trials as f64).sqrt()
    }
}

/// Estimates the location of `s` by the sample mean over `n_per_trial`
/// draws, repeated across seeded trials (trial t uses seed + t, so trials
/// are order-independent), and compares the estimator's variance to the
/// information bound.
pub fn cramer_rao_monte_carlo(
    s: &Strategy,
    n_per_trial: usize,
    trials: usize,
    seed: u64,
) -> Result<CramerRaoReport> {
    if n_per_trial == 0 {
        return Err(CoreError::InvalidParameter(
            "need at least one sample per trial".into(),
        ));
    }
    if trials < 100 {
        return Err(CoreError::TooFewTrials(format!(
            "variance of the estimator needs at least 100 trials, got {trials}"
        )));
    }
    let fisher = fisher_information_grid(&s.pdf(s.default_grid())?)?.value;
    let bound = 1.0 / (n_per_trial as f64 * fisher);

    let inverse = InverseCdf::new(s)?;
    let means: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let sum: f64 = (0..n_per_trial).map(|_| inverse.draw(rng.gen::<f64>())).sum();
            sum / n_per_trial as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / trials as f64;
    let empirical = means
        .iter()
        .map(|m| (m - grand) * (m - grand))
        .sum::<f64>()
        / (trials - 1) as f64;

    Ok(CramerRaoReport {
        bound,
        empirical,
        ratio: empirical / bound,
        trials,
        seed,
    })
}
