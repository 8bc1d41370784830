//! Running per-class moments and the T-score / Fisher score criteria.
//!
//! Plain mode keeps exact running means and mean-of-squares per class; the
//! adaptive modes keep fading-factor decayed sums with per-class time anchors
//! so that sparse streams can catch up lazily instead of touching every
//! feature on every arrival.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ingestion mode for one feature's class statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatsMode {
    /// Dense stream, exact running moments.
    Plain,
    /// Only explicit (non-zero) entries arrive; the engine supplies full
    /// per-class sample counts at query time and moments are rescaled.
    Sparse,
    /// Dense stream with fading-factor decay.
    Adaptive,
    /// Explicit entries only, decay caught up through time anchors.
    SparseAdaptive,
}

impl StatsMode {
    pub fn is_adaptive(self) -> bool {
        matches!(self, StatsMode::Adaptive | StatsMode::SparseAdaptive)
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, StatsMode::Sparse | StatsMode::SparseAdaptive)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ClassAccum {
    /// Updates this accumulator has absorbed (explicit entries in sparse
    /// modes). Drives the query-time rescale in non-adaptive modes.
    count: f64,
    /// Plain modes: running mean over absorbed entries. Adaptive modes:
    /// decayed sum of entries.
    mean: f64,
    /// Same convention for the squared values.
    mean_sq: f64,
    /// Global sample index of the last update (adaptive catch-up anchor).
    last_seen: u64,
}

/// Per-feature, per-class running statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    mode: StatsMode,
    alpha: f64,
    per_class: Vec<ClassAccum>,
    samples_seen: u64,
}

/// One class's moments resolved to scoring time.
#[derive(Debug, Clone, Copy)]
pub struct ClassMoments {
    /// Effective sample count: plain count, or decayed class mass.
    pub weight: f64,
    pub mean: f64,
    /// Population variance (mean of squares minus squared mean).
    pub variance: f64,
}

impl ClassStats {
    pub fn new(mode: StatsMode, alpha: Option<f64>) -> Result<Self> {
        let alpha = match (mode.is_adaptive(), alpha) {
            (true, Some(a)) if a > 0.0 && a < 1.0 => a,
            (true, Some(a)) => {
                return Err(Error::Config(format!(
                    "fading factor must lie in (0, 1), got {a}"
                )))
            }
            (true, None) => {
                return Err(Error::Config(
                    "adaptive statistics require a fading factor".into(),
                ))
            }
            (false, _) => 1.0,
        };
        Ok(ClassStats {
            mode,
            alpha,
            per_class: Vec::new(),
            samples_seen: 0,
        })
    }

    pub fn mode(&self) -> StatsMode {
        self.mode
    }

    pub fn class_count(&self) -> usize {
        self.per_class.len()
    }

    /// Absorbs one entry for `class` arriving at global sample index `time`
    /// (1-based). In adaptive modes the accumulator first catches up the
    /// decay owed for the sample indices it skipped, then applies the decayed
    /// step; plain modes apply the running-mean recursion directly.
    pub fn update(&mut self, x: f64, class: usize, time: u64) {
        if class >= self.per_class.len() {
            self.per_class.resize_with(class + 1, ClassAccum::default);
        }
        let acc = &mut self.per_class[class];
        if self.mode.is_adaptive() {
            let gap = time.saturating_sub(acc.last_seen);
            let catch_up = powi_u64(self.alpha, gap);
            acc.mean = catch_up * acc.mean + x;
            acc.mean_sq = catch_up * acc.mean_sq + x * x;
            acc.count = catch_up * acc.count + 1.0;
            acc.last_seen = time;
        } else {
            acc.count += 1.0;
            acc.mean += (x - acc.mean) / acc.count;
            acc.mean_sq += (x * x - acc.mean_sq) / acc.count;
        }
        self.samples_seen = self.samples_seen.max(time);
    }

    /// Resolves per-class moments at sample index `now`. `class_totals`
    /// supplies the effective per-class sample counts the engine tracks:
    /// full counts (including unseen zeros) in plain/sparse modes, decayed
    /// class masses in adaptive modes.
    pub fn moments(&self, class_totals: &[f64], now: u64) -> Vec<ClassMoments> {
        (0..class_totals.len())
            .map(|c| {
                let total = class_totals[c];
                let acc = self.per_class.get(c);
                if total <= 0.0 {
                    return ClassMoments {
                        weight: 0.0,
                        mean: 0.0,
                        variance: 0.0,
                    };
                }
                let (mean, mean_sq) = match acc {
                    None => (0.0, 0.0),
                    Some(acc) if self.mode.is_adaptive() => {
                        let catch_up = powi_u64(self.alpha, now.saturating_sub(acc.last_seen));
                        (catch_up * acc.mean / total, catch_up * acc.mean_sq / total)
                    }
                    Some(acc) => {
                        // Division by the full class count folds unseen zeros
                        // into the mean; with dense input count == total and
                        // the factor is exactly 1.
                        let scale = acc.count / total;
                        (acc.mean * scale, acc.mean_sq * scale)
                    }
                };
                ClassMoments {
                    weight: total,
                    mean,
                    variance: mean_sq - mean * mean,
                }
            })
            .collect()
    }
}

/// Two-class T statistic: |mu1 - mu2| / sqrt(var1/n1 + var2/n2).
///
/// A zero denominator with distinct means scores positive infinity (a
/// perfectly separating feature ranks first); zero over zero scores 0.
pub fn t_score(c1: &ClassMoments, c2: &ClassMoments) -> f64 {
    let diff = (c1.mean - c2.mean).abs();
    let mut denom_sq = 0.0;
    if c1.weight > 0.0 {
        denom_sq += c1.variance.max(0.0) / c1.weight;
    }
    if c2.weight > 0.0 {
        denom_sq += c2.variance.max(0.0) / c2.weight;
    }
    if denom_sq <= 0.0 {
        return if diff > 0.0 { f64::INFINITY } else { 0.0 };
    }
    diff / denom_sq.sqrt()
}

/// Fisher score over C >= 2 classes: between-class scatter over the
/// count-weighted within-class variance.
pub fn fisher_score(moments: &[ClassMoments]) -> Result<f64> {
    if moments.len() < 2 {
        return Err(Error::Degenerate(
            "Fisher score needs at least two classes".into(),
        ));
    }
    let total: f64 = moments.iter().map(|m| m.weight).sum();
    if total <= 0.0 {
        return Err(Error::NoSamples);
    }
    let overall = moments.iter().map(|m| m.weight * m.mean).sum::<f64>() / total;
    let numerator: f64 = moments
        .iter()
        .map(|m| m.weight * (m.mean - overall) * (m.mean - overall))
        .sum();
    let denominator: f64 = moments.iter().map(|m| m.weight * m.variance.max(0.0)).sum();
    if denominator <= 0.0 {
        return Ok(if numerator > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(numerator / denominator)
}

fn powi_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}
