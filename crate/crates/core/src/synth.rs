//! Synthetic concept-drift streams and the detection-rate benchmark grid.
//!
//! Samples follow a linear model whose active coefficient window slides over
//! the feature space every `shift_interval` observations; labels are the
//! sign of the noisy linear response around the intercept. Screeners are
//! scored by how many currently-active features they recover in their top-k
//! selection.

use std::io::{self, Write};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bincount::Method;
use crate::engine::{rank, select_top_k, Engine, Sample, ScreenerConfig};
use crate::error::{Error, Result};
use crate::par;

/// Generator parameters for one drifting stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftStreamSpec {
    /// Feature count.
    pub p: usize,
    /// Number of simultaneously active (non-zero) coefficients.
    pub k_true: usize,
    /// Non-zero coefficient value.
    pub signal: f64,
    /// Observations between coefficient-window shifts.
    pub shift_interval: u64,
    /// Cross-feature correlation parameter; pairwise correlation is
    /// nu / (1 + nu).
    pub nu: f64,
    pub n_samples: u64,
    pub intercept: f64,
    pub seed: u64,
}

impl DriftStreamSpec {
    /// Desk-scale defaults: one fifth of the full-scale study in every
    /// dimension, keeping the k/p and selection ratios intact.
    pub fn desk_default() -> Self {
        DriftStreamSpec {
            p: 200,
            k_true: 20,
            signal: 1.0,
            shift_interval: 2000,
            nu: 0.5,
            n_samples: 20_000,
            intercept: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.k_true == 0 || self.n_samples == 0 || self.shift_interval == 0 {
            return Err(Error::InvalidArgument(
                "stream dimensions must be positive".into(),
            ));
        }
        if self.k_true > self.p {
            return Err(Error::InvalidArgument(format!(
                "k_true {} exceeds feature count {}",
                self.k_true, self.p
            )));
        }
        if self.nu < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "correlation parameter must be nonnegative, got {}",
                self.nu
            )));
        }
        let last_start = (self.n_samples - 1) / self.shift_interval;
        if last_start as usize + self.k_true > self.p {
            return Err(Error::InvalidArgument(format!(
                "coefficient window would leave the feature space: \
                 floor(N/l) + k = {} > p = {}",
                last_start as usize + self.k_true,
                self.p
            )));
        }
        Ok(())
    }

    /// Active coefficient window for the 0-based sample index `i`:
    /// features floor(i/l) .. floor(i/l)+k.
    pub fn active_window(&self, i: u64) -> Range<usize> {
        let start = (i / self.shift_interval) as usize;
        start..start + self.k_true
    }
}

/// Reproducible sample iterator for a drift spec.
pub struct DriftStream {
    spec: DriftStreamSpec,
    rng: rand::rngs::StdRng,
    index: u64,
    common_scale: f64,
}

impl Iterator for DriftStream {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.index >= self.spec.n_samples {
            return None;
        }
        let z: f64 = self.rng.sample(StandardNormal);
        let common = self.common_scale * z;
        let mut values = Vec::with_capacity(self.spec.p);
        for _ in 0..self.spec.p {
            let noise: f64 = self.rng.sample(StandardNormal);
            values.push(common + noise);
        }
        let e: f64 = self.rng.sample(StandardNormal);
        let window = self.spec.active_window(self.index);
        let response: f64 = values[window].iter().sum::<f64>() * self.spec.signal;
        let y = response + self.spec.intercept + e;
        let label = if y > self.spec.intercept { "1" } else { "0" };
        self.index += 1;
        Some(Sample::dense(label, values))
    }
}

/// Streams labeled samples for `spec`. Identical specs (including the seed)
/// yield identical streams.
pub fn generate(spec: &DriftStreamSpec) -> Result<DriftStream> {
    spec.validate()?;
    Ok(DriftStream {
        rng: rand::rngs::StdRng::seed_from_u64(spec.seed),
        // sqrt(nu) on the shared factor gives pairwise correlation
        // nu / (1 + nu) against unit feature noise.
        common_scale: spec.nu.sqrt(),
        spec: spec.clone(),
        index: 0,
    })
}

/// Fraction of the true features recovered by the selection.
pub fn detection_rate(selected: &[usize], true_set: &[usize]) -> Result<f64> {
    if true_set.is_empty() {
        return Err(Error::InvalidArgument(
            "detection rate over an empty true set".into(),
        ));
    }
    let hits = selected.iter().filter(|f| true_set.contains(f)).count();
    Ok(hits as f64 / true_set.len() as f64)
}

/// One benchmark grid: every method x shift interval x fading factor
/// (`None` = no adaptation), sharing the stream seeds so adaptive/static
/// pairs see identical data.
#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub base: DriftStreamSpec,
    pub methods: Vec<Method>,
    pub shift_intervals: Vec<u64>,
    /// Fading factors to test; `None` runs the non-adaptive baseline.
    pub alphas: Vec<Option<f64>>,
    /// Scores are evaluated every this many samples.
    pub checkpoint_every: u64,
    /// Selection sizes at which detection is evaluated.
    pub selected_k: Vec<usize>,
    pub epsilon: f64,
    pub k_bins: usize,
    pub minibatch: usize,
}

impl BenchGrid {
    pub fn desk_default() -> Self {
        BenchGrid {
            base: DriftStreamSpec::desk_default(),
            methods: Method::ALL.to_vec(),
            shift_intervals: vec![2000],
            alphas: vec![None, Some(0.9)],
            checkpoint_every: 500,
            selected_k: vec![100],
            epsilon: crate::engine::DEFAULT_EPSILON,
            k_bins: crate::engine::DEFAULT_BINS,
            minibatch: crate::engine::DEFAULT_MINIBATCH,
        }
    }
}

/// One checkpoint of one grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRow {
    pub method: Method,
    pub shift_interval: u64,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub sample_index: u64,
    pub selected_k: usize,
    pub detection_rate: f64,
}

/// Tidy detection-rate table, one row per checkpoint per cell per k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub rows: Vec<DetectionRow>,
}

impl DetectionReport {
    /// Plot-ready CSV: method, l, alpha, seed, sample_index, selected_k,
    /// detection_rate.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "method,shift_interval,alpha,seed,sample_index,selected_k,detection_rate"
        )?;
        for r in &self.rows {
            let alpha = r
                .alpha
                .map_or_else(|| "none".to_string(), |a| a.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method,
                r.shift_interval,
                alpha,
                r.seed,
                r.sample_index,
                r.selected_k,
                r.detection_rate
            )?;
        }
        Ok(())
    }

    /// Mean detection over checkpoints matching the given cell and range.
    pub fn mean_detection(
        &self,
        method: Method,
        alpha: Option<f64>,
        shift_interval: u64,
        k: usize,
        from_sample: u64,
    ) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in self.rows.iter().filter(|r| {
            r.method == method
                && r.alpha == alpha
                && r.shift_interval == shift_interval
                && r.selected_k == k
                && r.sample_index >= from_sample
        }) {
            sum += r.detection_rate;
            count += 1;
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Runs every grid cell (in parallel with the `parallel` feature) and
/// collects the tidy detection table in deterministic cell order.
pub fn run_grid(grid: &BenchGrid) -> Result<DetectionReport> {
    let mut cells = Vec::new();
    for &method in &grid.methods {
        for &shift in &grid.shift_intervals {
            for &alpha in &grid.alphas {
                cells.push((method, shift, alpha));
            }
        }
    }
    let results: Vec<Result<Vec<DetectionRow>>> =
        par::map_indexed(cells.len(), |i| run_cell(grid, cells[i]));
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(DetectionReport { rows })
}

fn run_cell(
    grid: &BenchGrid,
    (method, shift_interval, alpha): (Method, u64, Option<f64>),
) -> Result<Vec<DetectionRow>> {
    let mut spec = grid.base.clone();
    spec.shift_interval = shift_interval;

    let mut config = ScreenerConfig::new(method).minibatch(grid.minibatch);
    if method.family() == crate::bincount::MethodFamily::BinCount {
        config = config.epsilon(grid.epsilon).k_bins(grid.k_bins);
    }
    if let Some(a) = alpha {
        config = config.alpha(a);
    }
    let mut engine = Engine::new(config)?;

    let mut rows = Vec::new();
    let mut stream = generate(&spec)?.peekable();
    let mut seen = 0u64;
    let mut batch = Vec::with_capacity(grid.minibatch);
    while stream.peek().is_some() {
        batch.clear();
        while batch.len() < grid.minibatch {
            // Stop the batch at checkpoint boundaries so scoring happens at
            // exact sample counts regardless of the minibatch size.
            let Some(sample) = stream.next() else { break };
            batch.push(sample);
            seen += 1;
            if seen.is_multiple_of(grid.checkpoint_every) {
                break;
            }
        }
        engine.observe_batch(&batch)?;
        if seen.is_multiple_of(grid.checkpoint_every) || seen == spec.n_samples {
            let scores = engine.scores()?;
            let ranking = rank(&scores);
            let window = spec.active_window(seen - 1);
            let true_set: Vec<usize> = window.collect();
            for &k in &grid.selected_k {
                let selected = select_top_k(&ranking, k.min(ranking.order.len()))?;
                rows.push(DetectionRow {
                    method,
                    shift_interval,
                    alpha,
                    seed: spec.seed,
                    sample_index: seen,
                    selected_k: k,
                    detection_rate: detection_rate(&selected, &true_set)?,
                });
            }
        }
    }
    Ok(rows)
}
