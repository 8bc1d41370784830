//! Epsilon-approximate weighted quantile summaries with exact tuple weights.
//!
//! A [`StreamSketch`] ingests a single value stream one point at a time and
//! keeps a compact multi-level summary from which near-equal-frequency bin
//! counts can be produced on demand. The structure follows the
//! Greenwald-Khanna family: a buffer of raw points is periodically compressed
//! into sorted sub-summaries which are merged and pruned up a level hierarchy,
//! and the stream is carved into doubling sub-streams so no prior knowledge of
//! the total length is needed.
//!
//! The one departure from the classic query-only summaries is that PRUNE here
//! conserves weight exactly: every surviving tuple absorbs the full weight of
//! the tuples it replaces, so each tuple is a tight mini-bin
//! (`rmax - rmin = weight`) and bin counts can be read straight off the
//! weights instead of rank midpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of a sub-summary: a value plus its rank envelope and the
/// accumulated weight of the raw points it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryTuple {
    pub value: f64,
    /// Estimated lowest rank of `value` within the owning sub-summary.
    pub rmin: f64,
    /// Estimated highest rank of `value` within the owning sub-summary.
    pub rmax: f64,
    /// Total weight of the covered points; always positive.
    pub weight: f64,
}

/// A sorted run of tuples covering part of a stream at a known precision.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SubSummary {
    tuples: Vec<SummaryTuple>,
    precision: f64,
    total_weight: f64,
}

impl SubSummary {
    pub fn empty() -> Self {
        SubSummary::default()
    }

    /// Builds an exact (0-approximate) summary from points sorted by value.
    /// Runs of equal values are coalesced into one tuple with stacked weight.
    fn from_sorted_points(points: &[(f64, f64)]) -> Self {
        let mut tuples = Vec::new();
        let mut cum = 0.0;
        let mut i = 0;
        while i < points.len() {
            let value = points[i].0;
            let mut weight = 0.0;
            while i < points.len() && points[i].0 == value {
                weight += points[i].1;
                i += 1;
            }
            tuples.push(SummaryTuple {
                value,
                rmin: cum,
                rmax: cum + weight,
                weight,
            });
            cum += weight;
        }
        SubSummary {
            tuples,
            precision: 0.0,
            total_weight: cum,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[SummaryTuple] {
        &self.tuples
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Upper rank function extended over all reals: the covered weight of
    /// values `<= v`. With tight tuples this is the exact cumulative weight
    /// at the largest stored value not exceeding `v`.
    pub fn rank_at(&self, v: f64) -> f64 {
        let idx = self.tuples.partition_point(|t| t.value <= v);
        if idx == 0 {
            0.0
        } else {
            self.tuples[idx - 1].rmax
        }
    }

    fn midpoint(t: &SummaryTuple) -> f64 {
        0.5 * (t.rmin + t.rmax)
    }

    /// Index form of the query function: the tuple whose rank envelope is
    /// closest to the requested rank `d`, with boundary ranks clamping to
    /// the first/last tuple.
    fn query_index(&self, d: f64) -> usize {
        let t = &self.tuples;
        let k = t.len();
        if d < Self::midpoint(&t[0]) {
            return 0;
        }
        if d >= Self::midpoint(&t[k - 1]) {
            return k - 1;
        }
        // First index whose midpoint exceeds d; its predecessor satisfies
        // mid(i) <= d < mid(i+1).
        let pos = t.partition_point(|q| Self::midpoint(q) <= d);
        let i = pos - 1;
        if 2.0 * d < t[i].rmin + t[i].weight + t[i + 1].rmax - t[i + 1].weight {
            i
        } else {
            i + 1
        }
    }

    /// Returns the stored value whose rank envelope covers rank `d`.
    pub fn query(&self, d: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::InvalidArgument(
                "rank query on an empty summary".into(),
            ));
        }
        if !(0.0..=self.total_weight).contains(&d) {
            return Err(Error::InvalidArgument(format!(
                "rank {d} outside [0, {}]",
                self.total_weight
            )));
        }
        Ok(self.tuples[self.query_index(d)].value)
    }

    /// Compresses to at most `target + 1` tuples by selecting values at
    /// evenly spaced rank positions. Each surviving tuple absorbs the entire
    /// weight span since the previous selection, so total weight is conserved
    /// exactly and every output tuple stays tight.
    pub fn prune(&self, target: usize) -> Result<SubSummary> {
        if target < 2 {
            return Err(Error::InvalidArgument(format!(
                "prune target must be at least 2, got {target}"
            )));
        }
        if self.len() <= target + 1 {
            return Ok(self.clone());
        }

        let g = target as f64;
        let mut selected: Vec<usize> = Vec::with_capacity(target + 1);
        for q in 0..=target {
            let d = q as f64 / g * self.total_weight;
            let idx = self.query_index(d);
            if selected.last() != Some(&idx) {
                selected.push(idx);
            }
        }

        let mut tuples = Vec::with_capacity(selected.len());
        let mut span_start = 0usize;
        for &idx in &selected {
            let weight: f64 = self.tuples[span_start..=idx].iter().map(|t| t.weight).sum();
            tuples.push(SummaryTuple {
                value: self.tuples[idx].value,
                rmin: self.tuples[span_start].rmin,
                rmax: self.tuples[idx].rmax,
                weight,
            });
            span_start = idx + 1;
        }
        let total_weight = tuples.iter().map(|t| t.weight).sum();
        Ok(SubSummary {
            tuples,
            precision: self.precision + 1.0 / self.len() as f64,
            total_weight,
        })
    }

    /// Combines two sub-summaries. Shared values coalesce with summed weight;
    /// a value absent from one side takes that side's rank functions extended
    /// over all reals (predecessor upper rank below, successor lower rank
    /// above). The result keeps the worse of the two precisions.
    pub fn merge(a: &SubSummary, b: &SubSummary) -> SubSummary {
        if a.is_empty() {
            return b.clone();
        }
        if b.is_empty() {
            return a.clone();
        }

        let (ta, tb) = (&a.tuples, &b.tuples);
        let mut out = Vec::with_capacity(ta.len() + tb.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < ta.len() || j < tb.len() {
            let take_a = j >= tb.len() || (i < ta.len() && ta[i].value <= tb[j].value);
            let take_b = i >= ta.len() || (j < tb.len() && tb[j].value <= ta[i].value);
            // Extended ranks of the side a value is absent from: the weight
            // strictly below it (pred.rmin + pred.weight) and the weight not
            // above it (succ.rmax - succ.weight, or the side's full weight
            // past its last tuple).
            let ext = |ts: &[SummaryTuple], pos: usize, total: f64| -> (f64, f64) {
                let lo = if pos == 0 {
                    0.0
                } else {
                    ts[pos - 1].rmin + ts[pos - 1].weight
                };
                let hi = if pos < ts.len() {
                    ts[pos].rmax - ts[pos].weight
                } else {
                    total
                };
                (lo, hi)
            };
            let (value, rmin, rmax, weight) = match (take_a, take_b) {
                (true, true) => {
                    let (x, y) = (&ta[i], &tb[j]);
                    i += 1;
                    j += 1;
                    (
                        x.value,
                        x.rmin + y.rmin,
                        x.rmax + y.rmax,
                        x.weight + y.weight,
                    )
                }
                (true, false) => {
                    let x = &ta[i];
                    i += 1;
                    let (lo, hi) = ext(tb, j, b.total_weight);
                    (x.value, x.rmin + lo, x.rmax + hi, x.weight)
                }
                (false, true) => {
                    let y = &tb[j];
                    j += 1;
                    let (lo, hi) = ext(ta, i, a.total_weight);
                    (y.value, y.rmin + lo, y.rmax + hi, y.weight)
                }
                (false, false) => unreachable!(),
            };
            out.push(SummaryTuple {
                value,
                rmin,
                rmax,
                weight,
            });
        }
        let total_weight = out.iter().map(|t| t.weight).sum();
        SubSummary {
            tuples: out,
            precision: a.precision.max(b.precision),
            total_weight,
        }
    }

    /// Scales every weight and rank by `factor` (fading-factor penalty).
    fn scaled(&self, factor: f64) -> SubSummary {
        if factor == 1.0 {
            return self.clone();
        }
        let tuples = self
            .tuples
            .iter()
            .map(|t| SummaryTuple {
                value: t.value,
                rmin: t.rmin * factor,
                rmax: t.rmax * factor,
                weight: t.weight * factor,
            })
            .collect();
        SubSummary {
            tuples,
            precision: self.precision,
            total_weight: self.total_weight * factor,
        }
    }

    fn scale_in_place(&mut self, factor: f64) {
        for t in &mut self.tuples {
            t.rmin *= factor;
            t.rmax *= factor;
            t.weight *= factor;
        }
        self.total_weight *= factor;
    }

    fn dump_lines(&self, out: &mut String) {
        use std::fmt::Write;
        for t in &self.tuples {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", t.value, t.rmin, t.rmax, t.weight);
        }
    }
}

/// Fading-factor state: the owner advances the clock once per stream arrival
/// and the penalty owed to retained summaries accrues until the next flush.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FadingState {
    alpha: f64,
    clock: u64,
    penalized_at: u64,
}

impl FadingState {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Arrivals absorbed since the multi-level structure was last penalized.
    pub fn pending_decay_count(&self) -> u64 {
        self.clock - self.penalized_at
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BufferedPoint {
    value: f64,
    weight: f64,
    /// Clock reading at arrival; effective weight decays from here.
    stamp: u64,
}

/// Streaming quantile summary over one value stream.
///
/// The stream is split into doubling sub-streams; inside each, raw points
/// buffer up to a block size, blocks compress by half and cascade up a level
/// hierarchy binary-counter style, and a finished sub-stream collapses to a
/// single compact summary. `finalize` snapshots everything seen so far
/// without disturbing ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamSketch {
    epsilon: f64,
    buffer: Vec<BufferedPoint>,
    levels: Vec<Option<SubSummary>>,
    /// Summaries of finished sub-streams.
    closed: Vec<SubSummary>,
    /// Buffer capacity b of the current sub-stream.
    block_size: usize,
    substream_size: u64,
    substream_seen: u64,
    substream_index: u32,
    points_seen: u64,
    decay: Option<FadingState>,
}

impl StreamSketch {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let (substream_size, block_size) = substream_plan(epsilon, 0);
        Ok(StreamSketch {
            epsilon,
            buffer: Vec::new(),
            levels: Vec::new(),
            closed: Vec::new(),
            block_size,
            substream_size,
            substream_seen: 0,
            substream_index: 0,
            points_seen: 0,
            decay: None,
        })
    }

    pub fn with_decay(epsilon: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "fading factor must lie in (0, 1), got {alpha}"
            )));
        }
        let mut sketch = Self::new(epsilon)?;
        sketch.decay = Some(FadingState {
            alpha,
            clock: 0,
            penalized_at: 0,
        });
        Ok(sketch)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn points_seen(&self) -> u64 {
        self.points_seen
    }

    pub fn total_weight(&self) -> f64 {
        self.finalize().total_weight()
    }

    pub fn decay_state(&self) -> Option<&FadingState> {
        self.decay.as_ref()
    }

    /// Declares that `steps` stream arrivals have passed. Owners of
    /// decay-enabled sketches call this once per arrival (or once per gap in
    /// sparse streams) before inserting; without decay it is a no-op.
    pub fn advance_clock(&mut self, steps: u64) {
        if let Some(f) = &mut self.decay {
            f.clock += steps;
        }
    }

    /// Adds one weighted point to the stream.
    pub fn insert(&mut self, value: f64, weight: f64) -> Result<()> {
        if value.is_nan() {
            return Err(Error::RejectedInput("NaN stream value".into()));
        }
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::RejectedInput(format!(
                "weight must be positive and finite, got {weight}"
            )));
        }
        let stamp = self.decay.as_ref().map_or(0, |f| f.clock);
        self.buffer.push(BufferedPoint {
            value,
            weight,
            stamp,
        });
        self.points_seen += 1;
        self.substream_seen += 1;
        if self.substream_seen >= self.substream_size {
            self.close_substream();
        } else if self.buffer.len() >= self.block_size {
            self.flush_block();
        }
        Ok(())
    }

    /// Pushes the recorded mass of unseen zero values as one weighted point.
    /// The weight is taken as already decayed to the current clock.
    pub fn inject_zeros(&mut self, zero_weight: f64) -> Result<()> {
        if zero_weight < 0.0 || !zero_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "zero weight must be nonnegative, got {zero_weight}"
            )));
        }
        if zero_weight == 0.0 {
            return Ok(());
        }
        self.insert(0.0, zero_weight)
    }

    /// Applies the accrued fading penalty to every retained summary (all
    /// levels and all closed sub-stream summaries) and resets the pending
    /// count. No-op when decay is disabled. Runs automatically whenever a
    /// block flush or sub-stream close touches the multi-level structure.
    pub fn decay_flush(&mut self) {
        let Some(f) = &mut self.decay else { return };
        let pending = f.clock - f.penalized_at;
        if pending == 0 {
            return;
        }
        let factor = powi_u64(f.alpha, pending);
        f.penalized_at = f.clock;
        for level in self.levels.iter_mut().flatten() {
            level.scale_in_place(factor);
        }
        for s in &mut self.closed {
            s.scale_in_place(factor);
        }
    }

    /// Non-destructive snapshot: merges the buffer (exact), all live levels,
    /// and all closed sub-stream summaries into one summary of the whole
    /// stream seen so far. Pending decay is accounted for without mutating
    /// the sketch. An empty sketch yields an empty summary.
    pub fn finalize(&self) -> SubSummary {
        let penalty = self
            .decay
            .as_ref()
            .map_or(1.0, |f| powi_u64(f.alpha, f.clock - f.penalized_at));
        let mut acc = self.buffer_summary();
        for level in self.levels.iter().flatten() {
            acc = SubSummary::merge(&acc, &level.scaled(penalty));
        }
        for s in &self.closed {
            acc = SubSummary::merge(&acc, &s.scaled(penalty));
        }
        acc
    }

    /// The buffer as an exact summary, with per-point decay applied.
    fn buffer_summary(&self) -> SubSummary {
        if self.buffer.is_empty() {
            return SubSummary::empty();
        }
        let clock = self.decay.as_ref().map_or(0, |f| f.clock);
        let alpha = self.decay.as_ref().map(|f| f.alpha);
        let mut points: Vec<(f64, f64)> = self
            .buffer
            .iter()
            .map(|p| {
                let w = match alpha {
                    Some(a) => p.weight * powi_u64(a, clock - p.stamp),
                    None => p.weight,
                };
                (p.value, w)
            })
            .collect();
        points.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        SubSummary::from_sorted_points(&points)
    }

    fn flush_block(&mut self) {
        self.decay_flush();
        let exact = self.buffer_summary();
        self.buffer.clear();
        let target = (self.block_size / 2).max(2);
        // prune() only errors on target < 2, which max(2) rules out.
        let mut carry = Some(exact.prune(target).expect("prune target >= 2"));
        for level in self.levels.iter_mut() {
            let current = carry.take().expect("carry present until assigned");
            match level.take() {
                None => {
                    *level = Some(current);
                    break;
                }
                Some(existing) => {
                    let merged = SubSummary::merge(&current, &existing);
                    let pruned = merged.prune(target).expect("prune target >= 2");
                    // A result within the level budget only happens when
                    // coalescing kept the merge small (prune was an identity);
                    // it can park here at no precision cost. Otherwise the
                    // carry continues upward.
                    if pruned.len() <= target {
                        *level = Some(pruned);
                        break;
                    }
                    carry = Some(pruned);
                }
            }
        }
        if let Some(current) = carry {
            self.levels.push(Some(current));
        }
    }

    /// Collapses the finished sub-stream into one compact summary and starts
    /// the next, doubled sub-stream.
    fn close_substream(&mut self) {
        self.decay_flush();
        let mut acc = self.buffer_summary();
        self.buffer.clear();
        for level in self.levels.iter_mut() {
            if let Some(s) = level.take() {
                acc = SubSummary::merge(&acc, &s);
            }
        }
        self.levels.clear();
        let target = (2.0 / self.epsilon).ceil() as usize;
        let compact = if acc.len() > target + 1 {
            acc.prune(target.max(2)).expect("prune target >= 2")
        } else {
            acc
        };
        if !compact.is_empty() {
            self.closed.push(compact);
        }
        self.substream_index += 1;
        let (size, block) = substream_plan(self.epsilon, self.substream_index);
        self.substream_size = size;
        self.block_size = block;
        self.substream_seen = 0;
    }

    /// One tuple per line (value, rmin, rmax, weight, tab-separated); the
    /// buffer, each level, and each closed summary are separated by blank
    /// lines.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let mut sections: Vec<SubSummary> = vec![self.buffer_summary()];
        sections.extend(self.levels.iter().flatten().cloned());
        sections.extend(self.closed.iter().cloned());
        let mut first = true;
        for s in sections.iter().filter(|s| !s.is_empty()) {
            if !first {
                out.push('\n');
            }
            s.dump_lines(&mut out);
            first = false;
        }
        out
    }
}

/// Sub-stream layout: the i-th sub-stream covers ceil(2^i / eps) points and
/// works at precision eps/2, which sets the block size b = ceil(L / (eps/2))
/// for the largest L with b * 2^(L-1) <= size. Sub-streams too small for any
/// level are buffered whole (exact).
fn substream_plan(epsilon: f64, index: u32) -> (u64, usize) {
    let size = (2f64.powi(index as i32) / epsilon).ceil() as u64;
    let eps_work = epsilon / 2.0;
    let mut best_block = size.max(1) as usize;
    let mut found = false;
    let mut level = 1u32;
    loop {
        let block = (level as f64 / eps_work).ceil() as u64;
        if block.saturating_mul(1 << (level - 1)) > size {
            break;
        }
        best_block = block as usize;
        found = true;
        level += 1;
    }
    if !found {
        // Whole sub-stream fits in the buffer.
        return (size, size.max(1) as usize);
    }
    (size, best_block)
}

fn powi_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}
