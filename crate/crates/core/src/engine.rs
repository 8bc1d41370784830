//! The screening engine: per-feature, per-class state, sparse zero
//! bookkeeping, fading-factor weight maps, minibatch ingestion and
//! on-demand scoring.
//!
//! Ingestion is two-phase. A coordinator pass walks the batch in arrival
//! order, registering labels, advancing the global clock and updating the
//! per-class counters and decayed weight map. The per-feature pass then fans
//! out across features (in parallel with the `parallel` feature) with each
//! feature applying its own entries in sample order, so the final state is
//! bit-identical however the stream is chopped into batches.

use serde::{Deserialize, Serialize};

use crate::bincount::{self, Method, MethodFamily, ScoreVector};
use crate::discretize::{self, BinTable};
use crate::error::{Error, Result};
use crate::meanvar::{self, ClassStats, StatsMode};
use crate::par;
use crate::sketch::{StreamSketch, SubSummary};

pub const DEFAULT_EPSILON: f64 = 0.001;
pub const DEFAULT_BINS: usize = 5;
pub const DEFAULT_MINIBATCH: usize = 250;

/// Feature entries of one sample: a full value row, or (index, value) pairs
/// with strictly increasing 0-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Entries {
    Dense(Vec<f64>),
    Sparse(Vec<(usize, f64)>),
}

/// One labeled sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub label: String,
    pub entries: Entries,
}

impl Sample {
    pub fn dense(label: impl Into<String>, values: Vec<f64>) -> Self {
        Sample {
            label: label.into(),
            entries: Entries::Dense(values),
        }
    }

    pub fn sparse(label: impl Into<String>, pairs: Vec<(usize, f64)>) -> Self {
        Sample {
            label: label.into(),
            entries: Entries::Sparse(pairs),
        }
    }
}

/// Screener settings. `epsilon` and `k_bins` apply to the bin-count family
/// only and must stay unset for T-score/Fisher; `alpha` enables
/// fading-factor adaptation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreenerConfig {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub k_bins: Option<usize>,
    pub alpha: Option<f64>,
    pub minibatch: usize,
    pub sparse: bool,
    /// Fixed feature count; `None` grows with the data.
    pub feature_count: Option<usize>,
}

impl ScreenerConfig {
    pub fn new(method: Method) -> Self {
        ScreenerConfig {
            method,
            epsilon: None,
            k_bins: None,
            alpha: None,
            minibatch: DEFAULT_MINIBATCH,
            sparse: false,
            feature_count: None,
        }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn k_bins(mut self, k_bins: usize) -> Self {
        self.k_bins = Some(k_bins);
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn minibatch(mut self, minibatch: usize) -> Self {
        self.minibatch = minibatch;
        self
    }

    pub fn sparse(mut self, sparse: bool) -> Self {
        self.sparse = sparse;
        self
    }

    pub fn feature_count(mut self, p: usize) -> Self {
        self.feature_count = Some(p);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BinFeature {
    /// One sketch per class, grown as classes appear.
    sketches: Vec<StreamSketch>,
    /// Explicit entries seen per class (sparse zero accounting).
    explicit: Vec<f64>,
    /// Global sample index of the last explicit entry (sparse adaptive).
    anchor: u64,
    /// Decayed weight-map snapshot taken at the anchor.
    anchor_map: Vec<f64>,
}

impl BinFeature {
    fn new() -> Self {
        BinFeature {
            sketches: Vec::new(),
            explicit: Vec::new(),
            anchor: 0,
            anchor_map: Vec::new(),
        }
    }

    fn ensure_classes(&mut self, classes: usize, epsilon: f64, alpha: Option<f64>) {
        while self.sketches.len() < classes {
            let sketch = match alpha {
                Some(a) => StreamSketch::with_decay(epsilon, a),
                None => StreamSketch::new(epsilon),
            }
            .expect("validated config");
            self.sketches.push(sketch);
        }
        if self.explicit.len() < classes {
            self.explicit.resize(classes, 0.0);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum FeatureState {
    MeanVar(ClassStats),
    Bins(BinFeature),
}

#[derive(Clone, Copy)]
struct SlotMeta {
    class: usize,
    time: u64,
}

/// Feature ranking, most important first. `rank_of` maps a feature index to
/// its 1-based rank; NaN scores sink to the bottom and are flagged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub rank_of: Vec<usize>,
    pub nan_features: Vec<usize>,
}

/// Sorts features by score. Direction follows `higher_is_better`; ties break
/// toward the lower feature index so rankings are total and reproducible.
pub fn rank(scores: &ScoreVector) -> Ranking {
    use std::cmp::Ordering;
    let p = scores.len();
    let mut order: Vec<usize> = (0..p).collect();
    let values = &scores.scores;
    let higher = scores.higher_is_better;
    order.sort_unstable_by(|&a, &b| match (values[a].is_nan(), values[b].is_nan()) {
        (true, true) => a.cmp(&b),
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => {
            let ord = if higher {
                values[b].partial_cmp(&values[a])
            } else {
                values[a].partial_cmp(&values[b])
            };
            ord.unwrap().then(a.cmp(&b))
        }
    });
    let mut rank_of = vec![0usize; p];
    for (pos, &feature) in order.iter().enumerate() {
        rank_of[feature] = pos + 1;
    }
    let nan_features: Vec<usize> = (0..p).filter(|&f| values[f].is_nan()).collect();
    Ranking {
        order,
        rank_of,
        nan_features,
    }
}

/// The first `k` features of a ranking.
pub fn select_top_k(ranking: &Ranking, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > ranking.order.len() {
        return Err(Error::InvalidArgument(format!(
            "top-k must lie in 1..={}, got {k}",
            ranking.order.len()
        )));
    }
    Ok(ranking.order[..k].to_vec())
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedSnapshot {
    version: u32,
    engine: Engine,
}

/// Streaming feature screener over one criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Engine {
    config: ScreenerConfig,
    epsilon: f64,
    k_bins: usize,
    /// Class labels in first-seen order; positions are the class ids.
    labels: Vec<String>,
    /// Global sample count.
    time: u64,
    /// Plain per-class sample counts.
    class_counts: Vec<f64>,
    /// Decayed per-class weight totals M(t, c), maintained when adaptation
    /// is on and shared by every feature.
    weight_map: Vec<f64>,
    features: Vec<FeatureState>,
    dense_arity: Option<usize>,
}

impl Engine {
    pub fn new(config: ScreenerConfig) -> Result<Self> {
        if config.minibatch == 0 {
            return Err(Error::Config("minibatch capacity must be positive".into()));
        }
        if let Some(a) = config.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!(
                    "fading factor must lie in (0, 1), got {a}"
                )));
            }
        }
        if let Some(p) = config.feature_count {
            if p == 0 {
                return Err(Error::Config("feature count must be positive".into()));
            }
        }
        let (epsilon, k_bins) = match config.method.family() {
            MethodFamily::MeanVariance => {
                if config.epsilon.is_some() || config.k_bins.is_some() {
                    return Err(Error::Config(format!(
                        "{} is a mean-variance criterion and takes neither epsilon nor bins",
                        config.method
                    )));
                }
                (DEFAULT_EPSILON, DEFAULT_BINS)
            }
            MethodFamily::BinCount => {
                let eps = config.epsilon.unwrap_or(DEFAULT_EPSILON);
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::Config(format!(
                        "epsilon must lie in (0, 1), got {eps}"
                    )));
                }
                let k = config.k_bins.unwrap_or(DEFAULT_BINS);
                if k < 2 {
                    return Err(Error::Config(format!("need at least 2 bins, got {k}")));
                }
                (eps, k)
            }
        };
        let mut engine = Engine {
            config,
            epsilon,
            k_bins,
            labels: Vec::new(),
            time: 0,
            class_counts: Vec::new(),
            weight_map: Vec::new(),
            features: Vec::new(),
            dense_arity: None,
        };
        if let Some(p) = engine.config.feature_count {
            engine.ensure_features(p);
        }
        Ok(engine)
    }

    pub fn config(&self) -> &ScreenerConfig {
        &self.config
    }

    pub fn method(&self) -> Method {
        self.config.method
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn samples_seen(&self) -> u64 {
        self.time
    }

    pub fn class_labels(&self) -> &[String] {
        &self.labels
    }

    fn alpha(&self) -> Option<f64> {
        self.config.alpha
    }

    fn stats_mode(&self) -> StatsMode {
        match (self.config.sparse, self.config.alpha.is_some()) {
            (false, false) => StatsMode::Plain,
            (true, false) => StatsMode::Sparse,
            (false, true) => StatsMode::Adaptive,
            (true, true) => StatsMode::SparseAdaptive,
        }
    }

    fn new_feature(&self) -> FeatureState {
        match self.config.method.family() {
            MethodFamily::MeanVariance => FeatureState::MeanVar(
                ClassStats::new(self.stats_mode(), self.config.alpha).expect("validated config"),
            ),
            MethodFamily::BinCount => FeatureState::Bins(BinFeature::new()),
        }
    }

    fn ensure_features(&mut self, count: usize) {
        while self.features.len() < count {
            self.features.push(self.new_feature());
        }
    }

    fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Shape and value checks for a batch, done before any state mutation.
    fn validate_batch(&self, samples: &[Sample]) -> Result<usize> {
        let mut known = self.labels.len();
        let mut pending: Vec<&str> = Vec::new();
        let mut max_index = self.features.len();
        let mut batch_arity = self.config.feature_count.or(self.dense_arity);
        for (i, sample) in samples.iter().enumerate() {
            let fresh = self.label_id(&sample.label).is_none()
                && !pending.iter().any(|l| *l == sample.label);
            if fresh {
                if self.config.method == Method::TScore && known >= 2 {
                    return Err(Error::RejectedInput(format!(
                        "sample {i}: t_score is a two-class criterion, cannot add label {:?}",
                        sample.label
                    )));
                }
                pending.push(&sample.label);
                known += 1;
            }
            match &sample.entries {
                Entries::Dense(values) => {
                    if self.config.sparse {
                        return Err(Error::RejectedInput(format!(
                            "sample {i}: dense entries in a sparse-mode engine"
                        )));
                    }
                    let expected = *batch_arity.get_or_insert(values.len());
                    if values.len() != expected {
                        return Err(Error::RejectedInput(format!(
                            "sample {i}: expected {expected} dense values, got {}",
                            values.len()
                        )));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::RejectedInput(format!(
                            "sample {i}: non-finite feature value"
                        )));
                    }
                    max_index = max_index.max(values.len());
                }
                Entries::Sparse(pairs) => {
                    if !self.config.sparse {
                        return Err(Error::RejectedInput(format!(
                            "sample {i}: sparse entries in a dense-mode engine"
                        )));
                    }
                    let mut prev: Option<usize> = None;
                    for &(idx, value) in pairs {
                        if let Some(p) = prev {
                            if idx <= p {
                                return Err(Error::RejectedInput(format!(
                                    "sample {i}: sparse indices must be strictly increasing"
                                )));
                            }
                        }
                        if let Some(p) = self.config.feature_count {
                            if idx >= p {
                                return Err(Error::RejectedInput(format!(
                                    "sample {i}: feature index {idx} outside fixed range 0..{p}"
                                )));
                            }
                        }
                        if !value.is_finite() {
                            return Err(Error::RejectedInput(format!(
                                "sample {i}: non-finite feature value"
                            )));
                        }
                        prev = Some(idx);
                        max_index = max_index.max(idx + 1);
                    }
                }
            }
        }
        Ok(max_index)
    }

    pub fn observe(&mut self, sample: &Sample) -> Result<()> {
        self.observe_batch(std::slice::from_ref(sample))
    }

    /// Ingests a batch of at most `minibatch` samples. Equivalent to
    /// observing each sample in order; per-feature visits are amortized
    /// across the batch.
    pub fn observe_batch(&mut self, samples: &[Sample]) -> Result<()> {
        if samples.is_empty() {
            return Ok(());
        }
        if samples.len() > self.config.minibatch {
            return Err(Error::InvalidArgument(format!(
                "batch of {} exceeds the minibatch capacity {}",
                samples.len(),
                self.config.minibatch
            )));
        }
        let needed_features = self.validate_batch(samples)?;

        // Coordinator pass: clocks, labels, counters, weight map.
        let alpha = self.alpha();
        let need_history = alpha.is_some()
            && self.config.sparse
            && self.config.method.family() == MethodFamily::BinCount;
        let mut metas = Vec::with_capacity(samples.len());
        let mut map_history: Vec<Vec<f64>> = Vec::new();
        for sample in samples {
            let class = match self.label_id(&sample.label) {
                Some(id) => id,
                None => {
                    self.labels.push(sample.label.clone());
                    self.class_counts.push(0.0);
                    self.weight_map.push(0.0);
                    self.labels.len() - 1
                }
            };
            self.time += 1;
            self.class_counts[class] += 1.0;
            if let Some(a) = alpha {
                for m in &mut self.weight_map {
                    *m *= a;
                }
                self.weight_map[class] += 1.0;
            }
            metas.push(SlotMeta {
                class,
                time: self.time,
            });
            if need_history {
                map_history.push(self.weight_map.clone());
            }
        }
        self.ensure_features(needed_features);
        if self.dense_arity.is_none() {
            if let Entries::Dense(values) = &samples[0].entries {
                self.dense_arity = Some(self.config.feature_count.unwrap_or(values.len()));
            }
        }

        // Fan-out pass: each feature applies its own entries in sample order.
        let classes = self.labels.len();
        let epsilon = self.epsilon;
        let sparse = self.config.sparse;
        if sparse {
            let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.features.len()];
            for (slot, sample) in samples.iter().enumerate() {
                if let Entries::Sparse(pairs) = &sample.entries {
                    for &(idx, value) in pairs {
                        buckets[idx].push((slot, value));
                    }
                }
            }
            let metas = &metas;
            let map_history = &map_history;
            let buckets = &buckets;
            par::for_each_mut(&mut self.features, |f, state| {
                for &(slot, value) in &buckets[f] {
                    let meta = metas[slot];
                    match state {
                        FeatureState::MeanVar(stats) => stats.update(value, meta.class, meta.time),
                        FeatureState::Bins(bf) => {
                            bf.ensure_classes(classes, epsilon, alpha);
                            match alpha {
                                None => {
                                    bf.explicit[meta.class] += 1.0;
                                    bf.sketches[meta.class]
                                        .insert(value, 1.0)
                                        .expect("validated input");
                                }
                                Some(a) => {
                                    // Catch up the decay owed since the last
                                    // explicit entry, recover the skipped
                                    // zero mass per class from the weight
                                    // map, then add the explicit point. The
                                    // arriving sample itself is explicit, so
                                    // its own class indicator is excluded
                                    // from the recovered mass.
                                    let gap = meta.time - bf.anchor;
                                    let decay = powi_u64(a, gap);
                                    let current = &map_history[slot];
                                    for c in 0..classes {
                                        let at_anchor =
                                            bf.anchor_map.get(c).copied().unwrap_or(0.0);
                                        let mut recovered = current.get(c).copied().unwrap_or(0.0)
                                            - at_anchor * decay;
                                        if c == meta.class {
                                            recovered -= 1.0;
                                        }
                                        bf.sketches[c].advance_clock(gap);
                                        if recovered > 0.0 {
                                            bf.sketches[c]
                                                .inject_zeros(recovered)
                                                .expect("nonnegative mass");
                                        }
                                    }
                                    bf.sketches[meta.class]
                                        .insert(value, 1.0)
                                        .expect("validated input");
                                    bf.anchor = meta.time;
                                    bf.anchor_map = current.clone();
                                }
                            }
                        }
                    }
                }
            });
        } else {
            let metas = &metas;
            par::for_each_mut(&mut self.features, |f, state| {
                for (slot, sample) in samples.iter().enumerate() {
                    let Entries::Dense(values) = &sample.entries else {
                        unreachable!("validated dense batch");
                    };
                    let meta = metas[slot];
                    let value = values[f];
                    match state {
                        FeatureState::MeanVar(stats) => stats.update(value, meta.class, meta.time),
                        FeatureState::Bins(bf) => {
                            bf.ensure_classes(classes, epsilon, alpha);
                            if alpha.is_some() {
                                for sketch in &mut bf.sketches {
                                    sketch.advance_clock(1);
                                }
                            }
                            bf.sketches[meta.class]
                                .insert(value, 1.0)
                                .expect("validated input");
                        }
                    }
                }
            });
        }
        Ok(())
    }

    /// Per-class summaries for one bin-count feature, with sparse zero mass
    /// reconciled on clones so the engine itself is untouched.
    fn class_summaries(&self, bf: &BinFeature) -> Result<Vec<SubSummary>> {
        let classes = self.labels.len();
        let mut out = Vec::with_capacity(classes);
        for c in 0..classes {
            let summary = match (self.config.sparse, self.alpha()) {
                (false, _) => bf.sketches.get(c).map(|s| s.finalize()).unwrap_or_default(),
                (true, None) => {
                    let explicit = bf.explicit.get(c).copied().unwrap_or(0.0);
                    let zeros = (self.class_counts[c] - explicit).max(0.0);
                    let mut sketch = match bf.sketches.get(c) {
                        Some(s) => s.clone(),
                        None => StreamSketch::new(self.epsilon)?,
                    };
                    sketch.inject_zeros(zeros)?;
                    sketch.finalize()
                }
                (true, Some(a)) => {
                    let gap = self.time - bf.anchor;
                    let at_anchor = bf.anchor_map.get(c).copied().unwrap_or(0.0);
                    let residual = (self.weight_map[c] - at_anchor * powi_u64(a, gap)).max(0.0);
                    let mut sketch = match bf.sketches.get(c) {
                        Some(s) => s.clone(),
                        None => StreamSketch::with_decay(self.epsilon, a)?,
                    };
                    sketch.advance_clock(gap);
                    sketch.inject_zeros(residual)?;
                    sketch.finalize()
                }
            };
            out.push(summary);
        }
        Ok(out)
    }

    fn feature_table(&self, state: &FeatureState) -> Result<BinTable> {
        let FeatureState::Bins(bf) = state else {
            return Err(Error::Config(
                "bin tables exist only for bin-count criteria".into(),
            ));
        };
        let summaries = self.class_summaries(bf)?;
        discretize::build_table(&summaries, self.k_bins)
    }

    fn check_scoreable(&self) -> Result<()> {
        if self.time == 0 {
            return Err(Error::NoSamples);
        }
        if self.labels.len() < 2 {
            return Err(Error::Degenerate(format!(
                "{} needs at least two classes, saw {}",
                self.config.method,
                self.labels.len()
            )));
        }
        Ok(())
    }

    /// Scores every feature with the configured criterion. Non-destructive
    /// and repeatable: sparse zero reconciliation happens on clones, so
    /// calling this twice with no intervening observes yields identical
    /// vectors and ingestion may continue afterwards.
    pub fn scores(&self) -> Result<ScoreVector> {
        self.check_scoreable()?;
        let method = self.config.method;
        let results: Vec<Result<f64>> = match method.family() {
            MethodFamily::MeanVariance => {
                let totals: &[f64] = if self.alpha().is_some() {
                    &self.weight_map
                } else {
                    &self.class_counts
                };
                let now = self.time;
                par::map_indexed(self.features.len(), |f| {
                    let FeatureState::MeanVar(stats) = &self.features[f] else {
                        unreachable!("mean-variance engine holds ClassStats");
                    };
                    let moments = stats.moments(totals, now);
                    match method {
                        Method::TScore => Ok(meanvar::t_score(&moments[0], &moments[1])),
                        Method::Fisher => meanvar::fisher_score(&moments),
                        _ => unreachable!(),
                    }
                })
            }
            MethodFamily::BinCount => par::map_indexed(self.features.len(), |f| {
                let table = self.feature_table(&self.features[f])?;
                match method {
                    Method::Gini => bincount::gini_index(&table),
                    Method::ChiSquare => bincount::chi_square(&table),
                    Method::MutualInfo => bincount::mutual_information(&table),
                    _ => unreachable!(),
                }
            }),
        };
        let mut scores = Vec::with_capacity(results.len());
        for r in results {
            scores.push(r?);
        }
        Ok(ScoreVector::new(scores, method))
    }

    /// The per-feature contingency tables behind the bin-count criteria
    /// (online/offline count comparisons).
    pub fn bin_tables(&self) -> Result<Vec<BinTable>> {
        self.check_scoreable()?;
        if self.config.method.family() != MethodFamily::BinCount {
            return Err(Error::Config(
                "bin tables exist only for bin-count criteria".into(),
            ));
        }
        let results: Vec<Result<BinTable>> = par::map_indexed(self.features.len(), |f| {
            self.feature_table(&self.features[f])
        });
        results.into_iter().collect()
    }

    /// Versioned snapshot for checkpoint/resume.
    pub fn snapshot_json(&self) -> String {
        serde_json::to_string(&VersionedSnapshot {
            version: SNAPSHOT_VERSION,
            engine: self.clone(),
        })
        .expect("engine state serializes")
    }

    pub fn from_snapshot_json(text: &str) -> Result<Engine> {
        let snapshot: VersionedSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {}",
                snapshot.version
            )));
        }
        Ok(snapshot.engine)
    }
}

fn powi_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_engine(method: Method) -> Engine {
        Engine::new(ScreenerConfig::new(method)).unwrap()
    }

    #[test]
    fn meanvar_rejects_bin_settings() {
        let err = Engine::new(ScreenerConfig::new(Method::TScore).epsilon(0.01));
        assert!(matches!(err, Err(Error::Config(_))));
        let err = Engine::new(ScreenerConfig::new(Method::Fisher).k_bins(5));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn dense_sample_touches_every_feature() {
        let mut engine = dense_engine(Method::Fisher);
        engine
            .observe(&Sample::dense("a", vec![1.0, 2.0, 3.0]))
            .unwrap();
        assert_eq!(engine.feature_count(), 3);
        assert_eq!(engine.samples_seen(), 1);
        for state in &engine.features {
            let FeatureState::MeanVar(stats) = state else {
                panic!()
            };
            assert_eq!(stats.class_count(), 1);
        }
    }

    #[test]
    fn sparse_sample_touches_only_explicit_features() {
        let config = ScreenerConfig::new(Method::MutualInfo)
            .sparse(true)
            .feature_count(5);
        let mut engine = Engine::new(config).unwrap();
        engine
            .observe(&Sample::sparse("a", vec![(2, 0.5)]))
            .unwrap();
        let FeatureState::Bins(bf) = &engine.features[2] else {
            panic!()
        };
        assert_eq!(bf.sketches[0].points_seen(), 1);
        let FeatureState::Bins(other) = &engine.features[0] else {
            panic!()
        };
        assert!(other.sketches.is_empty());
        assert_eq!(engine.class_counts, vec![1.0]);
    }

    #[test]
    fn third_label_rejected_for_t_score() {
        let mut engine = dense_engine(Method::TScore);
        engine.observe(&Sample::dense("a", vec![1.0])).unwrap();
        engine.observe(&Sample::dense("b", vec![2.0])).unwrap();
        let err = engine.observe(&Sample::dense("c", vec![3.0]));
        assert!(matches!(err, Err(Error::RejectedInput(_))));
    }

    #[test]
    fn non_increasing_sparse_indices_rejected() {
        let mut engine = Engine::new(ScreenerConfig::new(Method::MutualInfo).sparse(true)).unwrap();
        let err = engine.observe(&Sample::sparse("a", vec![(7, 1.2), (3, 0.5)]));
        assert!(matches!(err, Err(Error::RejectedInput(_))));
    }

    #[test]
    fn sparse_index_outside_fixed_range_rejected() {
        let config = ScreenerConfig::new(Method::MutualInfo)
            .sparse(true)
            .feature_count(4);
        let mut engine = Engine::new(config).unwrap();
        let err = engine.observe(&Sample::sparse("a", vec![(4, 1.0)]));
        assert!(matches!(err, Err(Error::RejectedInput(_))));
    }

    #[test]
    fn scores_on_fresh_engine_is_an_error() {
        let engine = dense_engine(Method::MutualInfo);
        assert!(matches!(engine.scores(), Err(Error::NoSamples)));
    }

    #[test]
    fn single_class_scoring_is_degenerate() {
        let mut engine = dense_engine(Method::MutualInfo);
        engine.observe(&Sample::dense("a", vec![1.0])).unwrap();
        assert!(matches!(engine.scores(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn separated_classes_reach_log2_mutual_information() {
        let config = ScreenerConfig::new(Method::MutualInfo)
            .epsilon(0.001)
            .k_bins(2);
        let mut engine = Engine::new(config).unwrap();
        for v in 1..=50 {
            engine.observe(&Sample::dense("0", vec![v as f64])).unwrap();
        }
        for v in 51..=100 {
            engine.observe(&Sample::dense("1", vec![v as f64])).unwrap();
        }
        let scores = engine.scores().unwrap();
        assert!((scores.scores[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn scoring_is_repeatable() {
        let mut engine = Engine::new(
            ScreenerConfig::new(Method::ChiSquare)
                .sparse(true)
                .alpha(0.9)
                .feature_count(4),
        )
        .unwrap();
        for i in 0..200u64 {
            let label = if i % 2 == 0 { "a" } else { "b" };
            let idx = (i % 4) as usize;
            engine
                .observe(&Sample::sparse(label, vec![(idx, (i % 7) as f64 + 1.0)]))
                .unwrap();
        }
        let first = engine.scores().unwrap();
        let second = engine.scores().unwrap();
        assert_eq!(first.scores, second.scores);
        // Ingestion continues after scoring.
        engine
            .observe(&Sample::sparse("a", vec![(0, 2.0)]))
            .unwrap();
        let third = engine.scores().unwrap();
        assert_ne!(first.scores, third.scores);
    }

    #[test]
    fn batch_of_one_equals_observe() {
        let mut singles = dense_engine(Method::Fisher);
        let mut batched = dense_engine(Method::Fisher);
        let samples: Vec<Sample> = (0..40)
            .map(|i| {
                Sample::dense(
                    if i % 2 == 0 { "x" } else { "y" },
                    vec![i as f64, (i * i % 13) as f64],
                )
            })
            .collect();
        for s in &samples {
            singles.observe(s).unwrap();
        }
        batched.observe_batch(&samples).unwrap();
        assert_eq!(
            singles.scores().unwrap().scores,
            batched.scores().unwrap().scores
        );
    }

    #[test]
    fn batch_partitioning_is_invisible() {
        for method in [Method::Fisher, Method::MutualInfo] {
            let mut by_7 = dense_engine(method);
            let mut by_all = dense_engine(method);
            let samples: Vec<Sample> = (0..101)
                .map(|i| {
                    Sample::dense(
                        if i % 3 == 0 { "x" } else { "y" },
                        vec![(i % 17) as f64, (i % 5) as f64, i as f64],
                    )
                })
                .collect();
            for chunk in samples.chunks(7) {
                by_7.observe_batch(chunk).unwrap();
            }
            for chunk in samples.chunks(101) {
                by_all.observe_batch(chunk).unwrap();
            }
            assert_eq!(
                by_7.scores().unwrap().scores,
                by_all.scores().unwrap().scores,
                "method {method}"
            );
        }
    }

    #[test]
    fn oversized_batch_rejected() {
        let mut engine = Engine::new(ScreenerConfig::new(Method::Fisher).minibatch(2)).unwrap();
        let samples: Vec<Sample> = (0..3).map(|i| Sample::dense("a", vec![i as f64])).collect();
        assert!(matches!(
            engine.observe_batch(&samples),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rank_directions_and_ties() {
        let mi = ScoreVector::new(vec![0.1, 0.9, 0.5], Method::MutualInfo);
        let r = rank(&mi);
        assert_eq!(r.order, vec![1, 2, 0]);
        assert_eq!(r.rank_of, vec![3, 1, 2]);

        let gini = ScoreVector::new(vec![0.1, 0.9, 0.5], Method::Gini);
        let r = rank(&gini);
        assert_eq!(r.order, vec![0, 2, 1]);

        let tied = ScoreVector::new(vec![0.4; 4], Method::Fisher);
        let r = rank(&tied);
        assert_eq!(r.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn nan_scores_rank_last_and_are_flagged() {
        let v = ScoreVector::new(vec![0.2, f64::NAN, 0.7], Method::Fisher);
        let r = rank(&v);
        assert_eq!(r.order, vec![2, 0, 1]);
        assert_eq!(r.nan_features, vec![1]);
    }

    #[test]
    fn top_k_selection() {
        let v = ScoreVector::new(vec![0.1, 0.9, 0.5], Method::MutualInfo);
        let r = rank(&v);
        assert_eq!(select_top_k(&r, 3).unwrap(), vec![1, 2, 0]);
        assert_eq!(select_top_k(&r, 1).unwrap(), vec![1]);
        assert!(matches!(
            select_top_k(&r, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn snapshot_round_trip_preserves_scores() {
        let mut engine = Engine::new(
            ScreenerConfig::new(Method::Gini)
                .sparse(true)
                .alpha(0.95)
                .feature_count(6),
        )
        .unwrap();
        for i in 0..300u64 {
            let label = if i % 3 == 0 { "pos" } else { "neg" };
            let idx = (i % 6) as usize;
            engine
                .observe(&Sample::sparse(label, vec![(idx, ((i * 7) % 23) as f64)]))
                .unwrap();
        }
        let json = engine.snapshot_json();
        let restored = Engine::from_snapshot_json(&json).unwrap();
        assert_eq!(
            engine.scores().unwrap().scores,
            restored.scores().unwrap().scores
        );
        // Resumed ingestion stays equivalent.
        let mut a = engine.clone();
        let mut b = restored;
        let extra = Sample::sparse("pos", vec![(1, 4.0)]);
        a.observe(&extra).unwrap();
        b.observe(&extra).unwrap();
        assert_eq!(a.scores().unwrap().scores, b.scores().unwrap().scores);
        assert!(Engine::from_snapshot_json("{\"version\":99}").is_err());
    }
}
