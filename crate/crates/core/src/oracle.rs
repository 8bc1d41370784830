//! Offline reference pipeline: exact batch criteria and exact
//! equal-frequency binning, used as ground truth when measuring how far the
//! streaming pipeline drifts at a given precision.
//!
//! Every convention deliberately mirrors the online modules (population
//! variance, natural log, bin-boundary Gini candidates, whole runs of equal
//! values never split across a cutoff) so that residual differences isolate
//! sketch approximation and nothing else.

use crate::bincount::{self, Method, MethodFamily, ScoreVector};
use crate::discretize::{BinCounts, BinTable};
use crate::engine::{Ranking, Sample};
use crate::error::{Error, Result};
use crate::meanvar::ClassMoments;
use crate::par;

/// An in-memory labeled dataset, column-major.
#[derive(Debug, Clone)]
pub struct DenseDataset {
    /// `columns[feature][sample]`.
    pub columns: Vec<Vec<f64>>,
    /// Class ids per sample, densely numbered from 0.
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl DenseDataset {
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument("row and label counts differ".into()));
        }
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument("ragged feature rows".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                columns[j].push(v);
            }
        }
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Ok(DenseDataset {
            columns,
            labels,
            n_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    /// Replays the dataset as engine samples (labels stringified).
    pub fn to_samples(&self) -> Vec<Sample> {
        (0..self.n())
            .map(|i| {
                let row: Vec<f64> = self.columns.iter().map(|col| col[i]).collect();
                Sample::dense(self.labels[i].to_string(), row)
            })
            .collect()
    }

    /// Sparse replay keeping only non-zero entries.
    pub fn to_sparse_samples(&self) -> Vec<Sample> {
        (0..self.n())
            .map(|i| {
                let pairs: Vec<(usize, f64)> = self
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|(_, col)| col[i] != 0.0)
                    .map(|(j, col)| (j, col[i]))
                    .collect();
                Sample::sparse(self.labels[i].to_string(), pairs)
            })
            .collect()
    }
}

/// Exact equal-frequency binning of one column: sort, then apply the same
/// cutoff rule as the online sweep (interval floor(N/K), whole equal-value
/// runs assigned to one bin, bins advancing once the accumulated count
/// reaches the next cutoff position).
pub fn offline_bins(column: &[f64], k_bins: usize) -> Result<BinCounts> {
    if k_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {k_bins}"
        )));
    }
    if column.len() < k_bins {
        return Err(Error::InvalidArgument(format!(
            "need at least {k_bins} samples, got {}",
            column.len()
        )));
    }
    let mut sorted = column.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let d_inter = (n as f64 / k_bins as f64).floor();
    let positions: Vec<f64> = (1..k_bins).map(|i| i as f64 * d_inter).collect();

    let mut counts = vec![0.0; k_bins];
    let mut cutoff_values = Vec::with_capacity(k_bins - 1);
    let mut bin = 0usize;
    let mut accumulated = 0.0;
    let mut i = 0;
    while i < n {
        let value = sorted[i];
        let mut run = 0.0;
        while i < n && sorted[i] == value {
            run += 1.0;
            i += 1;
        }
        counts[bin] += run;
        accumulated += run;
        while bin < k_bins - 1 && accumulated >= positions[bin] {
            cutoff_values.push(value);
            bin += 1;
        }
    }
    if let Some(&last) = cutoff_values.last() {
        while cutoff_values.len() < k_bins - 1 {
            cutoff_values.push(last);
        }
    }
    Ok(BinCounts {
        counts,
        cutoff_values,
        n_total: n as f64,
    })
}

/// Exact joint (bin, class) table for one column, with global cutoffs from
/// the whole column and per-class counts by direct interval membership.
pub fn offline_table(
    column: &[f64],
    labels: &[usize],
    n_classes: usize,
    k_bins: usize,
) -> Result<BinTable> {
    if n_classes < 2 {
        return Err(Error::Degenerate(
            "contingency table needs at least two classes".into(),
        ));
    }
    let bins = offline_bins(column, k_bins)?;
    let cutoffs = &bins.cutoff_values;
    let mut joint = vec![vec![0.0; n_classes]; k_bins];
    for (&v, &c) in column.iter().zip(labels) {
        // First bin whose upper cutoff is >= v; values above every cutoff
        // land in the last bin. Ties with a cutoff belong below it.
        let bin = cutoffs.partition_point(|&cut| cut < v);
        joint[bin][c] += 1.0;
    }
    let row_totals: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..n_classes)
        .map(|c| joint.iter().map(|r| r[c]).sum())
        .collect();
    let n = row_totals.iter().sum();
    Ok(BinTable {
        joint,
        row_totals,
        col_totals,
        n,
    })
}

fn column_moments(column: &[f64], labels: &[usize], n_classes: usize) -> Vec<ClassMoments> {
    let mut count = vec![0.0f64; n_classes];
    let mut sum = vec![0.0f64; n_classes];
    let mut sum_sq = vec![0.0f64; n_classes];
    for (&v, &c) in column.iter().zip(labels) {
        count[c] += 1.0;
        sum[c] += v;
        sum_sq[c] += v * v;
    }
    (0..n_classes)
        .map(|c| {
            if count[c] == 0.0 {
                return ClassMoments {
                    weight: 0.0,
                    mean: 0.0,
                    variance: 0.0,
                };
            }
            let mean = sum[c] / count[c];
            ClassMoments {
                weight: count[c],
                mean,
                variance: sum_sq[c] / count[c] - mean * mean,
            }
        })
        .collect()
}

/// Batch scores for every feature with the same conventions as the online
/// engine.
pub fn offline_score(dataset: &DenseDataset, method: Method, k_bins: usize) -> Result<ScoreVector> {
    if dataset.n() == 0 {
        return Err(Error::NoSamples);
    }
    if dataset.n_classes < 2 {
        return Err(Error::Degenerate(format!(
            "{method} needs at least two classes"
        )));
    }
    if method == Method::TScore && dataset.n_classes != 2 {
        return Err(Error::Degenerate("t_score is a two-class criterion".into()));
    }
    let results: Vec<Result<f64>> = par::map_indexed(dataset.p(), |j| {
        let column = &dataset.columns[j];
        match method.family() {
            MethodFamily::MeanVariance => {
                let m = column_moments(column, &dataset.labels, dataset.n_classes);
                match method {
                    Method::TScore => Ok(crate::meanvar::t_score(&m[0], &m[1])),
                    Method::Fisher => crate::meanvar::fisher_score(&m),
                    _ => unreachable!(),
                }
            }
            MethodFamily::BinCount => {
                let table = offline_table(column, &dataset.labels, dataset.n_classes, k_bins)?;
                match method {
                    Method::Gini => bincount::gini_index(&table),
                    Method::ChiSquare => bincount::chi_square(&table),
                    Method::MutualInfo => bincount::mutual_information(&table),
                    _ => unreachable!(),
                }
            }
        }
    });
    let mut scores = Vec::with_capacity(results.len());
    for r in results {
        scores.push(r?);
    }
    Ok(ScoreVector::new(scores, method))
}

/// Mean score difference ratio: average absolute per-feature difference,
/// normalized by the offline score range.
pub fn score_diff_ratio(online: &ScoreVector, offline: &ScoreVector) -> Result<f64> {
    if online.len() != offline.len() {
        return Err(Error::InvalidArgument(format!(
            "score vectors of lengths {} and {}",
            online.len(),
            offline.len()
        )));
    }
    if offline.is_empty() {
        return Err(Error::InvalidArgument("empty score vectors".into()));
    }
    let max = offline
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = offline.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if !range.is_finite() || range <= 0.0 {
        return Err(Error::Degenerate(
            "offline score range is degenerate".into(),
        ));
    }
    let sum: f64 = online
        .scores
        .iter()
        .zip(&offline.scores)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / (online.len() as f64 * range))
}

/// Fraction of the offline top `top_fraction` features whose online rank
/// differs from their offline rank.
pub fn misrank_ratio(online: &Ranking, offline: &Ranking, top_fraction: f64) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must lie in (0, 1], got {top_fraction}"
        )));
    }
    let p = offline.order.len();
    if p == 0 || online.order.len() != p {
        return Err(Error::InvalidArgument("mismatched rankings".into()));
    }
    let top = ((top_fraction * p as f64).ceil() as usize).clamp(1, p);
    let mismatched = offline.order[..top]
        .iter()
        .filter(|&&f| online.rank_of[f] != offline.rank_of[f])
        .count();
    Ok(mismatched as f64 / top as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{rank, Engine, ScreenerConfig};
    use rand::{Rng, SeedableRng};

    #[test]
    fn offline_bins_match_hand_values() {
        let column: Vec<f64> = (1..=100).map(f64::from).collect();
        let bins = offline_bins(&column, 5).unwrap();
        assert_eq!(bins.counts, vec![20.0; 5]);
        assert_eq!(bins.cutoff_values, vec![20.0, 40.0, 60.0, 80.0]);
    }

    #[test]
    fn offline_bins_never_split_a_run() {
        let column = vec![7.0; 100];
        let bins = offline_bins(&column, 5).unwrap();
        assert_eq!(bins.counts, vec![100.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn offline_bins_rejects_short_columns() {
        assert!(matches!(
            offline_bins(&[1.0, 2.0], 5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn online_and_offline_bins_agree_at_fine_precision() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(41);
        let column: Vec<f64> = (0..800).map(|_| rng.random::<f64>()).collect();
        let offline = offline_bins(&column, 5).unwrap();
        let mut sketch = crate::sketch::StreamSketch::new(0.0001).unwrap();
        for &v in &column {
            sketch.insert(v, 1.0).unwrap();
        }
        let online =
            crate::discretize::aggregate_bins(&sketch.finalize(), column.len() as f64, 5).unwrap();
        assert_eq!(online.counts, offline.counts);
        assert_eq!(online.cutoff_values, offline.cutoff_values);
    }

    fn random_dataset(seed: u64, n: usize, p: usize, classes: usize) -> DenseDataset {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        DenseDataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn offline_matches_online_t_score() {
        let ds = random_dataset(1, 400, 12, 2);
        let offline = offline_score(&ds, Method::TScore, DEFAULT_BINS_FOR_TESTS).unwrap();
        let mut engine = Engine::new(ScreenerConfig::new(Method::TScore)).unwrap();
        for s in ds.to_samples() {
            engine.observe(&s).unwrap();
        }
        let online = engine.scores().unwrap();
        for (a, b) in online.scores.iter().zip(&offline.scores) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    const DEFAULT_BINS_FOR_TESTS: usize = 5;

    #[test]
    fn constant_feature_scores_zero_in_both_pipelines() {
        let mut ds = random_dataset(2, 200, 3, 2);
        ds.columns[1] = vec![4.2; 200];
        for method in [Method::Fisher, Method::MutualInfo, Method::ChiSquare] {
            let offline = offline_score(&ds, method, 5).unwrap();
            assert_eq!(offline.scores[1], 0.0, "{method}");
        }
        let offline_t = offline_score(&ds, Method::TScore, 5).unwrap();
        assert_eq!(offline_t.scores[1], 0.0);
    }

    #[test]
    fn score_diff_ratio_identity_and_shift() {
        let a = ScoreVector::new(vec![0.0, 0.4, 1.0], Method::MutualInfo);
        assert_eq!(score_diff_ratio(&a, &a).unwrap(), 0.0);
        let shifted = ScoreVector::new(
            a.scores.iter().map(|s| s + 0.1).collect(),
            Method::MutualInfo,
        );
        assert!((score_diff_ratio(&shifted, &a).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn score_diff_ratio_matches_direct_recomputation() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let offline: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let online: Vec<f64> = offline
            .iter()
            .map(|v| v + rng.random_range(-0.05..0.05))
            .collect();
        let range = offline.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - offline.iter().cloned().fold(f64::INFINITY, f64::min);
        let direct: f64 = online
            .iter()
            .zip(&offline)
            .map(|(a, b)| (a - b).abs() / range)
            .sum::<f64>()
            / 50.0;
        let got = score_diff_ratio(
            &ScoreVector::new(online, Method::Gini),
            &ScoreVector::new(offline, Method::Gini),
        )
        .unwrap();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn score_diff_ratio_needs_nondegenerate_range() {
        let flat = ScoreVector::new(vec![0.5; 4], Method::MutualInfo);
        assert!(matches!(
            score_diff_ratio(&flat, &flat),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn misrank_examples() {
        let offline = rank(&ScoreVector::new(
            (0..100).map(|i| 100.0 - i as f64).collect(),
            Method::MutualInfo,
        ));
        assert_eq!(misrank_ratio(&offline, &offline, 0.1).unwrap(), 0.0);

        // Swap two top-decile features: 2 of 10 mismatch.
        let mut swapped: Vec<f64> = (0..100).map(|i| 100.0 - i as f64).collect();
        swapped.swap(3, 7);
        let online = rank(&ScoreVector::new(swapped, Method::MutualInfo));
        assert!((misrank_ratio(&online, &offline, 0.1).unwrap() - 0.2).abs() < 1e-12);

        assert!(matches!(
            misrank_ratio(&offline, &offline, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oracle_is_order_invariant() {
        let ds = random_dataset(7, 300, 6, 3);
        let mut shuffled_rows: Vec<(Vec<f64>, usize)> = (0..ds.n())
            .map(|i| {
                (
                    ds.columns.iter().map(|c| c[i]).collect::<Vec<f64>>(),
                    ds.labels[i],
                )
            })
            .collect();
        shuffled_rows.reverse();
        let rows: Vec<Vec<f64>> = shuffled_rows.iter().map(|(r, _)| r.clone()).collect();
        let labels: Vec<usize> = shuffled_rows.iter().map(|(_, l)| *l).collect();
        let reversed = DenseDataset::from_rows(&rows, labels).unwrap();
        for method in [Method::Fisher, Method::MutualInfo, Method::Gini] {
            let a = offline_score(&ds, method, 5).unwrap();
            let b = offline_score(&reversed, method, 5).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() < 1e-9, "{method}");
            }
        }
    }
}
