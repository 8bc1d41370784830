//! Near-equal-frequency binning of finalized quantile summaries and the
//! per-class contingency tables the bin-count criteria consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::SubSummary;

/// Bin counts for one feature plus the values at which the sweep advanced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinCounts {
    /// One count per bin; decayed streams yield fractional counts.
    pub counts: Vec<f64>,
    /// Feature values at the K-1 bin boundaries, nondecreasing. A value
    /// spanning several cutoffs repeats (the skipped bins stay zero).
    pub cutoff_values: Vec<f64>,
    pub n_total: f64,
}

/// K x C joint counts of (bin, class) with marginals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinTable {
    /// `joint[bin][class]`.
    pub joint: Vec<Vec<f64>>,
    pub row_totals: Vec<f64>,
    pub col_totals: Vec<f64>,
    pub n: f64,
}

/// Sweeps a finalized summary into `k_bins` near-equal-frequency bins.
///
/// Cutoff positions sit at multiples of floor(N/K); tuples are assigned
/// whole (a tuple's weight is never split), and the bin index advances —
/// possibly skipping bins — once the accumulated weight reaches the next
/// cutoff position.
pub fn aggregate_bins(summary: &SubSummary, n_total: f64, k_bins: usize) -> Result<BinCounts> {
    if k_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {k_bins}"
        )));
    }
    let mut counts = vec![0.0; k_bins];
    if summary.is_empty() {
        return Ok(BinCounts {
            counts,
            cutoff_values: Vec::new(),
            n_total: 0.0,
        });
    }

    let d_inter = (n_total / k_bins as f64).floor();
    let positions: Vec<f64> = (1..k_bins).map(|i| i as f64 * d_inter).collect();
    let mut cutoff_values = Vec::with_capacity(k_bins - 1);
    let mut bin = 0usize;
    let mut accumulated = 0.0;
    for t in summary.tuples() {
        counts[bin] += t.weight;
        accumulated += t.weight;
        while bin < k_bins - 1 && accumulated >= positions[bin] {
            cutoff_values.push(t.value);
            bin += 1;
        }
    }
    // A short final tuple run can leave trailing cutoffs unreached when the
    // caller's n_total exceeds the summary mass; pin them at the last value.
    if let Some(&last) = cutoff_values.last() {
        while cutoff_values.len() < k_bins - 1 {
            cutoff_values.push(last);
        }
    } else if let Some(t) = summary.tuples().last() {
        cutoff_values.resize(k_bins - 1, t.value);
    }
    Ok(BinCounts {
        counts,
        cutoff_values,
        n_total,
    })
}

/// Builds the joint (bin, class) table for one feature from its per-class
/// summaries. Bins are global: cutoffs come from the merge of all class
/// summaries, and each class's per-bin mass is read off its own summary's
/// rank function at those shared cutoff values.
pub fn build_table(per_class: &[SubSummary], k_bins: usize) -> Result<BinTable> {
    if per_class.len() < 2 {
        return Err(Error::Degenerate(
            "contingency table needs at least two classes".into(),
        ));
    }
    let merged = per_class
        .iter()
        .fold(SubSummary::empty(), |acc, s| SubSummary::merge(&acc, s));
    if merged.is_empty() {
        return Err(Error::Degenerate(
            "contingency table needs at least one non-empty class summary".into(),
        ));
    }
    let bins = aggregate_bins(&merged, merged.total_weight(), k_bins)?;

    let classes = per_class.len();
    let mut joint = vec![vec![0.0; classes]; k_bins];
    for (c, summary) in per_class.iter().enumerate() {
        let mut prev = 0.0;
        for (b, row) in joint.iter_mut().enumerate() {
            let upto = if b + 1 < k_bins {
                summary.rank_at(bins.cutoff_values[b])
            } else {
                summary.total_weight()
            };
            row[c] = (upto - prev).max(0.0);
            prev = upto;
        }
    }
    let row_totals: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..classes)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::StreamSketch;

    fn exact_summary(values: &[f64]) -> SubSummary {
        let mut sketch = StreamSketch::new(0.0001).unwrap();
        for &v in values {
            sketch.insert(v, 1.0).unwrap();
        }
        sketch.finalize()
    }

    #[test]
    fn cutoff_positions_match_hand_values() {
        // N=100, K=5: interval 20, cutoff positions 20, 40, 60, 80.
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let bins = aggregate_bins(&exact_summary(&values), 100.0, 5).unwrap();
        assert_eq!(bins.counts, vec![20.0; 5]);
        assert_eq!(bins.cutoff_values, vec![20.0, 40.0, 60.0, 80.0]);
    }

    #[test]
    fn single_value_occupies_one_bin() {
        let values = vec![42.0; 100];
        let bins = aggregate_bins(&exact_summary(&values), 100.0, 5).unwrap();
        assert_eq!(bins.counts, vec![100.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(bins.cutoff_values, vec![42.0; 4]);
    }

    #[test]
    fn empty_summary_yields_zero_bins() {
        let bins = aggregate_bins(&SubSummary::empty(), 0.0, 4).unwrap();
        assert_eq!(bins.counts, vec![0.0; 4]);
        assert!(bins.cutoff_values.is_empty());
    }

    #[test]
    fn rejects_single_bin() {
        assert!(matches!(
            aggregate_bins(&SubSummary::empty(), 0.0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn equal_frequency_tendency_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let values: Vec<f64> = (0..999).map(|_| rng.random::<f64>()).collect();
        let bins = aggregate_bins(&exact_summary(&values), 999.0, 5).unwrap();
        let d_inter = (999.0f64 / 5.0).floor();
        for &c in &bins.counts {
            assert!((c - d_inter).abs() <= 1.0 + 4.0, "count {c} vs {d_inter}");
        }
        let mut prev = f64::NEG_INFINITY;
        for &c in &bins.cutoff_values {
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn identical_class_summaries_split_evenly() {
        let values: Vec<f64> = (1..=50).map(f64::from).collect();
        let a = exact_summary(&values);
        let b = exact_summary(&values);
        let table = build_table(&[a, b], 5).unwrap();
        for row in &table.joint {
            assert_eq!(row[0], row[1]);
        }
        assert_eq!(table.n, 100.0);
    }

    #[test]
    fn separated_classes_give_diagonal_table() {
        let low: Vec<f64> = (1..=50).map(f64::from).collect();
        let high: Vec<f64> = (51..=100).map(f64::from).collect();
        let table = build_table(&[exact_summary(&low), exact_summary(&high)], 2).unwrap();
        assert_eq!(table.joint, vec![vec![50.0, 0.0], vec![0.0, 50.0]]);
        assert_eq!(table.row_totals, vec![50.0, 50.0]);
        assert_eq!(table.col_totals, vec![50.0, 50.0]);
    }

    #[test]
    fn empty_class_yields_zero_column() {
        let values: Vec<f64> = (1..=30).map(f64::from).collect();
        let table = build_table(&[exact_summary(&values), SubSummary::empty()], 3).unwrap();
        for row in &table.joint {
            assert_eq!(row[1], 0.0);
        }
        assert_eq!(table.col_totals[1], 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let values: Vec<f64> = (1..=30).map(f64::from).collect();
        assert!(matches!(
            build_table(&[exact_summary(&values)], 3),
            Err(Error::Degenerate(_))
        ));
    }
}
