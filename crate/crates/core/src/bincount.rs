//! Mutual information, chi-square and Gini index over (bin, class) tables.
//!
//! All three accept fractional (decayed) counts: they are count-ratio
//! formulas and apply unchanged.

use serde::{Deserialize, Serialize};

use crate::discretize::BinTable;
use crate::error::{Error, Result};

/// The five screening criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    TScore,
    Fisher,
    Gini,
    ChiSquare,
    MutualInfo,
}

/// Which state a criterion is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodFamily {
    /// Running means and variances (T-score, Fisher).
    MeanVariance,
    /// Quantile-binned contingency counts (Gini, chi-square, MI).
    BinCount,
}

impl Method {
    pub fn family(self) -> MethodFamily {
        match self {
            Method::TScore | Method::Fisher => MethodFamily::MeanVariance,
            Method::Gini | Method::ChiSquare | Method::MutualInfo => MethodFamily::BinCount,
        }
    }

    /// Rank direction: every criterion ranks larger-is-better except the
    /// Gini index, where the smallest impurity wins.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Method::Gini)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::TScore => "t_score",
            Method::Fisher => "fisher",
            Method::Gini => "gini",
            Method::ChiSquare => "chi_square",
            Method::MutualInfo => "mutual_info",
        }
    }

    pub const ALL: [Method; 5] = [
        Method::TScore,
        Method::Fisher,
        Method::Gini,
        Method::ChiSquare,
        Method::MutualInfo,
    ];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-feature scores for one criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub method: Method,
    pub higher_is_better: bool,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, method: Method) -> Self {
        ScoreVector {
            scores,
            higher_is_better: method.higher_is_better(),
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn require_mass(table: &BinTable, what: &str) -> Result<()> {
    if table.n <= 0.0 {
        return Err(Error::Degenerate(format!("{what} of an empty table")));
    }
    Ok(())
}

/// Mutual information (natural log) between the binned feature and the
/// label. Zero-count cells contribute nothing.
pub fn mutual_information(table: &BinTable) -> Result<f64> {
    require_mass(table, "mutual information")?;
    let n = table.n;
    let mut info = 0.0;
    for (b, row) in table.joint.iter().enumerate() {
        for (c, &cell) in row.iter().enumerate() {
            if cell <= 0.0 {
                continue;
            }
            let p_joint = cell / n;
            let p_bin = table.row_totals[b] / n;
            let p_class = table.col_totals[c] / n;
            info += p_joint * (p_joint / (p_bin * p_class)).ln();
        }
    }
    Ok(info)
}

/// Pearson chi-square statistic against the independence expectation.
/// Cells whose expected count is zero (both marginals zero) are skipped.
pub fn chi_square(table: &BinTable) -> Result<f64> {
    require_mass(table, "chi-square")?;
    let n = table.n;
    let mut stat = 0.0;
    for (b, row) in table.joint.iter().enumerate() {
        for (c, &cell) in row.iter().enumerate() {
            let expected = table.row_totals[b] * table.col_totals[c] / n;
            if expected <= 0.0 {
                continue;
            }
            let diff = cell - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(stat)
}

/// Minimum two-way Gini impurity over the K-1 bin-boundary split points.
/// An empty side contributes zero impurity.
pub fn gini_index(table: &BinTable) -> Result<f64> {
    require_mass(table, "Gini index")?;
    let k = table.joint.len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "Gini index needs at least two bins".into(),
        ));
    }
    let classes = table.col_totals.len();
    let n = table.n;
    let mut below = vec![0.0; classes];
    let mut below_total = 0.0;
    let mut best = f64::INFINITY;
    for boundary in 0..k - 1 {
        for (c, acc) in below.iter_mut().enumerate() {
            *acc += table.joint[boundary][c];
        }
        below_total += table.row_totals[boundary];
        let above_total = n - below_total;

        let side = |counts_sq_sum: f64, total: f64| -> f64 {
            if total <= 0.0 {
                0.0
            } else {
                (total / n) * (1.0 - counts_sq_sum / (total * total))
            }
        };
        let below_sq: f64 = below.iter().map(|&x| x * x).sum();
        let above_sq: f64 = (0..classes)
            .map(|c| {
                let above = table.col_totals[c] - below[c];
                above * above
            })
            .sum();
        let gini = side(below_sq, below_total) + side(above_sq, above_total);
        if gini < best {
            best = gini;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(joint: Vec<Vec<f64>>) -> BinTable {
        let row_totals: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let classes = joint[0].len();
        let col_totals: Vec<f64> = (0..classes)
            .map(|c| joint.iter().map(|r| r[c]).sum())
            .collect();
        let n = row_totals.iter().sum();
        BinTable {
            joint,
            row_totals,
            col_totals,
            n,
        }
    }

    #[test]
    fn mi_zero_under_independence() {
        // Joint proportional to the product of marginals.
        let t = table(vec![vec![6.0, 2.0], vec![3.0, 1.0], vec![9.0, 3.0]]);
        assert!(mutual_information(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mi_matches_hand_value() {
        let t = table(vec![vec![10.0, 0.0], vec![0.0, 10.0]]);
        assert!((mutual_information(&t).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mi_invariant_to_merging_identical_profile_bins() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let mut joint: Vec<Vec<f64>> = (0..5)
                .map(|_| {
                    vec![
                        rng.random_range(1..20) as f64,
                        rng.random_range(1..20) as f64,
                    ]
                })
                .collect();
            // Give two bins identical class profiles, then merge them.
            let profile = joint[1].clone();
            joint[3] = profile.iter().map(|x| x * 2.0).collect();
            let before = mutual_information(&table(joint.clone())).unwrap();
            let merged_row: Vec<f64> = joint[1].iter().zip(&joint[3]).map(|(a, b)| a + b).collect();
            joint[1] = merged_row;
            joint.remove(3);
            let after = mutual_information(&table(joint)).unwrap();
            assert!((before - after).abs() < 1e-12);
        }
    }

    #[test]
    fn mi_nonnegative_on_random_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let joint: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    (0..3)
                        .map(|_| rng.random_range(0..15) as f64)
                        .collect::<Vec<_>>()
                })
                .collect();
            let t = table(joint);
            if t.n <= 0.0 {
                continue;
            }
            assert!(mutual_information(&t).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn chi_square_zero_under_independence() {
        let t = table(vec![vec![6.0, 2.0], vec![3.0, 1.0], vec![9.0, 3.0]]);
        assert!(chi_square(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chi_square_matches_hand_value() {
        // All expected cells 5, every observed off by 5: 4 * 25/5 = 20.
        let t = table(vec![vec![10.0, 0.0], vec![0.0, 10.0]]);
        assert!((chi_square(&t).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_skips_zero_rows() {
        let with_zero_row = table(vec![vec![10.0, 0.0], vec![0.0, 0.0], vec![0.0, 10.0]]);
        let without = table(vec![vec![10.0, 0.0], vec![0.0, 10.0]]);
        assert_eq!(
            chi_square(&with_zero_row).unwrap(),
            chi_square(&without).unwrap()
        );
    }

    #[test]
    fn gini_zero_on_perfect_split() {
        let t = table(vec![vec![7.0, 0.0], vec![5.0, 0.0], vec![0.0, 9.0]]);
        assert!(gini_index(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gini_matches_hand_value() {
        // Both split sides conditionally (1/2, 1/2): impurity 0.5.
        let t = table(vec![vec![5.0, 5.0], vec![5.0, 5.0]]);
        assert!((gini_index(&t).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gini_single_occupied_bin_gives_full_impurity() {
        let t = table(vec![vec![6.0, 2.0], vec![0.0, 0.0]]);
        // One side empty: score equals the impurity of the whole table.
        let p0: f64 = 6.0 / 8.0;
        let p1: f64 = 2.0 / 8.0;
        let expected = 1.0 - p0 * p0 - p1 * p1;
        assert!((gini_index(&t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn gini_bounds_and_scale_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let joint: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    (0..3)
                        .map(|_| rng.random_range(0..9) as f64)
                        .collect::<Vec<_>>()
                })
                .collect();
            let t = table(joint.clone());
            if t.n <= 0.0 {
                continue;
            }
            let g = gini_index(&t).unwrap();
            assert!((0.0..=1.0 - 1.0 / 3.0 + 1e-12).contains(&g), "gini {g}");
            let scaled = table(
                joint
                    .iter()
                    .map(|r| r.iter().map(|x| x * 3.5).collect())
                    .collect(),
            );
            assert!((gini_index(&scaled).unwrap() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_tables_are_degenerate() {
        let t = table(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(mutual_information(&t), Err(Error::Degenerate(_))));
        assert!(matches!(chi_square(&t), Err(Error::Degenerate(_))));
        assert!(matches!(gini_index(&t), Err(Error::Degenerate(_))));
    }
}
