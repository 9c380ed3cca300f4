//! Hierarchical polynomial feature expansion.
//!
//! The candidate set starts as the original variables and grows by products
//! of selected monomials with newly selected ones, capped in order and
//! deduplicated as factor multisets. Candidate order is append-only, so a
//! candidate index means the same monomial at every later step. New features
//! are standardized against the training split at the step they are created
//! and the statistics are frozen for test-time evaluation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{neighborhood_fingerprint, Dataset, InfoMatrix};
use crate::neighbors::NeighborhoodIndex;

/// A product of original variable indices, kept sorted. `[2, 6, 6]` is
/// `x3 * x7^2` in 1-based naming.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial {
    factors: Vec<u32>,
}

impl Monomial {
    pub fn new(mut factors: Vec<u32>) -> Self {
        factors.sort_unstable();
        Monomial { factors }
    }

    pub fn variable(v: u32) -> Self {
        Monomial { factors: vec![v] }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    #[inline]
    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    /// Multiset product: `x1x2 * x1 = x1^2 x2`.
    pub fn product(&self, other: &Monomial) -> Monomial {
        let mut f = Vec::with_capacity(self.factors.len() + other.factors.len());
        f.extend_from_slice(&self.factors);
        f.extend_from_slice(&other.factors);
        Monomial::new(f)
    }

    /// Human-readable name like `x3*x7^2`.
    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.factors.len() {
            let v = self.factors[i];
            let mut mult = 1;
            while i + mult < self.factors.len() && self.factors[i + mult] == v {
                mult += 1;
            }
            if !out.is_empty() {
                out.push('*');
            }
            let name = names
                .get(v as usize)
                .cloned()
                .unwrap_or_else(|| format!("x{}", v + 1));
            out.push_str(&name);
            if mult > 1 {
                out.push_str(&format!("^{mult}"));
            }
            i += mult;
        }
        out
    }
}

/// Frozen standardization statistics for one feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub scale: f64,
}

impl Stat {
    pub const IDENTITY: Stat = Stat {
        mean: 0.0,
        scale: 1.0,
    };

    #[inline]
    fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }
}

fn column_stat(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = crate::math::sqrt(var);
    Stat {
        mean,
        scale: if sd < 1e-12 { 1.0 } else { sd },
    }
}

/// Candidate monomials with their frozen standardization, plus the cumulative
/// and newly selected sets driving the expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    input_dim: usize,
    input_stats: Vec<Stat>,
    candidates: Vec<Monomial>,
    feature_stats: Vec<Stat>,
    selected: BTreeSet<usize>,
    newly_selected: BTreeSet<usize>,
}

impl FeatureMap {
    /// Identity map over the original variables. With `standardize` the input
    /// columns are centered and scaled by the training sample statistics.
    pub fn new(ds: &Dataset, standardize: bool) -> Self {
        let p = ds.p();
        let input_stats = if standardize {
            (0..p)
                .map(|j| {
                    let col: Vec<f64> = (0..ds.n()).map(|i| ds.row(i)[j]).collect();
                    column_stat(&col)
                })
                .collect()
        } else {
            vec![Stat::IDENTITY; p]
        };
        FeatureMap {
            input_dim: p,
            input_stats,
            candidates: (0..p as u32).map(Monomial::variable).collect(),
            feature_stats: vec![Stat::IDENTITY; p],
            selected: BTreeSet::new(),
            newly_selected: BTreeSet::new(),
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidate(&self, j: usize) -> &Monomial {
        &self.candidates[j]
    }

    pub fn candidates(&self) -> &[Monomial] {
        &self.candidates
    }

    pub fn selected(&self) -> &BTreeSet<usize> {
        &self.selected
    }

    pub fn newly_selected(&self) -> &BTreeSet<usize> {
        &self.newly_selected
    }

    pub fn input_stats(&self) -> &[Stat] {
        &self.input_stats
    }

    pub fn feature_stats(&self) -> &[Stat] {
        &self.feature_stats
    }

    /// Records the support of a sparse eigenvector as the newly selected set
    /// and folds it into the cumulative selection.
    pub fn select_from_xi(&mut self, support: &[usize]) -> Result<()> {
        if support.is_empty() {
            return Err(Error::InvalidArgument(
                "empty support: nothing selected".to_string(),
            ));
        }
        for &j in support {
            if j >= self.candidates.len() {
                return Err(Error::InvalidArgument(format!(
                    "support index {j} out of range for {} candidates",
                    self.candidates.len()
                )));
            }
        }
        self.newly_selected = support.iter().copied().collect();
        self.selected.extend(self.newly_selected.iter().copied());
        Ok(())
    }

    /// Appends all products of selected and newly selected monomials whose
    /// combined order stays within `cap_order`, deduplicated and in factor
    /// order. Returns the appended index range; statistics for the new
    /// features stay identity until a matrix extension freezes them.
    pub fn expand_candidates(&mut self, cap_order: usize) -> core::ops::Range<usize> {
        let start = self.candidates.len();
        let existing: BTreeSet<&Monomial> = self.candidates.iter().collect();
        let mut fresh: BTreeSet<Monomial> = BTreeSet::new();
        for &s in &self.selected {
            for &a in &self.newly_selected {
                let prod = self.candidates[s].product(&self.candidates[a]);
                if prod.order() <= cap_order && !existing.contains(&prod) {
                    fresh.insert(prod);
                }
            }
        }
        for m in fresh {
            self.candidates.push(m);
            self.feature_stats.push(Stat::IDENTITY);
        }
        start..self.candidates.len()
    }

    /// Raw (unstandardized-output) value of candidate `j` on one input row:
    /// the product of standardized input columns.
    fn raw_value(&self, j: usize, row: &[f64]) -> f64 {
        let mut v = 1.0;
        for &f in self.candidates[j].factors() {
            v *= self.input_stats[f as usize].apply(row[f as usize]);
        }
        v
    }

    /// True when `other` extends `self` by appending candidates.
    pub fn is_prefix_of(&self, other: &FeatureMap) -> bool {
        other.input_dim == self.input_dim
            && other.input_stats == self.input_stats
            && other.candidates.len() >= self.candidates.len()
            && other.candidates[..self.candidates.len()] == self.candidates[..]
            && other.feature_stats[..self.candidates.len()] == self.feature_stats[..]
    }
}

/// Evaluated features, column-major: `cols[j][i]` is feature `j` of row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    cols: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    /// `out[c] = feats[i][c] - feats[j][c]` for the first `dim` columns.
    pub fn delta(&self, i: usize, j: usize, dim: usize, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate().take(dim) {
            *slot = self.cols[c][i] - self.cols[c][j];
        }
    }

    /// Gathered difference restricted to a support.
    pub fn delta_gather(&self, i: usize, j: usize, support: &[usize], out: &mut [f64]) {
        for (slot, &c) in out.iter_mut().zip(support.iter()) {
            *slot = self.cols[c][i] - self.cols[c][j];
        }
    }

    pub fn copy_row(&self, i: usize, dim: usize, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate().take(dim) {
            *slot = self.cols[c][i];
        }
    }
}

/// Evaluates the first `dim` candidates on every row of the dataset, using
/// the map's frozen statistics.
pub fn evaluate_features_upto(ds: &Dataset, fm: &FeatureMap, dim: usize) -> Result<FeatureMatrix> {
    if ds.p() != fm.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: fm.input_dim(),
            got: ds.p(),
        });
    }
    if dim > fm.len() {
        return Err(Error::DimensionMismatch {
            expected: fm.len(),
            got: dim,
        });
    }
    let n = ds.n();
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let stat = fm.feature_stats[j];
        let mut col = Vec::with_capacity(n);
        for i in 0..n {
            col.push(stat.apply(fm.raw_value(j, ds.row(i))));
        }
        cols.push(col);
    }
    Ok(FeatureMatrix { n, cols })
}

/// Evaluates every candidate; see [`evaluate_features_upto`].
pub fn evaluate_features(ds: &Dataset, fm: &FeatureMap) -> Result<FeatureMatrix> {
    evaluate_features_upto(ds, fm, fm.len())
}

/// Evaluates freshly appended candidates on the training split, freezes their
/// standardization statistics into the map, and appends the standardized
/// columns to the matrix.
pub fn extend_feature_matrix(
    feats: &mut FeatureMatrix,
    fm: &mut FeatureMap,
    ds: &Dataset,
    new: core::ops::Range<usize>,
) -> Result<()> {
    if feats.n != ds.n() || ds.p() != fm.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.n(),
            got: feats.n,
        });
    }
    if feats.dim() != new.start || new.end > fm.len() {
        return Err(Error::NotAnExtension);
    }
    for j in new {
        let mut col: Vec<f64> = (0..ds.n()).map(|i| fm.raw_value(j, ds.row(i))).collect();
        let stat = column_stat(&col);
        fm.feature_stats[j] = stat;
        for v in &mut col {
            *v = stat.apply(*v);
        }
        feats.cols.push(col);
    }
    Ok(())
}

/// Extends an information matrix to a larger feature map by computing only
/// the new rows and columns; the old block is reused unchanged. Requires the
/// neighborhoods to be the ones the matrix was built from.
pub fn extend_info_matrix(
    d_old: &InfoMatrix,
    feats_new: &FeatureMatrix,
    fm_old: &FeatureMap,
    fm_new: &FeatureMap,
    labels: &[i8],
    nbrs: &NeighborhoodIndex,
) -> Result<InfoMatrix> {
    if !fm_old.is_prefix_of(fm_new) {
        return Err(Error::NotAnExtension);
    }
    let old_dim = fm_old.len();
    let new_dim = fm_new.len();
    if d_old.dim() != old_dim || feats_new.dim() != new_dim {
        return Err(Error::DimensionMismatch {
            expected: old_dim,
            got: d_old.dim(),
        });
    }
    let i = d_old.sample_index;
    if neighborhood_fingerprint(nbrs, i) != d_old.nbrs_fingerprint {
        return Err(Error::NeighborhoodsChanged);
    }
    if new_dim == old_dim {
        return Ok(d_old.clone());
    }
    let (neg, pos) = nbrs.class_lists(labels, i)?;
    let mut entries = d_old.entries.grown(new_dim);
    let inv_k = 1.0 / nbrs.k as f64;
    let mut delta = vec![0.0f64; new_dim];
    for (list, sign) in [(neg, 1.0), (pos, -1.0)] {
        for &j in list {
            feats_new.delta(i, j, new_dim, &mut delta);
            let c = sign * inv_k;
            for a in old_dim..new_dim {
                for b in 0..=a {
                    let v = entries.get(a, b) + c * delta[a] * delta[b];
                    entries.set(a, b, v);
                }
            }
        }
    }
    Ok(InfoMatrix {
        sample_index: i,
        entries,
        nbrs_fingerprint: d_old.nbrs_fingerprint,
    })
}

/// From-scratch reference used to cross-check the incremental path.
pub fn info_matrix_from_scratch(
    feats: &FeatureMatrix,
    labels: &[i8],
    i: usize,
    nbrs: &NeighborhoodIndex,
) -> Result<InfoMatrix> {
    crate::metric::info_matrix(feats, labels, i, nbrs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::neighbors::build_neighborhoods;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds5() -> Dataset {
        let mut x = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..12 {
            for _ in 0..5 {
                x.push(rng.gen_range(-2.0..2.0));
            }
        }
        let y = (0..12).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Dataset::new(x, 5, y, None).unwrap()
    }

    #[test]
    fn select_maps_support_to_monomials() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 2]).unwrap();
        assert_eq!(
            fm.newly_selected().iter().copied().collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert_eq!(
            fm.selected().iter().copied().collect::<Vec<_>>(),
            vec![0, 2]
        );
    }

    #[test]
    fn select_repeats_keep_selected_stable() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 2]).unwrap();
        fm.select_from_xi(&[2]).unwrap();
        assert_eq!(
            fm.selected().iter().copied().collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert_eq!(
            fm.newly_selected().iter().copied().collect::<Vec<_>>(),
            vec![2]
        );
    }

    #[test]
    fn select_rejects_empty_and_out_of_range() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        assert!(fm.select_from_xi(&[]).is_err());
        assert!(fm.select_from_xi(&[99]).is_err());
    }

    #[test]
    fn expand_first_step() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 1]).unwrap();
        let new = fm.expand_candidates(4);
        assert_eq!(new, 5..8);
        assert_eq!(fm.len(), 8);
        let added: Vec<&Monomial> = (5..8).map(|j| fm.candidate(j)).collect();
        assert_eq!(added[0].factors(), &[0, 0]); // x1^2
        assert_eq!(added[1].factors(), &[0, 1]); // x1*x2
        assert_eq!(added[2].factors(), &[1, 1]); // x2^2
    }

    #[test]
    fn expand_interaction_products() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 1]).unwrap();
        fm.expand_candidates(4); // adds x1^2 (5), x1*x2 (6), x2^2 (7)
        fm.select_from_xi(&[6]).unwrap(); // newly selected: x1*x2
        let new = fm.expand_candidates(4);
        let added: Vec<Vec<u32>> = new.map(|j| fm.candidate(j).factors().to_vec()).collect();
        // products of S = {x1, x2, x1x2} with A = {x1x2}, order <= 4
        assert_eq!(
            added,
            vec![vec![0, 0, 1], vec![0, 0, 1, 1], vec![0, 1, 1]]
        );
    }

    #[test]
    fn expand_respects_cap_order() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0]).unwrap();
        fm.expand_candidates(4); // x1^2
        fm.select_from_xi(&[5]).unwrap(); // x1^2
        fm.expand_candidates(4); // x1^3 (order 3), x1^4 (order 4)
        let before = fm.len();
        fm.select_from_xi(&[before - 1]).unwrap(); // x1^4
        let new = fm.expand_candidates(4);
        assert!(new.is_empty(), "all products exceed the cap");
    }

    #[test]
    fn expand_idempotent_and_duplicate_free() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 1]).unwrap();
        fm.expand_candidates(4);
        let len = fm.len();
        let again = fm.expand_candidates(4);
        assert!(again.is_empty());
        assert_eq!(fm.len(), len);
        let mut seen = BTreeSet::new();
        for m in fm.candidates() {
            assert!(seen.insert(m.factors().to_vec()), "duplicate {m:?}");
            assert!(m.order() <= 4);
        }
    }

    #[test]
    fn candidate_indices_are_stable() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, false);
        fm.select_from_xi(&[0, 1]).unwrap();
        fm.expand_candidates(4);
        let snapshot: Vec<Monomial> = fm.candidates().to_vec();
        fm.select_from_xi(&[5, 6]).unwrap();
        fm.expand_candidates(4);
        assert_eq!(&fm.candidates()[..snapshot.len()], snapshot.as_slice());
    }

    #[test]
    fn squaring_without_standardization() {
        let ds = Dataset::new(vec![1.0, 2.0, 3.0], 1, vec![1, -1, 1], None).unwrap();
        let mut fm = FeatureMap::new(&ds, false);
        fm.candidates.push(Monomial::new(vec![0, 0]));
        fm.feature_stats.push(Stat::IDENTITY);
        let feats = evaluate_features(&ds, &fm).unwrap();
        assert_eq!(feats.col(1), &[1.0, 4.0, 9.0]);
    }

    #[test]
    fn order_one_reproduces_standardized_inputs() {
        let ds = ds5();
        let fm = FeatureMap::new(&ds, true);
        let feats = evaluate_features(&ds, &fm).unwrap();
        for j in 0..ds.p() {
            let col = feats.col(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (col.len() as f64 - 1.0);
            assert!(mean.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn new_features_standardized_on_creation() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, true);
        let mut feats = evaluate_features(&ds, &fm).unwrap();
        fm.select_from_xi(&[0, 1]).unwrap();
        let new = fm.expand_candidates(4);
        extend_feature_matrix(&mut feats, &mut fm, &ds, new.clone()).unwrap();
        for j in new {
            let col = feats.col(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (col.len() as f64 - 1.0);
            assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10, "column {j} sd");
        }
    }

    #[test]
    fn frozen_stats_reused_on_fresh_rows() {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, true);
        let mut feats = evaluate_features(&ds, &fm).unwrap();
        fm.select_from_xi(&[0, 1]).unwrap();
        let new = fm.expand_candidates(4);
        extend_feature_matrix(&mut feats, &mut fm, &ds, new).unwrap();
        // Evaluating from scratch must agree with the incremental build.
        let again = evaluate_features(&ds, &fm).unwrap();
        for j in 0..fm.len() {
            for i in 0..ds.n() {
                assert!((feats.value(i, j) - again.value(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn render_names() {
        let names: Vec<String> = (1..=8).map(|i| format!("x{i}")).collect();
        assert_eq!(Monomial::new(vec![2, 6, 6]).render(&names), "x3*x7^2");
        assert_eq!(Monomial::new(vec![0]).render(&names), "x1");
    }

    fn expanded_fixture() -> (Dataset, FeatureMap, FeatureMatrix, NeighborhoodIndex) {
        let ds = ds5();
        let mut fm = FeatureMap::new(&ds, true);
        let mut feats = evaluate_features(&ds, &fm).unwrap();
        let nbrs =
            build_neighborhoods(&feats, ds.labels(), 2, &SymMatrix::identity(5), 0).unwrap();
        fm.select_from_xi(&[0, 3]).unwrap();
        let new = fm.expand_candidates(4);
        extend_feature_matrix(&mut feats, &mut fm, &ds, new).unwrap();
        (ds, fm, feats, nbrs)
    }

    #[test]
    fn extend_info_matrix_matches_scratch() {
        let (ds, fm_new, feats_new, nbrs) = expanded_fixture();
        let fm_old = FeatureMap::new(&ds, true);
        let feats_old = evaluate_features(&ds, &fm_old).unwrap();
        for i in 0..ds.n() {
            let d_old = crate::metric::info_matrix(&feats_old, ds.labels(), i, &nbrs).unwrap();
            let inc =
                extend_info_matrix(&d_old, &feats_new, &fm_old, &fm_new, ds.labels(), &nbrs)
                    .unwrap();
            let scratch =
                info_matrix_from_scratch(&feats_new, ds.labels(), i, &nbrs).unwrap();
            for a in 0..fm_new.len() {
                for b in 0..=a {
                    assert!(
                        (inc.entries.get(a, b) - scratch.entries.get(a, b)).abs() <= 1e-10,
                        "mismatch at ({a}, {b})"
                    );
                }
            }
        }
    }

    #[test]
    fn extend_info_matrix_noop_when_no_growth() {
        let (ds, fm, feats, nbrs) = expanded_fixture();
        let d = crate::metric::info_matrix(&feats, ds.labels(), 0, &nbrs).unwrap();
        let same = extend_info_matrix(&d, &feats, &fm, &fm, ds.labels(), &nbrs).unwrap();
        assert_eq!(same.entries, d.entries);
    }

    #[test]
    fn extend_info_matrix_rejects_changed_neighborhoods() {
        let (ds, fm_new, feats_new, nbrs) = expanded_fixture();
        let fm_old = FeatureMap::new(&ds, true);
        let feats_old = evaluate_features(&ds, &fm_old).unwrap();
        let d_old = crate::metric::info_matrix(&feats_old, ds.labels(), 0, &nbrs).unwrap();
        let other =
            build_neighborhoods(&feats_old, ds.labels(), 2, &SymMatrix::identity(5), 9).unwrap();
        assert!(matches!(
            extend_info_matrix(&d_old, &feats_new, &fm_old, &fm_new, ds.labels(), &other),
            Err(Error::NeighborhoodsChanged)
        ));
    }

    #[test]
    fn extend_info_matrix_rejects_non_extension() {
        let (ds, fm_new, feats_new, nbrs) = expanded_fixture();
        let other_ds = ds5();
        let mut fm_other = FeatureMap::new(&other_ds, true);
        fm_other.select_from_xi(&[1, 2]).unwrap();
        fm_other.expand_candidates(4);
        let feats_old = evaluate_features(&ds, &FeatureMap::new(&ds, true)).unwrap();
        let d_old = crate::metric::info_matrix(&feats_old, ds.labels(), 0, &nbrs).unwrap();
        assert!(matches!(
            extend_info_matrix(&d_old, &feats_new, &fm_other, &fm_new, ds.labels(), &nbrs),
            Err(Error::NotAnExtension)
        ));
    }
}
