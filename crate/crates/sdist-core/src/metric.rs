//! Distances, per-sample information matrices, the discriminant function,
//! exponential loss, and weight-matrix assembly from rank-one updates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::boosting::BoostConfig;
use crate::error::{Error, Result};
use crate::expansion::{FeatureMap, FeatureMatrix};
use crate::linalg::{SparseUnitVector, SymMatrix};
use crate::math;
use crate::neighbors::NeighborhoodIndex;

/// Exponent arguments are clipped to this magnitude before `exp`.
pub const EXP_CLIP: f64 = 700.0;

/// A binary classification dataset: `n` rows of `p` numeric features with
/// labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>, // row-major
    y: Vec<i8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Vec<f64>,
        p: usize,
        y: Vec<i8>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("zero features".to_string()));
        }
        if x.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "matrix has {} entries, expected {}",
                x.len(),
                n * p
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite entry at row {}, column {}",
                bad / p,
                bad % p
            )));
        }
        let mut pos = 0usize;
        let mut neg = 0usize;
        for (i, &l) in y.iter().enumerate() {
            match l {
                1 => pos += 1,
                -1 => neg += 1,
                other => {
                    return Err(Error::InvalidDataset(format!(
                        "label {other} at row {i}; labels must be -1 or +1"
                    )))
                }
            }
        }
        if pos == 0 || neg == 0 {
            return Err(Error::InvalidDataset(
                "both classes must be present".to_string(),
            ));
        }
        let feature_names = match feature_names {
            Some(names) => {
                if names.len() != p {
                    return Err(Error::InvalidDataset(format!(
                        "{} feature names for {p} features",
                        names.len()
                    )));
                }
                names
            }
            None => (1..=p).map(|j| format!("x{j}")).collect(),
        };
        Ok(Dataset {
            n,
            p,
            x,
            y,
            feature_names,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn label(&self, i: usize) -> i8 {
        self.y[i]
    }

    #[inline]
    pub fn labels(&self) -> &[i8] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&l| l == 1).count();
        (self.n - pos, pos)
    }

    /// Rows restricted to an index subset, preserving order.
    pub fn subset(&self, idxs: &[usize]) -> Result<Dataset> {
        let mut x = Vec::with_capacity(idxs.len() * self.p);
        let mut y = Vec::with_capacity(idxs.len());
        for &i in idxs {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset::new(x, self.p, y, Some(self.feature_names.clone()))
    }
}

/// Per-sample information matrix: the signed sum of outer products of
/// differences to class-wise nearest neighbors. Its inner product with a
/// weight matrix is the local discriminant score (positive means nearer the
/// positive class).
#[derive(Clone, Debug, PartialEq)]
pub struct InfoMatrix {
    pub sample_index: usize,
    pub entries: SymMatrix,
    /// Hash of the neighborhood lists this matrix was built from; guards the
    /// incremental extension path.
    pub(crate) nbrs_fingerprint: u64,
}

impl InfoMatrix {
    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.dim()
    }
}

pub(crate) fn fnv1a(bytes: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        for shift in [0u32, 8, 16, 24, 32, 40, 48, 56] {
            h ^= (b >> shift) & 0xff;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

pub(crate) fn neighborhood_fingerprint(nbrs: &NeighborhoodIndex, i: usize) -> u64 {
    let parts = [i as u64, nbrs.k as u64, nbrs.metric_step as u64, u64::MAX];
    fnv1a(
        parts
            .into_iter()
            .chain(nbrs.same[i].iter().map(|&j| j as u64))
            .chain(core::iter::once(u64::MAX - 1))
            .chain(nbrs.opposite[i].iter().map(|&j| j as u64)),
    )
}

/// Mahalanobis distance `sqrt((a-b)ᵀ W (a-b))`.
///
/// Tiny negative quadratic forms (down to `-1e-12`) are clamped to zero;
/// anything below that indicates a corrupted weight matrix and is an error.
pub fn mahalanobis_distance(w: &SymMatrix, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != w.dim() || b.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: if a.len() != w.dim() { a.len() } else { b.len() },
        });
    }
    let delta: Vec<f64> = a.iter().zip(b.iter()).map(|(&x, &y)| x - y).collect();
    let q = w.quad_form(&delta);
    if q < -1e-12 {
        return Err(Error::NotPositiveSemiDefinite(format!(
            "quadratic form {q} below -1e-12"
        )));
    }
    Ok(math::sqrt(q.max(0.0)))
}

/// Builds the information matrix of sample `i` from evaluated features and a
/// neighborhood index:
///
/// `D_i = (1/k) [ Σ_{j in negative-class neighbors} δ_ij δ_ijᵀ
///              - Σ_{j in positive-class neighbors} δ_ij δ_ijᵀ ]`
///
/// with `δ_ij = φ(x_i) - φ(x_j)`. The sign is anchored to the class labels
/// (not to the label of `i`), so `⟨D_i, W⟩ > 0` always reads "closer to the
/// positive class"; for positive samples this coincides with the
/// same/opposite formulation.
pub fn info_matrix(
    feats: &FeatureMatrix,
    labels: &[i8],
    i: usize,
    nbrs: &NeighborhoodIndex,
) -> Result<InfoMatrix> {
    let dim = feats.dim();
    let (neg, pos) = nbrs.class_lists(labels, i)?;
    let mut entries = SymMatrix::zeros(dim);
    let inv_k = 1.0 / nbrs.k as f64;
    let mut delta = alloc::vec![0.0f64; dim];
    for &j in neg {
        feats.delta(i, j, dim, &mut delta);
        entries.add_scaled_outer(inv_k, &delta);
    }
    for &j in pos {
        feats.delta(i, j, dim, &mut delta);
        entries.add_scaled_outer(-inv_k, &delta);
    }
    Ok(InfoMatrix {
        sample_index: i,
        entries,
        nbrs_fingerprint: neighborhood_fingerprint(nbrs, i),
    })
}

/// Frobenius inner product `⟨D, W⟩`; the predicted label is `+1` when the
/// value is strictly positive and `-1` otherwise.
pub fn discriminant(d: &InfoMatrix, w: &SymMatrix) -> Result<f64> {
    d.entries.frobenius_inner(w)
}

#[inline]
pub fn predict_label(score: f64) -> i8 {
    if score > 0.0 {
        1
    } else {
        -1
    }
}

/// Exponential loss value with a saturation flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// True when any exponent argument had to be clipped at `±EXP_CLIP`.
    pub saturated: bool,
}

/// `Σ_i exp(-y_i * scores_i)` with exponent clipping.
pub fn exp_loss(labels: &[i8], scores: &[f64]) -> Result<LossValue> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let mut value = 0.0;
    let mut saturated = false;
    for (&y, &s) in labels.iter().zip(scores.iter()) {
        let mut arg = -(y as f64) * s;
        if math::abs(arg) > EXP_CLIP {
            saturated = true;
            arg = arg.clamp(-EXP_CLIP, EXP_CLIP);
        }
        value += math::exp(arg);
    }
    Ok(LossValue { value, saturated })
}

/// One boosting step's contribution to the weight matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RankOneUpdateRepr", into = "RankOneUpdateRepr")]
pub struct RankOneUpdate {
    pub xi: SparseUnitVector,
    /// Nonnegative line-search weight (before shrinkage).
    pub weight: f64,
    /// Feature-space dimension at the step this update was learned.
    pub dim_at_step: usize,
    /// 1-based boosting step that produced this update.
    pub step_index: usize,
}

#[derive(Serialize, Deserialize)]
struct RankOneUpdateRepr {
    step: usize,
    weight: f64,
    support: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl From<RankOneUpdate> for RankOneUpdateRepr {
    fn from(u: RankOneUpdate) -> Self {
        RankOneUpdateRepr {
            step: u.step_index,
            weight: u.weight,
            support: u.xi.support().to_vec(),
            values: u.xi.values().to_vec(),
            dim: u.dim_at_step,
        }
    }
}

impl TryFrom<RankOneUpdateRepr> for RankOneUpdate {
    type Error = Error;
    fn try_from(r: RankOneUpdateRepr) -> Result<Self> {
        if !(r.weight >= 0.0) {
            return Err(Error::InvalidArgument(
                "update weight must be nonnegative".to_string(),
            ));
        }
        Ok(RankOneUpdate {
            xi: SparseUnitVector::new(r.dim, r.support, r.values)?,
            weight: r.weight,
            dim_at_step: r.dim,
            step_index: r.step,
        })
    }
}

/// A trained metric: ordered rank-one updates over an expanded feature space,
/// together with the stopping step chosen by sparse boosting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    pub config: BoostConfig,
    pub feature_map: FeatureMap,
    pub updates: Vec<RankOneUpdate>,
    /// Number of leading updates included by model selection.
    pub selected_step: usize,
}

impl MetricModel {
    /// Feature-space dimension after the first `upto` updates.
    pub fn dim_at(&self, upto: usize) -> usize {
        if upto == 0 {
            self.feature_map.input_dim()
        } else {
            self.updates[upto - 1].dim_at_step
        }
    }

    pub fn selected_dim(&self) -> usize {
        self.dim_at(self.selected_step)
    }

    /// Weight matrix of the selected model, at its natural dimension.
    pub fn selected_weight(&self) -> Result<SymMatrix> {
        assemble_weight(self, self.selected_step, self.config.nu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.selected_step > self.updates.len() {
            return Err(Error::StepOutOfRange {
                step: self.selected_step,
                available: self.updates.len(),
            });
        }
        let mut prev = self.feature_map.input_dim();
        for u in &self.updates {
            if u.dim_at_step < prev {
                return Err(Error::InvalidArgument(
                    "update dimensions must be non-decreasing".to_string(),
                ));
            }
            if u.xi.dim() != u.dim_at_step {
                return Err(Error::DimensionMismatch {
                    expected: u.dim_at_step,
                    got: u.xi.dim(),
                });
            }
            prev = u.dim_at_step;
        }
        if prev > self.feature_map.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_map.len(),
                got: prev,
            });
        }
        Ok(())
    }
}

/// Assembles `W` from the first `upto_step` updates at the dimension natural
/// for that step: identity on the original coordinates, zero-padded, plus
/// `ν · w_j · ξ_j ξ_jᵀ` for each included update.
pub fn assemble_weight(model: &MetricModel, upto_step: usize, shrinkage: f64) -> Result<SymMatrix> {
    if upto_step > model.updates.len() {
        return Err(Error::StepOutOfRange {
            step: upto_step,
            available: model.updates.len(),
        });
    }
    assemble_weight_at(model, upto_step, shrinkage, model.dim_at(upto_step))
}

/// As [`assemble_weight`] but zero-padded to an explicit dimension.
pub fn assemble_weight_at(
    model: &MetricModel,
    upto_step: usize,
    shrinkage: f64,
    dim: usize,
) -> Result<SymMatrix> {
    if upto_step > model.updates.len() {
        return Err(Error::StepOutOfRange {
            step: upto_step,
            available: model.updates.len(),
        });
    }
    if !(shrinkage > 0.0 && shrinkage <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shrinkage {shrinkage} outside (0, 1]"
        )));
    }
    let p = model.feature_map.input_dim();
    if dim < p || dim < model.dim_at(upto_step) {
        return Err(Error::DimensionMismatch {
            expected: model.dim_at(upto_step).max(p),
            got: dim,
        });
    }
    let mut w = SymMatrix::zeros(dim);
    for c in 0..p {
        w.set(c, c, 1.0);
    }
    for u in &model.updates[..upto_step] {
        w.add_scaled_sparse_outer(shrinkage * u.weight, u.xi.support(), u.xi.values());
    }
    Ok(w)
}
