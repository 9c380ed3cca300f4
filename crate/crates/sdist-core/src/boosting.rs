//! The training engine: stage-wise rank-one boosting of the weight matrix
//! with sparsity control, shrinkage, bagging, feature subsampling and
//! sparse-boosting model selection.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{
    evaluate_features, extend_feature_matrix, FeatureMap, FeatureMatrix,
};
use crate::linalg::{truncated_power, SparseUnitVector, SymMatrix};
use crate::math;
use crate::metric::{exp_loss, Dataset, InfoMatrix, MetricModel, RankOneUpdate, EXP_CLIP};
use crate::neighbors::{build_neighborhoods_with, refresh_schedule, NeighborhoodIndex};

/// Inner solver tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub lambda0: f64,
    pub line_search_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            power_tol: 1e-8,
            power_max_iter: 1000,
            lambda0: 1.0,
            line_search_tol: 1e-8,
        }
    }
}

/// Training configuration.
///
/// `rho` sets the per-step sparsity as a ratio of the working feature count:
/// `kappa = max(1, round(rho * p_m))`, clamped to the working dimension when
/// feature subsampling is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    /// Maximum number of boosting steps (M).
    pub max_steps: usize,
    /// Neighborhood size; fixed throughout a run.
    pub k: usize,
    /// Sparsity ratio for the rank-one updates.
    pub rho: f64,
    /// Complexity penalty in the stopping criterion.
    pub lambda_c: f64,
    /// Shrinkage applied to each committed update, in (0, 1].
    pub nu: f64,
    /// Bagging fraction, in (0, 1].
    pub eta: f64,
    /// Draw ceil(sqrt(p_m)) candidate features per step instead of all.
    pub subsample_features: bool,
    /// Rebuild neighborhoods under the learned metric every this many steps
    /// (0 disables refreshes).
    pub refresh_frequency: usize,
    /// Maximum monomial order admitted to the candidate set.
    pub cap_order: usize,
    /// Standardize input columns (statistics frozen into the model).
    pub standardize: bool,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            max_steps: 500,
            k: 3,
            rho: 0.1,
            lambda_c: 0.01,
            nu: 0.5,
            eta: 0.5,
            subsample_features: false,
            refresh_frequency: 50,
            cap_order: 4,
            standardize: true,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".to_string()));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".to_string()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho {} outside (0, 1]",
                self.rho
            )));
        }
        if !(self.lambda_c >= 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::InvalidArgument("lambda_c must be >= 0".to_string()));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "nu {} outside (0, 1]",
                self.nu
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eta {} outside (0, 1]",
                self.eta
            )));
        }
        if self.cap_order == 0 {
            return Err(Error::InvalidArgument("cap_order must be >= 1".to_string()));
        }
        let t = &self.tolerances;
        if !(t.power_tol > 0.0 && t.lambda0 > 0.0 && t.line_search_tol > 0.0)
            || t.power_max_iter == 0
        {
            return Err(Error::InvalidArgument("invalid tolerances".to_string()));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Exponential loss on the full training set after this step.
    pub loss: f64,
    /// Complexity `C_m`: trace of the PSD square root of the weight matrix.
    pub complexity: f64,
    /// `loss + lambda_c * complexity`.
    pub criterion: f64,
    /// Committed line-search weight (0 for skipped steps).
    pub weight: f64,
    /// Sparsity level used at this step.
    pub kappa: usize,
    /// Candidate indices in this step's support (the newly selected set).
    pub selected: Vec<usize>,
    /// Number of candidates appended by the expansion.
    pub new_candidates: usize,
    /// Exponent clipping occurred while evaluating the loss.
    pub saturated: bool,
    pub wall_ms: f64,
}

/// Per-step training records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
}

impl TrainTrace {
    /// Equality on everything except wall-clock timings.
    pub fn same_modulo_time(&self, other: &TrainTrace) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(other.records.iter()).all(|(a, b)| {
                a.step == b.step
                    && a.loss == b.loss
                    && a.complexity == b.complexity
                    && a.criterion == b.criterion
                    && a.weight == b.weight
                    && a.kappa == b.kappa
                    && a.selected == b.selected
                    && a.new_candidates == b.new_candidates
                    && a.saturated == b.saturated
            })
    }

    /// Union of supports over steps `1..=m`: the cumulative selected set.
    pub fn selected_up_to(&self, m: usize) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for r in &self.records {
            if r.step <= m {
                s.extend(r.selected.iter().copied());
            }
        }
        s
    }
}

#[inline]
fn clipped_exp(arg: f64) -> f64 {
    math::exp(arg.clamp(-EXP_CLIP, EXP_CLIP))
}

/// Negative loss gradient: `r_i = y_i * exp(-y_i * scores_i)`.
pub fn residuals(labels: &[i8], scores: &[f64]) -> Result<Vec<f64>> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    Ok(labels
        .iter()
        .zip(scores.iter())
        .map(|(&y, &s)| (y as f64) * clipped_exp(-(y as f64) * s))
        .collect())
}

/// `A = Σ_{i in bag} r_i D_i`.
pub fn gradient_matrix(infos: &[InfoMatrix], r: &[f64], bag: &[usize]) -> Result<SymMatrix> {
    if bag.is_empty() {
        return Err(Error::InvalidArgument("empty bag".to_string()));
    }
    if infos.len() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: infos.len(),
            got: r.len(),
        });
    }
    let dim = infos[bag[0]].dim();
    let mut a = SymMatrix::zeros(dim);
    for &i in bag {
        a.add_assign_scaled(&infos[i].entries, r[i])?;
    }
    Ok(a)
}

/// Line-search result; `unbounded` marks a direction whose loss keeps
/// decreasing up to the bracketing cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub weight: f64,
    pub unbounded: bool,
}

const LINE_SEARCH_CAP: f64 = (1u64 << 60) as f64;

/// Minimizes `Σ_i exp(-y_i (f_i + w g_i))` over `w >= 0` by bisection on the
/// derivative, bracketing with doubling from 1.
pub fn line_search_weight(
    labels: &[i8],
    scores: &[f64],
    g: &[f64],
    tol: f64,
) -> Result<LineSearch> {
    if labels.len() != scores.len() || labels.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len().min(g.len()),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty bag".to_string()));
    }
    let dl = |w: f64| -> f64 {
        let mut s = 0.0;
        for ((&y, &f), &gi) in labels.iter().zip(scores.iter()).zip(g.iter()) {
            let yg = (y as f64) * gi;
            s += -yg * clipped_exp(-(y as f64) * f - w * yg);
        }
        s
    };
    if dl(0.0) >= 0.0 {
        return Ok(LineSearch {
            weight: 0.0,
            unbounded: false,
        });
    }
    let mut hi = 1.0f64;
    while dl(hi) < 0.0 {
        hi *= 2.0;
        if hi >= LINE_SEARCH_CAP {
            return Ok(LineSearch {
                weight: LINE_SEARCH_CAP,
                unbounded: true,
            });
        }
    }
    let mut lo = 0.0f64;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if dl(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LineSearch {
        weight: 0.5 * (lo + hi),
        unbounded: false,
    })
}

/// Stopping step: minimizer of `loss_m + lambda_c * C_m`, ties to smaller m.
pub fn sparse_select(trace: &TrainTrace, lambda_c: f64) -> Result<usize> {
    if trace.records.is_empty() {
        return Err(Error::InvalidArgument("empty trace".to_string()));
    }
    let mut best_step = trace.records[0].step;
    let mut best_val = f64::INFINITY;
    for r in &trace.records {
        let v = r.loss + lambda_c * r.complexity;
        if v < best_val {
            best_val = v;
            best_step = r.step;
        }
    }
    Ok(best_step)
}

/// Sorted sample of `m` indices from `0..n` without replacement.
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let m = m.min(n);
    for t in 0..m {
        let j = rng.gen_range(t..n);
        idx.swap(t, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Distance under the identity base plus the first `upto` shrunken updates,
/// evaluated on the first `dim` feature columns. Algebraically equal to the
/// Mahalanobis distance under the assembled weight matrix.
fn snapshot_distance(
    feats: &FeatureMatrix,
    p: usize,
    updates: &[RankOneUpdate],
    upto: usize,
    nu: f64,
    i: usize,
    j: usize,
) -> f64 {
    let mut q = 0.0;
    for c in 0..p {
        let d = feats.value(i, c) - feats.value(j, c);
        q += d * d;
    }
    for u in &updates[..upto] {
        let mut dot = 0.0;
        for (&c, &v) in u.xi.support().iter().zip(u.xi.values()) {
            dot += (feats.value(i, c) - feats.value(j, c)) * v;
        }
        q += nu * u.weight * dot * dot;
    }
    math::sqrt(q.max(0.0))
}

/// `g_i = ξᵀ D_i ξ` evaluated without materializing `D_i`.
fn g_value(
    feats: &FeatureMatrix,
    labels: &[i8],
    nbrs: &NeighborhoodIndex,
    xi: &SparseUnitVector,
    i: usize,
    buf: &mut Vec<f64>,
) -> Result<f64> {
    let (neg, pos) = nbrs.class_lists(labels, i)?;
    buf.resize(xi.nnz(), 0.0);
    let inv_k = 1.0 / nbrs.k as f64;
    let mut acc = 0.0;
    for (list, sign) in [(neg, 1.0f64), (pos, -1.0f64)] {
        for &j in list {
            feats.delta_gather(i, j, xi.support(), buf);
            let dot: f64 = buf.iter().zip(xi.values()).map(|(&d, &v)| d * v).sum();
            acc += sign * inv_k * dot * dot;
        }
    }
    Ok(acc)
}

/// Gradient matrix accumulated directly from feature differences, restricted
/// to `dims` when feature subsampling is active. Matches
/// `gradient_matrix(info_matrix(...), r, bag)` on the same dims.
fn accumulate_gradient(
    feats: &FeatureMatrix,
    labels: &[i8],
    nbrs: &NeighborhoodIndex,
    r: &[f64],
    bag: &[usize],
    dims: Option<&[usize]>,
    full_dim: usize,
) -> Result<SymMatrix> {
    let dim = dims.map_or(full_dim, |d| d.len());
    let mut a = SymMatrix::zeros(dim);
    let mut delta = vec![0.0f64; dim];
    let inv_k = 1.0 / nbrs.k as f64;
    for &i in bag {
        if r[i] == 0.0 {
            continue;
        }
        let (neg, pos) = nbrs.class_lists(labels, i)?;
        for (list, sign) in [(neg, 1.0f64), (pos, -1.0f64)] {
            let c = sign * r[i] * inv_k;
            for &j in list {
                match dims {
                    Some(d) => feats.delta_gather(i, j, d, &mut delta),
                    None => feats.delta(i, j, dim, &mut delta),
                }
                a.add_scaled_outer(c, &delta);
            }
        }
    }
    Ok(a)
}

#[cfg(feature = "std")]
fn wall_clock_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

#[cfg(not(feature = "std"))]
fn wall_clock_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// Runs the full boosting loop and returns the selected model together with
/// its training trace.
///
/// Each step: evaluate the feature map; optionally bag samples and subsample
/// candidate features; form the gradient matrix from the residuals; extract a
/// κ-sparse direction by the truncated power method; grow the candidate set
/// with interaction products of the selection; line-search the step weight;
/// update scores and the weight matrix with shrinkage; record loss and
/// complexity on the full training set; refresh neighborhoods on schedule.
/// Model selection finally picks the step minimizing the penalized loss.
pub fn fit(ds: &Dataset, cfg: &BoostConfig) -> Result<(MetricModel, TrainTrace)> {
    cfg.validate()?;
    let n = ds.n();
    let labels = ds.labels();
    let p = ds.p();

    let mut fm = FeatureMap::new(ds, cfg.standardize);
    let mut feats = evaluate_features(ds, &fm)?;

    let mut updates: Vec<RankOneUpdate> = Vec::new();
    let mut scores = vec![0.0f64; n];
    let mut w_current = SymMatrix::identity(p);

    // Neighborhood metric snapshot: identity at start, advanced on refresh.
    let mut nbr_upto = 0usize;
    let mut nbrs = build_neighborhoods_with(
        labels,
        cfg.k,
        |i, j| Ok(snapshot_distance(&feats, p, &updates, 0, cfg.nu, i, j)),
        0,
        None,
    )?;

    let mut rng_bag = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_bag.set_stream(1);
    let mut rng_sub = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_sub.set_stream(2);

    let mut trace = TrainTrace::default();
    let mut gbuf: Vec<f64> = Vec::new();

    for m in 1..=cfg.max_steps {
        let (outcome, wall_ms) = wall_clock_ms(|| -> Result<StepOutcome> {
            let d = fm.len();
            let kappa_raw = (math::round(cfg.rho * d as f64) as usize).max(1);

            let bag: Vec<usize> = if cfg.eta < 1.0 {
                let size = (math::ceil(cfg.eta * n as f64) as usize).clamp(1, n);
                sample_without_replacement(&mut rng_bag, n, size)
            } else {
                (0..n).collect()
            };
            let full_bag = bag.len() == n;

            let sub: Option<Vec<usize>> = if cfg.subsample_features {
                let target = (math::ceil(math::sqrt(d as f64)) as usize).max(1);
                if target >= d {
                    None
                } else {
                    Some(sample_without_replacement(&mut rng_sub, d, target))
                }
            } else {
                None
            };
            let working_dim = sub.as_ref().map_or(d, |s| s.len());
            let kappa = kappa_raw.min(working_dim);

            let step_nbrs: NeighborhoodIndex = if full_bag {
                nbrs.clone()
            } else {
                build_neighborhoods_with(
                    labels,
                    cfg.k,
                    |i, j| Ok(snapshot_distance(&feats, p, &updates, nbr_upto, cfg.nu, i, j)),
                    nbrs.metric_step,
                    Some(&bag),
                )?
            };

            let r = residuals(labels, &scores)?;
            let a = accumulate_gradient(&feats, labels, &step_nbrs, &r, &bag, sub.as_deref(), d)?;
            if a.frobenius_norm() == 0.0 {
                return Ok(StepOutcome {
                    kappa,
                    selected: Vec::new(),
                    appended: 0,
                    weight: 0.0,
                });
            }

            let tp = truncated_power(
                &a,
                kappa,
                cfg.tolerances.lambda0,
                cfg.tolerances.power_tol,
                cfg.tolerances.power_max_iter,
            )?;
            let xi = match &sub {
                Some(table) => tp.xi.remapped(table, d)?,
                None => tp.xi,
            };

            fm.select_from_xi(xi.support())?;
            let new_range = fm.expand_candidates(cfg.cap_order);
            let appended = new_range.len();
            extend_feature_matrix(&mut feats, &mut fm, ds, new_range)?;

            let mut y_bag = Vec::with_capacity(bag.len());
            let mut s_bag = Vec::with_capacity(bag.len());
            let mut g_bag = Vec::with_capacity(bag.len());
            for &i in &bag {
                y_bag.push(labels[i]);
                s_bag.push(scores[i]);
                g_bag.push(g_value(&feats, labels, &step_nbrs, &xi, i, &mut gbuf)?);
            }
            let ls = line_search_weight(&y_bag, &s_bag, &g_bag, cfg.tolerances.line_search_tol)?;

            if ls.weight > 0.0 {
                for i in 0..n {
                    scores[i] += cfg.nu * ls.weight * g_value(&feats, labels, &nbrs, &xi, i, &mut gbuf)?;
                }
                if w_current.dim() < d {
                    w_current = w_current.grown(d);
                }
                w_current.add_scaled_sparse_outer(
                    cfg.nu * ls.weight,
                    xi.support(),
                    xi.values(),
                );
                let selected = xi.support().to_vec();
                updates.push(RankOneUpdate {
                    xi,
                    weight: ls.weight,
                    dim_at_step: d,
                    step_index: m,
                });
                Ok(StepOutcome {
                    kappa,
                    selected,
                    appended,
                    weight: ls.weight,
                })
            } else {
                Ok(StepOutcome {
                    kappa,
                    selected: xi.support().to_vec(),
                    appended,
                    weight: 0.0,
                })
            }
        });
        let outcome = outcome?;

        let loss = exp_loss(labels, &scores)?;
        let complexity = crate::linalg::sqrt_trace(&w_current)?;
        trace.records.push(StepRecord {
            step: m,
            loss: loss.value,
            complexity,
            criterion: loss.value + cfg.lambda_c * complexity,
            weight: outcome.weight,
            kappa: outcome.kappa,
            selected: outcome.selected,
            new_candidates: outcome.appended,
            saturated: loss.saturated,
            wall_ms,
        });

        if refresh_schedule(m, cfg.refresh_frequency) {
            nbr_upto = updates.len();
            nbrs = build_neighborhoods_with(
                labels,
                cfg.k,
                |i, j| Ok(snapshot_distance(&feats, p, &updates, nbr_upto, cfg.nu, i, j)),
                m,
                None,
            )?;
        }
    }

    let m_hat = sparse_select(&trace, cfg.lambda_c)?;
    let selected_step = updates.iter().filter(|u| u.step_index <= m_hat).count();
    let model = MetricModel {
        config: cfg.clone(),
        feature_map: fm,
        updates,
        selected_step,
    };
    model.validate()?;
    Ok((model, trace))
}

struct StepOutcome {
    kappa: usize,
    selected: Vec<usize>,
    appended: usize,
    weight: f64,
}
