//! Classification under a learned metric, test-error measurement,
//! cross-validation grid tuning, and the k-sweep comparison between the kNN
//! classifier and its continuous surrogate.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boosting::{fit, BoostConfig};
use crate::error::{Error, Result};
use crate::expansion::{evaluate_features_upto, FeatureMatrix};
use crate::metric::{Dataset, MetricModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Knn,
    Fw,
}

/// Test-error summary. `confusion[a][p]` counts actual class `a` predicted
/// as `p`, with index 0 for the negative class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: Classifier,
    pub k: usize,
    pub n_test: usize,
    pub n_errors: usize,
    pub test_error: f64,
    pub error_neg: f64,
    pub error_pos: f64,
    pub confusion: [[usize; 2]; 2],
}

impl EvalReport {
    pub fn from_predictions(
        classifier: Classifier,
        k: usize,
        actual: &[i8],
        predicted: &[i8],
    ) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: actual.len(),
                got: predicted.len(),
            });
        }
        let mut confusion = [[0usize; 2]; 2];
        for (&a, &p) in actual.iter().zip(predicted.iter()) {
            let ai = usize::from(a == 1);
            let pi = usize::from(p == 1);
            confusion[ai][pi] += 1;
        }
        let n_test = actual.len();
        let n_errors = confusion[0][1] + confusion[1][0];
        let neg_total = confusion[0][0] + confusion[0][1];
        let pos_total = confusion[1][0] + confusion[1][1];
        Ok(EvalReport {
            classifier,
            k,
            n_test,
            n_errors,
            test_error: n_errors as f64 / n_test as f64,
            error_neg: if neg_total > 0 {
                confusion[0][1] as f64 / neg_total as f64
            } else {
                0.0
            },
            error_pos: if pos_total > 0 {
                confusion[1][0] as f64 / pos_total as f64
            } else {
                0.0
            },
            confusion,
        })
    }
}

/// Squared model distance between row `i` of `a` and row `j` of `b`:
/// identity on the original coordinates plus the shrunken rank-one terms.
fn dist2(
    model: &MetricModel,
    upto: usize,
    a: &FeatureMatrix,
    i: usize,
    b: &FeatureMatrix,
    j: usize,
) -> f64 {
    let p = model.feature_map.input_dim();
    let nu = model.config.nu;
    let mut q = 0.0;
    for c in 0..p {
        let d = a.value(i, c) - b.value(j, c);
        q += d * d;
    }
    for u in &model.updates[..upto] {
        let mut dot = 0.0;
        for (&c, &v) in u.xi.support().iter().zip(u.xi.values()) {
            dot += (a.value(i, c) - b.value(j, c)) * v;
        }
        q += nu * u.weight * dot * dot;
    }
    q.max(0.0)
}

fn model_features(model: &MetricModel, ds: &Dataset) -> Result<FeatureMatrix> {
    evaluate_features_upto(ds, &model.feature_map, model.selected_dim())
}

/// Majority vote among the `k` nearest training samples under the selected
/// model metric. Distance ties keep the lower training index; vote ties
/// resolve to the negative class.
pub fn knn_predict(
    model: &MetricModel,
    train: &Dataset,
    queries: &Dataset,
    k: usize,
) -> Result<Vec<i8>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".to_string()));
    }
    model.validate()?;
    let upto = model.selected_step;
    let tf = model_features(model, train)?;
    let qf = model_features(model, queries)?;
    let n = train.n();
    let mut out = Vec::with_capacity(queries.n());
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for q in 0..queries.n() {
        order.clear();
        for j in 0..n {
            order.push((dist2(model, upto, &qf, q, &tf, j), j));
        }
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        let vote: i32 = order
            .iter()
            .take(k.min(n))
            .map(|&(_, j)| train.label(j) as i32)
            .sum();
        out.push(if vote > 0 { 1 } else { -1 });
    }
    Ok(out)
}

/// Continuous surrogate classifier: sign of the difference between mean
/// squared distances to the k nearest negative and positive training
/// samples. Training rows identical to the query in feature space are
/// excluded. Ties predict the negative class.
pub fn fw_predict(
    model: &MetricModel,
    train: &Dataset,
    queries: &Dataset,
    k: usize,
) -> Result<Vec<i8>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".to_string()));
    }
    model.validate()?;
    let upto = model.selected_step;
    let dim = model.selected_dim();
    let tf = model_features(model, train)?;
    let qf = model_features(model, queries)?;
    let n = train.n();
    let mut out = Vec::with_capacity(queries.n());
    let mut neg: Vec<(f64, usize)> = Vec::new();
    let mut pos: Vec<(f64, usize)> = Vec::new();
    for q in 0..queries.n() {
        neg.clear();
        pos.clear();
        for j in 0..n {
            let identical = (0..dim).all(|c| qf.value(q, c) == tf.value(j, c));
            if identical {
                continue;
            }
            let d2 = dist2(model, upto, &qf, q, &tf, j);
            if train.label(j) == 1 {
                pos.push((d2, j));
            } else {
                neg.push((d2, j));
            }
        }
        let by = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1))
        };
        neg.sort_by(by);
        pos.sort_by(by);
        if neg.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: q,
                class: "negative-class",
            });
        }
        if pos.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: q,
                class: "positive-class",
            });
        }
        let inv_k = 1.0 / k as f64;
        let f: f64 = neg.iter().take(k).map(|&(d, _)| d).sum::<f64>() * inv_k
            - pos.iter().take(k).map(|&(d, _)| d).sum::<f64>() * inv_k;
        out.push(if f > 0.0 { 1 } else { -1 });
    }
    Ok(out)
}

/// Identity-metric model over the original variables: plain (standardized)
/// Euclidean kNN when used with [`knn_predict`].
pub fn euclidean_baseline(train: &Dataset, standardize: bool) -> MetricModel {
    MetricModel {
        config: BoostConfig {
            standardize,
            ..BoostConfig::default()
        },
        feature_map: crate::expansion::FeatureMap::new(train, standardize),
        updates: Vec::new(),
        selected_step: 0,
    }
}

/// Runs one classifier over a labeled test set.
pub fn evaluate(
    model: &MetricModel,
    train: &Dataset,
    test: &Dataset,
    k: usize,
    classifier: Classifier,
) -> Result<EvalReport> {
    let predicted = match classifier {
        Classifier::Knn => knn_predict(model, train, test, k)?,
        Classifier::Fw => fw_predict(model, train, test, k)?,
    };
    EvalReport::from_predictions(classifier, k, test.labels(), &predicted)
}

/// Test error per `k`, for comparing the two classifiers across
/// neighborhood sizes.
pub fn k_sweep(
    model: &MetricModel,
    train: &Dataset,
    test: &Dataset,
    ks: &[usize],
    classifier: Classifier,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let report = evaluate(model, train, test, k, classifier)?;
        out.push((k, report.test_error));
    }
    Ok(out)
}

/// Hyperparameter grid; every axis must be nonempty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub rho: Vec<f64>,
    pub lambda_c: Vec<f64>,
    pub nu: Vec<f64>,
    pub eta: Vec<f64>,
    pub refresh: Vec<usize>,
}

impl CvGrid {
    /// The conventional search: sparsity ratios and complexity penalties,
    /// with the remaining knobs pinned at the base configuration.
    pub fn standard(base: &BoostConfig) -> Self {
        CvGrid {
            rho: vec![0.05, 0.1, 0.2],
            lambda_c: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            nu: vec![base.nu],
            eta: vec![base.eta],
            refresh: vec![base.refresh_frequency],
        }
    }

    pub fn singleton(base: &BoostConfig) -> Self {
        CvGrid {
            rho: vec![base.rho],
            lambda_c: vec![base.lambda_c],
            nu: vec![base.nu],
            eta: vec![base.eta],
            refresh: vec![base.refresh_frequency],
        }
    }
}

/// Expands the grid into candidate configurations in lexicographic order of
/// (rho, lambda_c, nu, eta, refresh); ties in validation error later resolve
/// to the earliest candidate.
pub fn grid_configs(base: &BoostConfig, grid: &CvGrid) -> Result<Vec<BoostConfig>> {
    if grid.rho.is_empty()
        || grid.lambda_c.is_empty()
        || grid.nu.is_empty()
        || grid.eta.is_empty()
        || grid.refresh.is_empty()
    {
        return Err(Error::InvalidArgument("empty grid axis".to_string()));
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        v.dedup();
        v
    };
    let rho = sorted(&grid.rho);
    let lambda = sorted(&grid.lambda_c);
    let nu = sorted(&grid.nu);
    let eta = sorted(&grid.eta);
    let mut refresh = grid.refresh.clone();
    refresh.sort_unstable();
    refresh.dedup();
    let mut out = Vec::new();
    for &r in &rho {
        for &l in &lambda {
            for &v in &nu {
                for &e in &eta {
                    for &f in &refresh {
                        out.push(BoostConfig {
                            rho: r,
                            lambda_c: l,
                            nu: v,
                            eta: e,
                            refresh_frequency: f,
                            ..base.clone()
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Stratified fold assignment: within each class, indices are shuffled and
/// dealt round-robin. Errors if any fold misses a class.
pub fn stratified_folds(labels: &[i8], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut assignment = vec![Vec::new(); folds];
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        for t in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=t);
            idx.swap(t, j);
        }
        for (pos, &i) in idx.iter().enumerate() {
            assignment[pos % folds].push(i);
        }
    }
    for (f, fold) in assignment.iter_mut().enumerate() {
        fold.sort_unstable();
        let has_pos = fold.iter().any(|&i| labels[i] == 1);
        let has_neg = fold.iter().any(|&i| labels[i] == -1);
        if !(has_pos && has_neg) {
            return Err(Error::InvalidDataset(format!(
                "fold {f} lost a class during stratification"
            )));
        }
    }
    Ok(assignment)
}

/// Seed used for the fit of a given fold, isolating RNG streams across folds.
pub fn cv_fit_seed(base_seed: u64, fold: usize) -> u64 {
    base_seed.wrapping_add((fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fits one candidate on the complement of `folds[fold]` and returns its
/// validation error under the kNN classifier.
pub fn cv_job(
    ds: &Dataset,
    cfg: &BoostConfig,
    folds: &[Vec<usize>],
    fold: usize,
) -> Result<f64> {
    let val_idx = &folds[fold];
    let mut train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(f, _)| f != fold)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    train_idx.sort_unstable();
    let train = ds.subset(&train_idx)?;
    let val = ds.subset(val_idx)?;
    let (model, _) = fit(&train, cfg)?;
    let predicted = knn_predict(&model, &train, &val, cfg.k)?;
    let errors = predicted
        .iter()
        .zip(val.labels())
        .filter(|(p, a)| p != a)
        .count();
    Ok(errors as f64 / val.n() as f64)
}

/// One grid row of the cross-validation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config: BoostConfig,
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
}

/// Grid search by stratified k-fold cross-validation. Returns the best
/// configuration (lowest mean validation error, ties to the earliest grid
/// point) and the full table.
pub fn cross_validate(
    ds: &Dataset,
    base: &BoostConfig,
    grid: &CvGrid,
    folds: usize,
    seed: u64,
) -> Result<(BoostConfig, Vec<CvRow>)> {
    let candidates = grid_configs(base, grid)?;
    let assignment = stratified_folds(ds.labels(), folds, seed)?;
    let mut rows = Vec::with_capacity(candidates.len());
    for candidate in &candidates {
        let mut fold_errors = Vec::with_capacity(folds);
        for fold in 0..folds {
            let cfg = BoostConfig {
                seed: cv_fit_seed(seed, fold),
                ..candidate.clone()
            };
            fold_errors.push(cv_job(ds, &cfg, &assignment, fold)?);
        }
        let mean_error = fold_errors.iter().sum::<f64>() / folds as f64;
        rows.push(CvRow {
            config: candidate.clone(),
            fold_errors,
            mean_error,
        });
    }
    let mut best = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if row.mean_error < rows[best].mean_error {
            best = i;
        }
    }
    Ok((rows[best].config.clone(), rows))
}

/// Stratified holdout split: roughly `test_fraction` of each class goes to
/// the second dataset.
pub fn train_test_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(
            "test_fraction must be in (0, 1)".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);
    let mut test_idx: Vec<usize> = Vec::new();
    let mut train_idx: Vec<usize> = Vec::new();
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) == class).collect();
        for t in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=t);
            idx.swap(t, j);
        }
        let n_test = ((idx.len() as f64) * test_fraction) as usize;
        let n_test = n_test.clamp(1, idx.len().saturating_sub(1));
        test_idx.extend_from_slice(&idx[..n_test]);
        train_idx.extend_from_slice(&idx[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.subset(&train_idx)?, ds.subset(&test_idx)?))
}

/// One repeat of the random-split protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutRun {
    pub repeat: usize,
    pub model_error: f64,
    pub baseline_error: f64,
}

/// Repeated stratified holdout evaluation: fit on the training part, measure
/// kNN error of the learned metric and the Euclidean baseline on the held-out
/// part.
pub fn holdout_repeats(
    ds: &Dataset,
    cfg: &BoostConfig,
    repeats: usize,
    test_fraction: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<HoldoutRun>> {
    let mut out = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let (train, test) = train_test_split(ds, test_fraction, seed.wrapping_add(rep as u64))?;
        let run_cfg = BoostConfig {
            seed: cv_fit_seed(seed, rep),
            ..cfg.clone()
        };
        let (model, _) = fit(&train, &run_cfg)?;
        let model_error = evaluate(&model, &train, &test, k, Classifier::Knn)?.test_error;
        let baseline = euclidean_baseline(&train, cfg.standardize);
        let baseline_error = evaluate(&baseline, &train, &test, k, Classifier::Knn)?.test_error;
        out.push(HoldoutRun {
            repeat: rep,
            model_error,
            baseline_error,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_xor, ScenarioKind, ScenarioSpec};

    fn toy_train() -> Dataset {
        Dataset::new(
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 1.0, 2.0],
            2,
            vec![1, 1, -1, -1],
            None,
        )
        .unwrap()
    }

    fn query(rows: &[f64], p: usize, labels: Vec<i8>) -> Dataset {
        Dataset::new(rows.to_vec(), p, labels, None).unwrap()
    }

    #[test]
    fn knn_exact_match_wins_at_k1() {
        let train = toy_train();
        let model = euclidean_baseline(&train, false);
        let q = query(&[0.0, 2.0, 1.0, 0.0], 2, vec![1, -1]);
        let pred = knn_predict(&model, &train, &q, 1).unwrap();
        assert_eq!(pred, vec![-1, 1]);
    }

    #[test]
    fn knn_unanimous_neighborhood() {
        let train = Dataset::new(
            vec![
                0.0, 0.0, 1.0, 0.0, 0.5, 0.5, 10.0, 10.0, 11.0, 10.0, 10.0, 11.0,
            ],
            2,
            vec![1, 1, 1, -1, -1, -1],
            None,
        )
        .unwrap();
        let model = euclidean_baseline(&train, false);
        // the three nearest of each query are unanimously one class
        let q = query(&[10.5, 10.5, 0.2, 0.2], 2, vec![-1, 1]);
        let pred = knn_predict(&model, &train, &q, 3).unwrap();
        assert_eq!(pred, vec![-1, 1]);
    }

    #[test]
    fn knn_matches_brute_force_euclidean_oracle() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 40, 4, 2, 17);
        let train = gen_xor(&spec).unwrap().0;
        let test = gen_xor(&spec.with_seed(18)).unwrap().0;
        let model = euclidean_baseline(&train, true);
        let pred = knn_predict(&model, &train, &test, 3).unwrap();

        // Independent oracle: standardize columns, brute-force vote.
        let n = train.n();
        let p = train.p();
        let mut mean = vec![0.0; p];
        let mut sd = vec![0.0; p];
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| train.row(i)[j]).collect();
            mean[j] = col.iter().sum::<f64>() / n as f64;
            sd[j] = (col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / (n as f64 - 1.0))
                .sqrt();
        }
        let z = |row: &[f64], j: usize| (row[j] - mean[j]) / sd[j];
        for (qi, &expect) in pred.iter().enumerate().take(test.n()) {
            let mut ds: Vec<(f64, usize)> = (0..n)
                .map(|i| {
                    let d: f64 = (0..p)
                        .map(|j| (z(test.row(qi), j) - z(train.row(i), j)).powi(2))
                        .sum();
                    (d, i)
                })
                .collect();
            ds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let vote: i32 = ds.iter().take(3).map(|&(_, i)| train.label(i) as i32).sum();
            let oracle = if vote > 0 { 1 } else { -1 };
            assert_eq!(expect, oracle, "query {qi}");
        }
    }

    #[test]
    fn fw_continuation_of_worked_example() {
        let train = Dataset::new(
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0],
            2,
            vec![1, 1, -1],
            None,
        )
        .unwrap();
        let model = euclidean_baseline(&train, false);
        let q = query(&[0.0, 0.0, 5.0, 5.0], 2, vec![1, -1]);
        // first query equals x1, which is excluded; nearest positive is
        // (1,0), nearest negative (0,2): f = 4 - 1 = 3 -> +1
        let pred = fw_predict(&model, &train, &q, 1).unwrap();
        assert_eq!(pred[0], 1);
    }

    #[test]
    fn fw_tie_predicts_negative() {
        let train = Dataset::new(vec![1.0, 0.0, -1.0, 0.0], 2, vec![1, -1], None).unwrap();
        let model = euclidean_baseline(&train, false);
        // first query is equidistant from both classes
        let q = query(&[0.0, 0.0, 0.9, 0.0], 2, vec![-1, 1]);
        let pred = fw_predict(&model, &train, &q, 1).unwrap();
        assert_eq!(pred[0], -1);
    }

    #[test]
    fn fw_agrees_with_knn_on_unanimous_neighborhoods() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 60, 3, 2, 29);
        let train = gen_xor(&spec).unwrap().0;
        let test = gen_xor(&spec.with_seed(30)).unwrap().0;
        let model = euclidean_baseline(&train, true);
        let k = 3;
        let knn = knn_predict(&model, &train, &test, k).unwrap();
        let fw = fw_predict(&model, &train, &test, k).unwrap();
        let tf = model_features(&model, &train).unwrap();
        let qf = model_features(&model, &test).unwrap();
        let mut checked = 0;
        for q in 0..test.n() {
            let mut order: Vec<(f64, usize)> = (0..train.n())
                .map(|j| (dist2(&model, 0, &qf, q, &tf, j), j))
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let first = train.label(order[0].1);
            if order.iter().take(2 * k).all(|&(_, j)| train.label(j) == first) {
                assert_eq!(knn[q], first);
                assert_eq!(fw[q], first, "query {q}");
                checked += 1;
            }
        }
        assert!(checked > 0, "no unanimous neighborhoods sampled");
    }

    #[test]
    fn error_invariant_under_query_permutation() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 50, 3, 2, 31);
        let train = gen_xor(&spec).unwrap().0;
        let test = gen_xor(&spec.with_seed(32)).unwrap().0;
        let model = euclidean_baseline(&train, true);
        let direct = evaluate(&model, &train, &test, 3, Classifier::Knn).unwrap();
        let rev_idx: Vec<usize> = (0..test.n()).rev().collect();
        let reversed = test.subset(&rev_idx).unwrap();
        let rev = evaluate(&model, &train, &reversed, 3, Classifier::Knn).unwrap();
        assert_eq!(direct.test_error, rev.test_error);
        assert_eq!(direct.n_errors, rev.n_errors);
    }

    #[test]
    fn report_counts_are_exact() {
        let r = EvalReport::from_predictions(Classifier::Knn, 3, &[1, 1, -1, -1], &[1, -1, -1, 1])
            .unwrap();
        assert_eq!(r.n_errors, 2);
        assert_eq!(r.test_error, 0.5);
        assert_eq!(r.confusion, [[1, 1], [1, 1]]);
        assert_eq!(r.error_pos, 0.5);
        assert_eq!(r.error_neg, 0.5);
    }

    #[test]
    fn k_sweep_shape() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 40, 3, 2, 33);
        let train = gen_xor(&spec).unwrap().0;
        let test = gen_xor(&spec.with_seed(34)).unwrap().0;
        let model = euclidean_baseline(&train, true);
        let ks: Vec<usize> = (1..=15).collect();
        let sweep = k_sweep(&model, &train, &test, &ks, Classifier::Fw).unwrap();
        assert_eq!(sweep.len(), 15);
        for (i, &(k, err)) in sweep.iter().enumerate() {
            assert_eq!(k, i + 1);
            assert!((0.0..=1.0).contains(&err));
        }
    }

    #[test]
    fn stratified_folds_keep_both_classes() {
        let labels: Vec<i8> = (0..20).map(|i| if i < 8 { 1 } else { -1 }).collect();
        let folds = stratified_folds(&labels, 4, 5).unwrap();
        assert_eq!(folds.iter().map(|f| f.len()).sum::<usize>(), 20);
        for f in &folds {
            assert!(f.iter().any(|&i| labels[i] == 1));
            assert!(f.iter().any(|&i| labels[i] == -1));
        }
        assert_eq!(folds, stratified_folds(&labels, 4, 5).unwrap());
    }

    #[test]
    fn stratified_folds_error_when_class_too_small() {
        let labels: Vec<i8> = vec![1, -1, -1, -1, -1, -1];
        assert!(stratified_folds(&labels, 3, 0).is_err());
    }

    #[test]
    fn cross_validate_singleton_grid_passthrough() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 40, 3, 2, 35);
        let ds = gen_xor(&spec).unwrap().0;
        let base = BoostConfig {
            max_steps: 6,
            refresh_frequency: 0,
            eta: 1.0,
            ..BoostConfig::default()
        };
        let grid = CvGrid::singleton(&base);
        let (best, rows) = cross_validate(&ds, &base, &grid, 3, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(best.rho, base.rho);
        assert_eq!(best.lambda_c, base.lambda_c);
        // determinism
        let (_, rows2) = cross_validate(&ds, &base, &grid, 3, 1).unwrap();
        assert_eq!(rows[0].fold_errors, rows2[0].fold_errors);
    }

    #[test]
    fn cross_validate_duplicate_axes_are_deduplicated() {
        let base = BoostConfig::default();
        let grid = CvGrid {
            rho: vec![0.1, 0.1],
            lambda_c: vec![0.01],
            nu: vec![0.5],
            eta: vec![1.0],
            refresh: vec![0, 0],
        };
        let configs = grid_configs(&base, &grid).unwrap();
        assert_eq!(configs.len(), 1);
    }

    #[test]
    fn split_is_stratified() {
        let spec = ScenarioSpec::new(ScenarioKind::Xor, 60, 3, 2, 36);
        let ds = gen_xor(&spec).unwrap().0;
        let (train, test) = train_test_split(&ds, 0.3, 7).unwrap();
        assert_eq!(train.n() + test.n(), ds.n());
        let (tn, tp) = test.class_counts();
        assert!(tn > 0 && tp > 0);
        let frac = test.n() as f64 / ds.n() as f64;
        assert!((frac - 0.3).abs() < 0.08);
    }
}
