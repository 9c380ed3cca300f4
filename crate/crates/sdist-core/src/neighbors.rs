//! Per-sample same-class and opposite-class k-nearest-neighbor sets under a
//! given metric, with the refresh schedule used during boosting.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expansion::FeatureMatrix;
use crate::linalg::SymMatrix;
use crate::metric::mahalanobis_distance;

/// Neighbor lists per sample, sorted by ascending distance (ties broken by
/// lower sample index). `metric_step` records the boosting step whose weight
/// matrix defined the distances.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodIndex {
    pub k: usize,
    pub same: Vec<Vec<usize>>,
    pub opposite: Vec<Vec<usize>>,
    pub metric_step: usize,
    /// True when some class had fewer than `k` eligible members and its list
    /// was truncated.
    pub truncated: bool,
}

impl NeighborhoodIndex {
    /// Builds directly from lists, validating membership rules. Lists may be
    /// empty; emptiness only errors at use time.
    pub fn from_lists(
        k: usize,
        same: Vec<Vec<usize>>,
        opposite: Vec<Vec<usize>>,
        labels: &[i8],
        metric_step: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if same.len() != n || opposite.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: same.len().min(opposite.len()),
            });
        }
        for i in 0..n {
            for &j in &same[i] {
                if j >= n || j == i || labels[j] != labels[i] {
                    return Err(Error::InvalidArgument(
                        "invalid same-class neighbor list".to_string(),
                    ));
                }
            }
            for &j in &opposite[i] {
                if j >= n || labels[j] == labels[i] {
                    return Err(Error::InvalidArgument(
                        "invalid opposite-class neighbor list".to_string(),
                    ));
                }
            }
            if same[i].len() > k || opposite[i].len() > k {
                return Err(Error::InvalidArgument(
                    "neighbor list longer than k".to_string(),
                ));
            }
        }
        Ok(NeighborhoodIndex {
            k,
            same,
            opposite,
            metric_step,
            truncated: false,
        })
    }

    pub fn n(&self) -> usize {
        self.same.len()
    }

    /// Neighbor lists of sample `i` keyed by class: `(negative, positive)`.
    /// Errors when either list is empty, which signals a degenerate class in
    /// the working set.
    pub fn class_lists(&self, labels: &[i8], i: usize) -> Result<(&[usize], &[usize])> {
        let (neg, pos) = if labels[i] == -1 {
            (&self.same[i], &self.opposite[i])
        } else {
            (&self.opposite[i], &self.same[i])
        };
        if neg.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: i,
                class: "negative-class",
            });
        }
        if pos.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: i,
                class: "positive-class",
            });
        }
        Ok((neg.as_slice(), pos.as_slice()))
    }
}

/// Brute-force k-nearest-neighbor search with an arbitrary distance. When
/// `subset` is given, both queries and candidates are restricted to it and
/// lists for other samples stay empty.
pub(crate) fn build_neighborhoods_with<F>(
    labels: &[i8],
    k: usize,
    mut dist: F,
    metric_step: usize,
    subset: Option<&[usize]>,
) -> Result<NeighborhoodIndex>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".to_string()));
    }
    let n = labels.len();
    let members: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..n).collect(),
    };
    let mut same = vec![Vec::new(); n];
    let mut opposite = vec![Vec::new(); n];
    let mut truncated = false;
    let mut same_c: Vec<(f64, usize)> = Vec::new();
    let mut opp_c: Vec<(f64, usize)> = Vec::new();
    for &i in &members {
        same_c.clear();
        opp_c.clear();
        for &j in &members {
            if j == i {
                continue;
            }
            let d = dist(i, j)?;
            if labels[j] == labels[i] {
                same_c.push((d, j));
            } else {
                opp_c.push((d, j));
            }
        }
        if same_c.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: i,
                class: "same-class",
            });
        }
        if opp_c.is_empty() {
            return Err(Error::EmptyNeighborhood {
                sample: i,
                class: "opposite-class",
            });
        }
        let by_dist_then_index = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        };
        same_c.sort_by(by_dist_then_index);
        opp_c.sort_by(by_dist_then_index);
        if same_c.len() < k || opp_c.len() < k {
            truncated = true;
        }
        same[i] = same_c.iter().take(k).map(|&(_, j)| j).collect();
        opposite[i] = opp_c.iter().take(k).map(|&(_, j)| j).collect();
    }
    Ok(NeighborhoodIndex {
        k,
        same,
        opposite,
        metric_step,
        truncated,
    })
}

/// Builds neighborhoods for every sample under the Mahalanobis metric `W` on
/// the evaluated feature rows.
pub fn build_neighborhoods(
    feats: &FeatureMatrix,
    labels: &[i8],
    k: usize,
    w: &SymMatrix,
    metric_step: usize,
) -> Result<NeighborhoodIndex> {
    let dim = w.dim();
    if dim > feats.dim() {
        return Err(Error::DimensionMismatch {
            expected: feats.dim(),
            got: dim,
        });
    }
    if labels.len() != feats.n() {
        return Err(Error::DimensionMismatch {
            expected: feats.n(),
            got: labels.len(),
        });
    }
    let mut a = vec![0.0f64; dim];
    let mut b = vec![0.0f64; dim];
    build_neighborhoods_with(
        labels,
        k,
        |i, j| {
            feats.copy_row(i, dim, &mut a);
            feats.copy_row(j, dim, &mut b);
            mahalanobis_distance(w, &a, &b)
        },
        metric_step,
        None,
    )
}

/// True when neighborhoods should be rebuilt at this boosting step: never
/// when `frequency` is 0, otherwise at every positive multiple of it.
pub fn refresh_schedule(step: usize, frequency: usize) -> bool {
    frequency > 0 && step > 0 && step % frequency == 0
}
