//! ADPM weight allocation.
//!
//! Users are visited from the most to the least private. Each new user
//! receives scaled weight
//!
//! ```text
//! r_{k+1} = min(eps_{k+1}, (L2 + 8) / L1),   L1 = sum_{i<=k} r_i,  L2 = sum_{i<=k} r_i^2
//! ```
//!
//! and the released estimator is `<r / L1, x> + Laplace(1 / L1)`. Once the
//! threshold branch wins (the user *saturates*) every later user saturates
//! too and receives the same weight, so the tail is filled in directly.

use std::sync::Arc;

use serde::Serialize;

use crate::sum::RunningSum;
use crate::types::SortedProfile;
use crate::{Error, PrivacyProfile, Result};

/// Output of [`compute_weights`].
///
/// Only the scaled weights `r` are stored; the sorted levels and the
/// permutation are shared with the [`SortedProfile`], and `w` and `granted`
/// are derived on request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAllocation {
    r: Vec<f64>,
    eps: Arc<[f64]>,
    perm: Arc<[usize]>,
    eta: f64,
    sat_index: Option<usize>,
    f_value: f64,
    trivial_fallback: bool,
}

impl WeightAllocation {
    /// Scaled weights in sorted order.
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Simplex weight of the user at sorted position `i`.
    pub fn w_at(&self, i: usize) -> f64 {
        if self.eta == 0.0 {
            1.0 / self.r.len() as f64
        } else {
            self.r[i] * self.eta
        }
    }

    /// Simplex weights `r / ||r||_1` in sorted order.
    pub fn w(&self) -> Vec<f64> {
        (0..self.r.len()).map(|i| self.w_at(i)).collect()
    }

    /// Sorted privacy levels the allocation was computed for.
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Privacy actually granted to each user, in original order.
    pub fn granted(&self) -> Vec<f64> {
        scatter(&self.perm, &self.r)
    }

    /// Laplace scale `1 / ||r||_1`; zero when every user is public.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// 1-based sorted position of the first saturated user, if any.
    pub fn sat_index(&self) -> Option<usize> {
        self.sat_index
    }

    /// Objective value `(||r||_2^2 + 8) / (4 ||r||_1^2)`.
    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    /// True when releasing the constant 0 beats the affine estimator.
    pub fn trivial_fallback(&self) -> bool {
        self.trivial_fallback
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Simplex weights reordered to original user order.
    pub fn w_original(&self) -> Vec<f64> {
        scatter(&self.perm, &self.w())
    }
}

fn scatter(perm: &[usize], sorted: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; sorted.len()];
    for (&orig, &v) in perm.iter().zip(sorted) {
        out[orig] = v;
    }
    out
}

/// Runs the saturation recursion over a sorted profile in O(n).
///
/// A profile whose smallest level is infinite contains only public users;
/// the exact non-private optimum is returned (uniform weights, no noise,
/// `f = 1 / (4n)`, granted privacy `+inf`).
pub fn compute_weights(sp: &SortedProfile) -> WeightAllocation {
    let (shared_eps, perm) = sp.shared();
    let eps = sp.eps();
    let n = eps.len();

    if eps[0].is_infinite() {
        let f_value = 0.25 / n as f64;
        return WeightAllocation {
            r: vec![f64::INFINITY; n],
            eps: shared_eps,
            perm,
            eta: 0.0,
            sat_index: None,
            f_value,
            trivial_fallback: f_value > 0.25,
        };
    }

    let mut r = Vec::with_capacity(n);
    let mut l1 = RunningSum::new();
    let mut l2 = RunningSum::new();
    let mut sat_index = None;

    r.push(eps[0]);
    l1.add(eps[0]);
    l2.add(eps[0] * eps[0]);
    for (k, &e) in eps.iter().enumerate().skip(1) {
        let threshold = (l2.value() + 8.0) / l1.value();
        if e >= threshold {
            sat_index = Some(k + 1);
            let tail = n - k;
            r.extend(std::iter::repeat_n(threshold, tail));
            for _ in 0..tail {
                l1.add(threshold);
                l2.add(threshold * threshold);
            }
            break;
        }
        r.push(e);
        l1.add(e);
        l2.add(e * e);
    }

    let l1 = l1.value();
    let f_value = (l2.value() + 8.0) / (4.0 * l1 * l1);
    WeightAllocation {
        r,
        eps: shared_eps,
        perm,
        eta: 1.0 / l1,
        sat_index,
        f_value,
        trivial_fallback: f_value > 0.25,
    }
}

/// Value of the worst-case MSE objective and the norms it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub f: f64,
    pub l1: f64,
    pub l2sq: f64,
}

/// Full two-term objective
/// `||x||_2^2 / (4 ||x||_1^2) + 2 ||x / eps||_inf^2 / ||x||_1^2`.
///
/// Infinite levels contribute nothing to the max term.
pub fn objective_f(r: &[f64], eps: &[f64]) -> Result<ObjectiveValue> {
    if r.len() != eps.len() {
        return Err(Error::LengthMismatch {
            expected: eps.len(),
            found: r.len(),
        });
    }
    let l1: f64 = r.iter().sum();
    if l1 == 0.0 {
        return Err(Error::ZeroWeights);
    }
    let l2sq: f64 = r.iter().map(|v| v * v).sum();
    let max_ratio = r
        .iter()
        .zip(eps)
        .map(|(&v, &e)| v / e)
        .fold(0.0f64, f64::max);
    let f = l2sq / (4.0 * l1 * l1) + 2.0 * max_ratio * max_ratio / (l1 * l1);
    Ok(ObjectiveValue { f, l1, l2sq })
}

/// Worst-case MSE of ADPM: the objective capped at the trivial estimator's 1/4.
pub fn upper_bound_mse(alloc: &WeightAllocation) -> f64 {
    alloc.f_value.min(0.25)
}

/// Privacy level at or above which the next user saturates:
/// `(||prefix||_2^2 + 8) / ||prefix||_1`.
pub fn saturation_threshold(prefix_r: &[f64]) -> f64 {
    let l1: f64 = prefix_r.iter().sum();
    let l2: f64 = prefix_r.iter().map(|v| v * v).sum();
    (l2 + 8.0) / l1
}

/// One run of equal privacy levels in a grouped allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupWeight {
    pub eps: f64,
    pub count: usize,
    /// Scaled weight shared by every user in the group.
    pub r: f64,
}

/// Allocation computed from run-length `(level, count)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedAllocation {
    /// Groups sorted by level, equal levels merged.
    pub groups: Vec<GroupWeight>,
    pub l1: f64,
    pub l2sq: f64,
    pub eta: f64,
    /// 1-based position (over users, not groups) of the first saturated user.
    pub sat_index: Option<usize>,
    pub f_value: f64,
    pub trivial_fallback: bool,
}

impl GroupedAllocation {
    /// Expands the group weights to one entry per user, in sorted order.
    pub fn expand_r(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.r, g.count))
            .collect()
    }
}

/// Weight recursion over `k` distinct levels in O(k log k).
///
/// Within a run of equal levels the saturation test `eps * L1 >= L2 + 8`
/// is unchanged by adding users of that same level, so a group is either
/// untouched or saturates at its first user; after that the weight stays
/// constant.
pub fn compute_weights_grouped(groups: &[(f64, usize)]) -> Result<GroupedAllocation> {
    let mut merged: Vec<(f64, usize)> = Vec::with_capacity(groups.len());
    for (index, &(value, count)) in groups.iter().enumerate() {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonPositiveEpsilon { index, value });
        }
        if count > 0 {
            merged.push((value, count));
        }
    }
    if merged.is_empty() {
        return Err(Error::EmptyProfile);
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    merged.dedup_by(|next, prev| {
        if next.0 == prev.0 {
            prev.1 += next.1;
            true
        } else {
            false
        }
    });

    let n: usize = merged.iter().map(|g| g.1).sum();
    if merged[0].0.is_infinite() {
        let f_value = 0.25 / n as f64;
        return Ok(GroupedAllocation {
            groups: vec![GroupWeight {
                eps: f64::INFINITY,
                count: n,
                r: f64::INFINITY,
            }],
            l1: f64::INFINITY,
            l2sq: f64::INFINITY,
            eta: 0.0,
            sat_index: None,
            f_value,
            trivial_fallback: false,
        });
    }

    let mut out = Vec::with_capacity(merged.len());
    let mut l1 = RunningSum::new();
    let mut l2 = RunningSum::new();
    let mut seen = 0usize;
    let mut saturated: Option<f64> = None;
    let mut sat_index = None;
    for (gi, &(e, c)) in merged.iter().enumerate() {
        let r = match saturated {
            Some(t) => t,
            None if gi == 0 => e,
            None => {
                let t = (l2.value() + 8.0) / l1.value();
                if e >= t {
                    saturated = Some(t);
                    sat_index = Some(seen + 1);
                    t
                } else {
                    e
                }
            }
        };
        l1.add(c as f64 * r);
        l2.add(c as f64 * r * r);
        seen += c;
        out.push(GroupWeight {
            eps: e,
            count: c,
            r,
        });
    }
    let l1 = l1.value();
    let l2sq = l2.value();
    let f_value = (l2sq + 8.0) / (4.0 * l1 * l1);
    Ok(GroupedAllocation {
        groups: out,
        l1,
        l2sq,
        eta: 1.0 / l1,
        sat_index,
        f_value,
        trivial_fallback: f_value > 0.25,
    })
}

/// Convenience: validate, sort and allocate in one step.
pub fn allocate(profile: &PrivacyProfile) -> WeightAllocation {
    compute_weights(&profile.sorted())
}
