//! Privacy profiles, datasets and the sort bookkeeping shared by every
//! estimator.
//!
//! Public results are always reported in the caller's original user order;
//! the sorted view only exists so the weight recursion can walk users from
//! the most to the least private.

use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Result};

/// Per-user privacy levels in the order the caller supplied them.
///
/// Every entry is strictly positive. `f64::INFINITY` marks a public
/// datapoint and compares greater than every finite level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyProfile {
    eps: Vec<f64>,
}

impl PrivacyProfile {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some((index, &value)) = eps
            .iter()
            .enumerate()
            .find(|(_, &v)| v.is_nan() || v <= 0.0)
        {
            return Err(Error::NonPositiveEpsilon { index, value });
        }
        Ok(Self { eps })
    }

    /// Builds a profile from `(level, count)` runs, expanded in order.
    pub fn from_groups(groups: &[(f64, usize)]) -> Result<Self> {
        let eps = groups
            .iter()
            .flat_map(|&(v, c)| std::iter::repeat_n(v, c))
            .collect();
        Self::new(eps)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn has_infinite(&self) -> bool {
        self.eps.iter().any(|e| e.is_infinite())
    }

    pub fn sorted(&self) -> SortedProfile {
        sort_profile(self)
    }
}

pub fn validate_profile(raw: &[f64]) -> Result<PrivacyProfile> {
    PrivacyProfile::new(raw.to_vec())
}

/// Nondecreasing view of a profile plus the permutation back to it.
///
/// `perm[i]` is the original index of the user at sorted position `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedProfile {
    eps: Arc<[f64]>,
    perm: Arc<[usize]>,
}

/// Stable ascending sort; ties keep their original relative order.
pub fn sort_profile(p: &PrivacyProfile) -> SortedProfile {
    let mut perm: Vec<usize> = (0..p.len()).collect();
    perm.sort_by(|&a, &b| p.eps[a].total_cmp(&p.eps[b]));
    let eps = perm.iter().map(|&i| p.eps[i]).collect();
    SortedProfile {
        eps,
        perm: perm.into(),
    }
}

impl SortedProfile {
    /// Wraps an already nondecreasing list with the identity permutation.
    pub fn from_sorted(eps: Vec<f64>) -> Result<Self> {
        let p = PrivacyProfile::new(eps)?;
        if p.eps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("levels are not sorted".into()));
        }
        let perm = (0..p.len()).collect();
        Ok(Self {
            eps: p.eps.into(),
            perm,
        })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub(crate) fn shared(&self) -> (Arc<[f64]>, Arc<[usize]>) {
        (Arc::clone(&self.eps), Arc::clone(&self.perm))
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Smallest privacy level, `eps_1`.
    pub fn min_eps(&self) -> f64 {
        self.eps[0]
    }

    /// Largest privacy level, `eps_n`.
    pub fn max_eps(&self) -> f64 {
        self.eps[self.eps.len() - 1]
    }

    /// Reorders values given in sorted order back into original user order.
    pub fn unsort<T: Copy + Default>(&self, sorted: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); sorted.len()];
        for (&orig, &v) in self.perm.iter().zip(sorted) {
            out[orig] = v;
        }
        out
    }

    /// Reorders values given in original user order into sorted order.
    pub fn to_sorted_order<T: Copy>(&self, original: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| original[i]).collect()
    }

    pub fn to_profile(&self) -> PrivacyProfile {
        PrivacyProfile {
            eps: self.unsort(&self.eps),
        }
    }
}

/// One sample per user, each in `[-0.5, 0.5]`, in original user order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    x: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = x
            .iter()
            .enumerate()
            .find(|(_, &v)| !(-0.5..=0.5).contains(&v))
        {
            return Err(Error::SampleOutOfRange { index, value });
        }
        Ok(Self { x })
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len() as f64
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.x.len(),
            });
        }
        Ok(())
    }
}
