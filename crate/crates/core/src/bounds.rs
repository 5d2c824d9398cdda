//! Minimax lower bound and the optimality certificate for ADPM.
//!
//! The lower-bound functional is
//!
//! ```text
//! H(eps) = max_{i = 0..n} 1 / (||eps_{1..i}||_1^2 + n - i)
//! ```
//!
//! over the sorted profile. ADPM's objective never exceeds `443 * H`, so the
//! ratio `f / H` reported here certifies optimality up to that constant.

use serde::Serialize;

use crate::types::SortedProfile;
use crate::weights::{compute_weights, upper_bound_mse};

/// Value of `H` and the smallest index `p` attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub h: f64,
    pub p: usize,
}

/// Single pass over prefix sums.
///
/// Once a prefix sum becomes infinite every later candidate is `1/inf = 0`,
/// which never beats the `i = 0` candidate `1/n`.
pub fn lower_bound_h(sp: &SortedProfile) -> LowerBound {
    let n = sp.len();
    let mut best = LowerBound {
        h: 1.0 / n as f64,
        p: 0,
    };
    let mut prefix = 0.0f64;
    for (i, &e) in sp.eps().iter().enumerate() {
        prefix += e;
        if prefix.is_infinite() {
            break;
        }
        let cand = 1.0 / (prefix * prefix + (n - i - 1) as f64);
        if cand > best.h {
            best = LowerBound { h: cand, p: i + 1 };
        }
    }
    best
}

/// Upper bound, lower bound and their ratio for one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub h: f64,
    pub p: usize,
    pub f: f64,
    pub upper: f64,
    pub ratio: f64,
}

pub fn bounds_report(sp: &SortedProfile) -> BoundsReport {
    let alloc = compute_weights(sp);
    let LowerBound { h, p } = lower_bound_h(sp);
    let f = alloc.f_value();
    BoundsReport {
        h,
        p,
        f,
        upper: upper_bound_mse(&alloc),
        ratio: f / h,
    }
}

/// Largest ratio constant proven to hold between `f` and `H`.
pub const OPTIMALITY_CONSTANT: f64 = 443.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate_profile;
    use proptest::prelude::*;

    fn sorted(raw: &[f64]) -> SortedProfile {
        validate_profile(raw).unwrap().sorted()
    }

    /// Every candidate evaluated independently, prefix recomputed each time.
    fn brute_force(eps: &[f64]) -> (f64, usize) {
        let n = eps.len();
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..=n {
            let s: f64 = eps[..i].iter().sum();
            let v = 1.0 / (s * s + (n - i) as f64);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    #[test]
    fn large_levels_peak_at_zero() {
        let lb = lower_bound_h(&sorted(&[100.0; 10]));
        assert_eq!(lb.p, 0);
        assert_eq!(lb.h, 0.1);
        assert_eq!(brute_force(&[100.0; 10]), (0.1, 0));
    }

    #[test]
    fn small_levels_peak_inside() {
        let lb = lower_bound_h(&sorted(&[0.1; 1000]));
        let (h, p) = brute_force(&[0.1; 1000]);
        assert_eq!(p, 50);
        assert_eq!((lb.h, lb.p), (h, p));
        assert!((lb.h - 1.0 / 975.0).abs() / lb.h < 1e-12);
    }

    #[test]
    fn public_users() {
        let lb = lower_bound_h(&sorted(&[f64::INFINITY]));
        assert_eq!((lb.h, lb.p), (1.0, 0));
        let lb = lower_bound_h(&sorted(&[f64::INFINITY; 4]));
        assert_eq!((lb.h, lb.p), (0.25, 0));
        let r = bounds_report(&sorted(&[f64::INFINITY; 4]));
        assert_eq!(r.ratio, 0.25);
    }

    #[test]
    fn report_examples() {
        let r = bounds_report(&sorted(&[0.1; 1000]));
        assert!((r.f - 4.5e-4).abs() < 1e-15);
        assert!((r.ratio - 0.4387).abs() < 1e-4);

        let r = bounds_report(&sorted(&[1.0; 100]));
        assert!((r.f - 2.7e-3).abs() < 1e-15);
        let (h, _) = brute_force(&[1.0; 100]);
        assert_eq!(r.h, h);
        assert!(r.ratio < OPTIMALITY_CONSTANT);
        assert!(r.h > 0.0 && r.h <= 1.0);
    }

    proptest! {
        #[test]
        fn single_pass_matches_brute_force(raw in prop::collection::vec((-4.0f64..2.0).prop_map(f64::exp), 1..200)) {
            let sp = sorted(&raw);
            let lb = lower_bound_h(&sp);
            prop_assert_eq!((lb.h, lb.p), brute_force(sp.eps()));
        }

        #[test]
        fn appending_a_user_never_hurts(raw in prop::collection::vec((-4.0f64..2.0).prop_map(f64::exp), 1..200),
                                        extra in (-4.0f64..3.0).prop_map(f64::exp)) {
            let before = bounds_report(&sorted(&raw)).upper;
            let mut more = raw.clone();
            more.push(extra);
            let after = bounds_report(&sorted(&more)).upper;
            prop_assert!(after <= before * (1.0 + 1e-12));
        }
    }
}
