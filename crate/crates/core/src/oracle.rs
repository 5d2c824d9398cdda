//! Brute-force reference solvers used to certify the fast paths.
//!
//! Nothing here is on the production path; the module is only compiled with
//! the `oracle` feature, which the test suite turns on.

use serde::Serialize;

use crate::{Error, Result};

/// Largest instance [`simplex_minimize`] accepts.
pub const MAX_ORACLE_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub w_star: Vec<f64>,
    pub f_star: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `||w||_2^2 / 4 + 2 ||w / eps||_inf^2` for `w` on the simplex.
pub fn simplex_objective(w: &[f64], eps: &[f64]) -> f64 {
    let l2: f64 = w.iter().map(|v| v * v).sum();
    let m = w.iter().zip(eps).map(|(v, e)| v / e).fold(0.0, f64::max);
    l2 / 4.0 + 2.0 * m * m
}

/// Minimizes the worst-case MSE objective directly over the simplex,
/// without using the weight recursion.
///
/// Fixing the max-ratio level `s` turns the problem into a minimum-norm
/// point on the capped simplex `{w : sum w = 1, 0 <= w_i <= s eps_i}`, whose
/// solution is the water-filling `w_i = min(s eps_i, tau)`. The resulting
/// value `g(s) = ||w(s)||^2 / 4 + 2 s^2` is convex in `s`, so a golden-section
/// search over the feasible range of `s` finds the optimum. A pairwise
/// exchange descent then polishes the point: it stops once no transfer of
/// mass of size at least `tol` between two coordinates lowers the objective.
pub fn simplex_minimize(eps: &[f64], tol: f64) -> Result<OracleResult> {
    let n = eps.len();
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge {
            n,
            max: MAX_ORACLE_N,
        });
    }
    if eps.iter().any(|e| !e.is_finite() || *e <= 0.0) || tol.is_nan() || tol <= 0.0 {
        return Err(Error::NonFinite);
    }

    let total: f64 = eps.iter().sum();
    let min_eps = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (1.0 / total, 1.0 / (n as f64 * min_eps));
    let g = |s: f64| {
        let w = water_fill(eps, s);
        let l2: f64 = w.iter().map(|v| v * v).sum();
        l2 / 4.0 + 2.0 * s * s
    };

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    let mut iterations = 0;
    while hi - lo > 1e-15 * hi && iterations < 500 {
        iterations += 1;
        if ga <= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - phi * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + phi * (hi - lo);
            gb = g(b);
        }
    }
    let mut w = water_fill(eps, 0.5 * (lo + hi));
    let mut f = simplex_objective(&w, eps);
    let (polish_iters, polished) = pairwise_descent(&mut w, &mut f, eps, tol);

    Ok(OracleResult {
        w_star: w,
        f_star: f,
        iterations: iterations + polish_iters,
        converged: polished,
    })
}

/// Minimum-norm simplex point with `w_i <= s eps_i`.
fn water_fill(eps: &[f64], s: f64) -> Vec<f64> {
    let caps: Vec<f64> = eps.iter().map(|e| s * e).collect();
    let mass = |tau: f64| caps.iter().map(|&c| c.min(tau)).sum::<f64>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w: Vec<f64> = caps.iter().map(|&c| c.min(hi)).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Moves mass between coordinate pairs while it helps; step halves down to
/// `tol`. Returns the number of accepted moves and whether it stopped on
/// its own before the move budget ran out.
fn pairwise_descent(w: &mut [f64], f: &mut f64, eps: &[f64], tol: f64) -> (usize, bool) {
    let n = w.len();
    let mut moves = 0;
    let mut step = 1e-3;
    while step >= tol {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || w[i] < step {
                    continue;
                }
                w[i] -= step;
                w[j] += step;
                let cand = simplex_objective(w, eps);
                if cand < *f {
                    *f = cand;
                    improved = true;
                    moves += 1;
                } else {
                    w[i] += step;
                    w[j] -= step;
                }
            }
        }
        if moves > 100_000 {
            return (moves, false);
        }
        if !improved {
            step /= 2.0;
        }
    }
    (moves, true)
}

/// Lower-bound functional by recomputing every prefix sum from scratch.
///
/// Uses the same left-to-right summation as the single-pass version, so the
/// two agree bit for bit.
pub fn naive_h(eps: &[f64]) -> (f64, usize) {
    let n = eps.len();
    let mut best = (1.0 / n as f64, 0);
    for i in 1..=n {
        let mut s = 0.0f64;
        for &e in &eps[..i] {
            s += e;
        }
        let cand = if s.is_infinite() {
            0.0
        } else {
            1.0 / (s * s + (n - i) as f64)
        };
        if cand > best.0 {
            best = (cand, i);
        }
    }
    best
}

/// True iff `w_i / eps_i` is nonincreasing along the sorted profile.
pub fn domain_property_check(w: &[f64], eps: &[f64]) -> bool {
    domain_property_check_tol(w, eps, 0.0)
}

/// Same as [`domain_property_check`] but tolerates increases up to `tol`.
pub fn domain_property_check_tol(w: &[f64], eps: &[f64], tol: f64) -> bool {
    w.len() == eps.len()
        && w.iter()
            .zip(eps)
            .map(|(v, e)| v / e)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|p| p[1] <= p[0] + tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_is_uniform() {
        for n in 1..=12 {
            let eps = vec![0.7; n];
            let res = simplex_minimize(&eps, 1e-10).unwrap();
            let nf = n as f64;
            let expected = 1.0 / (4.0 * nf) + 2.0 / (nf * 0.7).powi(2);
            assert!((res.f_star - expected).abs() <= 1e-10 * expected);
            assert!(res.w_star.iter().all(|&w| (w - 1.0 / nf).abs() < 1e-6));
        }
    }

    #[test]
    fn singleton() {
        let res = simplex_minimize(&[0.4], 1e-10).unwrap();
        assert_eq!(res.w_star, vec![1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            simplex_minimize(&[1.0; 13], 1e-10),
            Err(Error::TooLarge { n: 13, .. })
        ));
        assert!(matches!(
            simplex_minimize(&[1.0, f64::INFINITY], 1e-10),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn naive_h_examples() {
        assert_eq!(naive_h(&[100.0; 10]), (0.1, 0));
        assert_eq!(naive_h(&[f64::INFINITY]), (1.0, 0));
    }

    #[test]
    fn domain_check() {
        assert!(!domain_property_check(&[0.2, 0.8], &[1.0, 1.0]));
        assert!(domain_property_check(&[0.5, 0.5], &[1.0, 1.0]));
        assert!(domain_property_check(&[0.25, 0.25, 0.5], &[1.0, 1.0, 3.0]));
    }

    #[test]
    fn simplex_sums_to_one() {
        let res = simplex_minimize(&[0.1, 0.2, 5.0, 9.0], 1e-10).unwrap();
        let s: f64 = res.w_star.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(res.w_star.iter().all(|&v| v >= 0.0));
    }
}
