//! Privatized mean estimators: ADPM's release step and the baselines it is
//! compared against (UNI, SM, LDPE, PropDPM).
//!
//! Every estimator takes the dataset in original user order and permutes
//! internally. Randomness comes from a [`NoiseSource`], so any estimate can
//! be replayed from its `(seed, stream_id)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::sum::RunningSum;
use crate::types::{Dataset, SortedProfile};
use crate::weights::WeightAllocation;
use crate::{Error, Result};

/// Replayable random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// Inverse-CDF Laplace draw: `-scale * sign(u) * ln(1 - 2|u|)` with `u`
/// uniform on `(-1/2, 1/2)`. Scale zero returns exactly zero without
/// consuming randomness.
pub fn laplace_sample(scale: f64, ns: &mut NoiseSource) -> Result<f64> {
    if scale.is_nan() || scale < 0.0 {
        return Err(Error::NegativeScale(scale));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let u = loop {
        let u = ns.uniform() - 0.5;
        if u != -0.5 {
            break u;
        }
    };
    Ok(-scale * u.signum() * (-2.0 * u.abs()).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Adpm,
    Uni,
    Sm,
    Ldpe,
    Prop,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Adpm,
        Method::Prop,
        Method::Ldpe,
        Method::Sm,
        Method::Uni,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Adpm => "ADPM",
            Method::Uni => "UNI",
            Method::Sm => "SM",
            Method::Ldpe => "LDPE",
            Method::Prop => "PROP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adpm" => Ok(Method::Adpm),
            "uni" => Ok(Method::Uni),
            "sm" => Ok(Method::Sm),
            "ldpe" => Ok(Method::Ldpe),
            "prop" | "propdpm" => Ok(Method::Prop),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// One released value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    /// Laplace scale added to the release. For LDPE, whose noise is a sum
    /// of per-user Laplace terms, this is the scale of a single Laplace
    /// variable with the same variance.
    pub eta_used: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl Estimate {
    fn new(value: f64, method: Method, eta_used: f64, ns: &NoiseSource) -> Self {
        Self {
            value,
            method,
            eta_used,
            seed: ns.seed(),
            stream_id: ns.stream_id(),
        }
    }
}

/// `<w, x_sorted> + Laplace(eta)` with `w` given in sorted order.
fn affine_release(
    w: impl Iterator<Item = f64>,
    perm: &[usize],
    data: &Dataset,
    eta: f64,
    ns: &mut NoiseSource,
) -> Result<f64> {
    let x = data.values();
    let mut acc = RunningSum::new();
    for (wi, &orig) in w.zip(perm) {
        acc.add(wi * x[orig]);
    }
    Ok(acc.value() + laplace_sample(eta, ns)?)
}

/// ADPM release. Returns 0 without noise when the allocation's objective
/// exceeds 1/4; `clip` projects the release onto `[-0.5, 0.5]`.
pub fn adpm_estimate(
    alloc: &WeightAllocation,
    data: &Dataset,
    ns: &mut NoiseSource,
    clip: bool,
) -> Result<Estimate> {
    data.check_len(alloc.len())?;
    if alloc.trivial_fallback() {
        return Ok(Estimate::new(0.0, Method::Adpm, 0.0, ns));
    }
    let mut value = affine_release(
        (0..alloc.len()).map(|i| alloc.w_at(i)),
        alloc.perm(),
        data,
        alloc.eta(),
        ns,
    )?;
    if clip {
        value = value.clamp(-0.5, 0.5);
    }
    Ok(Estimate::new(value, Method::Adpm, alloc.eta(), ns))
}

/// Sample mean with every user held to the strictest level `eps_1`.
/// An all-public profile releases the plain mean.
pub fn uni_estimate(sp: &SortedProfile, data: &Dataset, ns: &mut NoiseSource) -> Result<Estimate> {
    data.check_len(sp.len())?;
    let n = sp.len() as f64;
    let eta = if sp.min_eps().is_infinite() {
        0.0
    } else {
        1.0 / (n * sp.min_eps())
    };
    let mut acc = RunningSum::new();
    data.values().iter().for_each(|&x| acc.add(x));
    let value = acc.value() / n + laplace_sample(eta, ns)?;
    Ok(Estimate::new(value, Method::Uni, eta, ns))
}

/// Probability with which SM keeps a user of level `eps` when the largest
/// level is `t`: `(e^eps - 1) / (e^t - 1)`, evaluated without overflow.
pub fn sm_keep_probability(eps: f64, t: f64) -> f64 {
    if eps >= t {
        return 1.0;
    }
    (eps - t).exp() * (-eps).exp_m1() / (-t).exp_m1()
}

/// Sampling mechanism: Bernoulli subsample with [`sm_keep_probability`],
/// then the subsample mean plus `Laplace(1 / (N_s t))`. An empty subsample
/// releases 0.
pub fn sm_estimate(sp: &SortedProfile, data: &Dataset, ns: &mut NoiseSource) -> Result<Estimate> {
    data.check_len(sp.len())?;
    let t = sp.max_eps();
    if t.is_infinite() {
        return Err(Error::InfiniteEpsilonUnsupported { method: "SM" });
    }
    let x = data.values();
    let mut kept = 0usize;
    let mut acc = RunningSum::new();
    for (&e, &orig) in sp.eps().iter().zip(sp.perm()) {
        if ns.uniform() < sm_keep_probability(e, t) {
            kept += 1;
            acc.add(x[orig]);
        }
    }
    if kept == 0 {
        return Ok(Estimate::new(0.0, Method::Sm, 0.0, ns));
    }
    let eta = 1.0 / (kept as f64 * t);
    let value = acc.value() / kept as f64 + laplace_sample(eta, ns)?;
    Ok(Estimate::new(value, Method::Sm, eta, ns))
}

/// Worst-case data variance used as the proxy in LDPE's combination weights.
pub const LDPE_VARIANCE_PROXY: f64 = 0.25;

/// LDPE combination weights in sorted order: `v_i ∝ 1 / (1/4 + 2 / eps_i^2)`.
pub fn ldpe_weights(eps: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = eps
        .iter()
        .map(|&e| 1.0 / (LDPE_VARIANCE_PROXY + 2.0 / (e * e)))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Local-model estimator: each user adds `Laplace(1 / eps_i)` to their own
/// value and the server releases the inverse-variance weighted combination.
pub fn ldpe_estimate(sp: &SortedProfile, data: &Dataset, ns: &mut NoiseSource) -> Result<Estimate> {
    data.check_len(sp.len())?;
    let v = ldpe_weights(sp.eps());
    let x = data.values();
    let mut acc = RunningSum::new();
    let mut noise_var = 0.0;
    for ((&vi, &e), &orig) in v.iter().zip(sp.eps()).zip(sp.perm()) {
        let local_scale = 1.0 / e;
        let y = x[orig] + laplace_sample(local_scale, ns)?;
        acc.add(vi * y);
        noise_var += vi * vi * 2.0 * local_scale * local_scale;
    }
    Ok(Estimate::new(
        acc.value(),
        Method::Ldpe,
        (noise_var / 2.0).sqrt(),
        ns,
    ))
}

/// PropDPM weights and scale in sorted order.
///
/// With public users present, proportional weights collapse onto them:
/// uniform over the infinite entries and no noise.
pub fn prop_weights(sp: &SortedProfile) -> (Vec<f64>, f64) {
    let eps = sp.eps();
    let public = eps.iter().filter(|e| e.is_infinite()).count();
    if public > 0 {
        let w = eps
            .iter()
            .map(|e| {
                if e.is_infinite() {
                    1.0 / public as f64
                } else {
                    0.0
                }
            })
            .collect();
        return (w, 0.0);
    }
    let mut l1 = RunningSum::new();
    eps.iter().for_each(|&e| l1.add(e));
    // Same rounding as the ADPM weights, so the two agree exactly when
    // nobody saturates.
    let eta = 1.0 / l1.value();
    (eps.iter().map(|&e| e * eta).collect(), eta)
}

/// Affine estimator with weights proportional to the privacy levels.
pub fn prop_estimate(sp: &SortedProfile, data: &Dataset, ns: &mut NoiseSource) -> Result<Estimate> {
    data.check_len(sp.len())?;
    let (w, eta) = prop_weights(sp);
    let value = affine_release(w.into_iter(), sp.perm(), data, eta, ns)?;
    Ok(Estimate::new(value, Method::Prop, eta, ns))
}

/// Dispatches to the estimator for `method`.
pub fn estimate(
    method: Method,
    sp: &SortedProfile,
    alloc: &WeightAllocation,
    data: &Dataset,
    ns: &mut NoiseSource,
    clip: bool,
) -> Result<Estimate> {
    match method {
        Method::Adpm => adpm_estimate(alloc, data, ns, clip),
        Method::Uni => uni_estimate(sp, data, ns),
        Method::Sm => sm_estimate(sp, data, ns),
        Method::Ldpe => ldpe_estimate(sp, data, ns),
        Method::Prop => prop_estimate(sp, data, ns),
    }
}

/// Privacy granted to each user (original order): `w_i / eta = r_i`.
///
/// Fails if any user is granted a weaker guarantee than requested.
pub fn privacy_audit(alloc: &WeightAllocation) -> Result<Vec<f64>> {
    let granted = alloc.granted();
    for (sorted_pos, (&r, &e)) in alloc.r().iter().zip(alloc.eps()).enumerate() {
        if r > e {
            return Err(Error::PrivacyViolation {
                index: alloc.perm()[sorted_pos],
                granted: r,
                requested: e,
            });
        }
    }
    Ok(granted)
}

/// Largest value of `ln(p(s | x) / p(s | x')) - eps_i` over neighbouring
/// datasets that swap user `i` between -0.5 and 0.5, for outputs `s` on the
/// grid `[-2, 2]` with step 0.01.
///
/// Nonpositive (up to rounding) means every user's guarantee holds on the
/// grid. Allocations that release without noise are skipped when all users
/// are public, and the trivial fallback (constant output) scores 0.
pub fn max_log_density_ratio_excess(alloc: &WeightAllocation) -> f64 {
    if alloc.trivial_fallback() || alloc.eta() == 0.0 {
        return 0.0;
    }
    let eta = alloc.eta();
    let grid: Vec<f64> = (0..=400).map(|k| -2.0 + 0.01 * k as f64).collect();
    let mut worst = f64::NEG_INFINITY;
    for (&wi, &e) in alloc.w().iter().zip(alloc.eps()) {
        // Other users fixed at 0; only the swapped coordinate moves the mean.
        let (m, m_prime) = (-0.5 * wi, 0.5 * wi);
        for &s in &grid {
            let log_ratio = ((s - m_prime).abs() - (s - m).abs()) / eta;
            worst = worst.max(log_ratio.abs() - e);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{compute_weights, validate_profile};

    fn sorted(raw: &[f64]) -> SortedProfile {
        validate_profile(raw).unwrap().sorted()
    }

    #[test]
    fn zero_scale_is_exact() {
        let mut ns = NoiseSource::new(1, 0);
        assert_eq!(laplace_sample(0.0, &mut ns).unwrap(), 0.0);
        assert!(matches!(
            laplace_sample(-1.0, &mut ns),
            Err(Error::NegativeScale(_))
        ));
    }

    #[test]
    fn laplace_replays() {
        let a = laplace_sample(0.3, &mut NoiseSource::new(42, 7)).unwrap();
        let b = laplace_sample(0.3, &mut NoiseSource::new(42, 7)).unwrap();
        let c = laplace_sample(0.3, &mut NoiseSource::new(42, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn laplace_variance_matches_pdf() {
        let mut ns = NoiseSource::new(2024, 0);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| laplace_sample(1.0, &mut ns).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((var - 2.0).abs() / 2.0 < 0.02, "variance {var}");
        assert!(mean.abs() < 0.01);
    }

    #[test]
    fn fallback_releases_zero() {
        let alloc = compute_weights(&sorted(&[2.0]));
        let data = Dataset::new(vec![0.4]).unwrap();
        let est = adpm_estimate(&alloc, &data, &mut NoiseSource::new(0, 0), false).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.eta_used, 0.0);
    }

    #[test]
    fn adpm_weighted_sum_without_noise() {
        let alloc = compute_weights(&sorted(&[1.0; 4]));
        let data = Dataset::new(vec![0.5; 4]).unwrap();
        let est = adpm_estimate(&alloc, &data, &mut NoiseSource::new(9, 3), false).unwrap();
        let noise = laplace_sample(alloc.eta(), &mut NoiseSource::new(9, 3)).unwrap();
        assert_eq!(alloc.eta(), 0.25);
        assert!((est.value - noise - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_projects() {
        let alloc = compute_weights(&sorted(&[0.05; 3]));
        let data = Dataset::new(vec![0.5; 3]).unwrap();
        for seed in 0..50 {
            let e = adpm_estimate(&alloc, &data, &mut NoiseSource::new(seed, 0), true).unwrap();
            assert!((-0.5..=0.5).contains(&e.value));
        }
    }

    #[test]
    fn length_mismatch_is_reported() {
        let sp = sorted(&[1.0, 2.0]);
        let alloc = compute_weights(&sp);
        let data = Dataset::new(vec![0.1]).unwrap();
        let mut ns = NoiseSource::new(0, 0);
        assert!(matches!(
            adpm_estimate(&alloc, &data, &mut ns, false),
            Err(Error::LengthMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(uni_estimate(&sp, &data, &mut ns).is_err());
        assert!(sm_estimate(&sp, &data, &mut ns).is_err());
        assert!(ldpe_estimate(&sp, &data, &mut ns).is_err());
        assert!(prop_estimate(&sp, &data, &mut ns).is_err());
    }

    #[test]
    fn uni_single_user() {
        let sp = sorted(&[1.0]);
        let data = Dataset::new(vec![0.2]).unwrap();
        let est = uni_estimate(&sp, &data, &mut NoiseSource::new(5, 0)).unwrap();
        let noise = laplace_sample(1.0, &mut NoiseSource::new(5, 0)).unwrap();
        assert_eq!(est.eta_used, 1.0);
        assert!((est.value - (0.2 + noise)).abs() < 1e-15);
    }

    #[test]
    fn sm_probabilities() {
        assert_eq!(sm_keep_probability(0.7, 0.7), 1.0);
        let p = sm_keep_probability(0.1, 5.0);
        let direct = (0.1f64.exp() - 1.0) / (5.0f64.exp() - 1.0);
        assert!((p - direct).abs() / direct < 1e-12);
        assert!((p - 7.13e-4).abs() < 0.01e-4);
        // No overflow for huge t.
        assert!(sm_keep_probability(1.0, 1000.0) >= 0.0);
    }

    #[test]
    fn sm_homogeneous_is_uni_at_t() {
        let sp = sorted(&[0.7; 5]);
        let data = Dataset::new(vec![0.1, 0.2, 0.3, -0.1, 0.0]).unwrap();
        let est = sm_estimate(&sp, &data, &mut NoiseSource::new(3, 0)).unwrap();
        assert!((est.eta_used - 1.0 / (5.0 * 0.7)).abs() < 1e-15);
    }

    #[test]
    fn sm_rejects_public_users() {
        let sp = sorted(&[0.7, f64::INFINITY]);
        let data = Dataset::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            sm_estimate(&sp, &data, &mut NoiseSource::new(3, 0)),
            Err(Error::InfiniteEpsilonUnsupported { .. })
        ));
    }

    #[test]
    fn ldpe_weight_ratio() {
        let v = ldpe_weights(&[0.1, 10.0]);
        let expected = (0.25 + 200.0) / (0.25 + 0.02);
        assert!((v[1] / v[0] - expected).abs() / expected < 1e-12);
        assert!((v[1] / v[0] - 741.7).abs() < 0.1);
        let v = ldpe_weights(&[0.3; 4]);
        assert!(v.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        // Public users carry no local noise.
        assert_eq!(ldpe_weights(&[f64::INFINITY])[0], 1.0);
    }

    #[test]
    fn prop_normalizes_levels() {
        let (w, eta) = prop_weights(&sorted(&[0.1, 0.3]));
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
        assert!((eta - 2.5).abs() < 1e-15);

        let mut raw = vec![0.1; 999];
        raw.push(f64::INFINITY);
        let sp = sorted(&raw);
        let (w, eta) = prop_weights(&sp);
        assert_eq!(eta, 0.0);
        assert_eq!(w[999], 1.0);
        let mut x = vec![0.0; 1000];
        x[999] = 0.5;
        let est =
            prop_estimate(&sp, &Dataset::new(x).unwrap(), &mut NoiseSource::new(0, 0)).unwrap();
        assert_eq!(est.value, 0.5);
    }

    #[test]
    fn prop_equals_adpm_without_saturation() {
        let sp = sorted(&[0.8; 6]);
        let alloc = compute_weights(&sp);
        let data = Dataset::new(vec![0.1, -0.2, 0.3, 0.4, 0.0, -0.5]).unwrap();
        let a = adpm_estimate(&alloc, &data, &mut NoiseSource::new(1, 1), false).unwrap();
        let p = prop_estimate(&sp, &data, &mut NoiseSource::new(1, 1)).unwrap();
        assert_eq!(a.value, p.value);
    }

    #[test]
    fn audit_reports_granted() {
        let mut raw = vec![0.1; 1000];
        raw.extend([0.5, 0.7, 1.0, 5.0, f64::INFINITY]);
        let alloc = compute_weights(&sorted(&raw));
        let g = privacy_audit(&alloc).unwrap();
        assert!(g[1000..].iter().all(|&v| (v - 0.18).abs() < 1e-12));

        let raw = [0.3, 0.2, 0.5];
        let alloc = compute_weights(&sorted(&raw));
        assert_eq!(privacy_audit(&alloc).unwrap(), raw.to_vec());

        let alloc = compute_weights(&sorted(&[0.2]));
        assert_eq!(privacy_audit(&alloc).unwrap(), vec![0.2]);
    }

    #[test]
    fn density_ratio_within_budget() {
        let mut raw = vec![0.1; 100];
        raw.extend([0.5, 3.0, f64::INFINITY]);
        let alloc = compute_weights(&sorted(&raw));
        assert!(max_log_density_ratio_excess(&alloc) <= 1e-12);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("adpm".parse::<Method>().unwrap(), Method::Adpm);
        assert_eq!("PropDPM".parse::<Method>().unwrap(), Method::Prop);
        assert!("fme".parse::<Method>().is_err());
    }
}
