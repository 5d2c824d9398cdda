//! Monte-Carlo harness: privacy-level generators, data distributions, MSE
//! tables, weight traces and the `f` vs `H` scatter.
//!
//! Trial `t` draws its dataset from stream `2t` and its noise from stream
//! `2t + 1` of the configured seed. All methods in a trial see the same
//! dataset and the same noise stream, so differences between methods are
//! not masked by independent noise. Results do not depend on the number of
//! worker threads.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution as _, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::lower_bound_h;
use crate::mechanisms::{estimate, Method, NoiseSource};
use crate::sum::{compensated_sum, RunningSum};
use crate::types::{Dataset, PrivacyProfile, SortedProfile};
use crate::weights::{compute_weights, upper_bound_mse, WeightAllocation};
use crate::{Error, Result};

/// Stream used by [`gen_eps`]; trial streams start at 0, so this sits at the
/// top of the range.
const EPS_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `ln eps ~ U[-3, -2]`
    Low,
    /// `ln eps ~ U[-4, 2]`
    High,
}

impl Regime {
    pub fn log_range(self) -> (f64, f64) {
        match self {
            Regime::Low => (-3.0, -2.0),
            Regime::High => (-4.0, 2.0),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Regime::Low),
            "high" => Ok(Regime::High),
            other => Err(Error::InvalidConfig(format!("unknown regime `{other}`"))),
        }
    }
}

/// Log-uniform privacy levels: `eps_i = exp(u_i)` with `u_i` uniform on the
/// regime's interval.
pub fn gen_eps(regime: Regime, n: usize, seed: u64) -> Result<PrivacyProfile> {
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    let (a, b) = regime.log_range();
    let mut ns = NoiseSource::new(seed, EPS_STREAM);
    let eps = (0..n).map(|_| (a + (b - a) * ns.uniform()).exp()).collect();
    PrivacyProfile::new(eps)
}

/// Data distributions supported on `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Beta(alpha, beta) on `[0, 1]`, shifted down by 1/2.
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// +0.5 with probability `(1 + delta) / 2`, otherwise -0.5.
    BernoulliPair {
        delta: f64,
    },
    PointMass {
        value: f64,
    },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Beta { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()
            }
            Distribution::BernoulliPair { delta } => (-1.0..=1.0).contains(&delta),
            Distribution::PointMass { value } => (-0.5..=0.5).contains(&value),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(self.to_string()))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Beta { alpha, beta } => alpha / (alpha + beta) - 0.5,
            Distribution::BernoulliPair { delta } => delta / 2.0,
            Distribution::PointMass { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Distribution::BernoulliPair { delta } => (1.0 - delta * delta) / 4.0,
            Distribution::PointMass { .. } => 0.0,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Distribution::BernoulliPair { delta } => write!(f, "bernoulli:{delta}"),
            Distribution::PointMass { value } => write!(f, "point:{value}"),
        }
    }
}

/// Parses `beta:A,B`, `bernoulli:D` or `point:C`.
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDistribution(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let d = match (kind, nums.as_slice()) {
            ("beta", &[alpha, beta]) => Distribution::Beta { alpha, beta },
            ("bernoulli", &[delta]) => Distribution::BernoulliPair { delta },
            ("point", &[value]) => Distribution::PointMass { value },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Draws `n` i.i.d. samples. Beta variates come from the ratio of two gamma
/// draws.
pub fn sample_data(dist: &Distribution, n: usize, ns: &mut NoiseSource) -> Result<Dataset> {
    dist.validate()?;
    let x = match *dist {
        Distribution::Beta { alpha, beta } => {
            let ga =
                Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
            let gb =
                Gamma::new(beta, 1.0).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
            (0..n)
                .map(|_| {
                    let a = ga.sample(ns.rng());
                    let b = gb.sample(ns.rng());
                    (a / (a + b) - 0.5).clamp(-0.5, 0.5)
                })
                .collect()
        }
        Distribution::BernoulliPair { delta } => {
            let p = (1.0 + delta) / 2.0;
            (0..n)
                .map(|_| if ns.uniform() < p { 0.5 } else { -0.5 })
                .collect()
        }
        Distribution::PointMass { value } => vec![value; n],
    };
    Dataset::new(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub profile: PrivacyProfile,
    pub distribution: Distribution,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub clip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodStats {
    pub method: Method,
    pub mse: f64,
    pub ln_mse: f64,
    /// Sample standard deviation of the squared errors over `sqrt(trials)`.
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub distribution: Distribution,
    pub true_mean: f64,
    /// `Var(P) ||w||_2^2 + 2 eta^2` for ADPM's allocation (or the fallback's
    /// squared bias when the trivial estimator is used).
    pub predicted_adpm_mse: f64,
    /// `min(f, 1/4)`.
    pub worst_case_bound: f64,
    pub methods: Vec<MethodStats>,
}

impl SimulationReport {
    pub fn stats(&self, method: Method) -> Option<&MethodStats> {
        self.methods.iter().find(|s| s.method == method)
    }
}

/// Predicted MSE of ADPM's release under a distribution with the given
/// mean and variance.
pub fn predicted_adpm_mse(alloc: &WeightAllocation, mean: f64, variance: f64) -> f64 {
    if alloc.trivial_fallback() {
        return mean * mean;
    }
    let w2: f64 = alloc.w().iter().map(|w| w * w).sum();
    variance * w2 + 2.0 * alloc.eta() * alloc.eta()
}

/// Runs the configured trials on `threads` workers (machine parallelism when
/// `None`).
pub fn run_mse(config: &SimulationConfig, threads: Option<usize>) -> Result<SimulationReport> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods selected".into()));
    }
    config.distribution.validate()?;

    let sp = config.profile.sorted();
    let alloc = compute_weights(&sp);
    let mu = config.distribution.mean();
    let n = sp.len();

    let run_trial = |t: usize| -> Result<Vec<f64>> {
        let mut data_ns = NoiseSource::new(config.seed, 2 * t as u64);
        let data = sample_data(&config.distribution, n, &mut data_ns)?;
        config
            .methods
            .iter()
            .map(|&m| {
                let mut ns = NoiseSource::new(config.seed, 2 * t as u64 + 1);
                let est = estimate(m, &sp, &alloc, &data, &mut ns, config.clip)?;
                Ok((est.value - mu).powi(2))
            })
            .collect()
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let per_trial: Vec<Vec<f64>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(run_trial)
            .collect::<Result<_>>()
    })?;

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let sq: Vec<f64> = per_trial.iter().map(|row| row[k]).collect();
            let (mse, std_err) = mean_and_std_err(&sq);
            MethodStats {
                method,
                mse,
                ln_mse: mse.ln(),
                std_err,
            }
        })
        .collect();

    Ok(SimulationReport {
        n,
        trials: config.trials,
        seed: config.seed,
        distribution: config.distribution,
        true_mean: mu,
        predicted_adpm_mse: predicted_adpm_mse(&alloc, mu, config.distribution.variance()),
        worst_case_bound: upper_bound_mse(&alloc),
        methods,
    })
}

fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = compensated_sum(xs) / t;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = compensated_sum(&dev) / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// One plot row of a weight trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// 1-based sorted position.
    pub i: usize,
    pub eps: f64,
    pub r: f64,
}

pub fn trace_r(sp: &SortedProfile) -> Vec<TraceRow> {
    let alloc = compute_weights(sp);
    sp.eps()
        .iter()
        .zip(alloc.r())
        .enumerate()
        .map(|(k, (&eps, &r))| TraceRow { i: k + 1, eps, r })
        .collect()
}

/// Range of sequence lengths drawn by [`scatter_fh`].
pub const SCATTER_N_RANGE: (usize, usize) = (2, 200);
/// Range of `ln eps_1` drawn by [`scatter_fh`].
pub const SCATTER_LOG_EPS1_RANGE: (f64, f64) = (-4.0, 2.0);

/// Sequence that never saturates: each next level is drawn uniformly from
/// `[eps_k, (L2 + 8) / L1)`, the half-open gap below the saturation
/// threshold of the prefix.
pub fn unsaturated_sequence(n: usize, eps1: f64, ns: &mut NoiseSource) -> Vec<f64> {
    let mut eps = Vec::with_capacity(n);
    eps.push(eps1);
    let (mut l1, mut l2) = (RunningSum::new(), RunningSum::new());
    l1.add(eps1);
    l2.add(eps1 * eps1);
    while eps.len() < n {
        let lo = eps[eps.len() - 1];
        let hi = (l2.value() + 8.0) / l1.value();
        if hi.is_nan() || hi <= lo {
            // Gap closed by rounding; stop rather than emit a saturated level.
            break;
        }
        let next = loop {
            let v = lo + (hi - lo) * ns.uniform();
            if v < hi {
                break v;
            }
        };
        eps.push(next);
        l1.add(next);
        l2.add(next * next);
    }
    eps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub n: usize,
    pub ln_f: f64,
    pub ln_h: f64,
}

impl ScatterPoint {
    pub fn ratio(&self) -> f64 {
        (self.ln_f - self.ln_h).exp()
    }
}

/// Generates `num_sequences` unsaturated profiles and their `(ln f, ln H)`.
/// Sequence `j` uses stream `j` of `seed`.
pub fn scatter_fh(num_sequences: usize, seed: u64) -> Vec<ScatterPoint> {
    (0..num_sequences)
        .into_par_iter()
        .map(|j| {
            let mut ns = NoiseSource::new(seed, j as u64);
            let (n_lo, n_hi) = SCATTER_N_RANGE;
            let n = n_lo + ((n_hi - n_lo + 1) as f64 * ns.uniform()) as usize;
            let (a, b) = SCATTER_LOG_EPS1_RANGE;
            let eps1 = (a + (b - a) * ns.uniform()).exp();
            let eps = unsaturated_sequence(n.min(n_hi), eps1, &mut ns);
            let sp = SortedProfile::from_sorted(eps).expect("generated levels are sorted");
            let alloc = compute_weights(&sp);
            ScatterPoint {
                n: sp.len(),
                ln_f: alloc.f_value().ln(),
                ln_h: lower_bound_h(&sp).h.ln(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_regime_bounds_and_replay() {
        let p = gen_eps(Regime::Low, 1000, 11).unwrap();
        let (lo, hi) = ((-3.0f64).exp(), (-2.0f64).exp());
        assert!(p.eps().iter().all(|&e| (lo..=hi).contains(&e)));
        assert!(p.eps().iter().all(|&e| e <= 1.0));
        assert_eq!(p, gen_eps(Regime::Low, 1000, 11).unwrap());
        assert!(gen_eps(Regime::Low, 0, 11).is_err());
    }

    #[test]
    fn distribution_moments() {
        let b = Distribution::Beta {
            alpha: 2.0,
            beta: 3.0,
        };
        assert!((b.mean() + 0.1).abs() < 1e-15);
        assert!((b.variance() - 0.04).abs() < 1e-15);
        let bp = Distribution::BernoulliPair { delta: 0.0 };
        assert_eq!((bp.mean(), bp.variance()), (0.0, 0.25));

        let mut ns = NoiseSource::new(3, 0);
        let d = sample_data(&b, 200_000, &mut ns).unwrap();
        let m = d.mean();
        let v = d.values().iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64;
        assert!((m + 0.1).abs() < 3e-3, "{m}");
        assert!((v - 0.04).abs() < 2e-3, "{v}");

        let d = sample_data(&Distribution::PointMass { value: 0.25 }, 5, &mut ns).unwrap();
        assert_eq!(d.values(), &[0.25; 5]);
        let d = sample_data(&bp, 10_000, &mut ns).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.5 || x == -0.5));
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(
            "beta:2,3".parse::<Distribution>().unwrap(),
            Distribution::Beta {
                alpha: 2.0,
                beta: 3.0
            }
        );
        assert!("point:0.7".parse::<Distribution>().is_err());
        assert!("beta:2".parse::<Distribution>().is_err());
        assert!("normal:0,1".parse::<Distribution>().is_err());
    }

    #[test]
    fn point_mass_prop_mse_is_pure_noise() {
        let profile = PrivacyProfile::new(vec![0.5, 1.0, 2.0]).unwrap();
        let cfg = SimulationConfig {
            profile,
            distribution: Distribution::PointMass { value: 0.25 },
            trials: 20_000,
            methods: vec![Method::Prop],
            seed: 4,
            clip: false,
        };
        let rep = run_mse(&cfg, Some(2)).unwrap();
        let eta = 1.0 / 3.5;
        let s = rep.stats(Method::Prop).unwrap();
        assert!((s.mse - 2.0 * eta * eta).abs() < 4.0 * s.std_err);
    }

    #[test]
    fn trace_flattens_after_saturation() {
        let mut raw = vec![0.1; 1000];
        raw.extend([0.5, 0.7, 1.0, 5.0, f64::INFINITY]);
        let rows = trace_r(&PrivacyProfile::new(raw).unwrap().sorted());
        assert!(rows[1000..].iter().all(|r| (r.r - 0.18).abs() < 1e-12));
        assert!(rows.windows(2).all(|w| w[0].r <= w[1].r));
        let rows = trace_r(&PrivacyProfile::new(vec![0.3; 10]).unwrap().sorted());
        assert!(rows.iter().all(|r| r.r == r.eps));
    }

    #[test]
    fn scatter_sequences_stay_unsaturated() {
        let mut ns = NoiseSource::new(8, 0);
        for _ in 0..200 {
            let eps = unsaturated_sequence(150, 0.02, &mut ns);
            let sp = SortedProfile::from_sorted(eps).unwrap();
            assert_eq!(compute_weights(&sp).sat_index(), None);
        }
        let pts = scatter_fh(500, 1);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|p| p.ln_h >= p.ln_f - 443f64.ln()));
        assert!(pts.iter().all(|p| (2..=200).contains(&p.n)));
        assert_eq!(pts, scatter_fh(500, 1));
    }
}
