//! Mean estimation under heterogeneous differential privacy.
//!
//! Every user `i` contributes one sample in `[-0.5, 0.5]` together with an
//! individual privacy level `eps_i`. The crate computes the minimax-optimal
//! affine estimator (ADPM) for such a profile, the lower-bound functional that
//! certifies its optimality, the usual baselines, and a Monte-Carlo harness.
//!
//! ```
//! use hetdp::{compute_weights, PrivacyProfile};
//!
//! let mut raw = vec![0.1; 1000];
//! raw.extend([0.5, 0.7, 1.0, 5.0, f64::INFINITY]);
//! let profile = PrivacyProfile::new(raw).unwrap();
//! let alloc = compute_weights(&profile.sorted());
//! assert!((alloc.granted()[1004] - 0.18).abs() < 1e-12);
//! ```

pub mod bounds;
pub mod cli;
mod error;
pub mod io;
pub mod mechanisms;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod simulation;
pub mod sum;
pub mod types;
pub mod weights;

pub use bounds::{bounds_report, lower_bound_h, BoundsReport, LowerBound};
pub use error::{Error, Result};
pub use mechanisms::{
    adpm_estimate, laplace_sample, ldpe_estimate, privacy_audit, prop_estimate, sm_estimate,
    uni_estimate, Estimate, Method, NoiseSource,
};
pub use simulation::{
    gen_eps, run_mse, sample_data, scatter_fh, trace_r, Distribution, Regime, SimulationConfig,
    SimulationReport,
};
pub use types::{sort_profile, validate_profile, Dataset, PrivacyProfile, SortedProfile};
pub use weights::{
    compute_weights, compute_weights_grouped, objective_f, saturation_threshold, upper_bound_mse,
    GroupedAllocation, ObjectiveValue, WeightAllocation,
};
