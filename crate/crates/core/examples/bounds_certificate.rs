//! Upper bound, lower bound and their ratio for a few profile shapes.

use hetdp::bounds::OPTIMALITY_CONSTANT;
use hetdp::{bounds_report, gen_eps, PrivacyProfile, Regime};

fn main() -> hetdp::Result<()> {
    let cases = vec![
        (
            "homogeneous eps=1, n=100",
            PrivacyProfile::new(vec![1.0; 100])?,
        ),
        ("single user eps=0.1", PrivacyProfile::new(vec![0.1])?),
        (
            "mixed with one public user",
            PrivacyProfile::new(vec![0.05, 0.2, 0.2, 3.0, f64::INFINITY])?,
        ),
        ("low regime, n=500", gen_eps(Regime::Low, 500, 3)?),
        ("high regime, n=500", gen_eps(Regime::High, 500, 3)?),
    ];

    for (name, profile) in &cases {
        let b = bounds_report(&profile.sorted());
        println!(
            "{name:<28} H={:.4e} (p={:>3})  f={:.4e}  min(f,1/4)={:.4e}  f/H={:.3}",
            b.h, b.p, b.f, b.upper, b.ratio
        );
        assert!(b.ratio <= OPTIMALITY_CONSTANT);
    }
    Ok(())
}
