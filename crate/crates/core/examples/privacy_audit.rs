//! Check that no user is granted a weaker level than requested, both from
//! the weights and from the Laplace density ratio on a grid of outputs.

use hetdp::mechanisms::max_log_density_ratio_excess;
use hetdp::{compute_weights, gen_eps, privacy_audit, Regime};

fn main() -> hetdp::Result<()> {
    for seed in 0..5 {
        let profile = gen_eps(Regime::High, 200, seed)?;
        let alloc = compute_weights(&profile.sorted());
        let granted = privacy_audit(&alloc)?;
        let slack = profile
            .eps()
            .iter()
            .zip(&granted)
            .map(|(e, g)| e - g)
            .fold(f64::INFINITY, f64::min);
        println!(
            "seed {seed}: min(requested - granted) = {slack:.3e}, density excess = {:.3e}",
            max_log_density_ratio_excess(&alloc)
        );
    }
    Ok(())
}
