//! Release one private mean with every method on the same data.

use hetdp::mechanisms::estimate;
use hetdp::{compute_weights, sample_data, Distribution, Method, NoiseSource, PrivacyProfile};

fn main() -> hetdp::Result<()> {
    let profile = PrivacyProfile::from_groups(&[(0.2, 300), (1.0, 150), (4.0, 50)])?;
    let sp = profile.sorted();
    let alloc = compute_weights(&sp);

    let dist: Distribution = "beta:2,5".parse()?;
    let data = sample_data(&dist, profile.len(), &mut NoiseSource::new(42, 0))?;
    println!("sample mean {:+.5}", data.mean());

    for (k, method) in Method::ALL.into_iter().enumerate() {
        // Separate stream per method so each release replays on its own.
        let mut ns = NoiseSource::new(42, 1 + k as u64);
        let est = estimate(method, &sp, &alloc, &data, &mut ns, false)?;
        println!(
            "{:<5} {:+.5}  (noise scale {:.3e})",
            method.name(),
            est.value,
            est.eta_used
        );
    }
    Ok(())
}
