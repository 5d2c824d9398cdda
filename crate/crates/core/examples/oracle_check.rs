//! Cross-check ADPM's weights against a direct minimization over the simplex.
//!
//! ```bash
//! cargo run -p hetdp --features oracle --example oracle_check
//! ```

use hetdp::oracle::{domain_property_check_tol, simplex_minimize};
use hetdp::{compute_weights, NoiseSource, SortedProfile};

fn main() {
    let mut ns = NoiseSource::new(7, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 2 + (ns.uniform() * 7.0) as usize;
        let mut eps: Vec<f64> = (0..n).map(|_| (-4.0 + 6.0 * ns.uniform()).exp()).collect();
        eps.sort_by(f64::total_cmp);
        let sp = SortedProfile::from_sorted(eps.clone()).unwrap();
        let alloc = compute_weights(&sp);
        let oracle = simplex_minimize(&eps, 1e-10).unwrap();
        let gap = (alloc.f_value() - oracle.f_star).abs() / oracle.f_star;
        worst = worst.max(gap);
        println!(
            "n={n:2} f_adpm={:.10e} f_oracle={:.10e} rel_gap={gap:.2e} oracle_in_domain={}",
            alloc.f_value(),
            oracle.f_star,
            domain_property_check_tol(&oracle.w_star, &eps, 1e-6),
        );
    }
    println!("worst relative gap: {worst:.2e}");
}
