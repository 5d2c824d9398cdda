//! How far the achieved objective sits above the lower bound on random
//! unsaturated profiles.

use hetdp::scatter_fh;

fn main() {
    let points = scatter_fh(2000, 11);
    let worst = points
        .iter()
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
        .expect("non-empty");
    let mean_ratio = points.iter().map(|p| p.ratio()).sum::<f64>() / points.len() as f64;
    println!("sequences    {}", points.len());
    println!("mean f/H     {mean_ratio:.3}");
    println!("max  f/H     {:.3} at n={}", worst.ratio(), worst.n);
}
