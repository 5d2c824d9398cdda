//! Millions of users with few distinct levels, without expanding them.

use hetdp::compute_weights_grouped;

fn main() -> hetdp::Result<()> {
    let groups = [
        (0.01, 5_000_000),
        (0.5, 200_000),
        (2.0, 10_000),
        (f64::INFINITY, 3),
    ];
    let g = compute_weights_grouped(&groups)?;
    println!("users       {}", groups.iter().map(|g| g.1).sum::<usize>());
    println!("sat_index   {:?}", g.sat_index);
    println!("f           {:.6e}", g.f_value);
    println!("eta         {:.6e}", g.eta);
    for gw in &g.groups {
        println!(
            "  eps={:<8} count={:<8} granted={:.6}",
            gw.eps, gw.count, gw.r
        );
    }
    Ok(())
}
