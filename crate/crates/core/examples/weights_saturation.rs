//! How the recursion caps generous users.
//!
//! A thousand very private users plus a handful of lenient ones: everyone
//! from the first saturated position onward is granted the same level.

use hetdp::{compute_weights, PrivacyProfile};

fn main() -> hetdp::Result<()> {
    let mut raw = vec![0.1; 1000];
    raw.extend([0.5, 0.7, 1.0, 5.0, f64::INFINITY]);
    let profile = PrivacyProfile::new(raw)?;
    let sp = profile.sorted();
    let alloc = compute_weights(&sp);

    println!("sat_index = {:?}", alloc.sat_index());
    println!("eta       = {:.6e}", alloc.eta());
    println!("f         = {:.6e}", alloc.f_value());
    println!();
    println!("{:>6} {:>10} {:>12}", "user", "requested", "granted");
    let granted = alloc.granted();
    for i in [0, 999, 1000, 1001, 1002, 1003, 1004] {
        println!("{:>6} {:>10} {:>12.6}", i, profile.eps()[i], granted[i]);
    }
    Ok(())
}
