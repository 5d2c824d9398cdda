//! Monte-Carlo comparison of all methods in both privacy regimes.
//!
//! ```bash
//! cargo run --release -p hetdp --example table1_reproduction -- 10000
//! ```
//!
//! The optional argument is the number of trials (default 2000).

use hetdp::{gen_eps, run_mse, Distribution, Method, Regime, SimulationConfig};

fn main() -> hetdp::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);

    for regime in [Regime::Low, Regime::High] {
        let config = SimulationConfig {
            profile: gen_eps(regime, 1000, 1)?,
            distribution: Distribution::Beta {
                alpha: 2.0,
                beta: 3.0,
            },
            trials,
            methods: Method::ALL.to_vec(),
            seed: 1,
            clip: false,
        };
        let report = run_mse(&config, None)?;
        println!("{regime:?} regime, n=1000, {trials} trials");
        for s in &report.methods {
            println!(
                "  {:<5} ln MSE = {:>7.3}  (se {:.2e})",
                s.method.name(),
                s.ln_mse,
                s.std_err
            );
        }
        println!(
            "  predicted ADPM ln MSE = {:.3}\n",
            report.predicted_adpm_mse.ln()
        );
    }
    Ok(())
}
