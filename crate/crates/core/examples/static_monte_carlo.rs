//! Two-way offset estimation Monte Carlo over a range of link losses.
//!
//! ```text
//! cargo run --release --example static_monte_carlo [instances] [jitter_sigma_ps]
//! ```

use qcs_sim::timestamps::{run_static_scenario, DetectorModel, StaticScenario};

fn main() -> qcs_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let instances: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let sigma_ps: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.0);
    let detector = DetectorModel::with_jitter_sigma(0.5, 1000.0, sigma_ps * 1e-12, 50e-12)?;

    println!("{:>5} {:>8} {:>9} {:>13} {:>12}", "loss", "success", "ebits/s", "snr", "err ps");
    for loss in [34.0, 38.0, 42.0, 44.0, 46.0] {
        let mut sc = StaticScenario::new(loss, detector, 7);
        sc.n_instances = instances;
        let s = run_static_scenario(&sc)?.summary;
        println!(
            "{loss:>5} {:>7.0}% {:>9.1} {:>6.1} ± {:<4.1} {:>5.0} ± {:<4.0}",
            s.success_pct, s.mean_ebit_rate, s.snr_mean, s.snr_sd, s.err_success_mean_ps, s.err_success_sd_ps
        );
    }
    Ok(())
}
