//! Day-averaged dual-uplink rate and single-pass connected ratio for two
//! equatorial stations as they move apart.
//!
//! ```text
//! cargo run --release --example separation_sweep
//! ```

use qcs_sim::link::ChannelParams;
use qcs_sim::traces::{self, SweepSettings};

fn main() -> qcs_sim::Result<()> {
    let params = ChannelParams::default();
    let settings = SweepSettings::default();
    let seps: Vec<f64> = (0..=16).map(|i| i as f64 * 250e3).collect();
    let points = traces::sweep_separation(&[500e3], &seps, &params, &settings)?;
    for p in &points {
        println!(
            "{:>6.0} km  mean product {:>12.1}  connected ratio {:.4}",
            p.separation_m / 1e3,
            p.mean_rate_product,
            p.connected_ratio
        );
    }
    let critical = traces::critical_separation(&params, 500e3, &settings, 10e3)?;
    println!("critical separation at 500 km: {:.0} km", critical / 1e3);
    Ok(())
}
