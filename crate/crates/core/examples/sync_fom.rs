//! Figures of merit for the four-city network loaded from a scenario file,
//! across holdover times.
//!
//! ```text
//! cargo run --release --example sync_fom [scenarios/table1_leo.toml]
//! ```

use std::path::PathBuf;

use qcs_sim::scenario::{run_fom, Scenario};

fn main() -> qcs_sim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/table1_leo.toml"));
    let sc = Scenario::load(&path)?;
    let report = run_fom(&sc)?;
    println!("{:>6} {:>6} {:>8} {:>13} {:>13} {:>8} {:>7}", "cutoff", "tau", "pair", "up dB", "down dB", "conn %", "gap h");
    for f in &report.rows {
        println!(
            "{:>6} {:>6} {:>8} {:>6.0}/{:<6.0} {:>6.0}/{:<6.0} {:>8.1} {:>7.1}",
            f.cutoff,
            f.tau_s,
            f.pair_label(),
            f.avg_uplink_loss_db[0],
            f.avg_uplink_loss_db[1],
            f.avg_downlink_loss_db[0],
            f.avg_downlink_loss_db[1],
            f.percent_connected(),
            f.longest_gap_h()
        );
    }
    Ok(())
}
