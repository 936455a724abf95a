//! Uplink and downlink ebit rates against elevation for a 500 km satellite.
//!
//! ```text
//! cargo run --release --example link_budget
//! ```

use qcs_sim::geo;
use qcs_sim::link::{self, ChannelParams, Direction};

fn main() -> qcs_sim::Result<()> {
    let params = ChannelParams::default();
    let h = 500e3;
    println!("{:>8} {:>10} {:>12} {:>12} {:>9} {:>9}", "gamma", "range_km", "down/s", "up/s", "down_dB", "up_dB");
    for gamma_deg in (0..=18).step_by(2) {
        let gamma = (gamma_deg as f64).to_radians();
        let down = link::rate_at_central_angle(&params, h, gamma, Direction::Down);
        let up = link::rate_at_central_angle(&params, h, gamma, Direction::Up);
        println!(
            "{gamma_deg:>8} {:>10.0} {down:>12.1} {up:>12.1} {:>9.2} {:>9.2}",
            geo::slant_range(h, gamma) / 1e3,
            link::loss_db(down, params.source_rate),
            link::loss_db(up, params.source_rate),
        );
    }

    // the bare capture fraction for a diffraction-limited 8 cm beam
    let eta = link::eta_freespace(500e3, 0.08, 0.60, 810e-9);
    println!("capture fraction at 500 km, 8 cm -> 60 cm: {eta:.6}");
    Ok(())
}
