//! Orbital periods, a satellite's ground geometry over one pass, and the
//! trajectory dump for a small constellation.
//!
//! ```text
//! cargo run --release --example orbit_geometry
//! ```

use qcs_sim::geo::{self, CircularOrbit, Constellation, GroundStation};

fn main() -> qcs_sim::Result<()> {
    for h_km in [0.0, 500.0, 5000.0] {
        println!("h = {h_km:>6} km  period = {:.1} s", geo::period_at_altitude(h_km * 1e3));
    }

    let orbit = CircularOrbit::new(500e3, 50.0, 0.0, 0.0, 5)?;
    let nyc = GroundStation::new("NYC", 40.7128, -74.0060)?;
    let mask = 82f64.to_radians();

    // first visible window of satellite 0 over New York
    let mut in_view = false;
    for t in (0..86_400).step_by(10) {
        let pos = geo::satellite_position(&orbit, 0, t as f64)?;
        let g = geo::link_geometry(&pos, &nyc, t as f64, mask);
        if g.visible != in_view {
            println!(
                "t = {t:>6} s  {} at {:.0} km, zenith {:.1} deg",
                if g.visible { "rises" } else { "sets " },
                g.distance_m / 1e3,
                g.zenith_angle_rad.to_degrees()
            );
            in_view = g.visible;
        }
    }

    let gamma = 20f64.to_radians();
    println!("slant range at 20 deg central angle: {:.1} km", geo::slant_range(500e3, gamma) / 1e3);

    let constellation = Constellation::new(vec![orbit])?;
    let mut out = Vec::new();
    geo::write_trajectory_csv(&mut out, &constellation, &[nyc], 600.0, 60.0, mask)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
