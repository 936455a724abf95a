//! Uplink connection trace for one city under the ten-satellite LEO
//! constellation, printed as pass start/end times.
//!
//! ```text
//! cargo run --release --example connection_trace
//! ```

use qcs_sim::geo::{CircularOrbit, Constellation, GroundStation};
use qcs_sim::link::{ChannelParams, Direction};
use qcs_sim::traces;

fn main() -> qcs_sim::Result<()> {
    let constellation = Constellation::new(vec![
        CircularOrbit::new(500e3, 50.0, 0.0, 0.0, 5)?,
        CircularOrbit::new(500e3, -50.0, 0.0, 36.0, 5)?,
    ])?;
    let la = GroundStation::new("LA", 34.0522, -118.2437)?;
    let params = ChannelParams::default();
    let trace = traces::build_connection_trace(&constellation, &la, &params, 86_400.0, 1.0, Direction::Up)?;

    let cutoff = 200.0;
    for sat in 0..trace.n_sats {
        let mut start = None;
        let mut peak: f64 = 0.0;
        for k in 0..trace.n_samples {
            let r = trace.rate(k, sat);
            match (start, r > cutoff) {
                (None, true) => {
                    start = Some(trace.time(k));
                    peak = r;
                }
                (Some(_), true) => peak = peak.max(r),
                (Some(s), false) => {
                    println!("sat {sat}: {s:>7.0} .. {:>7.0} s  peak {peak:.0} ebits/s", trace.time(k));
                    start = None;
                }
                (None, false) => {}
            }
        }
    }
    println!("connected {:.2}% of the day", 100.0 * trace.connected_fraction(cutoff));
    Ok(())
}
