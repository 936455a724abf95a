//! Shadow diameter of a single satellite and its stretch under holdover.
//!
//! ```text
//! cargo run --release --example shadow
//! ```

use qcs_sim::link::ChannelParams;
use qcs_sim::traces;

fn main() -> qcs_sim::Result<()> {
    let params = ChannelParams::default();
    for h_km in [500.0, 800.0, 1200.0] {
        for tau in [0.0, 100.0, 600.0] {
            let s = traces::shadow(&params, h_km * 1e3, 200.0, tau)?;
            println!(
                "h = {h_km:>6} km  tau = {tau:>4} s  diameter {:.2} deg  elongated {:.2} deg",
                s.diameter_deg, s.elongated_deg
            );
        }
    }
    match traces::shadow(&params, 500e3, 1e7, 0.0) {
        Err(e) => println!("cut-off above the zenith rate: {e}"),
        Ok(s) => println!("unexpected shadow {s:?}"),
    }
    Ok(())
}
