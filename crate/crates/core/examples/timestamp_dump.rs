//! Simulates one exchange, writes the four timestamp series in the binary
//! dump format, reads them back and correlates both routes.
//!
//! ```text
//! cargo run --release --example timestamp_dump [out.bin]
//! ```

use std::io::BufReader;

use qcs_sim::timestamps::{self, DetectorModel, StaticScenario};

fn main() -> qcs_sim::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "timestamps.bin".into());
    let sc = StaticScenario::new(36.0, DetectorModel::default(), 11);
    let ex = timestamps::simulate_exchange(&sc, 0)?;
    let mut file = std::fs::File::create(&path)?;
    timestamps::write_dump(&mut file, &ex.series())?;

    let series = timestamps::read_dump(BufReader::new(std::fs::File::open(&path)?))?;
    for s in &series {
        println!("{:?}: {} events", s.detector, s.len());
    }
    let corr = sc.correlator()?;
    // A1 against B2, then B1 against A2
    let ab = timestamps::cross_correlate(&series[0], &series[3], &corr)?;
    let ba = timestamps::cross_correlate(&series[2], &series[1], &corr)?;
    let est = timestamps::estimate_offset(&ab, &ba).judged(ex.offset_s, sc.success_threshold_s);
    println!("true offset {:.6} ns, estimate {:.6} ns", ex.offset_s * 1e9, est.delta_hat_s * 1e9);
    println!("peak heights {} / {}, snr {:.1} / {:.1}", ab.peak_height, ba.peak_height, ab.snr, ba.snr);
    Ok(())
}
