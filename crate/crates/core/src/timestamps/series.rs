use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{QcsError, Result};

/// Detector positions: `A1`/`B1` sit next to their own source, `A2`/`B2`
/// receive the partner's traveling photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorId {
    A1,
    A2,
    B1,
    B2,
}

impl DetectorId {
    pub const ALL: [DetectorId; 4] = [DetectorId::A1, DetectorId::A2, DetectorId::B1, DetectorId::B2];

    pub fn code(self) -> u8 {
        match self {
            DetectorId::A1 => 0,
            DetectorId::A2 => 1,
            DetectorId::B1 => 2,
            DetectorId::B2 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        DetectorId::ALL.get(code as usize).copied()
    }
}

/// Sorted, quantized local-clock detection times of one detector.
#[derive(Clone, Debug, PartialEq)]
pub struct TimestampSeries {
    pub detector: DetectorId,
    pub resolution_s: f64,
    pub acquisition_s: f64,
    /// Timestamps in units of `resolution_s`.
    pub ticks: Vec<i64>,
}

impl TimestampSeries {
    pub fn new(detector: DetectorId, resolution_s: f64, acquisition_s: f64, ticks: Vec<i64>) -> Self {
        TimestampSeries { detector, resolution_s, acquisition_s, ticks }
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn times_s(&self) -> impl Iterator<Item = f64> + '_ {
        self.ticks.iter().map(move |&k| k as f64 * self.resolution_s)
    }

    pub fn is_sorted(&self) -> bool {
        self.ticks.windows(2).all(|w| w[0] <= w[1])
    }

    pub(crate) fn clone_header(&self) -> TimestampSeries {
        TimestampSeries {
            detector: self.detector,
            resolution_s: self.resolution_s,
            acquisition_s: self.acquisition_s,
            ticks: Vec::new(),
        }
    }
}

const DUMP_MAGIC: &str = "qcs-timestamps 1";

/// Writes series as a short text header followed by little-endian
/// `(u8 detector, u64 tick)` records. All series must share resolution and
/// acquisition span, and ticks must be non-negative.
pub fn write_dump<W: Write>(mut out: W, series: &[&TimestampSeries]) -> Result<()> {
    let first = series.first().ok_or_else(|| QcsError::Dump("nothing to write".into()))?;
    let total: usize = series.iter().map(|s| s.len()).sum();
    for s in series {
        if s.resolution_s != first.resolution_s || s.acquisition_s != first.acquisition_s {
            return Err(QcsError::Dump("series disagree on resolution or acquisition span".into()));
        }
    }
    write!(
        out,
        "{DUMP_MAGIC}\nresolution_s {:e}\nacquisition_s {:e}\nrecords {total}\nend\n",
        first.resolution_s, first.acquisition_s
    )?;
    let mut buf = Vec::with_capacity(total * 9);
    for s in series {
        for &k in &s.ticks {
            let k = u64::try_from(k).map_err(|_| QcsError::Dump(format!("negative tick {k}")))?;
            buf.push(s.detector.code());
            buf.extend_from_slice(&k.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn header_value(line: &str, key: &str) -> Result<String> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .map(|v| v.trim().to_string())
        .ok_or_else(|| QcsError::Dump(format!("expected `{key}`, found `{}`", line.trim())))
}

/// Reads a dump back, one series per detector present, ordered by detector.
pub fn read_dump<R: BufRead>(mut input: R) -> Result<Vec<TimestampSeries>> {
    let mut lines = Vec::new();
    for _ in 0..5 {
        let mut line = String::new();
        input.read_line(&mut line)?;
        lines.push(line.trim_end().to_string());
    }
    if lines[0] != DUMP_MAGIC {
        return Err(QcsError::Dump(format!("bad magic line `{}`", lines[0])));
    }
    let parse = |s: String| s.parse::<f64>().map_err(|e| QcsError::Dump(e.to_string()));
    let resolution_s = parse(header_value(&lines[1], "resolution_s")?)?;
    let acquisition_s = parse(header_value(&lines[2], "acquisition_s")?)?;
    let records: usize = header_value(&lines[3], "records")?
        .parse()
        .map_err(|e: std::num::ParseIntError| QcsError::Dump(e.to_string()))?;
    if lines[4] != "end" {
        return Err(QcsError::Dump("missing header terminator".into()));
    }

    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != records * 9 {
        return Err(QcsError::Dump(format!(
            "expected {} record bytes, found {}",
            records * 9,
            body.len()
        )));
    }
    let mut per: [Vec<i64>; 4] = Default::default();
    for rec in body.chunks_exact(9) {
        let id = DetectorId::from_code(rec[0])
            .ok_or_else(|| QcsError::Dump(format!("unknown detector code {}", rec[0])))?;
        let mut b = [0u8; 8];
        b.copy_from_slice(&rec[1..]);
        let tick = i64::try_from(u64::from_le_bytes(b))
            .map_err(|_| QcsError::Dump("tick exceeds i64".into()))?;
        per[id.code() as usize].push(tick);
    }
    Ok(DetectorId::ALL
        .iter()
        .zip(per)
        .filter(|(_, ticks)| !ticks.is_empty())
        .map(|(&id, ticks)| TimestampSeries::new(id, resolution_s, acquisition_s, ticks))
        .collect())
}
