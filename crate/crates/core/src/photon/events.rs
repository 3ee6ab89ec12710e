//! Event-stream dump formats.
//!
//! CSV: header `cycle_index,arrival_time_s`, one row per photon, times in
//! seconds with 15 significant digits (`%.14e`).
//!
//! Binary: the 8-byte magic `IONEVT1\0`, a little-endian `u64` event count,
//! then one 16-byte record per photon: `u64` cycle index and `f64` arrival
//! time in seconds, both little-endian.

use std::io::{self, BufRead, Read, Write};

use super::CycleTrace;
use crate::Real;

pub const CSV_HEADER: &str = "cycle_index,arrival_time_s";
pub const BINARY_MAGIC: &[u8; 8] = b"IONEVT1\0";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub cycle_index: u64,
    pub arrival_time: f64,
}

pub fn flatten<T: Real>(traces: &[CycleTrace<T>]) -> impl Iterator<Item = EventRecord> + '_ {
    traces.iter().flat_map(|c| {
        c.arrival_times.iter().map(move |&t| EventRecord {
            cycle_index: c.cycle_index,
            arrival_time: t.as_f64(),
        })
    })
}

pub fn write_csv<T: Real, W: Write>(mut out: W, traces: &[CycleTrace<T>]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for e in flatten(traces) {
        writeln!(out, "{},{:.14e}", e.cycle_index, e.arrival_time)?;
    }
    out.flush()
}

pub fn read_csv<R: BufRead>(input: R) -> io::Result<Vec<EventRecord>> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (c, t) = line.split_once(',').ok_or_else(|| bad(i + 2, "expected two fields"))?;
        out.push(EventRecord {
            cycle_index: c.trim().parse().map_err(|_| bad(i + 2, "bad cycle index"))?,
            arrival_time: t.trim().parse().map_err(|_| bad(i + 2, "bad arrival time"))?,
        });
    }
    Ok(out)
}

pub fn write_binary<T: Real, W: Write>(mut out: W, traces: &[CycleTrace<T>]) -> io::Result<()> {
    let count: usize = traces.iter().map(|c| c.arrival_times.len()).sum();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(count as u64).to_le_bytes())?;
    for e in flatten(traces) {
        out.write_all(&e.cycle_index.to_le_bytes())?;
        out.write_all(&e.arrival_time.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_binary<R: Read>(mut input: R) -> io::Result<Vec<EventRecord>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word);
    let mut out = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        input.read_exact(&mut word)?;
        let cycle_index = u64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        out.push(EventRecord {
            cycle_index,
            arrival_time: f64::from_le_bytes(word),
        });
    }
    Ok(out)
}
