use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::PlayKind;

/// One learner's play in one round. CSV header:
/// `t,supplier,kind,action_mw,profit_per_h,lmp` (empty `lmp` when the round
/// could not clear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub supplier: u32,
    pub kind: PlayKind,
    pub action_mw: f64,
    pub profit_per_h: f64,
    pub lmp: Option<f64>,
}

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["t", "supplier", "kind", "action_mw", "profit_per_h", "lmp"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let expect = ["t", "supplier", "kind", "action_mw", "profit_per_h", "lmp"];
    if headers.iter().ne(expect.iter().copied()) {
        return Err(Error::TraceFormat(format!(
            "expected header `{}`, found `{}`",
            expect.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}
