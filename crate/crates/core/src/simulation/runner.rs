use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointprocess::Configuration;

/// Runs `f(r)` for `r in 0..count` on the current rayon pool and returns the
/// results in replicate order; the first error in that order wins, so the
/// outcome does not depend on scheduling.
pub fn run_replicates<T, F>(count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..count).into_par_iter().map(&f).collect();
    results.into_iter().collect()
}

/// Long-format CSV with header `replicate_id,jump_index,jump_time`; jump
/// indices start at 1 and times use the shortest round-trip decimal form.
pub fn write_replicates_csv<W: Write>(writer: W, paths: &[Configuration]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replicate_id", "jump_index", "jump_time"])?;
    for (r, path) in paths.iter().enumerate() {
        for (k, t) in path.iter().enumerate() {
            w.write_record([r.to_string(), (k + 1).to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_replicates_csv`]. Replicates without jumps
/// are recovered only when a later replicate id is present.
pub fn read_replicates_csv<R: Read>(reader: R) -> Result<Vec<Configuration>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut paths: Vec<Vec<f64>> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::InvalidArgument(format!("row {}: bad {what}", line + 2));
        let id: usize = record.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("replicate_id"))?;
        let index: usize = record.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("jump_index"))?;
        let time: f64 = record.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("jump_time"))?;
        if id >= paths.len() {
            paths.resize_with(id + 1, Vec::new);
        }
        if index != paths[id].len() + 1 {
            return Err(bad("jump_index order"));
        }
        paths[id].push(time);
    }
    paths.into_iter().map(Configuration::new).collect()
}
