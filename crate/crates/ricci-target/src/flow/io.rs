//! Plain-text persistence: one CSV per snapshot plus a JSON manifest of
//! snapshot times.

use super::field::GridField;
use super::solver::FlowSolution;
use crate::error::{Error, Result};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Write a field as row-major CSV with header `# n=<n> L=<L> t=<t>`.
pub fn write_field_csv<W: Write>(mut w: W, field: &GridField, t: f64) -> Result<()> {
    writeln!(w, "# n={} L={} t={}", field.n(), field.side(), t)?;
    let n = field.n();
    for i in 0..n {
        let mut line = String::with_capacity(n * 24);
        for j in 0..n {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", field.at(i, j)));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Read a field written by [`write_field_csv`]; returns the field and its
/// header time.
pub fn read_field_csv<R: BufRead>(r: R) -> Result<(GridField, f64)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedField("empty file".into()))??;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::MalformedField("missing # header".into()))?
        .trim();
    let mut n = None;
    let mut side = None;
    let mut t = None;
    for part in header.split_whitespace() {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::MalformedField(format!("bad header item {part}")))?;
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|e| Error::MalformedField(e.to_string()))?),
            "L" => side = Some(val.parse::<f64>().map_err(|e| Error::MalformedField(e.to_string()))?),
            "t" => t = Some(val.parse::<f64>().map_err(|e| Error::MalformedField(e.to_string()))?),
            _ => return Err(Error::MalformedField(format!("unknown header key {key}"))),
        }
    }
    let n = n.ok_or_else(|| Error::MalformedField("header missing n".into()))?;
    let side = side.ok_or_else(|| Error::MalformedField("header missing L".into()))?;
    let t = t.ok_or_else(|| Error::MalformedField("header missing t".into()))?;
    let mut values = Vec::with_capacity(n * n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for item in line.split(',') {
            values.push(item.trim().parse::<f64>().map_err(|e| Error::MalformedField(e.to_string()))?);
        }
    }
    Ok((GridField::from_values(n, side, values)?, t))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SolutionManifest {
    n: usize,
    side: f64,
    dt_solver: f64,
    times: Vec<f64>,
    files: Vec<String>,
}

/// Persist a solution as `<dir>/snapshot_<k>.csv` plus `<dir>/manifest.json`.
pub fn save_solution(dir: &Path, sol: &FlowSolution) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, (t, field)) in sol.times().iter().zip(sol.fields()).enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        let f = fs::File::create(dir.join(&name))?;
        write_field_csv(BufWriter::new(f), field, *t)?;
        files.push(name);
    }
    let manifest = SolutionManifest {
        n: sol.n(),
        side: sol.side(),
        dt_solver: sol.dt_solver(),
        times: sol.times().to_vec(),
        files,
    };
    let mf = fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(mf), &manifest)
        .map_err(|e| Error::MalformedField(e.to_string()))?;
    Ok(())
}
