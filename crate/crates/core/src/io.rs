//! CSV and JSON artifact writers. Every CSV starts with a comment line
//! carrying the scenario hash and the library version.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::PdeState;
use crate::error::Result;
use crate::model::GridProfile;
use crate::steady::RadialTrajectory;

/// `# scenario_hash=<hash>,core_version=<version>`
pub fn provenance_line(scenario_hash: &str) -> String {
    format!("# scenario_hash={scenario_hash},core_version={}", crate::VERSION)
}

fn csv_writer<W: Write>(mut w: W, scenario_hash: &str, columns: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(w, "{}", provenance_line(scenario_hash))?;
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    out.write_record(columns)?;
    Ok(out)
}

/// Shortest representation that round-trips, in scientific form only for extreme magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Arbitrary numeric table.
pub fn write_table<W: Write>(w: W, scenario_hash: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = csv_writer(w, scenario_hash, columns)?;
    for row in rows {
        out.write_record(row.iter().map(|x| num(*x)))?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `r,p,v`.
pub fn write_trajectory<W: Write>(w: W, scenario_hash: &str, traj: &RadialTrajectory) -> Result<()> {
    let rows: Vec<Vec<f64>> = traj.samples.iter().map(|s| vec![s.r, s.p, s.v]).collect();
    write_table(w, scenario_hash, &["r", "p", "v"], &rows)
}

/// Columns `x,<value_name>`.
pub fn write_profile<W: Write>(w: W, scenario_hash: &str, value_name: &str, profile: &GridProfile) -> Result<()> {
    let rows: Vec<Vec<f64>> =
        profile.grid.nodes().into_iter().zip(&profile.values).map(|(x, p)| vec![x, *p]).collect();
    write_table(w, scenario_hash, &["x", value_name], &rows)
}

/// Columns `t,x,p`, one row per node per snapshot.
pub fn write_snapshots<W: Write>(w: W, scenario_hash: &str, snapshots: &[PdeState]) -> Result<()> {
    let mut rows = Vec::new();
    for s in snapshots {
        for (x, p) in s.profile.grid.nodes().into_iter().zip(&s.profile.values) {
            rows.push(vec![s.t, x, *p]);
        }
    }
    write_table(w, scenario_hash, &["t", "x", "p"], &rows)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DomainGeometry, Grid};

    #[test]
    fn profile_round_trip() {
        let g = Grid::new(DomainGeometry::interval(1.0).unwrap(), 5).unwrap();
        let p = GridProfile::from_fn(g, |x| 1.0 - x * x);
        let mut buf = Vec::new();
        write_profile(&mut buf, "abc", "p", &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# scenario_hash=abc,core_version="));
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let back: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(back, p.values);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(40.0), "40");
        assert_eq!(num(0.125), "0.125");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
