//! Files read and written by the commands. Numbers are written with 17
//! significant digits in scientific notation, independent of locale.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nspp::covariates::{CovariateRaster, Interpolation};
use nspp::mcmc::{Checkpoint, TraceRecord};
use nspp::Location;

use crate::error::{CliError, CliResult};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> CliResult<f64> {
    field
        .parse()
        .map_err(|_| CliError::data(format!("{}:{line}: `{field}` is not a number", path.display())))
}

/// Points from a CSV file with header `x,y`.
pub fn read_points(path: &Path) -> CliResult<Vec<Location>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(CliError::data(format!("{}: expected header `x,y`", path.display())));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        out.push(Location::new(
            parse_f64(path, i + 2, &rec[0])?,
            parse_f64(path, i + 2, &rec[1])?,
        ));
    }
    Ok(out)
}

pub fn write_points(path: &Path, pts: &[Location]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y")?;
    for s in pts {
        writeln!(w, "{},{}", num(s.x), num(s.y))?;
    }
    w.flush()?;
    Ok(())
}

/// Covariate raster from a CSV file with header `x,y,<name>,...`.
pub fn read_raster(path: &Path, interpolation: Interpolation) -> CliResult<CovariateRaster> {
    let mut rdr = reader(path)?;
    let width = rdr.headers().map_err(|e| CliError::data(e.to_string()))?.len();
    if width < 3 {
        return Err(CliError::data(format!(
            "{}: expected `x,y` and at least one covariate column",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let vals = rec
            .iter()
            .map(|f| parse_f64(path, i + 2, f))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push((vals[0], vals[1], vals[2..].to_vec()));
    }
    Ok(CovariateRaster::from_rows(&rows, interpolation)?)
}

/// `x,y,value` rows.
pub fn write_surface(path: &Path, locs: &[Location], values: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for (s, v) in locs.iter().zip(values) {
        writeln!(w, "{},{},{}", num(s.x), num(s.y), num(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_surface(path: &Path) -> CliResult<(Vec<Location>, Vec<f64>)> {
    let mut rdr = reader(path)?;
    let mut locs = Vec::new();
    let mut vals = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if rec.len() != 3 {
            return Err(CliError::data(format!(
                "{}:{}: expected x,y,value",
                path.display(),
                i + 2
            )));
        }
        locs.push(Location::new(
            parse_f64(path, i + 2, &rec[0])?,
            parse_f64(path, i + 2, &rec[1])?,
        ));
        vals.push(parse_f64(path, i + 2, &rec[2])?);
    }
    Ok((locs, vals))
}

pub fn trace_header(r: &TraceRecord) -> String {
    let l = r.lambda_star.len();
    let mut cols = vec!["iteration".to_string()];
    cols.extend((1..=l).map(|i| format!("lambda_star_{i}")));
    cols.extend((1..=l).map(|i| format!("phi_{i}")));
    for i in 1..=l {
        cols.push(format!("u{i}_x"));
        cols.push(format!("u{i}_y"));
    }
    cols.extend((1..=r.alpha.len()).map(|k| format!("alpha_{k}")));
    for i in 1..=l {
        cols.push(format!("y_{i}"));
        cols.push(format!("ytilde_{i}"));
        cols.push(format!("z_{i}"));
    }
    cols.extend((1..=r.monitor_beta.len()).map(|m| format!("beta_monitor_{m}")));
    cols.push("partition_accepted".into());
    cols.push("phi_accepted".into());
    cols.join(",")
}

pub fn trace_row(r: &TraceRecord) -> String {
    let mut f = vec![r.iteration.to_string()];
    f.extend(r.lambda_star.iter().map(|v| num(*v)));
    f.extend(r.phi.iter().map(|v| num(*v)));
    for g in &r.generators {
        f.push(num(g.x));
        f.push(num(g.y));
    }
    f.extend(r.alpha.iter().map(|v| num(*v)));
    for c in &r.counts {
        f.extend(c.iter().map(|v| v.to_string()));
    }
    f.extend(r.monitor_beta.iter().map(|v| num(*v)));
    f.push((r.flags.partition as u8).to_string());
    f.push(r.flags.theta_accepted.to_string());
    f.join(",")
}

/// Appends rows to `trace.csv`, writing the header for a new file.
pub struct TraceWriter {
    out: BufWriter<File>,
    fresh: bool,
}

impl TraceWriter {
    pub fn open(path: &Path, append: bool) -> CliResult<Self> {
        let fresh = !append || !path.exists();
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(!fresh)
            .truncate(fresh)
            .open(path)?;
        Ok(TraceWriter {
            out: BufWriter::new(file),
            fresh,
        })
    }

    pub fn write(&mut self, r: &TraceRecord) -> CliResult<()> {
        if self.fresh {
            writeln!(self.out, "{}", trace_header(r))?;
            self.fresh = false;
        }
        writeln!(self.out, "{}", trace_row(r))?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// One checkpoint per line.
pub struct SampleWriter {
    out: BufWriter<File>,
}

impl SampleWriter {
    pub fn open(path: &Path, append: bool) -> CliResult<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)?;
        Ok(SampleWriter {
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, c: &Checkpoint) -> CliResult<()> {
        serde_json::to_writer(&mut self.out, c).map_err(|e| CliError::state(e.to_string()))?;
        writeln!(self.out)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_samples(path: &Path) -> CliResult<Vec<Checkpoint>> {
    let f = File::open(path).map_err(|e| CliError::state(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| CliError::state(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> CliResult<()> {
    // write-then-rename so an interrupted run keeps the previous checkpoint
    let tmp = path.with_extension("json.tmp");
    let mut w = BufWriter::new(File::create(&tmp)?);
    serde_json::to_writer_pretty(&mut w, c).map_err(|e| CliError::state(e.to_string()))?;
    w.flush()?;
    drop(w);
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    let f = File::open(path).map_err(|e| CliError::state(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::state(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_numbers() {
        let v = 0.1 + 0.2;
        let s = num(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        let pts = vec![Location::new(1.0 / 3.0, 2.5), Location::new(9.75, 1e-12)];
        write_points(&p, &pts).unwrap();
        assert_eq!(read_points(&p).unwrap(), pts);
    }
}
