//! Trajectory CSV files: header `t,s,u_commanded,u_applied,gain,d`, values
//! written with 17 significant digits so a reload reproduces every `f64`.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::simkernel::Sample;

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "s", "u_commanded", "u_applied", "gain", "d"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_trajectory(path: &Path, samples: &[Sample]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(io::BufWriter::new(File::create(path)?));
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for x in samples {
        w.write_record([x.t, x.s, x.u_commanded, x.u_applied, x.gain, x.d].map(fmt_f64))
            .map_err(csv_err)?;
    }
    w.flush()
}

pub fn read_trajectory(path: &Path) -> io::Result<Vec<Sample>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: unexpected trajectory header {:?}", path.display(), header),
        ));
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut v = [0.0; 6];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{} row {}: {e}", path.display(), line + 2),
                )
            })?;
        }
        samples.push(Sample {
            t: v[0],
            s: v[1],
            u_commanded: v[2],
            u_applied: v[3],
            gain: v[4],
            d: v[5],
        });
    }
    Ok(samples)
}

/// Write a numeric table with a header row.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut out = io::BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}
