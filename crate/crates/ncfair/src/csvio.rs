//! Trajectory CSV: header `subgroup,trajectory,t,value`, one observation per
//! row, sorted by `(subgroup, trajectory, t)` on save.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ncfair_core::{ObservationKey, TrajectorySet};

use crate::error::{IoError, Result};

pub const HEADER: [&str; 4] = ["subgroup", "trajectory", "t", "value"];

pub fn write_trajectories<W: Write>(data: &TrajectorySet, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for (k, y) in data.iter() {
        w.write_record([
            k.subgroup.as_str(),
            k.trajectory.as_str(),
            &k.period.to_string(),
            &y.to_string(),
        ])?;
    }
    w.flush().map_err(|e| IoError::io("<csv>", e))?;
    Ok(())
}

pub fn read_trajectories<R: Read>(input: R) -> Result<TrajectorySet> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(IoError::parse(1, format!("expected header '{}'", HEADER.join(","))));
    }
    let mut data = TrajectorySet::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(IoError::parse(line, format!("expected 4 fields, found {}", record.len())));
        }
        let t: u32 = record[2]
            .trim()
            .parse()
            .map_err(|_| IoError::parse(line, format!("invalid period '{}'", &record[2])))?;
        let y: f64 = record[3]
            .trim()
            .parse()
            .map_err(|_| IoError::parse(line, format!("invalid value '{}'", &record[3])))?;
        data.insert(ObservationKey::new(record[0].trim(), record[1].trim(), t), y)
            .map_err(|e| IoError::parse(line, e.to_string()))?;
    }
    Ok(data)
}

pub fn save_trajectories_csv(data: &TrajectorySet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_trajectories(data, file)
}

pub fn load_trajectories_csv(path: impl AsRef<Path>) -> Result<TrajectorySet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_trajectories(file)
}
