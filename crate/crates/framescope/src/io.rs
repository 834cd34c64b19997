//! File formats.
//!
//! JSON carries structured objects (measures, transport plans, flow
//! configurations); CSV carries the two tabular artifacts, trajectory
//! summaries and sparse plan triplets. All floats are written in Rust's
//! shortest-roundtrip decimal form, so a write/read cycle reproduces every
//! value bit for bit.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowTrajectory};
use crate::measure::DiscreteMeasure;
use crate::transport::TransportPlan;

fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Writes a measure as `{"dim": .., "points": [[..]], "weights": [..]}`.
pub fn save_measure(path: impl AsRef<Path>, mu: &DiscreteMeasure) -> Result<()> {
    save_json(path, mu)
}

/// Reads a measure; the file passes through full constructor validation.
pub fn load_measure(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    load_json(path)
}

pub fn save_flow_config(path: impl AsRef<Path>, config: &FlowConfig) -> Result<()> {
    save_json(path, config)
}

/// Reads a flow configuration; missing fields take their defaults and the
/// result is validated before it is returned.
pub fn load_flow_config(path: impl AsRef<Path>) -> Result<FlowConfig> {
    let config: FlowConfig = load_json(path)?;
    config.validate()?;
    Ok(config)
}

/// Writes a transport plan as JSON with the dense coupling matrix.
pub fn save_plan(path: impl AsRef<Path>, plan: &TransportPlan) -> Result<()> {
    save_json(path, plan)
}

/// Reads a transport plan; marginals and the stored cost are revalidated.
pub fn load_plan(path: impl AsRef<Path>) -> Result<TransportPlan> {
    load_json(path)
}

/// Writes the nonzero coupling entries as `i,j,mass` rows.
pub fn write_plan_triplets_csv(path: impl AsRef<Path>, plan: &TransportPlan) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "i,j,mass")?;
    for (i, j, mass) in plan.triplets() {
        writeln!(out, "{i},{j},{mass}")?;
    }
    out.flush()?;
    Ok(())
}

const TRAJECTORY_HEADER: &str = "step,t,tp,m2,lambda_min,lambda_max,energy_integrand,w2_step";

/// Writes the per-record trajectory summary. The `w2_step` column is empty
/// for explicit runs, which do not measure transport distances.
pub fn write_trajectory_csv(path: impl AsRef<Path>, traj: &FlowTrajectory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for k in 0..traj.len() {
        let (lo, hi) = traj.spectra[k];
        write!(
            out,
            "{},{},{},{},{},{},{}",
            traj.steps[k],
            traj.times[k],
            traj.tp_values[k],
            traj.m2_values[k],
            lo,
            hi,
            traj.energy_integrand[k],
        )?;
        match traj.w2_steps.get(k) {
            Some(w) => writeln!(out, ",{w}")?,
            None => writeln!(out, ",")?,
        }
    }
    out.flush()?;
    Ok(())
}

/// The numeric content of a trajectory CSV, exactly as written by
/// [`write_trajectory_csv`] (full states are not part of this format).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryTable {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub tp_values: Vec<f64>,
    pub m2_values: Vec<f64>,
    pub spectra: Vec<(f64, f64)>,
    pub energy_integrand: Vec<f64>,
    /// `None` where the column was empty (explicit runs).
    pub w2_steps: Vec<Option<f64>>,
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Parse(format!(
            "trajectory CSV line {line}: bad {what} field {field:?}"
        ))
    })
}

/// Reads back a trajectory CSV written by [`write_trajectory_csv`].
pub fn parse_trajectory_csv(path: impl AsRef<Path>) -> Result<TrajectoryTable> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(TRAJECTORY_HEADER) {
        return Err(Error::Parse(format!(
            "trajectory CSV must start with header {TRAJECTORY_HEADER:?}"
        )));
    }
    let mut table = TrajectoryTable::default();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "trajectory CSV line {}: expected 8 fields, found {}",
                k + 2,
                fields.len()
            )));
        }
        let row = k + 2;
        table.steps.push(parse_field(fields[0], row, "step")?);
        table.times.push(parse_field(fields[1], row, "t")?);
        table.tp_values.push(parse_field(fields[2], row, "tp")?);
        table.m2_values.push(parse_field(fields[3], row, "m2")?);
        let lo = parse_field(fields[4], row, "lambda_min")?;
        let hi = parse_field(fields[5], row, "lambda_max")?;
        table.spectra.push((lo, hi));
        table
            .energy_integrand
            .push(parse_field(fields[6], row, "energy_integrand")?);
        table.w2_steps.push(if fields[7].is_empty() {
            None
        } else {
            Some(parse_field(fields[7], row, "w2_step")?)
        });
    }
    Ok(table)
}

/// Dumps every recorded state as `measure_NNNNNN.json` in `dir`, numbered
/// by flow step, and returns the written paths in order.
pub fn dump_states(dir: impl AsRef<Path>, traj: &FlowTrajectory) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(traj.len());
    for (step, state) in traj.steps.iter().zip(&traj.states) {
        let path = dir.join(format!("measure_{step:06}.json"));
        save_measure(&path, state)?;
        paths.push(path);
    }
    Ok(paths)
}
