//! File formats: trajectory CSV with its JSON sidecar, profile CSV,
//! period-table CSV, and branch JSON-lines.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! re-running with identical inputs reproduces byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conservative::EnergyLevel;
use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::primaries::{Permutation, SymmetrySpec, TrajectoryTable};
use crate::shooting::{FullProfile, SymmetryClass};

/// Sidecar companion of a trajectory CSV. Permutations are written with
/// 1-based body indices to match the x1,y1,... column names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub masses: Vec<f64>,
    pub d: u32,
    pub zeta1: Vec<usize>,
    pub zeta2: Vec<usize>,
    #[serde(rename = "R")]
    pub reflection: [[f64; 2]; 2],
}

impl Sidecar {
    pub fn symmetry_spec(&self) -> Result<SymmetrySpec> {
        Ok(SymmetrySpec {
            d: self.d,
            zeta1: Permutation::from_one_based(&self.zeta1)?,
            zeta2: Permutation::from_one_based(&self.zeta2)?,
            reflection: self.reflection,
        })
    }

    pub fn from_parts(masses: &[f64], spec: &SymmetrySpec) -> Self {
        Sidecar {
            masses: masses.to_vec(),
            d: spec.d,
            zeta1: spec.zeta1.to_one_based(),
            zeta2: spec.zeta2.to_one_based(),
            reflection: spec.reflection,
        }
    }
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let mut text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Trajectory CSV: header `t,x1,y1,...,xn,yn`, one row per grid time.
/// Masses come from the sidecar.
pub fn read_trajectory_csv(path: &Path, masses: Vec<f64>) -> Result<TrajectoryTable> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || cols.len().is_multiple_of(2) {
        return Err(Error::Parse(format!(
            "bad trajectory header (expected t,x1,y1,...): {header}"
        )));
    }
    let n_bodies = (cols.len() - 1) / 2;
    for j in 0..n_bodies {
        let (ex_x, ex_y) = (format!("x{}", j + 1), format!("y{}", j + 1));
        if cols[1 + 2 * j] != ex_x || cols[2 + 2 * j] != ex_y {
            return Err(Error::Parse(format!(
                "bad trajectory header near column {}: {header}",
                1 + 2 * j
            )));
        }
    }
    if masses.len() != n_bodies {
        return Err(Error::Parse(format!(
            "sidecar lists {} masses but trajectory has {} bodies",
            masses.len(),
            n_bodies
        )));
    }
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}' on row {}", lineno + 2)))
        };
        times.push(parse(fields[0])?);
        let mut row = Vec::with_capacity(n_bodies);
        for j in 0..n_bodies {
            row.push([parse(fields[1 + 2 * j])?, parse(fields[2 + 2 * j])?]);
        }
        positions.push(row);
    }
    Ok(TrajectoryTable {
        times,
        positions,
        masses,
    })
}

pub fn write_trajectory_csv(path: &Path, table: &TrajectoryTable) -> Result<()> {
    let mut out = String::from("t");
    for j in 1..=table.n_bodies() {
        out.push_str(&format!(",x{j},y{j}"));
    }
    out.push('\n');
    for (k, &t) in table.times.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for q in &table.positions[k] {
            out.push_str(&format!(",{},{}", q[0], q[1]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Profile CSV: header `t,z,zdot`.
pub fn write_profile_csv(path: &Path, profile: &FullProfile) -> Result<()> {
    let mut out = String::from("t,z,zdot\n");
    for i in 0..profile.times.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            profile.times[i], profile.z[i], profile.zdot[i]
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a profile CSV back; the symmetry metadata is supplied by the
/// caller because the CSV carries only samples.
pub fn read_profile_csv(
    path: &Path,
    lambda: f64,
    p: u32,
    q: u32,
    class: SymmetryClass,
) -> Result<FullProfile> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "t,z,zdot" => {}
        other => {
            return Err(Error::Parse(format!(
                "bad profile header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut times = Vec::new();
    let mut z = Vec::new();
    let mut zdot = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad profile row {}", lineno + 2)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number on row {}", lineno + 2)))
        };
        times.push(parse(fields[0])?);
        z.push(parse(fields[1])?);
        zdot.push(parse(fields[2])?);
    }
    if times.len() < 9 {
        return Err(Error::Parse("profile too short".into()));
    }
    let sup_norm = z.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    Ok(FullProfile {
        times,
        z,
        zdot,
        zero_count: 0,
        symmetry_residuals: crate::shooting::SymmetryResiduals {
            evenness: f64::NAN,
            periodicity: f64::NAN,
            midpoint: f64::NAN,
        },
        sup_norm,
        lambda,
        p,
        q,
        class,
    })
}

/// Period-table CSV: header `E,zeta,T`.
pub fn write_period_table_csv(path: &Path, rows: &[EnergyLevel]) -> Result<()> {
    let mut out = String::from("E,zeta,T\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.energy, row.zeta, row.period));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Branch file: JSON lines, a header record followed by one point per
/// line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchHeader {
    pub p: u32,
    pub q: u32,
    pub seed_zeta: f64,
    pub status: crate::continuation::BranchStatus,
    pub config_hash: String,
    pub version: String,
}

pub fn write_branch_jsonl(path: &Path, branch: &Branch, config_hash: &str) -> Result<()> {
    let header = BranchHeader {
        p: branch.p,
        q: branch.q,
        seed_zeta: branch.seed_zeta,
        status: branch.status.clone(),
        config_hash: config_hash.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut file = fs::File::create(path)?;
    writeln!(
        file,
        "{}",
        serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?
    )?;
    for point in &branch.points {
        writeln!(
            file,
            "{}",
            serde_json::to_string(point).map_err(|e| Error::Parse(e.to_string()))?
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primaries::{build_circular_polygon, ingest_trajectory, EnsembleConfig};

    #[test]
    fn trajectory_round_trip_through_files() {
        let dir = std::env::temp_dir().join("sitnikov_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("traj.csv");
        let side = dir.join("traj.json");

        let ens = build_circular_polygon(2, None, &EnsembleConfig::default()).unwrap();
        let table = ens.sample_table(256);
        write_trajectory_csv(&csv, &table).unwrap();
        write_sidecar(
            &side,
            &Sidecar::from_parts(&table.masses, &ens.symmetry),
        )
        .unwrap();

        let sidecar = read_sidecar(&side).unwrap();
        let table2 = read_trajectory_csv(&csv, sidecar.masses.clone()).unwrap();
        let spec = sidecar.symmetry_spec().unwrap();
        let ens2 = ingest_trajectory(&table2, &spec, 1e-8, &EnsembleConfig::default()).unwrap();
        assert!((ens2.constants.beta - 32.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_malformed_trajectory() {
        let dir = std::env::temp_dir().join("sitnikov_io_test_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("bad.csv");
        std::fs::write(&csv, "t,x1,y1\n0.0,1.0\n").unwrap();
        let err = read_trajectory_csv(&csv, vec![1.0]).unwrap_err();
        assert!(err.is_input_error());
        std::fs::write(&csv, "time,x1,y1\n").unwrap();
        let err = read_trajectory_csv(&csv, vec![1.0]).unwrap_err();
        assert!(err.is_input_error());
    }
}
