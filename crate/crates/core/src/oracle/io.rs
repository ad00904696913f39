//! Instance persistence: a directory with a small TOML header plus CSV
//! matrices. No binary formats.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PhaseRetrievalInstance, StochasticProblem, XStarMode};
use crate::error::{Result, ShbError};
use crate::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    family: String,
    n: usize,
    m: usize,
    kappa: f64,
    p_fail: f64,
    noise_scale: f64,
    seed: Option<u64>,
    x_star_mode: Option<XStarMode>,
    x_star: Vec<f64>,
}

/// Write `header.toml`, `A.csv` (m rows of n values), and `b.csv`.
pub fn save_phase_retrieval<F: Scalar>(
    instance: &PhaseRetrievalInstance<F>,
    dir: &Path,
    seed: Option<u64>,
    x_star_mode: Option<XStarMode>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ShbError::io(dir.display().to_string(), e))?;
    let header = Header {
        family: "phase_retrieval".into(),
        n: instance.dimension(),
        m: instance.sample_count(),
        kappa: instance.kappa.to_f64().unwrap_or(f64::NAN),
        p_fail: instance.p_fail.to_f64().unwrap_or(f64::NAN),
        noise_scale: instance.noise_scale.to_f64().unwrap_or(f64::NAN),
        seed,
        x_star_mode,
        x_star: instance
            .x_star()
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect(),
    };
    let text = toml::to_string_pretty(&header)
        .map_err(|e| ShbError::Config(format!("header serialization: {e}")))?;
    write_file(&dir.join("header.toml"), &text)?;

    let n = instance.dimension();
    let mut a_csv = String::new();
    for i in 0..instance.sample_count() {
        let row: Vec<String> = instance.row(i).iter().map(|v| format!("{v}")).collect();
        a_csv.push_str(&row.join(","));
        a_csv.push('\n');
        let _ = n;
    }
    write_file(&dir.join("A.csv"), &a_csv)?;

    let mut b_csv = String::new();
    for v in instance.measurements() {
        b_csv.push_str(&format!("{v}\n"));
    }
    write_file(&dir.join("b.csv"), &b_csv)?;
    Ok(())
}

/// Load an instance previously written by [`save_phase_retrieval`].
///
/// The corruption mask is not part of the format, so the loaded instance has
/// `corrupted = None`.
pub fn load_phase_retrieval<F: Scalar>(dir: &Path) -> Result<PhaseRetrievalInstance<F>> {
    let header_path = dir.join("header.toml");
    let text = fs::read_to_string(&header_path)
        .map_err(|e| ShbError::io(header_path.display().to_string(), e))?;
    let header: Header =
        toml::from_str(&text).map_err(|e| ShbError::Config(format!("header parse: {e}")))?;
    if header.family != "phase_retrieval" {
        return Err(ShbError::Config(format!(
            "unsupported family '{}'",
            header.family
        )));
    }

    let a = read_csv_values::<F>(&dir.join("A.csv"))?;
    let b = read_csv_values::<F>(&dir.join("b.csv"))?;
    if a.len() != header.m * header.n || b.len() != header.m {
        return Err(ShbError::Config(format!(
            "matrix shapes do not match header: |A|={}, |b|={}, expected {}x{}",
            a.len(),
            b.len(),
            header.m,
            header.n
        )));
    }
    let x_star: Vec<F> = header.x_star.iter().map(|&v| F::from_f64_lossy(v)).collect();
    PhaseRetrievalInstance::from_parts(
        a,
        b,
        x_star,
        F::from_f64_lossy(header.kappa),
        F::from_f64_lossy(header.p_fail),
        F::from_f64_lossy(header.noise_scale),
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| ShbError::io(path.display().to_string(), e))
}

fn read_csv_values<F: Scalar>(path: &Path) -> Result<Vec<F>> {
    let text =
        fs::read_to_string(path).map_err(|e| ShbError::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| {
                ShbError::Config(format!("bad number '{field}' in {}: {e}", path.display()))
            })?;
            out.push(F::from_f64_lossy(v));
        }
    }
    Ok(out)
}
