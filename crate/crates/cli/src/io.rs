//! CSV and JSON artifacts. Numbers are written with 17 significant digits
//! so they read back bit-identically.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hh_inverse::{noise::NOISE_GENERATOR, Observation, RunResult, TimeGrid, Trajectory};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file_name = path.file_name().context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    csv_bytes(
        &["t", "V", "m", "n", "h"],
        (0..traj.len()).map(|j| {
            vec![
                num(traj.grid.time(j)),
                num(traj.v[j]),
                num(traj.m[j]),
                num(traj.n[j]),
                num(traj.h[j]),
            ]
        }),
    )
}

/// Metadata carried in `# key=value` lines above an observation table.
pub struct ObservationMeta {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: Option<u64>,
}

pub fn observation_csv(clean: &Trajectory, obs: &Observation, seed: u64) -> Result<Vec<u8>> {
    let mut out = format!(
        "# epsilon={}\n# delta={}\n# seed={seed}\n# generator={NOISE_GENERATOR}\n# t_end={}\n# dt={}\n",
        num(obs.epsilon),
        num(obs.delta),
        num(obs.grid.t_end()),
        num(obs.grid.dt()),
    )
    .into_bytes();
    out.extend(csv_bytes(
        &["t", "V", "V_delta"],
        (0..clean.len()).map(|j| {
            vec![
                num(clean.grid.time(j)),
                num(clean.v[j]),
                num(obs.v_delta[j]),
            ]
        }),
    )?);
    Ok(out)
}

/// Reads an observation file written by `perturb` (or by hand in the same
/// layout) and checks it against `grid`.
pub fn read_observation(path: &Path, grid: &TimeGrid) -> Result<(Observation, ObservationMeta)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            meta.insert(k.trim().to_owned(), v.trim().to_owned());
        }
    }
    let get_f64 = |key: &str| -> Result<f64> {
        let raw = meta
            .get(key)
            .with_context(|| format!("{}: missing '# {key}=' header line", path.display()))?;
        raw.parse()
            .with_context(|| format!("{}: header {key}={raw} is not a number", path.display()))
    };
    let delta = get_f64("delta")?;
    let epsilon = get_f64("epsilon")?;
    let seed = meta.get("seed").and_then(|s| s.parse().ok());

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(t_col), Some(v_col)) = (column("t"), column("V_delta")) else {
        bail!(
            "{}: expected columns t and V_delta, found {:?}",
            path.display(),
            headers
        );
    };
    let mut v_delta = Vec::new();
    for (j, record) in reader.records().enumerate() {
        let record = record?;
        let t: f64 = record[t_col]
            .parse()
            .with_context(|| format!("row {j}: bad t"))?;
        if (t - grid.time(j)).abs() > 1e-9 * grid.t_end() {
            bail!(
                "{}: row {j} has t={t}, config grid expects {}",
                path.display(),
                grid.time(j)
            );
        }
        v_delta.push(
            record[v_col]
                .parse()
                .with_context(|| format!("row {j}: bad V_delta"))?,
        );
    }
    let obs = Observation::new(*grid, v_delta, delta, epsilon)?;
    Ok((
        obs,
        ObservationMeta {
            epsilon,
            delta,
            seed,
        },
    ))
}

pub fn trace_csv(run: &RunResult) -> Result<Vec<u8>> {
    let labels = run.final_iterate.kind.labels();
    let header = [
        "k",
        labels[0],
        labels[1],
        labels[2],
        "residual",
        "error_percent",
    ];
    csv_bytes(
        &header,
        run.records.iter().map(|r| {
            vec![
                r.k.to_string(),
                num(r.iterate.values[0]),
                num(r.iterate.values[1]),
                num(r.iterate.values[2]),
                num(r.residual_norm),
                r.percent_error.map(num).unwrap_or_default(),
            ]
        }),
    )
}

pub fn json_bytes(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
