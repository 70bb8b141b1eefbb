//! Experiment sweeps writing CSV tables and a run manifest.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use scrambler_core::circuit::{build_schedule, CircuitParams, Model};
use scrambler_core::percolation::{
    binder_cumulant, build_network, convolve_canonical, newman_ziff_sweep_tracked, susceptibility, susceptibility_peak,
    CanonicalCurve, Moment, Peak,
};
use scrambler_core::qecc::code_diagnostics;
use scrambler_core::rg::{fixed_point, FixedPoint};
use scrambler_core::seed;
use scrambler_core::stabilizer::{
    prepare_purification, purification_time, Observable, Subregion, Tableau, Trajectory,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, RunConfig};

pub const TRAJECTORY_HEADER: [&str; 8] = ["model", "N", "k", "p", "seed", "t", "observable", "value"];
pub const PERCOLATION_HEADER: [&str; 8] = ["model", "N", "k", "observable", "p", "value", "stderr", "n_real"];
pub const QECC_HEADER: [&str; 10] =
    ["model", "N", "k", "p", "r_code", "r_code_err", "d_code", "d_code_err", "n_traj", "n_no_code"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Incomplete,
    Complete,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub version: String,
    pub status: Status,
    pub wall_time_s: f64,
    pub cells_done: usize,
    pub cells_total: usize,
    pub files: Vec<String>,
    pub error: Option<String>,
    pub config: RunConfig,
}

/// SHA-256 of the config's JSON form, leaving out the output directory and
/// thread count, which never affect the data.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let data = RunConfig { output: PathBuf::new(), threads: None, ..cfg.clone() };
    let digest = Sha256::digest(serde_json::to_vec(&data)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Per-trajectory seed of one grid cell.
pub fn trajectory_seed(master: u64, model: Model, n: usize, k: usize, p_index: usize, traj: usize) -> u64 {
    seed::derive(master, &[model.id(), n as u64, k as u64, p_index as u64, traj as u64])
}

/// One `(N, k)` pair, with `k` resolved, or one `(N, k, p)` cell.
#[derive(Clone, Copy, Debug)]
struct Cell {
    n: usize,
    k: usize,
    p_index: usize,
}

fn cells(cfg: &RunConfig, with_p: bool) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            let k = cfg.k_at(n, k);
            if with_p {
                out.extend((0..cfg.p.len()).map(|p_index| Cell { n, k, p_index }));
            } else {
                out.push(Cell { n, k, p_index: 0 });
            }
        }
    }
    out
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    manifest: Manifest,
    started: Instant,
}

impl Runner<'_> {
    fn save_manifest(&mut self) -> Result<()> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)?)
            .with_context(|| format!("writing {}", path.display()))
    }

    fn csv(&mut self, name: &str, header: &[&str]) -> Result<csv::Writer<File>> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        w.flush()?;
        self.manifest.files.push(name.to_string());
        Ok(w)
    }

    fn cell_done(&mut self) -> Result<()> {
        self.manifest.cells_done += 1;
        eprintln!("cell {}/{}", self.manifest.cells_done, self.manifest.cells_total);
        self.save_manifest()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

/// Run every cell of `cfg`, writing into `cfg.output`. The manifest is
/// marked complete only after the last row is flushed.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let cells_total = match cfg.experiment {
        Experiment::Rg => 1,
        Experiment::Percolation => cells(cfg, false).len(),
        _ => cells(cfg, true).len(),
    };
    let manifest = Manifest {
        config_hash: config_hash(cfg)?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: Status::Incomplete,
        wall_time_s: 0.0,
        cells_done: 0,
        cells_total,
        files: Vec::new(),
        error: None,
        config: cfg.clone(),
    };
    let mut r = Runner { cfg, dir, manifest, started: Instant::now() };
    r.save_manifest()?;
    let result = match cfg.experiment {
        Experiment::Percolation => percolation(&mut r),
        Experiment::Entanglement => trajectories(&mut r, "entanglement.csv", entanglement_rows),
        Experiment::Purification => trajectories(&mut r, "purification.csv", purification_rows),
        Experiment::Qecc => qecc(&mut r),
        Experiment::Rg => rg(&mut r),
    };
    if let Err(e) = &result {
        r.manifest.error = Some(format!("{e:#}"));
        r.save_manifest()?;
        return Err(result.unwrap_err());
    }
    r.manifest.status = Status::Complete;
    r.save_manifest()?;
    Ok(RunSummary { dir: r.dir, files: r.manifest.files, wall_time_s: r.manifest.wall_time_s })
}

#[derive(Clone, Debug, Serialize)]
struct PeakRow {
    model: Model,
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    #[serde(flatten)]
    peak: Peak,
}

fn percolation(r: &mut Runner) -> Result<()> {
    let cfg = r.cfg;
    let mut w = r.csv("percolation.csv", &PERCOLATION_HEADER)?;
    let mut peaks = Vec::new();
    for cell in cells(cfg, false) {
        let base = seed::derive(cfg.seed, &[cfg.model.id(), cell.n as u64, cell.k as u64]);
        let params = CircuitParams::new(cfg.model, cell.n, cell.k, cfg.time_factor() * cell.n, 0.0, base);
        let net = build_network(&build_schedule(&params)?)?;
        let sweep = newman_ziff_sweep_tracked(&net, cfg.trajectories, seed::derive(base, &[1]), &cfg.p);
        let chi = susceptibility(&sweep, &cfg.p)?;
        let curves: [(&str, CanonicalCurve); 4] = [
            ("binder", binder_cumulant(&sweep, &cfg.p)?),
            ("chi", chi.clone()),
            ("c_max", convolve_canonical(&sweep, &cfg.p, Moment::C1)?),
            ("spanning", convolve_canonical(&sweep, &cfg.p, Moment::Span)?),
        ];
        for (name, c) in &curves {
            for i in 0..c.p.len() {
                w.write_record([
                    cfg.model.to_string(),
                    cell.n.to_string(),
                    cell.k.to_string(),
                    name.to_string(),
                    c.p[i].to_string(),
                    c.value[i].to_string(),
                    c.stderr[i].to_string(),
                    c.n_real.to_string(),
                ])?;
            }
        }
        w.flush()?;
        if let Ok(peak) = susceptibility_peak(&sweep, &chi) {
            peaks.push(PeakRow { model: cfg.model, n: cell.n, k: cell.k, peak });
        }
        r.cell_done()?;
    }
    let name = "percolation_peaks.json";
    fs::write(r.dir.join(name), serde_json::to_string_pretty(&peaks)?)?;
    r.manifest.files.push(name.to_string());
    Ok(())
}

/// `(t, observable, value)` rows of one trajectory.
type Rows = Vec<(usize, &'static str, f64)>;

fn entanglement_rows(params: CircuitParams) -> Result<Rows> {
    let n = params.n_qubits;
    let mut traj = Trajectory::new(params, params.gate_kind(), Tableau::init_z_polarized(n))?.signless();
    for _ in 0..params.n_layers {
        traj.step();
    }
    let t = traj.state();
    let half = Observable::Entropy(Subregion::range(n, 0..n / 2)?);
    Ok(vec![
        (params.n_layers, "tripartite", Observable::quarters(n)?.evaluate(t)?),
        (params.n_layers, "half_entropy", half.evaluate(t)?),
    ])
}

fn purification_rows(params: CircuitParams) -> Result<Rows> {
    let n = params.n_qubits;
    let init = prepare_purification(n, seed::derive(params.seed, &[seed::tag::THERMALIZER]))?;
    let tau = purification_time(&params, init, params.n_layers)?;
    let t = tau.layers();
    Ok(vec![(t, "tau", t as f64), (t, "censored", if tau.is_censored() { 1.0 } else { 0.0 })])
}

fn trajectories(r: &mut Runner, file: &str, simulate: fn(CircuitParams) -> Result<Rows>) -> Result<()> {
    let cfg = r.cfg;
    let mut w = r.csv(file, &TRAJECTORY_HEADER)?;
    for cell in cells(cfg, true) {
        let p = cfg.p[cell.p_index];
        let out: Vec<(u64, Rows)> = (0..cfg.trajectories)
            .into_par_iter()
            .map(|i| {
                let s = trajectory_seed(cfg.seed, cfg.model, cell.n, cell.k, cell.p_index, i);
                let params = CircuitParams::new(cfg.model, cell.n, cell.k, cfg.time_factor() * cell.n, p, s);
                Ok((s, simulate(params)?))
            })
            .collect::<Result<_>>()?;
        for (s, rows) in out {
            for (t, name, value) in rows {
                w.write_record([
                    cfg.model.to_string(),
                    cell.n.to_string(),
                    cell.k.to_string(),
                    p.to_string(),
                    s.to_string(),
                    t.to_string(),
                    name.to_string(),
                    value.to_string(),
                ])?;
            }
        }
        w.flush()?;
        r.cell_done()?;
    }
    Ok(())
}

fn qecc(r: &mut Runner) -> Result<()> {
    let cfg = r.cfg;
    let mut w = r.csv("qecc.csv", &QECC_HEADER)?;
    for cell in cells(cfg, true) {
        let p = cfg.p[cell.p_index];
        let s = seed::derive(cfg.seed, &[cfg.model.id(), cell.n as u64, cell.k as u64, cell.p_index as u64]);
        let params = CircuitParams::new(cfg.model, cell.n, cell.k, cfg.time_factor() * cell.n, p, s);
        let d = code_diagnostics(&params, cfg.trajectories)?;
        w.write_record([
            cfg.model.to_string(),
            cell.n.to_string(),
            cell.k.to_string(),
            p.to_string(),
            d.r_code.to_string(),
            d.r_code_err.to_string(),
            d.d_code.to_string(),
            d.d_code_err.to_string(),
            d.n_traj.to_string(),
            d.n_no_code.to_string(),
        ])?;
        w.flush()?;
        r.cell_done()?;
    }
    Ok(())
}

/// Fixed point of the block-decimation map as pretty JSON.
pub fn rg_json() -> Result<String> {
    let fp: FixedPoint = fixed_point()?;
    Ok(serde_json::to_string_pretty(&fp)?)
}

fn rg(r: &mut Runner) -> Result<()> {
    let name = "rg.json";
    write_file(&r.dir.join(name), &rg_json()?)?;
    r.manifest.files.push(name.to_string());
    r.cell_done()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
