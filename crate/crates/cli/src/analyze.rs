//! Crossing and collapse fits over the tables written by `run`.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use scrambler_core::analysis::{
    before_largest_minimum, collapse_fit, crossing_point, Ansatz, Crossing, FitConfig, ObservableCurve,
};
use scrambler_core::circuit::Model;
use scrambler_core::Error;
use serde::Serialize;

use crate::config::{AnalyzeConfig, Normalize};
use crate::run::{PERCOLATION_HEADER, QECC_HEADER, TRAJECTORY_HEADER};

/// Fit summary in the published JSON layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRecord {
    pub observable: String,
    pub model: Model,
    pub k: usize,
    pub ansatz: Ansatz,
    pub p_c: f64,
    pub p_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    pub z: Option<f64>,
    pub z_err: Option<f64>,
    pub cost: f64,
    pub sizes_used: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupResult {
    pub model: Model,
    pub k: usize,
    pub crossing: Crossing,
    pub fit: Option<FitRecord>,
}

/// Samples of one `(model, k, N)` curve before validation.
#[derive(Default)]
struct Samples {
    /// `p -> (value, stderr, count)`.
    points: BTreeMap<u64, (f64, f64, usize)>,
}

type Groups = BTreeMap<(Model, usize), BTreeMap<usize, Samples>>;

fn columns(headers: &csv::StringRecord, want: &[&str]) -> Result<Vec<usize>> {
    want.iter()
        .map(|c| headers.iter().position(|h| h == *c).ok_or_else(|| anyhow!("missing column {c:?}")))
        .collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    rec.get(i)
        .ok_or_else(|| anyhow!("short row"))?
        .parse()
        .map_err(|e| anyhow!("bad {name} value {:?}: {e}", rec.get(i).unwrap_or("")))
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Read curves of `cfg.observable` from any of the three table layouts.
fn read_groups(cfg: &AnalyzeConfig) -> Result<Groups> {
    let mut rdr = csv::Reader::from_path(&cfg.input).with_context(|| format!("opening {}", cfg.input.display()))?;
    let headers = rdr.headers()?.clone();
    let has = |c: &str| headers.iter().any(|h| h == c);
    let mut groups = Groups::new();
    if has("seed") || has("t") {
        let ix = columns(&headers, &TRAJECTORY_HEADER)?;
        let mut raw: BTreeMap<(Model, usize, usize, u64), Vec<f64>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.get(ix[6]) != Some(cfg.observable.as_str()) {
                continue;
            }
            let model: Model = field(&rec, ix[0], "model")?;
            let p: f64 = field(&rec, ix[3], "p")?;
            let key = (model, field(&rec, ix[2], "k")?, field(&rec, ix[1], "N")?, p.to_bits());
            raw.entry(key).or_default().push(field(&rec, ix[7], "value")?);
        }
        for ((model, k, n, p), xs) in raw {
            let (m, s) = mean_stderr(&xs);
            groups.entry((model, k)).or_default().entry(n).or_default().points.insert(p, (m, s, xs.len()));
        }
    } else if has("observable") {
        let ix = columns(&headers, &PERCOLATION_HEADER)?;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.get(ix[3]) != Some(cfg.observable.as_str()) {
                continue;
            }
            let model: Model = field(&rec, ix[0], "model")?;
            let p: f64 = field(&rec, ix[4], "p")?;
            let point = (field(&rec, ix[5], "value")?, field(&rec, ix[6], "stderr")?, field(&rec, ix[7], "n_real")?);
            let n: usize = field(&rec, ix[1], "N")?;
            groups.entry((model, field(&rec, ix[2], "k")?)).or_default().entry(n).or_default().points.insert(p.to_bits(), point);
        }
    } else {
        let ix = columns(&headers, &QECC_HEADER)?;
        let (v, e) = match cfg.observable.as_str() {
            "r_code" => (ix[4], ix[5]),
            "d_code" => (ix[6], ix[7]),
            other => bail!("qecc tables carry r_code and d_code, not {other:?}"),
        };
        for rec in rdr.records() {
            let rec = rec?;
            let model: Model = field(&rec, ix[0], "model")?;
            let p: f64 = field(&rec, ix[3], "p")?;
            let point = (field(&rec, v, "value")?, field(&rec, e, "stderr")?, field(&rec, ix[8], "n_traj")?);
            let n: usize = field(&rec, ix[1], "N")?;
            groups.entry((model, field(&rec, ix[2], "k")?)).or_default().entry(n).or_default().points.insert(p.to_bits(), point);
        }
    }
    if groups.is_empty() {
        bail!("no rows for observable {:?} in {}", cfg.observable, cfg.input.display());
    }
    Ok(groups)
}

fn curves(cfg: &AnalyzeConfig, model: Model, k: usize, sizes: &BTreeMap<usize, Samples>) -> Result<Vec<ObservableCurve>> {
    let mut out = Vec::new();
    for (&n, s) in sizes {
        let (mut p, mut value, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
        for (&bits, &(v, e, count)) in &s.points {
            let x = f64::from_bits(bits);
            if let Some((lo, hi)) = cfg.p_range {
                if x < lo || x > hi {
                    continue;
                }
            }
            if !v.is_finite() {
                continue;
            }
            let scale = match cfg.normalize {
                Normalize::None => 1.0,
                Normalize::N => n as f64,
            };
            let floor = cfg.stderr_floor.unwrap_or(1.0 / count.max(1) as f64);
            p.push(x);
            value.push(v / scale);
            stderr.push((e / scale).max(floor));
        }
        out.push(ObservableCurve::new(n, k, model, cfg.observable.clone(), p, value, stderr)?);
    }
    let kept = cfg.size_filter.apply(&out);
    if cfg.cut_at_largest_minimum && !kept.is_empty() {
        return Ok(before_largest_minimum(&kept)?);
    }
    Ok(kept)
}

fn underdetermined(what: &str, cfg: &AnalyzeConfig, model: Model, k: usize, e: Error) -> anyhow::Error {
    match e {
        Error::TooFewSizes { need, got } => anyhow!(
            "{what} for {:?} ({model}, k = {k}) is underdetermined: need at least {need} system sizes, got {got}",
            cfg.observable
        ),
        other => anyhow!("{what} for {:?} ({model}, k = {k}) failed: {other}", cfg.observable),
    }
}

/// Crossing and optional collapse per `(model, k)` group. Writes
/// `crossings_<observable>.csv` and one fit JSON per group into
/// `cfg.output`.
pub fn analyze(cfg: &AnalyzeConfig) -> Result<Vec<GroupResult>> {
    let groups = read_groups(cfg)?;
    let fit_cfg = FitConfig {
        z_fixed: if cfg.free_z { None } else { Some(cfg.z.unwrap_or(1.0)) },
        ..FitConfig::default()
    };
    let mut results = Vec::new();
    for ((model, k), sizes) in &groups {
        let (model, k) = (*model, *k);
        let cs = curves(cfg, model, k, sizes)?;
        let crossing = crossing_point(&cs, cfg.n_boot, cfg.seed).map_err(|e| underdetermined("crossing", cfg, model, k, e))?;
        let fit = if cfg.collapse {
            let f = collapse_fit(&cs, cfg.ansatz, &fit_cfg, cfg.n_boot, cfg.seed)
                .map_err(|e| underdetermined("collapse fit", cfg, model, k, e))?;
            Some(FitRecord {
                observable: cfg.observable.clone(),
                model,
                k,
                ansatz: f.ansatz,
                p_c: f.p_c,
                p_c_err: f.p_c_err,
                nu: f.nu,
                nu_err: f.nu_err,
                z: f.z,
                z_err: f.z_err,
                cost: f.cost,
                sizes_used: f.sizes_used,
            })
        } else {
            None
        };
        results.push(GroupResult { model, k, crossing, fit });
    }
    write_outputs(cfg, &results)?;
    Ok(results)
}

fn write_outputs(cfg: &AnalyzeConfig, results: &[GroupResult]) -> Result<()> {
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    let path = cfg.output.join(format!("crossings_{}.csv", cfg.observable));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["model", "k", "observable", "n_small", "n_large", "p_base", "p_mean", "p_err", "p_c", "p_c_err"])?;
    for r in results {
        for q in &r.crossing.pairs {
            w.write_record([
                r.model.to_string(),
                r.k.to_string(),
                cfg.observable.clone(),
                q.n_small.to_string(),
                q.n_large.to_string(),
                q.p_base.to_string(),
                q.p_mean.to_string(),
                q.p_err.to_string(),
                r.crossing.p_c.to_string(),
                r.crossing.p_c_err.to_string(),
            ])?;
        }
        if let Some(fit) = &r.fit {
            let name = format!("fit_{}_{}_k{}.json", cfg.observable, r.model, r.k);
            fs::write(cfg.output.join(name), serde_json::to_string_pretty(fit)?)?;
        }
    }
    w.flush()?;
    Ok(())
}
