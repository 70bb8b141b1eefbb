//! Run and analysis configurations, read from TOML or JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scrambler_core::analysis::{Ansatz, SizeFilter};
use scrambler_core::circuit::Model;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Percolation,
    Entanglement,
    Purification,
    Qecc,
    Rg,
}

/// One sweep over `(N, k, p)` cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "default_model")]
    pub model: Model,
    /// System sizes; each a power of two.
    #[serde(default, rename = "N")]
    pub n: Vec<usize>,
    /// Nonlocalities; 0 stands for the complete circuit `k = log2 N`.
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub p: Vec<f64>,
    /// Trajectories per cell, or realizations per sweep for percolation.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Circuit depth in units of `N`: network depth for percolation, final
    /// time for entanglement and qecc, censoring time for purification.
    #[serde(default)]
    pub time_factor: Option<usize>,
}

fn default_model() -> Model {
    Model::Pwr2
}

fn default_trajectories() -> usize {
    200
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn time_factor(&self) -> usize {
        self.time_factor.unwrap_or(match self.experiment {
            Experiment::Percolation => 1,
            Experiment::Entanglement => 2,
            Experiment::Qecc => 8,
            Experiment::Purification => 64,
            Experiment::Rg => 0,
        })
    }

    /// Nonlocality actually simulated at size `n`.
    pub fn k_at(&self, n: usize, k: usize) -> usize {
        if k == 0 {
            n.trailing_zeros() as usize
        } else {
            k
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment == Experiment::Rg {
            return Ok(());
        }
        if self.n.is_empty() || self.k.is_empty() || self.p.is_empty() {
            bail!("N, k and p grids must be nonempty");
        }
        if self.trajectories == 0 {
            bail!("trajectories must be positive");
        }
        for &n in &self.n {
            if n < 2 || !n.is_power_of_two() {
                bail!("N = {n} is not a power of two >= 2");
            }
            for &k in &self.k {
                if self.k_at(n, k) > n.trailing_zeros() as usize {
                    bail!("k = {k} exceeds log2 N for N = {n}");
                }
            }
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!("p = {p} outside [0, 1]");
        }
        if self.time_factor == Some(0) {
            bail!("time_factor must be positive");
        }
        if self.experiment == Experiment::Percolation && self.p.windows(2).any(|w| w[1] <= w[0]) {
            bail!("percolation p grid must be strictly increasing");
        }
        if self.experiment == Experiment::Entanglement && self.n.iter().any(|&n| n < 4) {
            bail!("entanglement runs need N >= 4 for quarter regions");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    #[default]
    None,
    /// Divide values by `N`, as for purification time `tau / N`.
    N,
}

/// Finite-size analysis of one CSV produced by `run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub observable: String,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_ansatz")]
    pub ansatz: Ansatz,
    /// Fixed `z`; absent with `free_z = false` means 1.
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default)]
    pub free_z: bool,
    #[serde(default = "default_boot")]
    pub n_boot: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub size_filter: SizeFilter,
    #[serde(default)]
    pub p_range: Option<(f64, f64)>,
    /// Keep only `p` up to the minimum of the largest size's curve.
    #[serde(default)]
    pub cut_at_largest_minimum: bool,
    /// Lower bound on every standard error; defaults to `1 / n` samples.
    #[serde(default)]
    pub stderr_floor: Option<f64>,
    #[serde(default)]
    pub normalize: Normalize,
    /// Also fit a scaling collapse (needs three sizes).
    #[serde(default = "default_true")]
    pub collapse: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_ansatz() -> Ansatz {
    Ansatz::Standard
}

fn default_boot() -> usize {
    scrambler_core::analysis::DEFAULT_BOOT
}

fn default_true() -> bool {
    true
}

/// Parse TOML or JSON by extension, falling back on content sniffing.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, path.extension().and_then(|e| e.to_str()))
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn parse<T: DeserializeOwned>(text: &str, extension: Option<&str>) -> Result<T> {
    let json = match extension {
        Some("json") => true,
        Some("toml") => false,
        _ => text.trim_start().starts_with('{'),
    };
    Ok(if json { serde_json::from_str(text)? } else { toml::from_str(text)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t: RunConfig = parse(
            "experiment = \"percolation\"\nmodel = \"PWR2\"\nN = [64]\nk = [1]\np = [0.5]\ntrajectories = 1000\n",
            Some("toml"),
        )
        .unwrap();
        let j: RunConfig = parse(
            r#"{"experiment":"percolation","model":"PWR2","N":[64],"k":[1],"p":[0.5],"trajectories":1000}"#,
            None,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.time_factor(), 1);
        t.validate().unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        let base: RunConfig =
            parse(r#"{"experiment":"entanglement","N":[8],"k":[1,3],"p":[0.1]}"#, None).unwrap();
        base.validate().unwrap();
        let too_nonlocal = RunConfig { k: vec![4], ..base.clone() };
        assert!(too_nonlocal.validate().is_err());
        let not_pow2 = RunConfig { n: vec![12], ..base.clone() };
        assert!(not_pow2.validate().is_err());
        let empty = RunConfig { p: vec![], ..base.clone() };
        assert!(empty.validate().is_err());
        assert!(parse::<RunConfig>(r#"{"experiment":"rg","bogus":1}"#, None).is_err());
    }

    #[test]
    fn complete_circuit_shorthand() {
        let c: RunConfig = parse(r#"{"experiment":"percolation","N":[64,128],"k":[0],"p":[0.5]}"#, None).unwrap();
        assert_eq!(c.k_at(128, 0), 7);
        c.validate().unwrap();
    }
}
