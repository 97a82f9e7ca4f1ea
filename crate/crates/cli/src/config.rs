//! Run configuration: a TOML file with one table per concern, overridden by
//! `--set section.key=value` flags. Every field has a default, so an empty
//! file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ptycho_core::experiment::{ExperimentConfig, Seeds};
use ptycho_core::inference::{ChainConfig, InitConfig, DEFAULT_INTENSITY_FLOOR};
use ptycho_core::physics::NoiseMode;
use ptycho_core::rpie::{RpieConfig, DEFAULT_ALPHA};

/// Malformed configuration text or override.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config parse error: {}", self.0)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub object_side: usize,
    pub patch_side: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            object_side: 64,
            patch_side: 16,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Scan {
    pub overlap: f64,
    pub jitter: usize,
}

impl Default for Scan {
    fn default() -> Self {
        Scan {
            overlap: 0.05,
            jitter: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub radius: f64,
    pub amplitude: f64,
    /// Optional PRBE file; replaces the disk probe when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            radius: 8.0,
            amplitude: 100.0,
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    /// Phantom built from two seeded synthetic stroke images.
    #[default]
    Synthetic,
    FreeSpace,
    Zero,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectSection {
    pub kind: ObjectKind,
    /// POBJ file; takes precedence over `kind`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Poisson,
    Off,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub mode: NoiseKind,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub data: u64,
    pub chain: u64,
    pub rpie: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Chain {
    pub step_size: f64,
    pub n_iters: usize,
    pub burn_in: usize,
    pub intensity_floor: f64,
    pub init_iterations: usize,
    pub init_step: f64,
}

impl Default for Chain {
    fn default() -> Self {
        let c = ChainConfig::default();
        let i = InitConfig::default();
        Chain {
            step_size: c.step_size,
            n_iters: c.n_iters,
            burn_in: c.burn_in,
            intensity_floor: DEFAULT_INTENSITY_FLOOR,
            init_iterations: i.iterations,
            init_step: i.step,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Rpie {
    pub alpha: f64,
    pub epochs: usize,
    /// POBJ starting object; free space when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_file: Option<PathBuf>,
}

impl Default for Rpie {
    fn default() -> Self {
        Rpie {
            alpha: DEFAULT_ALPHA,
            epochs: 300,
            init_file: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Benchmark {
    pub overlaps: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub n_objects: usize,
}

impl Default for Benchmark {
    fn default() -> Self {
        Benchmark {
            overlaps: vec![0.05, 0.2],
            amplitudes: vec![100.0, 10.0],
            n_objects: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub geometry: Geometry,
    /// `None` when the file has no `[scan]` table; commands that read data
    /// then take the plan from the dataset without cross-checking it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<Scan>,
    pub probe: ProbeSection,
    pub object: ObjectSection,
    pub noise: Noise,
    pub seeds: SeedSection,
    pub chain: Chain,
    pub rpie: Rpie,
    pub benchmark: Benchmark,
    /// Manifest bookkeeping, ignored on input so a manifest can be replayed.
    #[serde(skip_serializing)]
    pub run: Option<toml::Value>,
    #[serde(skip_serializing)]
    pub derived: Option<toml::Value>,
    #[serde(skip_serializing)]
    pub outputs: Option<toml::Value>,
}

fn parse_value(raw: &str) -> toml::Value {
    // bare words such as `poisson` become strings
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ParseError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ParseError(format!("override {assignment:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() != 2 || path.iter().any(|p| p.is_empty()) {
        return Err(ParseError(format!("override key {key:?} must look like section.key")));
    }
    let section = table
        .entry(path[0])
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| ParseError(format!("{} is not a table", path[0])))?;
    section.insert(path[1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ParseError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ParseError(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Config::deserialize(toml::Value::Table(table)).map_err(|e| ParseError(e.to_string()))
    }

    /// Reads `path` when given. Relative file references inside it resolve
    /// against the config's directory and are stored absolute, so the
    /// manifest written from this config can be replayed from anywhere.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| {
                anyhow::Error::new(e).context(format!("reading config {}", p.display()))
            })?,
            None => String::new(),
        };
        let mut cfg = Config::parse(&text, overrides)?;
        if let Some(dir) = path.and_then(Path::parent) {
            let resolve = |p: &mut Option<PathBuf>| {
                if let Some(f) = p {
                    if f.is_relative() {
                        let joined = dir.join(&*f);
                        *f = std::path::absolute(&joined).unwrap_or(joined);
                    }
                }
            };
            resolve(&mut cfg.probe.file);
            resolve(&mut cfg.object.file);
            resolve(&mut cfg.rpie.init_file);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            data: self.seeds.data,
            chain: self.seeds.chain,
            rpie: self.seeds.rpie,
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let scan = self.scan.clone().unwrap_or_default();
        ExperimentConfig {
            overlap_ratio: scan.overlap,
            probe_amplitude: self.probe.amplitude,
            probe_radius: self.probe.radius,
            jitter: scan.jitter,
            object_side: self.geometry.object_side,
            patch_side: self.geometry.patch_side,
            seeds: self.seeds(),
        }
    }

    pub fn noise_mode(&self) -> NoiseMode {
        match self.noise.mode {
            NoiseKind::Poisson => NoiseMode::Poisson,
            NoiseKind::Off => NoiseMode::Off,
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            step_size: self.chain.step_size,
            n_iters: self.chain.n_iters,
            burn_in: self.chain.burn_in,
            seed: self.seeds.chain,
            intensity_floor: self.chain.intensity_floor,
        }
    }

    pub fn init_config(&self) -> InitConfig {
        InitConfig {
            iterations: self.chain.init_iterations,
            step: self.chain.init_step,
        }
    }

    pub fn rpie_config(&self) -> RpieConfig {
        RpieConfig {
            alpha: self.rpie.alpha,
            n_epochs: self.rpie.epochs,
            seed: self.seeds.rpie,
            init_object: None,
        }
    }
}
