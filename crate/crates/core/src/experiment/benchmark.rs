use std::time::Instant;

use rayon::prelude::*;

use super::config::{make_disk_probe, make_scan_plan, ExperimentConfig};
use super::metrics::{l2_error, uncertainty_error_report, MetricsReport};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::generator::GeneratorModel;
use crate::inference::{init_latent, run_chain, ChainConfig, InitConfig, PtychoProblem};
use crate::physics::{simulate_dataset, NoiseMode};
use crate::rng::{derive_seed, seeded_rng};
use crate::rpie::{run_rpie, RpieConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Ula,
    Rpie,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ula => "ula",
            Method::Rpie => "rpie",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub config_index: usize,
    pub object_index: usize,
    pub method: Method,
    pub n_positions: usize,
    /// Failure message when the run did not complete.
    pub outcome: std::result::Result<MetricsReport, String>,
}

/// Population mean and standard deviation of each metric over completed runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub config_index: usize,
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    /// `(mean, std)` for l2_error and the four correlations, in CSV order;
    /// `None` when no completed run defines the metric.
    pub stats: [Option<(f64, f64)>; 5],
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkTable {
    pub configs: Vec<ExperimentConfig>,
    pub rows: Vec<BenchmarkRow>,
    pub aggregates: Vec<Aggregate>,
}

const METRICS: [&str; 5] = ["l2_error", "pearson_mag", "spearman_mag", "pearson_phase", "spearman_phase"];

fn metric_values(r: &MetricsReport) -> [Option<f64>; 5] {
    [
        Some(r.l2_error),
        r.pearson_mag,
        r.spearman_mag,
        r.pearson_phase,
        r.spearman_phase,
    ]
}

fn config_fields(c: &ExperimentConfig) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        c.overlap_ratio,
        c.probe_amplitude,
        c.probe_radius,
        c.jitter,
        c.object_side,
        c.patch_side,
        c.seeds.data,
        c.seeds.chain,
        c.seeds.rpie
    )
}

const CONFIG_HEADER: &str =
    "config_index,overlap_ratio,probe_amplitude,probe_radius,jitter,object_side,patch_side,seed_data,seed_chain,seed_rpie";

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn aggregate(config_index: usize, method: Method, rows: &[BenchmarkRow]) -> Aggregate {
    let mine: Vec<_> = rows
        .iter()
        .filter(|r| r.config_index == config_index && r.method == method)
        .collect();
    let ok: Vec<&MetricsReport> = mine.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let mut stats = [None; 5];
    for (k, s) in stats.iter_mut().enumerate() {
        let values: Vec<f64> = ok.iter().filter_map(|r| metric_values(r)[k]).collect();
        *s = mean_std(&values);
    }
    Aggregate {
        config_index,
        method,
        n_ok: ok.len(),
        n_failed: mine.len() - ok.len(),
        stats,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_else(|| "nan".into())
}

impl BenchmarkTable {
    /// Per-run metrics. Wall-clock times are excluded, see [`Self::timing_csv`].
    pub fn runs_csv(&self) -> String {
        let mut out = format!(
            "{CONFIG_HEADER},object_index,method,n_positions,status,{}\n",
            MetricsReport::csv_header()
        );
        for r in &self.rows {
            let (status, metrics) = match &r.outcome {
                Ok(m) => ("ok".to_string(), m.csv_fields()),
                Err(e) => (format!("\"failed: {}\"", e.replace('"', "'")), "nan,nan,nan,nan,nan".to_string()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.config_index,
                config_fields(&self.configs[r.config_index]),
                r.object_index,
                r.method.name(),
                r.n_positions,
                status,
                metrics
            ));
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = format!("{CONFIG_HEADER},method,n_ok,n_failed");
        for m in METRICS {
            out.push_str(&format!(",{m}_mean,{m}_std"));
        }
        out.push('\n');
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{}",
                a.config_index,
                config_fields(&self.configs[a.config_index]),
                a.method.name(),
                a.n_ok,
                a.n_failed
            ));
            for s in &a.stats {
                out.push_str(&format!(",{},{}", fmt_opt(s.map(|v| v.0)), fmt_opt(s.map(|v| v.1))));
            }
            out.push('\n');
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("config_index,object_index,method,runtime_s\n");
        for r in &self.rows {
            let t = r.outcome.as_ref().map(|m| m.runtime).unwrap_or(f64::NAN);
            out.push_str(&format!("{},{},{},{:.3}\n", r.config_index, r.object_index, r.method.name(), t));
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchmarkSettings {
    pub rpie: RpieConfig,
    pub chain: ChainConfig,
    pub init: InitConfig,
}

fn run_one(
    cfg: &ExperimentConfig,
    object: &ComplexField,
    object_index: usize,
    model: &GeneratorModel,
    settings: &BenchmarkSettings,
) -> Result<(usize, [std::result::Result<MetricsReport, String>; 2])> {
    let i = object_index as u64;
    let probe = make_disk_probe(cfg.patch_side, cfg.probe_radius, cfg.probe_amplitude)?;
    let plan = make_scan_plan(cfg, &mut seeded_rng(derive_seed(cfg.seeds.data, &[i, 0])))?;
    let data = simulate_dataset(object, &probe, &plan, derive_seed(cfg.seeds.data, &[i, 1]), NoiseMode::Poisson)?;

    let ula = (|| {
        let start = Instant::now();
        let problem = PtychoProblem::new(&data, &probe, &plan, model)?.with_floor(settings.chain.intensity_floor);
        let z0 = init_latent(model, &settings.init)?.latent;
        let chain = ChainConfig {
            seed: derive_seed(cfg.seeds.chain, &[i]),
            ..settings.chain.clone()
        };
        let (ensemble, _) = run_chain(&problem, model, &z0, &chain)?;
        let mut report = uncertainty_error_report(object, &ensemble)?;
        report.runtime = start.elapsed().as_secs_f64();
        Ok::<_, Error>(report)
    })();
    let rpie = (|| {
        let start = Instant::now();
        let rcfg = RpieConfig {
            seed: derive_seed(cfg.seeds.rpie, &[i]),
            ..settings.rpie.clone()
        };
        let result = run_rpie(&data, &probe, &plan, &rcfg)?;
        Ok::<_, Error>(MetricsReport {
            l2_error: l2_error(object, &result.object)?,
            runtime: start.elapsed().as_secs_f64(),
            ..Default::default()
        })
    })();
    Ok((plan.len(), [ula.map_err(|e| e.to_string()), rpie.map_err(|e| e.to_string())]))
}

/// Every `(config, object)` pair is simulated once and reconstructed by both
/// methods. Runs are independent and seeded from the config seeds and the
/// object index, so the table does not depend on scheduling. A failing run is
/// recorded in its row and the sweep continues.
pub fn run_benchmark(
    configs: &[ExperimentConfig],
    objects: &[ComplexField],
    model: &GeneratorModel,
    settings: &BenchmarkSettings,
) -> Result<BenchmarkTable> {
    if configs.is_empty() || objects.is_empty() {
        return Err(Error::InvalidInput("benchmark needs at least one config and one object".into()));
    }
    for c in configs {
        c.validate()?;
    }
    settings.chain.validate()?;
    settings.rpie.validate()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..objects.len()).map(move |o| (c, o)))
        .collect();
    let rows: Vec<BenchmarkRow> = jobs
        .par_iter()
        .flat_map_iter(|&(c, o)| {
            let (n_positions, outcomes) = match run_one(&configs[c], &objects[o], o, model, settings) {
                Ok(v) => v,
                Err(e) => (0, [Err(e.to_string()), Err(e.to_string())]),
            };
            let [ula, rpie] = outcomes;
            [(Method::Ula, ula), (Method::Rpie, rpie)]
                .into_iter()
                .map(move |(method, outcome)| BenchmarkRow {
                    config_index: c,
                    object_index: o,
                    method,
                    n_positions,
                    outcome,
                })
        })
        .collect();
    let aggregates = (0..configs.len())
        .flat_map(|c| [Method::Ula, Method::Rpie].map(|m| (c, m)))
        .map(|(c, m)| aggregate(c, m, &rows))
        .collect();
    Ok(BenchmarkTable {
        configs: configs.to_vec(),
        rows,
        aggregates,
    })
}
