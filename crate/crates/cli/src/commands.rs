use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::seq::SliceRandom;

use ptycho_core::experiment::{
    ingest_idx, l2_error, make_disk_probe, make_phantom, make_scan_plan, run_benchmark, scan_step, synthetic_digits,
    uncertainty_error_report, BenchmarkSettings, ExperimentConfig, GrayImage, MetricsReport,
};
use ptycho_core::generator::{encode_model, load_model, GeneratorModel};
use ptycho_core::inference::{init_latent, run_chain, PosteriorEnsemble, PtychoProblem};
use ptycho_core::io::{
    encode_dataset, encode_object, encode_pgm, encode_pmap, encode_probe, encode_samples, load_dataset, load_object,
    load_probe, load_samples, MapFile,
};
use ptycho_core::physics::{simulate_dataset, DiffractionStack, FrameSource, Probe, ScanPlan};
use ptycho_core::rng::{derive_seed, seeded_rng};
use ptycho_core::rpie::run_rpie;
use ptycho_core::{ComplexField, Error, RealImage};

use crate::config::{Config, ObjectKind};
use crate::manifest::{sidecar_path, Manifest};

pub fn build_probe(cfg: &Config) -> anyhow::Result<Probe> {
    match &cfg.probe.file {
        Some(path) => Ok(load_probe(path).with_context(|| format!("loading probe {}", path.display()))?),
        None => Ok(make_disk_probe(
            cfg.geometry.patch_side,
            cfg.probe.radius,
            cfg.probe.amplitude,
        )?),
    }
}

pub fn build_object(cfg: &Config) -> anyhow::Result<ComplexField> {
    let side = cfg.geometry.object_side;
    if let Some(path) = &cfg.object.file {
        return load_object(path).with_context(|| format!("loading object {}", path.display()));
    }
    Ok(match cfg.object.kind {
        ObjectKind::Synthetic => {
            let digits = synthetic_digits(2, cfg.seeds.data);
            make_phantom(&digits[0], &digits[1], side)?
        }
        ObjectKind::FreeSpace => ComplexField::free_space(side),
        ObjectKind::Zero => ComplexField::zeros(side, side),
    })
}

/// The plan is drawn from sub-seed `[0, 0]` and the counts from `[0, 1]` of
/// the data seed, matching benchmark object 0.
pub fn build_plan(cfg: &Config) -> anyhow::Result<ScanPlan> {
    let exp = cfg.experiment();
    Ok(make_scan_plan(&exp, &mut seeded_rng(derive_seed(exp.seeds.data, &[0, 0])))?)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| anyhow::Error::new(e).context(format!("creating {}", dir.display())))
}

fn load_data(cfg: &Config, path: &Path) -> anyhow::Result<(ScanPlan, DiffractionStack)> {
    let (plan, data) = load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))?;
    if cfg.scan.is_some() {
        let expected = build_plan(cfg)?;
        data.check_plan(&expected)
            .context("dataset was not recorded with the configured scan")?;
    }
    Ok((plan, data))
}

fn write_map(
    m: &mut Manifest,
    dir: &Path,
    name: &str,
    field: &str,
    channel: &str,
    image: &RealImage,
) -> anyhow::Result<()> {
    let map = MapFile {
        field: field.into(),
        channel: channel.into(),
        image: image.clone(),
    };
    m.write_output(name, &dir.join(format!("{name}.pmap")), &encode_pmap(&map)?)?;
    m.write_output(&format!("{name}_preview"), &dir.join(format!("{name}.pgm")), &encode_pgm(image))
}

fn record_plan(m: &mut Manifest, plan: &ScanPlan) {
    m.derived("n_positions", plan.len() as i64);
    m.derived("plan_digest", format!("{:016x}", plan.digest()));
}

pub fn simulate(cfg: &Config, out: &Path) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("simulate");
    let probe = build_probe(cfg)?;
    let object = build_object(cfg)?;
    let plan = build_plan(cfg)?;
    let exp = cfg.experiment();
    let data = simulate_dataset(
        &object,
        &probe,
        &plan,
        derive_seed(exp.seeds.data, &[0, 1]),
        cfg.noise_mode(),
    )?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    m.write_output("dataset", out, &encode_dataset(&plan, &data)?)?;
    m.write_output("probe", &out.with_extension("prbe"), &encode_probe(&probe)?)?;
    m.write_output("object", &out.with_extension("pobj"), &encode_object(&object)?)?;
    record_plan(&mut m, &plan);
    m.derived("scan_step", scan_step(exp.overlap_ratio, exp.patch_side)? as i64);
    m.derived("total_counts", data.total_counts() as i64);
    m.finish(cfg, &sidecar_path(out))
}

pub fn sample(cfg: &Config, data_path: &Path, model_path: &Path, out_dir: &Path) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("sample");
    m.input("data", data_path);
    m.input("model", model_path);
    let (plan, data) = load_data(cfg, data_path)?;
    let probe = build_probe(cfg)?;
    let model = load_model(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let chain = cfg.chain_config();
    let problem = PtychoProblem::new(&data, &probe, &plan, &model)?.with_floor(chain.intensity_floor);
    let init = init_latent(&model, &cfg.init_config())?;
    let (ensemble, trace) = run_chain(&problem, &model, &init.latent, &chain)?;

    create_dir(out_dir)?;
    let mean = ensemble.mean_object();
    m.write_output("mean_object", &out_dir.join("mean.pobj"), &encode_object(mean)?)?;
    m.write_output("samples", &out_dir.join("samples.psmp"), &encode_samples(ensemble.samples())?)?;
    write_map(&mut m, out_dir, "mean_magnitude", "mean", "magnitude", &mean.magnitude())?;
    write_map(&mut m, out_dir, "mean_phase", "mean", "phase", &mean.phase())?;
    write_map(&mut m, out_dir, "std_magnitude", "std", "magnitude", ensemble.std_magnitude())?;
    write_map(&mut m, out_dir, "std_phase", "std", "phase", ensemble.std_phase())?;
    m.write_output("trace", &out_dir.join("trace.csv"), trace.to_csv().as_bytes())?;
    record_plan(&mut m, &plan);
    m.derived("n_samples", ensemble.len() as i64);
    m.derived("init_objective", init.objective);
    m.finish(cfg, &out_dir.join("manifest.toml"))
}

pub fn rpie(cfg: &Config, data_path: &Path, out_dir: &Path) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("rpie");
    m.input("data", data_path);
    let (plan, data) = load_data(cfg, data_path)?;
    let probe = build_probe(cfg)?;
    let mut rcfg = cfg.rpie_config();
    if let Some(path) = &cfg.rpie.init_file {
        rcfg.init_object = Some(load_object(path).with_context(|| format!("loading {}", path.display()))?);
    }
    let result = run_rpie(&data, &probe, &plan, &rcfg)?;

    create_dir(out_dir)?;
    m.write_output("object", &out_dir.join("object.pobj"), &encode_object(&result.object)?)?;
    write_map(&mut m, out_dir, "magnitude", "rpie", "magnitude", &result.object.magnitude())?;
    write_map(&mut m, out_dir, "phase", "rpie", "phase", &result.object.phase())?;
    m.write_output("misfit", &out_dir.join("misfit.csv"), result.misfit_csv().as_bytes())?;
    record_plan(&mut m, &plan);
    if let Some(last) = result.misfit.last() {
        m.derived("final_misfit", *last);
    }
    m.finish(cfg, &out_dir.join("manifest.toml"))
}

pub fn metrics_csv(report: &MetricsReport, kind: &str) -> String {
    format!("kind,{}\n{kind},{}\n", MetricsReport::csv_header(), report.csv_fields())
}

/// Returns the CSV text; writes it and a manifest when `out` is given.
pub fn metrics(
    cfg: &Config,
    truth_path: &Path,
    recon: Option<&Path>,
    ensemble: Option<&Path>,
    out: Option<&Path>,
) -> anyhow::Result<String> {
    let mut m = Manifest::start("metrics");
    m.input("truth", truth_path);
    let truth = load_object(truth_path).with_context(|| format!("loading {}", truth_path.display()))?;
    let (report, kind) = match (recon, ensemble) {
        (Some(path), None) => {
            m.input("recon", path);
            let recon = load_object(path).with_context(|| format!("loading {}", path.display()))?;
            let report = MetricsReport {
                l2_error: l2_error(&truth, &recon)?,
                ..Default::default()
            };
            (report, "reconstruction")
        }
        (None, Some(path)) => {
            m.input("ensemble", path);
            let samples = load_samples(path).with_context(|| format!("loading {}", path.display()))?;
            let ensemble = PosteriorEnsemble::from_samples(samples)?;
            (uncertainty_error_report(&truth, &ensemble)?, "ensemble")
        }
        _ => return Err(Error::InvalidInput("give exactly one of --recon or --ensemble".into()).into()),
    };
    let csv = metrics_csv(&report, kind);
    if let Some(out) = out {
        m.write_output("metrics", out, csv.as_bytes())?;
        m.finish(cfg, &sidecar_path(out))?;
    }
    Ok(csv)
}

pub fn phantoms(
    cfg: &Config,
    idx: Option<&Path>,
    count: usize,
    seed: u64,
    out_dir: &Path,
) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("phantoms");
    let images: Vec<GrayImage> = match idx {
        Some(path) => {
            m.input("idx", path);
            ingest_idx(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => synthetic_digits(2 * count, seed),
    };
    if images.len() < 2 * count {
        return Err(Error::InsufficientData(format!(
            "{count} phantoms need {} images, source has {}",
            2 * count,
            images.len()
        ))
        .into());
    }
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    create_dir(out_dir)?;
    let side = cfg.geometry.object_side;
    let mut sources = Vec::with_capacity(count);
    for k in 0..count {
        let (a, b) = (order[2 * k], order[2 * k + 1]);
        let phantom = make_phantom(&images[a], &images[b], side)?;
        let name = format!("phantom_{k:03}");
        m.write_output(&name, &out_dir.join(format!("{name}.pobj")), &encode_object(&phantom)?)?;
        m.write_output(
            &format!("{name}_preview"),
            &out_dir.join(format!("{name}.pgm")),
            &encode_pgm(&phantom.magnitude()),
        )?;
        sources.push(toml::Value::Array(vec![(a as i64).into(), (b as i64).into()]));
    }
    m.derived("seed", seed as i64);
    m.derived("source_images", toml::Value::Array(sources));
    m.finish(cfg, &out_dir.join("manifest.toml"))
}

fn benchmark_objects(cfg: &Config, objects_dir: Option<&Path>) -> anyhow::Result<Vec<ComplexField>> {
    let n = cfg.benchmark.n_objects;
    match objects_dir {
        Some(dir) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| anyhow::Error::new(e).context(format!("listing {}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "pobj"))
                .collect();
            files.sort();
            if files.len() < n {
                return Err(Error::InsufficientData(format!(
                    "{n} objects requested, {} holds {}",
                    dir.display(),
                    files.len()
                ))
                .into());
            }
            files[..n]
                .iter()
                .map(|p| load_object(p).with_context(|| format!("loading {}", p.display())))
                .collect()
        }
        None => {
            let digits = synthetic_digits(2 * n, cfg.seeds.data);
            digits
                .chunks(2)
                .map(|pair| Ok(make_phantom(&pair[0], &pair[1], cfg.geometry.object_side)?))
                .collect()
        }
    }
}

pub fn benchmark(
    cfg: &Config,
    model_path: &Path,
    objects_dir: Option<&Path>,
    out_dir: &Path,
) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("benchmark");
    m.input("model", model_path);
    if let Some(d) = objects_dir {
        m.input("objects", d);
    }
    let model = load_model(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let objects = benchmark_objects(cfg, objects_dir)?;
    let base = cfg.experiment();
    let configs: Vec<ExperimentConfig> = cfg
        .benchmark
        .overlaps
        .iter()
        .flat_map(|&o| {
            let base = base.clone();
            cfg.benchmark.amplitudes.iter().map(move |&a| ExperimentConfig {
                overlap_ratio: o,
                probe_amplitude: a,
                ..base.clone()
            })
        })
        .collect();
    let settings = BenchmarkSettings {
        rpie: cfg.rpie_config(),
        chain: cfg.chain_config(),
        init: cfg.init_config(),
    };
    let table = run_benchmark(&configs, &objects, &model, &settings)?;
    create_dir(out_dir)?;
    m.write_output("runs", &out_dir.join("runs.csv"), table.runs_csv().as_bytes())?;
    m.write_output("aggregates", &out_dir.join("aggregates.csv"), table.aggregates_csv().as_bytes())?;
    m.write_output("timing", &out_dir.join("timing.csv"), table.timing_csv().as_bytes())?;
    let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
    m.derived("n_runs", table.rows.len() as i64);
    m.derived("n_failed", failed as i64);
    m.finish(cfg, &out_dir.join("manifest.toml"))
}

pub fn model_init(
    cfg: &Config,
    out: &Path,
    latent_dim: usize,
    base_channels: usize,
    seed: u64,
) -> anyhow::Result<PathBuf> {
    let mut m = Manifest::start("model-init");
    let model = GeneratorModel::dcgan(latent_dim, base_channels, cfg.geometry.object_side, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    m.write_output("model", out, &encode_model(&model))?;
    m.derived("latent_dim", latent_dim as i64);
    m.derived("base_channels", base_channels as i64);
    m.derived("seed", seed as i64);
    m.derived("n_parameters", model.n_parameters() as i64);
    m.finish(cfg, &sidecar_path(out))
}
