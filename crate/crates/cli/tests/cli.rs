use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;

use ptycho_core::experiment::{l2_error, make_phantom, GrayImage};
use ptycho_core::generator::{save_model, GeneratorModel};
use ptycho_core::io::{load_dataset, load_object, load_pmap, load_probe, load_samples, save_object};
use ptycho_core::rpie::data_misfit;

const SMALL: &str = "[geometry]\nobject_side = 16\npatch_side = 8\n[probe]\nradius = 4\namplitude = 10\n\
                     [scan]\noverlap = 0.5\n[chain]\nn_iters = 30\nburn_in = 20\ninit_iterations = 10\n\
                     step_size = 1e-4\n[rpie]\nepochs = 10\n";

fn ptycho(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptycho"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ptycho(dir, args);
    assert!(out.status.success(), "ptycho {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    ptycho(dir, args).status.code().expect("exit code")
}

fn manifest(path: &Path) -> toml::Table {
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

fn small_model(dir: &Path, side: usize) {
    save_model(&GeneratorModel::dcgan(4, 4, side, 1).unwrap(), dir.join("m.pgen")).unwrap();
}

#[test]
fn simulate_zero_object_gives_zero_frames() {
    let dir = workspace(&format!("{SMALL}[object]\nkind = \"zero\"\n"));
    ok(dir.path(), &["simulate", "-c", "c.toml", "-o", "d.ptyd"]);
    let (plan, data) = load_dataset(dir.path().join("d.ptyd")).unwrap();
    assert_eq!(plan.len(), 9);
    assert_eq!(data.total_counts(), 0);
}

#[test]
fn simulate_is_reproducible_and_reports_positions() {
    let dir = workspace("[scan]\noverlap = 0.05\n");
    let p = dir.path();
    ok(p, &["simulate", "-c", "c.toml", "-o", "a.ptyd"]);
    ok(p, &["simulate", "-c", "c.toml", "-o", "b.ptyd"]);
    assert_eq!(std::fs::read(p.join("a.ptyd")).unwrap(), std::fs::read(p.join("b.ptyd")).unwrap());
    let m = manifest(&p.join("a.manifest.toml"));
    assert_eq!(m["derived"]["n_positions"].as_integer(), Some(16));
    assert_eq!(m["derived"]["scan_step"].as_integer(), Some(15));
    assert_eq!(m["run"]["command"].as_str(), Some("simulate"));

    // replaying the manifest reproduces the dataset
    ok(p, &["simulate", "-c", "a.manifest.toml", "-o", "c.ptyd"]);
    assert_eq!(std::fs::read(p.join("a.ptyd")).unwrap(), std::fs::read(p.join("c.ptyd")).unwrap());
    ok(p, &["simulate", "-c", "c.toml", "-o", "d.ptyd", "--set", "seeds.data=9"]);
    assert_ne!(std::fs::read(p.join("a.ptyd")).unwrap(), std::fs::read(p.join("d.ptyd")).unwrap());
}

#[test]
fn sample_defaults_land_in_manifest_and_rerun_identically() {
    let dir = workspace("[scan]\noverlap = 0.05\n[chain]\ninit_iterations = 5\n");
    let p = dir.path();
    small_model(p, 64);
    ok(p, &["simulate", "-c", "c.toml", "-o", "d.ptyd"]);
    ok(p, &["sample", "-c", "c.toml", "--data", "d.ptyd", "--model", "m.pgen", "-o", "s1"]);
    ok(p, &["sample", "-c", "c.toml", "--data", "d.ptyd", "--model", "m.pgen", "-o", "s2"]);
    let (m1, m2) = (manifest(&p.join("s1/manifest.toml")), manifest(&p.join("s2/manifest.toml")));
    assert_eq!(m1["chain"]["step_size"].as_float(), Some(1e-5));
    assert_eq!(m1["chain"]["n_iters"].as_integer(), Some(1000));
    assert_eq!(m1["chain"]["burn_in"].as_integer(), Some(500));
    assert_eq!(m1["derived"]["n_samples"].as_integer(), Some(500));
    for map in ["mean_magnitude", "mean_phase", "std_magnitude", "std_phase"] {
        assert_eq!(m1["outputs"][map]["sha256"], m2["outputs"][map]["sha256"]);
    }
    let trace = std::fs::read_to_string(p.join("s1/trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,log_likelihood,grad_norm"));
    assert_eq!(trace.lines().count(), 1001);
}

#[test]
fn single_sample_has_zero_std_maps() {
    let dir = workspace(SMALL);
    let p = dir.path();
    small_model(p, 16);
    ok(p, &["simulate", "-c", "c.toml", "-o", "d.ptyd"]);
    ok(p, &["sample", "-c", "c.toml", "--data", "d.ptyd", "--model", "m.pgen", "-o", "s", "--set", "chain.n_iters=21"]);
    for name in ["std_magnitude", "std_phase"] {
        let map = load_pmap(p.join(format!("s/{name}.pmap"))).unwrap();
        assert!(map.image.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(map.field, "std");
    }
    assert_eq!(load_samples(p.join("s/samples.psmp")).unwrap().len(), 1);
}

#[test]
fn rpie_recovers_fixed_point_and_misfit_is_recomputable() {
    let dir = workspace(&format!("{SMALL}[noise]\nmode = \"off\"\n"));
    let p = dir.path();
    ok(p, &["simulate", "-c", "c.toml", "-o", "d.ptyd", "--set", "probe.amplitude=1000"]);
    // truth start on rounded noiseless counts stays essentially at the truth
    ok(p, &[
        "rpie", "-c", "c.toml", "--data", "d.ptyd", "-o", "r", "--set", "probe.amplitude=1000",
        "--set", "rpie.init_file=\"d.pobj\"",
    ]);
    let misfit = std::fs::read_to_string(p.join("r/misfit.csv")).unwrap();
    let values: Vec<f64> = misfit.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let (plan, data) = load_dataset(p.join("d.ptyd")).unwrap();
    let total = data.total_counts() as f64;
    assert!(values.iter().all(|&v| v < 1e-4 * total), "{values:?} vs total {total}");

    let truth = load_object(p.join("d.pobj")).unwrap();
    let object = load_object(p.join("r/object.pobj")).unwrap();
    let probe = load_probe(p.join("d.prbe")).unwrap();
    assert!(l2_error(&truth, &object).unwrap() < 1e-2);
    let recomputed = data_misfit(&object, &probe, &plan, &data).unwrap();
    assert_eq!(recomputed, *values.last().unwrap());

    ok(p, &["rpie", "-c", "c.toml", "--data", "d.ptyd", "-o", "r2", "--set", "probe.amplitude=1000", "--set", "rpie.init_file=\"d.pobj\""]);
    assert_eq!(std::fs::read(p.join("r/object.pobj")).unwrap(), std::fs::read(p.join("r2/object.pobj")).unwrap());
}

#[test]
fn metrics_match_library_values() {
    let dir = workspace("");
    let p = dir.path();
    let digits = ptycho_core::experiment::synthetic_digits(4, 3);
    let truth = make_phantom(&digits[0], &digits[1], 16).unwrap();
    let other = make_phantom(&digits[2], &digits[3], 16).unwrap();
    save_object(&truth, p.join("t.pobj")).unwrap();
    save_object(&truth.scale(Complex64::from_polar(1.0, 2.0)), p.join("rot.pobj")).unwrap();
    save_object(&other, p.join("o.pobj")).unwrap();
    let value = |out: &Output| -> f64 {
        let text = String::from_utf8(out.stdout.clone()).unwrap();
        text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(value(&ok(p, &["metrics", "--truth", "t.pobj", "--recon", "t.pobj"])), 0.0);
    assert!(value(&ok(p, &["metrics", "--truth", "t.pobj", "--recon", "rot.pobj"])) < 1e-10);
    let direct = l2_error(&truth, &other).unwrap();
    assert_eq!(value(&ok(p, &["metrics", "--truth", "t.pobj", "--recon", "o.pobj"])), direct);

    ok(p, &["metrics", "--truth", "t.pobj", "--recon", "o.pobj", "-o", "m.csv"]);
    assert!(p.join("m.manifest.toml").exists());
    assert_eq!(code(p, &["metrics", "--truth", "t.pobj"]), 7);
    save_object(&ptycho_core::ComplexField::zeros(16, 16), p.join("z.pobj")).unwrap();
    assert_eq!(code(p, &["metrics", "--truth", "z.pobj", "--recon", "o.pobj"]), 7);
    save_object(&ptycho_core::ComplexField::zeros(8, 8), p.join("small.pobj")).unwrap();
    assert_eq!(code(p, &["metrics", "--truth", "t.pobj", "--recon", "small.pobj"]), 5);
}

fn idx_fixture(images: &[[u8; 16]]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [0x0803u32, images.len() as u32, 4, 4] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        b.extend_from_slice(img);
    }
    b
}

#[test]
fn phantoms_from_idx() {
    let dir = workspace("[geometry]\nobject_side = 16\n");
    let p = dir.path();
    let a: [u8; 16] = std::array::from_fn(|k| (k * 16) as u8);
    let b: [u8; 16] = std::array::from_fn(|k| 255 - (k * 9) as u8);
    std::fs::write(p.join("two.idx"), idx_fixture(&[a, b])).unwrap();
    ok(p, &["phantoms", "-c", "c.toml", "--idx", "two.idx", "--count", "1", "--seed", "4", "-o", "ph"]);
    ok(p, &["phantoms", "-c", "c.toml", "--idx", "two.idx", "--count", "1", "--seed", "4", "-o", "ph2"]);
    let got = load_object(p.join("ph/phantom_000.pobj")).unwrap();
    assert_eq!(std::fs::read(p.join("ph/phantom_000.pobj")).unwrap(), std::fs::read(p.join("ph2/phantom_000.pobj")).unwrap());
    let m = manifest(&p.join("ph/manifest.toml"));
    let pair: Vec<usize> = m["derived"]["source_images"][0]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_integer().unwrap() as usize)
        .collect();
    let imgs = [GrayImage::new(4, 4, a.to_vec()).unwrap(), GrayImage::new(4, 4, b.to_vec()).unwrap()];
    assert_eq!(got, make_phantom(&imgs[pair[0]], &imgs[pair[1]], 16).unwrap());
    assert_eq!(code(p, &["phantoms", "--idx", "two.idx", "--count", "2", "-o", "ph3"]), 7);
    std::fs::write(p.join("bad.idx"), b"\0\0\x08\x01rest").unwrap();
    assert_eq!(code(p, &["phantoms", "--idx", "bad.idx", "--count", "1", "-o", "ph4"]), 4);
}

#[test]
fn benchmark_writes_tables() {
    let dir = workspace(&format!(
        "{SMALL}[benchmark]\noverlaps = [0.5]\namplitudes = [10.0]\nn_objects = 1\n"
    ));
    let p = dir.path();
    small_model(p, 16);
    ok(p, &["benchmark", "-c", "c.toml", "--model", "m.pgen", "-o", "b"]);
    let runs = std::fs::read_to_string(p.join("b/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
    assert!(runs.lines().nth(1).unwrap().contains(",ula,9,ok,"));
    let agg = std::fs::read_to_string(p.join("b/aggregates.csv")).unwrap();
    assert!(agg.starts_with("config_index,overlap_ratio"));
    assert!(p.join("b/timing.csv").exists());
}

#[test]
fn exit_codes_are_distinct() {
    let dir = workspace(SMALL);
    let p = dir.path();
    small_model(p, 16);
    ok(p, &["simulate", "-c", "c.toml", "-o", "d.ptyd"]);
    std::fs::write(p.join("broken.toml"), "[scan\n").unwrap();
    assert_eq!(code(p, &["simulate", "-c", "broken.toml", "-o", "x.ptyd"]), 2);
    assert_eq!(code(p, &["simulate", "-o", "x.ptyd", "--set", "nonsense"]), 2);
    assert_eq!(code(p, &["frobnicate"]), 2);
    assert_eq!(code(p, &["simulate", "-c", "missing.toml", "-o", "x.ptyd"]), 3);
    std::fs::write(p.join("junk.ptyd"), b"JUNKJUNK").unwrap();
    assert_eq!(code(p, &["rpie", "-c", "c.toml", "--data", "junk.ptyd", "-o", "r"]), 4);
    assert_eq!(
        code(p, &["rpie", "-c", "c.toml", "--data", "d.ptyd", "-o", "r", "--set", "scan.jitter=3"]),
        5
    );
    // a generator for the wrong object side
    small_model(p, 32);
    assert_eq!(code(p, &["sample", "-c", "c.toml", "--data", "d.ptyd", "--model", "m.pgen", "-o", "s"]), 5);
    small_model(p, 16);
    assert_eq!(
        code(p, &["sample", "-c", "c.toml", "--data", "d.ptyd", "--model", "m.pgen", "-o", "s", "--set", "chain.step_size=1e300"]),
        6
    );
    assert_eq!(code(p, &["simulate", "-c", "c.toml", "-o", "x.ptyd", "--set", "scan.overlap=0.99"]), 7);
    let err = String::from_utf8(ptycho(p, &["rpie", "-c", "c.toml", "--data", "d.ptyd", "-o", "r", "--set", "scan.jitter=3"]).stderr).unwrap();
    assert!(err.contains("data/plan mismatch"), "{err}");
}
