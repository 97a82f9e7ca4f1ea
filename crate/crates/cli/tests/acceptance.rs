//! Acceptance gate. Every criterion prints one `[PASS]`/`[FAIL]` line with
//! the measured quantity; run with `--nocapture` to see them.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use ptycho_core::experiment::{
    l2_error, make_disk_probe, make_phantom, make_scan_plan, pearson, scan_step, spearman, synthetic_digits,
    ExperimentConfig,
};
use ptycho_core::generator::{decode_model, encode_model, GeneratorModel, LatentVector};
use ptycho_core::inference::{grad_log_likelihood, log_likelihood, run_latent_chain, ChainConfig, GaussianTarget};
use ptycho_core::io::{
    decode_dataset, decode_object, decode_pmap, decode_probe, encode_dataset, encode_object, encode_pmap,
    encode_probe, MapFile,
};
use ptycho_core::physics::{
    adjoint_exit, dft2, expected_intensities, forward_exit, idft2, poisson_draw, simulate_dataset, Dft2,
    FrameSource, NoiseMode, Probe, ScanPlan,
};
use ptycho_core::rng::{derive_seed, seeded_rng};
use ptycho_core::rpie::{rpie_position_update, run_rpie, RpieConfig};
use ptycho_core::{ComplexField, Error, RealImage};

/// Phase-aligned ℓ2 error fixed by the calibration run recorded alongside
/// `rpie_fixed_point_and_pinned_regression` (measured 0.31505).
const RPIE_PINNED_L2: f64 = 0.3154;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name} failed: {detail}");
}

fn random_field(rng: &mut impl Rng, h: usize, w: usize) -> ComplexField {
    ComplexField::from_fn(h, w, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

#[test]
fn adjoint_correctness() {
    let start = Instant::now();
    let mut rng = seeded_rng(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let anchors = (0..4).map(|_| (rng.random_range(0..=48), rng.random_range(0..=48))).collect();
        let plan = ScanPlan::new(64, 16, anchors).unwrap();
        let probe = Probe::new(random_field(&mut rng, 16, 16), 1.0).unwrap();
        let u = random_field(&mut rng, 64, 64);
        let v = random_field(&mut rng, 16, 16);
        let j = rng.random_range(0..4);
        let lhs = forward_exit(&u, &probe, &plan, j).unwrap().inner(&v);
        let rhs = u.inner(&adjoint_exit(&v, &probe, &plan, j).unwrap());
        worst = worst.max((lhs - rhs).norm() / (u.norm() * v.norm()));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "adjoint correctness",
        worst <= 1e-10 && secs < 1.0,
        format!("max normalized gap {worst:.2e} (≤ 1e-10), {secs:.3} s (< 1 s)"),
    );
}

fn naive_dft(u: &ComplexField) -> ComplexField {
    let n = u.width();
    ComplexField::from_fn(n, n, |k, l| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                let angle = -std::f64::consts::TAU * ((k * r + l * c) as f64) / n as f64;
                acc += u.get(r, c) * Complex64::from_polar(1.0, angle);
            }
        }
        acc / n as f64
    })
}

#[test]
fn dft_unitarity_and_inversion() {
    let mut rng = seeded_rng(102);
    let mut parseval = 0.0f64;
    let mut round_trip = 0.0f64;
    for side in [4, 16, 64] {
        for _ in 0..5 {
            let u = random_field(&mut rng, side, side);
            let spec = dft2(&u).unwrap();
            parseval = parseval.max((spec.norm() - u.norm()).abs() / u.norm());
            let back = idft2(&spec).unwrap();
            for (a, b) in back.as_slice().iter().zip(u.as_slice()) {
                round_trip = round_trip.max((a - b).norm());
            }
        }
    }
    let u = random_field(&mut rng, 4, 4);
    let mut fast = u.clone();
    Dft2::for_side(4).forward_in_place(fast.as_mut_slice());
    let oracle = naive_dft(&u);
    let naive = fast
        .as_slice()
        .iter()
        .zip(oracle.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    verdict(
        "DFT unitarity and inversion",
        parseval <= 1e-12 && round_trip <= 1e-12 && naive <= 1e-12,
        format!("Parseval {parseval:.1e}, round trip {round_trip:.1e}, naive 4x4 {naive:.1e} (each ≤ 1e-12)"),
    );
}

#[test]
fn likelihood_gradient_check() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for instance in 0..10u64 {
        let mut rng = seeded_rng(derive_seed(103, &[instance]));
        let model = GeneratorModel::dcgan(4, 2, 8, instance).unwrap();
        let probe_field = ComplexField::from_fn(4, 4, |_, _| {
            Complex64::new(2.0 + 2.0 * rng.random::<f64>(), rng.random::<f64>() - 0.5)
        });
        let probe = Probe::new(probe_field, 3.0).unwrap();
        let anchors = (0..2).map(|_| (rng.random_range(0..=4), rng.random_range(0..=4))).collect();
        let plan = ScanPlan::new(8, 4, anchors).unwrap();
        let draw = |rng: &mut ptycho_core::rng::EngineRng| {
            LatentVector::new((0..8).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
        };
        let truth = ptycho_core::generator::generate_complex(&model, &draw(&mut rng)).unwrap();
        let data = simulate_dataset(&truth, &probe, &plan, instance, NoiseMode::Poisson).unwrap();
        let z = draw(&mut rng);
        let g = grad_log_likelihood(&z, &data, &probe, &plan, &model, 1e-12).unwrap();
        let h = 1e-5;
        for k in 0..8 {
            let shifted = |d: f64| {
                let mut v = z.as_slice().to_vec();
                v[k] += d;
                log_likelihood(&LatentVector::new(v).unwrap(), &data, &probe, &plan, &model, 1e-12).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-300);
            worst = worst.max(rel);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "likelihood gradient vs central differences",
        worst <= 1e-4 && secs < 10.0,
        format!("max relative error {worst:.2e} over 10 instances (≤ 1e-4), {secs:.2} s (< 10 s)"),
    );
}

/// Sums of `z` and `z²` over every coordinate of every post-burn-in iterate.
fn chain_moments(target: &GaussianTarget, step: f64, n_chains: u64, burn_in: usize, kept: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let d = target.mean.len();
    let mut acc = vec![(0.0, 0.0, 0.0); d];
    for c in 0..n_chains {
        let cfg = ChainConfig {
            step_size: step,
            n_iters: burn_in + kept,
            burn_in,
            seed: derive_seed(seed, &[c]),
            ..Default::default()
        };
        run_latent_chain(target, &vec![0.0; d], &cfg, |_, z| {
            for (a, &v) in acc.iter_mut().zip(z) {
                a.0 += 1.0;
                a.1 += v;
                a.2 += v * v;
            }
            Ok(())
        })
        .unwrap();
    }
    acc
}

#[test]
fn ula_stationary_variance_bias() {
    // 128 independent coordinates per chain give enough effective samples for
    // a 1% test at the correlation time 1/γ = 100 steps.
    let start = Instant::now();
    let gamma = 0.01;
    let acc = chain_moments(&GaussianTarget::standard(128), gamma, 100, 1000, 10_000, 104);
    let (n, s1, s2) = acc.iter().fold((0.0, 0.0, 0.0), |t, a| (t.0 + a.0, t.1 + a.1, t.2 + a.2));
    let mean = s1 / n;
    let var = s2 / n - mean * mean;
    let expected = 1.0 / (1.0 - gamma / 2.0);
    let rel = (var / expected - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "ULA stationary variance",
        rel <= 0.01 && secs < 60.0,
        format!("variance {var:.5} vs 1/(1-γ/2) = {expected:.5}, relative gap {rel:.2e} (≤ 1e-2), {secs:.1} s (< 60 s)"),
    );
}

#[test]
fn ula_gaussian_mean_recovery() {
    let mu = [1.0, -2.0];
    let acc = chain_moments(&GaussianTarget { mean: mu.to_vec() }, 0.01, 100, 1000, 100_000, 105);
    let means: Vec<f64> = acc.iter().map(|a| a.1 / a.0).collect();
    let ok = means.iter().zip(&mu).all(|(m, t)| (m - t).abs() <= 0.02);
    verdict(
        "ULA Gaussian mean recovery",
        ok,
        format!("means ({:.4}, {:.4}) vs (1, -2), tolerance ±0.02", means[0], means[1]),
    );
}

#[test]
fn poisson_sampler_moments() {
    let n = 100_000usize;
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, &lambda) in [0.5, 5.0, 100.0].iter().enumerate() {
        let mut rng = seeded_rng(derive_seed(106, &[k as u64]));
        let draws: Vec<f64> = (0..n).map(|_| poisson_draw(lambda, &mut rng).unwrap() as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se_mean = (lambda / n as f64).sqrt();
        // Var(s²) = (μ₄ − σ⁴)/n with μ₄ = λ(1 + 3λ)
        let se_var = ((lambda + 2.0 * lambda * lambda) / n as f64).sqrt();
        let (zm, zv) = ((mean - lambda).abs() / se_mean, (var - lambda).abs() / se_var);
        ok &= zm <= 3.0 && zv <= 3.0;
        lines.push(format!("λ={lambda}: mean {mean:.4} ({zm:.2} SE), var {var:.4} ({zv:.2} SE)"));
    }
    let mut rng = seeded_rng(107);
    let zeros = (0..n).all(|_| poisson_draw(0.0, &mut rng).unwrap() == 0);
    verdict(
        "Poisson sampler",
        ok && zeros,
        format!("{}; rate 0 all zero: {zeros}", lines.join("; ")),
    );
}

#[test]
fn rpie_fixed_point_and_pinned_regression() {
    let digits = synthetic_digits(2, 2024);
    let object = make_phantom(&digits[0], &digits[1], 64).unwrap();
    let probe = make_disk_probe(16, 8.0, 100.0).unwrap();
    let cfg = ExperimentConfig {
        overlap_ratio: 0.8,
        probe_amplitude: 100.0,
        jitter: 1,
        ..Default::default()
    };
    let plan = make_scan_plan(&cfg, &mut seeded_rng(7)).unwrap();
    let data = expected_intensities(&object, &probe, &plan).unwrap();

    let mut epoch = object.clone();
    for j in 0..plan.len() {
        rpie_position_update(&mut epoch, &probe, &plan, j, &data.frame(j), 0.05).unwrap();
    }
    let drift = epoch
        .as_slice()
        .iter()
        .zip(object.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let rcfg = RpieConfig {
        n_epochs: 300,
        seed: 5,
        ..Default::default()
    };
    let result = run_rpie(&data, &probe, &plan, &rcfg).unwrap();
    let full = l2_error(&object, &result.object).unwrap();
    // pixels the probe never reaches keep their free-space value
    let mut lit = vec![false; 64 * 64];
    for &(r0, c0) in plan.anchors() {
        for r in 0..16 {
            for c in 0..16 {
                if probe.field().get(r, c).norm() > 0.0 {
                    lit[(r0 + r) * 64 + c0 + c] = true;
                }
            }
        }
    }
    let masked = |f: &ComplexField| {
        ComplexField::from_fn(64, 64, |r, c| if lit[r * 64 + c] { f.get(r, c) } else { Complex64::new(0.0, 0.0) })
    };
    let illuminated = l2_error(&masked(&object), &masked(&result.object)).unwrap();
    let dark = lit.iter().filter(|v| !**v).count();
    verdict(
        "rPIE fixed point and pinned regression",
        drift <= 1e-10 && full < RPIE_PINNED_L2 && illuminated <= 1e-8,
        format!(
            "one-epoch drift {drift:.1e} (≤ 1e-10); 300-epoch l2 {full:.5} (< pinned {RPIE_PINNED_L2}); \
             illuminated-region l2 {illuminated:.1e} (≤ 1e-8, {dark} pixels never illuminated)"
        ),
    );
}

#[test]
fn scan_plan_arithmetic() {
    let plan = |o: f64| {
        let cfg = ExperimentConfig {
            overlap_ratio: o,
            jitter: 0,
            ..Default::default()
        };
        (scan_step(o, 16).unwrap(), make_scan_plan(&cfg, &mut seeded_rng(0)).unwrap().len())
    };
    let (a, b) = (plan(0.05), plan(0.5));
    verdict(
        "scan-plan arithmetic",
        a == (15, 16) && b == (8, 49),
        format!("overlap 0.05 → s={}, J={}; overlap 0.5 → s={}, J={}", a.0, a.1, b.0, b.1),
    );
}

#[test]
fn metric_correctness() {
    let mut rng = seeded_rng(108);
    let truth = random_field(&mut rng, 16, 16);
    let recon = random_field(&mut rng, 16, 16);
    let mut invariance = 0.0f64;
    for k in 0..8 {
        let rotated = truth.scale(Complex64::from_polar(1.0, 0.8 * k as f64 - 3.0));
        invariance = invariance.max(l2_error(&truth, &rotated).unwrap());
        let base = l2_error(&truth, &recon).unwrap();
        let turned = l2_error(&truth, &recon.scale(Complex64::from_polar(1.0, 0.37 * k as f64))).unwrap();
        invariance = invariance.max((base - turned).abs());
    }
    let grid = (0..3600)
        .map(|k| {
            let rot = recon.scale(Complex64::from_polar(1.0, k as f64 * std::f64::consts::TAU / 3600.0));
            let d: f64 = truth.as_slice().iter().zip(rot.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
            d.sqrt() / truth.norm()
        })
        .fold(f64::INFINITY, f64::min);
    let closed = l2_error(&truth, &recon).unwrap();
    let grid_gap = grid - closed;
    let x = [1.0, 2.0, 2.0, 4.0];
    let y = [3.0, 1.0, 1.0, 2.0];
    let (s, p) = (spearman(&x, &y).unwrap(), pearson(&x, &y).unwrap());
    // hand ranks: x → (1, 2.5, 2.5, 4), y → (4, 1.5, 1.5, 3)
    let (s_hand, p_hand) = (-1.0 / 3.0, -0.75 / 13.0625f64.sqrt());
    verdict(
        "metric correctness",
        invariance <= 1e-10 && (0.0..=1e-6).contains(&grid_gap) && s == s_hand && p == p_hand,
        format!(
            "phase invariance {invariance:.1e} (≤ 1e-10); grid search − closed form {grid_gap:.1e} (in [0, 1e-6]); \
             spearman {s} vs {s_hand}; pearson {p} vs {p_hand}"
        ),
    );
}

#[test]
fn format_round_trips() {
    let mut rng = seeded_rng(109);
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let plan = ScanPlan::new(12, 4, vec![(0, 0), (8, 3), (5, 8)]).unwrap();
    let probe = Probe::new(random_field(&mut rng, 4, 4), 0.7).unwrap();
    let object = random_field(&mut rng, 12, 12);
    let data = simulate_dataset(&object.scale(Complex64::new(30.0, 0.0)), &probe, &plan, 1, NoiseMode::Poisson).unwrap();
    let ptyd = encode_dataset(&plan, &data).unwrap();
    checks.push(("PTYD round trip", decode_dataset(&ptyd).unwrap() == (plan.clone(), data.clone())));
    checks.push(("PTYD magic", matches!(decode_dataset(&[b"XTYD", &ptyd[4..]].concat()), Err(Error::UnsupportedFormat(_)))));
    checks.push(("PTYD truncation", matches!(decode_dataset(&ptyd[..ptyd.len() - 2]), Err(Error::CorruptFile(_)))));

    let prbe = encode_probe(&probe).unwrap();
    checks.push(("PRBE round trip", decode_probe(&prbe).unwrap() == probe));
    checks.push(("PRBE magic", matches!(decode_probe(&[b"PRBX", &prbe[4..]].concat()), Err(Error::UnsupportedFormat(_)))));
    checks.push(("PRBE truncation", matches!(decode_probe(&prbe[..prbe.len() - 9]), Err(Error::CorruptFile(_)))));

    let model = GeneratorModel::dcgan(4, 4, 16, 3).unwrap();
    let pgen = encode_model(&model);
    let reloaded = decode_model(&pgen).unwrap();
    let z: Vec<f64> = (0..4).map(|k| k as f64 * 0.4 - 0.5).collect();
    checks.push((
        "PGEN round trip",
        encode_model(&reloaded) == pgen && reloaded.generate_real(&z).unwrap() == model.generate_real(&z).unwrap(),
    ));
    checks.push(("PGEN magic", matches!(decode_model(&[b"PGEX", &pgen[4..]].concat()), Err(Error::UnsupportedFormat(_)))));
    checks.push(("PGEN truncation", matches!(decode_model(&pgen[..pgen.len() - 1]), Err(Error::CorruptFile(_)))));

    let map = MapFile {
        field: "std".into(),
        channel: "magnitude".into(),
        image: RealImage::from_fn(5, 7, |r, c| ((r * 7 + c) as f64).sin() * 1e-3),
    };
    let pmap = encode_pmap(&map).unwrap();
    checks.push(("PMAP round trip", decode_pmap(&pmap).unwrap() == map));
    checks.push(("PMAP magic", matches!(decode_pmap(&[b"QMAP", &pmap[4..]].concat()), Err(Error::UnsupportedFormat(_)))));
    checks.push(("PMAP truncation", matches!(decode_pmap(&pmap[..pmap.len() - 8]), Err(Error::CorruptFile(_)))));

    let pobj = encode_object(&object).unwrap();
    checks.push(("POBJ round trip", decode_object(&pobj).unwrap() == object));
    checks.push(("POBJ magic", matches!(decode_object(&[b"PBOJ", &pobj[4..]].concat()), Err(Error::UnsupportedFormat(_)))));
    checks.push(("POBJ truncation", matches!(decode_object(&pobj[..pobj.len() - 16]), Err(Error::CorruptFile(_)))));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        "format round trips",
        failed.is_empty(),
        format!("{} of {} checks passed{}", checks.len() - failed.len(), checks.len(), if failed.is_empty() { String::new() } else { format!(", failed: {failed:?}") }),
    );
}

fn ptycho(args: &[&str], dir: &Path) {
    let out = Command::new(env!("CARGO_BIN_EXE_ptycho"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "ptycho {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every produced file except manifests, which carry wall-clock fields.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with("manifest.toml") {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn end_to_end_determinism() {
    let config = "[geometry]\nobject_side = 32\npatch_side = 16\n[scan]\noverlap = 0.5\n\
                  [chain]\nn_iters = 200\nburn_in = 100\ninit_iterations = 50\nstep_size = 1e-4\n\
                  [seeds]\ndata = 11\nchain = 12\n";
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        std::fs::write(p.join("run.toml"), config).unwrap();
        ptycho(&["model-init", "-c", "run.toml", "-o", "model.pgen", "--latent-dim", "8", "--base-channels", "8", "--seed", "3"], p);
        ptycho(&["simulate", "-c", "run.toml", "-o", "data/sim.ptyd"], p);
        ptycho(&["sample", "-c", "run.toml", "--data", "data/sim.ptyd", "--model", "model.pgen", "-o", "post"], p);
        ptycho(&["metrics", "--truth", "data/sim.pobj", "--ensemble", "post/samples.psmp", "-o", "metrics.csv"], p);
        let files = outputs(p);
        (dir, files)
    };
    let (_a, first) = run();
    let (_b, second) = run();
    let names: Vec<&str> = first.iter().map(|f| f.0.as_str()).collect();
    let identical = first == second;
    let n_bytes: usize = first.iter().map(|f| f.1.len()).sum();
    verdict(
        "end-to-end determinism",
        identical && names.contains(&"metrics.csv") && names.contains(&"post/std_phase.pmap"),
        format!("{} output files ({n_bytes} bytes) byte-identical across two runs: {identical}", first.len()),
    );
}
