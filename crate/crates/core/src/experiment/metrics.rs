use num_complex::Complex64;

use crate::error::{geometry, Error, Result};
use crate::field::{ComplexField, RealImage};
use crate::inference::PosteriorEnsemble;

fn check_shapes(truth: &ComplexField, recon: &ComplexField) -> Result<()> {
    if truth.shape() != recon.shape() {
        return Err(geometry(format!(
            "reference is {:?}, reconstruction is {:?}",
            truth.shape(),
            recon.shape()
        )));
    }
    Ok(())
}

/// `e^{iθ*}·recon` with `θ* = arg⟨recon, truth⟩`, the rotation closest to `truth`.
pub fn align_global_phase(truth: &ComplexField, recon: &ComplexField) -> Result<ComplexField> {
    check_shapes(truth, recon)?;
    let overlap = recon.inner(truth);
    let theta = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    Ok(recon.scale(Complex64::from_polar(1.0, theta)))
}

/// `min_θ ‖truth − e^{iθ}recon‖ / ‖truth‖`.
pub fn l2_error(truth: &ComplexField, recon: &ComplexField) -> Result<f64> {
    check_shapes(truth, recon)?;
    let reference = truth.norm();
    if !(reference > 0.0) {
        return Err(Error::DegenerateReference("reference object has zero norm".into()));
    }
    let aligned = align_global_phase(truth, recon)?;
    let diff: f64 = truth
        .as_slice()
        .iter()
        .zip(aligned.as_slice())
        .map(|(t, a)| (t - a).norm_sqr())
        .sum();
    Ok(diff.sqrt() / reference)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("correlation inputs of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least two points".into()));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::UndefinedCorrelation("an input has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One-based ranks, ties sharing the mean of the positions they span.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in correlation input".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Quality and calibration of one reconstruction. Correlations are `None`
/// when undefined (a constant map) or not applicable (no ensemble).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricsReport {
    pub l2_error: f64,
    pub pearson_mag: Option<f64>,
    pub spearman_mag: Option<f64>,
    pub pearson_phase: Option<f64>,
    pub spearman_phase: Option<f64>,
    pub runtime: f64,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "l2_error,pearson_mag,spearman_mag,pearson_phase,spearman_phase"
    }

    /// Metric columns only; runtime is kept out so the row is reproducible.
    pub fn csv_fields(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_else(|| "nan".into());
        format!(
            "{:.17e},{},{},{},{}",
            self.l2_error,
            opt(self.pearson_mag),
            opt(self.spearman_mag),
            opt(self.pearson_phase),
            opt(self.spearman_phase)
        )
    }
}

/// Magnitude error `||mean| − |truth||` and phase error
/// `|arg(aligned mean · conj(truth))|`, the wrapped phase difference.
pub fn error_maps(truth: &ComplexField, mean: &ComplexField) -> Result<(RealImage, RealImage)> {
    let aligned = align_global_phase(truth, mean)?;
    let (h, w) = truth.shape();
    let mag = truth
        .as_slice()
        .iter()
        .zip(mean.as_slice())
        .map(|(t, m)| (m.norm() - t.norm()).abs())
        .collect();
    let phase = truth
        .as_slice()
        .iter()
        .zip(aligned.as_slice())
        .map(|(t, a)| (a * t.conj()).arg().abs())
        .collect();
    Ok((RealImage::from_vec(h, w, mag)?, RealImage::from_vec(h, w, phase)?))
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn uncertainty_error_report(truth: &ComplexField, ensemble: &PosteriorEnsemble) -> Result<MetricsReport> {
    let mean = ensemble.mean_object();
    let l2 = l2_error(truth, mean)?;
    let (mag_err, phase_err) = error_maps(truth, mean)?;
    let (sm, sp) = (ensemble.std_magnitude().as_slice(), ensemble.std_phase().as_slice());
    Ok(MetricsReport {
        l2_error: l2,
        pearson_mag: defined(pearson(sm, mag_err.as_slice()))?,
        spearman_mag: defined(spearman(sm, mag_err.as_slice()))?,
        pearson_phase: defined(pearson(sp, phase_err.as_slice()))?,
        spearman_phase: defined(spearman(sp, phase_err.as_slice()))?,
        runtime: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn random_field(seed: u64) -> ComplexField {
        let mut rng = seeded_rng(seed);
        ComplexField::from_fn(6, 6, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn l2_invariances() {
        let u = random_field(1);
        assert_eq!(l2_error(&u, &u).unwrap(), 0.0);
        let rotated = u.scale(Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        assert!(l2_error(&u, &rotated).unwrap() < 1e-10);
        for alpha in [0.25, 1.0, 3.0] {
            let e = l2_error(&u, &u.scale(Complex64::new(alpha, 0.0))).unwrap();
            assert!((e - (1.0f64 - alpha).abs()).abs() < 1e-12);
        }
        assert!(matches!(
            l2_error(&ComplexField::zeros(6, 6), &u),
            Err(Error::DegenerateReference(_))
        ));
    }

    #[test]
    fn l2_matches_grid_search() {
        let (t, r) = (random_field(2), random_field(3));
        let best = (0..3600)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::TAU / 3600.0;
                let rot = r.scale(Complex64::from_polar(1.0, theta));
                let d: f64 = t.as_slice().iter().zip(rot.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
                d.sqrt() / t.norm()
            })
            .fold(f64::INFINITY, f64::min);
        let closed = l2_error(&t, &r).unwrap();
        assert!(closed <= best + 1e-12);
        assert!(best - closed < 1e-6);
    }

    #[test]
    fn tied_rank_fixture() {
        let x = [1.0, 2.0, 2.0, 4.0];
        let y = [3.0, 1.0, 1.0, 2.0];
        assert_eq!(average_ranks(&x), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&y), vec![4.0, 1.5, 1.5, 3.0]);
        assert_eq!(spearman(&x, &y).unwrap(), -1.0 / 3.0);
        assert_eq!(pearson(&x, &y).unwrap(), -0.75 / 13.0625f64.sqrt());
    }

    #[test]
    fn monotone_relations() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.3 - 2.0).collect();
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let expo: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert!((pearson(&x, &affine).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(spearman(&x, &affine).unwrap(), 1.0);
        assert_eq!(spearman(&x, &expo).unwrap(), 1.0);
        assert!(pearson(&x, &expo).unwrap() < 0.99);
        assert!(matches!(pearson(&x, &[1.0; 20]), Err(Error::UndefinedCorrelation(_))));
        assert!(spearman(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn identical_ensemble_has_undefined_correlations() {
        let t = random_field(4);
        let e = PosteriorEnsemble::from_samples(vec![t.clone(), t.clone()]).unwrap();
        let r = uncertainty_error_report(&t, &e).unwrap();
        assert_eq!(r.l2_error, 0.0);
        assert_eq!(r.pearson_mag, None);
        assert_eq!(r.spearman_phase, None);
        assert!(r.csv_fields().ends_with("nan,nan,nan,nan"));
    }

    #[test]
    fn two_sample_ensemble_matches_direct_formulas() {
        let t = ComplexField::from_fn(3, 3, |r, c| Complex64::from_polar(0.5 + 0.05 * (r * 3 + c) as f64, 0.3));
        let spread = |k: usize| 0.01 * (k as f64 + 1.0);
        let a = ComplexField::from_fn(3, 3, |r, c| t.get(r, c) * (1.0 + spread(r * 3 + c)));
        let b = ComplexField::from_fn(3, 3, |r, c| t.get(r, c) * (1.0 + 3.0 * spread(r * 3 + c)));
        let e = PosteriorEnsemble::from_samples(vec![a, b]).unwrap();
        // mean magnitude is |t|(1 + 2s) and its std is |t|·s
        let (mag_err, _) = error_maps(&t, e.mean_object()).unwrap();
        for k in 0..9 {
            let m = t.as_slice()[k].norm();
            assert!((mag_err.as_slice()[k] - 2.0 * m * spread(k)).abs() < 1e-12);
            assert!((e.std_magnitude().as_slice()[k] - m * spread(k)).abs() < 1e-12);
        }
        let r = uncertainty_error_report(&t, &e).unwrap();
        assert!((r.pearson_mag.unwrap() - 1.0).abs() < 1e-9);
        assert!((r.spearman_mag.unwrap() - 1.0).abs() < 1e-12);
    }
}
