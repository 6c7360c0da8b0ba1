//! Finite-size-scaling fits.
//!
//! Near threshold the failure rate of every size collapses onto one curve in the rescaled
//! variable `x = (p − p_t)·L^{1/ν}`; its quadratic Taylor expansion `a + b·x + c·x²` is fitted
//! by weighted Levenberg-Marquardt over `(p_t, ν, a, b, c)`. The thresholds found at several
//! loss rates are then fitted by a quadratic contour and extrapolated to `p_t = 0`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

/// Iteration cap of the scaling fit.
pub const MAX_ITERATIONS: usize = 500;
/// Relative χ² change below which the fit is converged.
pub const CHI2_TOLERANCE: f64 = 1e-14;
/// Initial Levenberg-Marquardt damping; multiplied by 10 on a rejected step, divided by 10 on
/// an accepted one.
pub const INITIAL_DAMPING: f64 = 1e-3;
/// Loss rate above which finite-size effects make the fit untrustworthy.
pub const LOSS_WARNING_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "code", content = "message")]
pub enum FitError {
    #[error("NO_CROSSING: {0}")]
    #[serde(rename = "NO_CROSSING")]
    NoCrossing(String),
    #[error("SINGULAR_FIT: {0}")]
    #[serde(rename = "SINGULAR_FIT")]
    SingularFit(String),
    #[error("ILL_CONDITIONED: {0}")]
    #[serde(rename = "ILL_CONDITIONED")]
    IllConditioned(String),
    #[error("INSUFFICIENT_DATA: {0}")]
    #[serde(rename = "INSUFFICIENT_DATA")]
    InsufficientData(String),
}

impl FitError {
    pub fn code(&self) -> &'static str {
        match self {
            FitError::NoCrossing(_) => "NO_CROSSING",
            FitError::SingularFit(_) => "SINGULAR_FIT",
            FitError::IllConditioned(_) => "ILL_CONDITIONED",
            FitError::InsufficientData(_) => "INSUFFICIENT_DATA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataPoint {
    pub p_comp: f64,
    pub size: usize,
    pub p_fail: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Failure rates across sizes and computational error rates at one loss rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingDataset {
    pub p_loss: f64,
    pub points: Vec<DataPoint>,
}

impl ScalingDataset {
    pub fn new(p_loss: f64, points: Vec<DataPoint>) -> Self {
        ScalingDataset { p_loss, points }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.points.iter().map(|p| p.size).collect();
        s.into_iter().collect()
    }

    pub fn p_comps(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.points.iter().map(|p| p.p_comp).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Points of one size, sorted by `p_comp`.
    pub fn curve(&self, size: usize) -> Vec<DataPoint> {
        let mut v: Vec<DataPoint> = self.points.iter().copied().filter(|p| p.size == size).collect();
        v.sort_by(|a, b| a.p_comp.total_cmp(&b.p_comp));
        v
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let sizes = self.sizes();
        if sizes.len() < 3 {
            return Err(FitError::InsufficientData(format!(
                "need at least 3 sizes, got {}",
                sizes.len()
            )));
        }
        let ps = self.p_comps();
        if ps.len() < 4 {
            return Err(FitError::InsufficientData(format!(
                "need at least 4 p_comp values, got {}",
                ps.len()
            )));
        }
        if let Some(p) = self.points.iter().find(|p| !(p.stderr > 0.0)) {
            return Err(FitError::InsufficientData(format!(
                "non-positive stderr at L={}, p_comp={}",
                p.size, p.p_comp
            )));
        }
        Ok(())
    }
}

/// Crossing of the curves of sizes `small` and `large` by linear interpolation of their
/// difference between consecutive shared `p_comp` values. Only a strict sign change counts.
pub fn crossing(dataset: &ScalingDataset, small: usize, large: usize) -> Result<f64, FitError> {
    let a = dataset.curve(small);
    let b = dataset.curve(large);
    let diffs: Vec<(f64, f64)> = a
        .iter()
        .filter_map(|pa| {
            b.iter()
                .find(|pb| pb.p_comp == pa.p_comp)
                .map(|pb| (pa.p_comp, pb.p_fail - pa.p_fail))
        })
        .collect();
    // Exact ties carry no sign, so they are skipped.
    let signed: Vec<(f64, f64)> = diffs.into_iter().filter(|&(_, d)| d != 0.0).collect();
    for w in signed.windows(2) {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        if (d0 < 0.0) != (d1 < 0.0) {
            return Ok(p0 + (p1 - p0) * d0 / (d0 - d1));
        }
    }
    Err(FitError::NoCrossing(format!(
        "curves for L={small} and L={large} do not cross in the scanned range"
    )))
}

/// Fitted scaling parameters. Uncertainties are square roots of the covariance diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub p_loss: f64,
    pub p_t: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Row-major over `(p_t, ν, a, b, c)`.
    pub covariance: [[f64; 5]; 5],
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub initial_p_t: f64,
    pub warnings: Vec<String>,
}

impl ScalingFit {
    pub fn params(&self) -> [f64; 5] {
        [self.p_t, self.nu, self.a, self.b, self.c]
    }

    pub fn sigmas(&self) -> [f64; 5] {
        let mut s = [0.0; 5];
        for (i, v) in s.iter_mut().enumerate() {
            *v = self.covariance[i][i].max(0.0).sqrt();
        }
        s
    }

    pub fn sigma_p_t(&self) -> f64 {
        self.sigmas()[0]
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }

    pub fn predict(&self, p_comp: f64, size: usize) -> f64 {
        ScalingModel::from(self.params()).value(p_comp, size)
    }
}

/// `a + b·x + c·x²` with `x = (p − p_t)·L^{1/ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingModel {
    pub p_t: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl From<[f64; 5]> for ScalingModel {
    fn from(t: [f64; 5]) -> Self {
        ScalingModel {
            p_t: t[0],
            nu: t[1],
            a: t[2],
            b: t[3],
            c: t[4],
        }
    }
}

impl ScalingModel {
    pub fn x(&self, p_comp: f64, size: usize) -> f64 {
        (p_comp - self.p_t) * (size as f64).powf(1.0 / self.nu)
    }

    pub fn value(&self, p_comp: f64, size: usize) -> f64 {
        let x = self.x(p_comp, size);
        self.a + self.b * x + self.c * x * x
    }

    /// Partial derivatives with respect to `(p_t, ν, a, b, c)`.
    fn gradient(&self, p_comp: f64, size: usize) -> SVector<f64, 5> {
        let ln_l = (size as f64).ln();
        let scale = (size as f64).powf(1.0 / self.nu);
        let x = (p_comp - self.p_t) * scale;
        let slope = self.b + 2.0 * self.c * x;
        SVector::<f64, 5>::new(
            -slope * scale,
            -slope * x * ln_l / (self.nu * self.nu),
            1.0,
            x,
            x * x,
        )
    }
}

fn chi2(points: &[DataPoint], theta: &SVector<f64, 5>) -> f64 {
    let m = ScalingModel::from([theta[0], theta[1], theta[2], theta[3], theta[4]]);
    points
        .iter()
        .map(|p| ((p.p_fail - m.value(p.p_comp, p.size)) / p.stderr).powi(2))
        .sum()
}

/// `JᵀWJ` and `JᵀW r` at `theta`.
fn normal_equations(
    points: &[DataPoint],
    theta: &SVector<f64, 5>,
) -> (SMatrix<f64, 5, 5>, SVector<f64, 5>) {
    let m = ScalingModel::from([theta[0], theta[1], theta[2], theta[3], theta[4]]);
    let mut jtj = SMatrix::<f64, 5, 5>::zeros();
    let mut jtr = SVector::<f64, 5>::zeros();
    for p in points {
        let w = 1.0 / (p.stderr * p.stderr);
        let g = m.gradient(p.p_comp, p.size);
        let r = p.p_fail - m.value(p.p_comp, p.size);
        jtj += g * g.transpose() * w;
        jtr += g * (r * w);
    }
    (jtj, jtr)
}

/// Weighted quadratic regression of `p_fail` on `x` at fixed `(p_t, ν)`.
fn initial_quadratic(points: &[DataPoint], p_t: f64, nu: f64) -> Option<Vector3<f64>> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let x = (p.p_comp - p_t) * (p.size as f64).powf(1.0 / nu);
        let row = Vector3::new(1.0, x, x * x);
        let w = 1.0 / (p.stderr * p.stderr);
        ata += row * row.transpose() * w;
        atb += row * (p.p_fail * w);
    }
    ata.try_inverse().map(|inv| inv * atb)
}

/// Weighted nonlinear least-squares fit of the scaling ansatz.
///
/// `p_t` starts at the crossing of the two largest sizes, `ν` at 1 and `(a, b, c)` at the
/// quadratic regression for those values.
pub fn fit_scaling(dataset: &ScalingDataset) -> Result<ScalingFit, FitError> {
    dataset.validate()?;
    let sizes = dataset.sizes();
    let (small, large) = (sizes[sizes.len() - 2], sizes[sizes.len() - 1]);
    let p0 = crossing(dataset, small, large)?;
    let points = &dataset.points;
    let abc = initial_quadratic(points, p0, 1.0)
        .ok_or_else(|| FitError::SingularFit("initial quadratic regression is degenerate".into()))?;
    let mut theta = SVector::<f64, 5>::new(p0, 1.0, abc[0], abc[1], abc[2]);
    let mut current = chi2(points, &theta);
    let mut lambda = INITIAL_DAMPING;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(points, &theta);
        let mut improved = false;
        let mut converged = false;
        // Raise the damping until a step lowers χ² or the damping becomes absurd.
        while lambda < 1e20 {
            let mut damped = jtj;
            for i in 0..5 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = theta + step;
            if !(candidate[1] > 0.0) || candidate.iter().any(|v| !v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let next = chi2(points, &candidate);
            if next <= current {
                let rel = (current - next) / current.max(f64::MIN_POSITIVE);
                let small_step = step.iter().zip(theta.iter()).all(|(s, t)| s.abs() <= 1e-15 * t.abs().max(1e-300));
                theta = candidate;
                converged = rel < CHI2_TOLERANCE || next == 0.0 || small_step;
                current = next;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            break;
        }
    }

    let (jtj, _) = normal_equations(points, &theta);
    let cov = jtj
        .try_inverse()
        .filter(|c| c.iter().all(|v| v.is_finite()) && (0..5).all(|i| c[(i, i)] >= 0.0))
        .ok_or_else(|| FitError::SingularFit("normal equations are singular at the optimum".into()))?;
    let mut covariance = [[0.0; 5]; 5];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    let mut warnings = Vec::new();
    if dataset.p_loss > LOSS_WARNING_THRESHOLD {
        warnings.push(format!(
            "p_loss = {} exceeds {LOSS_WARNING_THRESHOLD}; finite-size effects may bias the fit",
            dataset.p_loss
        ));
    }
    if !(0.0..0.5).contains(&theta[0]) {
        warnings.push(format!("fitted p_t = {} lies outside [0, 0.5)", theta[0]));
    }
    Ok(ScalingFit {
        p_loss: dataset.p_loss,
        p_t: theta[0],
        nu: theta[1],
        a: theta[2],
        b: theta[3],
        c: theta[4],
        covariance,
        chi2: current,
        dof: points.len().saturating_sub(5),
        iterations,
        initial_p_t: p0,
        warnings,
    })
}

/// Quadratic fit `p_t(q) = c₀ + c₁·q + c₂·q²` of thresholds against loss rate `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourFit {
    pub coefficients: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// Loss rate where the contour reaches `p_t = 0`.
    pub intercept: f64,
    pub intercept_sigma: f64,
    pub loss_range: (f64, f64),
    pub n_points: usize,
}

impl ContourFit {
    pub fn evaluate(&self, p_loss: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + c1 * p_loss + c2 * p_loss * p_loss
    }
}

/// A threshold estimate at one loss rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub p_loss: f64,
    pub p_t: f64,
    pub stderr: f64,
}

/// Weighted quadratic regression over the points with `p_loss` in `range`, and its root
/// nearest that range with delta-method uncertainty.
pub fn fit_contour(points: &[ContourPoint], range: (f64, f64)) -> Result<ContourFit, FitError> {
    let used: Vec<ContourPoint> = points
        .iter()
        .copied()
        .filter(|p| p.p_loss >= range.0 && p.p_loss <= range.1)
        .collect();
    let distinct: BTreeSet<u64> = used.iter().map(|p| p.p_loss.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(FitError::InsufficientData(format!(
            "need at least 3 distinct loss rates in [{}, {}], got {}",
            range.0,
            range.1,
            distinct.len()
        )));
    }
    if let Some(p) = used.iter().find(|p| !(p.stderr > 0.0)) {
        return Err(FitError::InsufficientData(format!(
            "non-positive stderr at p_loss={}",
            p.p_loss
        )));
    }
    let n = used.len();
    let mut a = DMatrix::<f64>::zeros(n, 3);
    let mut y = DVector::<f64>::zeros(n);
    for (i, p) in used.iter().enumerate() {
        let w = 1.0 / p.stderr;
        a[(i, 0)] = w;
        a[(i, 1)] = p.p_loss * w;
        a[(i, 2)] = p.p_loss * p.p_loss * w;
        y[i] = p.p_t * w;
    }
    let ata = a.transpose() * &a;
    let svd = ata.clone().svd(false, false);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > smax * 1e-14) {
        return Err(FitError::IllConditioned("quadratic normal equations are degenerate".into()));
    }
    let cov = ata
        .try_inverse()
        .ok_or_else(|| FitError::IllConditioned("normal matrix is not invertible".into()))?;
    let coef = &cov * (a.transpose() * y);
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);

    let lo = used.iter().map(|p| p.p_loss).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|p| p.p_loss).fold(f64::NEG_INFINITY, f64::max);
    let gap = |q: f64| {
        if q < lo {
            lo - q
        } else if q > hi {
            q - hi
        } else {
            0.0
        }
    };
    let mut roots = Vec::new();
    if c2.abs() <= 1e-12 * (c1.abs() + c0.abs()) {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            // Numerically stable pair of roots.
            let s = -0.5 * (c1 + c1.signum() * disc.sqrt());
            if s != 0.0 {
                roots.push(c0 / s);
            }
            roots.push(s / c2);
        }
    }
    let intercept = roots
        .into_iter()
        .filter(|r| r.is_finite())
        .min_by(|x, y| gap(*x).total_cmp(&gap(*y)).then(x.total_cmp(y)))
        .ok_or_else(|| FitError::IllConditioned("contour has no real root".into()))?;
    let slope = c1 + 2.0 * c2 * intercept;
    if slope == 0.0 {
        return Err(FitError::IllConditioned("contour is tangent to p_t = 0".into()));
    }
    let g = Vector3::new(1.0, intercept, intercept * intercept) / -slope;
    let cov3 = Matrix3::from_fn(|i, j| cov[(i, j)]);
    let var = (g.transpose() * cov3 * g)[(0, 0)];
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    Ok(ContourFit {
        coefficients: [c0, c1, c2],
        covariance,
        intercept,
        intercept_sigma: var.max(0.0).sqrt(),
        loss_range: range,
        n_points: n,
    })
}

/// Noise-free dataset from a known model, with every point given the same `stderr`.
pub fn synthetic_dataset(
    model: &ScalingModel,
    p_loss: f64,
    sizes: &[usize],
    p_comps: &[f64],
    stderr: f64,
) -> ScalingDataset {
    let mut points = Vec::new();
    for &size in sizes {
        for &p_comp in p_comps {
            points.push(DataPoint {
                p_comp,
                size,
                p_fail: model.value(p_comp, size),
                stderr,
                trials: 0,
            });
        }
    }
    ScalingDataset::new(p_loss, points)
}

/// Copy of `dataset` with independent Gaussian noise of each point's `stderr` added.
pub fn add_gaussian_noise<R: Rng + ?Sized>(dataset: &ScalingDataset, rng: &mut R) -> ScalingDataset {
    let points = dataset
        .points
        .iter()
        .map(|p| {
            let noise = Normal::new(0.0, p.stderr).expect("stderr is finite and positive");
            DataPoint {
                p_fail: p.p_fail + noise.sample(rng),
                ..*p
            }
        })
        .collect();
    ScalingDataset::new(dataset.p_loss, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    fn truth() -> ScalingModel {
        ScalingModel::from([0.006, 1.0, 0.1, 2.0, 5.0])
    }

    fn grid() -> ScalingDataset {
        let ps: Vec<f64> = (0..9).map(|i| 0.004 + 0.0005 * i as f64).collect();
        synthetic_dataset(&truth(), 0.0, &[6, 8, 10, 12], &ps, 0.01)
    }

    #[test]
    fn exact_recovery() {
        let f = fit_scaling(&grid()).unwrap();
        let want = [0.006, 1.0, 0.1, 2.0, 5.0];
        for (got, want) in f.params().iter().zip(want) {
            assert!(((got - want) / want).abs() < 5e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn flat_data_has_no_crossing() {
        let mut d = grid();
        for p in &mut d.points {
            p.p_fail = 0.3;
        }
        assert!(matches!(fit_scaling(&d), Err(FitError::NoCrossing(_))));
    }

    #[test]
    fn too_few_sizes() {
        let d = synthetic_dataset(&truth(), 0.0, &[6, 8], &[0.004, 0.005, 0.006, 0.007], 0.01);
        assert!(matches!(fit_scaling(&d), Err(FitError::InsufficientData(_))));
    }

    #[test]
    fn shifted_data_shifts_threshold() {
        let mut d = grid();
        for p in &mut d.points {
            p.p_comp += 0.01;
        }
        let f0 = fit_scaling(&grid()).unwrap();
        let f1 = fit_scaling(&d).unwrap();
        assert!((f1.p_t - f0.p_t - 0.01).abs() < 1e-9);
        assert!((f1.nu - f0.nu).abs() < 1e-6);
    }

    #[test]
    fn noisy_fit_runs() {
        let mut rng = trial_rng(3, 0);
        let d = add_gaussian_noise(&grid(), &mut rng);
        let f = fit_scaling(&d).unwrap();
        assert!((f.p_t - 0.006).abs() < 5.0 * f.sigma_p_t());
    }

    #[test]
    fn contour_exact_quadratic() {
        let pts: Vec<ContourPoint> = [0.0, 0.05, 0.1, 0.15]
            .iter()
            .map(|&q| ContourPoint {
                p_loss: q,
                p_t: 0.0063 - 0.01 * q - 0.06 * q * q,
                stderr: 1e-4,
            })
            .collect();
        let c = fit_contour(&pts, (0.0, 0.15)).unwrap();
        for (got, want) in c.coefficients.iter().zip([0.0063, -0.01, -0.06]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(c.evaluate(c.intercept).abs() < 1e-12);
    }

    #[test]
    fn contour_needs_three_rates() {
        let pts = [
            ContourPoint { p_loss: 0.0, p_t: 0.006, stderr: 1e-4 },
            ContourPoint { p_loss: 0.1, p_t: 0.004, stderr: 1e-4 },
        ];
        assert!(fit_contour(&pts, (0.0, 0.15)).is_err());
    }
}
