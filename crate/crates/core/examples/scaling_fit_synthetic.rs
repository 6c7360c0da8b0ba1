//! Recovering known scaling parameters from synthetic data, then a threshold contour.

use topoloss::analysis::{add_gaussian_noise, fit_contour, fit_scaling, synthetic_dataset, ContourPoint, ScalingModel};
use topoloss::rng::trial_rng;

fn main() {
    let truth = ScalingModel::from([0.006, 1.0, 0.1, 2.0, 5.0]);
    let ps: Vec<f64> = (0..9).map(|i| 0.004 + 0.0005 * i as f64).collect();
    let clean = synthetic_dataset(&truth, 0.0, &[6, 8, 10, 12], &ps, 0.01);
    let f = fit_scaling(&clean).unwrap();
    println!("exact data: {:?} after {} iterations", f.params(), f.iterations);

    let noisy = add_gaussian_noise(&clean, &mut trial_rng(1, 0));
    let f = fit_scaling(&noisy).unwrap();
    println!("noisy data: p_t = {:.5} ± {:.5}, chi2/dof = {:.2}", f.p_t, f.sigma_p_t(), f.reduced_chi2());

    let points: Vec<ContourPoint> = [(0.0, 0.0063), (0.05, 0.0052), (0.10, 0.0038), (0.15, 0.0022)]
        .iter()
        .map(|&(q, p)| ContourPoint { p_loss: q, p_t: p, stderr: 1e-4 })
        .collect();
    let c = fit_contour(&points, (0.0, 0.15)).unwrap();
    println!("contour {:?}, p_t = 0 at p_loss = {:.3} ± {:.3}", c.coefficients, c.intercept, c.intercept_sigma);
}
