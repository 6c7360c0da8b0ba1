//! A small circuit-noise sweep from a config text, with its scaling fit.

use topoloss::analysis::{crossing, fit_scaling, DataPoint, ScalingDataset};
use topoloss::commands::cmd_run;
use topoloss::config::SweepConfig;

const CONFIG: &str = "
p_loss = 0
p_comp = 0.004, 0.005, 0.006, 0.007, 0.008
L = 4, 6, 8
trials = 400
seed = 1
";

fn main() {
    let cfg = SweepConfig::parse(CONFIG).unwrap();
    let rows = cmd_run(&cfg, None).unwrap();
    for r in &rows {
        println!("L={:<2} p={:.3} p_fail={:.4} ± {:.4}", r.size, r.p_comp, r.p_fail, r.stderr);
    }
    let d = ScalingDataset::new(
        0.0,
        rows.iter()
            .map(|r| DataPoint { p_comp: r.p_comp, size: r.size, p_fail: r.p_fail, stderr: r.stderr, trials: r.trials })
            .collect(),
    );
    println!("L=6/8 crossing: {:?}", crossing(&d, 6, 8));
    match fit_scaling(&d) {
        Ok(f) => println!("p_t = {:.5} ± {:.5}, nu = {:.3}, chi2/dof = {:.2}", f.p_t, f.sigma_p_t(), f.nu, f.reduced_chi2()),
        Err(e) => println!("fit failed: {e}"),
    }
}
