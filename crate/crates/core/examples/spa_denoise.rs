//! Nadaraya-Watson denoising with a cross-validated bandwidth, the first stage
//! of the semi-parametric baseline.

use fy_invopt::solvers::solve_exact;
use fy_invopt::synth::{self, build_example, ExampleKind, ExampleSpec};
use fy_invopt::train::{nw_denoise, select_bandwidth, spa_fit, SpaConfig};

fn main() -> fy_invopt::Result<()> {
    let spec = ExampleSpec::with_dim(ExampleKind::C, 3);
    let (fp, theta_star) = build_example(&spec)?;
    let noisy = synth::generate(&spec, 300, synth::noise_setting("noisy-decision", 1.0)?, 8)?;
    let truth = noisy
        .points()
        .iter()
        .map(|p| solve_exact(&fp, &theta_star, &p.u))
        .collect::<fy_invopt::Result<Vec<_>>>()?;

    let cfg = SpaConfig::default();
    let h = select_bandwidth(&noisy, &cfg, 0)?;
    let smoothed = nw_denoise(&noisy, h)?;
    let mse = |ys: &mut dyn Iterator<Item = &[f64]>| -> f64 {
        let mut s = 0.0;
        for (y, t) in ys.zip(&truth) {
            s += y.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        s / truth.len() as f64
    };
    println!("bandwidth {h}");
    println!("noisy    mse to truth {:.4}", mse(&mut noisy.points().iter().map(|p| p.y.as_slice())));
    println!("denoised mse to truth {:.4}", mse(&mut smoothed.iter().map(|y| y.as_slice())));

    let fit = spa_fit(&noisy, &fp, &cfg)?;
    println!("spa theta {:.3?} (truth {:?})", fit.theta.as_slice(), theta_star.as_slice());
    Ok(())
}
