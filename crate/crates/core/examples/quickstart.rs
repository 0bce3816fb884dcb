//! Fit Example C from noisy decisions and report the three error metrics.

use fy_invopt::metrics;
use fy_invopt::synth::{self, build_example, ExampleKind, ExampleSpec};
use fy_invopt::train::{fy_sgd_fit, SgdConfig};

fn main() -> fy_invopt::Result<()> {
    let spec = ExampleSpec::new(ExampleKind::C);
    let (fp, theta_star) = build_example(&spec)?;
    let noise = synth::noise_setting("noisy-decision", 1.0)?;
    let train = synth::generate(&spec, 500, noise, 1)?;
    let test = spec.contexts.sample_many(1000, &mut fy_invopt::rng::from_seed(2));

    let fit = fy_sgd_fit(&train, &fp, &SgdConfig::default())?;
    let report = metrics::evaluate(&fp, &fit.theta, &theta_star, &test, fit.wall_time_seconds)?;

    println!("theta_hat      = {:.3?}", fit.theta.as_slice());
    println!("iterations     = {}", fit.iterations);
    println!("parameter err  = {:.4}", report.parameter_error.unwrap());
    println!("decision err   = {:.4}", report.decision_error);
    println!("regret         = {:.4}", report.regret);
    println!("fit time       = {:.3}s", report.wall_time_seconds);
    Ok(())
}
