//! FY against the suboptimality, KKT-residual and semi-parametric baselines on
//! Example B, where only the signs of θ matter.

use fy_invopt::metrics;
use fy_invopt::synth::{self, build_example, ExampleKind, ExampleSpec};
use fy_invopt::train::{fit, FitConfig, Method};

fn main() -> fy_invopt::Result<()> {
    let spec = ExampleSpec::new(ExampleKind::B);
    let (fp, theta_star) = build_example(&spec)?;
    let data = synth::generate(&spec, 100, synth::noise_setting("noisy-decision", 1.0)?, 3)?;
    let test = spec.contexts.sample_many(1000, &mut fy_invopt::rng::from_seed(4));
    let cfg = FitConfig::default();

    println!("{:<8} {:>9} {:>9} {:>9} {:>8}", "method", "|theta|", "decision", "regret", "time");
    for method in [Method::Fy, Method::Subopt, Method::Kka, Method::Spa] {
        let f = fit(method, &data, &fp, &cfg)?;
        let r = metrics::evaluate(&fp, &f.theta, &theta_star, &test, f.wall_time_seconds)?;
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>7.3}s",
            method.name(),
            f.theta.norm(),
            r.decision_error,
            r.regret,
            r.wall_time_seconds
        );
    }
    Ok(())
}
