//! The decision-error calibration inequality and the Cauchy-Schwarz regret
//! bound, evaluated on perturbed parameters.

use fy_invopt::cli::calibration_sweep;
use fy_invopt::metrics::regret_bound_check;
use fy_invopt::synth::{build_example, ExampleKind, ExampleSpec};
use fy_invopt::Parameter;

fn main() -> fy_invopt::Result<()> {
    let spec = ExampleSpec::new(ExampleKind::C);
    println!("{:>9} {:>9} {:>9} {:>9}", "lhs", "reg term", "excess", "rhs");
    for r in calibration_sweep(&spec, 0.1, 8, 5)? {
        println!("{:>9.4} {:>9.4} {:>9.5} {:>9.4}", r.lhs, r.reg_error_term, r.excess_risk_term, r.rhs);
    }

    let (fp, theta_star) = build_example(&spec)?;
    let contexts = spec.contexts.sample_many(500, &mut fy_invopt::rng::from_seed(6));
    for shift in [0.1, 0.5, 1.0] {
        let theta = Parameter::vector(theta_star.as_slice().iter().map(|v| v - shift).collect());
        let b = regret_bound_check(&fp, &theta, &theta_star, &contexts)?;
        println!("shift {shift}: regret {:.4} <= bound {:.4}", b.regret, b.bound);
    }
    Ok(())
}
