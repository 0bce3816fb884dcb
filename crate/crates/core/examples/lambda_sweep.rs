//! Decision error of FY over a λ grid on Example E; λ = 0 is the
//! suboptimality loss.

use fy_invopt::cli::{run_synth, RunConfig};
use fy_invopt::train::Method;

fn main() -> fy_invopt::Result<()> {
    let cfg = RunConfig {
        experiment: "E".into(),
        methods: vec![Method::Fy],
        sample_sizes: vec![100],
        replications: 5,
        lambdas: Some(vec![0.0, 0.001, 0.01, 0.1, 0.5, 1.0]),
        ..RunConfig::default()
    };
    let summary = run_synth(&cfg, None)?;
    for row in &summary.rows {
        println!(
            "lambda {:<6} ({:<6}) decision error {:.4} ± {:.4}",
            row.lambda.unwrap(),
            row.method,
            row.decision_error_mean.unwrap(),
            row.decision_error_se.unwrap()
        );
    }
    Ok(())
}
