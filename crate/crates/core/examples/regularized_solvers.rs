//! Exact vs regularized decisions on every region, and the ball exactness
//! threshold `λ ≤ ‖h‖/a`.

use fy_invopt::solvers::{solve_exact, solve_regularized};
use fy_invopt::synth::{build_example, ExampleKind, ExampleSpec};
use fy_invopt::Parameter;

fn main() -> fy_invopt::Result<()> {
    for kind in ExampleKind::ALL {
        let spec = ExampleSpec::with_dim(kind, 3);
        let (fp, theta) = build_example(&spec)?;
        let u = vec![0.3, -0.8, 0.1];
        let u: Vec<f64> = match kind {
            ExampleKind::D | ExampleKind::E => u.iter().map(|v| v + 1.0).collect(),
            _ => u,
        };
        println!("example {kind} ({})", fp.region.name());
        println!("  x*       = {:.4?}", solve_exact(&fp, &theta, &u)?);
        for lambda in [0.01, 0.1, 1.0] {
            println!("  x_{lambda:<5}  = {:.4?}", solve_regularized(&fp, &theta, &u, lambda)?);
        }
    }

    let spec = ExampleSpec::with_dim(ExampleKind::E, 2);
    let (fp, _) = build_example(&spec)?;
    let theta = Parameter::vector(vec![0.0, 0.0]);
    let u = [0.6, 0.8]; // ‖h‖ = 1, a = 3: exact for λ ≤ 1/3
    for lambda in [0.2, 1.0 / 3.0, 0.5, 2.0] {
        let x = solve_exact(&fp, &theta, &u)?;
        let xl = solve_regularized(&fp, &theta, &u, lambda)?;
        let gap = x.iter().zip(&xl).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        println!("ball, lambda {lambda:.3}: |x_lambda - x*| = {gap:.4}");
    }
    Ok(())
}
