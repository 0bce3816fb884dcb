//! Projection onto a path polytope by Frank-Wolfe with a Bellman-Ford oracle.

use fy_invopt::solvers::{enumerate_paths, fw_project_detailed, FwConfig, Graph, StepRule};

fn main() -> fy_invopt::Result<()> {
    //   0 → 1 → 3
    //   0 → 2 → 3
    //   1 → 2
    let g = Graph::new(4, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], 0, 3)?;
    println!("paths:");
    for p in enumerate_paths(&g) {
        println!("  {p:?}");
    }
    let target = [0.9, 0.4, 0.3, 0.2, 0.8];
    for rule in [StepRule::MinNormCorrection, StepRule::ExactLineSearch] {
        let cfg = FwConfig {
            step_rule: rule,
            max_iters: 20_000,
            ..FwConfig::default()
        };
        let sol = fw_project_detailed(&g, &target, &cfg)?;
        println!(
            "{rule:?}: x = {:.4?}, gap {:.1e}, {} oracle calls, flow residual {:.1e}",
            sol.x,
            sol.gap,
            sol.iterations,
            g.flow_residual(&sol.x)
        );
    }
    Ok(())
}
