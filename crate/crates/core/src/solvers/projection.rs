//! Euclidean projections onto the closed-form regions.

/// Componentwise clip onto `[lo, hi]`.
pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(x, (l, h))| x.max(*l).min(*h))
        .collect()
}

/// Radial scaling `min(1, a/‖v‖) v`.
pub fn project_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let n = crate::vecops::norm(v);
    if n <= radius {
        v.to_vec()
    } else {
        crate::vecops::scale(v, radius / n)
    }
}

/// Projection onto `{x ≥ 0, Σx ≤ cap}`.
///
/// If clipping negatives already satisfies the cap we are done; otherwise the
/// cap is active and the answer is `max(v − τ, 0)` with `τ` found from the
/// sorted positive entries.
pub fn project_nonneg_l1cap(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    let mut sorted: Vec<f64> = v.iter().copied().filter(|x| *x > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - cap) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn box_and_ball() {
        assert_eq!(project_box(&[2.0, -3.0], &[-1.0, -1.0], &[1.0, 1.0]), vec![1.0, -1.0]);
        let b = project_ball(&[3.0, 4.0], 1.0);
        assert_abs_diff_eq!(b[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.8, epsilon = 1e-15);
        assert_eq!(project_ball(&[0.1, 0.0], 1.0), vec![0.1, 0.0]);
    }

    #[test]
    fn l1cap_examples() {
        let x = project_nonneg_l1cap(&[2.0, 1.0, -1.0], 2.0);
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-15);
        assert_eq!(x[2], 0.0);
        assert_eq!(project_nonneg_l1cap(&[0.1, 0.1], 2.0), vec![0.1, 0.1]);
        assert_eq!(project_nonneg_l1cap(&[-1.0, -2.0], 5.0), vec![0.0, 0.0]);
    }

    #[test]
    fn l1cap_ties_and_single_winner() {
        let x = project_nonneg_l1cap(&[5.0, 5.0], 2.0);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
        let x = project_nonneg_l1cap(&[10.0, 0.5, 0.2], 3.0);
        assert_eq!(x, vec![3.0, 0.0, 0.0]);
    }
}
