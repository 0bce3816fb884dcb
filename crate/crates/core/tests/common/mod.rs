//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use fy_invopt::solvers::{enumerate_paths, Graph};
use rand::Rng;

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Feasible sets the PGD oracle knows how to project onto, written without
/// touching the library's projections.
#[derive(Debug, Clone)]
pub enum OracleSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { radius: f64 },
    NonNegL1Cap { cap: f64 },
}

impl OracleSet {
    pub fn project(&self, x: &mut [f64]) {
        match self {
            OracleSet::Box { lo, hi } => {
                for k in 0..x.len() {
                    x[k] = x[k].max(lo[k]).min(hi[k]);
                }
            }
            OracleSet::Ball { radius } => {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > *radius {
                    x.iter_mut().for_each(|v| *v *= radius / n);
                }
            }
            OracleSet::NonNegL1Cap { cap } => {
                let clipped: f64 = x.iter().map(|v| v.max(0.0)).sum();
                if clipped <= *cap {
                    x.iter_mut().for_each(|v| *v = v.max(0.0));
                    return;
                }
                // Bisection on the soft threshold.
                let (mut lo, mut hi) = (0.0, x.iter().cloned().fold(0.0, f64::max));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let s: f64 = x.iter().map(|v| (v - mid).max(0.0)).sum();
                    if s > *cap {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                x.iter_mut().for_each(|v| *v = (*v - tau).max(0.0));
            }
        }
    }

    pub fn random_point(&self, d: usize, r: &mut impl Rng) -> Vec<f64> {
        let mut x: Vec<f64> = (0..d).map(|_| r.random_range(-5.0..5.0)).collect();
        self.project(&mut x);
        x
    }
}

/// `argmax hᵀx − (coef/2)‖x‖²` over `set` by projected gradient ascent:
/// step 1e-3, 1e5 iterations, 10 random restarts; returns the best iterate.
pub fn pgd_qp(set: &OracleSet, h: &[f64], coef: f64, r: &mut impl Rng) -> Vec<f64> {
    let d = h.len();
    let obj = |x: &[f64]| -> f64 {
        x.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() - 0.5 * coef * x.iter().map(|v| v * v).sum::<f64>()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..10 {
        let mut x = set.random_point(d, r);
        for _ in 0..100_000 {
            for k in 0..d {
                x[k] += 1e-3 * (h[k] - coef * x[k]);
            }
            set.project(&mut x);
        }
        let v = obj(&x);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, x));
        }
    }
    best.unwrap().1
}

/// Euclidean projection onto the probability simplex by sorting.
fn simplex_project(w: &mut [f64]) {
    let mut s = w.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    w.iter_mut().for_each(|v| *v = (*v - tau).max(0.0));
}

/// Projection of `target` onto the convex hull of all source-sink path
/// indicators, by accelerated projected gradient over path weights.
pub fn path_polytope_projection(g: &Graph, target: &[f64]) -> Vec<f64> {
    let paths = enumerate_paths(g);
    let p = paths.len();
    let d = target.len();
    let combine = |w: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; d];
        for (wi, path) in w.iter().zip(&paths) {
            for k in 0..d {
                x[k] += wi * path[k];
            }
        }
        x
    };
    // Lipschitz constant of the weight-space gradient: ‖P‖² ≤ Σ‖path‖².
    let lip: f64 = paths.iter().map(|q| q.iter().map(|v| v * v).sum::<f64>()).sum();
    let step = 1.0 / lip;
    let mut w = vec![1.0 / p as f64; p];
    let mut y = w.clone();
    let mut t = 1.0_f64;
    let obj = |w: &[f64]| -> f64 {
        let x = combine(w);
        x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    let mut prev = obj(&w);
    for _ in 0..200_000 {
        let r: Vec<f64> = combine(&y).iter().zip(target).map(|(a, b)| a - b).collect();
        let mut next: Vec<f64> = y
            .iter()
            .zip(&paths)
            .map(|(yi, path)| yi - step * path.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        simplex_project(&mut next);
        let val = obj(&next);
        if val > prev {
            // Adaptive restart.
            t = 1.0;
            y = w.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = next
            .iter()
            .zip(&w)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        w = next;
        t = t_next;
        prev = val;
    }
    combine(&w)
}

/// Random DAG on `nodes ≤ 8` nodes with edges `i → j`, `i < j`; the chain
/// `0 → 1 → … → nodes−1` is always present so the sink is reachable.
pub fn random_dag(nodes: usize, r: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..nodes {
        for j in i + 1..nodes {
            if j == i + 1 || r.random_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(nodes, edges, 0, nodes - 1).unwrap()
}
