//! Directed graphs with a unit source→sink demand, and a label-correcting
//! shortest-path oracle.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    in_edges: Vec<Vec<usize>>,
}

impl Graph {
    /// Edge `k` is `edges[k] = (tail, head)`. Parallel edges are allowed.
    pub fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        source: usize,
        sink: usize,
    ) -> Result<Self> {
        if source >= num_nodes || sink >= num_nodes {
            return Err(Error::InvalidGraph(format!(
                "source {source} / sink {sink} out of range for {num_nodes} nodes"
            )));
        }
        if source == sink {
            return Err(Error::InvalidGraph("source and sink coincide".into()));
        }
        let mut in_edges = vec![Vec::new(); num_nodes];
        for (k, &(t, h)) in edges.iter().enumerate() {
            if t >= num_nodes || h >= num_nodes {
                return Err(Error::InvalidGraph(format!("edge {k} references a missing node")));
            }
            if t == h {
                return Err(Error::InvalidGraph(format!("edge {k} is a self-loop")));
            }
            in_edges[h].push(k);
        }
        let g = Self {
            num_nodes,
            edges,
            source,
            sink,
            in_edges,
        };
        if !g.sink_reachable() {
            return Err(Error::Unreachable);
        }
        Ok(g)
    }

    fn sink_reachable(&self) -> bool {
        let mut out = vec![Vec::new(); self.num_nodes];
        for &(t, h) in &self.edges {
            out[t].push(h);
        }
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen[self.sink]
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Dense node-edge incidence matrix, `+1` at the tail and `−1` at the head.
    pub fn incidence(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.edges.len()]; self.num_nodes];
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            a[t][k] = 1.0;
            a[h][k] = -1.0;
        }
        a
    }

    /// Supply vector `b`: `+1` at the source, `−1` at the sink.
    pub fn supply(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.num_nodes];
        b[self.source] = 1.0;
        b[self.sink] = -1.0;
        b
    }

    /// `‖Ax − b‖_∞`
    pub fn flow_residual(&self, x: &[f64]) -> f64 {
        let mut r = self.supply();
        r.iter_mut().for_each(|v| *v = -*v);
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            r[t] += x[k];
            r[h] -= x[k];
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn tight_tol(v: f64) -> f64 {
    1e-12 * (1.0 + v.abs())
}

/// Unit flow along a minimum-cost source→sink path.
///
/// Bellman-Ford in edge-index order, so negative edge costs are fine; a cycle
/// of negative total cost reachable from the source is reported. Among
/// equal-cost paths the one whose backtrack picks the smallest tight
/// predecessor edge at every node is returned.
pub fn shortest_path(g: &Graph, costs: &[f64]) -> Result<Vec<f64>> {
    if costs.len() != g.num_edges() {
        return Err(Error::dims("edge costs", g.num_edges(), costs.len()));
    }
    let n = g.num_nodes;
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[g.source] = 0.0;
    for round in 0..n {
        let mut changed = false;
        for (k, &(t, h)) in g.edges.iter().enumerate() {
            let dt = dist[t];
            if dt.is_finite() {
                let nd = dt + costs[k];
                if nd < dist[h] - tight_tol(nd) {
                    dist[h] = nd;
                    pred[h] = k;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round + 1 == n {
            return Err(Error::NegativeCycle);
        }
    }
    if !dist[g.sink].is_finite() {
        return Err(Error::Unreachable);
    }

    let mut x = vec![0.0; g.num_edges()];
    let mut visited = vec![false; n];
    let mut v = g.sink;
    let mut ok = true;
    while v != g.source {
        if visited[v] {
            ok = false;
            break;
        }
        visited[v] = true;
        let k = g.in_edges[v]
            .iter()
            .copied()
            .find(|&k| {
                let t = g.edges[k].0;
                dist[t].is_finite() && (dist[t] + costs[k] - dist[v]).abs() <= tight_tol(dist[v])
            })
            .unwrap_or(pred[v]);
        x[k] = 1.0;
        v = g.edges[k].0;
    }
    if !ok {
        // Zero-cost cycles among tight edges; the Bellman-Ford tree is acyclic.
        x.iter_mut().for_each(|e| *e = 0.0);
        let mut v = g.sink;
        while v != g.source {
            let k = pred[v];
            x[k] = 1.0;
            v = g.edges[k].0;
        }
    }
    Ok(x)
}

/// Enumerate every simple source→sink path as an edge-indicator vector.
/// Exponential; meant for small test graphs.
pub fn enumerate_paths(g: &Graph) -> Vec<Vec<f64>> {
    let mut out_edges = vec![Vec::new(); g.num_nodes];
    for (k, &(t, _)) in g.edges.iter().enumerate() {
        out_edges[t].push(k);
    }
    let mut paths = Vec::new();
    let mut on_path = vec![false; g.num_nodes];
    let mut stack = Vec::new();
    fn dfs(
        g: &Graph,
        v: usize,
        out_edges: &[Vec<usize>],
        on_path: &mut [bool],
        stack: &mut Vec<usize>,
        paths: &mut Vec<Vec<f64>>,
    ) {
        if v == g.sink {
            let mut x = vec![0.0; g.num_edges()];
            stack.iter().for_each(|&k| x[k] = 1.0);
            paths.push(x);
            return;
        }
        on_path[v] = true;
        for &k in &out_edges[v] {
            let h = g.edges[k].1;
            if !on_path[h] {
                stack.push(k);
                dfs(g, h, out_edges, on_path, stack, paths);
                stack.pop();
            }
        }
        on_path[v] = false;
    }
    dfs(g, g.source, &out_edges, &mut on_path, &mut stack, &mut paths);
    paths
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        // s=0, a=1, t=2
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)], 0, 2).unwrap()
    }

    #[test]
    fn triangle_prefers_two_hops() {
        assert_eq!(shortest_path(&triangle(), &[1.0, 1.0, 3.0]).unwrap(), vec![1.0, 1.0, 0.0]);
        assert_eq!(shortest_path(&triangle(), &[1.0, 3.0, 3.0]).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn single_negative_edge() {
        let g = Graph::new(2, vec![(0, 1)], 0, 1).unwrap();
        assert_eq!(shortest_path(&g, &[-5.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn negative_cycle_detected() {
        // 0 -> 1 -> 2 -> 1 cycle with total cost -1, then 2 -> 3.
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 1), (2, 3)], 0, 3).unwrap();
        assert!(matches!(
            shortest_path(&g, &[1.0, 1.0, -2.0, 1.0]),
            Err(Error::NegativeCycle)
        ));
    }

    #[test]
    fn ties_pick_lowest_predecessor_edge() {
        // Two parallel edges of equal cost: edge 0 wins.
        let g = Graph::new(2, vec![(0, 1), (0, 1)], 0, 1).unwrap();
        assert_eq!(shortest_path(&g, &[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        // Zero costs on a cycle do not loop.
        let g = Graph::new(3, vec![(0, 1), (1, 0), (1, 2)], 0, 2).unwrap();
        assert_eq!(shortest_path(&g, &[0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_graphs() {
        assert!(Graph::new(2, vec![(0, 0)], 0, 1).is_err());
        assert!(Graph::new(2, vec![(0, 1)], 0, 0).is_err());
        assert!(matches!(Graph::new(3, vec![(0, 1)], 0, 2), Err(Error::Unreachable)));
    }

    #[test]
    fn incidence_columns() {
        let g = triangle();
        let a = g.incidence();
        for k in 0..g.num_edges() {
            let col: Vec<f64> = a.iter().map(|r| r[k]).collect();
            assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|v| **v == -1.0).count(), 1);
        }
        assert_eq!(g.supply().iter().sum::<f64>(), 0.0);
        assert_eq!(g.flow_residual(&[1.0, 1.0, 0.0]), 0.0);
        assert_eq!(g.flow_residual(&[1.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn path_enumeration() {
        assert_eq!(enumerate_paths(&triangle()).len(), 2);
    }
}
