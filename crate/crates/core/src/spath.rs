//! Contextual shortest paths: edge costs `Θu`, observations are the
//! clairvoyant shortest paths under realized travel times.
//!
//! File formats (UTF-8, `.` decimals, header row required):
//!
//! - edges: `edge_id,tail,head`; ids dense `0..d`, node names arbitrary strings.
//! - records: `t_0,…,t_{d−1},f_1,…,f_{m−1}`; travel times must be positive.
//!   An intercept `1` is appended to the features, giving `u ∈ R^m`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::model::{CostMap, DataPoint, Dataset, FeasibleRegion, ForwardProblem, Parameter, Sense};
use crate::rng;
use crate::solvers::{shortest_path, Graph};
use crate::train::{self, FitConfig, Method};
use crate::vecops::dist_sq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelRecord {
    /// Features followed by the intercept.
    pub u: Vec<f64>,
    /// Realized edge travel times, all positive.
    pub t: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpDataset {
    pub graph: Arc<Graph>,
    pub node_names: Vec<String>,
    pub records: Vec<TravelRecord>,
    /// Clairvoyant shortest path of each record.
    pub observations: Vec<Vec<f64>>,
    pub truth: Option<Parameter>,
}

impl SpDataset {
    /// Derives the observed paths; every record must fit `graph`.
    pub fn new(
        graph: Arc<Graph>,
        node_names: Vec<String>,
        records: Vec<TravelRecord>,
        truth: Option<Parameter>,
    ) -> Result<Self> {
        let m = records
            .first()
            .ok_or_else(|| Error::InvalidArgument("no travel records".into()))?
            .u
            .len();
        let mut observations = Vec::with_capacity(records.len());
        for r in &records {
            if r.t.len() != graph.num_edges() {
                return Err(Error::dims("travel times", graph.num_edges(), r.t.len()));
            }
            if r.u.len() != m {
                return Err(Error::dims("record context", m, r.u.len()));
            }
            observations.push(shortest_path(&graph, &r.t)?);
        }
        Ok(Self {
            graph,
            node_names,
            records,
            observations,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.records[0].u.len()
    }

    /// `min (Θu)ᵀx` over the path polytope, `Θ ∈ R^{d×m}`.
    pub fn forward_problem(&self) -> Result<ForwardProblem> {
        ForwardProblem::linear(
            CostMap::matrix_product(self.graph.num_edges(), self.context_dim()),
            FeasibleRegion::flow(self.graph.clone()),
            Sense::Min,
        )
    }

    /// `(u, observed path)` pairs for the given records.
    pub fn to_dataset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            idx.iter()
                .map(|&i| DataPoint {
                    u: self.records[i].u.clone(),
                    y: self.observations[i].clone(),
                })
                .collect(),
            None,
        )
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Reads an edge list; `source` and `sink` are node names.
pub fn load_graph(path: &Path, source: &str, sink: &str) -> Result<(Graph, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["edge_id", "tail", "head"] {
        return Err(parse_err(path, 1, format!("expected header edge_id,tail,head, got {}", header.join(","))));
    }
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut node = |name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        names.push(name.to_string());
        index.insert(name.to_string(), names.len() - 1);
        names.len() - 1
    };
    let mut edges: Vec<Option<(usize, usize)>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(parse_err(path, line, "expected 3 fields"));
        }
        let id: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad edge id {:?}", &rec[0])))?;
        if id >= edges.len() {
            edges.resize(id + 1, None);
        }
        if edges[id].is_some() {
            return Err(parse_err(path, line, format!("duplicate edge id {id}")));
        }
        let (t, h) = (node(&rec[1]), node(&rec[2]));
        edges[id] = Some((t, h));
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(k, e)| e.ok_or_else(|| parse_err(path, 0, format!("edge ids are not dense: {k} missing"))))
        .collect::<Result<Vec<_>>>()?;
    if edges.is_empty() {
        return Err(parse_err(path, 1, "no edges"));
    }
    let find = |n: &str| {
        names
            .iter()
            .position(|x| x == n)
            .ok_or_else(|| Error::InvalidGraph(format!("node {n:?} not in edge list")))
    };
    let (s, t) = (find(source)?, find(sink)?);
    let g = Graph::new(names.len(), edges, s, t)?;
    Ok((g, names))
}

/// Reads travel records for `graph` and derives the observed paths.
pub fn load_records(path: &Path, graph: Arc<Graph>, node_names: Vec<String>) -> Result<SpDataset> {
    let d = graph.num_edges();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < d {
        return Err(parse_err(path, 1, format!("expected at least {d} time columns")));
    }
    for (k, h) in header.iter().enumerate() {
        let want = if k < d { format!("t_{k}") } else { format!("f_{}", k - d + 1) };
        if *h != want {
            return Err(parse_err(path, 1, format!("column {k}: expected {want}, got {h}")));
        }
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != header.len() {
            return Err(parse_err(path, line, "wrong field count"));
        }
        if let Some(k) = vals[..d].iter().position(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(parse_err(path, line, format!("t_{k} must be positive, got {}", vals[k])));
        }
        if vals[d..].iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, line, "non-finite feature"));
        }
        let mut u = vals[d..].to_vec();
        u.push(1.0);
        records.push(TravelRecord {
            u,
            t: vals[..d].to_vec(),
        });
    }
    if records.is_empty() {
        return Err(parse_err(path, 1, "no records"));
    }
    SpDataset::new(graph, node_names, records, None)
}

pub fn write_graph_csv(path: &Path, graph: &Graph, node_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["edge_id", "tail", "head"])?;
    for (k, &(t, h)) in graph.edges().iter().enumerate() {
        w.write_record([k.to_string(), node_names[t].clone(), node_names[h].clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv(path: &Path, sp: &SpDataset) -> Result<()> {
    let d = sp.graph.num_edges();
    let m = sp.context_dim();
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (0..d)
        .map(|k| format!("t_{k}"))
        .chain((1..m).map(|j| format!("f_{j}")))
        .collect();
    w.write_record(&header)?;
    for r in &sp.records {
        let row: Vec<String> = r
            .t
            .iter()
            .chain(&r.u[..m - 1])
            .map(|v| format!("{v:?}"))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Total edge count; the excess over the right/down lattice is made of
    /// randomly chosen down-right diagonals.
    pub edges: usize,
    /// Context dimension including the intercept.
    pub context_dim: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 9,
            edges: 93,
            context_dim: 12,
        }
    }
}

/// Acyclic grid from the top-left to the bottom-right corner. Edges are
/// listed in topological order of their tails.
pub fn grid_graph(spec: &GridSpec, rng: &mut rng::Rng) -> Result<(Graph, Vec<String>)> {
    let (r, c) = (spec.rows, spec.cols);
    if r < 2 || c < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 rows and 2 columns".into()));
    }
    let lattice = r * (c - 1) + (r - 1) * c;
    let diag_max = (r - 1) * (c - 1);
    if spec.edges < lattice || spec.edges > lattice + diag_max {
        return Err(Error::InvalidArgument(format!(
            "a {r}x{c} grid supports {lattice}..={} edges, asked for {}",
            lattice + diag_max,
            spec.edges
        )));
    }
    let mut diag: Vec<usize> = (0..diag_max).collect();
    diag.shuffle(rng);
    let mut chosen = vec![false; diag_max];
    for &k in &diag[..spec.edges - lattice] {
        chosen[k] = true;
    }
    let id = |i: usize, j: usize| i * c + j;
    let mut edges = Vec::with_capacity(spec.edges);
    for i in 0..r {
        for j in 0..c {
            if j + 1 < c {
                edges.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < r {
                edges.push((id(i, j), id(i + 1, j)));
            }
            if i + 1 < r && j + 1 < c && chosen[i * (c - 1) + j] {
                edges.push((id(i, j), id(i + 1, j + 1)));
            }
        }
    }
    let names = (0..r * c).map(|v| format!("n{v}")).collect();
    Ok((Graph::new(r * c, edges, 0, r * c - 1)?, names))
}

/// Nonnegative `Θ*` (`d × m`) with a positive intercept column, so `Θ*u > 0`
/// for nonnegative features.
pub fn planted_theta(d: usize, m: usize, rng: &mut rng::Rng) -> Parameter {
    let mut v = Vec::with_capacity(d * m);
    for _ in 0..d {
        for j in 0..m {
            v.push(if j + 1 == m {
                rng.random_range(1.0..2.0)
            } else {
                rng.random_range(0.0..2.0)
            });
        }
    }
    Parameter::matrix(d, m, v).expect("shape matches")
}

/// Synthetic stand-in for real travel data: `t = max(Θ*u·(1 + σξ), 0.01)`
/// with `ξ ~ N(0, 1)` per edge and features `U[0, 1]`.
pub fn synth_graph_instance(spec: &GridSpec, n: usize, sigma: f64, seed: u64) -> Result<SpDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    if spec.context_dim == 0 {
        return Err(Error::InvalidArgument("context_dim must include the intercept".into()));
    }
    let mut rng = rng::derive(seed, 0);
    let (g, names) = grid_graph(spec, &mut rng)?;
    let d = g.num_edges();
    let m = spec.context_dim;
    let theta = planted_theta(d, m, &mut rng);
    let cm = CostMap::matrix_product(d, m);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: Vec<f64> = (0..m - 1).map(|_| rng.random::<f64>()).collect();
        u.push(1.0);
        let mean = cm.cost(&theta, &u)?;
        let t = mean
            .iter()
            .map(|c| {
                let xi: f64 = rng.sample(StandardNormal);
                (c * (1.0 + sigma * xi)).max(0.01)
            })
            .collect();
        records.push(TravelRecord { u, t });
    }
    SpDataset::new(Arc::new(g), names, records, Some(theta))
}

/// Seeded 60/40-style split of record indices.
pub fn split(n: usize, train_frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derive(seed, 1));
    let k = ((n as f64) * train_frac).round() as usize;
    let k = k.clamp(1.min(n), n);
    let test = idx.split_off(k);
    (idx, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpRunConfig {
    pub train_frac: f64,
    pub fit: FitConfig,
}

impl Default for SpRunConfig {
    fn default() -> Self {
        let mut fit = FitConfig::default();
        fit.fy.max_iters = 1000;
        fit.fy.learning_rate = 0.05;
        fit.subopt.max_iters = 1000;
        // The baselines minimize the whole empirical risk.
        fit.subopt.batch_size = Some(usize::MAX);
        fit.spa.inner = fit.subopt.clone();
        Self {
            train_frac: 0.6,
            fit,
        }
    }
}

/// Train on a random split and evaluate against clairvoyant test paths.
pub fn sp_run(sp: &SpDataset, method: Method, cfg: &SpRunConfig, seed: u64) -> Result<MetricsReport> {
    let fp = sp.forward_problem()?;
    let (train_idx, test_idx) = split(sp.len(), cfg.train_frac, seed);
    if test_idx.is_empty() {
        return Err(Error::InvalidArgument("empty test split".into()));
    }
    evaluate_run(sp, &fp, method, cfg, &train_idx, &test_idx, seed)
}

/// Same as [`sp_run`] with explicit index sets (they may overlap).
pub fn evaluate_run(
    sp: &SpDataset,
    fp: &ForwardProblem,
    method: Method,
    cfg: &SpRunConfig,
    train_idx: &[usize],
    test_idx: &[usize],
    seed: u64,
) -> Result<MetricsReport> {
    let start = Instant::now();
    let train_set = sp.to_dataset(train_idx)?;
    let fit = train::fit(method, &train_set, fp, &cfg.fit.clone().with_seed(seed))?;
    let wall = start.elapsed().as_secs_f64();
    let theta = &fit.theta;
    let mut derr = 0.0;
    let mut reg = 0.0;
    for &i in test_idx {
        let r = &sp.records[i];
        let x = crate::solvers::solve_exact(fp, theta, &r.u)?;
        let y = &sp.observations[i];
        derr += dist_sq(&x, y);
        reg += crate::vecops::dot(&r.t, &x) - crate::vecops::dot(&r.t, y);
    }
    let n = test_idx.len() as f64;
    let ratio = metrics::relative_regret_ratio(
        fp,
        theta,
        test_idx
            .iter()
            .map(|&i| (sp.records[i].u.as_slice(), sp.records[i].t.as_slice())),
    )?;
    Ok(MetricsReport {
        parameter_error: None,
        decision_error: derr / n,
        regret: reg / n,
        relative_regret_ratio: Some(ratio),
        n_test: test_idx.len(),
        wall_time_seconds: wall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn triangle_files() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.csv", "edge_id,tail,head\n0,s,a\n1,a,t\n2,s,t\n");
        let (g, names) = load_graph(&e, "s", "t").unwrap();
        assert_eq!(names, vec!["s", "a", "t"]);
        let r = write(dir.path(), "r.csv", "t_0,t_1,t_2,f_1\n1,1,3,0.5\n");
        let sp = load_records(&r, Arc::new(g.clone()), names.clone()).unwrap();
        assert_eq!(sp.observations[0], vec![1.0, 1.0, 0.0]);
        assert_eq!(sp.records[0].u, vec![0.5, 1.0]);

        let bad = write(dir.path(), "b.csv", "t_0,t_1,t_2,f_1\n1,1,3,0.5\n1,0,3,0.5\n");
        match load_records(&bad, Arc::new(g), names) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn graph_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.csv", "edge_id,tail,head\n0,s,a\n2,a,t\n");
        assert!(matches!(load_graph(&e, "s", "t"), Err(Error::Parse { .. })));
        let e = write(dir.path(), "f.csv", "id,from,to\n0,s,t\n");
        assert!(matches!(load_graph(&e, "s", "t"), Err(Error::Parse { line: 1, .. })));
        let e = write(dir.path(), "g.csv", "edge_id,tail,head\n0,s,t\n");
        assert!(load_graph(&e, "s", "x").is_err());
    }

    #[test]
    fn synthetic_grid_shape() {
        let sp = synth_graph_instance(&GridSpec::default(), 50, 0.1, 4).unwrap();
        assert_eq!(sp.graph.num_nodes(), 45);
        assert_eq!(sp.graph.num_edges(), 93);
        assert_eq!(sp.context_dim(), 12);
        for y in &sp.observations {
            assert_eq!(sp.graph.flow_residual(y), 0.0);
            assert!(y.iter().all(|v| *v == 0.0 || *v == 1.0));
        }
        for r in &sp.records {
            assert!(r.t.iter().all(|t| *t > 0.0));
            assert_eq!(*r.u.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn noiseless_observations_follow_theta() {
        let sp = synth_graph_instance(&GridSpec::default(), 20, 0.0, 8).unwrap();
        let th = sp.truth.clone().unwrap();
        let fp = sp.forward_problem().unwrap();
        for (r, y) in sp.records.iter().zip(&sp.observations) {
            assert_eq!(&crate::solvers::solve_exact(&fp, &th, &r.u).unwrap(), y);
        }
    }

    #[test]
    fn roundtrip_csv() {
        let dir = tempfile::tempdir().unwrap();
        let sp = synth_graph_instance(&GridSpec::default(), 5, 0.1, 1).unwrap();
        let e = dir.path().join("edges.csv");
        let r = dir.path().join("records.csv");
        write_graph_csv(&e, &sp.graph, &sp.node_names).unwrap();
        write_records_csv(&r, &sp).unwrap();
        let (g, names) = load_graph(&e, "n0", "n44").unwrap();
        let named = |g: &Graph, ns: &[String]| -> Vec<(String, String)> {
            g.edges().iter().map(|&(t, h)| (ns[t].clone(), ns[h].clone())).collect()
        };
        assert_eq!(named(&g, &names), named(&sp.graph, &sp.node_names));
        let back = load_records(&r, Arc::new(g), names).unwrap();
        assert_eq!(back.records, sp.records);
        assert_eq!(back.observations, sp.observations);
    }

    #[test]
    fn kka_unsupported_and_split_deterministic() {
        let sp = synth_graph_instance(&GridSpec::default(), 10, 0.1, 2).unwrap();
        assert!(matches!(
            sp_run(&sp, Method::Kka, &SpRunConfig::default(), 0),
            Err(Error::UnsupportedRegion { .. })
        ));
        assert_eq!(split(10, 0.6, 3), split(10, 0.6, 3));
        assert_eq!(split(10, 0.6, 3).0.len(), 6);
    }
}
