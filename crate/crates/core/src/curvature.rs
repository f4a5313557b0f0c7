//! Forman-Ricci and Ollivier-Ricci edge curvature and their node- and
//! network-level aggregates.

use alloc::{format, string::ToString, vec, vec::Vec};
use core::{fmt, str::FromStr};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{
    error::{Error, Result},
    graph::{BfsScratch, Graph},
    ot::{self, CostMatrix, DiscreteMeasure},
    record::NetworkKey,
    stats,
};

/// Support points of two neighborhood measures across an edge are at most this
/// many hops apart (`x - i - j - y`).
pub const GROUND_RADIUS: usize = 3;

/// Neighborhood measure: mass `alpha` stays on the node, the rest is spread
/// uniformly over its neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MeasureConfig {
    pub alpha: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { alpha: 0.0 }
    }
}

impl MeasureConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self { alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.alpha) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )))
        }
    }
}

/// Entropic approximation for edges whose larger endpoint degree exceeds
/// `degree_cutoff`. Falls back to the exact solver if Sinkhorn does not
/// converge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ApproxConfig {
    pub degree_cutoff: usize,
    pub regularization: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CurvatureConfig {
    pub measure: MeasureConfig,
    /// `None` (the default) means every edge is solved exactly.
    pub approx: Option<ApproxConfig>,
}

impl CurvatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        if let Some(a) = &self.approx {
            if a.regularization.is_nan() || a.regularization <= 0.0 {
                return Err(Error::InvalidConfig(
                    "approximation regularization must be positive".to_string(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum CurvatureKind {
    Frc,
    Orc,
}

impl CurvatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Frc => "frc",
            Self::Orc => "orc",
        }
    }
}

impl FromStr for CurvatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frc" | "forman" => Ok(Self::Frc),
            "orc" | "ollivier" => Ok(Self::Orc),
            other => Err(Error::InvalidConfig(format!("unknown curvature kind `{other}`"))),
        }
    }
}

impl fmt::Display for CurvatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which curvatures to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CurvatureKinds {
    pub frc: bool,
    pub orc: bool,
}

impl CurvatureKinds {
    pub const BOTH: Self = Self { frc: true, orc: true };
    pub const FRC: Self = Self { frc: true, orc: false };
    pub const ORC: Self = Self { frc: false, orc: true };

    pub fn contains(&self, kind: CurvatureKind) -> bool {
        match kind {
            CurvatureKind::Frc => self.frc,
            CurvatureKind::Orc => self.orc,
        }
    }
}

impl FromStr for CurvatureKinds {
    type Err = Error;

    /// Comma-separated list, e.g. `frc,orc`.
    fn from_str(s: &str) -> Result<Self> {
        let mut kinds = Self {
            frc: false,
            orc: false,
        };
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            match part.parse::<CurvatureKind>()? {
                CurvatureKind::Frc => kinds.frc = true,
                CurvatureKind::Orc => kinds.orc = true,
            }
        }
        if !kinds.frc && !kinds.orc {
            return Err(Error::InvalidConfig("no curvature kind selected".to_string()));
        }
        Ok(kinds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EdgeCurvature {
    pub i: usize,
    pub j: usize,
    pub frc: Option<f64>,
    pub orc: Option<f64>,
}

impl EdgeCurvature {
    pub fn get(&self, kind: CurvatureKind) -> Option<f64> {
        match kind {
            CurvatureKind::Frc => self.frc,
            CurvatureKind::Orc => self.orc,
        }
    }
}

/// Per-edge curvatures of one network, in the graph's canonical edge order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CurvatureReport {
    pub key: NetworkKey,
    pub kinds: CurvatureKinds,
    pub config: CurvatureConfig,
    pub edges: Vec<EdgeCurvature>,
}

impl CurvatureReport {
    /// Assembles a report from per-edge results computed elsewhere (for
    /// example by a thread pool). `edges` must follow `g.edges()`.
    pub fn from_edges(
        g: &Graph,
        kinds: CurvatureKinds,
        config: CurvatureConfig,
        edges: Vec<EdgeCurvature>,
    ) -> Result<Self> {
        let report = Self {
            key: g.key().clone(),
            kinds,
            config,
            edges,
        };
        report.check_against(g)?;
        Ok(report)
    }

    /// Checks that the report covers exactly the edges of `g` and that every
    /// Ollivier value lies in [-2, 1].
    pub fn check_against(&self, g: &Graph) -> Result<()> {
        if self.edges.len() != g.edge_count()
            || self
                .edges
                .iter()
                .zip(g.edges())
                .any(|(e, &(i, j))| (e.i, e.j) != (i, j))
        {
            return Err(Error::InvalidGraph(
                "curvature report does not match the graph's edges".to_string(),
            ));
        }
        if let Some(e) = self
            .edges
            .iter()
            .find(|e| e.orc.is_some_and(|v| !(-2.0 - 1e-9..=1.0 + 1e-9).contains(&v)))
        {
            return Err(Error::InvalidGraph(format!(
                "Ollivier curvature {:?} on ({}, {}) is outside [-2, 1]",
                e.orc, e.i, e.j
            )));
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&EdgeCurvature> {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .ok()
            .map(|k| &self.edges[k])
    }

    pub fn values(&self, kind: CurvatureKind) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().filter_map(move |e| e.get(kind))
    }
}

pub fn neighborhood_measure(g: &Graph, v: usize, config: &MeasureConfig) -> Result<DiscreteMeasure> {
    config.validate()?;
    let d = g.degree(v)?;
    if d == 0 {
        return Err(Error::IsolatedNode(v));
    }
    let mut support = Vec::with_capacity(d + 1);
    let mut mass = Vec::with_capacity(d + 1);
    let share = (1.0 - config.alpha) / d as f64;
    if config.alpha > 0.0 {
        support.push(v);
        mass.push(config.alpha);
    }
    for &u in g.neighbors(v) {
        support.push(u);
        mass.push(share);
    }
    DiscreteMeasure::new(support, mass)
}

pub fn forman_edge(g: &Graph, i: usize, j: usize) -> Result<f64> {
    let triangles = g.triangles_on_edge(i, j)?;
    let (di, dj) = (g.neighbors(i).len(), g.neighbors(j).len());
    Ok(4.0 - di as f64 - dj as f64 + 3.0 * triangles as f64)
}

/// Ollivier-Ricci curvature of one edge. For repeated calls on the same graph
/// use [`OllivierSolver`], which reuses its buffers.
pub fn ollivier_edge(g: &Graph, i: usize, j: usize, config: &MeasureConfig) -> Result<f64> {
    OllivierSolver::new(g).edge(
        i,
        j,
        &CurvatureConfig {
            measure: *config,
            approx: None,
        },
    )
}

/// Per-graph state for computing many Ollivier curvatures.
///
/// Hop distances are a metric, so mass shared by both neighborhood measures
/// can stay in place: only the positive and negative parts of `mu_i - mu_j`
/// are transported. Ground distances come from radius-3 BFS out of each
/// positive support point.
pub struct OllivierSolver<'g> {
    g: &'g Graph,
    bfs: BfsScratch,
    diff: Vec<(usize, f64)>,
    sources: Vec<(usize, f64)>,
    sinks: Vec<(usize, f64)>,
    cost: Vec<f64>,
}

impl<'g> OllivierSolver<'g> {
    pub fn new(g: &'g Graph) -> Self {
        Self {
            g,
            bfs: BfsScratch::new(g.node_count()),
            diff: Vec::new(),
            sources: Vec::new(),
            sinks: Vec::new(),
            cost: Vec::new(),
        }
    }

    pub fn edge(&mut self, i: usize, j: usize, config: &CurvatureConfig) -> Result<f64> {
        let g = self.g;
        g.triangles_on_edge(i, j)?;
        let alpha = config.measure.alpha;
        config.measure.validate()?;
        self.signed_difference(i, j, alpha);

        self.sources.clear();
        self.sinks.clear();
        for &(x, w) in &self.diff {
            if w > 0.0 {
                self.sources.push((x, w));
            } else if w < 0.0 {
                self.sinks.push((x, -w));
            }
        }
        if self.sources.is_empty() || self.sinks.is_empty() {
            return Ok(1.0);
        }
        // Rebalance rounding noise so the two sides carry identical mass.
        let supply: f64 = self.sources.iter().map(|s| s.1).sum();
        let demand: f64 = self.sinks.iter().map(|s| s.1).sum();
        let scale = supply / demand;
        for s in &mut self.sinks {
            s.1 *= scale;
        }

        self.cost.clear();
        for &(x, _) in &self.sources {
            self.bfs.run(g, x, GROUND_RADIUS);
            for &(y, _) in &self.sinks {
                let d = self.bfs.distance(y).ok_or_else(|| {
                    Error::InvalidGraph(format!("nodes {x} and {y} are more than 3 hops apart"))
                })?;
                self.cost.push(d as f64);
            }
        }
        let cost = CostMatrix::new(self.sources.len(), self.sinks.len(), core::mem::take(&mut self.cost))?;

        let degree = g.neighbors(i).len().max(g.neighbors(j).len());
        let approx = config.approx.filter(|a| degree > a.degree_cutoff);
        let w1 = match approx {
            Some(a) => match self.approx_w1(&cost, supply, a) {
                Some(w) => w,
                None => self.exact_w1(&cost)?,
            },
            None => self.exact_w1(&cost)?,
        };
        self.cost = cost.into_data();
        Ok(1.0 - w1)
    }

    fn exact_w1(&self, cost: &CostMatrix) -> Result<f64> {
        let supply: Vec<f64> = self.sources.iter().map(|s| s.1).collect();
        let demand: Vec<f64> = self.sinks.iter().map(|s| s.1).collect();
        Ok(ot::solve_transport(&supply, &demand, cost)?.cost)
    }

    fn approx_w1(&self, cost: &CostMatrix, total: f64, a: ApproxConfig) -> Option<f64> {
        let mu = normalized(&self.sources, total)?;
        let nu = normalized(&self.sinks, total)?;
        ot::wasserstein1_approx(&mu, &nu, cost, a.regularization, a.max_iters)
            .ok()
            .map(|r| r.value * total)
    }

    /// `mu_i - mu_j` over the union of both supports, sorted by node.
    fn signed_difference(&mut self, i: usize, j: usize, alpha: f64) {
        let g = self.g;
        let (ni, nj) = (g.neighbors(i), g.neighbors(j));
        let wi = (1.0 - alpha) / ni.len() as f64;
        let wj = (1.0 - alpha) / nj.len() as f64;
        self.diff.clear();
        let (mut a, mut b) = (0, 0);
        while a < ni.len() || b < nj.len() {
            let x = ni.get(a).copied().unwrap_or(usize::MAX);
            let y = nj.get(b).copied().unwrap_or(usize::MAX);
            if x < y {
                self.diff.push((x, wi));
                a += 1;
            } else if y < x {
                self.diff.push((y, -wj));
                b += 1;
            } else {
                self.diff.push((x, wi - wj));
                a += 1;
                b += 1;
            }
        }
        if alpha > 0.0 {
            for (node, w) in [(i, alpha), (j, -alpha)] {
                match self.diff.binary_search_by_key(&node, |d| d.0) {
                    Ok(k) => self.diff[k].1 += w,
                    Err(k) => self.diff.insert(k, (node, w)),
                }
            }
        }
    }
}

fn normalized(points: &[(usize, f64)], total: f64) -> Option<DiscreteMeasure> {
    let support = points.iter().map(|p| p.0).collect();
    let mut mass: Vec<f64> = points.iter().map(|p| p.1 / total).collect();
    let sum: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= sum;
    }
    DiscreteMeasure::new(support, mass).ok()
}

/// Curvatures of one edge; kinds not requested are `None`.
pub fn edge_curvature(
    solver: &mut OllivierSolver<'_>,
    i: usize,
    j: usize,
    kinds: CurvatureKinds,
    config: &CurvatureConfig,
) -> Result<EdgeCurvature> {
    let frc = if kinds.frc {
        Some(forman_edge(solver.g, i, j)?)
    } else {
        None
    };
    let orc = if kinds.orc {
        Some(solver.edge(i, j, config)?)
    } else {
        None
    };
    Ok(EdgeCurvature { i, j, frc, orc })
}

/// Sequential reference driver over every edge of `g`.
pub fn curvature_all_edges(
    g: &Graph,
    kinds: CurvatureKinds,
    config: &CurvatureConfig,
) -> Result<CurvatureReport> {
    config.validate()?;
    let mut solver = OllivierSolver::new(g);
    let edges = g
        .edges()
        .iter()
        .map(|&(i, j)| edge_curvature(&mut solver, i, j, kinds, config))
        .collect::<Result<Vec<_>>>()?;
    CurvatureReport::from_edges(g, kinds, *config, edges)
}

/// Mean curvature over the edges incident to `v`; `None` for isolated nodes
/// or when `kind` was not computed.
pub fn node_curvature(report: &CurvatureReport, g: &Graph, v: usize, kind: CurvatureKind) -> Option<f64> {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for &u in nbrs {
        sum += report.get(v, u)?.get(kind)?;
    }
    Some(sum / nbrs.len() as f64)
}

/// [`node_curvature`] for every node in one pass over the edges.
pub fn node_curvatures(report: &CurvatureReport, g: &Graph, kind: CurvatureKind) -> Vec<Option<f64>> {
    let n = g.node_count();
    let mut sum = vec![0.0; n];
    let mut seen = vec![0usize; n];
    for e in &report.edges {
        if let Some(x) = e.get(kind) {
            sum[e.i] += x;
            sum[e.j] += x;
            seen[e.i] += 1;
            seen[e.j] += 1;
        }
    }
    (0..n)
        .map(|v| {
            let d = g.neighbors(v).len();
            (d > 0 && seen[v] == d).then(|| sum[v] / d as f64)
        })
        .collect()
}

/// Distribution of one curvature over a network's edges. Every field except
/// `count` is `None` when no values are present.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CurvatureSummary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub frac_negative: Option<f64>,
    pub count: usize,
}

impl CurvatureSummary {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        Self {
            mean: stats::mean(values),
            median: stats::quantile_sorted(&sorted, 0.5),
            std: stats::population_std(values),
            min: sorted.first().copied(),
            max: sorted.last().copied(),
            frac_negative: Some(values.iter().filter(|&&x| x < 0.0).count() as f64 / n),
            count: values.len(),
        }
    }
}

pub fn network_curvature_summary(report: &CurvatureReport, kind: CurvatureKind) -> CurvatureSummary {
    let values: Vec<f64> = report.values(kind).collect();
    CurvatureSummary::from_values(&values)
}
