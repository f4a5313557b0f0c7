//! Classical whole-network descriptors: density, clustering, degree
//! assortativity, components and centralities.

use alloc::{collections::VecDeque, vec, vec::Vec};
use core::ops::Range;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{
    error::Result,
    graph::{sorted_intersection_len, Graph},
};

/// Sources per betweenness partial sum. Partials are always added in source
/// order, so sequential and parallel drivers agree bit-for-bit.
pub const BETWEENNESS_CHUNK: usize = 64;

pub fn density(g: &Graph) -> Option<f64> {
    let n = g.node_count();
    if n < 2 {
        return None;
    }
    Some(2.0 * g.edge_count() as f64 / (n as f64 * (n - 1) as f64))
}

/// Triangles through `v`.
fn node_triangles(g: &Graph, v: usize) -> usize {
    let nv = g.neighbors(v);
    nv.iter()
        .map(|&u| sorted_intersection_len(nv, g.neighbors(u)))
        .sum::<usize>()
        / 2
}

/// Fraction of neighbor pairs of `v` that are adjacent; 0 below degree 2.
pub fn local_clustering(g: &Graph, v: usize) -> Result<f64> {
    let d = g.degree(v)?;
    if d < 2 {
        return Ok(0.0);
    }
    Ok(node_triangles(g, v) as f64 / (d * (d - 1) / 2) as f64)
}

pub fn mean_local_clustering(g: &Graph) -> Option<f64> {
    let n = g.node_count();
    if n == 0 {
        return None;
    }
    let sum: f64 = (0..n).map(|v| local_clustering(g, v).unwrap()).sum();
    Some(sum / n as f64)
}

/// Transitivity: `3 * triangles / connected triples`; `None` without triples.
pub fn global_clustering(g: &Graph) -> Option<f64> {
    let mut closed = 0usize;
    let mut triples = 0usize;
    for v in 0..g.node_count() {
        let d = g.neighbors(v).len();
        triples += d * d.saturating_sub(1) / 2;
        closed += node_triangles(g, v);
    }
    // Each triangle is counted once at each of its three corners.
    (triples > 0).then(|| closed as f64 / triples as f64)
}

/// Pearson correlation of endpoint degrees over both orientations of every
/// edge. `None` when there are no edges or the degrees do not vary.
pub fn degree_assortativity(g: &Graph) -> Option<f64> {
    let m = g.edge_count();
    if m == 0 {
        return None;
    }
    let deg = g.degrees();
    let (mut s1, mut s2, mut sxy) = (0.0, 0.0, 0.0);
    for &(i, j) in g.edges() {
        let (a, b) = (deg[i] as f64, deg[j] as f64);
        s1 += a + b;
        s2 += a * a + b * b;
        sxy += 2.0 * a * b;
    }
    let total = 2.0 * m as f64;
    let mean = s1 / total;
    let var = s2 / total - mean * mean;
    let cov = sxy / total - mean * mean;
    if var <= 1e-12 * (1.0 + mean * mean) {
        return None;
    }
    Some((cov / var).clamp(-1.0, 1.0))
}

pub fn degree_centrality(g: &Graph, v: usize) -> Result<f64> {
    let d = g.degree(v)?;
    let n = g.node_count();
    Ok(if n < 2 { 0.0 } else { d as f64 / (n - 1) as f64 })
}

/// Unnormalized Brandes dependencies accumulated over `sources`. Each
/// unordered pair contributes twice when all nodes are sources.
pub fn betweenness_partial(g: &Graph, sources: Range<usize>) -> Vec<f64> {
    let n = g.node_count();
    let mut acc = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in sources {
        for &v in &order {
            sigma[v] = 0.0;
            dist[v] = usize::MAX;
            delta[v] = 0.0;
        }
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                acc[w] += delta[w];
            }
        }
    }
    acc
}

/// Sums chunk partials in order and scales to [0, 1] by the number of
/// ordered pairs not involving the node, `(n - 1)(n - 2)`.
pub fn finish_betweenness(n: usize, partials: impl IntoIterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut total = vec![0.0; n];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    if n > 2 {
        let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
        for t in &mut total {
            *t *= scale;
        }
    } else {
        total.fill(0.0);
    }
    total
}

/// Normalized betweenness centrality of every node.
pub fn betweenness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let partials = (0..n)
        .step_by(BETWEENNESS_CHUNK)
        .map(|s| betweenness_partial(g, s..(s + BETWEENNESS_CHUNK).min(n)));
    finish_betweenness(n, partials)
}

/// One row of structural descriptors for a network. Ratio fields are `None`
/// where they are undefined.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DescriptorRow {
    pub node_count: usize,
    pub edge_count: usize,
    pub density: Option<f64>,
    pub global_clustering: Option<f64>,
    pub mean_local_clustering: Option<f64>,
    pub degree_assortativity: Option<f64>,
    pub component_count: usize,
    pub largest_component_fraction: Option<f64>,
    pub mean_degree: Option<f64>,
    pub max_degree: Option<f64>,
    pub mean_degree_centrality: Option<f64>,
    pub max_degree_centrality: Option<f64>,
    pub mean_betweenness: Option<f64>,
    pub max_betweenness: Option<f64>,
}

pub fn descriptor_row(g: &Graph) -> DescriptorRow {
    descriptor_row_with_betweenness(g, &betweenness_centrality(g))
}

/// Same as [`descriptor_row`] with betweenness supplied by the caller.
pub fn descriptor_row_with_betweenness(g: &Graph, betweenness: &[f64]) -> DescriptorRow {
    let n = g.node_count();
    let components = g.connected_components();
    let largest = components.sizes().into_iter().max().unwrap_or(0);
    let degrees: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let centrality: Vec<f64> = (0..n).map(|v| degree_centrality(g, v).unwrap()).collect();
    let max = |xs: &[f64]| xs.iter().copied().reduce(f64::max);
    DescriptorRow {
        node_count: n,
        edge_count: g.edge_count(),
        density: density(g),
        global_clustering: global_clustering(g),
        mean_local_clustering: mean_local_clustering(g),
        degree_assortativity: degree_assortativity(g),
        component_count: components.count,
        largest_component_fraction: (n > 0).then(|| largest as f64 / n as f64),
        mean_degree: crate::stats::mean(&degrees),
        max_degree: max(&degrees),
        mean_degree_centrality: crate::stats::mean(&centrality),
        max_degree_centrality: max(&centrality),
        mean_betweenness: crate::stats::mean(betweenness),
        max_betweenness: max(betweenness),
    }
}
