//! Immutable undirected simple graph in compressed sparse row form.

use alloc::{
    collections::{BTreeMap, BTreeSet, VecDeque},
    format,
    string::ToString,
    vec,
    vec::Vec,
};

use crate::{
    error::{Error, Result},
    record::{aggregate_pairs, EdgeRecord, FilterConfig, NetworkKey, ProviderId},
};

/// Undirected simple graph with sorted adjacency lists.
///
/// Edge weights are the aggregated shared-patient counts. They are kept for
/// display and export only; no metric in this crate reads them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    key: NetworkKey,
    node_ids: Vec<ProviderId>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edges: Vec<(usize, usize)>,
    weights: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl Components {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

impl Graph {
    /// Builds a graph from `(i, j, weight)` triples over `node_ids`.
    ///
    /// Endpoints may be given in either order; self-loops, duplicate pairs and
    /// out-of-range indices are rejected.
    pub fn from_edges<I>(key: NetworkKey, node_ids: Vec<ProviderId>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let n = node_ids.len();
        let distinct: BTreeSet<&ProviderId> = node_ids.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidGraph("duplicate node id".to_string()));
        }
        let mut list: Vec<(usize, usize, u64)> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange {
                    index: a.max(b),
                    len: n,
                });
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            list.push((a.min(b), a.max(b), w));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut degree = vec![0usize; n];
        for &(i, j, _) in &list {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(i, j, _) in &list {
            neighbors[fill[i]] = j;
            fill[i] += 1;
            neighbors[fill[j]] = i;
            fill[j] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }

        Ok(Self {
            key,
            node_ids,
            offsets,
            neighbors,
            edges: list.iter().map(|&(i, j, _)| (i, j)).collect(),
            weights: list.iter().map(|&(_, _, w)| w).collect(),
        })
    }

    /// Unweighted graph on nodes `0..n` labelled by their index.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let ids = (0..n).map(|v| ProviderId::new(v.to_string())).collect();
        Self::from_edges(
            NetworkKey::default(),
            ids,
            edges.iter().map(|&(a, b)| (a, b, 0)),
        )
    }

    pub fn key(&self) -> &NetworkKey {
        &self.key
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[ProviderId] {
        &self.node_ids
    }

    pub fn node_id(&self, v: usize) -> Option<&ProviderId> {
        self.node_ids.get(v)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|p| p.as_str() == id)
    }

    /// Canonical `(i, j)` pairs with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Weights aligned with [`Graph::edges`].
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<u64> {
        self.edge_index(i, j).map(|e| self.weights[e])
    }

    /// Sorted neighbor list. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: v,
                len: self.node_count(),
            })
        }
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check(v)?;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && j < self.node_count() && self.neighbors(i).binary_search(&j).is_ok()
    }

    fn check_edge(&self, i: usize, j: usize) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if self.has_edge(i, j) {
            Ok(())
        } else {
            Err(Error::NotAnEdge(i, j))
        }
    }

    /// Number of triangles through edge `(i, j)`, by merging the two sorted
    /// neighbor lists.
    pub fn triangles_on_edge(&self, i: usize, j: usize) -> Result<usize> {
        self.check_edge(i, j)?;
        Ok(sorted_intersection_len(self.neighbors(i), self.neighbors(j)))
    }

    /// Hop distances from `source` to every node at most `radius` hops away.
    pub fn bfs_distances(&self, source: usize, radius: usize) -> Result<BTreeMap<usize, usize>> {
        self.check(source)?;
        let mut scratch = BfsScratch::new(self.node_count());
        scratch.run(self, source, radius);
        Ok(scratch.reached().iter().map(|&v| (v, scratch.distance(v).unwrap())).collect())
    }

    pub fn connected_components(&self) -> Components {
        let n = self.node_count();
        let mut labels = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            labels[start] = count;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &u in self.neighbors(v) {
                    if labels[u] == usize::MAX {
                        labels[u] = count;
                        queue.push_back(u);
                    }
                }
            }
            count += 1;
        }
        Components { labels, count }
    }
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut x, mut y, mut count) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            core::cmp::Ordering::Less => x += 1,
            core::cmp::Ordering::Greater => y += 1,
            core::cmp::Ordering::Equal => {
                count += 1;
                x += 1;
                y += 1;
            }
        }
    }
    count
}

/// Reusable buffers for repeated truncated BFS on one graph.
///
/// Resetting only touches the nodes reached by the previous run, so many
/// short-radius searches on a large graph stay cheap.
#[derive(Debug, Clone)]
pub struct BfsScratch {
    dist: Vec<u32>,
    reached: Vec<usize>,
}

impl BfsScratch {
    pub fn new(node_count: usize) -> Self {
        Self {
            dist: vec![u32::MAX; node_count],
            reached: Vec::new(),
        }
    }

    pub fn run(&mut self, g: &Graph, source: usize, radius: usize) {
        for &v in &self.reached {
            self.dist[v] = u32::MAX;
        }
        self.reached.clear();
        if self.dist.len() < g.node_count() {
            self.dist.resize(g.node_count(), u32::MAX);
        }

        self.dist[source] = 0;
        self.reached.push(source);
        let mut head = 0;
        while head < self.reached.len() {
            let v = self.reached[head];
            head += 1;
            let d = self.dist[v];
            if d as usize >= radius {
                continue;
            }
            for &u in g.neighbors(v) {
                if self.dist[u] == u32::MAX {
                    self.dist[u] = d + 1;
                    self.reached.push(u);
                }
            }
        }
    }

    pub fn distance(&self, v: usize) -> Option<usize> {
        match self.dist.get(v) {
            Some(&d) if d != u32::MAX => Some(d as usize),
            _ => None,
        }
    }

    /// Nodes reached by the last run, in BFS order.
    pub fn reached(&self) -> &[usize] {
        &self.reached
    }
}

/// Applies the construction rules to the records of one `(hsa, year)`.
///
/// Pair counts are symmetrized first and the threshold is applied to the
/// combined count. Nodes are ordered by provider id.
pub fn build_network(records: &[EdgeRecord], config: &FilterConfig) -> Result<Graph> {
    config.validate()?;
    let key = match records.first() {
        Some(r) => r.key(),
        None => NetworkKey::default(),
    };
    if let Some(other) = records
        .iter()
        .find(|r| r.hsa_id != key.hsa || r.year != key.year)
    {
        return Err(Error::MixedKeys {
            first: key,
            other: other.key(),
        });
    }

    let pairs = aggregate_pairs(
        records.iter().filter(|r| {
            !config.is_excluded(&r.provider_a) && !config.is_excluded(&r.provider_b)
        }),
        config.symmetrization,
    );
    let retained: Vec<(&ProviderId, &ProviderId, u64)> = pairs
        .into_iter()
        .filter(|&(_, w)| w >= config.min_shared_patients)
        .map(|((a, b), w)| (a, b, w))
        .collect();

    let mut nodes: BTreeSet<&ProviderId> = BTreeSet::new();
    for &(a, b, _) in &retained {
        nodes.insert(a);
        nodes.insert(b);
    }
    if config.keep_isolated {
        for r in records {
            for id in [&r.provider_a, &r.provider_b] {
                if !config.is_excluded(id) {
                    nodes.insert(id);
                }
            }
        }
    }
    let index: BTreeMap<&ProviderId, usize> =
        nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges: Vec<(usize, usize, u64)> = retained
        .iter()
        .map(|&(a, b, w)| (index[a], index[b], w))
        .collect();
    Graph::from_edges(key, nodes.into_iter().cloned().collect(), edges)
}
