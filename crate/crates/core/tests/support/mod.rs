//! Brute-force oracles and random fixtures shared by the integration suites.
//!
//! Nothing here calls into the implementation paths it is used to check:
//! triangles come from an adjacency matrix, distances from Floyd-Warshall,
//! W1 from exhaustive enumeration of integral dual vertices.

#![allow(dead_code)]

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refnet_core::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edge_list(n, &edges).unwrap()
}

/// Uniformly random graph with exactly `m` edges.
pub fn gnm(n: usize, m: usize, rng: &mut impl Rng) -> Graph {
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if seen.insert(e) {
            edges.push(e);
        }
    }
    Graph::from_edge_list(n, &edges).unwrap()
}

pub fn complete(n: usize) -> Graph {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            e.push((i, j));
        }
    }
    Graph::from_edge_list(n, &e).unwrap()
}

/// Two hubs joined by an edge, each with two pendant leaves.
pub fn dumbbell() -> Graph {
    Graph::from_edge_list(6, &[(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]).unwrap()
}

pub fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let edges: Vec<_> = g.edges().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
    Graph::from_edge_list(g.node_count(), &edges).unwrap()
}

pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn adjacency_matrix(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for &(i, j) in g.edges() {
        a[i][j] = true;
        a[j][i] = true;
    }
    a
}

pub fn brute_degree(adj: &[Vec<bool>], v: usize) -> usize {
    adj[v].iter().filter(|&&x| x).count()
}

pub fn brute_triangles(adj: &[Vec<bool>], i: usize, j: usize) -> usize {
    (0..adj.len()).filter(|&k| adj[i][k] && adj[j][k]).count()
}

pub const INF: usize = usize::MAX / 4;

pub fn floyd_warshall(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for &(i, j) in g.edges() {
        d[i][j] = 1;
        d[j][i] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Exact W1 by exhaustive search over integral dual vertices.
///
/// For integer costs an optimal dual `(u, v)` exists with `u_0 = 0`,
/// `v = c`-transform of `u`, and `u_i - u_0` between `min_j (c_ij - c_0j)` and
/// `max_j (c_ij - c_0j)` (apply the double c-transform to any integral optimal
/// vertex). Every candidate in that box is dual feasible, so the maximum over
/// the box equals the primal optimum.
pub fn w1_dual_enumeration(a: &[f64], b: &[f64], cost: &[Vec<i64>]) -> f64 {
    if a.len() > b.len() {
        let t: Vec<Vec<i64>> = (0..b.len())
            .map(|j| (0..a.len()).map(|i| cost[i][j]).collect())
            .collect();
        return w1_dual_enumeration(b, a, &t);
    }
    let (m, n) = (a.len(), b.len());
    let lo: Vec<i64> = (0..m)
        .map(|i| (0..n).map(|j| cost[i][j] - cost[0][j]).min().unwrap())
        .collect();
    let hi: Vec<i64> = (0..m)
        .map(|i| (0..n).map(|j| cost[i][j] - cost[0][j]).max().unwrap())
        .collect();
    let mut u: Vec<i64> = lo.clone();
    u[0] = 0;
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut obj: f64 = a.iter().zip(&u).map(|(x, &ui)| x * ui as f64).sum();
        for j in 0..n {
            let vj = (0..m).map(|i| cost[i][j] - u[i]).min().unwrap();
            obj += b[j] * vj as f64;
        }
        best = best.max(obj);
        // Odometer over rows 1..m.
        let mut k = 1;
        loop {
            if k >= m {
                return best;
            }
            if u[k] < hi[k] {
                u[k] += 1;
                break;
            }
            u[k] = lo[k];
            k += 1;
        }
    }
}

/// Ollivier curvature of `(i, j)` from full neighborhood measures,
/// Floyd-Warshall ground costs and the dual enumeration above.
pub fn orc_oracle(g: &Graph, dist: &[Vec<usize>], i: usize, j: usize, alpha: f64) -> f64 {
    let measure = |v: usize| -> (Vec<usize>, Vec<f64>) {
        let nbrs = g.neighbors(v).to_vec();
        let share = (1.0 - alpha) / nbrs.len() as f64;
        let mut support = nbrs;
        let mut mass = vec![share; support.len()];
        if alpha > 0.0 {
            support.push(v);
            mass.push(alpha);
        }
        (support, mass)
    };
    let (si, mi) = measure(i);
    let (sj, mj) = measure(j);
    let cost: Vec<Vec<i64>> = si
        .iter()
        .map(|&x| sj.iter().map(|&y| dist[x][y] as i64).collect())
        .collect();
    let w1 = w1_dual_enumeration(&mi, &mj, &cost);
    1.0 - w1 / dist[i][j] as f64
}

/// Transitivity from explicit enumeration of connected triples.
pub fn brute_transitivity(adj: &[Vec<bool>]) -> Option<f64> {
    let n = adj.len();
    let (mut triples, mut closed) = (0usize, 0usize);
    for v in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                if adj[v][a] && adj[v][b] {
                    triples += 1;
                    if adj[a][b] {
                        closed += 1;
                    }
                }
            }
        }
    }
    (triples > 0).then(|| closed as f64 / triples as f64)
}

pub fn brute_local_clustering(adj: &[Vec<bool>], v: usize) -> f64 {
    let nbrs: Vec<usize> = (0..adj.len()).filter(|&u| adj[v][u]).collect();
    if nbrs.len() < 2 {
        return 0.0;
    }
    let mut linked = 0;
    let mut pairs = 0;
    for (k, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[k + 1..] {
            pairs += 1;
            if adj[a][b] {
                linked += 1;
            }
        }
    }
    linked as f64 / pairs as f64
}

/// Textbook Pearson over both orientations of every edge.
pub fn brute_assortativity(g: &Graph, adj: &[Vec<bool>]) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(i, j) in g.edges() {
        let (di, dj) = (brute_degree(adj, i) as f64, brute_degree(adj, j) as f64);
        xs.extend([di, dj]);
        ys.extend([dj, di]);
    }
    textbook_pearson(&xs, &ys)
}

pub fn textbook_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx.abs() < 1e-9 * (1.0 + sxx * n) || vy.abs() < 1e-9 * (1.0 + syy * n) {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx.sqrt() * vy.sqrt()))
}

/// Spearman for tie-free data: `1 - 6 sum d^2 / (n (n^2 - 1))`.
pub fn textbook_spearman_no_ties(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &k) in idx.iter().enumerate() {
            r[k] = (pos + 1) as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Normalized betweenness from shortest-path counts over all pairs.
pub fn brute_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let d = floyd_warshall(g);
    let adj = adjacency_matrix(g);
    // sigma[s][t]: number of shortest s-t paths, filled in order of distance.
    let mut sigma = vec![vec![0.0f64; n]; n];
    for s in 0..n {
        let mut by_dist: Vec<usize> = (0..n).filter(|&t| d[s][t] < INF).collect();
        by_dist.sort_by_key(|&t| d[s][t]);
        for &t in &by_dist {
            sigma[s][t] = if t == s {
                1.0
            } else {
                (0..n)
                    .filter(|&u| adj[u][t] && d[s][u] + 1 == d[s][t])
                    .map(|u| sigma[s][u])
                    .sum()
            };
        }
    }
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    for (v, out) in bc.iter_mut().enumerate() {
        for s in 0..n {
            for t in s + 1..n {
                if s == v || t == v || d[s][t] >= INF {
                    continue;
                }
                if d[s][v] + d[v][t] == d[s][t] {
                    *out += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
        *out /= ((n - 1) * (n - 2) / 2) as f64;
    }
    bc
}

/// Normal sample via Box-Muller, to keep fixtures independent of rand_distr
/// versioning in the crates that include this module.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `n` pairs with population correlation `r`: `y = r x + sqrt(1 - r^2) e`.
pub fn planted_pairs(n: usize, r: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut g = rng(seed);
    (0..n)
        .map(|_| {
            let x = normal(&mut g);
            let e = normal(&mut g);
            (x, r * x + (1.0 - r * r).sqrt() * e)
        })
        .collect()
}
