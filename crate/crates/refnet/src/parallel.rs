//! Worker-pool drivers. Results are gathered in canonical order, so output
//! does not depend on the number of workers.

use rayon::prelude::*;
use refnet_core::{
    curvature::{edge_curvature, OllivierSolver},
    descriptors::{betweenness_partial, finish_betweenness, BETWEENNESS_CHUNK},
    CurvatureConfig, CurvatureKinds, CurvatureReport, Graph,
};

use crate::error::{Error, Result};

pub fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Usage("--workers must be at least 1".to_string()));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// Edges are split into fixed blocks; each block reuses one solver.
const EDGE_BLOCK: usize = 256;

pub fn curvature_report(
    pool: &rayon::ThreadPool,
    g: &Graph,
    kinds: CurvatureKinds,
    config: &CurvatureConfig,
) -> Result<CurvatureReport> {
    config.validate()?;
    let edges = g.edges();
    let blocks: Vec<_> = pool.install(|| {
        edges
            .par_chunks(EDGE_BLOCK)
            .map(|block| {
                let mut solver = OllivierSolver::new(g);
                block
                    .iter()
                    .map(|&(i, j)| edge_curvature(&mut solver, i, j, kinds, config))
                    .collect::<refnet_core::Result<Vec<_>>>()
            })
            .collect()
    });
    let mut out = Vec::with_capacity(edges.len());
    for b in blocks {
        out.extend(b?);
    }
    Ok(CurvatureReport::from_edges(g, kinds, *config, out)?)
}

pub fn betweenness(pool: &rayon::ThreadPool, g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let starts: Vec<usize> = (0..n).step_by(BETWEENNESS_CHUNK).collect();
    let partials: Vec<Vec<f64>> = pool.install(|| {
        starts
            .par_iter()
            .map(|&s| betweenness_partial(g, s..(s + BETWEENNESS_CHUNK).min(n)))
            .collect()
    });
    finish_betweenness(n, partials)
}
