//! Wasserstein-1 distance between small discrete measures.
//!
//! [`wasserstein1`] solves the transportation problem exactly with the
//! transportation simplex (least-cost initial basis, potentials for pricing).
//! Degenerate pivots are allowed; after a run of them the solver switches to
//! Bland's rule so it cannot cycle. All tie-breaking is by lowest index, so the
//! result is a pure function of the input.
//!
//! [`wasserstein1_approx`] is an entropic (Sinkhorn) estimate for large
//! supports. It is opt-in and reports an error bound with its value.

use alloc::{format, string::ToString, vec, vec::Vec};

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::error::{Error, Result};

/// Allowed deviation of a measure's total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probability mass on a finite set of node ids. Zero-mass points are pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    support: Vec<usize>,
    mass: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} masses",
                support.len(),
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidMeasure(format!("mass {m} is not a finite non-negative number")));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("support points are not distinct".to_string()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        let (support, mass) = support
            .into_iter()
            .zip(mass)
            .filter(|&(_, m)| m > 0.0)
            .unzip();
        Ok(Self { support, mass })
    }

    pub fn dirac(point: usize) -> Self {
        Self {
            support: vec![point],
            mass: vec![1.0],
        }
    }

    pub fn uniform(support: Vec<usize>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".to_string()));
        }
        let m = 1.0 / support.len() as f64;
        let mass = vec![m; support.len()];
        Self::new(support, mass)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Mass at `point`, zero if it is not in the support.
    pub fn mass_at(&self, point: usize) -> f64 {
        self.support
            .iter()
            .position(|&p| p == point)
            .map_or(0.0, |k| self.mass[k])
    }
}

/// Row-major ground costs between two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "cost data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidCost {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn check_dims(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::DimensionMismatch {
                rows: self.rows,
                cols: self.cols,
                expected_rows: rows,
                expected_cols: cols,
            });
        }
        Ok(())
    }
}

/// One entry of a transport plan, indexed by position in the two supports.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// An optimal plan and its cost.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Transport {
    pub cost: f64,
    /// Non-zero flows in row-major order.
    pub coupling: Vec<Flow>,
    pub pivots: usize,
}

/// Exact W1 between `mu` and `nu` under `cost` (rows index `mu`'s support).
pub fn wasserstein1(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostMatrix) -> Result<f64> {
    optimal_transport(mu, nu, cost).map(|t| t.cost)
}

pub fn optimal_transport(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<Transport> {
    cost.check_dims(mu.len(), nu.len())?;
    solve_transport(mu.mass(), nu.mass(), cost)
}

/// Transportation simplex on balanced, strictly positive supplies and demands.
pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &CostMatrix) -> Result<Transport> {
    cost.check_dims(supply.len(), demand.len())?;
    if supply.is_empty() || demand.is_empty() {
        return Err(Error::InvalidMeasure("empty support".to_string()));
    }
    let mut simplex = Simplex::new(supply, demand, cost);
    let pivots = simplex.optimize()?;
    let mut coupling: Vec<Flow> = simplex
        .cells
        .iter()
        .zip(&simplex.flow)
        .filter(|(_, &f)| f > 0.0)
        .map(|(&(i, j), &f)| Flow {
            from: i,
            to: j,
            mass: f,
        })
        .collect();
    coupling.sort_by_key(|f| (f.from, f.to));
    let total = coupling.iter().map(|f| f.mass * cost.get(f.from, f.to)).sum();
    Ok(Transport {
        cost: total,
        coupling,
        pivots,
    })
}

const NONE: usize = usize::MAX;

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a CostMatrix,
    // Basis tree over m row nodes followed by n column nodes.
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    incident: Vec<Vec<usize>>,
    potential: Vec<f64>,
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    stack: Vec<usize>,
}

impl<'a> Simplex<'a> {
    /// Least-cost initial basis. Every pick closes exactly one line (the last
    /// closes both), which yields a spanning tree of m + n - 1 cells.
    fn new(supply: &[f64], demand: &[f64], cost: &'a CostMatrix) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut order: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        order.sort_by(|a, b| {
            cost.get(a.0, a.1)
                .total_cmp(&cost.get(b.0, b.1))
                .then(a.cmp(b))
        });

        let mut left_supply = supply.to_vec();
        let mut left_demand = demand.to_vec();
        let mut row_open = vec![true; m];
        let mut col_open = vec![true; n];
        let (mut rows_left, mut cols_left) = (m, n);
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        for (i, j) in order {
            if rows_left + cols_left == 0 {
                break;
            }
            if !row_open[i] || !col_open[j] {
                continue;
            }
            let x = left_supply[i].min(left_demand[j]);
            cells.push((i, j));
            flow.push(x);
            if rows_left == 1 && cols_left == 1 {
                row_open[i] = false;
                col_open[j] = false;
                rows_left = 0;
                cols_left = 0;
            } else if cols_left == 1 || (rows_left > 1 && left_supply[i] <= left_demand[j]) {
                left_demand[j] -= x;
                left_supply[i] = 0.0;
                row_open[i] = false;
                rows_left -= 1;
            } else {
                left_supply[i] -= x;
                left_demand[j] = 0.0;
                col_open[j] = false;
                cols_left -= 1;
            }
        }
        debug_assert_eq!(cells.len(), m + n - 1);

        let mut incident = vec![Vec::new(); m + n];
        for (k, &(i, j)) in cells.iter().enumerate() {
            incident[i].push(k);
            incident[m + j].push(k);
        }
        Self {
            m,
            n,
            cost,
            cells,
            flow,
            incident,
            potential: vec![0.0; m + n],
            parent: vec![NONE; m + n],
            parent_cell: vec![NONE; m + n],
            depth: vec![0; m + n],
            stack: Vec::with_capacity(m + n),
        }
    }

    /// Row potentials u and column potentials v with u_i + v_j = c_ij on the
    /// basis, plus parent pointers rooted at row 0.
    fn compute_potentials(&mut self) {
        self.parent.fill(NONE);
        self.parent[0] = 0;
        self.parent_cell[0] = NONE;
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        self.stack.clear();
        self.stack.push(0);
        while let Some(node) = self.stack.pop() {
            for &k in &self.incident[node] {
                let (i, j) = self.cells[k];
                let other = if node < self.m { self.m + j } else { i };
                if self.parent[other] != NONE {
                    continue;
                }
                self.parent[other] = node;
                self.parent_cell[other] = k;
                self.depth[other] = self.depth[node] + 1;
                self.potential[other] = self.cost.get(i, j) - self.potential[node];
                self.stack.push(other);
            }
        }
    }

    fn optimize(&mut self) -> Result<usize> {
        let (m, n) = (self.m, self.n);
        let tol = 1e-12 * (1.0 + self.cost.max());
        let max_pivots = 10_000 + 50 * (m + n) * (m + n);
        let mut bland = false;
        let mut degenerate_run = 0;
        let mut path_a = Vec::new();
        let mut path_b = Vec::new();

        for pivot in 0..max_pivots {
            self.compute_potentials();

            let mut entering = None;
            let mut best = -tol;
            'price: for i in 0..m {
                let u = self.potential[i];
                for j in 0..n {
                    let r = self.cost.get(i, j) - u - self.potential[m + j];
                    if r < best {
                        entering = Some((i, j));
                        if bland {
                            break 'price;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                return Ok(pivot);
            };

            // Tree path from row `ei` to column `ej`; cells alternate -, +, -, ...
            path_a.clear();
            path_b.clear();
            let (mut a, mut b) = (ei, m + ej);
            while a != b {
                if self.depth[a] >= self.depth[b] {
                    path_a.push(self.parent_cell[a]);
                    a = self.parent[a];
                } else {
                    path_b.push(self.parent_cell[b]);
                    b = self.parent[b];
                }
            }
            path_a.extend(path_b.iter().rev());

            let mut leaving = NONE;
            let mut theta = f64::INFINITY;
            for &k in path_a.iter().step_by(2) {
                let f = self.flow[k];
                let better = f < theta
                    || (f == theta && {
                        let (li, lj) = self.cells[leaving];
                        let (ki, kj) = self.cells[k];
                        ki * n + kj < li * n + lj
                    });
                if better {
                    theta = f;
                    leaving = k;
                }
            }

            for (pos, &k) in path_a.iter().enumerate() {
                if pos % 2 == 0 {
                    self.flow[k] = (self.flow[k] - theta).max(0.0);
                } else {
                    self.flow[k] += theta;
                }
            }

            let (li, lj) = self.cells[leaving];
            self.incident[li].retain(|&k| k != leaving);
            self.incident[m + lj].retain(|&k| k != leaving);
            self.cells[leaving] = (ei, ej);
            self.flow[leaving] = theta;
            self.incident[ei].push(leaving);
            self.incident[m + ej].push(leaving);

            if theta <= tol {
                degenerate_run += 1;
                if degenerate_run > m + n {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
        Err(Error::NotConverged(max_pivots))
    }
}

/// Entropic estimate of W1 returned by [`wasserstein1_approx`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ApproxW1 {
    /// Transport cost of the regularized plan.
    pub value: f64,
    /// `|value - W1|` is at most this: `reg * ln(m n)` plus the residual
    /// marginal violation times the largest cost.
    pub error_bound: f64,
    pub iterations: usize,
}

/// Log-domain Sinkhorn with geometric annealing of the regularization down to
/// `regularization`. Returns [`Error::NotConverged`] if the marginals are not
/// matched within `max_iters` total sweeps.
pub fn wasserstein1_approx(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    regularization: f64,
    max_iters: usize,
) -> Result<ApproxW1> {
    if !(regularization > 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "regularization must be positive, got {regularization}"
        )));
    }
    let (m, n) = (mu.len(), nu.len());
    cost.check_dims(m, n)?;
    let log_a: Vec<f64> = mu.mass().iter().map(|&x| libm::log(x)).collect();
    let log_b: Vec<f64> = nu.mass().iter().map(|&x| libm::log(x)).collect();
    let cmax = cost.max();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut eps = cmax.max(regularization);
    let mut iterations = 0;
    let mut buf = vec![0.0; m.max(n)];

    loop {
        let final_stage = eps <= regularization;
        let stage_tol = if final_stage { 1e-10 } else { 1e-6 };
        let mut err = f64::INFINITY;
        while iterations < max_iters {
            iterations += 1;
            for i in 0..m {
                for j in 0..n {
                    buf[j] = (g[j] - cost.get(i, j)) / eps;
                }
                f[i] = eps * (log_a[i] - log_sum_exp(&buf[..n]));
            }
            for j in 0..n {
                for i in 0..m {
                    buf[i] = (f[i] - cost.get(i, j)) / eps;
                }
                g[j] = eps * (log_b[j] - log_sum_exp(&buf[..m]));
            }
            err = 0.0;
            for (i, (&fi, &a)) in f.iter().zip(mu.mass()).enumerate() {
                let row: f64 = (0..n)
                    .map(|j| libm::exp((fi + g[j] - cost.get(i, j)) / eps))
                    .sum();
                err += (row - a).abs();
            }
            if err <= stage_tol {
                break;
            }
        }
        if err > stage_tol {
            return Err(Error::NotConverged(max_iters));
        }
        if final_stage {
            let mut value = 0.0;
            for (i, &fi) in f.iter().enumerate() {
                for (j, &gj) in g.iter().enumerate() {
                    let c = cost.get(i, j);
                    value += libm::exp((fi + gj - c) / eps) * c;
                }
            }
            return Ok(ApproxW1 {
                value,
                error_bound: eps * libm::log((m * n) as f64) + err * cmax,
                iterations,
            });
        }
        eps = (eps * 0.5).max(regularization);
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(xs.iter().map(|&x| libm::exp(x - max)).sum::<f64>())
}
