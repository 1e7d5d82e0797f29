//! Exact discrete optimal transport on minibatch-sized instances.
//!
//! The linear program `min <gamma, C>` over couplings with prescribed
//! marginals is solved with the network simplex method on the bipartite
//! transportation graph: north-west-corner initialization, Bland's rule
//! for pivot selection so degenerate instances cannot cycle. A
//! permutation-enumeration oracle ([`brute_force_ot`]) is provided for
//! cross-checking small uniform instances.

use ndarray::Array2;

use crate::error::{Error, Result};

/// How far a weight vector's sum may deviate from 1 before construction fails.
pub const MEASURE_SUM_TOL: f64 = 1e-6;

/// Feasibility tolerance on coupling marginals and total mass.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A probability distribution over a finite set of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from nonnegative weights. Sums within
    /// [`MEASURE_SUM_TOL`] of 1 are renormalized so downstream arithmetic
    /// sees an exact distribution; larger deviations are rejected.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {i} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {i} is negative ({w})")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {sum}, outside 1 +/- {MEASURE_SUM_TOL}"
            )));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights })
    }

    /// The uniform distribution on `n` atoms.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every atom carries mass 1/n (within `tol`).
    pub fn is_uniform(&self, tol: f64) -> bool {
        let u = 1.0 / self.n() as f64;
        self.weights.iter().all(|&w| (w - u).abs() <= tol)
    }
}

/// A dense matrix of pairwise ground costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Array2<f64>,
}

impl CostMatrix {
    /// Validates that every entry is finite and nonnegative.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidInput("empty cost matrix".into()));
        }
        for ((i, j), &c) in entries.indexed_iter() {
            if !c.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "cost[{i}][{j}] is not finite ({c})"
                )));
            }
            if c < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cost[{i}][{j}] is negative ({c})"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n1 = rows.len();
        let n2 = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n2) {
            return Err(Error::ShapeMismatch("ragged cost rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let entries = Array2::from_shape_vec((n1, n2), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(entries)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.entries.nrows(), self.entries.ncols())
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }
}

/// A transport plan: nonnegative mass per source/target pair, total mass 1.
///
/// Feasibility against a specific pair of marginals is a property of the
/// solver output, measured by [`marginal_violation`]; arbitrary plans (for
/// diagnostics) only need nonnegativity and unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    entries: Array2<f64>,
}

impl Coupling {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidInput("empty coupling".into()));
        }
        let mut total = 0.0;
        for ((i, j), &g) in entries.indexed_iter() {
            if !g.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "coupling[{i}][{j}] is not finite"
                )));
            }
            if g < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "coupling[{i}][{j}] is negative ({g})"
                )));
            }
            total += g;
        }
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::InvalidInput(format!(
                "coupling mass is {total}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.entries.nrows(), self.entries.ncols())
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Sum of each row: the mass leaving each source atom.
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.rows().into_iter().map(|r| r.sum()).collect()
    }

    /// Sum of each column: the mass arriving at each target atom.
    pub fn col_sums(&self) -> Vec<f64> {
        self.entries.columns().into_iter().map(|c| c.sum()).collect()
    }
}

/// `<gamma, C>`: the total transport cost of a plan under a ground cost.
pub fn transport_cost(gamma: &Coupling, cost: &CostMatrix) -> Result<f64> {
    if gamma.shape() != cost.shape() {
        return Err(Error::ShapeMismatch(format!(
            "coupling {:?} vs cost {:?}",
            gamma.shape(),
            cost.shape()
        )));
    }
    Ok(gamma
        .entries
        .iter()
        .zip(cost.entries.iter())
        .map(|(&g, &c)| g * c)
        .sum())
}

/// Largest absolute deviation of the plan's marginals from the prescribed
/// measures: `(max_i |row_i - mu_i|, max_j |col_j - nu_j|)`.
pub fn marginal_violation(
    gamma: &Coupling,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<(f64, f64)> {
    let (r, c) = gamma.shape();
    if r != mu.n() || c != nu.n() {
        return Err(Error::ShapeMismatch(format!(
            "coupling {:?} vs measures ({}, {})",
            gamma.shape(),
            mu.n(),
            nu.n()
        )));
    }
    let row = gamma
        .row_sums()
        .iter()
        .zip(mu.weights())
        .map(|(s, w)| (s - w).abs())
        .fold(0.0, f64::max);
    let col = gamma
        .col_sums()
        .iter()
        .zip(nu.weights())
        .map(|(s, w)| (s - w).abs())
        .fold(0.0, f64::max);
    Ok((row, col))
}

/// Exact minimum of `<gamma, C>` over couplings with uniform marginals,
/// found by enumerating all permutation plans. Only square uniform
/// instances up to 8 atoms are supported; optimal vertices of that
/// polytope are scaled permutation matrices, so enumeration is exhaustive.
pub fn brute_force_ot(
    cost: &CostMatrix,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    let n = mu.n();
    if nu.n() != n {
        return Err(Error::UnsupportedInstance(format!(
            "non-square instance {}x{}",
            n,
            nu.n()
        )));
    }
    if n > 8 {
        return Err(Error::UnsupportedInstance(format!(
            "support size {n} exceeds 8"
        )));
    }
    if !mu.is_uniform(1e-9) || !nu.is_uniform(1e-9) {
        return Err(Error::UnsupportedInstance("non-uniform marginals".into()));
    }
    if cost.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "cost {:?} vs {n} atoms",
            cost.shape()
        )));
    }

    let c = cost.entries();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum();
        if total < best {
            best = total;
        }
    });
    Ok(best / n as f64)
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Solves the discrete OT linear program exactly and returns an optimal
/// basic feasible coupling (at most `n1 + n2 - 1` nonzero entries). Ties
/// between optimal vertices are broken by the pivot order, so only the
/// objective value is contractual.
pub fn solve_exact_ot(
    cost: &CostMatrix,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<Coupling> {
    let (n1, n2) = cost.shape();
    if n1 != mu.n() || n2 != nu.n() {
        return Err(Error::ShapeMismatch(format!(
            "cost {:?} vs measures ({}, {})",
            cost.shape(),
            mu.n(),
            nu.n()
        )));
    }
    let mut simplex = TransportSimplex::new(cost.entries(), mu.weights(), nu.weights());
    simplex.run()?;
    let entries = simplex.into_plan();
    Coupling::new(entries)
}

/// A basic cell of the transportation tableau. `alive` distinguishes slots
/// freed by past pivots (arc ids are stable so adjacency lists stay valid).
#[derive(Debug, Clone, Copy)]
struct BasicArc {
    row: usize,
    col: usize,
    flow: f64,
    alive: bool,
}

/// Network simplex specialized to the dense transportation problem.
///
/// Nodes `0..m` are supply atoms and `m..m+n` demand atoms; the basis is a
/// spanning tree of m + n - 1 arcs. Each pivot recomputes the duals by a
/// tree sweep (O(m+n)), scans row-major for the first nonbasic cell with
/// reduced cost below `-tol` (Bland's rule), and pushes flow around the
/// unique cycle the entering arc closes.
struct TransportSimplex<'a> {
    cost: &'a Array2<f64>,
    m: usize,
    n: usize,
    arcs: Vec<BasicArc>,
    free: Vec<usize>,
    /// Basic arc ids incident to each node (rows then cols).
    adjacency: Vec<Vec<usize>>,
    /// Arc id occupying cell (i, j), if basic.
    cell_arc: Array2<Option<usize>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    tol: f64,
}

impl<'a> TransportSimplex<'a> {
    fn new(cost: &'a Array2<f64>, supply: &[f64], demand: &[f64]) -> Self {
        let m = supply.len();
        let n = demand.len();
        let max_abs = cost.iter().fold(0.0f64, |acc, &c| acc.max(c.abs()));
        // Relative pivot threshold: far above the dual-computation rounding
        // noise (~(m+n)*eps*|c|), far below any improvement worth taking,
        // and it scales with the costs so k*C pivots exactly like C.
        let tol = 1e-11 * max_abs;
        Self {
            cost,
            m,
            n,
            arcs: Vec::with_capacity(m + n),
            free: Vec::new(),
            adjacency: vec![Vec::new(); m + n],
            cell_arc: Array2::from_elem((m, n), None),
            supply: supply.to_vec(),
            demand: demand.to_vec(),
            tol,
        }
    }

    fn add_arc(&mut self, row: usize, col: usize, flow: f64) -> usize {
        let arc = BasicArc {
            row,
            col,
            flow,
            alive: true,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.arcs[id] = arc;
                id
            }
            None => {
                self.arcs.push(arc);
                self.arcs.len() - 1
            }
        };
        self.adjacency[row].push(id);
        self.adjacency[self.m + col].push(id);
        self.cell_arc[(row, col)] = Some(id);
        id
    }

    fn remove_arc(&mut self, id: usize) {
        let arc = self.arcs[id];
        self.arcs[id].alive = false;
        self.adjacency[arc.row].retain(|&a| a != id);
        self.adjacency[self.m + arc.col].retain(|&a| a != id);
        self.cell_arc[(arc.row, arc.col)] = None;
        self.free.push(id);
    }

    /// North-west-corner rule: walks the tableau once, saturating one
    /// marginal per step, and always yields exactly m + n - 1 basic cells
    /// (zero-flow cells included on degenerate ties).
    fn initialize(&mut self) {
        let mut remaining_supply = self.supply.clone();
        let mut remaining_demand = self.demand.clone();
        let (mut i, mut j) = (0, 0);
        loop {
            let amount = remaining_supply[i].min(remaining_demand[j]).max(0.0);
            self.add_arc(i, j, amount);
            remaining_supply[i] -= amount;
            remaining_demand[j] -= amount;
            if i == self.m - 1 && j == self.n - 1 {
                break;
            }
            if j == self.n - 1 {
                i += 1;
            } else if i == self.m - 1 {
                j += 1;
            } else if remaining_supply[i] <= remaining_demand[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    /// Node potentials from the spanning tree: u[0] = 0, then each basic
    /// arc (i, j) forces u[i] + v[j] = c[i][j].
    fn compute_duals(&self, u: &mut [f64], v: &mut [f64]) -> Result<()> {
        let total = self.m + self.n;
        let mut known = vec![false; total];
        let mut stack = Vec::with_capacity(total);
        u[0] = 0.0;
        known[0] = true;
        stack.push(0);
        let mut visited = 1usize;
        while let Some(node) = stack.pop() {
            for &id in &self.adjacency[node] {
                let arc = self.arcs[id];
                let (row_node, col_node) = (arc.row, self.m + arc.col);
                let other = if node == row_node { col_node } else { row_node };
                if known[other] {
                    continue;
                }
                if other >= self.m {
                    v[other - self.m] = self.cost[(arc.row, arc.col)] - u[arc.row];
                } else {
                    u[other] = self.cost[(arc.row, arc.col)] - v[arc.col];
                }
                known[other] = true;
                visited += 1;
                stack.push(other);
            }
        }
        if visited != total {
            return Err(Error::Numeric(
                "transport basis lost spanning-tree connectivity".into(),
            ));
        }
        Ok(())
    }

    /// First nonbasic cell (row-major) with reduced cost below -tol.
    fn entering_arc(&self, u: &[f64], v: &[f64]) -> Option<(usize, usize)> {
        for i in 0..self.m {
            let ui = u[i];
            for j in 0..self.n {
                if self.cell_arc[(i, j)].is_none() && self.cost[(i, j)] - ui - v[j] < -self.tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Arc ids on the tree path from row node `i` to column node `m + j`.
    /// Together with the entering cell they form the unique pivot cycle.
    fn tree_path(&self, from_row: usize, to_col: usize) -> Result<Vec<usize>> {
        let total = self.m + self.n;
        let start = from_row;
        let goal = self.m + to_col;
        let mut parent_arc: Vec<Option<usize>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &id in &self.adjacency[node] {
                let arc = self.arcs[id];
                let other = if node == arc.row {
                    self.m + arc.col
                } else {
                    arc.row
                };
                if !seen[other] {
                    seen[other] = true;
                    parent_arc[other] = Some(id);
                    queue.push_back(other);
                }
            }
        }
        if !seen[goal] {
            return Err(Error::Numeric("pivot cycle not found in basis tree".into()));
        }
        let mut path = Vec::new();
        let mut node = goal;
        while node != start {
            let id = parent_arc[node].expect("path node without parent");
            path.push(id);
            let arc = self.arcs[id];
            node = if node == self.m + arc.col {
                arc.row
            } else {
                self.m + arc.col
            };
        }
        Ok(path)
    }

    fn run(&mut self) -> Result<()> {
        self.initialize();
        let mut u = vec![0.0; self.m];
        let mut v = vec![0.0; self.n];
        // Bland's rule terminates finitely; the cap only guards against
        // numeric corruption of the basis.
        let max_pivots = 1000 * (self.m + self.n) * 8 + 10_000;
        for _ in 0..max_pivots {
            self.compute_duals(&mut u, &mut v)?;
            let Some((ei, ej)) = self.entering_arc(&u, &v) else {
                return Ok(());
            };
            // Path from the column node back to the row node of the
            // entering cell; walking it away from the column end gives
            // alternating -,+,-,... signs (the entering arc itself is +).
            let path = self.tree_path(ei, ej)?;

            // Minimum-ratio test over the minus arcs (even path positions);
            // exact-flow ties break to the lowest (row, col), completing
            // Bland's rule.
            let mut theta = f64::INFINITY;
            let mut leaving: Option<usize> = None;
            for (k, &id) in path.iter().enumerate() {
                if k % 2 != 0 {
                    continue;
                }
                let arc = self.arcs[id];
                let take = match leaving {
                    None => true,
                    Some(cur) => {
                        let cur_arc = self.arcs[cur];
                        arc.flow < theta
                            || (arc.flow == theta
                                && (arc.row, arc.col) < (cur_arc.row, cur_arc.col))
                    }
                };
                if take {
                    theta = arc.flow;
                    leaving = Some(id);
                }
            }
            let leaving = leaving
                .ok_or_else(|| Error::Numeric("pivot cycle without a leaving arc".into()))?;
            let theta = theta.max(0.0);

            for (k, &id) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.arcs[id].flow = (self.arcs[id].flow - theta).max(0.0);
                } else {
                    self.arcs[id].flow += theta;
                }
            }
            self.remove_arc(leaving);
            self.add_arc(ei, ej, theta);
        }
        Err(Error::Numeric(
            "network simplex exceeded its pivot budget".into(),
        ))
    }

    /// Dense plan from the final basis; nonbasic cells are exactly zero and
    /// rounding residue on basic cells is clamped at zero.
    fn into_plan(self) -> Array2<f64> {
        let mut plan = Array2::zeros((self.m, self.n));
        for arc in &self.arcs {
            if arc.alive {
                plan[(arc.row, arc.col)] = arc.flow.max(0.0);
            }
        }
        plan
    }
}
