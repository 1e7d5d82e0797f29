//! Shared test oracles. Everything here is deliberately independent of the
//! solver implementations it cross-checks: plain enumeration and naive
//! arithmetic only.

use ndarray::Array2;

/// Exhaustive transportation-LP oracle: enumerates every basis (subset of
/// m + n - 1 cells forming a spanning tree), solves its flows by leaf
/// peeling, and returns the minimum objective over feasible vertices.
/// Exponential, so callers keep instances at 3x4 or smaller.
pub fn enumerate_vertices_ot(cost: &Array2<f64>, supply: &[f64], demand: &[f64]) -> f64 {
    let m = supply.len();
    let n = demand.len();
    let cells: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    let basis_size = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(basis_size);
    combinations(&cells, basis_size, &mut chosen, 0, &mut |basis| {
        if let Some(obj) = basis_objective(cost, supply, demand, basis) {
            if obj < best {
                best = obj;
            }
        }
    });
    best
}

fn combinations<'a>(
    cells: &'a [(usize, usize)],
    k: usize,
    chosen: &mut Vec<(usize, usize)>,
    start: usize,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    for idx in start..=cells.len().saturating_sub(needed) {
        chosen.push(cells[idx]);
        combinations(cells, k, chosen, idx + 1, visit);
        chosen.pop();
    }
}

/// Solves the basic flows for one candidate basis by repeatedly fixing the
/// unique arc of a degree-one node. Returns the objective when the basis is
/// a tree and the flows are nonnegative, `None` otherwise.
fn basis_objective(
    cost: &Array2<f64>,
    supply: &[f64],
    demand: &[f64],
    basis: &[(usize, usize)],
) -> Option<f64> {
    let m = supply.len();
    let n = demand.len();
    let mut remaining_supply = supply.to_vec();
    let mut remaining_demand = demand.to_vec();
    let mut active: Vec<bool> = vec![true; basis.len()];
    let mut degree = vec![0usize; m + n];
    for &(i, j) in basis {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut objective = 0.0;
    for _ in 0..basis.len() {
        let mut fixed = None;
        for (k, &(i, j)) in basis.iter().enumerate() {
            if !active[k] {
                continue;
            }
            if degree[i] == 1 {
                fixed = Some((k, remaining_supply[i]));
                break;
            }
            if degree[m + j] == 1 {
                fixed = Some((k, remaining_demand[j]));
                break;
            }
        }
        // No leaf while arcs remain means the basis contains a cycle.
        let (k, flow) = fixed?;
        if flow < -1e-12 {
            return None;
        }
        let (i, j) = basis[k];
        remaining_supply[i] -= flow;
        remaining_demand[j] -= flow;
        degree[i] -= 1;
        degree[m + j] -= 1;
        active[k] = false;
        objective += flow.max(0.0) * cost[(i, j)];
    }
    if remaining_supply.iter().any(|r| r.abs() > 1e-9)
        || remaining_demand.iter().any(|r| r.abs() > 1e-9)
    {
        return None;
    }
    Some(objective)
}

#[allow(dead_code)]
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
