//! Exact earth mover's distance between finite discrete distributions.
//!
//! The solver is a primal transportation simplex over the tree-structured
//! basis of the transportation polytope. It returns a true vertex optimum,
//! so costs are exact (no entropic smoothing) and plans have at most
//! n + n' - 1 positive entries.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::CostMatrix;

/// Mass entries above -MASS_TOLERANCE and below zero are clamped to zero;
/// anything more negative is rejected.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `emd` inputs must sum to 1 within this window before the internal
/// renormalization to an exact sum of 1.
pub const MASS_SUM_TOLERANCE: f64 = 1e-6;

/// An optimal solution of the transportation problem: the plan matrix and
/// its total cost. Row sums equal the source masses and column sums the
/// target masses (within 1e-8); zero-mass points contribute zero rows or
/// columns.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub plan: Array2<f64>,
    pub cost: f64,
}

/// Clamps tiny negative masses to zero and rescales the vector to sum
/// exactly 1. Unlike [`emd`], which requires inputs already near 1, this
/// accepts any positive total, so it can normalize raw weight vectors.
pub fn validate_distribution(masses: &[f64]) -> Result<Vec<f64>> {
    let (clamped, sum) = clamp_nonnegative(masses)?;
    if sum <= 0.0 {
        return Err(Error::InvalidMass {
            message: "all masses are zero".into(),
        });
    }
    Ok(clamped.into_iter().map(|m| m / sum).collect())
}

/// Solves the transportation problem between two probability mass vectors
/// under the given ground costs, returning an optimal vertex plan.
///
/// Masses must each sum to 1 within [`MASS_SUM_TOLERANCE`]; they are
/// renormalized to sum exactly 1 before solving. Zero-mass points are
/// dropped for the solve and reinserted as zero rows/columns of the plan.
pub fn emd(source: &[f64], target: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    let n = source.len();
    let m = target.len();
    let values = &cost.values;
    if values.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "cost matrix rows vs source points".into(),
            expected: n,
            actual: values.nrows(),
        });
    }
    if values.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "cost matrix columns vs target points".into(),
            expected: m,
            actual: values.ncols(),
        });
    }
    for ((i, j), &c) in values.indexed_iter() {
        if !c.is_finite() {
            return Err(Error::InvalidCost {
                message: format!("non-finite cost at ({i}, {j})"),
            });
        }
        if c < 0.0 {
            return Err(Error::InvalidCost {
                message: format!("negative cost {c} at ({i}, {j})"),
            });
        }
    }
    let a = prepare_masses(source, "source")?;
    let b = prepare_masses(target, "target")?;

    let keep_rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let keep_cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let sub_a: Vec<f64> = keep_rows.iter().map(|&i| a[i]).collect();
    let sub_b: Vec<f64> = keep_cols.iter().map(|&j| b[j]).collect();
    let mut sub_cost = Array2::zeros((keep_rows.len(), keep_cols.len()));
    for (si, &i) in keep_rows.iter().enumerate() {
        for (sj, &j) in keep_cols.iter().enumerate() {
            sub_cost[[si, sj]] = values[[i, j]];
        }
    }

    let (sub_plan, total) = solve_transport(&sub_a, &sub_b, &sub_cost)?;

    let mut plan = Array2::zeros((n, m));
    for (si, &i) in keep_rows.iter().enumerate() {
        for (sj, &j) in keep_cols.iter().enumerate() {
            plan[[i, j]] = sub_plan[[si, sj]];
        }
    }
    Ok(TransportPlan { plan, cost: total })
}

fn clamp_nonnegative(masses: &[f64]) -> Result<(Vec<f64>, f64)> {
    if masses.is_empty() {
        return Err(Error::InvalidMass {
            message: "empty mass vector".into(),
        });
    }
    let mut clamped = Vec::with_capacity(masses.len());
    for (i, &mass) in masses.iter().enumerate() {
        if !mass.is_finite() {
            return Err(Error::InvalidMass {
                message: format!("non-finite mass at index {i}"),
            });
        }
        if mass < -MASS_TOLERANCE {
            return Err(Error::InvalidMass {
                message: format!("negative mass {mass} at index {i}"),
            });
        }
        clamped.push(mass.max(0.0));
    }
    let sum = clamped.iter().sum();
    Ok((clamped, sum))
}

fn prepare_masses(masses: &[f64], side: &str) -> Result<Vec<f64>> {
    let (clamped, sum) = clamp_nonnegative(masses)?;
    if (sum - 1.0).abs() > MASS_SUM_TOLERANCE {
        return Err(Error::InvalidMass {
            message: format!("{side} masses sum to {sum}, expected 1 within {MASS_SUM_TOLERANCE}"),
        });
    }
    Ok(clamped.into_iter().map(|m| m / sum).collect())
}

#[derive(Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Row(usize),
    Col(usize),
}

/// Transportation simplex over strictly positive, balanced masses.
///
/// The basis always holds exactly n + m - 1 cells forming a spanning tree of
/// the bipartite supply/demand graph. Pivoting uses the most-negative
/// reduced cost; after a long run of degenerate pivots it falls back to
/// Bland's rule, which cannot cycle.
fn solve_transport(
    supply: &[f64],
    demand: &[f64],
    cost: &Array2<f64>,
) -> Result<(Array2<f64>, f64)> {
    let n = supply.len();
    let m = demand.len();
    debug_assert!(n > 0 && m > 0);

    let mut cells = northwest_corner(supply, demand);
    debug_assert_eq!(cells.len(), n + m - 1);

    let max_cost = cost.iter().cloned().fold(0.0f64, f64::max);
    let opt_eps = 1e-12 * max_cost.max(1.0);

    let mut bland = false;
    let mut degenerate_streak = 0usize;
    let iteration_cap = 1000 + 100 * n * m;

    let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_cells: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];

    for _ in 0..iteration_cap {
        for r in row_cells.iter_mut() {
            r.clear();
        }
        for c in col_cells.iter_mut() {
            c.clear();
        }
        for (idx, cell) in cells.iter().enumerate() {
            row_cells[cell.row].push(idx);
            col_cells[cell.col].push(idx);
        }
        compute_duals(&cells, &row_cells, &col_cells, cost, &mut u, &mut v)?;

        let entering = find_entering(cost, &u, &v, opt_eps, bland);
        let (er, ec) = match entering {
            Some(cell) => cell,
            None => {
                let mut plan = Array2::zeros((n, m));
                let mut total = 0.0;
                for cell in &cells {
                    plan[[cell.row, cell.col]] = cell.flow;
                    total += cell.flow * cost[[cell.row, cell.col]];
                }
                return Ok((plan, total));
            }
        };

        let path = tree_path(&cells, &row_cells, &col_cells, er, ec, n, m)?;

        // Cells at even positions on the path lose flow when the entering
        // cell gains; theta is the bottleneck among them.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &ci) in path.iter().enumerate() {
            if k % 2 != 0 {
                continue;
            }
            let cell = &cells[ci];
            let better = cell.flow < theta
                || (cell.flow == theta
                    && leaving != usize::MAX
                    && (cell.row, cell.col) < (cells[leaving].row, cells[leaving].col));
            if better {
                theta = cell.flow;
                leaving = ci;
            }
        }
        debug_assert!(leaving != usize::MAX);

        for (k, &ci) in path.iter().enumerate() {
            if k % 2 == 0 {
                cells[ci].flow = (cells[ci].flow - theta).max(0.0);
            } else {
                cells[ci].flow += theta;
            }
        }
        cells.swap_remove(leaving);
        cells.push(Cell {
            row: er,
            col: ec,
            flow: theta,
        });

        if theta <= 1e-15 {
            degenerate_streak += 1;
            if degenerate_streak > n + m {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
        }
    }
    Err(Error::Solver {
        message: format!("iteration cap exceeded on a {n} x {m} instance"),
    })
}

/// Initial basic feasible solution with exactly n + m - 1 cells.
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<Cell> {
    let n = supply.len();
    let m = demand.len();
    let mut remaining_supply = supply.to_vec();
    let mut remaining_demand = demand.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let flow = remaining_supply[i].min(remaining_demand[j]);
        cells.push(Cell {
            row: i,
            col: j,
            flow,
        });
        remaining_supply[i] -= flow;
        remaining_demand[j] -= flow;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if i == n - 1 {
            j += 1;
        } else if j == m - 1 || remaining_supply[i] == 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

/// Solves u_i + v_j = c_ij over the basis tree, anchored at u_0 = 0.
fn compute_duals(
    cells: &[Cell],
    row_cells: &[Vec<usize>],
    col_cells: &[Vec<usize>],
    cost: &Array2<f64>,
    u: &mut [f64],
    v: &mut [f64],
) -> Result<()> {
    u.fill(f64::NAN);
    v.fill(f64::NAN);
    u[0] = 0.0;
    let mut stack = vec![Node::Row(0)];
    while let Some(node) = stack.pop() {
        match node {
            Node::Row(i) => {
                for &ci in &row_cells[i] {
                    let j = cells[ci].col;
                    if v[j].is_nan() {
                        v[j] = cost[[i, j]] - u[i];
                        stack.push(Node::Col(j));
                    }
                }
            }
            Node::Col(j) => {
                for &ci in &col_cells[j] {
                    let i = cells[ci].row;
                    if u[i].is_nan() {
                        u[i] = cost[[i, j]] - v[j];
                        stack.push(Node::Row(i));
                    }
                }
            }
        }
    }
    if u.iter().any(|x| x.is_nan()) || v.iter().any(|x| x.is_nan()) {
        return Err(Error::Solver {
            message: "basis does not span the bipartite graph".into(),
        });
    }
    Ok(())
}

fn find_entering(
    cost: &Array2<f64>,
    u: &[f64],
    v: &[f64],
    opt_eps: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_slack = -opt_eps;
    for i in 0..u.len() {
        for j in 0..v.len() {
            let slack = cost[[i, j]] - u[i] - v[j];
            if slack < best_slack {
                if bland {
                    return Some((i, j));
                }
                best_slack = slack;
                best = Some((i, j));
            }
        }
    }
    best
}

/// Unique path of basic cells between row `er` and column `ec` in the basis
/// tree. The first cell touches column `ec`; cells alternate column/row
/// attachments back to row `er`.
fn tree_path(
    cells: &[Cell],
    row_cells: &[Vec<usize>],
    col_cells: &[Vec<usize>],
    er: usize,
    ec: usize,
    n: usize,
    m: usize,
) -> Result<Vec<usize>> {
    let mut row_parent = vec![usize::MAX; n];
    let mut col_parent = vec![usize::MAX; m];
    let mut row_seen = vec![false; n];
    let mut col_seen = vec![false; m];
    row_seen[er] = true;
    let mut queue = std::collections::VecDeque::from([Node::Row(er)]);
    while let Some(node) = queue.pop_front() {
        if col_seen[ec] {
            break;
        }
        match node {
            Node::Row(i) => {
                for &ci in &row_cells[i] {
                    let j = cells[ci].col;
                    if !col_seen[j] {
                        col_seen[j] = true;
                        col_parent[j] = ci;
                        queue.push_back(Node::Col(j));
                    }
                }
            }
            Node::Col(j) => {
                for &ci in &col_cells[j] {
                    let i = cells[ci].row;
                    if !row_seen[i] {
                        row_seen[i] = true;
                        row_parent[i] = ci;
                        queue.push_back(Node::Row(i));
                    }
                }
            }
        }
    }
    if !col_seen[ec] {
        return Err(Error::Solver {
            message: "entering cell is not connected to the basis tree".into(),
        });
    }

    let mut path = Vec::new();
    let mut node = Node::Col(ec);
    loop {
        match node {
            Node::Col(j) => {
                let ci = col_parent[j];
                path.push(ci);
                let i = cells[ci].row;
                if i == er {
                    return Ok(path);
                }
                node = Node::Row(i);
            }
            Node::Row(i) => {
                let ci = row_parent[i];
                path.push(ci);
                node = Node::Col(cells[ci].col);
            }
        }
    }
}
