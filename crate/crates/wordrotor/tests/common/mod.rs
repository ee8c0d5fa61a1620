//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here deliberately avoids the library's own linear algebra
//! and solver code paths: assignments are checked by brute force or the
//! Hungarian algorithm, transport by basis enumeration, eigenpairs by
//! certified Jacobi rotations, and inverses by Gauss-Jordan elimination.

#![allow(dead_code)]

use itertools::Itertools;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordrotor::embeddings::EmbeddingTable;
use wordrotor::geometry::WordVector;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random table with tokens w0..w{n-1} and coordinates uniform in [-1, 1].
/// Vectors are rejected while their norm is below 1e-3 so every word is
/// usable by every measure.
pub fn random_table(rng: &mut ChaCha8Rng, tokens: usize, dim: usize, name: &str) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(name, dim);
    for k in 0..tokens {
        let vector = loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-3 {
                break v;
            }
        };
        table
            .insert(&format!("w{k}"), WordVector::from(vector))
            .unwrap();
    }
    table
}

pub fn random_sentence(
    rng: &mut ChaCha8Rng,
    table: &EmbeddingTable,
    max_len: usize,
) -> Vec<String> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| table.tokens()[rng.random_range(0..table.len())].clone())
        .collect()
}

/// Minimum assignment cost over all permutations. Only viable for n <= 8.
pub fn brute_force_assignment(cost: &Array2<f64>) -> f64 {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| cost[[i, j]])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum-cost perfect matching on a square matrix: the O(n^3) shortest
/// augmenting path algorithm with row/column potentials.
pub fn hungarian(cost: &Array2<f64>) -> f64 {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        if matched[j] > 0 {
            total += cost[[matched[j] - 1, j - 1]];
        }
    }
    total
}

/// Exact transport cost for masses given in twelfths: every 1/12 unit
/// becomes one point, and the resulting 12 x 12 assignment problem is
/// solved exactly. Valid because an equal-mass transport problem has a
/// permutation optimum.
pub fn twelfths_emd_oracle(a_units: &[usize], b_units: &[usize], cost: &Array2<f64>) -> f64 {
    assert_eq!(a_units.iter().sum::<usize>(), 12);
    assert_eq!(b_units.iter().sum::<usize>(), 12);
    let mut rows = Vec::with_capacity(12);
    for (i, &units) in a_units.iter().enumerate() {
        rows.extend(std::iter::repeat_n(i, units));
    }
    let mut cols = Vec::with_capacity(12);
    for (j, &units) in b_units.iter().enumerate() {
        cols.extend(std::iter::repeat_n(j, units));
    }
    let expanded = Array2::from_shape_fn((12, 12), |(r, c)| cost[[rows[r], cols[c]]]);
    hungarian(&expanded) / 12.0
}

/// Exact transport cost by enumerating every spanning-tree basis of the
/// bipartite supply/demand graph and keeping the cheapest feasible one.
/// Exponential, so only for n + m <= 8 or so.
pub fn basis_enumeration_emd(a: &[f64], b: &[f64], cost: &Array2<f64>) -> f64 {
    let n = a.len();
    let m = b.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    for basis in cells.iter().combinations(n + m - 1) {
        if let Some(total) = solve_basis(&basis, a, b, cost) {
            best = best.min(total);
        }
    }
    assert!(best.is_finite(), "no feasible basis found");
    best
}

/// Flows of one candidate basis via leaf elimination. None when the cell
/// set contains a cycle or implies a negative flow.
fn solve_basis(basis: &[&(usize, usize)], a: &[f64], b: &[f64], cost: &Array2<f64>) -> Option<f64> {
    let n = a.len();
    let m = b.len();
    let mut live: Vec<(usize, usize)> = basis.iter().map(|&&c| c).collect();
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut total = 0.0;
    while !live.is_empty() {
        let mut row_degree = vec![0usize; n];
        let mut col_degree = vec![0usize; m];
        for &(i, j) in &live {
            row_degree[i] += 1;
            col_degree[j] += 1;
        }
        let position = live
            .iter()
            .position(|&(i, j)| row_degree[i] == 1 || col_degree[j] == 1)?;
        let (i, j) = live.swap_remove(position);
        let flow = if row_degree[i] == 1 {
            let f = supply[i];
            supply[i] = 0.0;
            demand[j] -= f;
            f
        } else {
            let f = demand[j];
            demand[j] = 0.0;
            supply[i] -= f;
            f
        };
        if flow < -1e-12 {
            return None;
        }
        total += flow.max(0.0) * cost[[i, j]];
    }
    let leftover = supply
        .iter()
        .chain(demand.iter())
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    if leftover > 1e-9 {
        return None;
    }
    Some(total)
}

/// Independent eigensolver for small symmetric matrices: classic Jacobi
/// rotations on the largest off-diagonal entry. The result is certified
/// before returning (residuals, orthonormality), so its correctness does
/// not rest on the iteration itself. Returns the top `count` eigenpairs
/// in descending eigenvalue order.
pub fn oracle_eigen(matrix: &Array2<f64>, count: usize) -> (Vec<f64>, Vec<Array1<f64>>) {
    let d = matrix.nrows();
    assert_eq!(d, matrix.ncols());
    let scale = matrix.iter().map(|x| x.abs()).fold(1.0, f64::max);
    for i in 0..d {
        for j in 0..d {
            assert!(
                (matrix[[i, j]] - matrix[[j, i]]).abs() <= 1e-9 * scale,
                "input not symmetric at ({i}, {j})"
            );
        }
    }
    let mut a = matrix.clone();
    let mut q = Array2::eye(d);
    for _ in 0..100 * d * d + 100 {
        let mut p = 0;
        let mut r = 1;
        let mut best = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                if a[[i, j]].abs() > best {
                    best = a[[i, j]].abs();
                    p = i;
                    r = j;
                }
            }
        }
        if best <= 1e-14 * scale {
            break;
        }
        let tau = (a[[r, r]] - a[[p, p]]) / (2.0 * a[[p, r]]);
        let t = tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..d {
            let akp = a[[k, p]];
            let akr = a[[k, r]];
            a[[k, p]] = c * akp - s * akr;
            a[[k, r]] = s * akp + c * akr;
        }
        for k in 0..d {
            let apk = a[[p, k]];
            let ark = a[[r, k]];
            a[[p, k]] = c * apk - s * ark;
            a[[r, k]] = s * apk + c * ark;
        }
        for k in 0..d {
            let qkp = q[[k, p]];
            let qkr = q[[k, r]];
            q[[k, p]] = c * qkp - s * qkr;
            q[[k, r]] = s * qkp + c * qkr;
        }
    }
    let mut pairs: Vec<(f64, Array1<f64>)> = (0..d)
        .map(|j| (a[[j, j]], q.column(j).to_owned()))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    for (i, (lambda, v)) in pairs.iter().enumerate() {
        let residual = &matrix.dot(v) - &(v * *lambda);
        let err = residual.dot(&residual).sqrt();
        assert!(err <= 1e-9 * scale, "eigenpair {i} residual {err}");
        assert!(
            (v.dot(v).sqrt() - 1.0).abs() <= 1e-9,
            "eigenvector {i} not unit"
        );
        for (_, w) in pairs.iter().skip(i + 1) {
            assert!(v.dot(w).abs() <= 1e-9, "eigenvectors not orthogonal");
        }
    }
    pairs.into_iter().take(count.min(d)).unzip()
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(matrix: &Array2<f64>) -> Array2<f64> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols());
    let mut a = matrix.clone();
    let mut inv = Array2::eye(n);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[[row, col]].abs() > a[[pivot, col]].abs() {
                pivot = row;
            }
        }
        assert!(a[[pivot, col]].abs() > 1e-12, "singular matrix");
        if pivot != col {
            for j in 0..n {
                a.swap([pivot, j], [col, j]);
                inv.swap([pivot, j], [col, j]);
            }
        }
        let lead = a[[col, col]];
        for j in 0..n {
            a[[col, j]] /= lead;
            inv[[col, j]] /= lead;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[[row, col]];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[[row, j]] -= factor * a[[col, j]];
                inv[[row, j]] -= factor * inv[[col, j]];
            }
        }
    }
    inv
}

/// Draws 12 unit masses into `bins` nonnegative twelfth counts.
pub fn random_twelfths(rng: &mut ChaCha8Rng, bins: usize) -> Vec<usize> {
    let mut units = vec![0usize; bins];
    for _ in 0..12 {
        units[rng.random_range(0..bins)] += 1;
    }
    units
}

pub fn units_to_masses(units: &[usize]) -> Vec<f64> {
    units.iter().map(|&u| u as f64 / 12.0).collect()
}

/// Vocabulary mean recomputed with plain loops.
pub fn naive_mean(table: &EmbeddingTable) -> Array1<f64> {
    let d = table.dimension();
    let mut mean = Array1::zeros(d);
    for v in table.vectors() {
        for j in 0..d {
            mean[j] += v[j];
        }
    }
    mean / table.len() as f64
}

/// Raw second moment (1/n) sum of v v^T recomputed with plain loops.
pub fn naive_second_moment(vectors: &[WordVector], d: usize) -> Array2<f64> {
    let mut m = Array2::zeros((d, d));
    for v in vectors {
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] += v[i] * v[j];
            }
        }
    }
    m / vectors.len() as f64
}

/// Population covariance recomputed with plain loops.
pub fn naive_covariance(table: &EmbeddingTable) -> Array2<f64> {
    let d = table.dimension();
    let mean = naive_mean(table);
    let mut m = Array2::zeros((d, d));
    for v in table.vectors() {
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] += (v[i] - mean[i]) * (v[j] - mean[j]);
            }
        }
    }
    m / table.len() as f64
}

/// I minus the outer products of the top `k` eigenvectors, computed with
/// the certified Jacobi oracle. None when the spectral gap at the cutoff
/// is too small for the subspace to be well determined.
pub fn oracle_removal_projector(moment: &Array2<f64>, k: usize) -> Option<Array2<f64>> {
    let d = moment.nrows();
    let (values, vectors) = oracle_eigen(moment, (k + 1).min(d));
    if k < d {
        let scale = values[0].abs().max(1e-12);
        if (values[k - 1] - values[k]) / scale < 1e-2 {
            return None;
        }
    }
    let mut projector = Array2::eye(d);
    for v in vectors.iter().take(k) {
        for i in 0..d {
            for j in 0..d {
                projector[[i, j]] -= v[i] * v[j];
            }
        }
    }
    Some(projector)
}
