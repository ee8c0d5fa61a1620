//! Norm/direction decomposition, word-level similarity primitives, and
//! ground-metric cost matrices.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Dense word vector. Finiteness and length are enforced by the owning
/// [`crate::embeddings::EmbeddingTable`].
pub type WordVector = Array1<f64>;

/// Norms at or below this are treated as zero: the direction is numerically
/// meaningless and the token must be skipped.
pub const ZERO_NORM_TOLERANCE: f64 = 1e-12;

/// A vector split into its length (word importance) and its unit direction
/// (word meaning).
#[derive(Clone, Debug)]
pub struct NormDirection {
    pub norm: f64,
    pub direction: Array1<f64>,
}

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Splits `v` into `(norm, direction)` with `norm * direction == v`.
pub fn decompose(v: ArrayView1<f64>) -> Result<NormDirection> {
    let n = norm(v);
    if n <= ZERO_NORM_TOLERANCE {
        return Err(Error::ZeroNorm {
            context: "decompose".into(),
        });
    }
    Ok(NormDirection {
        norm: n,
        direction: v.mapv(|x| x / n),
    })
}

pub fn dot_product(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    check_dims("dot_product", v.len(), w.len())?;
    Ok(v.dot(&w))
}

pub fn euclidean_distance(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    check_dims("euclidean_distance", v.len(), w.len())?;
    let mut sum = 0.0;
    for (a, b) in v.iter().zip(w.iter()) {
        let d = a - b;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Cosine of the angle between `v` and `w`, clamped to `[-1, 1]` so that
/// accumulated rounding can never push `1 - cos` outside `[0, 2]`.
pub fn cosine_similarity(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    check_dims("cosine_similarity", v.len(), w.len())?;
    let nv = norm(v);
    let nw = norm(w);
    if nv <= ZERO_NORM_TOLERANCE || nw <= ZERO_NORM_TOLERANCE {
        return Err(Error::ZeroNorm {
            context: "cosine_similarity".into(),
        });
    }
    Ok((v.dot(&w) / (nv * nw)).clamp(-1.0, 1.0))
}

pub fn cosine_distance(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    Ok(1.0 - cosine_similarity(v, w)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cosine,
}

/// Pairwise ground costs between two point sets, tagged with the metric that
/// produced them. Entries are finite and nonnegative; cosine entries are
/// additionally bounded by 2.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    pub values: Array2<f64>,
    pub metric: Metric,
}

/// Builds the `n x n'` matrix of `metric(a_i, b_j)` costs.
pub fn cost_matrix(a: &[WordVector], b: &[WordVector], metric: Metric) -> Result<CostMatrix> {
    let mut values = Array2::zeros((a.len(), b.len()));
    for (i, va) in a.iter().enumerate() {
        for (j, vb) in b.iter().enumerate() {
            let cost = match metric {
                Metric::Euclidean => euclidean_distance(va.view(), vb.view()),
                Metric::Cosine => cosine_distance(va.view(), vb.view()),
            };
            values[[i, j]] = cost.map_err(|e| locate(e, i, j))?;
        }
    }
    Ok(CostMatrix { values, metric })
}

fn check_dims(context: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context: context.into(),
            expected,
            actual,
        });
    }
    Ok(())
}

fn locate(e: Error, i: usize, j: usize) -> Error {
    let at = format!(" at cost_matrix entry ({i}, {j})");
    match e {
        Error::ZeroNorm { context } => Error::ZeroNorm {
            context: context + &at,
        },
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        } => Error::DimensionMismatch {
            context: context + &at,
            expected,
            actual,
        },
        other => other,
    }
}
