//! Word-vector converter: denoising, frequency reweighting, and sentence-
//! level common-component removal, composed as one per-word transformation.
//!
//! Stages are fitted once on a vocabulary (and, for common-component
//! removal, a sentence corpus) and then applied to any vector of the same
//! dimension. Every fit is deterministic: moment accumulation folds
//! fixed-size chunks in order, so thread count never changes the output.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::embeddings::{EmbeddingTable, UnigramModel};
use crate::error::{Error, Result};
use crate::geometry::WordVector;
use crate::linalg::symmetric_eigen;

pub const DEFAULT_DENOISER_COMPONENTS: usize = 3;
pub const DEFAULT_CONCEPTOR_ALPHA: f64 = 2.0;
pub const DEFAULT_SIF_A: f64 = 1e-3;
pub const DEFAULT_REMOVAL_COMPONENTS: usize = 5;

const MOMENT_CHUNK: usize = 1024;

/// Affine map `v -> matrix * (v - offset)`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub matrix: Array2<f64>,
    pub offset: Array1<f64>,
}

impl Projection {
    pub fn identity(dimension: usize) -> Self {
        Projection {
            matrix: Array2::eye(dimension),
            offset: Array1::zeros(dimension),
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, vector: ArrayView1<f64>) -> WordVector {
        let mut shifted = vector.to_owned();
        shifted -= &self.offset;
        self.matrix.dot(&shifted)
    }
}

/// Word weighting `a / (a + p(word))`: unseen words score 1, frequent words
/// shrink toward 0.
#[derive(Clone, Debug)]
pub struct SifWeighting {
    pub unigram: UnigramModel,
    pub a: f64,
}

impl SifWeighting {
    pub fn weight(&self, token: &str) -> f64 {
        sif_weight(&self.unigram, token, self.a)
    }
}

pub fn sif_weight(unigram: &UnigramModel, token: &str, a: f64) -> f64 {
    debug_assert!(a > 0.0 && a.is_finite());
    a / (a + unigram.probability(token))
}

/// Denoising strategies for the first converter stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Denoiser {
    /// Recenter at the vocabulary mean, remove the top principal directions.
    TopComponents,
    /// Soft shrinkage of high-energy directions of the uncentered
    /// correlation matrix (conceptor negation).
    Conceptor,
    /// Standardize each coordinate to zero mean and unit deviation.
    DimensionNormalization,
}

/// Which converter stages to run, addressable by short tags: `none`, `a`,
/// `c`, `n` select a denoiser alone; `aw`, `awr`, `cwr`, `nwr` add
/// frequency weighting (`w`) and common-component removal (`r`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineSpec {
    pub denoiser: Option<Denoiser>,
    pub weighting: bool,
    pub removal: bool,
}

impl PipelineSpec {
    pub fn parse(tag: &str) -> Result<Self> {
        let spec = match tag {
            "none" => PipelineSpec {
                denoiser: None,
                weighting: false,
                removal: false,
            },
            "a" => PipelineSpec {
                denoiser: Some(Denoiser::TopComponents),
                weighting: false,
                removal: false,
            },
            "c" => PipelineSpec {
                denoiser: Some(Denoiser::Conceptor),
                weighting: false,
                removal: false,
            },
            "n" => PipelineSpec {
                denoiser: Some(Denoiser::DimensionNormalization),
                weighting: false,
                removal: false,
            },
            "aw" => PipelineSpec {
                denoiser: Some(Denoiser::TopComponents),
                weighting: true,
                removal: false,
            },
            "awr" => PipelineSpec {
                denoiser: Some(Denoiser::TopComponents),
                weighting: true,
                removal: true,
            },
            "cwr" => PipelineSpec {
                denoiser: Some(Denoiser::Conceptor),
                weighting: true,
                removal: true,
            },
            "nwr" => PipelineSpec {
                denoiser: Some(Denoiser::DimensionNormalization),
                weighting: true,
                removal: true,
            },
            other => {
                return Err(Error::InvalidArgument {
                    message: format!(
                        "unknown pipeline tag {other:?}; expected one of \
                         none, a, c, n, aw, awr, cwr, nwr"
                    ),
                })
            }
        };
        Ok(spec)
    }

    pub fn tag(&self) -> &'static str {
        match (self.denoiser, self.weighting, self.removal) {
            (None, false, false) => "none",
            (Some(Denoiser::TopComponents), false, false) => "a",
            (Some(Denoiser::Conceptor), false, false) => "c",
            (Some(Denoiser::DimensionNormalization), false, false) => "n",
            (Some(Denoiser::TopComponents), true, false) => "aw",
            (Some(Denoiser::TopComponents), true, true) => "awr",
            (Some(Denoiser::Conceptor), true, true) => "cwr",
            (Some(Denoiser::DimensionNormalization), true, true) => "nwr",
            _ => "custom",
        }
    }
}

/// Stage hyperparameters with their standard defaults.
#[derive(Clone, Copy, Debug)]
pub struct Hyperparameters {
    pub denoiser_components: usize,
    pub conceptor_alpha: f64,
    pub sif_a: f64,
    pub removal_components: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            denoiser_components: DEFAULT_DENOISER_COMPONENTS,
            conceptor_alpha: DEFAULT_CONCEPTOR_ALPHA,
            sif_a: DEFAULT_SIF_A,
            removal_components: DEFAULT_REMOVAL_COMPONENTS,
        }
    }
}

/// Fitted converter stages, ready to apply to any same-dimension vector.
#[derive(Clone, Debug)]
pub struct ConverterParams {
    pub denoiser: Option<Projection>,
    pub weighting: Option<SifWeighting>,
    pub removal: Option<Projection>,
    pub tag: String,
}

impl ConverterParams {
    /// Runs the fitted stages on one word: denoise, scale by the word
    /// weight, remove common components.
    pub fn apply(&self, token: &str, vector: ArrayView1<f64>) -> WordVector {
        let mut out = match &self.denoiser {
            Some(p) => p.apply(vector),
            None => vector.to_owned(),
        };
        if let Some(w) = &self.weighting {
            out *= w.weight(token);
        }
        if let Some(p) = &self.removal {
            out = p.apply(out.view());
        }
        out
    }
}

/// Top principal directions of a vector collection, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct PrincipalDirections {
    pub directions: Vec<Array1<f64>>,
    pub eigenvalues: Vec<f64>,
}

/// Mean vector and second-moment matrix `(1/N) sum v v^T`, symmetrized.
fn moments(vectors: &[WordVector], dimension: usize) -> (Array2<f64>, Array1<f64>) {
    let count = vectors.len() as f64;
    let parts: Vec<(Array2<f64>, Array1<f64>)> = vectors
        .par_chunks(MOMENT_CHUNK)
        .map(|chunk| {
            let mut x = Array2::zeros((chunk.len(), dimension));
            for (row, v) in chunk.iter().enumerate() {
                x.row_mut(row).assign(v);
            }
            (x.t().dot(&x), x.sum_axis(Axis(0)))
        })
        .collect();
    let mut second = Array2::zeros((dimension, dimension));
    let mut sum = Array1::zeros(dimension);
    for (s, c) in parts {
        second += &s;
        sum += &c;
    }
    second /= count;
    second = (&second + &second.t()) * 0.5;
    (second, sum / count)
}

fn check_uniform_dimension(vectors: &[WordVector], context: &str) -> Result<usize> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Empty {
            context: context.to_string(),
        })?
        .len();
    for v in vectors {
        if v.len() != first {
            return Err(Error::DimensionMismatch {
                context: context.to_string(),
                expected: first,
                actual: v.len(),
            });
        }
    }
    Ok(first)
}

/// Orients a direction so its largest-magnitude coordinate is positive,
/// breaking magnitude ties toward the earliest index.
fn canonicalize_sign(direction: &mut Array1<f64>) {
    let mut best = 0;
    for i in 1..direction.len() {
        if direction[i].abs() > direction[best].abs() {
            best = i;
        }
    }
    if direction[best] < 0.0 {
        direction.mapv_inplace(|x| -x);
    }
}

/// Computes the top `count` principal directions of `vectors`. Centered,
/// these are eigenvectors of the covariance about the mean; uncentered, of
/// the raw second-moment matrix. `count` is capped at the dimension.
pub fn principal_directions(
    vectors: &[WordVector],
    count: usize,
    center: bool,
) -> Result<PrincipalDirections> {
    let dimension = check_uniform_dimension(vectors, "principal directions input")?;
    let (mut second, mean) = moments(vectors, dimension);
    if center {
        for i in 0..dimension {
            for j in 0..dimension {
                second[[i, j]] -= mean[i] * mean[j];
            }
        }
    }
    let eigen = symmetric_eigen(&second);
    let keep = count.min(dimension);
    let mut directions = Vec::with_capacity(keep);
    let mut eigenvalues = Vec::with_capacity(keep);
    for k in 0..keep {
        let mut dir = eigen.vectors.column(k).to_owned();
        canonicalize_sign(&mut dir);
        directions.push(dir);
        eigenvalues.push(eigen.values[k]);
    }
    Ok(PrincipalDirections {
        directions,
        eigenvalues,
    })
}

fn subtract_outer(a: &mut Array2<f64>, u: &Array1<f64>) {
    let d = u.len();
    for i in 0..d {
        let ui = u[i];
        if ui == 0.0 {
            continue;
        }
        for j in 0..d {
            a[[i, j]] -= ui * u[j];
        }
    }
}

/// Denoiser that recenters at the vocabulary mean and projects out the top
/// `components` principal directions of the centered vectors.
pub fn fit_abtt(table: &EmbeddingTable, components: usize) -> Result<Projection> {
    if table.is_empty() {
        return Err(Error::Empty {
            context: format!("embedding table {:?}", table.name()),
        });
    }
    let top = principal_directions(table.vectors(), components, true)?;
    let mut matrix = Array2::eye(table.dimension());
    for dir in &top.directions {
        subtract_outer(&mut matrix, dir);
    }
    let (_, mean) = moments(table.vectors(), table.dimension());
    Ok(Projection {
        matrix,
        offset: mean,
    })
}

/// Conceptor-negation denoiser. From the uncentered correlation matrix
/// `R = (1/|V|) sum w w^T` each eigendirection with energy `lambda` is
/// shrunk by `beta / (lambda + beta)` where `beta = 1 / alpha^2`, so
/// high-energy directions are suppressed and low-energy ones pass through.
pub fn fit_conceptor(table: &EmbeddingTable, alpha: f64) -> Result<Projection> {
    if table.is_empty() {
        return Err(Error::Empty {
            context: format!("embedding table {:?}", table.name()),
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument {
            message: format!("conceptor aperture must be positive and finite, got {alpha}"),
        });
    }
    let dimension = table.dimension();
    let (correlation, _) = moments(table.vectors(), dimension);
    let eigen = symmetric_eigen(&correlation);
    let beta = alpha.powi(-2);
    let mut matrix = Array2::zeros((dimension, dimension));
    for k in 0..dimension {
        let factor = beta / (eigen.values[k] + beta);
        if !factor.is_finite() {
            return Err(Error::NonFinite {
                context: format!("conceptor shrink factor for eigenvalue {}", eigen.values[k]),
            });
        }
        let column = eigen.vectors.column(k);
        for i in 0..dimension {
            let fi = factor * column[i];
            if fi == 0.0 {
                continue;
            }
            for j in 0..dimension {
                matrix[[i, j]] += fi * column[j];
            }
        }
    }
    Ok(Projection {
        matrix,
        offset: Array1::zeros(dimension),
    })
}

/// Denoiser that standardizes every coordinate: recenter at the mean,
/// divide by the per-coordinate population standard deviation.
pub fn fit_dimnorm(table: &EmbeddingTable) -> Result<Projection> {
    if table.is_empty() {
        return Err(Error::Empty {
            context: format!("embedding table {:?}", table.name()),
        });
    }
    let dimension = table.dimension();
    let count = table.len() as f64;
    let (_, mean) = moments(table.vectors(), dimension);
    let mut sq = Array1::<f64>::zeros(dimension);
    for v in table.vectors() {
        for j in 0..dimension {
            let d = v[j] - mean[j];
            sq[j] += d * d;
        }
    }
    let mut matrix = Array2::zeros((dimension, dimension));
    for j in 0..dimension {
        let sigma = (sq[j] / count).sqrt();
        if sigma <= 1e-12 {
            return Err(Error::ZeroVariance {
                context: format!("coordinate {j} of embedding table {:?}", table.name()),
            });
        }
        matrix[[j, j]] = 1.0 / sigma;
    }
    Ok(Projection {
        matrix,
        offset: mean,
    })
}

/// Common-component removal fitted on sentence vectors. Each sentence is
/// embedded as the weighted sum of its denoised word vectors (unknown words
/// skipped, all-unknown sentences dropped); the top `components` directions
/// of the raw, uncentered sentence second moment are then projected out.
pub fn fit_ccr(
    sentences: &[Vec<String>],
    table: &EmbeddingTable,
    denoiser: Option<&Projection>,
    weighting: Option<&SifWeighting>,
    components: usize,
) -> Result<Projection> {
    let dimension = table.dimension();
    let mut transformed: HashMap<&str, WordVector> = HashMap::new();
    let mut sentence_vectors = Vec::new();
    for sentence in sentences {
        let mut sum = Array1::<f64>::zeros(dimension);
        let mut used = 0usize;
        for token in sentence {
            let Some(vector) = table.lookup(token) else {
                continue;
            };
            let base = transformed
                .entry(token.as_str())
                .or_insert_with(|| match denoiser {
                    Some(p) => p.apply(vector.view()),
                    None => vector.clone(),
                });
            match weighting {
                Some(w) => sum.scaled_add(w.weight(token), base),
                None => sum += &*base,
            }
            used += 1;
        }
        if used > 0 {
            sentence_vectors.push(sum);
        }
    }
    if sentence_vectors.is_empty() {
        return Err(Error::Empty {
            context: "common-component fit corpus (no sentence had known words)".into(),
        });
    }
    let top = principal_directions(&sentence_vectors, components, false)?;
    let mut matrix = Array2::eye(dimension);
    for dir in &top.directions {
        subtract_outer(&mut matrix, dir);
    }
    Ok(Projection {
        matrix,
        offset: Array1::zeros(dimension),
    })
}

/// Fits every stage requested by `spec` against a vocabulary, and a
/// sentence corpus when common-component removal is on.
pub fn fit_pipeline(
    spec: &PipelineSpec,
    table: &EmbeddingTable,
    unigram: Option<&UnigramModel>,
    sentences: Option<&[Vec<String>]>,
    hp: &Hyperparameters,
) -> Result<ConverterParams> {
    let denoiser = match spec.denoiser {
        None => None,
        Some(Denoiser::TopComponents) => Some(fit_abtt(table, hp.denoiser_components)?),
        Some(Denoiser::Conceptor) => Some(fit_conceptor(table, hp.conceptor_alpha)?),
        Some(Denoiser::DimensionNormalization) => Some(fit_dimnorm(table)?),
    };
    let weighting = if spec.weighting {
        let unigram = unigram.ok_or_else(|| Error::InvalidArgument {
            message: format!("pipeline tag {:?} needs a word frequency model", spec.tag()),
        })?;
        if !(hp.sif_a.is_finite() && hp.sif_a > 0.0) {
            return Err(Error::InvalidArgument {
                message: format!(
                    "weighting parameter must be positive and finite, got {}",
                    hp.sif_a
                ),
            });
        }
        Some(SifWeighting {
            unigram: unigram.clone(),
            a: hp.sif_a,
        })
    } else {
        None
    };
    let removal = if spec.removal {
        let sentences = sentences.ok_or_else(|| Error::InvalidArgument {
            message: format!(
                "pipeline tag {:?} needs a sentence corpus to fit common-component removal",
                spec.tag()
            ),
        })?;
        Some(fit_ccr(
            sentences,
            table,
            denoiser.as_ref(),
            weighting.as_ref(),
            hp.removal_components,
        )?)
    } else {
        None
    };
    Ok(ConverterParams {
        denoiser,
        weighting,
        removal,
        tag: spec.tag().to_string(),
    })
}

/// Applies fitted converter stages to every word of a table, preserving
/// token order. The result keeps the source table's name and dimension.
pub fn convert(table: &EmbeddingTable, params: &ConverterParams) -> Result<EmbeddingTable> {
    if let Some(p) = &params.denoiser {
        if p.dimension() != table.dimension() {
            return Err(Error::DimensionMismatch {
                context: "denoiser vs embedding table".into(),
                expected: table.dimension(),
                actual: p.dimension(),
            });
        }
    }
    if let Some(p) = &params.removal {
        if p.dimension() != table.dimension() {
            return Err(Error::DimensionMismatch {
                context: "common-component removal vs embedding table".into(),
                expected: table.dimension(),
                actual: p.dimension(),
            });
        }
    }
    let tokens = table.tokens();
    let vectors = table.vectors();
    let converted: Vec<WordVector> = (0..table.len())
        .into_par_iter()
        .map(|i| params.apply(&tokens[i], vectors[i].view()))
        .collect();
    let mut out = EmbeddingTable::new(table.name(), table.dimension());
    for (token, vector) in tokens.iter().zip(converted) {
        out.insert(token, vector)?;
    }
    Ok(out)
}
