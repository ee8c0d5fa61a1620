//! Sentence similarity from optimal transport over word vectors, with
//! additive compositional baselines.
//!
//! A sentence becomes a bag of word vectors (one point per occurrence).
//! Word Rotator's Distance moves norm-proportional mass between unit
//! directions under cosine cost; Word Mover's Distance moves uniform mass
//! between raw vectors under Euclidean cost, optionally reweighted by word
//! frequency. Both solve the exact transportation problem.

use std::io::Write;

use crate::converter::SifWeighting;
use crate::embeddings::{EmbeddingTable, StopwordSet};
use crate::error::{Error, Result};
use crate::geometry::{
    cosine_similarity, cost_matrix, norm, CostMatrix, Metric, WordVector, ZERO_NORM_TOLERANCE,
};
use crate::transport::{emd, validate_distribution, TransportPlan};

/// What to do when a sentence word is missing from the table or has a
/// zero-norm vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OovPolicy {
    /// Drop the word from the bag and count it as skipped.
    #[default]
    SkipToken,
    /// Fail the pair.
    Error,
}

/// Sentence preprocessing switches shared by all measures.
#[derive(Clone, Debug, Default)]
pub struct ScoreOptions {
    pub remove_stopwords: bool,
    pub stopwords: Option<StopwordSet>,
    pub oov_policy: OovPolicy,
    pub lowercase: bool,
}

impl ScoreOptions {
    /// Rotation-based scoring keeps every word by default.
    pub fn wrd_default() -> Self {
        ScoreOptions::default()
    }

    /// Mover-based scoring conventionally removes stopwords first.
    pub fn wmd_default(stopwords: StopwordSet) -> Self {
        ScoreOptions {
            remove_stopwords: true,
            stopwords: Some(stopwords),
            ..ScoreOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.remove_stopwords && self.stopwords.is_none() {
            return Err(Error::InvalidArgument {
                message: "stopword removal requested without a stopword list".into(),
            });
        }
        Ok(())
    }
}

/// A sentence as retained word vectors, one entry per surviving occurrence.
#[derive(Clone, Debug)]
pub struct SentenceEmbeddingBag {
    pub tokens: Vec<String>,
    pub vectors: Vec<WordVector>,
    pub skipped: usize,
}

/// Looks up each word of `tokens` and keeps the usable occurrences in
/// order. Lowercasing happens before stopword matching, which happens
/// before table lookup. Missing and zero-norm words follow the policy;
/// stopword drops are counted as skipped. An empty result is an error.
pub fn embed_sentence(
    tokens: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<SentenceEmbeddingBag> {
    options.validate()?;
    let mut bag = SentenceEmbeddingBag {
        tokens: Vec::new(),
        vectors: Vec::new(),
        skipped: 0,
    };
    for raw in tokens {
        let token = if options.lowercase {
            raw.to_lowercase()
        } else {
            raw.clone()
        };
        if options.remove_stopwords {
            let stopwords = options.stopwords.as_ref().expect("validated above");
            if stopwords.contains(&token) {
                bag.skipped += 1;
                continue;
            }
        }
        let vector = match table.lookup(&token) {
            Some(v) => v,
            None => match options.oov_policy {
                OovPolicy::SkipToken => {
                    bag.skipped += 1;
                    continue;
                }
                OovPolicy::Error => {
                    return Err(Error::OutOfVocabulary { token });
                }
            },
        };
        if norm(vector.view()) <= ZERO_NORM_TOLERANCE {
            match options.oov_policy {
                OovPolicy::SkipToken => {
                    bag.skipped += 1;
                    continue;
                }
                OovPolicy::Error => {
                    return Err(Error::ZeroNorm {
                        context: format!("vector for word {token:?}"),
                    });
                }
            }
        }
        bag.tokens.push(token);
        bag.vectors.push(vector.clone());
    }
    if bag.vectors.is_empty() {
        return Err(Error::EmptyBag {
            context: "no usable words left in sentence".into(),
        });
    }
    Ok(bag)
}

/// One row of a transport plan in word terms.
#[derive(Clone, Debug)]
pub struct AlignmentRow {
    pub source: String,
    pub target: String,
    pub mass: f64,
    pub cost: f64,
}

/// A solved sentence pair: the distance, the optimal plan, and the token
/// bags it aligned.
#[derive(Clone, Debug)]
pub struct PairAlignment {
    pub distance: f64,
    pub plan: TransportPlan,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub costs: CostMatrix,
}

impl PairAlignment {
    /// Positive-mass plan entries in row-major order.
    pub fn alignment_rows(&self) -> Vec<AlignmentRow> {
        let mut rows = Vec::new();
        for ((i, j), &mass) in self.plan.plan.indexed_iter() {
            if mass > 0.0 {
                rows.push(AlignmentRow {
                    source: self.source_tokens[i].clone(),
                    target: self.target_tokens[j].clone(),
                    mass,
                    cost: self.costs.values[[i, j]],
                });
            }
        }
        rows
    }

    /// Tab-separated rows `source target mass cost` with six decimals.
    pub fn write_alignment_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for row in self.alignment_rows() {
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}",
                row.source, row.target, row.mass, row.cost
            )?;
        }
        Ok(())
    }
}

fn solve_pair(
    source: SentenceEmbeddingBag,
    target: SentenceEmbeddingBag,
    source_masses: Vec<f64>,
    target_masses: Vec<f64>,
    metric: Metric,
) -> Result<PairAlignment> {
    let costs = cost_matrix(&source.vectors, &target.vectors, metric)?;
    let plan = emd(&source_masses, &target_masses, &costs)?;
    Ok(PairAlignment {
        distance: plan.cost,
        plan,
        source_tokens: source.tokens,
        target_tokens: target.tokens,
        costs,
    })
}

fn norm_masses(bag: &SentenceEmbeddingBag) -> Result<Vec<f64>> {
    validate_distribution(
        &bag.vectors
            .iter()
            .map(|v| norm(v.view()))
            .collect::<Vec<_>>(),
    )
}

fn uniform_masses(bag: &SentenceEmbeddingBag) -> Vec<f64> {
    vec![1.0 / bag.vectors.len() as f64; bag.vectors.len()]
}

fn sif_masses(bag: &SentenceEmbeddingBag, weighting: &SifWeighting) -> Result<Vec<f64>> {
    validate_distribution(
        &bag.tokens
            .iter()
            .map(|t| weighting.weight(t))
            .collect::<Vec<_>>(),
    )
}

/// Word Rotator's Distance: mass proportional to vector norm moves between
/// unit directions at cosine-distance cost. Ranges over [0, 2]; a pair of
/// single-word sentences scores exactly the cosine distance of the words.
pub fn wrd(
    source: &[String],
    target: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<PairAlignment> {
    let source = embed_sentence(source, table, options)?;
    let target = embed_sentence(target, table, options)?;
    let source_masses = norm_masses(&source)?;
    let target_masses = norm_masses(&target)?;
    solve_pair(source, target, source_masses, target_masses, Metric::Cosine)
}

/// Word Mover's Distance: uniform mass per occurrence moves between raw
/// vectors at Euclidean cost.
pub fn wmd(
    source: &[String],
    target: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<PairAlignment> {
    let source = embed_sentence(source, table, options)?;
    let target = embed_sentence(target, table, options)?;
    let source_masses = uniform_masses(&source);
    let target_masses = uniform_masses(&target);
    solve_pair(
        source,
        target,
        source_masses,
        target_masses,
        Metric::Euclidean,
    )
}

/// Word Mover's Distance with frequency-derived masses: each occurrence
/// carries its word weight, renormalized over the sentence.
pub fn wmd_sif(
    source: &[String],
    target: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
    weighting: &SifWeighting,
) -> Result<PairAlignment> {
    let source = embed_sentence(source, table, options)?;
    let target = embed_sentence(target, table, options)?;
    let source_masses = sif_masses(&source, weighting)?;
    let target_masses = sif_masses(&target, weighting)?;
    solve_pair(
        source,
        target,
        source_masses,
        target_masses,
        Metric::Euclidean,
    )
}

fn additive_vector(bag: &SentenceEmbeddingBag, normalize_words: bool) -> Result<WordVector> {
    // Summing in token order makes the result bit-for-bit invariant under
    // reorderings of the sentence, which float addition alone is not.
    let mut order: Vec<usize> = (0..bag.vectors.len()).collect();
    order.sort_by(|&a, &b| bag.tokens[a].cmp(&bag.tokens[b]));
    let mut sum = WordVector::zeros(bag.vectors[0].len());
    for &i in &order {
        let v = &bag.vectors[i];
        if normalize_words {
            sum.scaled_add(1.0 / norm(v.view()), v);
        } else {
            sum += v;
        }
    }
    if norm(sum.view()) <= ZERO_NORM_TOLERANCE {
        return Err(Error::ZeroNorm {
            context: "sentence vector sum".into(),
        });
    }
    Ok(sum)
}

/// Cosine similarity of summed word vectors.
pub fn additive_cosine(
    source: &[String],
    target: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<f64> {
    let source = embed_sentence(source, table, options)?;
    let target = embed_sentence(target, table, options)?;
    let a = additive_vector(&source, false)?;
    let b = additive_vector(&target, false)?;
    cosine_similarity(a.view(), b.view())
}

/// Cosine similarity of summed unit word directions, so every word
/// contributes equally regardless of its vector length.
pub fn additive_normalized_cosine(
    source: &[String],
    target: &[String],
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<f64> {
    let source = embed_sentence(source, table, options)?;
    let target = embed_sentence(target, table, options)?;
    let a = additive_vector(&source, true)?;
    let b = additive_vector(&target, true)?;
    cosine_similarity(a.view(), b.view())
}
