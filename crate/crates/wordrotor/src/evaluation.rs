//! Correlation benchmarks: score sentence pairs or word pairs against
//! human judgments and report Pearson and Spearman correlations.
//!
//! Distances are negated before correlating, so every measure enters the
//! statistics in similarity orientation (larger means more alike).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::converter::SifWeighting;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::geometry::{cosine_similarity, dot_product, euclidean_distance};
use crate::similarity::{
    additive_cosine, additive_normalized_cosine, wmd, wmd_sif, wrd, OovPolicy, PairAlignment,
    ScoreOptions,
};

/// Sentence-pair file layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StsFormat {
    /// Tab-separated with at least seven fields: genre, file, year, index,
    /// score, sentence, sentence. Extra trailing fields are ignored.
    Stsb,
    /// Tab-separated `score<TAB>sentence<TAB>sentence`.
    Simple,
}

#[derive(Clone, Debug)]
pub struct StsPair {
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub gold: f64,
}

#[derive(Clone, Debug)]
pub struct StsDataset {
    pub pairs: Vec<StsPair>,
    pub source: String,
}

impl StsDataset {
    /// Every sentence in dataset order, first then second within a pair.
    pub fn sentences(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.pairs.len() * 2);
        for pair in &self.pairs {
            out.push(pair.first.clone());
            out.push(pair.second.clone());
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct WordSimPair {
    pub first: String,
    pub second: String,
    pub gold: f64,
}

#[derive(Clone, Debug)]
pub struct WordSimDataset {
    pub pairs: Vec<WordSimPair>,
    pub source: String,
}

fn split_sentence(text: &str) -> Vec<String> {
    text.split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a sentence-pair benchmark file. Gold scores must be finite values
/// in [0, 5]; sentences are split on spaces and must be non-empty.
pub fn parse_sts(path: impl AsRef<Path>, format: StsFormat) -> Result<StsDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let number = number + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (score_text, first_text, second_text) = match format {
            StsFormat::Stsb => {
                if fields.len() < 7 {
                    return Err(parse_error(
                        path,
                        number,
                        format!(
                            "expected at least 7 tab-separated fields, got {}",
                            fields.len()
                        ),
                    ));
                }
                (fields[4], fields[5], fields[6])
            }
            StsFormat::Simple => {
                if fields.len() != 3 {
                    return Err(parse_error(
                        path,
                        number,
                        format!("expected 3 tab-separated fields, got {}", fields.len()),
                    ));
                }
                (fields[0], fields[1], fields[2])
            }
        };
        let gold: f64 = score_text
            .parse()
            .map_err(|_| parse_error(path, number, format!("unreadable score {score_text:?}")))?;
        if !gold.is_finite() || !(0.0..=5.0).contains(&gold) {
            return Err(parse_error(
                path,
                number,
                format!("score {gold} outside [0, 5]"),
            ));
        }
        let first = split_sentence(first_text);
        let second = split_sentence(second_text);
        if first.is_empty() || second.is_empty() {
            return Err(parse_error(path, number, "empty sentence"));
        }
        pairs.push(StsPair {
            first,
            second,
            gold,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Empty {
            context: format!("sentence pair file {}", path.display()),
        });
    }
    Ok(StsDataset {
        pairs,
        source: path.display().to_string(),
    })
}

/// Reads a word-pair benchmark file of `word<TAB>word<TAB>score` rows. A
/// first line whose score field is not numeric is treated as a header.
pub fn parse_wordsim(path: impl AsRef<Path>) -> Result<WordSimDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    let mut saw_content = false;
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let number = number + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                path,
                number,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let first_content_line = !saw_content;
        saw_content = true;
        let gold: f64 = match fields[2].parse() {
            Ok(g) => g,
            Err(_) if first_content_line => continue,
            Err(_) => {
                return Err(parse_error(
                    path,
                    number,
                    format!("unreadable score {:?}", fields[2]),
                ));
            }
        };
        if !gold.is_finite() {
            return Err(parse_error(
                path,
                number,
                format!("non-finite score {gold}"),
            ));
        }
        pairs.push(WordSimPair {
            first: fields[0].to_string(),
            second: fields[1].to_string(),
            gold,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Empty {
            context: format!("word pair file {}", path.display()),
        });
    }
    Ok(WordSimDataset {
        pairs,
        source: path.display().to_string(),
    })
}

fn check_paired_finite(x: &[f64], y: &[f64], context: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: context.to_string(),
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Insufficient {
            context: context.to_string(),
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Sample Pearson correlation, clamped to [-1, 1]. A sequence whose
/// standard deviation vanishes relative to its mean has no correlation and
/// is rejected.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired_finite(x, y, "correlation inputs")?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut sq_x = 0.0;
    let mut sq_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cross += dx * dy;
        sq_x += dx * dx;
        sq_y += dy * dy;
    }
    let floor_x = 1e-14 * (1.0 + mean_x.abs()) * n.sqrt();
    let floor_y = 1e-14 * (1.0 + mean_y.abs()) * n.sqrt();
    if sq_x.sqrt() <= floor_x {
        return Err(Error::ZeroVariance {
            context: "first correlation sequence".into(),
        });
    }
    if sq_y.sqrt() <= floor_y {
        return Err(Error::ZeroVariance {
            context: "second correlation sequence".into(),
        });
    }
    Ok((cross / (sq_x.sqrt() * sq_y.sqrt())).clamp(-1.0, 1.0))
}

/// Positions 1..n with tied values sharing the average of their positions.
fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end average to their midpoint.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of fractional ranks,
/// which handles ties exactly.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired_finite(x, y, "correlation inputs")?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// A sentence-pair scoring method. Transport distances are reported
/// negated so that all scorers agree that larger means more similar.
#[derive(Clone, Copy, Debug)]
pub enum SentenceScorer<'a> {
    Wrd,
    Wmd,
    WmdSif(&'a SifWeighting),
    AdditiveCosine,
    AdditiveNormalizedCosine,
}

impl SentenceScorer<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            SentenceScorer::Wrd => "wrd",
            SentenceScorer::Wmd => "wmd",
            SentenceScorer::WmdSif(_) => "wmd-sif",
            SentenceScorer::AdditiveCosine => "additive-cos",
            SentenceScorer::AdditiveNormalizedCosine => "additive-cos-norm",
        }
    }

    /// Similarity of one pair under this scorer.
    pub fn score(
        &self,
        first: &[String],
        second: &[String],
        table: &EmbeddingTable,
        options: &ScoreOptions,
    ) -> Result<f64> {
        match self {
            SentenceScorer::Wrd => Ok(-wrd(first, second, table, options)?.distance),
            SentenceScorer::Wmd => Ok(-wmd(first, second, table, options)?.distance),
            SentenceScorer::WmdSif(weighting) => {
                Ok(-wmd_sif(first, second, table, options, weighting)?.distance)
            }
            SentenceScorer::AdditiveCosine => additive_cosine(first, second, table, options),
            SentenceScorer::AdditiveNormalizedCosine => {
                additive_normalized_cosine(first, second, table, options)
            }
        }
    }

    /// The transport plan behind a score; additive scorers have none.
    pub fn alignment(
        &self,
        first: &[String],
        second: &[String],
        table: &EmbeddingTable,
        options: &ScoreOptions,
    ) -> Result<Option<PairAlignment>> {
        match self {
            SentenceScorer::Wrd => Ok(Some(wrd(first, second, table, options)?)),
            SentenceScorer::Wmd => Ok(Some(wmd(first, second, table, options)?)),
            SentenceScorer::WmdSif(weighting) => {
                Ok(Some(wmd_sif(first, second, table, options, weighting)?))
            }
            SentenceScorer::AdditiveCosine | SentenceScorer::AdditiveNormalizedCosine => Ok(None),
        }
    }
}

/// One benchmark pair: its position, its prediction (None when skipped),
/// and the human score.
#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub index: usize,
    pub predicted: Option<f64>,
    pub gold: f64,
}

/// Correlation results plus the per-pair trace they were computed from.
#[derive(Clone, Debug)]
pub struct EvaluationReport {
    pub per_pair: Vec<PairOutcome>,
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub skipped_count: usize,
    pub scorer: String,
    pub dataset: String,
}

impl EvaluationReport {
    pub fn scored_count(&self) -> usize {
        self.per_pair.len() - self.skipped_count
    }

    pub fn pearson_r_x100(&self) -> f64 {
        100.0 * self.pearson_r
    }

    pub fn spearman_rho_x100(&self) -> f64 {
        100.0 * self.spearman_rho
    }

    /// Rows `index predicted gold`, tab-separated, `NA` for skipped pairs.
    pub fn write_scores_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for pair in &self.per_pair {
            match pair.predicted {
                Some(p) => writeln!(out, "{}\t{:.6}\t{:.6}", pair.index, p, pair.gold)?,
                None => writeln!(out, "{}\tNA\t{:.6}", pair.index, pair.gold)?,
            }
        }
        Ok(())
    }
}

fn correlate(
    outcomes: Vec<PairOutcome>,
    skipped: usize,
    scorer: String,
    dataset: String,
    context: &str,
) -> Result<EvaluationReport> {
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    for pair in &outcomes {
        if let Some(p) = pair.predicted {
            predicted.push(p);
            gold.push(pair.gold);
        }
    }
    if predicted.len() < 2 {
        return Err(Error::Insufficient {
            context: context.to_string(),
            needed: 2,
            got: predicted.len(),
        });
    }
    Ok(EvaluationReport {
        pearson_r: pearson(&predicted, &gold)?,
        spearman_rho: spearman(&predicted, &gold)?,
        per_pair: outcomes,
        skipped_count: skipped,
        scorer,
        dataset,
    })
}

/// Scores every pair of a sentence benchmark and correlates predictions
/// with the human scores. Under the skip policy a pair fails soft (it is
/// dropped and counted) only when a whole sentence becomes unusable;
/// under the error policy any unknown word aborts the run.
pub fn evaluate_sts(
    dataset: &StsDataset,
    scorer: &SentenceScorer,
    table: &EmbeddingTable,
    options: &ScoreOptions,
) -> Result<EvaluationReport> {
    options.validate()?;
    let results: Vec<std::result::Result<Option<f64>, Error>> = dataset
        .pairs
        .par_iter()
        .map(
            |pair| match scorer.score(&pair.first, &pair.second, table, options) {
                Ok(value) => Ok(Some(value)),
                Err(e) if options.oov_policy == OovPolicy::SkipToken && e.is_pair_skippable() => {
                    Ok(None)
                }
                Err(e) => Err(e),
            },
        )
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for (index, result) in results.into_iter().enumerate() {
        let predicted = result?;
        if predicted.is_none() {
            skipped += 1;
        }
        outcomes.push(PairOutcome {
            index,
            predicted,
            gold: dataset.pairs[index].gold,
        });
    }
    correlate(
        outcomes,
        skipped,
        scorer.name().to_string(),
        dataset.source.clone(),
        "scorable sentence pairs",
    )
}

/// Word-pair similarity functions for lexical benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordMeasure {
    Cosine,
    /// Negated Euclidean distance, so larger stays more similar.
    NegatedEuclidean,
    Dot,
}

impl WordMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            WordMeasure::Cosine => "cos",
            WordMeasure::NegatedEuclidean => "l2",
            WordMeasure::Dot => "dot",
        }
    }
}

/// Scores every word pair with known vectors and correlates with the human
/// scores. Pairs with an unknown word are always skipped and counted, as
/// are cosine pairs with a zero-length vector.
pub fn evaluate_wordsim(
    dataset: &WordSimDataset,
    measure: WordMeasure,
    table: &EmbeddingTable,
) -> Result<EvaluationReport> {
    let mut outcomes = Vec::with_capacity(dataset.pairs.len());
    let mut skipped = 0;
    for (index, pair) in dataset.pairs.iter().enumerate() {
        let predicted = match (table.lookup(&pair.first), table.lookup(&pair.second)) {
            (Some(a), Some(b)) => {
                let scored = match measure {
                    WordMeasure::Cosine => cosine_similarity(a.view(), b.view()),
                    WordMeasure::NegatedEuclidean => {
                        euclidean_distance(a.view(), b.view()).map(|d| -d)
                    }
                    WordMeasure::Dot => dot_product(a.view(), b.view()),
                };
                match scored {
                    Ok(value) => Some(value),
                    Err(e) if e.is_pair_skippable() => None,
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };
        if predicted.is_none() {
            skipped += 1;
        }
        outcomes.push(PairOutcome {
            index,
            predicted,
            gold: pair.gold,
        });
    }
    correlate(
        outcomes,
        skipped,
        format!("wordsim-{}", measure.name()),
        dataset.source.clone(),
        "scorable word pairs",
    )
}
