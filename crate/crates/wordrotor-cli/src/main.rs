//! Command-line front end: pair scoring, benchmark evaluation, vector
//! conversion, and word-level similarity.
//!
//! Exit codes: 0 success, 1 data error (unreadable or malformed input),
//! 2 usage or configuration error. Results go to standard output,
//! diagnostics to standard error.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wordrotor::converter::{convert, fit_pipeline, Hyperparameters, PipelineSpec, SifWeighting};
use wordrotor::embeddings::{
    load_embeddings, load_stopwords, load_unigram, save_embeddings, EmbeddingTable,
};
use wordrotor::evaluation::{
    evaluate_sts, evaluate_wordsim, parse_sts, parse_wordsim, EvaluationReport, SentenceScorer,
    StsFormat, WordMeasure,
};
use wordrotor::similarity::{OovPolicy, ScoreOptions};
use wordrotor::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wordrotor",
    version,
    about = "Sentence similarity from optimal word alignment"
)]
struct Cli {
    /// Cap on worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score sentence pairs from a TSV file, one similarity per line.
    Score(ScoreCmd),
    /// Evaluate a scorer against a gold-rated sentence-pair benchmark.
    Eval(EvalCmd),
    /// Fit a converter pipeline and write the converted table.
    Convert(ConvertCmd),
    /// Evaluate word vectors against a rated word-pair benchmark.
    Wordsim(WordsimCmd),
}

#[derive(Args)]
struct CommonArgs {
    /// Embedding table: one `token coord...` line per word, space separated.
    #[arg(long)]
    embeddings: PathBuf,

    /// Lowercase input tokens before lookup and fitting.
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct ScoringArgs {
    /// Similarity measure.
    #[arg(long, value_enum, default_value_t = MetricArg::Wrd)]
    metric: MetricArg,

    /// Stopword list, one word per line, `#` comments allowed.
    #[arg(long)]
    stopwords: Option<PathBuf>,

    /// Drop stopwords before scoring. Defaults to true for the mover
    /// metrics when a stopword list is supplied, false otherwise.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    remove_stopwords: Option<bool>,

    /// Handling of words missing from the table.
    #[arg(long, value_enum, default_value_t = OovArg::Skip)]
    oov_policy: OovArg,
}

#[derive(Args)]
struct PipelineArgs {
    /// Converter pipeline tag: none, a, c, n, aw, awr, cwr, nwr.
    #[arg(long, default_value = "none")]
    converter: String,

    /// Unigram frequency TSV `token<TAB>count-or-probability`; required by
    /// weighted pipeline tags and by metric wmd-sif.
    #[arg(long)]
    freq: Option<PathBuf>,

    /// Corpus for fitting common component removal, one pre-tokenized
    /// sentence per line. Defaults to the sentences of the input itself.
    #[arg(long)]
    sentences: Option<PathBuf>,

    /// Leading principal components removed by the `a` denoiser.
    #[arg(long, default_value_t = 3)]
    d_a: usize,

    /// Aperture of the conceptor denoiser.
    #[arg(long, default_value_t = 2.0)]
    alpha_c: f64,

    /// Weighting constant in `a / (a + probability)`.
    #[arg(long, default_value_t = 1e-3)]
    sif_a: f64,

    /// Components removed from sentence embeddings by the removal stage.
    #[arg(long, default_value_t = 5)]
    d_r: usize,
}

#[derive(Args)]
struct ScoreCmd {
    /// TSV file of `sentence1<TAB>sentence2`, one pre-tokenized pair per line.
    pairs: PathBuf,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    scoring: ScoringArgs,

    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Write every pair's transport plan to this TSV (transport metrics only).
    #[arg(long)]
    dump_alignment: Option<PathBuf>,
}

#[derive(Args)]
struct EvalCmd {
    /// Benchmark file.
    dataset: PathBuf,

    /// Benchmark file layout.
    #[arg(long, value_enum, default_value_t = FormatArg::Stsb)]
    format: FormatArg,

    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    scoring: ScoringArgs,

    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Write per-pair predictions to this TSV.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertCmd {
    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Output path for the converted table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WordsimCmd {
    /// Word-pair benchmark: TSV of word, word, gold rating; optional header.
    dataset: PathBuf,

    #[command(flatten)]
    common: CommonArgs,

    /// Word-level comparison.
    #[arg(long, value_enum, default_value_t = MeasureArg::Cos)]
    measure: MeasureArg,

    /// Write per-pair predictions to this TSV.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Wrd,
    Wmd,
    WmdSif,
    AdditiveCos,
    AdditiveCosNorm,
}

impl MetricArg {
    fn is_mover(self) -> bool {
        matches!(self, MetricArg::Wmd | MetricArg::WmdSif)
    }

    fn is_transport(self) -> bool {
        matches!(self, MetricArg::Wrd | MetricArg::Wmd | MetricArg::WmdSif)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Stsb,
    Simple,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OovArg {
    Skip,
    Error,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Cos,
    L2,
    Dot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let built = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
        if let Err(e) = built {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Score(cmd) => cmd_score(cmd),
        Command::Eval(cmd) => cmd_eval(cmd),
        Command::Convert(cmd) => cmd_convert(cmd),
        Command::Wordsim(cmd) => cmd_wordsim(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn cmd_score(cmd: ScoreCmd) -> Result<()> {
    let pairs = read_pairs(&cmd.pairs)?;
    let options = build_options(&cmd.scoring, &cmd.common)?;
    if cmd.dump_alignment.is_some() && !cmd.scoring.metric.is_transport() {
        return Err(Error::InvalidArgument {
            message: "--dump-alignment needs a transport metric (wrd, wmd, wmd-sif)".into(),
        });
    }
    let corpus = lowercased(
        pairs
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect(),
        cmd.common.lowercase,
    );
    let vocabulary = token_set(&corpus);
    let prepared = prepare(
        &cmd.common,
        &cmd.scoring,
        &cmd.pipeline,
        &corpus,
        &vocabulary,
    )?;
    let scorer = make_scorer(cmd.scoring.metric, prepared.weighting.as_ref());

    let mut dump = match &cmd.dump_alignment {
        Some(path) => {
            let file = File::create(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Some((BufWriter::new(file), path.clone()))
        }
        None => None,
    };
    let skip = options.oov_policy == OovPolicy::SkipToken;
    let mut lines = String::new();
    for (index, (first, second)) in pairs.iter().enumerate() {
        let value = if let Some((writer, path)) = dump.as_mut() {
            let io_err = |source| Error::Io {
                path: path.clone(),
                source,
            };
            match scorer.alignment(first, second, &prepared.table, &options) {
                Ok(Some(alignment)) => {
                    writeln!(writer, "# pair {index}").map_err(io_err)?;
                    alignment.write_alignment_tsv(writer).map_err(io_err)?;
                    Some(-alignment.distance)
                }
                Ok(None) => unreachable!("transport metrics always produce an alignment"),
                Err(e) if skip && e.is_pair_skippable() => {
                    writeln!(writer, "# pair {index} skipped").map_err(io_err)?;
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            match scorer.score(first, second, &prepared.table, &options) {
                Ok(v) => Some(v),
                Err(e) if skip && e.is_pair_skippable() => None,
                Err(e) => return Err(e),
            }
        };
        match value {
            Some(v) => writeln!(lines, "{v:.6}").expect("string write"),
            None => writeln!(lines, "NA").expect("string write"),
        }
    }
    if let Some((mut writer, path)) = dump {
        writer
            .flush()
            .map_err(|source| Error::Io { path, source })?;
    }
    print!("{lines}");
    Ok(())
}

fn cmd_eval(cmd: EvalCmd) -> Result<()> {
    let format = match cmd.format {
        FormatArg::Stsb => StsFormat::Stsb,
        FormatArg::Simple => StsFormat::Simple,
    };
    let dataset = parse_sts(&cmd.dataset, format)?;
    let options = build_options(&cmd.scoring, &cmd.common)?;
    let corpus = lowercased(dataset.sentences(), cmd.common.lowercase);
    let vocabulary = token_set(&corpus);
    let prepared = prepare(
        &cmd.common,
        &cmd.scoring,
        &cmd.pipeline,
        &corpus,
        &vocabulary,
    )?;
    let scorer = make_scorer(cmd.scoring.metric, prepared.weighting.as_ref());
    let report = evaluate_sts(&dataset, &scorer, &prepared.table, &options)?;
    write_report(&report, cmd.output.as_deref())?;
    println!(
        "pearson_r={:.6} spearman_rho={:.6} pairs={} skipped={}",
        report.pearson_r,
        report.spearman_rho,
        report.per_pair.len(),
        report.skipped_count
    );
    Ok(())
}

fn cmd_convert(cmd: ConvertCmd) -> Result<()> {
    let table = load_table(&cmd.common.embeddings)?;
    let spec = PipelineSpec::parse(&cmd.pipeline.converter)?;
    let unigram = cmd.pipeline.freq.as_deref().map(load_unigram).transpose()?;
    let corpus = match &cmd.pipeline.sentences {
        Some(path) => Some(read_sentences(path, cmd.common.lowercase)?),
        None => None,
    };
    let hp = hyperparameters(&cmd.pipeline);
    let params = fit_pipeline(&spec, &table, unigram.as_ref(), corpus.as_deref(), &hp)?;
    let converted = convert(&table, &params)?;
    save_embeddings(&converted, &cmd.out)?;
    Ok(())
}

fn cmd_wordsim(cmd: WordsimCmd) -> Result<()> {
    let table = load_table(&cmd.common.embeddings)?;
    let mut dataset = parse_wordsim(&cmd.dataset)?;
    if cmd.common.lowercase {
        for pair in &mut dataset.pairs {
            pair.first = pair.first.to_lowercase();
            pair.second = pair.second.to_lowercase();
        }
    }
    let measure = match cmd.measure {
        MeasureArg::Cos => WordMeasure::Cosine,
        MeasureArg::L2 => WordMeasure::NegatedEuclidean,
        MeasureArg::Dot => WordMeasure::Dot,
    };
    let report = evaluate_wordsim(&dataset, measure, &table)?;
    write_report(&report, cmd.output.as_deref())?;
    println!(
        "spearman_rho={:.6} pearson_r={:.6} pairs={} skipped={}",
        report.spearman_rho,
        report.pearson_r,
        report.per_pair.len(),
        report.skipped_count
    );
    Ok(())
}

/// Table ready for scoring plus the weighting demanded by the metric.
struct Prepared {
    table: EmbeddingTable,
    weighting: Option<SifWeighting>,
}

/// Loads the table and, for pipeline tags other than `none`, fits the
/// converter on the full table and converts the vocabulary that scoring
/// will actually look up. The metric's own weighting model is built here
/// too so both uses share one frequency file load.
fn prepare(
    common: &CommonArgs,
    scoring: &ScoringArgs,
    pipeline: &PipelineArgs,
    default_corpus: &[Vec<String>],
    vocabulary: &HashSet<String>,
) -> Result<Prepared> {
    let table = load_table(&common.embeddings)?;
    let spec = PipelineSpec::parse(&pipeline.converter)?;
    let unigram = pipeline.freq.as_deref().map(load_unigram).transpose()?;
    let weighting = if scoring.metric == MetricArg::WmdSif {
        let unigram = unigram.clone().ok_or_else(|| Error::InvalidArgument {
            message: "metric wmd-sif needs --freq".into(),
        })?;
        Some(SifWeighting {
            unigram,
            a: pipeline.sif_a,
        })
    } else {
        None
    };
    if spec.denoiser.is_none() && !spec.weighting && !spec.removal {
        return Ok(Prepared { table, weighting });
    }
    let corpus_owned;
    let corpus: &[Vec<String>] = match &pipeline.sentences {
        Some(path) => {
            corpus_owned = read_sentences(path, common.lowercase)?;
            &corpus_owned
        }
        None => default_corpus,
    };
    let hp = hyperparameters(pipeline);
    let params = fit_pipeline(&spec, &table, unigram.as_ref(), Some(corpus), &hp)?;
    let subset = table.subset(vocabulary);
    let converted = convert(&subset, &params)?;
    Ok(Prepared {
        table: converted,
        weighting,
    })
}

fn hyperparameters(pipeline: &PipelineArgs) -> Hyperparameters {
    Hyperparameters {
        denoiser_components: pipeline.d_a,
        conceptor_alpha: pipeline.alpha_c,
        sif_a: pipeline.sif_a,
        removal_components: pipeline.d_r,
    }
}

fn build_options(scoring: &ScoringArgs, common: &CommonArgs) -> Result<ScoreOptions> {
    let stopwords = scoring
        .stopwords
        .as_deref()
        .map(load_stopwords)
        .transpose()?;
    let remove = scoring
        .remove_stopwords
        .unwrap_or(scoring.metric.is_mover() && stopwords.is_some());
    let options = ScoreOptions {
        remove_stopwords: remove,
        stopwords,
        oov_policy: match scoring.oov_policy {
            OovArg::Skip => OovPolicy::SkipToken,
            OovArg::Error => OovPolicy::Error,
        },
        lowercase: common.lowercase,
    };
    options.validate()?;
    Ok(options)
}

fn make_scorer(metric: MetricArg, weighting: Option<&SifWeighting>) -> SentenceScorer<'_> {
    match metric {
        MetricArg::Wrd => SentenceScorer::Wrd,
        MetricArg::Wmd => SentenceScorer::Wmd,
        MetricArg::WmdSif => {
            SentenceScorer::WmdSif(weighting.expect("weighting is built before the scorer"))
        }
        MetricArg::AdditiveCos => SentenceScorer::AdditiveCosine,
        MetricArg::AdditiveCosNorm => SentenceScorer::AdditiveNormalizedCosine,
    }
}

fn load_table(path: &Path) -> Result<EmbeddingTable> {
    let table = load_embeddings(path, None)?;
    if table.duplicates_skipped() > 0 {
        eprintln!(
            "warning: {}: {} duplicate tokens ignored",
            path.display(),
            table.duplicates_skipped()
        );
    }
    Ok(table)
}

fn write_report(report: &EvaluationReport, output: Option<&Path>) -> Result<()> {
    let Some(path) = output else {
        return Ok(());
    };
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    report.write_scores_tsv(&mut writer).map_err(io_err)?;
    writer.flush().map_err(io_err)
}

fn read_pairs(path: &Path) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut pairs = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let number = number + 1;
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: number,
                message: format!("expected 2 tab-separated sentences, got {}", fields.len()),
            });
        }
        let first = split_tokens(fields[0]);
        let second = split_tokens(fields[1]);
        if first.is_empty() || second.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: number,
                message: "empty sentence".into(),
            });
        }
        pairs.push((first, second));
    }
    if pairs.is_empty() {
        return Err(Error::Empty {
            context: format!("pair file {}", path.display()),
        });
    }
    Ok(pairs)
}

fn read_sentences(path: &Path, lowercase: bool) -> Result<Vec<Vec<String>>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        sentences.push(split_tokens(line));
    }
    if sentences.is_empty() {
        return Err(Error::Empty {
            context: format!("sentence file {}", path.display()),
        });
    }
    Ok(lowercased(sentences, lowercase))
}

fn split_tokens(text: &str) -> Vec<String> {
    text.split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn lowercased(sentences: Vec<Vec<String>>, lowercase: bool) -> Vec<Vec<String>> {
    if !lowercase {
        return sentences;
    }
    sentences
        .into_iter()
        .map(|s| s.into_iter().map(|t| t.to_lowercase()).collect())
        .collect()
}

fn token_set(sentences: &[Vec<String>]) -> HashSet<String> {
    sentences.iter().flatten().cloned().collect()
}
