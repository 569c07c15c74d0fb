//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::corpus::{self, Corpus, REFERENCE_STATS};
use crate::eval;
use crate::generator::{self, GeneratedSong, SongOptions};
use crate::ngram::{self, SamplerConfig, TrigramModel};
use crate::rhyme::{self, NormalizationTable, RhymeIndex, RuleTable};

#[derive(Debug, Parser)]
#[command(
    name = "bollyrics",
    version,
    about = "Rhyme-constrained romanized Hindi lyric generator"
)]
pub struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Seed for all randomness; drawn from OS entropy when omitted.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Train the trigram model and rhyme index.
    Train(TrainArgs),
    /// Generate a song for a rhyme scheme.
    Generate(GenerateArgs),
    /// Fleiss' kappa and makes-sense rate for an annotation CSV.
    Kappa(KappaArgs),
    /// Export vocabulary and reversed training windows.
    Export(ExportArgs),
    /// Render a song JSON file as text.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus JSONL file.
    pub corpus: PathBuf,

    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Normalization TSV (variant<TAB>canonical); defaults to the bundled table.
    #[arg(long, value_name = "FILE", conflicts_with = "no_norm")]
    pub norm: Option<PathBuf>,

    /// Disable spelling normalization.
    #[arg(long)]
    pub no_norm: bool,
}

impl NormArgs {
    fn load(&self) -> Result<NormalizationTable> {
        if self.no_norm {
            return Ok(NormalizationTable::empty());
        }
        match &self.norm {
            Some(path) => Ok(NormalizationTable::load(path)?),
            None => Ok(NormalizationTable::bundled()),
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Write the per-year song histogram as CSV.
    #[arg(long, value_name = "FILE")]
    pub histogram: Option<PathBuf>,

    /// Compare against the published full-dataset statistics.
    #[arg(long)]
    pub compare_reference: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Output model file; the rhyme index is written next to it as
    /// `<stem>.rhyme.json`.
    #[arg(long, short, value_name = "FILE")]
    pub model: PathBuf,

    /// Rule-table JSON replacing the built-in ending rules.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,

    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file written by `train`.
    #[arg(long, short, value_name = "FILE")]
    pub model: PathBuf,

    /// Rhyme scheme, e.g. ABAB.
    #[arg(long, short)]
    pub scheme: String,

    #[arg(long, short, default_value_t = 4)]
    pub paragraphs: usize,

    #[arg(long, short, default_value_t = 1.0)]
    pub temperature: f64,

    /// Maximum words per line, rhyme pair included.
    #[arg(long, default_value_t = ngram::DEFAULT_MAX_LEN)]
    pub max_len: usize,

    /// Prefix every line with the start token.
    #[arg(long)]
    pub show_start: bool,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Annotation CSV with a `#categories:` header.
    pub annotations: PathBuf,

    /// Category counted by the makes-sense rate; defaults to the first declared.
    #[arg(long, value_name = "LABEL")]
    pub positive: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Directory receiving vocab.json and sequences.jsonl.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub context_len: u64,

    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Song JSON as produced by `generate --json`.
    pub song: PathBuf,

    #[arg(long)]
    pub show_start: bool,

    /// Also check every line ending against the rule table.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
}

/// `model.json` → `model.rhyme.json`.
pub fn rhyme_index_path(model: &Path) -> PathBuf {
    model.with_extension("rhyme.json")
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Stats(args) => cmd_stats(cli, args, out),
        Command::Train(args) => cmd_train(cli, args, out),
        Command::Generate(args) => cmd_generate(cli, args, out),
        Command::Kappa(args) => cmd_kappa(cli, args, out),
        Command::Export(args) => cmd_export(cli, args, out),
        Command::Render(args) => cmd_render(args, out),
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    let report = corpus::load_corpus(&args.corpus, args.strict)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    for rejected in &report.rejected {
        eprintln!("warning: skipped {rejected}");
    }
    if report.corpus.is_empty() {
        bail!("corpus {} contains no usable songs", args.corpus.display());
    }
    Ok(report.corpus)
}

fn cmd_stats(cli: &Cli, args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let stats = corpus::compute_stats(&corpus)?;
    let drift = if args.compare_reference {
        REFERENCE_STATS.discrepancies(&stats)
    } else {
        Vec::new()
    };

    if let Some(path) = &args.histogram {
        let mut csv = String::from("year,count\n");
        for (year, count) in &stats.per_year_histogram {
            csv.push_str(&format!("{year},{count}\n"));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }

    if cli.json {
        let mut value = serde_json::to_value(&stats)?;
        if args.compare_reference {
            value["reference_discrepancies"] = drift
                .iter()
                .map(|(field, expected, actual)| {
                    json!({"field": field, "reference": expected, "actual": actual})
                })
                .collect();
        }
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        return Ok(());
    }

    let year = |y: Option<i32>| y.map_or_else(|| "-".to_owned(), |y| y.to_string());
    let rows = [
        ("Songs", stats.song_count.to_string()),
        ("Lines", stats.line_count.to_string()),
        (
            "Avg. lines (one song)",
            format!("{:.2}", stats.avg_lines_per_song),
        ),
        ("Tokens", stats.token_count.to_string()),
        ("Unique tokens", stats.unique_token_count.to_string()),
        (
            "Year range",
            format!("{} - {}", year(stats.year_min), year(stats.year_max)),
        ),
    ];
    for (label, value) in rows {
        writeln!(out, "{label:<22} {value:>10}")?;
    }
    if args.compare_reference {
        if drift.is_empty() {
            writeln!(out, "matches reference statistics")?;
        }
        for (field, expected, actual) in drift {
            writeln!(
                out,
                "differs from reference: {field} {actual} (reference {expected})"
            )?;
        }
    }
    Ok(())
}

fn cmd_train(cli: &Cli, args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let table = match &args.rules {
        Some(path) => RuleTable::load(path)?,
        None => rhyme::default_rule_table(),
    };
    let norm = args.norm.load()?;

    let model = ngram::train(&corpus, &norm)?;
    let index = rhyme::build_index(&corpus, &table, &norm);
    let index_path = rhyme_index_path(&args.model);
    model.save(&args.model)?;
    index.save(&index_path)?;

    let trainable = ngram::trainable_line_count(&corpus);
    if cli.json {
        let groups: serde_json::Map<String, serde_json::Value> = crate::rhyme::SoundGroup::ALL
            .iter()
            .map(|g| (g.to_string(), index.pairs(*g).len().into()))
            .collect();
        let value = json!({
            "model": args.model,
            "rhyme_index": index_path,
            "vocab_size": model.vocab().len(),
            "trainable_lines": trainable,
            "contexts": model.context_count(),
            "rhyme_pairs": index.total_pairs(),
            "pairs_per_group": groups,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        writeln!(out, "model:           {}", args.model.display())?;
        writeln!(out, "rhyme index:     {}", index_path.display())?;
        writeln!(out, "vocab size:      {}", model.vocab().len())?;
        writeln!(out, "trainable lines: {trainable}")?;
        writeln!(out, "rhyme pairs:     {}", index.total_pairs())?;
    }
    Ok(())
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let scheme = generator::parse_scheme(&args.scheme)?;
    let seed = cli.seed.unwrap_or_else(rand::random);
    let sampler = SamplerConfig::new(args.temperature, seed)?;
    if args.max_len < 2 {
        bail!("--max-len must be at least 2");
    }
    let model = TrigramModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let index_path = rhyme_index_path(&args.model);
    let index = RhymeIndex::load(&index_path)
        .with_context(|| format!("loading rhyme index {}", index_path.display()))?;

    let opts = SongOptions {
        paragraphs: args.paragraphs,
        max_len: args.max_len,
        sampler,
    };
    let mut rng = sampler.rng();
    let song = generator::generate_song(&model, &index, &scheme, &opts, &mut rng)?;
    if cli.json {
        writeln!(out, "{}", song.to_json())?;
    } else {
        writeln!(out, "{}", generator::render(&song, args.show_start))?;
    }
    Ok(())
}

fn cmd_kappa(cli: &Cli, args: &KappaArgs, out: &mut dyn Write) -> Result<()> {
    let m = eval::load_annotations(&args.annotations)?;
    let positive = match &args.positive {
        Some(label) => m
            .category_index(label)
            .with_context(|| format!("unknown category {label:?}"))?,
        None => 0,
    };
    let kappa = eval::fleiss_kappa(&m)?;
    let rate = eval::makes_sense_rate(&m, positive);
    if cli.json {
        let value = json!({
            "items": m.items(),
            "raters": m.raters(),
            "categories": m.categories(),
            "kappa": kappa,
            "positive_category": m.categories()[positive],
            "makes_sense_rate": rate,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        writeln!(out, "items: {}", m.items())?;
        writeln!(out, "raters: {}", m.raters())?;
        writeln!(out, "kappa: {kappa:.4}")?;
        writeln!(
            out,
            "makes-sense rate ({}): {rate:.4}",
            m.categories()[positive]
        )?;
    }
    Ok(())
}

fn cmd_export(cli: &Cli, args: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?.normalized(&args.norm.load()?);
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let vocab = args.out_dir.join("vocab.json");
    let sequences = args.out_dir.join("sequences.jsonl");
    let windows = corpus::export_sequences(&corpus, &vocab, &sequences, args.context_len as usize)?;
    if cli.json {
        let value = json!({"vocab": vocab, "sequences": sequences, "windows": windows});
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        writeln!(out, "vocab:     {}", vocab.display())?;
        writeln!(out, "sequences: {}", sequences.display())?;
        writeln!(out, "windows:   {windows}")?;
    }
    Ok(())
}

fn cmd_render(args: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.song)
        .with_context(|| format!("reading {}", args.song.display()))?;
    let song = GeneratedSong::from_json(&text)?;
    if let Some(path) = &args.rules {
        let table = RuleTable::load(path)?;
        if let Some((p, l)) = song.conformance_violations(&table).first() {
            bail!("paragraph {p} line {l} does not end in its allocated sound group");
        }
    }
    writeln!(out, "{}", generator::render(&song, args.show_start))?;
    Ok(())
}
