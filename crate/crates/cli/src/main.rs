use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use echodet::bicm::FitOptions;
use echodet::community::LabelPropagationOptions;
use echodet::ingest::{
    generate_synthetic, parse_tweets, Canonicalizer, Dataset, IngestOptions, StaticResolver,
    SyntheticConfig, TrustLabelTable, SNAPSHOT_MAGIC,
};
use echodet::pipeline::{
    clustering_report, detect_dico, detect_echo_chambers, detect_nec, run_all, NecLayer,
    PipelineConfig,
};
use echodet::validation::{TestFamily, ValidationOptions};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "echodet",
    version,
    about = "Detect echo chambers in retweet and URL-sharing data"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// FDR level of the validated projections.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    /// Louvain node-order shuffles per clustering.
    #[arg(long, global = true, default_value_t = 1000)]
    shuffles: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Weight label-propagation votes by retweet counts.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    lp_weighted: bool,
    #[arg(long, global = true, default_value_t = 100)]
    max_sweeps: usize,
    /// Iteration budget of the null-model solver.
    #[arg(long, global = true, default_value_t = 5000)]
    solver_max_iterations: usize,
    /// Aggregated flow edges lighter than this are dropped.
    #[arg(long, global = true, default_value_t = 1000)]
    min_flow_weight: u64,
    /// Pairs entering the FDR correction.
    #[arg(long, global = true, value_enum, default_value_t = Family::Cooccurring)]
    fdr_family: Family,
    /// Also cluster the unvalidated verified-user projection.
    #[arg(long, global = true)]
    unvalidated_diagnostic: bool,
    /// Tab-separated short → long URL map.
    #[arg(long, global = true, value_name = "FILE")]
    url_map: Option<PathBuf>,
    /// CSV `domain,label` trust table.
    #[arg(long, global = true, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Abort on the first malformed input line.
    #[arg(long, global = true)]
    strict: bool,
    /// Follow redirects over HTTP for links missing from the URL map.
    #[cfg(feature = "live-resolver")]
    #[arg(long, global = true)]
    resolve_live: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Pairs with at least one co-occurrence.
    Cooccurring,
    /// Every pair of the projected layer.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Users,
    Urls,
}

#[derive(Subcommand)]
enum Command {
    /// Parse JSONL records into a binary snapshot.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Discursive communities.
    Dico {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// News-engagement communities on one layer of the user × URL network.
    Nec {
        input: PathBuf,
        #[arg(long, value_enum)]
        layer: LayerArg,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Echo chambers and their clustering.
    Echo {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Full report bundle for a dataset.
    Report {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with planted structure.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        /// Size of the planted chamber in each camp; 0 plants none.
        #[arg(long, default_value_t = 20)]
        chamber_size: usize,
        /// JSON generator configuration; overrides `--chamber-size`.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Ingest, snapshot and report in one go.
    RunAll {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Run finished but some iterative stage did not converge.
struct Unconverged;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; help and version are not errors
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Unconverged)) => {
            eprintln!("warning: label propagation did not converge; outputs were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver = e.chain().any(|c| {
                c.downcast_ref::<echodet::Error>()
                    .is_some_and(|e| e.is_non_convergence())
            });
            ExitCode::from(if solver { 2 } else { 1 })
        }
    }
}

impl Global {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            alpha: self.alpha,
            shuffles: self.shuffles,
            seed: self.seed,
            label_propagation: LabelPropagationOptions {
                max_sweeps: self.max_sweeps,
                weighted: self.lp_weighted,
            },
            min_flow_weight: self.min_flow_weight,
            validation: ValidationOptions {
                family: match self.fdr_family {
                    Family::Cooccurring => TestFamily::CooccurringPairs,
                    Family::All => TestFamily::AllPairs,
                },
                fit: FitOptions {
                    max_iterations: self.solver_max_iterations,
                    ..Default::default()
                },
            },
            unvalidated_diagnostic: self.unvalidated_diagnostic,
        }
    }

    fn canonicalizer(&self) -> Result<Canonicalizer> {
        let map = match &self.url_map {
            Some(path) => StaticResolver::from_tsv(BufReader::new(open(path)?))
                .with_context(|| format!("reading URL map {}", path.display()))?,
            None => StaticResolver::new(),
        };
        #[cfg(feature = "live-resolver")]
        if self.resolve_live {
            let live = echodet::ingest::HttpResolver::new(std::time::Duration::from_secs(10));
            return Ok(Canonicalizer::new(Box::new(MapThenLive(map, live))));
        }
        Ok(Canonicalizer::new(Box::new(map)))
    }

    /// Reads JSONL records or a snapshot, then joins the label table.
    fn load(&self, path: &Path) -> Result<Dataset> {
        let mut reader = BufReader::new(open(path)?);
        let snapshot = reader.fill_buf()?.starts_with(SNAPSHOT_MAGIC);
        let mut dataset = if !snapshot {
            let options = IngestOptions {
                strict: self.strict,
                canonicalizer: self.canonicalizer()?,
            };
            let d = parse_tweets(reader, &options)
                .with_context(|| format!("parsing {}", path.display()))?;
            let s = d.stats();
            if s.malformed + s.duplicates + s.invalid_urls > 0 {
                log::warn!(
                    "{} malformed lines, {} duplicate tweets, {} invalid URLs skipped",
                    s.malformed,
                    s.duplicates,
                    s.invalid_urls
                );
            }
            d
        } else {
            Dataset::read_snapshot(reader)
                .with_context(|| format!("reading snapshot {}", path.display()))?
        };
        if let Some(path) = &self.labels {
            let table = TrustLabelTable::from_csv(open(path)?)
                .with_context(|| format!("reading labels {}", path.display()))?;
            dataset.join_labels(&table);
        }
        Ok(dataset)
    }
}

/// The static map first, then the network.
#[cfg(feature = "live-resolver")]
struct MapThenLive(StaticResolver, echodet::ingest::HttpResolver);

#[cfg(feature = "live-resolver")]
impl echodet::ingest::Resolver for MapThenLive {
    fn resolve(&self, url: &str) -> Option<String> {
        self.0.resolve(url).or_else(|| self.1.resolve(url))
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.flush()?;
    Ok(())
}

fn unconverged(converged: bool) -> Option<Unconverged> {
    (!converged).then_some(Unconverged)
}

fn run(cli: &Cli) -> Result<Option<Unconverged>> {
    let g = &cli.global;
    let config = g.pipeline();
    match &cli.command {
        Command::Ingest { input, output } => {
            let d = g.load(input)?;
            let mut f = BufWriter::new(
                File::create(output).with_context(|| format!("creating {}", output.display()))?,
            );
            d.write_snapshot(&mut f)?;
            f.flush()?;
            println!(
                "{} records, {} users ({} verified), {} retweets, {} URLs",
                d.records().len(),
                d.user_count(),
                d.verified_count(),
                d.retweet_count(),
                d.url_count()
            );
            Ok(None)
        }
        Command::Dico { input, out } => {
            let d = g.load(input)?;
            let dico = detect_dico(&d, &config)?;
            dico.write_stats_csv(create(out, "dico_stats.csv")?)?;
            dico.write_labels_csv(create(out, "dico_labels.csv")?)?;
            write_json(out, "dico_projection.json", &json!(dico.projection()))?;
            println!(
                "{} DiCos after {} sweeps",
                dico.dico_ids().len(),
                dico.sweeps()
            );
            Ok(unconverged(dico.converged()))
        }
        Command::Nec { input, layer, out } => {
            let d = g.load(input)?;
            let layer = match layer {
                LayerArg::Users => NecLayer::Users,
                LayerArg::Urls => NecLayer::Urls,
            };
            let nec = detect_nec(&d, layer, &config)?;
            let mut f = create(out, &format!("nec_{layer}.csv"))?;
            nec.write_members_csv(&mut f, true)?;
            f.flush()?;
            write_json(
                out,
                &format!("nec_{layer}.json"),
                &json!({
                    "layer": layer,
                    "projection": nec.projection(),
                    "validated_members": nec.validated_members(),
                    "non_validated_members": nec.non_validated_members(),
                    "necs": nec.summaries(),
                }),
            )?;
            println!(
                "{} NECs over {} validated {layer}",
                nec.nec_count(),
                nec.validated_members()
            );
            Ok(None)
        }
        Command::Echo { input, out } => {
            let d = g.load(input)?;
            let dico = detect_dico(&d, &config)?;
            let necs = detect_nec(&d, NecLayer::Users, &config)?;
            let chambers = detect_echo_chambers(&d, &dico, &necs)?;
            let clustering = if chambers.is_empty() {
                None
            } else {
                Some(clustering_report(&chambers, &dico, d.retweet_graph())?)
            };
            write_json(
                out,
                "chambers.json",
                &json!({ "chambers": chambers, "clustering": clustering }),
            )?;
            println!(
                "{} echo chambers, {} users",
                chambers.chambers.len(),
                chambers.member_count()
            );
            Ok(unconverged(dico.converged()))
        }
        Command::Report { input, out } => {
            let d = g.load(input)?;
            let result = run_all(&d, &config)?;
            result.write_bundle(&d, out)?;
            println!(
                "{} echo chambers, {} users",
                result.chambers.chambers.len(),
                result.chambers.member_count()
            );
            Ok(unconverged(result.dico.converged()))
        }
        Command::RunAll { input, out } => {
            let d = g.load(input)?;
            let mut f = create(out, "dataset.snapshot")?;
            d.write_snapshot(&mut f)?;
            f.flush()?;
            let result = run_all(&d, &config)?;
            result.write_bundle(&d, out)?;
            result
                .dico
                .write_labels_csv(create(out, "dico_labels.csv")?)?;
            println!(
                "{} echo chambers, {} users",
                result.chambers.chambers.len(),
                result.chambers.member_count()
            );
            Ok(unconverged(result.dico.converged()))
        }
        Command::Synth {
            out,
            chamber_size,
            config,
        } => {
            let cfg = match config {
                Some(path) => serde_json::from_reader(BufReader::new(open(path)?))
                    .with_context(|| format!("reading generator config {}", path.display()))?,
                None if *chamber_size == 0 => SyntheticConfig {
                    seed: g.seed,
                    ..Default::default()
                },
                None => SyntheticConfig::two_chambers(*chamber_size, g.seed),
            };
            let corpus = generate_synthetic(&cfg)?;
            let mut f = create(out, "tweets.jsonl")?;
            corpus.dataset.write_jsonl(&mut f)?;
            f.flush()?;
            corpus.labels.write_csv(create(out, "labels.csv")?)?;
            let mut f = create(out, "url_map.tsv")?;
            corpus.url_map.write_tsv(&mut f)?;
            f.flush()?;
            write_json(out, "manifest.json", &json!(corpus.manifest))?;
            println!(
                "{} records, {} planted chambers ({} users)",
                corpus.manifest.records,
                corpus.manifest.chambers.len(),
                corpus.manifest.chamber_users()
            );
            Ok(None)
        }
    }
}
