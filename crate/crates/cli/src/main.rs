use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use commentvol::corpus::{load_corpus, save_corpus, Corpus, TimezoneTable};
use commentvol::eval::{
    ablation_suite, cross_validate, mae, r_squared, stepwise_forward_select, write_reports_csv,
    AblationConfig, SelectionConfig, Setting,
};
use commentvol::features::{FeatureSet, FeatureTable};
use commentvol::learn::{grid_search, HyperGrid, ModelFile, ModelSpec};
use commentvol::ratemodel::{
    self, compare_lines, qq_normal, read_fits_csv, write_fits_csv, write_qq_csv, Grouping,
};
use commentvol::synth::{self, SynthConfig};
use commentvol::taxonomy::{categorize_all, propagate_categories, write_assignments_csv};
use commentvol::text::{AggressionLexicon, GazetteerNer, LexiconSentiment, Providers};
use commentvol::{DesignMatrix64, GroupFit64, ModelFile64};

#[derive(Parser, Debug)]
#[command(
    name = "commentvol",
    version,
    about = "Predict news comment volume from early comments"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "COMMENTVOL_THREADS")]
    threads: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "COMMENTVOL_SEED")]
    seed: Option<u64>,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a calibrated synthetic corpus.
    Synth(SynthArgs),
    /// Extract features and write a design matrix CSV.
    Features(FeaturesArgs),
    /// Fit a model and save it as JSON.
    Train(TrainArgs),
    /// Cross-validate a saved model's configuration on a corpus.
    Eval(EvalArgs),
    /// Feature-set ablation in global and local settings.
    Ablate(AblateArgs),
    /// Greedy forward feature selection.
    Select(SelectArgs),
    /// Fit log-log rate lines per group.
    RateFit(RateFitArgs),
    /// Compare two fitted rate lines.
    RateCompare(RateCompareArgs),
    /// Normal Q-Q pairs of log-volumes.
    Qq(QqArgs),
    /// Assign categories to topics and propagate them to articles.
    Categorize(CategorizeArgs),
}

#[derive(Args, Debug, Serialize)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Outlet timezone offsets (`outlet = minutes`); defaults to timezones.tsv beside the corpus.
    #[arg(long)]
    timezones: Option<PathBuf>,
    /// Positive and negative sentiment word lists.
    #[arg(long, requires = "negative")]
    positive: Option<PathBuf>,
    #[arg(long, requires = "positive")]
    negative: Option<PathBuf>,
    #[arg(long)]
    aggression: Option<PathBuf>,
    /// Tab-separated `surface<TAB>LOC|PER|ORG|MISC` entity list.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    /// Generator configuration JSON (default: the six-outlet configuration).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the single pooled outlet instead of the six outlets.
    #[arg(long, conflicts_with = "config")]
    overall: bool,
    /// Multiply every outlet's article count.
    #[arg(long)]
    scale: Option<f64>,
    /// Calibrate for this alpha, using per-alpha lines where configured.
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct FeaturesArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 10)]
    alpha: usize,
    /// all, uc, art, rate, all-uc, all-{a,b} or a list of feature names.
    #[arg(long, default_value = "all")]
    set: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// lr, rf, svr or mlp.
    #[arg(long, default_value = "rf")]
    model: String,
    #[arg(long, default_value = "all")]
    set: String,
    #[arg(long, default_value_t = 10)]
    alpha: usize,
    #[arg(long)]
    ntrees: Option<usize>,
    /// Pick hyperparameters by cross-validated grid search first.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct AblateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated model families.
    #[arg(long, default_value = "rf,lr")]
    models: String,
    #[arg(long, default_value_t = 10)]
    alpha: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long)]
    ntrees: Option<usize>,
    #[arg(long)]
    no_global: bool,
    #[arg(long)]
    no_local: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SelectArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value = "rf")]
    model: String,
    #[arg(long, default_value_t = 10)]
    alpha: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long)]
    ntrees: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Restrict an outlet's articles (LOCAL setting).
    #[arg(long)]
    outlet: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RateFitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// outlet, category or outletxcategory.
    #[arg(long, default_value = "outlet")]
    group: String,
    /// One alpha or a comma-separated sweep, e.g. 5,10,15,20,50.
    #[arg(long, default_value = "10")]
    alpha: String,
    #[arg(long, default_value_t = 30)]
    min_n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RateCompareArgs {
    /// CSV written by rate-fit.
    #[arg(long)]
    fits: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Slope difference treated as parallel.
    #[arg(long, default_value_t = ratemodel::DEFAULT_SLOPE_TOL)]
    tol: f64,
    /// Which alpha's rows to use when the file holds a sweep.
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct QqArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    outlet: Option<String>,
    /// Only articles with at least this many comments in the window.
    #[arg(long, default_value_t = 1)]
    min_comments: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CategorizeArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Topic assignment CSV.
    #[arg(long)]
    out: PathBuf,
    /// Corpus with propagated categories.
    #[arg(long)]
    out_corpus: PathBuf,
}

#[derive(Serialize)]
struct FileDigest {
    path: PathBuf,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    version: &'static str,
    flags: &'a Command,
    seed: u64,
    threads: usize,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    wall_time_seconds: f64,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn check_alpha(alpha: usize) -> Result<usize> {
    if alpha < 2 {
        bail!("alpha must be at least 2, got {alpha}");
    }
    Ok(alpha)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Inputs read by a run, for the manifest.
#[derive(Default)]
struct Inputs(Vec<PathBuf>);

impl Inputs {
    fn add(&mut self, p: &Path) {
        self.0.push(p.to_path_buf());
    }
}

fn load(args: &CorpusArgs, inputs: &mut Inputs) -> Result<(Corpus, Providers)> {
    inputs.add(&args.corpus);
    let corpus = load_corpus(&args.corpus)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let mut providers = Providers::default();
    let tz = match &args.timezones {
        Some(p) => Some(p.clone()),
        None => args
            .corpus
            .parent()
            .map(|d| d.join("timezones.tsv"))
            .filter(|p| p.is_file()),
    };
    if let Some(p) = tz {
        inputs.add(&p);
        providers.timezones =
            TimezoneTable::load(&p).with_context(|| format!("loading {}", p.display()))?;
    }
    if let (Some(pos), Some(neg)) = (&args.positive, &args.negative) {
        inputs.add(pos);
        inputs.add(neg);
        providers.sentiment = Box::new(LexiconSentiment::load(pos, neg)?);
    }
    if let Some(p) = &args.aggression {
        inputs.add(p);
        providers.aggression = AggressionLexicon::load(p)?;
    }
    if let Some(p) = &args.gazetteer {
        inputs.add(p);
        providers.ner = Box::new(GazetteerNer::load(p)?);
    }
    Ok((corpus, providers))
}

fn model_spec(name: &str, ntrees: Option<usize>, seed: u64) -> Result<ModelSpec> {
    let mut spec = ModelSpec::from_name(name)?.with_seed(seed);
    if let (Some(n), ModelSpec::Rf(p)) = (ntrees, &mut spec) {
        p.ntrees = n;
    }
    Ok(spec)
}

fn parse_alphas(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|a| {
            let a: usize = a
                .trim()
                .parse()
                .with_context(|| format!("invalid alpha `{a}`"))?;
            check_alpha(a)
        })
        .collect()
}

fn run(cli: &Cli, seed: u64) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    let mut inputs = Inputs::default();
    let outputs: Vec<PathBuf> = match &cli.command {
        Command::Synth(a) => {
            let mut cfg = match &a.config {
                Some(p) => {
                    inputs.add(p);
                    let text = fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<SynthConfig>(&text)
                        .with_context(|| format!("parsing {}", p.display()))?
                }
                None if a.overall => synth::overall_config(),
                None => synth::default_config(),
            };
            if cli.seed.is_some() {
                cfg.seed = seed;
            }
            if let Some(s) = a.scale {
                if s.is_nan() || s <= 0.0 {
                    bail!("scale must be positive");
                }
                cfg = cfg.scaled(s);
            }
            if let Some(alpha) = a.alpha {
                cfg = cfg.at_alpha(check_alpha(alpha)?);
            }
            let out = synth::generate_corpus(&cfg)?;
            let mut files = synth::write_output(&cfg, &out, &a.out)?;
            let cfg_path = a.out.join("config.json");
            write_json(&cfg_path, &cfg)?;
            files.push(cfg_path);
            eprintln!(
                "{} articles, {} eligible at alpha {}, {} redraws",
                out.corpus.len(),
                out.corpus.eligible(cfg.alpha).count(),
                cfg.alpha,
                out.redraws
            );
            files
        }
        Command::Features(a) => {
            let (corpus, providers) = load(&a.corpus, &mut inputs)?;
            let table = FeatureTable::build(&corpus, check_alpha(a.alpha)?, &providers)?;
            let dm: DesignMatrix64 =
                table.design(&FeatureSet::parse(&a.set)?, &Default::default())?;
            let mut w = create(&a.out)?;
            dm.write_csv(&mut w)?;
            w.flush()?;
            vec![a.out.clone()]
        }
        Command::Train(a) => {
            let (corpus, providers) = load(&a.corpus, &mut inputs)?;
            let alpha = check_alpha(a.alpha)?;
            let set = FeatureSet::parse(&a.set)?;
            let table = FeatureTable::build(&corpus, alpha, &providers)?;
            let dm: DesignMatrix64 = table.design(&set, &Default::default())?;
            let mut spec = model_spec(&a.model, a.ntrees, seed)?;
            if a.grid {
                let g = grid_search(&spec, &HyperGrid::default(), &dm.x, &dm.y, a.folds, seed)?;
                eprintln!("grid best: {} (CV R^2 {:.4})", g.best, g.best_score);
                spec = g.best;
            }
            let model = spec.fit(&dm.x, &dm.y)?;
            let file = ModelFile::new(spec, alpha, set.label(), dm.columns.clone(), model);
            file.save(&a.out)?;
            vec![a.out.clone()]
        }
        Command::Eval(a) => {
            let (corpus, providers) = load(&a.corpus, &mut inputs)?;
            inputs.add(&a.model_file);
            let file = ModelFile64::load(&a.model_file)?;
            let set = FeatureSet::parse(&file.feature_set)?;
            let table = FeatureTable::build(&corpus, file.alpha, &providers)?;
            let dm: DesignMatrix64 = table.design_with_columns(&set, &file.columns)?;
            let report = cross_validate(&dm, &file.spec, a.folds, seed, Setting::Global)?;
            let pred = file.model.predict(&dm.x)?;
            #[derive(Serialize)]
            struct EvalOut<'a> {
                report: &'a commentvol::eval::FitReport,
                stored_model_r2: f64,
                stored_model_mae: f64,
            }
            write_json(
                &a.out,
                &EvalOut {
                    report: &report,
                    stored_model_r2: r_squared(&dm.y, &pred)?,
                    stored_model_mae: mae(&dm.y, &pred)?,
                },
            )?;
            println!(
                "{} {}: CV R^2 {:.4}, MAE {:.4}",
                report.feature_set, report.model, report.r2, report.mae
            );
            vec![a.out.clone()]
        }
        Command::Ablate(a) => {
            let (corpus, providers) = load(&a.corpus, &mut inputs)?;
            let table = FeatureTable::build(&corpus, check_alpha(a.alpha)?, &providers)?;
            let models = a
                .models
                .split(',')
                .map(|m| model_spec(m, a.ntrees, seed))
                .collect::<Result<Vec<_>>>()?;
            let config = AblationConfig {
                models,
                k: a.folds,
                seed,
                global: !a.no_global,
                local: !a.no_local,
                ..Default::default()
            };
            let reports = ablation_suite::<f64>(&table, &config)?;
            let mut w = create(&a.out)?;
            write_reports_csv(&reports, &mut w)?;
            w.flush()?;
            vec![a.out.clone()]
        }
        Command::Select(a) => {
            let (corpus, providers) = load(&a.corpus, &mut inputs)?;
            let mut table = FeatureTable::build(&corpus, check_alpha(a.alpha)?, &providers)?;
            if let Some(o) = &a.outlet {
                table = table.filter_outlet(o);
            }
            let spec = model_spec(&a.model, a.ntrees, seed)?;
            let config = SelectionConfig {
                k: a.folds,
                seed,
                max_steps: a.max_steps,
                ..Default::default()
            };
            let trace = stepwise_forward_select::<f64>(&table, &spec, &config)?;
            println!("selected: {}", trace.chosen.join(", "));
            write_json(&a.out, &trace)?;
            vec![a.out.clone()]
        }
        Command::RateFit(a) => {
            let (corpus, _) = load(&a.corpus, &mut inputs)?;
            let grouping = Grouping::parse(&a.group)?;
            let fits: Vec<GroupFit64> =
                ratemodel::alpha_sweep(&corpus, &parse_alphas(&a.alpha)?, grouping, a.min_n)?;
            let mut w = create(&a.out)?;
            write_fits_csv(&fits, &mut w)?;
            w.flush()?;
            vec![a.out.clone()]
        }
        Command::RateCompare(a) => {
            inputs.add(&a.fits);
            let fits: Vec<GroupFit64> = read_fits_csv(
                File::open(&a.fits).with_context(|| format!("opening {}", a.fits.display()))?,
            )?;
            let find = |name: &str| -> Result<commentvol::RateFit64> {
                let rows: Vec<&GroupFit64> = fits
                    .iter()
                    .filter(|g| g.group == name && a.alpha.is_none_or(|k| g.alpha == k))
                    .collect();
                match rows.as_slice() {
                    [] => bail!("no fit for group `{name}`"),
                    [g] => g
                        .fit
                        .clone()
                        .with_context(|| format!("group `{name}` was skipped")),
                    _ => bail!("group `{name}` has several alphas; pass --alpha"),
                }
            };
            let cmp = compare_lines(&a.a, &find(&a.a)?, &a.b, &find(&a.b)?, a.tol);
            println!("{cmp}");
            write_json(&a.out, &cmp)?;
            vec![a.out.clone()]
        }
        Command::Qq(a) => {
            inputs.add(&a.corpus);
            let corpus = load_corpus(&a.corpus)?;
            let values: Vec<f64> = corpus
                .articles
                .iter()
                .filter(|art| a.outlet.as_ref().is_none_or(|o| &art.outlet == o))
                .filter(|art| art.window_comments().len() >= a.min_comments.max(1))
                .map(|art| (art.window_comments().len() as f64).log10())
                .collect();
            let qq = qq_normal(&values)?;
            println!("n = {}, correlation = {:.6}", values.len(), qq.correlation);
            let mut w = create(&a.out)?;
            write_qq_csv(&qq, &mut w)?;
            w.flush()?;
            vec![a.out.clone()]
        }
        Command::Categorize(a) => {
            inputs.add(&a.corpus);
            let corpus = load_corpus(&a.corpus)?;
            let assignments = categorize_all(&corpus);
            let mut w = create(&a.out)?;
            write_assignments_csv(&assignments, &mut w)?;
            w.flush()?;
            save_corpus(&propagate_categories(&corpus, &assignments), &a.out_corpus)?;
            vec![a.out.clone(), a.out_corpus.clone()]
        }
    };
    Ok((inputs.0, outputs))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth(_) => "synth",
        Command::Features(_) => "features",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Ablate(_) => "ablate",
        Command::Select(_) => "select",
        Command::RateFit(_) => "rate-fit",
        Command::RateCompare(_) => "rate-compare",
        Command::Qq(_) => "qq",
        Command::Categorize(_) => "categorize",
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    let start = Instant::now();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let seed = cli.seed.unwrap_or(0);
    let (inputs, outputs) = run(&cli, seed)?;
    let manifest_path = cli.manifest.clone().unwrap_or_else(|| match &cli.command {
        Command::Synth(a) => a.out.join("manifest.json"),
        _ => {
            let mut s = outputs[0].clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
    });
    let manifest = RunManifest {
        command: command_name(&cli.command),
        version: env!("CARGO_PKG_VERSION"),
        flags: &cli.command,
        seed,
        threads: rayon::current_num_threads(),
        inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path, &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
