use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use synthrisk::attacks::{
    aia_distance, aia_ml, default_partition, domias_mia, gtcap, linkability_attack, singling_out_mia, AttackConfig,
    AttackRecord, AuxInfo, BandwidthRule, InferenceScore, LearnerSpec, NumericScoring,
};
use synthrisk::datasets::mini_adult;
use synthrisk::harness::{self, ExperimentConfig, ExperimentReport};
use synthrisk::indicators::{dcr, ims, knn_indicator, IndicatorConfig};
use synthrisk::risk::{fit_dp_marginal, fit_kernel_synth, leaky_release, load_external_synth, DEFAULT_BINS};
use synthrisk::rng::{derive_seed, tag};
use synthrisk::tabular::{load_csv, split, write_csv, Dataset, Schema};

#[derive(Parser, Debug)]
#[command(name = "synthrisk", version, about = "Privacy risk assessment for tabular synthetic data")]
struct Cli {
    /// Seed for every random choice of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments.
    #[arg(long, global = true, env = "SYNTHRISK_WORKERS")]
    workers: Option<usize>,
    /// JSON file with attribute declarations used when reading CSVs.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the inferred schema of a CSV file.
    Inspect { csv: PathBuf },
    /// Write train, control and release partitions.
    Split {
        csv: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Train, control and release fractions.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.3, 0.3, 0.4])]
        fractions: Vec<f64>,
    },
    /// Write a seeded mini-Adult table.
    GenData {
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a generator on a training CSV and write a synthetic CSV.
    Synth(SynthArgs),
    /// Evaluate a privacy indicator.
    Metric(MetricArgs),
    /// Run an attack simulation.
    Attack(AttackArgs),
    /// Run the full experiment described by a config file.
    Experiment(ExperimentArgs),
    /// Run the k and radius sweeps of a config file.
    Sweep(ExperimentArgs),
    /// Rebuild plot series from a results.csv.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SynthKind {
    Kernel,
    Dp,
    Leaky,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Bandwidth h (kernel), epsilon (dp) or leak fraction f_l (leaky).
    #[arg(long)]
    param: f64,
    #[arg(long)]
    train: PathBuf,
    /// Non-member rows filling the leaky release.
    #[arg(long)]
    release: Option<PathBuf>,
    /// Rows to draw; the training size by default. Ignored by leaky.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MetricName {
    Ims,
    Dcr,
    Knn,
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, value_enum)]
    name: MetricName,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long)]
    real: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AttackName {
    SinglingOut,
    Domias,
    Linkability,
    AiaDistance,
    AiaMl,
    Gtcap,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long, value_enum)]
    name: AttackName,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    control: PathBuf,
    /// Population sample for the DOMIAS reference density.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Target attribute of inference attacks.
    #[arg(long)]
    target: Option<String>,
    /// Known attributes; all but the target when absent.
    #[arg(long, value_delimiter = ',')]
    keys: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    #[arg(long, default_value_t = 2000)]
    n_attacks: usize,
    /// Neighbors per half for linkability.
    #[arg(long, default_value_t = 1)]
    k: usize,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

fn emit(value: &serde_json::Value) {
    println!("{value}");
}

fn read_schema(path: &Option<PathBuf>) -> Result<Option<Schema>> {
    let Some(p) = path else { return Ok(None) };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading schema {}", p.display()))?;
    let attrs = serde_json::from_str(&text).with_context(|| format!("parsing schema {}", p.display()))?;
    Ok(Some(Schema::hint(attrs)?))
}

struct Ctx {
    seed: u64,
    seed_override: Option<u64>,
    workers: Option<usize>,
    schema: Option<Schema>,
}

impl Ctx {
    fn load(&self, path: &Path) -> Result<Dataset> {
        load_csv(path, self.schema.as_ref()).with_context(|| format!("loading {}", path.display()))
    }

    /// Loads `path` with the schema of `base` so category codes agree;
    /// unseen levels are appended.
    fn load_like(&self, base: &Dataset, path: &Path) -> Result<Dataset> {
        let hint = self.schema.clone().unwrap_or_else(|| base.schema().clone());
        load_external_synth(path, &hint).with_context(|| format!("loading {}", path.display()))
    }
}

/// Loads several CSVs and conforms them to the union of their schemas.
fn load_aligned(ctx: &Ctx, paths: &[&Path]) -> Result<Vec<Dataset>> {
    let first = ctx.load(paths[0])?;
    let mut sets = vec![first];
    for p in &paths[1..] {
        let d = ctx.load_like(&sets[0], p)?;
        sets.push(d);
    }
    let mut wide = sets[0].with_rows(vec![])?;
    for d in &sets[1..] {
        wide = wide.concat(&d.with_rows(vec![])?)?;
    }
    Ok(sets.iter().map(|d| d.conform_to(wide.schema())).collect::<synthrisk::Result<_>>()?)
}

fn inspect(ctx: &Ctx, csv: &Path) -> Result<()> {
    let data = ctx.load(csv)?;
    let attrs: Vec<serde_json::Value> = data
        .schema()
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, a)| match a.vocabulary() {
            Some(v) => json!({"name": a.name, "kind": "categorical", "levels": v}),
            None => {
                let (lo, hi) = data.observed_range(i).unwrap_or((f64::NAN, f64::NAN));
                json!({"name": a.name, "kind": "numeric", "min": lo, "max": hi})
            }
        })
        .collect();
    eprintln!("{:<24} {:<12} summary", "attribute", "kind");
    for (i, a) in data.schema().attributes().iter().enumerate() {
        let summary = match a.vocabulary() {
            Some(v) => format!("{} levels", v.len()),
            None => {
                let (lo, hi) = data.observed_range(i).unwrap_or((f64::NAN, f64::NAN));
                format!("[{lo}, {hi}]")
            }
        };
        let kind = if a.is_numeric() { "numeric" } else { "categorical" };
        eprintln!("{:<24} {:<12} {summary}", a.name, kind);
    }
    emit(&json!({"rows": data.n_rows(), "attributes": attrs}));
    Ok(())
}

fn split_cmd(ctx: &Ctx, csv: &Path, out_dir: &Path, fractions: &[f64]) -> Result<()> {
    let data = ctx.load(csv)?;
    let (train, control, release) = split(&data, (fractions[0], fractions[1], fractions[2]), ctx.seed)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = serde_json::Map::new();
    for (name, d) in [("train", &train), ("control", &control), ("release", &release)] {
        let p = out_dir.join(format!("{name}.csv"));
        write_csv(d, &p)?;
        files.insert(name.into(), json!({"path": p, "rows": d.n_rows()}));
    }
    emit(&serde_json::Value::Object(files));
    Ok(())
}

fn synth_cmd(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    let train = ctx.load(&a.train)?;
    let n = a.rows.unwrap_or(train.n_rows());
    let synth = match a.kind {
        SynthKind::Kernel => fit_kernel_synth(&train, a.param)?.sample(n, ctx.seed),
        SynthKind::Dp => {
            fit_dp_marginal(&train, a.param, a.bins, derive_seed(ctx.seed, &[tag("dp-fit")]))?.sample(n, ctx.seed)
        }
        SynthKind::Leaky => {
            let Some(rp) = &a.release else {
                bail!("--kind leaky needs --release");
            };
            let sets = load_aligned(ctx, &[&a.train, rp])?;
            leaky_release(&sets[0], &sets[1], a.param, ctx.seed)?
        }
    };
    write_csv(&synth, &a.out)?;
    emit(&json!({"kind": format!("{:?}", a.kind).to_lowercase(), "param": a.param, "rows": synth.n_rows(), "path": a.out}));
    Ok(())
}

fn metric_cmd(ctx: &Ctx, a: &MetricArgs) -> Result<()> {
    let sets = load_aligned(ctx, &[&a.real, &a.synth])?;
    let (real, synth) = (&sets[0], &sets[1]);
    let cfg = IndicatorConfig {
        alpha_percent: a.alpha,
        k: a.k,
        seed: ctx.seed,
    };
    let (name, score) = match a.name {
        MetricName::Ims => ("ims", ims(real, synth)?),
        MetricName::Dcr => ("dcr", dcr(synth, real, &cfg)?),
        MetricName::Knn => ("knn", knn_indicator(synth, real, &cfg)?),
    };
    let mut v = serde_json::to_value(&score)?;
    v["metric"] = json!(name);
    emit(&v);
    Ok(())
}

fn aux_of(schema: &Schema, target: &Option<String>, keys: &Option<Vec<String>>) -> Result<AuxInfo> {
    let Some(t) = target else { bail!("--target is required for inference attacks") };
    Ok(match keys {
        Some(k) => AuxInfo::from_names(schema, k, t)?,
        None => {
            let ti = schema.index_of(t).with_context(|| format!("unknown attribute {t:?}"))?;
            AuxInfo::all_but(ti, schema.len())?
        }
    })
}

fn inference_json(name: &str, params: serde_json::Value, train: &InferenceScore, control: &InferenceScore) -> serde_json::Value {
    match (train.as_rate(), control.as_rate()) {
        (Some(t), Some(c)) => serde_json::to_value(AttackRecord::from_estimates(name, params, t, Some(c))).expect("serializable"),
        _ => json!({"attack": name, "params": params, "value": train.value(), "n": train.n(), "control_value": control.value()}),
    }
}

fn attack_cmd(ctx: &Ctx, a: &AttackArgs) -> Result<()> {
    let mut paths: Vec<&Path> = vec![&a.train, &a.control, &a.synth];
    if let Some(r) = &a.reference {
        paths.push(r);
    }
    let sets = load_aligned(ctx, &paths)?;
    let (train, control, synth) = (&sets[0], &sets[1], &sets[2]);
    let schema = train.schema();
    let acfg = AttackConfig {
        n_attacks: a.n_attacks,
        k_link: a.k,
        gtcap_radius: a.radius,
        seed: ctx.seed,
        ..AttackConfig::default()
    };
    let out = match a.name {
        AttackName::SinglingOut => {
            let r = singling_out_mia(synth, train, control, &acfg)?;
            let params = json!({"n_attacks": a.n_attacks, "pass_attributes": r.passes[r.best_pass].n_attributes});
            serde_json::to_value(AttackRecord::from_estimates("singling-out", params, &r.train, Some(&r.control)))?
        }
        AttackName::Linkability => {
            let (a1, a2) = default_partition(schema.len());
            let r = linkability_attack(synth, train, control, (&a1, &a2), a.k, a.n_attacks, ctx.seed)?;
            let params = json!({"k": a.k, "n_attacks": a.n_attacks});
            serde_json::to_value(AttackRecord::from_estimates("linkability", params, &r.train, Some(&r.control)))?
        }
        AttackName::Domias => {
            let Some(reference) = sets.get(3) else { bail!("--reference is required for domias") };
            let r = domias_mia(synth, reference, train, control, BandwidthRule::default())?;
            json!({"attack": "domias", "score": r.score, "auc": r.auc, "dropped_dims": r.dropped_dims})
        }
        AttackName::AiaDistance => {
            let aux = aux_of(schema, &a.target, &a.keys)?;
            let r = aia_distance(synth, train, control, &aux, NumericScoring::default(), a.n_attacks, acfg.confidence, ctx.seed)?;
            inference_json("aia-distance", json!({"target": a.target, "n_attacks": a.n_attacks}), &r.train, &r.control)
        }
        AttackName::AiaMl => {
            let aux = aux_of(schema, &a.target, &a.keys)?;
            let r = aia_ml(synth, train, control, &aux, &LearnerSpec::default(), a.n_attacks, acfg.confidence, ctx.seed)?;
            inference_json("aia-ml", json!({"target": a.target, "n_attacks": a.n_attacks}), &r.train, &r.control)
        }
        AttackName::Gtcap => {
            let aux = aux_of(schema, &a.target, &a.keys)?;
            let t = gtcap(synth, train, &aux.keys, aux.target, a.radius)?;
            let c = gtcap(synth, control, &aux.keys, aux.target, a.radius)?;
            json!({"attack": "gtcap", "params": {"target": a.target, "radius": a.radius}, "value": t, "control_value": c})
        }
    };
    emit(&out);
    Ok(())
}

fn load_config(ctx: &Ctx, path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json_file(path).with_context(|| format!("loading config {}", path.display()))?;
    if ctx.workers.is_some() {
        cfg.workers = ctx.workers;
    }
    if let Some(s) = ctx.seed_override {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_table(report: &ExperimentReport) {
    eprintln!(
        "{:<9} {:<9} {:>6} {:>6} {:<16} {:>9} {:>9} {:>9}",
        "stage", "model", "level", "outl", "metric", "value", "ci_low", "ci_high"
    );
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in &report.rows {
        let metric = if r.control_adjusted { format!("{}*", r.metric) } else { r.metric.clone() };
        eprintln!(
            "{:<9} {:<9} {:>6} {:>6} {:<16} {:>9} {:>9} {:>9}{}",
            r.stage,
            r.risk_model,
            r.risk_value,
            r.outlier_fraction,
            metric,
            f(r.value),
            f(r.ci_low),
            f(r.ci_high),
            r.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default()
        );
    }
    eprintln!("(* control-adjusted)");
}

fn finish_report(report: &ExperimentReport, cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    print_table(report);
    let files = harness::write_report(report, cfg, out_dir)?;
    let errors = report.rows.iter().filter(|r| r.error.is_some()).count();
    emit(&json!({"rows": report.rows.len(), "errors": errors, "files": files}));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        seed_override: cli.seed,
        workers: cli.workers,
        schema: read_schema(&cli.schema)?,
    };
    match &cli.command {
        Command::Inspect { csv } => inspect(&ctx, csv),
        Command::Split { csv, out_dir, fractions } => split_cmd(&ctx, csv, out_dir, fractions),
        Command::GenData { rows, out } => {
            let d = mini_adult(*rows, ctx.seed);
            write_csv(&d, out)?;
            emit(&json!({"rows": d.n_rows(), "path": out}));
            Ok(())
        }
        Command::Synth(a) => synth_cmd(&ctx, a),
        Command::Metric(a) => metric_cmd(&ctx, a),
        Command::Attack(a) => attack_cmd(&ctx, a),
        Command::Experiment(a) => {
            let cfg = load_config(&ctx, &a.config)?;
            let report = harness::run_all(&cfg)?;
            finish_report(&report, &cfg, &a.out_dir)
        }
        Command::Sweep(a) => {
            let cfg = load_config(&ctx, &a.config)?;
            let report = harness::parameter_sweeps(&cfg)?;
            finish_report(&report, &cfg, &a.out_dir)
        }
        Command::Report { results, out_dir } => {
            let rows = harness::read_results_csv(results)?;
            let files = harness::write_plotdata(&rows, &out_dir.join(harness::PLOTDATA_DIR))?;
            emit(&json!({"rows": rows.len(), "files": files}));
            Ok(())
        }
    }
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !parts.last().is_some_and(|p| p.ends_with(&msg)) {
            parts.push(msg);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
