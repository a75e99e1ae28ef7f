use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ppg_bioid::auth::{self, AuthOptions, AuthProfile, Metric};
use ppg_bioid::eval::{self, macro_bac, Variant};
use ppg_bioid::features::{read_feature_csv, write_feature_csv};
use ppg_bioid::ident::{self, IdentKind, IdentModel};
use ppg_bioid::pipeline::{filter_signal, process_signal, FilterMode};
use ppg_bioid::synth::{generate_synthetic, separable_population, SyntheticSpec};
use ppg_bioid::{load_signal, FeatureVector, PipelineConfig, PpgSignal, SignalFormat};

/// PPG biometrics pipeline.
#[derive(Debug, Parser)]
#[command(name = "ppg-bioid", version)]
struct Cli {
    /// JSON configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "PPG_BIOID_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Harmonic,
    Soa,
}

impl From<Mode> for FilterMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Harmonic => FilterMode::Harmonic,
            Mode::Soa => FilterMode::Soa,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Knn,
    Lda,
    Nn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AuthVariant {
    /// Single cluster, Euclidean distance.
    Euclidean,
    /// Single cluster, Mahalanobis distance.
    Mahal,
    /// Grid clusters, Mahalanobis distance.
    MultiCluster,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate synthetic recordings, one CSV per subject.
    Synth {
        /// Generator spec (JSON). Without it a five-subject preset is used.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Recording length of the preset, seconds.
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
    },
    /// Read recordings and rewrite them in the canonical CSV form.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Band-pass a recording and take its second derivative.
    Filter {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "harmonic")]
        mode: Mode,
    },
    /// Cut a recording into normalized cardiac periods.
    Segment {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "harmonic")]
        mode: Mode,
    },
    /// Extract feature vectors of accepted periods.
    Features {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "harmonic")]
        mode: Mode,
    },
    /// Train a closed-set identifier.
    TrainIdent {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value = "lda")]
        kind: Kind,
    },
    /// Score an identifier on labelled feature vectors.
    EvalIdent {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Enroll one subject.
    Enroll {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        subject: String,
        #[arg(long, value_enum, default_value = "multi-cluster")]
        variant: AuthVariant,
    },
    /// Verify feature vectors against a profile.
    Verify {
        #[arg(long)]
        profile: PathBuf,
        /// Feature CSV holding one or more periods.
        #[arg(long)]
        period: PathBuf,
    },
    /// Score a profile: rows of its subject are positives, others negatives.
    EvalAuth {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Run the benchmark variants over every variance subset.
    Report {
        /// Directory of recordings (.csv / .jsonl).
        #[arg(long, conflicts_with = "spec")]
        data: Option<PathBuf>,
        /// Synthetic spec to generate the recordings from.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Preset recording length when neither --data nor --spec is given.
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
        /// Comma-separated variant ids; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
    },
}

struct Ctx {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Ctx {
    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.out_file(name)?;
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Value> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx { cfg, out };

    match cli.cmd {
        Cmd::Synth { spec, duration } => synth(&ctx, spec.as_deref(), duration),
        Cmd::Ingest { inputs } => ingest(&ctx, &inputs),
        Cmd::Filter { input, mode } => filter(&ctx, &input, mode.into()),
        Cmd::Segment { input, mode } => segment(&ctx, &input, mode.into()),
        Cmd::Features { inputs, mode } => features(&ctx, &inputs, mode.into()),
        Cmd::TrainIdent { features, kind } => train_ident(&ctx, &features, kind),
        Cmd::EvalIdent { model, features } => eval_ident(&ctx, &model, &features),
        Cmd::Enroll {
            features,
            subject,
            variant,
        } => enroll(&ctx, &features, &subject, variant),
        Cmd::Verify { profile, period } => verify(&ctx, &profile, &period),
        Cmd::EvalAuth { profile, features } => eval_auth(&ctx, &profile, &features),
        Cmd::Report {
            data,
            spec,
            duration,
            variants,
        } => report(&ctx, data.as_deref(), spec.as_deref(), duration, &variants),
    }
}

fn read_signal(path: &Path) -> Result<PpgSignal> {
    load_signal(path, SignalFormat::from_path(path))
        .with_context(|| format!("reading {}", path.display()))
}

fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_feature_csv(f).with_context(|| format!("parsing {}", path.display()))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_spec(ctx: &Ctx, spec: Option<&Path>, duration: f64) -> Result<SyntheticSpec> {
    Ok(match spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut s: SyntheticSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            if ctx.cfg.seed != 0 {
                s.seed = ctx.cfg.seed;
            }
            s
        }
        None => separable_population(duration, ctx.cfg.seed),
    })
}

fn synth(ctx: &Ctx, spec: Option<&Path>, duration: f64) -> Result<Value> {
    let spec = load_spec(ctx, spec, duration)?;
    let signals = generate_synthetic(&spec)?;
    let mut files = vec![];
    for s in &signals {
        let name = format!("{}.csv", s.subject_id.as_deref().unwrap_or("subject"));
        s.save_csv(&ctx.out_file(&name)?)?;
        files.push(name);
    }
    Ok(json!({"command": "synth", "subjects": signals.len(), "seed": spec.seed, "files": files}))
}

fn ingest(ctx: &Ctx, inputs: &[PathBuf]) -> Result<Value> {
    let mut rows = vec![];
    for p in inputs {
        let s = read_signal(p)?;
        let name = format!("{}.csv", s.subject_id.as_deref().unwrap_or("signal"));
        s.save_csv(&ctx.out_file(&name)?)?;
        rows.push(json!({"file": name, "samples": s.len(), "sample_rate_hz": s.sample_rate_hz}));
    }
    Ok(json!({"command": "ingest", "signals": rows}))
}

fn filter(ctx: &Ctx, input: &Path, mode: FilterMode) -> Result<Value> {
    let sig = read_signal(input)?;
    let f = filter_signal(&sig, mode, &ctx.cfg.filter)?;
    f.h.save_csv(&ctx.out_file("h.csv")?)?;
    f.h2.save_csv(&ctx.out_file("h2.csv")?)?;
    let f1h: Vec<f64> = f.estimates.iter().map(|e| e.f1h_hz).collect();
    ctx.write("f1h.json", &serde_json::to_string(&f1h)?)?;
    let mut sorted = f1h.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(json!({
        "command": "filter",
        "samples": f.h.len(),
        "windows": f1h.len(),
        "f1h_median_hz": sorted.get(sorted.len() / 2),
    }))
}

fn segment(ctx: &Ctx, input: &Path, mode: FilterMode) -> Result<Value> {
    let sig = read_signal(input)?;
    let p = process_signal(&sig, mode, &ctx.cfg.filter, &ctx.cfg.segment)?;
    ctx.write("periods.json", &serde_json::to_string(&p.periods)?)?;
    let [m1, m2, m3, d] = p.morphology_counts();
    Ok(json!({
        "command": "segment",
        "periods": p.periods.len(),
        "morphology": {"M1": m1, "M2": m2, "M3": m3, "Discard": d},
    }))
}

fn features(ctx: &Ctx, inputs: &[PathBuf], mode: FilterMode) -> Result<Value> {
    let mut rows = vec![];
    let mut total = 0;
    for p in inputs {
        let sig = read_signal(p)?;
        let proc = process_signal(&sig, mode, &ctx.cfg.filter, &ctx.cfg.segment)?;
        total += proc.periods.len();
        rows.extend(proc.accepted().cloned());
    }
    let path = ctx.out_file("features.csv")?;
    write_feature_csv(BufWriter::new(File::create(&path)?), &rows)?;
    Ok(
        json!({"command": "features", "periods": total, "accepted": rows.len(), "file": file_name(&path)}),
    )
}

fn train_ident(ctx: &Ctx, features: &Path, kind: Kind) -> Result<Value> {
    let rows = read_features(features)?;
    let kind = match kind {
        Kind::Knn => IdentKind::Knn,
        Kind::Lda => IdentKind::Lda,
        Kind::Nn => IdentKind::Nn,
    };
    let model = ident::train_ident(&rows, kind, &ctx.cfg.ident_config())?;
    let path = ctx.out_file("model.json")?;
    model.save(&path)?;
    let morphs: Vec<String> = model.models.keys().map(|m| m.to_string()).collect();
    Ok(json!({
        "command": "train-ident",
        "kind": kind,
        "subjects": model.labels.len(),
        "morphologies": morphs,
        "file": file_name(&path),
    }))
}

fn eval_ident(ctx: &Ctx, model: &Path, features: &Path) -> Result<Value> {
    let model = IdentModel::load(model).with_context(|| format!("loading {}", model.display()))?;
    let rows = read_features(features)?;
    if rows.is_empty() {
        bail!("no feature rows in {}", features.display());
    }
    let preds: Vec<Option<(String, f64)>> = rows
        .iter()
        .map(|f| ident::identify(&model, f).ok())
        .collect();
    let path = ctx.out_file("predictions.csv")?;
    let mut text = String::from("subject,predicted,score\n");
    for (f, p) in rows.iter().zip(&preds) {
        match p {
            Some((l, s)) => text.push_str(&format!("{},{},{}\n", f.subject_id, l, s)),
            None => text.push_str(&format!("{},,\n", f.subject_id)),
        }
    }
    fs::write(&path, text)?;
    let truth: Vec<String> = rows.iter().map(|f| f.subject_id.clone()).collect();
    let labels: Vec<Option<String>> = preds
        .iter()
        .map(|p| p.as_ref().map(|x| x.0.clone()))
        .collect();
    let correct = truth
        .iter()
        .zip(&labels)
        .filter(|(t, p)| p.as_ref() == Some(t))
        .count();
    let o = macro_bac(&truth, &labels, &model.labels)?;
    Ok(json!({
        "command": "eval-ident",
        "n": rows.len(),
        "accuracy": correct as f64 / rows.len() as f64,
        "tpr": o.rates.tpr,
        "tnr": o.rates.tnr,
        "bac": o.rates.bac,
    }))
}

fn enroll(ctx: &Ctx, features: &Path, subject: &str, variant: AuthVariant) -> Result<Value> {
    let rows: Vec<FeatureVector> = read_features(features)?
        .into_iter()
        .filter(|f| f.subject_id == subject)
        .collect();
    let base = ctx.cfg.auth;
    let opts = match variant {
        AuthVariant::Euclidean => AuthOptions {
            metric: Metric::Euclidean,
            multi_cluster: false,
            ..base
        },
        AuthVariant::Mahal => AuthOptions {
            metric: Metric::Mahalanobis,
            multi_cluster: false,
            ..base
        },
        AuthVariant::MultiCluster => AuthOptions {
            metric: Metric::Mahalanobis,
            multi_cluster: true,
            ..base
        },
    };
    let profile = auth::enroll(&rows, subject, &opts)?;
    let path = ctx.out_file("profile.json")?;
    profile.save(&path)?;
    Ok(json!({
        "command": "enroll",
        "subject": subject,
        "periods": rows.len(),
        "clusters": profile.cluster_count(),
        "file": file_name(&path),
    }))
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn verify(_ctx: &Ctx, profile: &Path, period: &Path) -> Result<Value> {
    let profile =
        AuthProfile::load(profile).with_context(|| format!("loading {}", profile.display()))?;
    let rows = read_features(period)?;
    let results: Vec<(bool, f64)> = rows.iter().map(|f| auth::verify(&profile, f)).collect();
    Ok(match results.as_slice() {
        [] => bail!("no feature rows in {}", period.display()),
        [(accept, d)] => json!({"accept": accept, "distance": finite(*d)}),
        many => json!({
            "accepted": many.iter().filter(|r| r.0).count(),
            "total": many.len(),
            "results": many.iter().map(|(a, d)| json!({"accept": a, "distance": finite(*d)})).collect::<Vec<_>>(),
        }),
    })
}

fn eval_auth(_ctx: &Ctx, profile: &Path, features: &Path) -> Result<Value> {
    let profile =
        AuthProfile::load(profile).with_context(|| format!("loading {}", profile.display()))?;
    let rows = read_features(features)?;
    let mut c = eval::ConfusionCounts::default();
    for f in &rows {
        let accept = auth::verify(&profile, f).0;
        match (f.subject_id == profile.subject_id, accept) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    let r = eval::bac(&c)?;
    Ok(json!({
        "command": "eval-auth",
        "subject": profile.subject_id,
        "counts": c,
        "tpr": r.tpr,
        "tnr": r.tnr,
        "bac": r.bac,
    }))
}

fn list_recordings(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("csv" | "jsonl")
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .csv or .jsonl recordings in {}", dir.display());
    }
    Ok(files)
}

fn report(
    ctx: &Ctx,
    data: Option<&Path>,
    spec: Option<&Path>,
    duration: f64,
    variants: &[String],
) -> Result<Value> {
    let data = data.map(Path::to_path_buf).or_else(|| {
        if spec.is_none() {
            ctx.cfg.data_dir.clone()
        } else {
            None
        }
    });
    let signals = match data {
        Some(dir) => list_recordings(&dir)?
            .iter()
            .map(|p| read_signal(p))
            .collect::<Result<Vec<_>>>()?,
        None => generate_synthetic(&load_spec(ctx, spec, duration)?)?,
    };
    let mut bench = ctx.cfg.bench_config();
    if !variants.is_empty() {
        bench.variants = variants
            .iter()
            .map(|v| v.parse::<Variant>())
            .collect::<ppg_bioid::Result<_>>()?;
    }
    let ds = eval::build_dataset(&signals, &ctx.cfg.filter, &ctx.cfg.segment);
    let rows = eval::run_benchmark(&ds, &bench);

    let csv_path = ctx.out_file("report.csv")?;
    let mut buf = vec![];
    eval::write_report_csv(&mut buf, &rows)?;
    fs::write(&csv_path, buf)?;
    ctx.write("report.json", &eval::report_json(&rows)?)?;
    let failed: Vec<Value> = ds
        .failed
        .iter()
        .map(|(id, why)| json!({"subject": id, "error": why}))
        .collect();
    Ok(json!({
        "command": "report",
        "subjects": ds.total_subjects(),
        "failed": failed,
        "rows": rows.len(),
        "files": ["report.csv", "report.json"],
    }))
}
