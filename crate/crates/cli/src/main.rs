mod config;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lpgkit::ablation::{run_pairwise_ablation, AblationOptions, Experiment};
use lpgkit::encoder::{encode_edges, encode_vertices, FeatureMatrix};
use lpgkit::gnn::{save_checkpoint, ConvKind, ModelConfig};
use lpgkit::heatmap::{write_heatmap, NEUTRAL_TOLERANCE};
use lpgkit::io::{dataset_stats, load_lpg_jsonl, make_splits, CsvManifest, DEFAULT_RATIOS};
use lpgkit::schema::{infer_schema, restrict_schema, EncodingSchema, SchemaOptions};
use lpgkit::synth::{generate, PlantedSpec};
use lpgkit::tasks::{build_completion_task, CompletionKind, CompletionTask};
use lpgkit::train::{argmax_rows, train, Sampler, TaskKind, TrainConfig, TrainingData, REPEAT_SEEDS};
use lpgkit::{EntityKind, PropertyGraph};

use config::{Resolver, RunManifest};

pub const TOOL: &str = "lpgkit";

#[derive(Parser)]
#[command(name = "lpgkit", version, about = "Labeled property graph encoding and GNN training")]
struct Cli {
    /// Worker threads for parallel jobs (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset statistics.
    Stats(InputArgs),
    /// Encode labels and properties into a feature matrix.
    Encode(EncodeArgs),
    /// Train a model on a vertex task.
    Train(TrainCmd),
    /// Predict a label or property for every eligible vertex.
    Complete(CompleteCmd),
    /// Single-feature and pairwise feature ablation.
    Ablate(AblateCmd),
    /// Generate a planted-signal fixture.
    Synth(SynthCmd),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// LPG-JSONL file, or the node CSV when --edges is given.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Edge CSV (tabular input).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Column manifest JSON for tabular input.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Treat tabular input as undirected.
    #[arg(long)]
    undirected: bool,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = ["vertex", "edge"])]
    entity: Option<String>,
    /// Output LPGF feature file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated labels/keys to keep; "" keeps nothing.
    #[arg(long)]
    include: Option<String>,
    #[arg(long = "schema-out")]
    schema_out: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SchemaArgs {
    #[arg(long = "text-dim")]
    text_dim: Option<usize>,
    #[arg(long = "categorical-threshold")]
    categorical_threshold: Option<usize>,
    /// Put free-text blocks after all other properties.
    #[arg(long = "appendix-layout")]
    appendix_layout: bool,
    /// Treat integer keys with few distinct values as categorical.
    #[arg(long = "int-categorical")]
    int_categorical: bool,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, value_parser = ["gcn", "gin", "gat"])]
    model: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Sampled subgraphs (optimizer steps) per epoch.
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "nodes-per-batch")]
    nodes_per_batch: Option<usize>,
    /// Train on the whole graph at every step.
    #[arg(long = "full-batch")]
    full_batch: bool,
    /// JSON object keyed by flag names, or a previous run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long, value_parser = ["node-class", "node-reg"])]
    task: Option<String>,
    /// Label (comma-separated sibling labels for multi-class) or property key.
    #[arg(long)]
    target: Option<String>,
    /// CSV `vertex_id,class` with external classes.
    #[arg(long)]
    targets: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteCmd {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = ["label", "property"])]
    kind: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    schema: SchemaArgs,
    /// Predictions CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    schema: SchemaArgs,
    /// Also train every pair of property keys.
    #[arg(long)]
    pairs: bool,
    /// One row per label instead of the label group.
    #[arg(long = "per-label")]
    per_label: bool,
    /// Add vertex degree to the structure-only input.
    #[arg(long = "degree-feature")]
    degree_feature: bool,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let jobs = match cli.jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("starting worker pool")?;
    match cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Train(a) => cmd_train(a),
        Command::Complete(a) => cmd_complete(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

struct LoadedInput {
    graph: PropertyGraph,
    files: Vec<PathBuf>,
}

fn load_input(r: &mut Resolver, a: InputArgs) -> Result<LoadedInput> {
    let input: PathBuf = r.required("input", a.input)?;
    let edges: Option<PathBuf> = r.opt("edges", a.edges)?;
    let manifest: Option<PathBuf> = r.opt("manifest", a.manifest)?;
    let undirected = r.switch("undirected", a.undirected)?;
    match edges {
        None => {
            let graph = load_lpg_jsonl(&input).with_context(|| format!("loading {}", input.display()))?;
            Ok(LoadedInput { graph, files: vec![input] })
        }
        Some(edges) => {
            let Some(manifest) = manifest else { bail!("--edges needs --manifest") };
            let m = CsvManifest::load(&manifest).with_context(|| format!("loading {}", manifest.display()))?;
            let open = |p: &Path| std::fs::File::open(p).with_context(|| format!("opening {}", p.display()));
            let graph = lpgkit::io::load_lpg_csv_with(open(&input)?, open(&edges)?, &m, !undirected)?;
            Ok(LoadedInput { graph, files: vec![input, edges, manifest] })
        }
    }
}

fn schema_options(r: &mut Resolver, a: &SchemaArgs) -> Result<SchemaOptions> {
    let d = SchemaOptions::default();
    Ok(SchemaOptions {
        text_dim: r.get("text-dim", a.text_dim, d.text_dim)?,
        categorical_threshold: r.get("categorical-threshold", a.categorical_threshold, d.categorical_threshold)?,
        appendix_layout: r.switch("appendix-layout", a.appendix_layout)?,
        integers_as_categorical: r.switch("int-categorical", a.int_categorical)?,
        ..d
    })
}

struct Recipe {
    model: ModelConfig,
    train: TrainConfig,
}

fn recipe(r: &mut Resolver, a: &TrainArgs, task: TaskKind) -> Result<Recipe> {
    let defaults = TrainConfig::new(task);
    let kind: ConvKind = r.get("model", a.model.clone(), "gcn".to_string())?.parse()?;
    let mut model = ModelConfig::new(kind, 0, task.output_dim());
    model.hidden = r.get("hidden", a.hidden, model.hidden)?;
    model.heads = r.get("heads", a.heads, model.heads)?;
    let epochs = r.get("epochs", a.epochs, defaults.epochs)?;
    let batch_size = r.get("batch-size", a.batch_size, defaults.batch_size)?;
    let lr0 = r.get("lr", a.lr, defaults.lr0)?;
    let seed = r.seed(a.seed)?;
    let full = r.switch("full-batch", a.full_batch)?;
    let npb = r.opt("nodes-per-batch", a.nodes_per_batch)?;
    let sampler = if full { Sampler::FullBatch } else { Sampler::NodeSubgraph { nodes_per_batch: npb } };
    let train = TrainConfig { epochs, batch_size, lr0, seed, sampler, ..defaults };
    train.validate()?;
    model.seed = seed;
    Ok(Recipe { model, train })
}

/// Reads `vertex_id,class`; class names sort numerically when all are
/// integers, else lexically.
fn read_class_targets(graph: &PropertyGraph, path: &Path) -> Result<CompletionTask> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let id: u64 = rec.get(0).context("missing vertex_id")?.trim().parse().context("vertex_id")?;
        rows.push((id, rec.get(1).context("missing class")?.trim().to_string()));
    }
    let mut names: Vec<String> = rows.iter().map(|(_, c)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap());
    }
    let mut classes = vec![usize::MAX; graph.vertex_count()];
    for (id, c) in rows {
        let pos = graph.vertex_position(id).with_context(|| format!("targets name unknown vertex {id}"))?;
        classes[pos] = names.iter().position(|n| *n == c).unwrap();
    }
    if classes.contains(&usize::MAX) {
        bail!("targets file does not cover every vertex");
    }
    Ok(CompletionTask::from_classes(graph, &classes, names)?)
}

fn resolve_task(r: &mut Resolver, a: TaskArgs, graph: &PropertyGraph, files: &mut Vec<PathBuf>) -> Result<CompletionTask> {
    let task: String = r.get("task", a.task, "node-class".to_string())?;
    let target: Option<String> = r.opt("target", a.target)?;
    let targets: Option<PathBuf> = r.opt("targets", a.targets)?;
    match (task.as_str(), target, targets) {
        (_, Some(_), Some(_)) => bail!("give either --target or --targets"),
        ("node-class", None, Some(path)) => {
            let t = read_class_targets(graph, &path)?;
            files.push(path);
            Ok(t)
        }
        ("node-class", Some(t), None) => {
            let names: Vec<String> = t.split(',').map(|s| s.trim().to_string()).collect();
            Ok(build_completion_task(graph, CompletionKind::LabelPrediction { targets: names })?)
        }
        ("node-reg", Some(key), None) => Ok(build_completion_task(graph, CompletionKind::property(key))?),
        ("node-reg", None, Some(_)) => bail!("node-reg takes a property key via --target"),
        (_, None, None) => bail!("missing --target or --targets"),
        (other, ..) => bail!("unknown task {other:?}"),
    }
}

fn task_schema(graph: &PropertyGraph, task: &CompletionTask, opts: &SchemaOptions) -> Result<(EncodingSchema, FeatureMatrix)> {
    let full = infer_schema(graph, EntityKind::Vertex, opts)?;
    let schema = task.restrict_schema(&full);
    let features = encode_vertices(&schema, graph)?;
    Ok((schema, features))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_stats(a: InputArgs) -> Result<()> {
    let mut r = Resolver::new(None)?;
    let input = load_input(&mut r, a)?;
    print!("{}", dataset_stats(&input.graph));
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(a.config.as_deref())?;
    let input = load_input(&mut r, a.input)?;
    let entity = r.get("entity", a.entity, "vertex".to_string())?;
    let out: PathBuf = r.required("out", a.out)?;
    let include: Option<String> = r.opt("include", a.include)?;
    let schema_out: PathBuf = r.get("schema-out", a.schema_out, PathBuf::from(format!("{}.schema.json", out.display())))?;
    let opts = schema_options(&mut r, &a.schema)?;
    let config = r.finish()?;
    let kind = if entity == "edge" { EntityKind::Edge } else { EntityKind::Vertex };
    let full = infer_schema(&input.graph, kind, &opts)?;
    let schema = match include {
        None => full,
        Some(list) => {
            let names: BTreeSet<String> =
                list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
            restrict_schema(&full, &names)?
        }
    };
    let features = match kind {
        EntityKind::Vertex => encode_vertices(&schema, &input.graph)?,
        EntityKind::Edge => encode_edges(&schema, &input.graph)?,
    };
    features.save(&out)?;
    write_text(&schema_out, &schema.to_canonical_json())?;
    let mut manifest = RunManifest::new("encode", config, None, &input.files)?;
    manifest.outputs = vec![out.display().to_string(), schema_out.display().to_string()];
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(Path::new(&format!("{}.manifest.json", out.display())))?;
    println!("rows={} cols={}", features.rows(), features.cols);
    Ok(())
}

fn cmd_train(a: TrainCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(a.train.config.as_deref())?;
    let mut input = load_input(&mut r, a.input)?;
    let task = resolve_task(&mut r, a.task, &input.graph, &mut input.files)?;
    let opts = schema_options(&mut r, &a.schema)?;
    let recipe = recipe(&mut r, &a.train, task.task)?;
    let out_dir: PathBuf = r.get("out-dir", a.out_dir, PathBuf::from("lpgkit-train"))?;
    let config = r.finish()?;
    let (schema, features) = task_schema(&input.graph, &task, &opts)?;
    let strata = task.strata(&input.graph);
    let splits = make_splits(&task.eligible, DEFAULT_RATIOS, recipe.train.seed, strata.as_deref())?;
    let (model, report) =
        train::<f64>(&input.graph, &features, &task.targets, &splits, &recipe.model, &recipe.train)?;
    create_dir(&out_dir)?;
    let files = [
        out_dir.join("model.lpgm"),
        out_dir.join("report.csv"),
        out_dir.join("summary.json"),
        out_dir.join("schema.json"),
    ];
    save_checkpoint(&model, &schema.digest(), &files[0])?;
    write_text(&files[1], &report.to_csv())?;
    write_text(&files[2], &format!("{}\n", serde_json::to_string_pretty(&report.summary_json())?))?;
    write_text(&files[3], &schema.to_canonical_json())?;
    let mut manifest = RunManifest::new("train", config, Some(recipe.train.seed), &input.files)?;
    manifest.outputs = files.iter().map(|p| p.display().to_string()).collect();
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;
    println!("test_{}={:.6}", report.metric, report.test_metric);
    println!("best_epoch={}", report.best_epoch);
    Ok(())
}

fn cmd_complete(a: CompleteCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(a.train.config.as_deref())?;
    let input = load_input(&mut r, a.input)?;
    let kind: String = r.get("kind", a.kind, "label".to_string())?;
    let target: String = r.required("target", a.target)?;
    let completion = match kind.as_str() {
        "label" => CompletionKind::LabelPrediction { targets: target.split(',').map(|s| s.trim().to_string()).collect() },
        "property" => CompletionKind::property(target),
        other => bail!("unknown completion kind {other:?}"),
    };
    let task = build_completion_task(&input.graph, completion)?;
    let opts = schema_options(&mut r, &a.schema)?;
    let recipe = recipe(&mut r, &a.train, task.task)?;
    let out: PathBuf = r.get("out", a.out, PathBuf::from("predictions.csv"))?;
    let config = r.finish()?;
    let (_, features) = task_schema(&input.graph, &task, &opts)?;
    let strata = task.strata(&input.graph);
    let splits = make_splits(&task.eligible, DEFAULT_RATIOS, recipe.train.seed, strata.as_deref())?;
    let data = TrainingData::<f64>::new(&input.graph, &features, &task.targets, &splits)?;
    let (model, report) = lpgkit::train::train_on(&data, &recipe.model, &recipe.train)?;
    let outputs = model.predict(&data.adjacency, &data.features)?;
    let classes = argmax_rows(&outputs);
    let split_of = |id: &u64| {
        if splits.test.binary_search(id).is_ok() {
            "test"
        } else if splits.val.binary_search(id).is_ok() {
            "val"
        } else {
            "train"
        }
    };
    let mut csv = String::from("vertex_id,split,target,prediction\n");
    for id in &task.eligible {
        let pos = input.graph.vertex_position(*id).expect("eligible vertex");
        let (t, p) = match task.task {
            TaskKind::Classification { .. } => (
                task.class_names[task.targets[pos] as usize].clone(),
                task.class_names[classes[pos]].clone(),
            ),
            TaskKind::Regression => (format!("{}", task.targets[pos]), format!("{:.6}", outputs.get(pos, 0))),
        };
        let _ = writeln!(csv, "{id},{},{},{}", split_of(id), csv_field(&t), csv_field(&p));
    }
    write_text(&out, &csv)?;
    let mut manifest = RunManifest::new("complete", config, Some(recipe.train.seed), &input.files)?;
    manifest.outputs = vec![out.display().to_string()];
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(Path::new(&format!("{}.manifest.json", out.display())))?;
    println!("masked_{}={:.6}", report.metric, report.test_metric);
    println!("rows={}", task.eligible.len());
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_ablate(a: AblateCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(a.train.config.as_deref())?;
    let mut input = load_input(&mut r, a.input)?;
    let task = resolve_task(&mut r, a.task, &input.graph, &mut input.files)?;
    let opts = schema_options(&mut r, &a.schema)?;
    let recipe = recipe(&mut r, &a.train, task.task)?;
    let ablation = AblationOptions { pairs: r.switch("pairs", a.pairs)?, per_label: r.switch("per-label", a.per_label)? };
    let degree = r.switch("degree-feature", a.degree_feature)?;
    let repeats: usize = r.get("repeats", a.repeats, REPEAT_SEEDS)?;
    if repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let out_dir: PathBuf = r.get("out-dir", a.out_dir, PathBuf::from("lpgkit-ablate"))?;
    let config = r.finish()?;
    let (schema, features) = task_schema(&input.graph, &task, &opts)?;
    let seed = recipe.train.seed;
    let kind = recipe.model.kind;
    let mut exp = Experiment::new(&input.graph, &task, schema, features, recipe.model, recipe.train);
    exp.seeds = (0..repeats as u64).map(|i| seed + i).collect();
    exp.degree_feature = degree;
    let report = run_pairwise_ablation(&exp, kind, ablation)?;
    create_dir(&out_dir)?;
    let csv_path = out_dir.join("ablation.csv");
    let svg_path = out_dir.join("heatmap.svg");
    write_text(&csv_path, &report.to_csv())?;
    write_heatmap(&report, &svg_path, NEUTRAL_TOLERANCE)?;
    let mut manifest = RunManifest::new("ablate", config, Some(seed), &input.files)?;
    manifest.outputs = vec![csv_path.display().to_string(), svg_path.display().to_string()];
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_synth(a: SynthCmd) -> Result<()> {
    let start = Instant::now();
    let mut r = Resolver::new(None)?;
    let spec_path: Option<PathBuf> = r.opt("spec", a.spec)?;
    let out: PathBuf = r.required("out", a.out)?;
    let mut spec = match &spec_path {
        None => PlantedSpec::default(),
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing spec {}", p.display()))?,
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    r.get("resolved-spec", None, serde_json::to_value(&spec)?)?;
    let config = r.finish()?;
    let fixture = generate(&spec)?;
    let written = fixture.write(&out)?;
    let inputs: Vec<PathBuf> = spec_path.into_iter().collect();
    let mut manifest = RunManifest::new("synth", config, Some(spec.seed), &inputs)?;
    manifest.outputs = written.iter().map(|p| p.display().to_string()).collect();
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(&out.join("manifest.json"))?;
    println!("vertices={} edges={}", fixture.graph.vertex_count(), fixture.graph.edge_count());
    Ok(())
}
