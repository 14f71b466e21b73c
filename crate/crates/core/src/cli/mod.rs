//! The `msgat` command line: argument parsing, run configs, manifests and
//! exit codes. Every command runs inside a rayon pool of `--threads`
//! workers; one worker makes every output bit-reproducible.

mod config;

pub use config::{
    fingerprint_dir, fingerprint_spec, AblationConfig, RunConfig, RunManifest, ARTIFACT_VERSION, MANIFEST_FILE,
};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::graph::{
    delta_hyperbolicity, generate_synthetic, load_dataset, metapath_subgraph, sample_instances, write_dataset,
    GraphError, HeteroGraph, SamplerConfig, SyntheticSpec,
};
use crate::model::{forward_trace, Checkpoint, ModelError};
use crate::train::{evaluate, run_ablation, train, Embeddings, Task, TrainError};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Io(_) => 1,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Graph(g) => g.into(),
            ModelError::Config(m) => CliError::Config(m),
            ModelError::Autodiff(a) => CliError::Io(format!("internal: {a}")),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Divergence { .. } => CliError::Divergence(e.to_string()),
            TrainError::Model(m) => m.into(),
            TrainError::Config(m) => CliError::Config(m),
            e if e.is_data_error() => CliError::Data(e.to_string()),
            e => CliError::Io(format!("internal: {e}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "msgat",
    version,
    about = "Multi-hyperbolic-space heterogeneous graph attention network"
)]
pub struct Cli {
    /// Root seed; overrides `train.seed` (and `seed` of a synthetic spec).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 guarantees bit-reproducible outputs.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoint, history, results and embeddings.
    Train {
        /// Run config or manifest; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory; the config's synthetic spec is used when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        task: Option<Task>,
    },
    /// Score a checkpoint on the held-out split of its run.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        task: Option<Task>,
        /// Defaults to the manifest beside the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write `node_id<TAB>z` for every target node.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the metapath instances of one node.
    Sample {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        node: usize,
        /// Metapath such as `A,P,A`; repeatable. Defaults to every declared
        /// metapath starting at the node's type.
        #[arg(long = "metapath")]
        metapaths: Vec<String>,
        #[arg(long, default_value_t = SamplerConfig::default().max_len)]
        max_len: usize,
        #[arg(long, default_value_t = SamplerConfig::default().cap)]
        cap: usize,
    },
    /// Print the δ-hyperbolicity of a metapath-induced graph.
    Delta {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        metapath: String,
        /// Quadruples sampled when the component is too large to enumerate.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Write a planted power-law dataset.
    GenSynthetic {
        /// Synthetic spec TOML; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every configured variant over several seeds and tabulate.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// A dataset plus the identity recorded in manifests.
struct Dataset {
    graph: HeteroGraph,
    name: String,
    fingerprint: String,
}

fn load_data(dir: &Path) -> Result<Dataset, CliError> {
    let graph = load_dataset(dir)?;
    Ok(Dataset {
        graph,
        name: dir.display().to_string(),
        fingerprint: fingerprint_dir(dir)?,
    })
}

fn load_or_generate(data: Option<&Path>, spec: &SyntheticSpec) -> Result<Dataset, CliError> {
    match data {
        Some(dir) => load_data(dir),
        None => Ok(Dataset {
            graph: generate_synthetic(spec).map_err(|e| CliError::Config(format!("synthetic: {e}")))?,
            name: "synthetic".into(),
            fingerprint: fingerprint_spec(spec),
        }),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        config.train.seed = s;
    }
    Ok(config)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ck = Checkpoint::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(ck)
}

fn check_metapaths(ck: &Checkpoint, g: &HeteroGraph) -> Result<(), CliError> {
    let names: Vec<&str> = g.metapaths().iter().map(|m| m.name.as_str()).collect();
    if names != ck.metapaths.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CliError::Data(format!(
            "dataset metapaths {names:?} differ from the checkpoint's {:?}",
            ck.metapaths
        )));
    }
    Ok(())
}

/// Config of the run that wrote `checkpoint`: `explicit` if given, else
/// the manifest beside it, else defaults.
fn config_for_checkpoint(checkpoint: &Path, explicit: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let beside = checkpoint
        .parent()
        .map(|d| d.join(MANIFEST_FILE))
        .filter(|p| p.is_file());
    load_config(explicit.or(beside.as_deref()), seed)
}

struct Context {
    threads: usize,
}

impl Context {
    fn manifest(&self, command: &str, data: &Dataset, config: &RunConfig) -> RunManifest {
        RunManifest {
            artifact_version: ARTIFACT_VERSION,
            command: command.into(),
            seed: config.train.seed,
            threads: self.threads,
            dataset: data.name.clone(),
            dataset_fingerprint: data.fingerprint.clone(),
            config: config.clone(),
        }
    }
}

fn cmd_train(
    cx: &Context,
    config: Option<&Path>,
    data: Option<&Path>,
    out: &Path,
    task: Option<Task>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut config = load_config(config, seed)?;
    if let Some(t) = task {
        config.train.task = t;
    }
    let data = load_or_generate(data, &config.synthetic)?;
    let outcome = train(&data.graph, &config.model, &config.sampler, &config.train)?;
    create_dir(out)?;
    let names = data.graph.metapaths().iter().map(|m| m.name.clone()).collect();
    let ck = Checkpoint::new(config.model.clone(), config.sampler, names, outcome.params.clone());
    write_file(&out.join("checkpoint.json"), &ck.to_json())?;
    write_file(&out.join("history.tsv"), &outcome.history.to_tsv())?;
    write_file(&out.join("results.txt"), &outcome.results_block())?;
    write_file(&out.join("embeddings.tsv"), &outcome.embeddings.to_tsv())?;
    cx.manifest("train", &data, &config).write(out)?;
    print!("{}", outcome.results_block());
    Ok(())
}

fn cmd_eval(
    cx: &Context,
    checkpoint: &Path,
    data: &Path,
    task: Option<Task>,
    config: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let ck = load_checkpoint(checkpoint)?;
    let mut config = config_for_checkpoint(checkpoint, config, seed)?;
    config.model = ck.model.clone();
    config.sampler = ck.sampler;
    if let Some(t) = task {
        config.train.task = t;
    }
    let data = load_data(data)?;
    check_metapaths(&ck, &data.graph)?;
    let ev = evaluate(&data.graph, &config.model, &config.sampler, &config.train, &ck.params)?;
    let block: String = ev.results.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    if let Some(out) = out {
        create_dir(out)?;
        write_file(&out.join("results.txt"), &block)?;
        cx.manifest("eval", &data, &config).write(out)?;
    }
    print!("{block}");
    Ok(())
}

fn cmd_embed(cx: &Context, checkpoint: &Path, data: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let ck = load_checkpoint(checkpoint)?;
    let mut config = config_for_checkpoint(checkpoint, None, seed)?;
    config.model = ck.model.clone();
    config.sampler = ck.sampler;
    let data = load_data(data)?;
    check_metapaths(&ck, &data.graph)?;
    let g = &data.graph;
    let nodes = g.target_nodes().to_vec();
    let sampler_seed = crate::train::streams::seed(config.train.seed, crate::train::streams::SAMPLER);
    let trace = forward_trace(g, &nodes, &ck.params, &ck.model, &ck.sampler, sampler_seed)?;
    let emb = Embeddings::from_trace(&trace);
    create_dir(out)?;
    write_file(&out.join("embeddings.tsv"), &emb.to_tsv())?;
    cx.manifest("embed", &data, &config).write(out)?;
    println!(
        "wrote {} embeddings to {}",
        emb.nodes.len(),
        out.join("embeddings.tsv").display()
    );
    Ok(())
}

fn cmd_sample(
    data: &Path,
    node: usize,
    metapaths: &[String],
    sampler: SamplerConfig,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let g = load_dataset(data)?;
    if node >= g.node_count() {
        return Err(CliError::Data(format!(
            "node {node} not in dataset ({} nodes)",
            g.node_count()
        )));
    }
    let t = g.node_type(node);
    let paths = if metapaths.is_empty() {
        g.metapaths()
            .iter()
            .filter(|m| m.start() == t)
            .cloned()
            .collect::<Vec<_>>()
    } else {
        metapaths
            .iter()
            .map(|s| g.parse_metapath(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    let sampler_seed = crate::train::streams::seed(seed.unwrap_or(0), crate::train::streams::SAMPLER);
    let set = sample_instances(&g, node, &paths, &sampler, sampler_seed)?;
    for (m, instances) in paths.iter().zip(&set.per_metapath) {
        println!("# {} ({} instances)", m.name, instances.len());
        for inst in instances {
            let ids: Vec<String> = inst.iter().map(usize::to_string).collect();
            println!("{}", ids.join("\t"));
        }
    }
    Ok(())
}

fn cmd_delta(data: &Path, metapath: &str, budget: usize, seed: Option<u64>) -> Result<(), CliError> {
    let g = load_dataset(data)?;
    let m = g.parse_metapath(metapath)?;
    let h = metapath_subgraph(&g, &m)?;
    let mut report = delta_hyperbolicity(&h, budget, seed.unwrap_or(0))?;
    report.metapath = Some(m.name.clone());
    println!("{report}");
    Ok(())
}

fn cmd_gen_synthetic(cx: &Context, spec: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut spec: SyntheticSpec = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let g = generate_synthetic(&spec).map_err(|e| CliError::Config(format!("synthetic: {e}")))?;
    create_dir(out)?;
    write_dataset(&g, out)?;
    let config = RunConfig {
        synthetic: spec.clone(),
        ..RunConfig::default()
    };
    let data = Dataset {
        graph: g,
        name: "synthetic".into(),
        fingerprint: fingerprint_dir(out)?,
    };
    let mut m = cx.manifest("gen-synthetic", &data, &config);
    m.seed = spec.seed;
    m.write(out)?;
    println!(
        "wrote {} nodes and {} edges to {}",
        data.graph.node_count(),
        data.graph.edge_count(),
        out.display()
    );
    Ok(())
}

fn cmd_ablate(
    cx: &Context,
    config: Option<&Path>,
    data: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let config = load_config(config, seed)?;
    let data = load_or_generate(data, &config.synthetic)?;
    let seeds: Vec<u64> = (0..config.ablation.runs as u64)
        .map(|i| config.train.seed.wrapping_add(i))
        .collect();
    let table = run_ablation(
        &data.graph,
        &config.model,
        &config.sampler,
        &config.train,
        &seeds,
        &config.ablation.variants,
    )?;
    let mut text = format!("{table}\n");
    for row in &table.rows {
        for (s, c) in seeds.iter().zip(&row.curvatures) {
            if !c.is_empty() {
                text.push_str(&format!("curvatures {} seed {s}: {c:?}\n", row.variant.name()));
            }
        }
    }
    create_dir(out)?;
    write_file(&out.join("ablation.txt"), &text)?;
    cx.manifest("ablate", &data, &config).write(out)?;
    print!("{text}");
    Ok(())
}

/// Runs an already parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads as usize;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let cx = Context { threads };
    let seed = cli.seed;
    pool.install(|| match &cli.command {
        Command::Train {
            config,
            data,
            out,
            task,
        } => cmd_train(&cx, config.as_deref(), data.as_deref(), out, *task, seed),
        Command::Eval {
            checkpoint,
            data,
            task,
            config,
            out,
        } => cmd_eval(&cx, checkpoint, data, *task, config.as_deref(), out.as_deref(), seed),
        Command::Embed { checkpoint, data, out } => cmd_embed(&cx, checkpoint, data, out, seed),
        Command::Sample {
            data,
            node,
            metapaths,
            max_len,
            cap,
        } => cmd_sample(
            data,
            *node,
            metapaths,
            SamplerConfig {
                max_len: *max_len,
                cap: *cap,
            },
            seed,
        ),
        Command::Delta { data, metapath, budget } => cmd_delta(data, metapath, *budget, seed),
        Command::GenSynthetic { spec, out } => cmd_gen_synthetic(&cx, spec.as_deref(), out, seed),
        Command::Ablate { config, data, out } => cmd_ablate(&cx, config.as_deref(), data.as_deref(), out, seed),
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Logging is configured from `MSGAT_LOG`.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MSGAT_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("msgat: {e}");
            e.exit_code()
        }
    }
}
