//! Command-line front end for `blindcast`.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a configured size
//! limit would be exceeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blindcast_core::layers::layer_budget_report;
use blindcast_core::{
    channel::write_transcript, enumerate_instances, layer_decompose, leading_layer_trace,
    random_instance, seed_search, simulate_mac, simulate_network, verify::verify_seed, Instance,
    InstanceCorpus, MasterKey, Mode, Network, NodeId, ScheduleParams, ScheduleSeed, WakePattern,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub mod config;
pub mod sweep;

use config::Config;
use sweep::{Protocol, SweepSpec};

#[derive(Parser, Debug)]
#[command(
    name = "blindcast",
    version,
    about = "Deterministic wake-up and broadcast schedules"
)]
struct Cli {
    /// File of `key = value` defaults (c, d, kappa, max_corpus, max_nodes,
    /// max_edges, horizon_factor, jobs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Synchronizer constant.
    #[arg(long, global = true)]
    c: Option<u32>,
    /// Transmission-schedule constant.
    #[arg(long, global = true)]
    d: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random instance and write it as JSON.
    GenInstance(GenInstanceArgs),
    /// Generate a strongly connected network and write it as JSON.
    GenGraph(GenGraphArgs),
    /// Run a schedule on one instance, single-hop or on a network.
    Simulate(SimulateArgs),
    /// Run a grid of random trials and write CSV.
    Sweep(SweepArgs),
    /// Check a key against every small instance (or a corpus file).
    Verify(VerifyArgs),
    /// Try candidate keys and report the one passing the most instances.
    SearchSeed(SearchArgs),
    /// Layer decomposition and per-layer leading times of a network run.
    Layers(LayersArgs),
}

#[derive(Args, Debug)]
struct SeedArg {
    /// 64 hex digits; defaults to bytes 00..1f.
    #[arg(long = "seed-hex", alias = "seed")]
    seed: Option<String>,
}

impl SeedArg {
    fn key(&self) -> Result<MasterKey> {
        match &self.seed {
            Some(s) => Ok(MasterKey::from_hex(s)?),
            None => Ok(MasterKey::default()),
        }
    }
}

#[derive(Args, Debug)]
struct GenInstanceArgs {
    #[arg(long)]
    k: u64,
    /// Ids are drawn from 1..=L.
    #[arg(long = "L", alias = "l")]
    l: u64,
    /// simultaneous, stagger:W or chain.
    #[arg(long, default_value = "simultaneous")]
    pattern: String,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphKind {
    Layered,
    Cycle,
    Complete,
    Random,
}

#[derive(Args, Debug)]
struct GenGraphArgs {
    #[arg(long, value_enum)]
    kind: GraphKind,
    /// Blocks of a layered chain.
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// Block width of a layered chain.
    #[arg(long, default_value_t = 4)]
    width: usize,
    /// Node count of cycle, complete and random graphs.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Extra random edges on top of the spanning cycle.
    #[arg(long, default_value_t = 8)]
    extra: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Wakeup,
    Broadcast,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Wakeup => Mode::Wakeup,
            ModeArg::Broadcast => Mode::Broadcast,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Instance JSON; on a network these are the spontaneous wakes.
    #[arg(long)]
    instance: PathBuf,
    /// Network JSON; omit for a single-hop channel.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Steps to simulate; defaults to first wake + horizon_factor * budget.
    #[arg(long)]
    horizon: Option<u64>,
    /// Write the per-step channel outcomes here (single-hop only).
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Run the prime-period baseline instead of the seeded schedule.
    #[arg(long)]
    prime: bool,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u64>,
    /// Comma-separated id ranges.
    #[arg(long = "L", alias = "l", value_delimiter = ',', required = true)]
    l: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "simultaneous")]
    pattern: Vec<String>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// Use the seed itself for every trial rather than a derived key.
    #[arg(long)]
    fixed_key: bool,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, env = "BLINDCAST_JOBS")]
    jobs: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Largest r of the exhaustive corpus.
    #[arg(long)]
    r_max: Option<u64>,
    /// Largest wake time of the exhaustive corpus.
    #[arg(long, default_value_t = 8)]
    wake_max: u64,
    /// Read instances from a JSON array instead.
    #[arg(long, conflicts_with = "r_max")]
    corpus: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self, mode: Mode, cfg: &Config) -> Result<InstanceCorpus> {
        match (&self.corpus, self.r_max) {
            (Some(path), _) => Ok(InstanceCorpus::from_json(&read(path)?)?),
            (None, Some(r_max)) => Ok(enumerate_instances(
                r_max,
                self.wake_max,
                mode,
                &cfg.params,
                cfg.max_corpus,
            )?),
            (None, None) => bail!("give --r-max or --corpus"),
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    kappa: Option<f64>,
    /// Report JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Number of candidate keys.
    #[arg(long, default_value_t = 64)]
    candidates: usize,
    /// Key the candidates are derived from.
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LayersArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    source: u64,
    #[arg(long)]
    target: u64,
    #[arg(long, value_enum, default_value = "broadcast")]
    mode: ModeArg,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 10_000_000)]
    horizon: u64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(writeln!(out, "{text}")?),
    }
}

struct Ctx {
    cfg: Config,
}

impl Ctx {
    fn kappa(&self, flag: Option<f64>) -> Result<f64> {
        let k = flag.unwrap_or(self.cfg.kappa);
        if !(k.is_finite() && k > 0.0) {
            bail!("kappa must be positive, got {k}");
        }
        Ok(k)
    }

    fn seed(&self, arg: &SeedArg) -> Result<ScheduleSeed> {
        Ok(ScheduleSeed::new(arg.key()?, self.cfg.params))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    let limit = e.chain().any(|c| {
        c.downcast_ref::<blindcast_core::Error>()
            .is_some_and(|e| e.is_limit())
    });
    if limit {
        2
    } else {
        1
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.params = ScheduleParams::new(cli.c.unwrap_or(cfg.params.c), cli.d.unwrap_or(cfg.params.d))?;
    let ctx = Ctx { cfg };
    match cli.command {
        Command::GenInstance(a) => gen_instance(a, out),
        Command::GenGraph(a) => gen_graph(&ctx, a, out),
        Command::Simulate(a) => simulate(&ctx, a, out),
        Command::Sweep(a) => run_sweep(&ctx, a, out),
        Command::Verify(a) => verify(&ctx, a, out),
        Command::SearchSeed(a) => search(&ctx, a, out),
        Command::Layers(a) => layers(&ctx, a, out),
    }
}

fn gen_instance(a: GenInstanceArgs, out: &mut dyn Write) -> Result<()> {
    let pattern: WakePattern = a.pattern.parse()?;
    let inst = random_instance(a.k, a.l, pattern, a.rng_seed)?;
    emit(out, a.out.as_deref(), &inst.to_json())
}

fn gen_graph(ctx: &Ctx, a: GenGraphArgs, out: &mut dyn Write) -> Result<()> {
    let net = match a.kind {
        GraphKind::Layered => Network::layered_chain(a.blocks, a.width)?,
        GraphKind::Cycle => Network::cycle(a.n)?,
        GraphKind::Complete => {
            let ids = (1..=a.n as u64)
                .map(NodeId::new)
                .collect::<Result<_, _>>()?;
            Network::complete(ids)?
        }
        GraphKind::Random => Network::random_strongly_connected(a.n, a.extra, a.rng_seed)?,
    };
    let net = Network::with_limits(net.ids().to_vec(), net.edges().to_vec(), ctx.cfg.limits)?;
    emit(out, a.out.as_deref(), &net.to_json())
}

fn simulate(ctx: &Ctx, a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mode = Mode::from(a.mode);
    let seed = ctx.seed(&a.seed)?;
    let kappa = ctx.kappa(a.kappa)?;
    let inst = Instance::from_json(&read(&a.instance)?)?;
    let budget = inst.budget(&seed.params, mode);
    let horizon = a.horizon.unwrap_or_else(|| {
        inst.min_wake() + (ctx.cfg.horizon_factor * budget.value as f64).ceil() as u64
    });
    if let Some(graph) = &a.graph {
        if a.transcript.is_some() {
            bail!("--transcript applies to single-hop runs only");
        }
        let net = Network::from_json_with_limits(&read(graph)?, ctx.cfg.limits)?;
        let res = simulate_network(&net, &inst.pairs(), &seed.schedule(mode), horizon)?;
        let woken = res.wake_time.iter().filter(|w| w.is_some()).count();
        let completion = res
            .completion_step
            .map_or("none".to_string(), |c| c.to_string());
        writeln!(
            out,
            "mode={mode} n={} woken={woken} completion_step={completion} horizon={horizon}",
            net.n()
        )?;
        return Ok(());
    }
    let res = simulate_mac(&inst, &seed, mode, horizon, a.transcript.is_some());
    if let (Some(path), Some(t)) = (&a.transcript, &res.transcript) {
        let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        write_transcript(&mut w, t)?;
        w.flush()?;
    }
    let hit = res.hit_step.map_or("none".to_string(), |h| h.to_string());
    writeln!(
        out,
        "mode={mode} k={} r={} min_wake={} hit_step={hit} budget={} within_budget={}",
        inst.k(),
        inst.r(),
        inst.min_wake(),
        budget.value,
        res.within(inst.min_wake(), budget.value, kappa)
    )?;
    Ok(())
}

fn run_sweep(ctx: &Ctx, a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let patterns = a
        .pattern
        .iter()
        .map(|p| p.parse())
        .collect::<Result<Vec<WakePattern>, _>>()?;
    let mode = Mode::from(a.mode);
    let spec = SweepSpec {
        protocol: if a.prime {
            Protocol::Prime
        } else {
            Protocol::Seeded(mode)
        },
        ks: a.k,
        ls: a.l,
        patterns,
        trials: a.trials,
        master: a.seed.key()?,
        params: ctx.cfg.params,
        kappa: ctx.kappa(a.kappa)?,
        fixed_key: a.fixed_key,
        horizon_factor: ctx.cfg.horizon_factor,
    };
    let jobs = a
        .jobs
        .or(ctx.cfg.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = sweep::run_sweep(&spec, jobs)?;
    match &a.out {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            sweep::write_csv(file, &records)
        }
        None => sweep::write_csv(out, &records),
    }
}

fn verify(ctx: &Ctx, a: VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let mode = Mode::from(a.mode);
    let seed = ctx.seed(&a.seed)?;
    let kappa = ctx.kappa(a.kappa)?;
    let corpus = a.corpus.load(mode, &ctx.cfg)?;
    let report = verify_seed(&corpus, &seed, mode, kappa);
    if let Some(path) = &a.out {
        fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    let ratio = report
        .aggregate
        .max_ratio
        .map_or("none".to_string(), |r| format!("{r:.6}"));
    writeln!(
        out,
        "mode={mode} key={} checked={} passed={} max_ratio={ratio} all_pass={}",
        seed.key.fingerprint(),
        report.aggregate.checked,
        report.aggregate.passed,
        report.all_pass()
    )?;
    Ok(())
}

fn search(ctx: &Ctx, a: SearchArgs, out: &mut dyn Write) -> Result<()> {
    let mode = Mode::from(a.mode);
    let kappa = ctx.kappa(a.kappa)?;
    let corpus = a.corpus.load(mode, &ctx.cfg)?;
    let outcome = seed_search(
        &corpus,
        mode,
        &ctx.cfg.params,
        a.candidates,
        kappa,
        &a.seed.key()?,
    )?;
    if let Some(path) = &a.out {
        let json = serde_json::to_string_pretty(&outcome)?;
        fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(
        out,
        "mode={mode} corpus={} best_index={} passed={} all_pass={} key={}",
        outcome.corpus_size,
        outcome.best_index,
        outcome.pass_counts[outcome.best_index],
        outcome.all_pass,
        outcome.best_key.to_hex()
    )?;
    Ok(())
}

#[derive(Serialize)]
struct LayersOutput<'a> {
    decomposition: &'a blindcast_core::LayerDecomposition,
    trace: &'a blindcast_core::LeadingTrace,
    budgets: &'a [blindcast_core::layers::LayerBudgetRow],
}

fn layers(ctx: &Ctx, a: LayersArgs, out: &mut dyn Write) -> Result<()> {
    let mode = Mode::from(a.mode);
    let seed = ctx.seed(&a.seed)?;
    let kappa = ctx.kappa(a.kappa)?;
    let net = Network::from_json_with_limits(&read(&a.graph)?, ctx.cfg.limits)?;
    let source = NodeId::new(a.source)?;
    let decomposition = layer_decompose(&net, source, NodeId::new(a.target)?)?;
    let res = simulate_network(&net, &[(source, 0)], &seed.schedule(mode), a.horizon)?;
    let trace = leading_layer_trace(&res, &decomposition)?;
    let budgets = layer_budget_report(&decomposition, &trace, &seed.params, mode, kappa);
    for row in &budgets {
        writeln!(
            out,
            "layer={} size={} r={} duration={} budget={} within={}",
            row.layer, row.size, row.r, row.duration, row.budget, row.within
        )?;
    }
    writeln!(
        out,
        "idle={} completion_step={}",
        trace.idle, trace.completion_step
    )?;
    if let Some(path) = &a.out {
        let json = serde_json::to_string_pretty(&LayersOutput {
            decomposition: &decomposition,
            trace: &trace,
            budgets: &budgets,
        })?;
        fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
