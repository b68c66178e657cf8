use std::fs::File;
use std::io::BufWriter;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use nearopt_core::analysis::{self, MadKind, DEFAULT_CAPS};
use nearopt_core::lowering::to_linear_program;
use nearopt_core::metrics::Metric;
use nearopt_core::profiles::{synthetic, LoadTargets};
use nearopt_core::sampler::{sample_space, SamplerConfig, DEFAULT_LEVELS};
use nearopt_core::solver::{write_lp_format, Backend, SolverSettings};
use nearopt_core::store::SampleStore;
use nearopt_core::submission::read_submissions;
use nearopt_core::{build_model, ModelConfig, ProfileSet};
use nearopt_explorer::{serve, ServeConfig};

#[derive(Parser)]
#[command(name = "nearopt", version, about = "Near-optimal energy system design spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the near-optimal space of a model into a store.
    Sample(SampleArgs),
    /// Serve a store over HTTP.
    Serve(ServeArgs),
    /// Summarise submissions against a store as CSV.
    Analyze(AnalyzeArgs),
    /// Write synthetic hourly profiles as CSV.
    Profiles(ProfilesArgs),
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Model TOML; the bundled Longyearbyen baseline when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile CSV; synthetic profiles when omitted.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Override the number of snapshots per year.
    #[arg(long)]
    snapshots: Option<usize>,
    /// Seed for synthetic profiles.
    #[arg(long, default_value_t = 42)]
    profile_seed: u64,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated slack levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS.to_vec())]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 75)]
    n_dirs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Stop after this many seconds; the store is marked truncated.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long, value_enum, default_value_t = BackendArg::Highs)]
    backend: BackendArg,
    /// Also write the cost-minimisation LP in CPLEX LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Highs,
    Dense,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, env = "NEAROPT_STORE")]
    store: PathBuf,
    #[arg(long, env = "NEAROPT_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Seed for session start points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Idle session lifetime, seconds.
    #[arg(long, default_value_t = 7200)]
    session_ttl: u64,
    #[arg(long, default_value = "submissions.jsonl")]
    submissions: PathBuf,
    /// Shared secret for GET /export; export is disabled without one.
    #[arg(long, env = "NEAROPT_EXPORT_SECRET")]
    export_secret: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Mad,
    Priorities,
    Correlations,
    Hulls,
    Export,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    report: Report,
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    submissions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Conventional median absolute deviation instead of median distance to the optimum.
    #[arg(long)]
    conventional_mad: bool,
    /// Metric pair for hull polygons.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values = ["vulnerability", "co2"])]
    pair: Vec<String>,
    /// Slack caps for hull polygons.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CAPS.to_vec())]
    caps: Vec<f64>,
}

#[derive(clap::Args)]
struct ProfilesArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2920)]
    snapshots: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn load_model(args: &ModelArgs) -> Result<nearopt_core::SystemModel> {
    let mut config = match &args.config {
        Some(p) => ModelConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ModelConfig::baseline(),
    };
    if let Some(t) = args.snapshots {
        config = config.with_snapshots(t);
    }
    let profiles = match &args.profiles {
        Some(p) => ProfileSet::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => synthetic(args.profile_seed, config.snapshots(), LoadTargets::default()),
    };
    if profiles.len() != config.snapshots() {
        bail!(
            "profiles have {} snapshots but the config resolves to {}; pass --snapshots {}",
            profiles.len(),
            config.snapshots(),
            profiles.len()
        );
    }
    Ok(build_model(&config, &profiles)?)
}

fn sample(args: SampleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    if let Some(p) = &args.export_lp {
        let lp = to_linear_program(&model).lp;
        write_lp_format(&lp, BufWriter::new(File::create(p)?))?;
        info!("wrote {}", p.display());
    }
    let cfg = SamplerConfig {
        levels: args.levels,
        n_directions: args.n_dirs,
        seed: args.seed,
        settings: SolverSettings {
            backend: match args.backend {
                BackendArg::Highs => Backend::Highs,
                BackendArg::Dense => Backend::Dense,
            },
            ..Default::default()
        },
        time_budget: args.time_budget.map(Duration::from_secs_f64),
        ..Default::default()
    };
    let start = Instant::now();
    let store = sample_space(&model, &cfg)?;
    store.save(&args.out)?;
    println!(
        "{} records in {:.1}s (c_opt {:.6e} NOK/yr, {} failed solves{}) -> {}",
        store.len(),
        start.elapsed().as_secs_f64(),
        store.header.c_opt,
        store.header.failed_solves,
        if store.header.truncated { ", truncated" } else { "" },
        args.out.display()
    );
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let cfg = ServeConfig {
        store: args.store,
        submissions: args.submissions,
        addr: SocketAddr::new(args.host, args.port),
        seed: args.seed,
        session_ttl: Duration::from_secs(args.session_ttl),
        export_secret: args.export_secret,
    };
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(cfg))
}

fn metric(name: &str) -> Result<Metric> {
    name.parse().map_err(anyhow::Error::msg)
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let store = SampleStore::load(&args.store).with_context(|| format!("loading {}", args.store.display()))?;
    let subs = read_submissions(&args.submissions)?;
    let out: &Path = &args.out;
    std::fs::create_dir_all(out)?;
    let pair = (metric(&args.pair[0])?, metric(&args.pair[1])?);
    match args.report {
        Report::Mad => {
            let kind = if args.conventional_mad { MadKind::Conventional } else { MadKind::MedianToOptimum };
            let mad = analysis::mad_per_dimension(&subs, &store.header.optimum_point, &store.header.normalization, kind)?;
            analysis::write_mad_csv(out, &mad, kind)?;
        }
        Report::Priorities => {
            let comps: Vec<_> = Metric::ALL.iter().map(|&m| analysis::priority_comparison(&subs, m)).collect();
            analysis::write_priorities_csv(out, &comps)?;
        }
        Report::Correlations => analysis::write_correlations_csv(out, &analysis::correlation_matrix(&subs))?,
        Report::Hulls => {
            let hulls = analysis::slack_hulls(&store, pair.0, pair.1, &args.caps);
            analysis::write_hulls_csv(out, pair.0, pair.1, &hulls)?;
        }
        Report::Export => analysis::export_plotdata(&subs, &store, pair, out)?,
    }
    println!("{} submissions, {} records -> {}", subs.len(), store.len(), out.display());
    Ok(())
}

fn profiles(args: ProfilesArgs) -> Result<()> {
    let p = synthetic(args.seed, args.snapshots, LoadTargets::default());
    p.write_csv(BufWriter::new(File::create(&args.out)?))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Sample(a) => sample(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Profiles(a) => profiles(a),
    }
}
