//! `rlpp`: clustering, granulometry, simulation and experiments from the
//! command line. Exit status is 0 on success, 1 on usage or input errors and
//! 2 on runtime errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use rlpp::baselines::{run_baseline, BaselineConfig};
use rlpp::bayes::{bayes_partition, pseed_fast, PseedConfig};
use rlpp::experiment::{run_experiment, summarize, ExperimentConfig, ExperimentKind, FeatureMode};
use rlpp::gaussian::{sample_rlpp, RlppSampler};
use rlpp::granulometry::{
    opening_area_sweep, pattern_spectrum_moments, render_scene, sample_scene, sweep_csv,
    BinaryImage, Direction, SceneSpec, SizingModel,
};
use rlpp::io::{
    parse_model_spec, parse_partition, parse_points_csv, partition_to_line,
    partition_to_structured, points_to_csv, LoadedModel,
};
use rlpp::partition::natural_cost;
use rlpp::rng::seeded;
use rlpp::Method;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Input { path: String, source: rlpp::Error },
    #[error("{0}")]
    Runtime(#[from] rlpp::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "rlpp",
    version,
    about = "Bayes-optimal and classical clustering of point sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster the points of a CSV file.
    Cluster(ClusterArgs),
    /// Natural cost between two partitions.
    Cost(CostArgs),
    /// Run the Gaussian experiment.
    GaussianExp(GaussianArgs),
    /// Run the granular-image experiment.
    GranularExp(GranularArgs),
    /// Opening-area sweep of a PBM image.
    Granulometry(GranulometryArgs),
    /// Render a random grain scene to PBM.
    Render(RenderArgs),
    /// Draw a labelled point set from a model.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Model specification (TOML); required by the IBR methods.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    method: Method,
    /// Cluster sizes, e.g. `5,5`.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Number of clusters for baselines when no sizes are given.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 10)]
    subset_size: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// File holding the first partition (line or structured form).
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    /// Number of labels; defaults to the larger block count.
    #[arg(long)]
    labels: Option<usize>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment configuration (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Record per-method runtimes (makes the results CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Total number of points, split as evenly as possible.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Results CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Prefix for `<prefix>_overall.csv` and `<prefix>_per_state.csv`.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GaussianArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Point sets per dimension, each from a freshly drawn state.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Analytic,
    Rendered,
}

#[derive(Args, Debug)]
struct GranularArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Image sets per grid state.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    grains: Option<usize>,
    #[arg(long)]
    theta_count: Option<usize>,
    #[arg(long)]
    rho_count: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SeArg {
    Vertical,
    Horizontal,
}

#[derive(Args, Debug)]
struct GranulometryArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_enum)]
    se: SeArg,
    /// Largest segment length; defaults to the longest run in the image.
    #[arg(long)]
    tmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    grains: usize,
    #[arg(long, default_value_t = 0.5)]
    triangle_fraction: f64,
    /// Gamma shapes for triangles and rods.
    #[arg(long, value_delimiter = ',', default_value = "1.95,1.97")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 550)]
    width: usize,
    #[arg(long, default_value_t = 550)]
    height: usize,
    #[arg(long, default_value_t = 10.0)]
    px_per_unit: f64,
    #[arg(long, default_value_t = 8.0)]
    min_radius: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    seed: u64,
    /// Points CSV.
    #[arg(long)]
    output: PathBuf,
    /// True labels in line form.
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Runtime(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn input<T>(r: rlpp::Result<T>, path: &Path) -> CliResult<T> {
    r.map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

fn cmd_cluster(a: &ClusterArgs) -> CliResult<()> {
    let points = input(parse_points_csv(&read(&a.input)?), &a.input)?;
    let randomized = !matches!(
        a.method,
        Method::IbrExact | Method::HierSingle | Method::HierAverage | Method::HierComplete
    );
    if randomized && a.seed.is_none() {
        return Err(usage(format!("--seed is required for {}", a.method)));
    }
    let seed = a.seed.unwrap_or(0);
    let result = if a.method.is_ibr() {
        let path = a
            .model
            .as_ref()
            .ok_or_else(|| usage(format!("--model is required for {}", a.method)))?;
        let spec = input(parse_model_spec(&read(path)?), path)?;
        if spec.dimension != points.dim() {
            return Err(usage(format!(
                "model dimension {} does not match the {}-column input",
                spec.dimension,
                points.dim()
            )));
        }
        if a.sizes.is_none() && spec.prior_sizes.is_none() && spec.explicit.is_none() {
            return Err(usage(format!("--sizes is required for {}", a.method)));
        }
        let prior = spec
            .prior(a.sizes.as_deref())
            .map_err(|e| usage(e.to_string()))?;
        if prior
            .sizes()
            .is_some_and(|s| s.iter().sum::<usize>() != points.len())
        {
            return Err(usage(format!(
                "sizes do not add up to the {} input points",
                points.len()
            )));
        }
        let model = spec.model.likelihood();
        if a.method == Method::IbrExact {
            bayes_partition(&points, &prior, model)?
        } else {
            let cfg = PseedConfig {
                restarts: a.restarts,
                subset_size: a.subset_size,
                seed,
            };
            pseed_fast(&points, &prior, model, &cfg)?
        }
    } else {
        let k = match (&a.sizes, a.k) {
            (Some(s), _) => s.len(),
            (None, Some(k)) => k,
            (None, None) => {
                return Err(usage(format!(
                    "--sizes or --k is required for {}",
                    a.method
                )))
            }
        };
        let mut cfg = BaselineConfig::new(a.method, k, seed);
        cfg.sizes = a.sizes.clone();
        run_baseline(&points, &cfg)?
    };
    let text = format!(
        "method: {}\nlabels: {}\nblocks: {}\nscore: {}\n",
        result.method,
        partition_to_line(&result.partition),
        partition_to_structured(&result.partition),
        result.score
    );
    write(a.output.as_deref(), &text)
}

fn cmd_cost(a: &CostArgs) -> CliResult<()> {
    let p = input(parse_partition(&read(&a.p)?), &a.p)?;
    let q = input(parse_partition(&read(&a.q)?), &a.q)?;
    if p.len() != q.len() {
        return Err(usage(format!(
            "partitions cover {} and {} points",
            p.len(),
            q.len()
        )));
    }
    let l = a.labels.unwrap_or(p.num_blocks().max(q.num_blocks()));
    println!("{:?}", natural_cost(&p, &q, l)?);
    Ok(())
}

fn base_config(a: &ExperimentArgs, kind: ExperimentKind) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => input(ExperimentConfig::from_toml(&read(p)?), p)?,
        None => ExperimentConfig::default(),
    };
    cfg.kind = kind;
    cfg.seed = a.seed;
    cfg.timing |= a.timing;
    if let Some(m) = &a.methods {
        cfg.methods = m.clone();
    }
    if let Some(n) = a.n {
        cfg.n1 = n.div_ceil(2);
        cfg.n2 = n / 2;
    }
    if let Some(v) = a.n1 {
        cfg.n1 = v;
    }
    if let Some(v) = a.n2 {
        cfg.n2 = v;
    }
    Ok(cfg)
}

fn run_and_write(cfg: &ExperimentConfig, a: &ExperimentArgs) -> CliResult<()> {
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let res = run_experiment(cfg, a.threads)?;
    for s in &res.skipped {
        eprintln!(
            "skipped {} at d={} state={} rep={}: {}",
            s.method, s.d, s.state_index, s.rep, s.reason
        );
    }
    write(a.output.as_deref(), &res.to_csv()?)?;
    if let Some(prefix) = &a.summary {
        let summary = summarize(&res)?;
        let name = |suffix: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        write(Some(&name("_overall.csv")), &summary.overall_csv()?)?;
        write(Some(&name("_per_state.csv")), &summary.per_state_csv()?)?;
    }
    Ok(())
}

fn cmd_gaussian(a: &GaussianArgs) -> CliResult<()> {
    let mut cfg = base_config(&a.common, ExperimentKind::Gaussian)?;
    if let Some(d) = &a.dims {
        cfg.dims = d.clone();
    }
    if let Some(r) = a.reps {
        cfg.states = r;
    }
    run_and_write(&cfg, &a.common)
}

fn cmd_granular(a: &GranularArgs) -> CliResult<()> {
    let mut cfg = base_config(&a.common, ExperimentKind::Granular)?;
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(m) = a.mode {
        cfg.granular.mode = match m {
            ModeArg::Analytic => FeatureMode::Analytic,
            ModeArg::Rendered => FeatureMode::Rendered,
        };
    }
    if let Some(g) = a.grains {
        cfg.granular.n_grains = g;
    }
    if let Some(t) = a.theta_count {
        cfg.granular.theta_count = t;
    }
    if let Some(r) = a.rho_count {
        cfg.granular.rho_count = r;
    }
    run_and_write(&cfg, &a.common)
}

fn cmd_granulometry(a: &GranulometryArgs) -> CliResult<()> {
    let img = input(BinaryImage::from_pbm(&read(&a.image)?), &a.image)?;
    let dir = match a.se {
        SeArg::Vertical => Direction::Vertical,
        SeArg::Horizontal => Direction::Horizontal,
    };
    let tmax = a
        .tmax
        .unwrap_or_else(|| img.runs(dir).into_iter().max().unwrap_or(0));
    let omega = opening_area_sweep(&img, dir, tmax);
    write(a.out.as_deref(), &sweep_csv(&omega))?;
    // Moments exist only for a non-empty image opened to nothing.
    if let (Some(_), Ok(m)) = (&a.out, pattern_spectrum_moments(&omega)) {
        println!("mu1: {}\nmu2: {}", m[0], m[1]);
    }
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> CliResult<()> {
    let [a1, a2] = a.alpha[..] else {
        return Err(usage("--alpha needs two values"));
    };
    let sizing = SizingModel::new([a1, a2], a.beta).map_err(|e| usage(e.to_string()))?;
    let mut spec = SceneSpec::new(a.grains, a.triangle_fraction, sizing, a.width, a.height);
    spec.px_per_unit = a.px_per_unit;
    spec.min_radius_px = a.min_radius;
    let scene = sample_scene(&spec, &mut seeded(a.seed))?;
    write(Some(&a.output), &render_scene(&scene)?.to_pbm())
}

fn cmd_sample(a: &SampleArgs) -> CliResult<()> {
    let spec = input(parse_model_spec(&read(&a.model)?), &a.model)?;
    let sizes = a
        .sizes
        .clone()
        .or_else(|| spec.prior_sizes.clone())
        .ok_or_else(|| usage("--sizes is required unless the model gives sizes"))?;
    let sampler: &dyn RlppSampler = match &spec.model {
        LoadedModel::Niw(m) => m,
        LoadedModel::Effective(m) => m,
    };
    let s = sample_rlpp(sampler, &sizes, a.seed)?;
    write(Some(&a.output), &points_to_csv(&s.points))?;
    if let Some(p) = &a.labels {
        let line: Vec<String> = s
            .labels
            .labels()
            .iter()
            .map(|y| (y + 1).to_string())
            .collect();
        write(Some(p), &format!("{}\n", line.join(" ")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Cost(a) => cmd_cost(a),
        Command::GaussianExp(a) => cmd_gaussian(a),
        Command::GranularExp(a) => cmd_granular(a),
        Command::Granulometry(a) => cmd_granulometry(a),
        Command::Render(a) => cmd_render(a),
        Command::Sample(a) => cmd_sample(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
