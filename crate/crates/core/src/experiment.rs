//! Monte-Carlo comparison of the IBR clusterer with the baselines.
//!
//! Every (state, rep) task draws from its own substream of the master seed,
//! and every method inside a task gets a seed derived from the method, so
//! results do not depend on the worker count or on which methods run.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineConfig};
use crate::bayes::{bayes_partition, pseed_fast, ClusterResult, PseedConfig};
use crate::gaussian::{LabelLikelihood, LabelPrior, NiwLabel, NiwModel, PointSet, RlppSampler};
use crate::granulometry::{
    image_features, linspace, render_scene, sample_scene, simulate_features, GranularConfig,
    GranularModel, SceneSpec,
};
use crate::partition::{enumerate_partitions, natural_cost, Partition};
use crate::rng::{derive_seed, substream};
use crate::{Error, Method, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Gaussian,
    Granular,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Gaussian => "gaussian",
            ExperimentKind::Granular => "granular",
        }
    }
}

/// How image features are obtained in the granular experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Directly from the sampled radii.
    Analytic,
    /// From linear openings of a rendered image.
    Rendered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GranularSettings {
    pub n_grains: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_count: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_count: usize,
    pub mode: FeatureMode,
    pub image_width: usize,
    pub image_height: usize,
    pub px_per_unit: f64,
    pub min_radius_px: f64,
}

impl Default for GranularSettings {
    fn default() -> Self {
        GranularSettings {
            n_grains: 1000,
            theta_min: 1.75,
            theta_max: 2.0,
            theta_count: 10,
            rho_min: 0.45,
            rho_max: 0.55,
            rho_count: 500,
            mode: FeatureMode::Analytic,
            image_width: 550,
            image_height: 550,
            px_per_unit: 10.0,
            min_radius_px: 8.0,
        }
    }
}

impl GranularSettings {
    pub fn model_config(&self) -> GranularConfig {
        GranularConfig {
            n_grains: self.n_grains,
            theta_grid: linspace(self.theta_min, self.theta_max, self.theta_count),
            rho_grid: linspace(self.rho_min, self.rho_max, self.rho_count),
            ..GranularConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Methods to run; empty means the IBR clusterer plus every baseline.
    pub methods: Vec<Method>,
    /// Dimensions of the Gaussian experiment.
    pub dims: Vec<usize>,
    pub n1: usize,
    pub n2: usize,
    /// Gaussian states (one point set each) per dimension.
    pub states: usize,
    /// Granular image sets per state.
    pub reps: usize,
    /// Record wall-clock time per method; off keeps result files reproducible.
    pub timing: bool,
    pub pseed_restarts: usize,
    pub pseed_subset: usize,
    pub granular: GranularSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Gaussian,
            seed: 0,
            methods: Vec::new(),
            dims: vec![1, 2, 10],
            n1: 5,
            n2: 5,
            states: 200,
            reps: 20,
            timing: false,
            pseed_restarts: 10,
            pseed_subset: 10,
            granular: GranularSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1));
            Error::parse(line, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// The configured methods, or the default list.
    pub fn method_list(&self) -> Vec<Method> {
        if !self.methods.is_empty() {
            return self.methods.clone();
        }
        let ibr = if self.n() <= crate::bayes::EXACT_MAX_N_TWO_LABELS {
            Method::IbrExact
        } else {
            Method::IbrPseed
        };
        std::iter::once(ibr).chain(Method::BASELINES).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::invalid("both clusters need at least one point"));
        }
        match self.kind {
            ExperimentKind::Gaussian => {
                if self.dims.is_empty() || self.dims.contains(&0) || self.states == 0 {
                    return Err(Error::invalid(
                        "dims must be positive and states at least 1",
                    ));
                }
            }
            ExperimentKind::Granular => {
                let g = &self.granular;
                if self.reps == 0 || g.theta_count == 0 || g.rho_count == 0 || g.n_grains == 0 {
                    return Err(Error::invalid(
                        "reps, grid sizes and grain count must be positive",
                    ));
                }
            }
        }
        if self.pseed_restarts == 0 || self.pseed_subset == 0 {
            return Err(Error::invalid(
                "pseed restarts and subset size must be positive",
            ));
        }
        Ok(())
    }
}

/// One scored clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub state_index: usize,
    pub theta: Option<f64>,
    pub rep: usize,
    pub method: Method,
    pub error: f64,
    pub runtime_ms: f64,
}

/// A method that could not run on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub d: usize,
    pub state_index: usize,
    pub rep: usize,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResult {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<Skip>,
}

impl RunResult {
    pub fn to_csv(&self) -> Result<String> {
        write_csv(&self.rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, r) in reader.deserialize().enumerate() {
            rows.push(r.map_err(|e| Error::parse(i + 2, e.to_string()))?);
        }
        Ok(RunResult {
            rows,
            skipped: Vec::new(),
        })
    }
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Domain(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

struct Task {
    d: usize,
    state: usize,
    rep: usize,
}

struct TaskOutput {
    rows: Vec<ResultRow>,
    skipped: Vec<Skip>,
}

/// Runs the configured experiment on a pool of `threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<RunResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(e.to_string()))?;
    pool.install(|| match cfg.kind {
        ExperimentKind::Gaussian => run_gaussian_experiment(cfg),
        ExperimentKind::Granular => run_granular_experiment(cfg),
    })
}

fn collect(outputs: Vec<Result<TaskOutput>>) -> Result<RunResult> {
    let mut out = RunResult::default();
    for o in outputs {
        let o = o?;
        out.rows.extend(o.rows);
        out.skipped.extend(o.skipped);
    }
    Ok(out)
}

fn method_seed(master: u64, kind: ExperimentKind, task: &Task, m: Method) -> u64 {
    let tag = kind as u64;
    derive_seed(
        master,
        &[
            tag,
            task.d as u64,
            task.state as u64,
            task.rep as u64,
            1000 + m as u64,
        ],
    )
}

/// Runs one method and scores it against the truth.
#[allow(clippy::too_many_arguments)]
fn score_methods(
    cfg: &ExperimentConfig,
    task: &Task,
    theta: Option<f64>,
    points: &PointSet,
    truth: &Partition,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<TaskOutput> {
    let mut out = TaskOutput {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for m in cfg.method_list() {
        let seed = method_seed(cfg.seed, cfg.kind, task, m);
        let start = Instant::now();
        let result: Result<ClusterResult> = match m {
            Method::IbrExact => bayes_partition(points, prior, model),
            Method::IbrPseed => {
                let pc = PseedConfig {
                    restarts: cfg.pseed_restarts,
                    subset_size: cfg.pseed_subset,
                    seed,
                };
                pseed_fast(points, prior, model, &pc)
            }
            _ => {
                let mut bc = BaselineConfig::new(m, 2, seed);
                bc.sizes = Some(vec![cfg.n1, cfg.n2]);
                run_baseline(points, &bc)
            }
        };
        let elapsed = start.elapsed();
        match result {
            Ok(r) => out.rows.push(ResultRow {
                experiment: cfg.kind.id().to_string(),
                d: task.d,
                n1: cfg.n1,
                n2: cfg.n2,
                state_index: task.state,
                theta,
                rep: task.rep,
                method: m,
                error: natural_cost(&r.partition, truth, 2)?,
                runtime_ms: if cfg.timing {
                    elapsed.as_secs_f64() * 1e3
                } else {
                    0.0
                },
            }),
            Err(e) => out.skipped.push(Skip {
                d: task.d,
                state_index: task.state,
                rep: task.rep,
                method: m,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// The NIW model of the Gaussian experiment for dimension `d`.
pub fn gaussian_model(d: usize) -> Result<NiwModel> {
    NiwModel::symmetric(2, NiwLabel::isotropic(d, 1.0, d as f64 + 2.0, 1.0))
}

/// Each state draws the cluster means and covariances from the NIW prior and
/// one point set from them; the IBR clusterer uses the NIW posterior.
pub fn run_gaussian_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let prior = LabelPrior::SizeMultiset(vec![cfg.n1, cfg.n2]);
    let mut tasks = Vec::new();
    for &d in &cfg.dims {
        for state in 0..cfg.states {
            tasks.push(Task { d, state, rep: 0 });
        }
    }
    let outputs: Vec<Result<TaskOutput>> = tasks
        .par_iter()
        .map(|task| {
            let model = gaussian_model(task.d)?;
            let mut rng = substream(
                cfg.seed,
                &[
                    ExperimentKind::Gaussian as u64,
                    task.d as u64,
                    task.state as u64,
                ],
            );
            let sample = model.sample(&[cfg.n1, cfg.n2], &mut rng)?;
            let truth = sample.labels.induced_partition();
            score_methods(cfg, task, None, &sample.points, &truth, &prior, &model)
        })
        .collect();
    collect(outputs)
}

/// Simulated feature vectors for one image set: `n1` class-1 images followed
/// by `n2` class-2 images, all sharing the drawn `rho`.
pub fn simulate_image_set(
    cfg: &ExperimentConfig,
    model_cfg: &GranularConfig,
    theta: f64,
    rng: &mut crate::rng::Rng,
) -> Result<(PointSet, Partition)> {
    let g = &cfg.granular;
    let rho = model_cfg.rho_grid[rng.random_range(0..model_cfg.rho_grid.len())];
    let mut rows = Vec::with_capacity(cfg.n());
    let mut labels = Vec::with_capacity(cfg.n());
    for (y, count) in [(0, cfg.n1), (1, cfg.n2)] {
        let sizing = model_cfg.sizing(y, theta)?;
        let b1 = model_cfg.proportions(y, rho)[0];
        for _ in 0..count {
            let f = match g.mode {
                FeatureMode::Analytic => simulate_features(g.n_grains, b1, &sizing, rng)?,
                FeatureMode::Rendered => {
                    let mut spec =
                        SceneSpec::new(g.n_grains, b1, sizing, g.image_width, g.image_height);
                    spec.px_per_unit = g.px_per_unit;
                    spec.min_radius_px = g.min_radius_px;
                    let scene = sample_scene(&spec, rng)?;
                    let mut f = image_features(&render_scene(&scene)?)?;
                    for (i, v) in f.x.iter_mut().enumerate() {
                        *v /= g.px_per_unit.powi(if i < 2 { 1 } else { 2 });
                    }
                    f
                }
            };
            rows.push(f.x.to_vec());
            labels.push(y);
        }
    }
    Ok((PointSet::new(rows)?, Partition::from_labels(&labels)))
}

/// For each state on the grid and each rep: draw `rho`, simulate the image
/// features, and cluster them.
pub fn run_granular_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let model_cfg = cfg.granular.model_config();
    let model = GranularModel::new(model_cfg.clone())?;
    let prior = LabelPrior::FixedSizes(vec![cfg.n1, cfg.n2]);
    let mut tasks = Vec::new();
    for state in 0..model_cfg.theta_grid.len() {
        for rep in 0..cfg.reps {
            tasks.push(Task { d: 4, state, rep });
        }
    }
    let outputs: Vec<Result<TaskOutput>> = tasks
        .par_iter()
        .map(|task| {
            let theta = model_cfg.theta_grid[task.state];
            let mut rng = substream(
                cfg.seed,
                &[
                    ExperimentKind::Granular as u64,
                    task.state as u64,
                    task.rep as u64,
                ],
            );
            let (points, truth) = simulate_image_set(cfg, &model_cfg, theta, &mut rng)?;
            score_methods(cfg, task, Some(theta), &points, &truth, &prior, &model)
        })
        .collect();
    collect(outputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub experiment: String,
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub method: Method,
    pub count: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub experiment: String,
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub state_index: usize,
    pub theta: Option<f64>,
    pub method: Method,
    pub count: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub overall: Vec<MethodSummary>,
    pub per_state: Vec<StateSummary>,
}

impl Summary {
    pub fn overall_csv(&self) -> Result<String> {
        write_csv(&self.overall)
    }

    pub fn per_state_csv(&self) -> Result<String> {
        write_csv(&self.per_state)
    }

    pub fn overall_for(&self, d: usize, m: Method) -> Option<&MethodSummary> {
        self.overall.iter().find(|s| s.d == d && s.method == m)
    }
}

/// Mean and standard error, summing in the given order.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-method overall means and per-state curves.
pub fn summarize(results: &RunResult) -> Result<Summary> {
    if results.rows.is_empty() {
        return Err(Error::invalid("no results to summarize"));
    }
    type Key = (String, usize, usize, usize, Method);
    let mut overall: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut states: BTreeMap<(Key, usize), (Option<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &results.rows {
        let key = (r.experiment.clone(), r.d, r.n1, r.n2, r.method);
        overall.entry(key.clone()).or_default().push(r.error);
        states
            .entry((key, r.state_index))
            .or_insert_with(|| (r.theta, Vec::new()))
            .1
            .push(r.error);
    }
    let overall = overall
        .into_iter()
        .map(|((experiment, d, n1, n2, method), v)| {
            let (mean_error, std_error) = mean_se(&v);
            MethodSummary {
                experiment,
                d,
                n1,
                n2,
                method,
                count: v.len(),
                mean_error,
                std_error,
            }
        })
        .collect();
    let per_state = states
        .into_iter()
        .map(
            |(((experiment, d, n1, n2, method), state_index), (theta, v))| {
                let (mean_error, std_error) = mean_se(&v);
                StateSummary {
                    experiment,
                    d,
                    n1,
                    n2,
                    state_index,
                    theta,
                    method,
                    count: v.len(),
                    mean_error,
                    std_error,
                }
            },
        )
        .collect();
    Ok(Summary { overall, per_state })
}

/// Expected natural cost of a uniformly random partition with block sizes
/// `(n1, n2)` against a fixed truth with the same sizes, by enumeration.
pub fn random_expected_error(n1: usize, n2: usize) -> Result<f64> {
    let truth: Vec<usize> = std::iter::repeat_n(0, n1)
        .chain(std::iter::repeat_n(1, n2))
        .collect();
    let truth = Partition::from_labels(&truth);
    let all = enumerate_partitions(n1 + n2, 2, Some(&[n1, n2]))?;
    let total = all
        .iter()
        .map(|p| natural_cost(p, &truth, 2))
        .sum::<Result<f64>>()?;
    Ok(total / all.len() as f64)
}
