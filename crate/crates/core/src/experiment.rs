//! Declarative experiment runner: a JSON configuration in, reproducible
//! CSV/JSON artifacts out. One experiment kind per figure or claim.
//!
//! Every run writes one directory containing `config.json` (the fully
//! resolved configuration), `summary.json` (all computed statistics),
//! `histogram.csv`/`samples.csv` for the main distribution and, where
//! applicable, analytic curves, per-agent tables, noise and tagged-agent
//! records. Given the same configuration and seed the outputs are
//! byte-identical.

use crate::analytics::{
    cc_gamma_shape, exponential_cdf, gamma_cdf, gaussian_fixed_point, pareto_cdf,
    series_coefficients, SeriesDistribution,
};
use crate::ar::{
    default_burn_in, simulate_annealed, simulate_growing, simulate_quenched, CapacityLaw,
    PopulationSpec, SimConfig,
};
use crate::error::{Error, Result};
use crate::estimation::{
    ks_distance, ks_two_sample, moments, tail_exponent, EmpiricalDistribution, Moments,
    TailFitResult, DEFAULT_BINS, DEFAULT_LOG_BINS_PER_DECADE,
};
use crate::kinetic::{simulate_kinetic, KineticModel, SavingsLaw, Tagged};
use crate::noise::{NoiseFamily, NoiseSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Default burn-in for annealed and fast-mixing kinetic runs, which
/// decorrelate in O(1) steps.
const FAST_MIXING_BURN_IN: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ArStatic,
    ArGrowing,
    ArAnnealed,
    KineticCcm,
    KineticCc,
    KineticGeneric,
    KineticYakovenko,
    ParetoSweep,
    AnalyticCurves,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ArStatic => "ar-static",
            Self::ArGrowing => "ar-growing",
            Self::ArAnnealed => "ar-annealed",
            Self::KineticCcm => "kinetic-ccm",
            Self::KineticCc => "kinetic-cc",
            Self::KineticGeneric => "kinetic-generic",
            Self::KineticYakovenko => "kinetic-yakovenko",
            Self::ParetoSweep => "pareto-sweep",
            Self::AnalyticCurves => "analytic-curves",
        }
    }
}

/// Simulation schedule as written in a config file; `burn_in` and `stride`
/// may be omitted and are resolved per experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    pub seed: u64,
}

/// Kinetic-model parameters; the exchange rule itself comes from the
/// experiment kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSection {
    pub agents: usize,
    /// Defaults to `agents`, i.e. mean wealth 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_wealth: Option<f64>,
    /// Shared savings propensity (CC model only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagged: Option<Tagged>,
}

/// Analytic-curve parameters; also supplies the reference curve of
/// simulation experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<KineticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticSection>,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parse a config value, reporting the offending field path on error.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let de = value;
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        Self::from_value(value)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Apply a dotted-path override, e.g. `sim.seed=7` or
/// `population.capacity_law.kind="constant"`. The value is parsed as JSON
/// when possible and falls back to a plain string.
pub fn apply_override(root: &mut serde_json::Value, path: &str, raw: &str) -> Result<()> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    for part in &parts[..parts.len() - 1] {
        if !cursor.is_object() {
            return Err(Error::Config(format!("override path `{path}` crosses a non-object")));
        }
        cursor = cursor
            .as_object_mut()
            .unwrap()
            .entry(part.to_string())
            .or_insert(serde_json::Value::Object(Default::default()));
    }
    let leaf = parts[parts.len() - 1];
    let value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    match cursor.as_object_mut() {
        Some(map) => {
            map.insert(leaf.to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(format!("override path `{path}` crosses a non-object"))),
    }
}

/// Load a config file and apply CLI-level overrides (`--seed`, `--out`,
/// `--set key=value`).
pub fn load_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    sets: &[String],
) -> Result<ExperimentConfig> {
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    for entry in sets {
        let (key, raw) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{entry}`")))?;
        apply_override(&mut value, key, raw)?;
    }
    if let Some(seed) = seed {
        apply_override(&mut value, "sim.seed", &seed.to_string())?;
    }
    if let Some(out) = out {
        apply_override(&mut value, "output.dir", &format!("{:?}", out.display().to_string()))?;
    }
    ExperimentConfig::from_value(value)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentsSummary {
    pub mean: f64,
    pub std: f64,
    pub se_mean: f64,
    pub batches: usize,
    pub n: usize,
}

impl MomentsSummary {
    fn from(m: &Moments, n: usize) -> Self {
        Self { mean: m.mean, std: m.std, se_mean: m.se_mean, batches: m.batches, n }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailSummary {
    pub gamma_hat: f64,
    pub std_err: f64,
    pub k: usize,
    pub w_min: f64,
}

impl From<TailFitResult> for TailSummary {
    fn from(t: TailFitResult) -> Self {
        Self { gamma_hat: t.gamma_hat, std_err: t.std_err, k: t.k, w_min: t.w_min }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TaggedSummary {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub mean: f64,
    pub se_mean: f64,
    pub n: usize,
}

/// The machine-readable result of a run; serialized as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_moments: Option<MomentsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagged: Option<TaggedSummary>,
    pub ks: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_sensitivity: Option<Vec<TailSummary>>,
    pub extra: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

/// An analytic curve tabulated for CSV export.
#[derive(Debug, Clone)]
pub struct Curve {
    pub xs: Vec<f64>,
    pub raw_pdf: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl Curve {
    fn from_series(series: &SeriesDistribution, noise_mean: f64, x_max: f64, points: usize) -> Self {
        let n = points.max(2);
        let mut xs = Vec::with_capacity(n);
        let mut raw_pdf = Vec::with_capacity(n);
        let mut pdf = Vec::with_capacity(n);
        let mut cdf = Vec::with_capacity(n);
        for i in 0..n {
            let x = x_max * i as f64 / (n - 1) as f64;
            let u = x / noise_mean;
            xs.push(x);
            raw_pdf.push(series.raw_pdf(u).unwrap() / noise_mean);
            pdf.push(series.pdf(u).unwrap() / noise_mean);
            cdf.push(series.cdf(u));
        }
        Self { xs, raw_pdf, pdf, cdf }
    }
}

#[derive(Debug, Clone)]
enum AgentTable {
    /// capacity, mean wealth, batch-means se, predicted `<xi>/mu`
    Ar(Vec<(f64, f64, f64, f64)>),
    /// savings, mean wealth
    Kinetic(Vec<(f64, f64)>),
}

/// Everything a run produced, before serialization.
#[derive(Debug, Clone, Default)]
struct RunData {
    samples: Option<EmpiricalDistribution>,
    noise: Option<EmpiricalDistribution>,
    tagged: Option<(Tagged, EmpiricalDistribution)>,
    curve: Option<Curve>,
    agents: Option<AgentTable>,
    ks: BTreeMap<String, f64>,
    extra: BTreeMap<String, f64>,
    tail: Option<TailSummary>,
    tail_sensitivity: Option<Vec<TailSummary>>,
}

pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: Summary,
}

/// Run one experiment end to end and write its artifact directory.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let resolved = resolve(config)?;
    let canonical = serde_json::to_string(&resolved)?;
    let config_hash = hex_digest(&canonical);
    let seed = resolved.sim.map(|s| s.seed).unwrap_or(0);

    let data = dispatch(&resolved)?;

    let mut outputs = Vec::new();
    let dir = resolved.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let meta = CsvMeta { experiment: resolved.experiment, config_hash: &config_hash, seed };

    let n_samples = data.samples.as_ref().map(|s| s.count()).unwrap_or(0);
    let moments_summary = match &data.samples {
        Some(s) if s.count() >= 10 => Some(MomentsSummary::from(&moments(s)?, s.count())),
        _ => None,
    };
    let noise_moments = match &data.noise {
        Some(s) if s.count() >= 10 => Some(MomentsSummary::from(&moments(s)?, s.count())),
        _ => None,
    };
    let tagged_summary = match &data.tagged {
        Some((tag, series)) if series.count() >= 10 => {
            let m = moments(series)?;
            Some(TaggedSummary {
                index: tag.index,
                lambda: tag.lambda,
                mean: m.mean,
                se_mean: m.se_mean,
                n: series.count(),
            })
        }
        _ => None,
    };

    if let Some(samples) = &data.samples {
        write_histogram_csv(&dir, "histogram.csv", &meta, samples, false)?;
        outputs.push("histogram.csv".into());
        write_samples_csv(&dir, "samples.csv", &meta, samples)?;
        outputs.push("samples.csv".into());
        if data.tail.is_some() {
            write_histogram_csv(&dir, "tail_histogram.csv", &meta, samples, true)?;
            outputs.push("tail_histogram.csv".into());
        }
    }
    if let Some(tail) = &data.tail {
        write_tail_fit_csv(&dir, "tail_fit.csv", &meta, tail, data.tail_sensitivity.as_deref())?;
        outputs.push("tail_fit.csv".into());
    }
    if let Some(noise) = &data.noise {
        write_histogram_csv(&dir, "noise_histogram.csv", &meta, noise, false)?;
        outputs.push("noise_histogram.csv".into());
        write_samples_csv(&dir, "noise_samples.csv", &meta, noise)?;
        outputs.push("noise_samples.csv".into());
    }
    if let Some((_, series)) = &data.tagged {
        write_histogram_csv(&dir, "tagged_histogram.csv", &meta, series, false)?;
        outputs.push("tagged_histogram.csv".into());
        write_samples_csv(&dir, "tagged_samples.csv", &meta, series)?;
        outputs.push("tagged_samples.csv".into());
    }
    if let Some(curve) = &data.curve {
        write_curve_csv(&dir, "analytic.csv", &meta, curve)?;
        outputs.push("analytic.csv".into());
    }
    if let Some(table) = &data.agents {
        write_agents_csv(&dir, "agents.csv", &meta, table)?;
        outputs.push("agents.csv".into());
    }

    let summary = Summary {
        experiment: resolved.experiment,
        config_hash,
        seed,
        n_samples,
        moments: moments_summary,
        noise_moments,
        tagged: tagged_summary,
        ks: data.ks,
        tail: data.tail,
        tail_sensitivity: data.tail_sensitivity,
        extra: data.extra,
        outputs,
        config: resolved.clone(),
    };

    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&resolved)?)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(RunArtifacts { dir, summary })
}

/// Fill defaults and check that the sections required by the experiment
/// kind are present and valid.
pub fn resolve(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    use ExperimentKind::*;
    let mut cfg = config.clone();
    match cfg.experiment {
        ArStatic | ParetoSweep => {
            let pop = require(&cfg.population, "population")?;
            pop.validate()?;
            let noise = require(&cfg.noise, "noise")?;
            noise.validate()?;
            if !noise.is_static() {
                return Err(Error::Config(format!(
                    "{} needs a static market; use ar-growing for a ramp",
                    cfg.experiment.as_str()
                )));
            }
            let lambda_max = 1.0 - min_capacity(&pop);
            let sim = require(&cfg.sim, "sim")?;
            let mut resolved = resolve_sim(sim, default_burn_in(lambda_max));
            if cfg.experiment == ParetoSweep && sim.stride.is_none() {
                // only the per-agent means are consumed; keep one sample each
                resolved.stride = (resolved.steps - resolved.burn_in).max(1);
            }
            resolved_sim_into(&mut cfg, resolved)?;
            if cfg.experiment == ParetoSweep
                && matches!(pop.capacity_law, CapacityLaw::Constant { .. })
            {
                return Err(Error::Config(
                    "pareto-sweep needs a spread of capacities, not a constant law".into(),
                ));
            }
            resolve_analytic_for_ar(&mut cfg)?;
        }
        ArAnnealed => {
            let pop = require(&cfg.population, "population")?;
            pop.validate()?;
            let noise = require(&cfg.noise, "noise")?;
            noise.validate()?;
            if noise.family != NoiseFamily::Exponential || !noise.is_static() {
                return Err(Error::Config("ar-annealed needs static exponential noise".into()));
            }
            let sim = require(&cfg.sim, "sim")?;
            let resolved = resolve_sim(sim, FAST_MIXING_BURN_IN);
            resolved_sim_into(&mut cfg, resolved)?;
        }
        ArGrowing => {
            let pop = require(&cfg.population, "population")?;
            pop.validate()?;
            let noise = require(&cfg.noise, "noise")?;
            noise.validate()?;
            if noise.is_static() {
                return Err(Error::Config("ar-growing needs a linear-ramp schedule".into()));
            }
            let sim = require(&cfg.sim, "sim")?;
            // burn-in and stride are meaningless: sampling happens at t = T only
            let horizon = noise.schedule.unwrap().horizon;
            let resolved = SimConfig::new(horizon, 0, 1, sim.seed);
            resolved_sim_into(&mut cfg, resolved)?;
            resolve_analytic_for_ar(&mut cfg)?;
        }
        KineticCcm | KineticCc | KineticGeneric | KineticYakovenko => {
            let kin = require(&cfg.kinetic, "kinetic")?;
            if kin.agents < 2 {
                return Err(Error::Config("kinetic experiments need at least 2 agents".into()));
            }
            let kind = cfg.experiment;
            if kind == KineticCc && kin.lambda.is_none() {
                return Err(Error::Config("kinetic-cc needs kinetic.lambda".into()));
            }
            if kind != KineticCc && kin.lambda.is_some() {
                return Err(Error::Config(
                    "kinetic.lambda only applies to the kinetic-cc experiment".into(),
                ));
            }
            let default_burn = match kind {
                KineticCcm => default_burn_in(1.0 - crate::ar::DEFAULT_MU_MIN),
                KineticCc => default_burn_in(kin.lambda.unwrap_or(0.0)),
                _ => FAST_MIXING_BURN_IN,
            };
            let sim = require(&cfg.sim, "sim")?;
            let resolved = resolve_sim(sim, default_burn);
            resolved_sim_into(&mut cfg, resolved)?;
            let mut kin = kin;
            kin.total_wealth = Some(kin.total_wealth.unwrap_or(kin.agents as f64));
            cfg.kinetic = Some(kin);
        }
        AnalyticCurves => {
            let analytic = require(&cfg.analytic, "analytic")?;
            let lambda = analytic
                .lambda
                .ok_or_else(|| Error::Config("analytic-curves needs analytic.lambda".into()))?;
            cfg.analytic = Some(filled_analytic(analytic, lambda, 1.0));
        }
    }
    Ok(cfg)
}

fn require<T: Clone>(section: &Option<T>, name: &str) -> Result<T> {
    section
        .clone()
        .ok_or_else(|| Error::Config(format!("missing required config section `{name}`")))
}

fn min_capacity(pop: &PopulationSpec) -> f64 {
    match pop.capacity_law {
        CapacityLaw::Constant { mu } => mu,
        _ => pop.mu_min,
    }
}

fn resolve_sim(sim: SimSection, default_burn: u64) -> SimConfig {
    let burn_in = sim.burn_in.unwrap_or_else(|| default_burn.min(sim.steps.saturating_sub(1)));
    SimConfig::new(sim.steps, burn_in, sim.stride.unwrap_or(1), sim.seed)
}

fn resolved_sim_into(cfg: &mut ExperimentConfig, sim: SimConfig) -> Result<()> {
    sim.validate()?;
    cfg.sim = Some(SimSection {
        steps: sim.steps,
        burn_in: Some(sim.burn_in),
        stride: Some(sim.stride),
        seed: sim.seed,
    });
    Ok(())
}

fn sim_config(cfg: &ExperimentConfig) -> SimConfig {
    let s = cfg.sim.expect("resolved config has a sim section");
    SimConfig::new(s.steps, s.burn_in.unwrap_or(0), s.stride.unwrap_or(1), s.seed)
}

/// For constant-capacity exponential runs the series of the steady state is
/// the natural reference; fill the analytic section accordingly.
fn resolve_analytic_for_ar(cfg: &mut ExperimentConfig) -> Result<()> {
    let noise = cfg.noise.as_ref().unwrap();
    let pop = cfg.population.as_ref().unwrap();
    if noise.family != NoiseFamily::Exponential {
        return Ok(());
    }
    if let CapacityLaw::Constant { mu } = pop.capacity_law {
        let lambda = 1.0 - mu;
        if lambda > 0.0 {
            let analytic = cfg.analytic.unwrap_or(AnalyticSection {
                lambda: None,
                order: None,
                x_max: None,
                points: None,
            });
            let mean = if noise.is_static() { noise.mean } else { 1.0 };
            cfg.analytic = Some(filled_analytic(analytic, lambda, mean));
        }
    }
    Ok(())
}

fn filled_analytic(section: AnalyticSection, lambda: f64, noise_mean: f64) -> AnalyticSection {
    AnalyticSection {
        lambda: Some(section.lambda.unwrap_or(lambda)),
        order: Some(section.order.unwrap_or(12)),
        x_max: Some(section.x_max.unwrap_or(4.0 * noise_mean / (1.0 - lambda))),
        points: Some(section.points.unwrap_or(601)),
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<RunData> {
    use ExperimentKind::*;
    match cfg.experiment {
        ArStatic => run_ar_static(cfg),
        ArGrowing => run_ar_growing(cfg),
        ArAnnealed => run_ar_annealed(cfg),
        ParetoSweep => run_pareto_sweep(cfg),
        KineticCcm | KineticCc | KineticGeneric | KineticYakovenko => run_kinetic(cfg),
        AnalyticCurves => run_analytic_curves(cfg),
    }
}

fn series_from(cfg: &ExperimentConfig) -> Result<Option<(SeriesDistribution, AnalyticSection)>> {
    match cfg.analytic {
        Some(a) => {
            let lambda = a.lambda.unwrap();
            if lambda <= 0.0 {
                return Ok(None);
            }
            Ok(Some((series_coefficients(lambda, a.order.unwrap())?, a)))
        }
        None => Ok(None),
    }
}

fn run_ar_static(cfg: &ExperimentConfig) -> Result<RunData> {
    let pop = cfg.population.unwrap();
    let noise = cfg.noise.unwrap();
    let sim = sim_config(cfg);
    let run = simulate_quenched(&pop, &noise, &sim)?;
    let pooled = run.pooled();

    let mut data = RunData::default();
    let mut agents = Vec::with_capacity(run.agents.len());
    let mut max_z = 0.0f64;
    for a in &run.agents {
        let predicted = noise.mean / a.capacity;
        if a.se_mean > 0.0 {
            max_z = max_z.max((a.mean_wealth - predicted).abs() / a.se_mean);
        }
        agents.push((a.capacity, a.mean_wealth, a.se_mean, predicted));
    }
    data.extra.insert("mean_wealth_law_max_z".into(), max_z);

    match (noise.family, pop.capacity_law) {
        (NoiseFamily::Exponential, CapacityLaw::Constant { .. }) => {
            if let Some((series, analytic)) = series_from(cfg)? {
                let d = ks_distance(&pooled, |x| series.cdf(x / noise.mean))?;
                data.ks.insert(format!("series_order{}", series.order()), d);
                data.curve = Some(Curve::from_series(
                    &series,
                    noise.mean,
                    analytic.x_max.unwrap(),
                    analytic.points.unwrap(),
                ));
            }
        }
        (NoiseFamily::Gaussian, CapacityLaw::Constant { mu }) => {
            let (alpha, sigma) = gaussian_fixed_point(noise.mean, noise.sigma(), 1.0 - mu)?;
            let normal = Normal::new(alpha, sigma)
                .map_err(|e| Error::Domain(format!("gaussian fixed point: {e}")))?;
            let d = ks_distance(&pooled, |x| normal.cdf(x))?;
            data.ks.insert("gaussian_fixed_point".into(), d);
            data.extra.insert("fixed_point_mean".into(), alpha);
            data.extra.insert("fixed_point_std".into(), sigma);
        }
        _ => {}
    }

    data.samples = Some(pooled);
    data.agents = Some(AgentTable::Ar(agents));
    Ok(data)
}

fn run_ar_growing(cfg: &ExperimentConfig) -> Result<RunData> {
    let pop = cfg.population.unwrap();
    let noise = cfg.noise.unwrap();
    let sim = sim_config(cfg);
    let emp = simulate_growing(&pop, &noise, &sim)?;

    let mut data = RunData::default();
    if let Some((series, analytic)) = series_from(cfg)? {
        // the ramp ends at a(T) = 1, so the static unit-mean series applies
        let d = ks_distance(&emp, |x| series.cdf(x))?;
        data.ks.insert(format!("static_series_order{}", series.order()), d);
        data.curve = Some(Curve::from_series(
            &series,
            1.0,
            analytic.x_max.unwrap(),
            analytic.points.unwrap(),
        ));
    }
    data.samples = Some(emp);
    Ok(data)
}

fn run_ar_annealed(cfg: &ExperimentConfig) -> Result<RunData> {
    let pop = cfg.population.unwrap();
    let noise = cfg.noise.unwrap();
    let sim = sim_config(cfg);
    let emp = simulate_annealed(&pop, &noise, &sim)?;

    let mut data = RunData::default();
    let a = noise.mean;
    let d = ks_distance(&emp, |x| gamma_cdf(2.0, x / a))?;
    data.ks.insert("gamma2".into(), d);
    data.samples = Some(emp);
    Ok(data)
}

fn run_pareto_sweep(cfg: &ExperimentConfig) -> Result<RunData> {
    let pop = cfg.population.unwrap();
    let noise = cfg.noise.unwrap();
    let sim = sim_config(cfg);
    let run = simulate_quenched(&pop, &noise, &sim)?;

    let mut data = RunData::default();
    let mut agents = Vec::with_capacity(run.agents.len());
    for a in &run.agents {
        agents.push((a.capacity, a.mean_wealth, a.se_mean, noise.mean / a.capacity));
    }
    let means = EmpiricalDistribution::new(run.mean_wealths());

    let fit = tail_exponent(&means, None)?;
    let n = means.count();
    let mut sensitivity = Vec::new();
    for k in [n / 20, n / 5] {
        if k >= 1 {
            sensitivity.push(tail_exponent(&means, Some(k))?.into());
        }
    }
    let d = ks_distance(&means, |w| {
        pareto_cdf(&pop.capacity_law, pop.mu_min, noise.mean, w).unwrap_or(0.0)
    })?;
    data.ks.insert("pareto_average_wealth".into(), d);
    data.tail = Some(fit.into());
    data.tail_sensitivity = Some(sensitivity);
    data.samples = Some(means);
    data.agents = Some(AgentTable::Ar(agents));
    Ok(data)
}

fn run_kinetic(cfg: &ExperimentConfig) -> Result<RunData> {
    let kin = cfg.kinetic.unwrap();
    let sim = sim_config(cfg);
    let model = match cfg.experiment {
        ExperimentKind::KineticCcm => KineticModel::Ccm { savings_law: SavingsLaw::Uniform01 },
        ExperimentKind::KineticCc => KineticModel::Cc { lambda: kin.lambda.unwrap() },
        ExperimentKind::KineticGeneric => KineticModel::GenericTwoNoise,
        ExperimentKind::KineticYakovenko => KineticModel::Yakovenko,
        _ => unreachable!("non-kinetic experiment dispatched to run_kinetic"),
    };
    let n = kin.agents;
    let total = kin.total_wealth.unwrap();
    let mean_x = total / n as f64;
    let run = simulate_kinetic(&model, n, total, &sim, kin.tagged)?;

    let mut data = RunData::default();
    data.extra.insert("total_wealth_drift".into(), run.total_wealth_drift);
    data.extra.insert("mean_wealth".into(), mean_x);

    match model {
        KineticModel::Ccm { .. } => {
            let means = EmpiricalDistribution::new(run.mean_wealths.clone());
            if means.count() >= 100 {
                let fit = tail_exponent(&means, None)?;
                let m = means.count();
                let mut sensitivity = Vec::new();
                for k in [m / 20, m / 5] {
                    if k >= 1 {
                        sensitivity.push(tail_exponent(&means, Some(k))?.into());
                    }
                }
                data.tail = Some(fit.into());
                data.tail_sensitivity = Some(sensitivity);
            }
            data.agents = Some(AgentTable::Kinetic(
                run.savings.iter().copied().zip(run.mean_wealths.iter().copied()).collect(),
            ));
        }
        KineticModel::Cc { lambda } => {
            // Gamma-like reference with n = (1+2 lambda)/(1-lambda): an
            // approximate fit from the literature, exact only at lambda = 0.
            let shape = cc_gamma_shape(lambda);
            let d = ks_distance(&run.pooled, |x| gamma_cdf(shape, x * shape / mean_x))?;
            data.ks.insert("gamma_like_reference".into(), d);
            data.extra.insert("gamma_like_shape".into(), shape);
        }
        KineticModel::GenericTwoNoise => {
            // steady state Gamma_2 with mean <x>; effective noise is
            // exponential with mean <x>/2
            let d = ks_distance(&run.pooled, |x| gamma_cdf(2.0, 2.0 * x / mean_x))?;
            data.ks.insert("gamma2".into(), d);
            let dn = ks_distance(&run.noise, |x| exponential_cdf(mean_x / 2.0, x))?;
            data.ks.insert("noise_exponential".into(), dn);
        }
        KineticModel::Yakovenko => {
            let d = ks_distance(&run.pooled, |x| exponential_cdf(mean_x, x))?;
            data.ks.insert("exponential".into(), d);
        }
    }

    data.tagged = kin.tagged.zip(run.tagged);
    data.noise = Some(run.noise);
    data.samples = Some(run.pooled);
    Ok(data)
}

fn run_analytic_curves(cfg: &ExperimentConfig) -> Result<RunData> {
    let analytic = cfg.analytic.unwrap();
    let series = series_coefficients(analytic.lambda.unwrap(), analytic.order.unwrap())?;
    let curve =
        Curve::from_series(&series, 1.0, analytic.x_max.unwrap(), analytic.points.unwrap());
    let mut data = RunData { curve: Some(curve), ..Default::default() };
    data.extra.insert("series_coefficient_sum".into(), series.coefficient_sum());
    data.extra.insert("series_mass".into(), series.mass());
    data.extra.insert("series_mean".into(), series.mean());
    data.extra
        .insert("series_mean_expected".into(), 1.0 / (1.0 - series.lambda()));
    Ok(data)
}

// ---------------------------------------------------------------------------
// file output

struct CsvMeta<'a> {
    experiment: ExperimentKind,
    config_hash: &'a str,
    seed: u64,
}

impl CsvMeta<'_> {
    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# armarket experiment={}", self.experiment.as_str())?;
        writeln!(out, "# config_hash={}", self.config_hash)?;
        writeln!(out, "# seed={}", self.seed)
    }
}

fn create(dir: &Path, name: &str) -> Result<std::io::BufWriter<fs::File>> {
    Ok(std::io::BufWriter::new(fs::File::create(dir.join(name))?))
}

fn write_histogram_csv(
    dir: &Path,
    name: &str,
    meta: &CsvMeta,
    emp: &EmpiricalDistribution,
    logarithmic: bool,
) -> Result<()> {
    let hist = if logarithmic {
        emp.log_histogram(DEFAULT_LOG_BINS_PER_DECADE)
    } else {
        emp.histogram(DEFAULT_BINS)
    };
    let mut out = create(dir, name)?;
    meta.write(&mut out)?;
    writeln!(out, "bin_left,bin_right,density")?;
    for ((w, &c), d) in hist.edges.windows(2).zip(&hist.counts).zip(hist.densities()) {
        let _ = c;
        writeln!(out, "{},{},{}", w[0], w[1], d)?;
    }
    Ok(())
}

fn write_samples_csv(
    dir: &Path,
    name: &str,
    meta: &CsvMeta,
    emp: &EmpiricalDistribution,
) -> Result<()> {
    let mut out = create(dir, name)?;
    meta.write(&mut out)?;
    writeln!(out, "value")?;
    for x in emp.samples() {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

fn write_curve_csv(dir: &Path, name: &str, meta: &CsvMeta, curve: &Curve) -> Result<()> {
    let mut out = create(dir, name)?;
    meta.write(&mut out)?;
    writeln!(out, "x,pdf_raw,pdf,cdf")?;
    for i in 0..curve.xs.len() {
        writeln!(out, "{},{},{},{}", curve.xs[i], curve.raw_pdf[i], curve.pdf[i], curve.cdf[i])?;
    }
    Ok(())
}

fn write_tail_fit_csv(
    dir: &Path,
    name: &str,
    meta: &CsvMeta,
    fit: &TailSummary,
    sensitivity: Option<&[TailSummary]>,
) -> Result<()> {
    let mut out = create(dir, name)?;
    meta.write(&mut out)?;
    writeln!(out, "gamma_hat,std_err,k,w_min")?;
    for row in std::iter::once(fit).chain(sensitivity.unwrap_or_default()) {
        writeln!(out, "{},{},{},{}", row.gamma_hat, row.std_err, row.k, row.w_min)?;
    }
    Ok(())
}

fn write_agents_csv(dir: &Path, name: &str, meta: &CsvMeta, table: &AgentTable) -> Result<()> {
    let mut out = create(dir, name)?;
    meta.write(&mut out)?;
    match table {
        AgentTable::Ar(rows) => {
            writeln!(out, "capacity,mean_wealth,se_mean,predicted_mean")?;
            for (c, m, se, p) in rows {
                writeln!(out, "{c},{m},{se},{p}")?;
            }
        }
        AgentTable::Kinetic(rows) => {
            writeln!(out, "lambda,mean_wealth")?;
            for (l, w) in rows {
                writeln!(out, "{l},{w}")?;
            }
        }
    }
    Ok(())
}

fn hex_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

// ---------------------------------------------------------------------------
// run comparison

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CompareTolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// Relative tolerance on the difference of means.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rel: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub run_a: String,
    pub run_b: String,
    /// "two-sample" or "one-sample-vs-curve".
    pub mode: String,
    pub ks: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_delta_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_delta_rel: Option<f64>,
    pub tolerances: CompareTolerances,
    pub pass: bool,
}

/// Compare a run against another run or against an analytic-curves run.
///
/// `a` and `b` name run directories (or their `summary.json`). Sample-based
/// runs are compared by two-sample KS; when `b` is an analytic run the
/// one-sample KS against its tabulated CDF is used.
pub fn compare(
    a: &Path,
    b: &Path,
    a_samples: &str,
    b_samples: &str,
    tolerances: CompareTolerances,
) -> Result<ComparisonReport> {
    let dir_a = run_dir(a)?;
    let dir_b = run_dir(b)?;
    let samples_a = read_samples_csv(&dir_a.join(a_samples))?;
    let emp_a = EmpiricalDistribution::new(samples_a);
    let summary_a = read_summary(&dir_a);
    let summary_b = read_summary(&dir_b);

    let (mode, ks) = if dir_b.join(b_samples).exists() {
        let emp_b = EmpiricalDistribution::new(read_samples_csv(&dir_b.join(b_samples))?);
        ("two-sample".to_string(), ks_two_sample(&emp_a, &emp_b)?)
    } else if dir_b.join("analytic.csv").exists() {
        let (xs, cdf) = read_curve_cdf(&dir_b.join("analytic.csv"))?;
        let reference = move |x: f64| interp_cdf(&xs, &cdf, x);
        ("one-sample-vs-curve".to_string(), ks_distance(&emp_a, reference)?)
    } else {
        return Err(Error::Comparison(format!(
            "{} has neither `{}` nor `analytic.csv`",
            dir_b.display(),
            b_samples
        )));
    };

    let mean_a = summary_a.as_ref().and_then(summary_mean);
    let mean_b = summary_b.as_ref().and_then(summary_mean);
    let mean_delta_rel = match (mean_a, mean_b) {
        (Some(ma), Some(mb)) if mb != 0.0 => Some(((ma - mb) / mb).abs()),
        _ => None,
    };
    let std_a = summary_a.as_ref().and_then(|s| s.moments.map(|m| m.std));
    let std_b = summary_b.as_ref().and_then(|s| s.moments.map(|m| m.std));
    let std_delta_rel = match (std_a, std_b) {
        (Some(sa), Some(sb)) if sb != 0.0 => Some(((sa - sb) / sb).abs()),
        _ => None,
    };

    let ks_ok = tolerances.ks.map(|t| ks <= t).unwrap_or(true);
    let mean_ok = match (tolerances.mean_rel, mean_delta_rel) {
        (Some(t), Some(d)) => d <= t,
        (Some(_), None) => false,
        (None, _) => true,
    };

    Ok(ComparisonReport {
        run_a: dir_a.display().to_string(),
        run_b: dir_b.display().to_string(),
        mode,
        ks,
        mean_a,
        mean_b,
        mean_delta_rel,
        std_a,
        std_b,
        std_delta_rel,
        tolerances,
        pass: ks_ok && mean_ok,
    })
}

fn run_dir(path: &Path) -> Result<PathBuf> {
    if path.is_dir() {
        Ok(path.to_path_buf())
    } else if path.is_file() {
        Ok(path.parent().unwrap_or(Path::new(".")).to_path_buf())
    } else {
        Err(Error::Comparison(format!("{} does not exist", path.display())))
    }
}

fn read_summary(dir: &Path) -> Option<Summary> {
    let text = fs::read_to_string(dir.join("summary.json")).ok()?;
    serde_json::from_str(&text).ok()
}

fn summary_mean(summary: &Summary) -> Option<f64> {
    summary
        .moments
        .map(|m| m.mean)
        .or_else(|| summary.extra.get("series_mean").copied())
}

fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "value" {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .map_err(|e| Error::Comparison(format!("bad sample `{line}` in {path:?}: {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Comparison(format!("no samples in {path:?}")));
    }
    Ok(out)
}

fn read_curve_cdf(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut cdf = Vec::new();
    let mut cdf_col = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cdf_col.is_none() {
            cdf_col = cols.iter().position(|c| *c == "cdf");
            if cdf_col.is_none() {
                return Err(Error::Comparison(format!("{path:?} has no `cdf` column")));
            }
            continue;
        }
        let idx = cdf_col.unwrap();
        if cols.len() <= idx {
            return Err(Error::Comparison(format!("short row in {path:?}")));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Comparison(format!("bad number `{s}` in {path:?}: {e}")))
        };
        xs.push(parse(cols[0])?);
        cdf.push(parse(cols[idx])?);
    }
    if xs.len() < 2 {
        return Err(Error::Comparison(format!("curve in {path:?} is too short")));
    }
    Ok((xs, cdf))
}

fn interp_cdf(xs: &[f64], cdf: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return if x < xs[0] { 0.0 } else { cdf[0] };
    }
    if x >= xs[n - 1] {
        return cdf[n - 1];
    }
    let i = xs.partition_point(|&g| g <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    cdf[i - 1] * (1.0 - t) + cdf[i] * t
}
