//! The auto-regressive market model: each agent keeps a savings fraction
//! `lambda = 1 - mu` of its wealth and receives a stochastic market return,
//! `x(t) = (1 - mu) x(t-1) + xi(t)`.
//!
//! Three variants are simulated: quenched capacities (static market),
//! annealed savings (`lambda` redrawn every step), and growing markets
//! (mean return ramped over a horizon, sampled across an ensemble at the
//! final step).

use crate::error::{Error, Result};
use crate::estimation::{BatchMeans, EmpiricalDistribution, DEFAULT_BATCHES};
use crate::noise::{NoiseFamily, NoiseSpec};
use crate::rng::{master_rng, replica_rng, SimRng};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default capacity floor when sampling a capacity law; keeps the mean
/// wealth `<xi>/mu` and the burn-in bounded while leaving three decades of
/// tail measurable.
pub const DEFAULT_MU_MIN: f64 = 1e-3;

/// One agent: wealth `x` and investment capacity `mu` (savings `1 - mu`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub wealth: f64,
    pub capacity: f64,
}

impl AgentState {
    pub fn new(wealth: f64, capacity: f64) -> Self {
        Self { wealth, capacity }
    }

    pub fn savings(&self) -> f64 {
        1.0 - self.capacity
    }
}

/// One market update: the agent keeps `(1 - mu) x` and gains `xi`.
#[inline]
pub fn ar_step(agent: AgentState, xi: f64) -> AgentState {
    AgentState { wealth: agent.savings() * agent.wealth + xi, capacity: agent.capacity }
}

/// Distribution `g(mu)` of investment capacities across the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CapacityLaw {
    /// Uniform on `(mu_min, 1]`.
    Uniform01,
    /// Density proportional to `mu^alpha` on `(mu_min, 1]`, `alpha` in `[0, 1)`.
    PowerAlpha { alpha: f64 },
    /// Every agent shares the same capacity.
    Constant { mu: f64 },
}

impl CapacityLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CapacityLaw::Uniform01 => Ok(()),
            CapacityLaw::PowerAlpha { alpha } if (0.0..1.0).contains(alpha) => Ok(()),
            CapacityLaw::PowerAlpha { alpha } => Err(Error::Config(format!(
                "power-law capacity exponent must be in [0, 1), got {alpha}"
            ))),
            CapacityLaw::Constant { mu } if *mu > 0.0 && *mu <= 1.0 => Ok(()),
            CapacityLaw::Constant { mu } => {
                Err(Error::Config(format!("constant capacity must be in (0, 1], got {mu}")))
            }
        }
    }

    /// Draw one capacity in `(mu_min, 1]`.
    pub fn sample(&self, mu_min: f64, rng: &mut SimRng) -> f64 {
        // 1 - random() lies in (0, 1], keeping the floor strict.
        let u = 1.0 - rng.random::<f64>();
        match self {
            CapacityLaw::Uniform01 => mu_min + u * (1.0 - mu_min),
            CapacityLaw::PowerAlpha { alpha } => {
                let p = 1.0 + alpha;
                let lo = mu_min.powf(p);
                (lo + u * (1.0 - lo)).powf(1.0 / p)
            }
            CapacityLaw::Constant { mu } => *mu,
        }
    }
}

/// Ensemble-level description of the agent population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub count: usize,
    pub capacity_law: CapacityLaw,
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    #[serde(default = "default_mu_min")]
    pub mu_min: f64,
}

fn default_initial_wealth() -> f64 {
    1.0
}

fn default_mu_min() -> f64 {
    DEFAULT_MU_MIN
}

impl PopulationSpec {
    pub fn new(count: usize, capacity_law: CapacityLaw) -> Self {
        Self { count, capacity_law, initial_wealth: 1.0, mu_min: DEFAULT_MU_MIN }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("population count must be positive".into()));
        }
        if !self.initial_wealth.is_finite() {
            return Err(Error::Config("initial wealth must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.mu_min) {
            return Err(Error::Config(format!("mu_min must be in [0, 1), got {}", self.mu_min)));
        }
        self.capacity_law.validate()
    }

    /// Quenched capacities for the whole population, drawn from the master
    /// stream in agent order.
    pub fn sample_capacities(&self, seed: u64) -> Vec<f64> {
        let mut rng = master_rng(seed);
        (0..self.count).map(|_| self.capacity_law.sample(self.mu_min, &mut rng)).collect()
    }
}

/// Simulation schedule: total steps per agent, discarded burn-in, sampling
/// stride and the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    pub seed: u64,
}

fn default_stride() -> u64 {
    1
}

impl SimConfig {
    pub fn new(steps: u64, burn_in: u64, stride: u64, seed: u64) -> Self {
        Self { steps, burn_in, stride, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if self.burn_in >= self.steps {
            return Err(Error::Config(format!(
                "burn_in = {} must be below steps = {}",
                self.burn_in, self.steps
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Twenty e-foldings of the slowest geometric mode `lambda_max^t`.
pub fn default_burn_in(lambda_max: f64) -> u64 {
    (20.0 / (1.0 - lambda_max)).ceil() as u64
}

/// Per-agent output of a quenched run.
#[derive(Debug, Clone)]
pub struct AgentSummary {
    pub capacity: f64,
    /// Time-averaged wealth over every post-burn-in step.
    pub mean_wealth: f64,
    /// Batch-means standard error of the time average.
    pub se_mean: f64,
    /// Wealth samples recorded every `stride` steps after burn-in.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QuenchedRun {
    pub agents: Vec<AgentSummary>,
}

impl QuenchedRun {
    /// All recorded samples pooled in agent order.
    pub fn pooled(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::from_parts(self.agents.iter().map(|a| a.samples.clone()).collect())
    }

    pub fn mean_wealths(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.mean_wealth).collect()
    }
}

#[derive(Clone, Copy)]
enum StaticSampler {
    Exponential { mean: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl StaticSampler {
    fn new(noise: &NoiseSpec) -> Self {
        match noise.family {
            NoiseFamily::Exponential => Self::Exponential { mean: noise.mean },
            NoiseFamily::Gaussian => Self::Gaussian { mean: noise.mean, std: noise.sigma() },
        }
    }

    #[inline]
    fn draw(&self, rng: &mut SimRng) -> f64 {
        match *self {
            Self::Exponential { mean } => mean * rng.sample::<f64, _>(Exp1),
            Self::Gaussian { mean, std } => mean + std * rng.sample::<f64, _>(StandardNormal),
        }
    }

    /// Draw with the mean rescaled to `a` (ramped markets).
    #[inline]
    fn draw_with_mean(&self, a: f64, rng: &mut SimRng) -> f64 {
        match *self {
            Self::Exponential { .. } => a * rng.sample::<f64, _>(Exp1),
            Self::Gaussian { std, .. } => a + std * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

/// Evolve every agent independently under quenched capacities in a static
/// market; record samples after burn-in and the time-averaged wealth of
/// each agent.
pub fn simulate_quenched(
    pop: &PopulationSpec,
    noise: &NoiseSpec,
    cfg: &SimConfig,
) -> Result<QuenchedRun> {
    pop.validate()?;
    noise.validate()?;
    cfg.validate()?;
    if !noise.is_static() {
        return Err(Error::Config(
            "quenched simulation needs a static market; use simulate_growing for a ramp".into(),
        ));
    }
    let capacities = pop.sample_capacities(cfg.seed);
    let sampler = StaticSampler::new(noise);
    let agents = capacities
        .into_par_iter()
        .enumerate()
        .map(|(i, capacity)| {
            let mut rng = replica_rng(cfg.seed, i as u64);
            let mut agent = AgentState::new(pop.initial_wealth, capacity);
            let post = cfg.steps - cfg.burn_in;
            let mut acc = BatchMeans::new(post, DEFAULT_BATCHES);
            let mut samples = Vec::with_capacity(post.div_ceil(cfg.stride) as usize);
            for t in 0..cfg.steps {
                agent = ar_step(agent, sampler.draw(&mut rng));
                if t >= cfg.burn_in {
                    acc.push(agent.wealth);
                    if (t - cfg.burn_in).is_multiple_of(cfg.stride) {
                        samples.push(agent.wealth);
                    }
                }
            }
            AgentSummary { capacity, mean_wealth: acc.mean(), se_mean: acc.se_mean(), samples }
        })
        .collect();
    Ok(QuenchedRun { agents })
}

/// Annealed savings: `lambda` is redrawn uniformly in `(0, 1)` at every
/// step for every agent. Exponential noise only (the exactly solvable
/// case); returns the pooled stationary samples.
pub fn simulate_annealed(
    pop: &PopulationSpec,
    noise: &NoiseSpec,
    cfg: &SimConfig,
) -> Result<EmpiricalDistribution> {
    pop.validate()?;
    noise.validate()?;
    cfg.validate()?;
    if noise.family != NoiseFamily::Exponential || !noise.is_static() {
        return Err(Error::Config("annealed simulation needs static exponential noise".into()));
    }
    let mean = noise.mean;
    let parts: Vec<Vec<f64>> = (0..pop.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(cfg.seed, i as u64);
            let mut wealth = pop.initial_wealth;
            let post = cfg.steps - cfg.burn_in;
            let mut samples = Vec::with_capacity(post.div_ceil(cfg.stride) as usize);
            for t in 0..cfg.steps {
                let lambda = rng.random::<f64>();
                wealth = lambda * wealth + mean * rng.sample::<f64, _>(Exp1);
                if t >= cfg.burn_in && (t - cfg.burn_in).is_multiple_of(cfg.stride) {
                    samples.push(wealth);
                }
            }
            samples
        })
        .collect();
    Ok(EmpiricalDistribution::from_parts(parts))
}

/// Growing market: the mean return follows the ramp `a(t) = t/T`; each of
/// `pop.count` replicas evolves independently for `T` steps and the
/// instantaneous wealth at `t = T` is collected across the ensemble.
pub fn simulate_growing(
    pop: &PopulationSpec,
    noise: &NoiseSpec,
    cfg: &SimConfig,
) -> Result<EmpiricalDistribution> {
    pop.validate()?;
    noise.validate()?;
    let horizon = match noise.schedule {
        Some(s) if !noise.is_static() => s.horizon,
        _ => {
            return Err(Error::Config(
                "growing simulation needs a linear-ramp schedule on the noise".into(),
            ))
        }
    };
    let capacities = pop.sample_capacities(cfg.seed);
    let sampler = StaticSampler::new(noise);
    let t_inv = 1.0 / horizon as f64;
    let samples: Vec<f64> = capacities
        .into_par_iter()
        .enumerate()
        .map(|(i, capacity)| {
            let mut rng = replica_rng(cfg.seed, i as u64);
            let mut agent = AgentState::new(pop.initial_wealth, capacity);
            for t in 1..=horizon {
                let a = t as f64 * t_inv;
                agent = ar_step(agent, sampler.draw_with_mean(a, &mut rng));
            }
            agent.wealth
        })
        .collect();
    Ok(EmpiricalDistribution::new(samples))
}
