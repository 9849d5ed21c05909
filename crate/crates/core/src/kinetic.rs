//! Pairwise wealth-conserving kinetic market models and their
//! effective-noise records.
//!
//! Randomly chosen pairs redistribute saved-and-traded wealth; every trade
//! conserves the pair total exactly up to floating rounding. Recording the
//! effective noise seen by one agent (`r T_ij` for CCM/CC, `eta x~` for the
//! two-noise and Yakovenko rules) exposes the mapping onto the
//! non-conserving AR update `x' = lambda x + xi`.

use crate::ar::DEFAULT_MU_MIN;
use crate::error::{Error, Result};
use crate::estimation::EmpiricalDistribution;
use crate::rng::{master_rng, replica_rng, SimRng};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Distribution of quenched savings propensities in the CCM model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SavingsLaw {
    /// Uniform on `[0, 1 - mu_min]`; the cap mirrors the AR capacity floor
    /// and keeps the slowest agent's relaxation time bounded.
    #[default]
    Uniform01,
}

impl SavingsLaw {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            SavingsLaw::Uniform01 => rng.random::<f64>() * (1.0 - DEFAULT_MU_MIN),
        }
    }
}

/// The pairwise exchange rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KineticModel {
    /// Heterogeneous quenched savings `{lambda_i}`.
    Ccm {
        #[serde(default)]
        savings_law: SavingsLaw,
    },
    /// A single shared savings propensity.
    Cc { lambda: f64 },
    /// `x_i' = lambda x_i + eta x_j` with independent uniform
    /// `lambda, eta`.
    GenericTwoNoise,
    /// The `eta = lambda` special case: `x' = lambda (x + x~)`.
    Yakovenko,
}

impl KineticModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            KineticModel::Cc { lambda } if !(0.0..1.0).contains(lambda) => Err(Error::Config(
                format!("CC savings propensity must be in [0, 1), got {lambda}"),
            )),
            _ => Ok(()),
        }
    }
}

/// The effective noise of one trade, as seen by the AR mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeRecord {
    pub noise_value: f64,
}

/// CCM exchange: both agents save their fraction, the traded pool
/// `T = (1-li) xi + (1-lj) xj` is split randomly.
#[inline]
pub fn ccm_trade(xi: f64, xj: f64, li: f64, lj: f64, r: f64) -> (f64, f64) {
    let pool = (1.0 - li) * xi + (1.0 - lj) * xj;
    (li * xi + r * pool, lj * xj + (1.0 - r) * pool)
}

/// CC exchange: CCM with a shared savings propensity.
#[inline]
pub fn cc_trade(xi: f64, xj: f64, lambda: f64, r: f64) -> (f64, f64) {
    ccm_trade(xi, xj, lambda, lambda, r)
}

/// Generic conserving two-noise exchange; the record holds the effective
/// noise `eta * xj` received by agent `i`.
#[inline]
pub fn generic_trade(xi: f64, xj: f64, lambda: f64, eta: f64) -> ((f64, f64), TradeRecord) {
    let out = (lambda * xi + eta * xj, (1.0 - lambda) * xi + (1.0 - eta) * xj);
    (out, TradeRecord { noise_value: eta * xj })
}

/// Yakovenko exchange: the pair total is split by one uniform draw.
#[inline]
pub fn yakovenko_trade(xi: f64, xj: f64, lambda: f64) -> (f64, f64) {
    let total = xi + xj;
    (lambda * total, (1.0 - lambda) * total)
}

/// Marks one agent whose wealth time series is recorded separately;
/// for CCM its savings propensity may be pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// Output of a kinetic simulation.
#[derive(Debug, Clone)]
pub struct KineticRun {
    /// Wealth of every agent, recorded at the end of every `stride`-th
    /// post-burn-in sweep.
    pub pooled: EmpiricalDistribution,
    /// Tagged agent's wealth at the end of every post-burn-in sweep.
    pub tagged: Option<EmpiricalDistribution>,
    /// Effective noise of every trade in the recorded sweeps.
    pub noise: EmpiricalDistribution,
    /// Quenched savings per agent (empty for the annealed-parameter rules).
    pub savings: Vec<f64>,
    /// Per-agent wealth averaged over every post-burn-in sweep.
    pub mean_wealths: Vec<f64>,
    /// Relative change of the total wealth over the whole run.
    pub total_wealth_drift: f64,
}

/// Run a kinetic model: one sweep is `n` trades between randomly chosen
/// unordered pairs (with replacement across trades). `cfg.steps` counts
/// sweeps.
pub fn simulate_kinetic(
    model: &KineticModel,
    n: usize,
    total_wealth: f64,
    cfg: &crate::ar::SimConfig,
    tagged: Option<Tagged>,
) -> Result<KineticRun> {
    model.validate()?;
    cfg.validate()?;
    if n < 2 {
        return Err(Error::Config(format!("kinetic model needs at least 2 agents, got {n}")));
    }
    if !(total_wealth > 0.0) {
        return Err(Error::Config(format!("total wealth must be positive, got {total_wealth}")));
    }
    if let Some(t) = &tagged {
        if t.index >= n {
            return Err(Error::Config(format!("tagged index {} out of 0..{n}", t.index)));
        }
        if t.lambda.is_some() && !matches!(model, KineticModel::Ccm { .. }) {
            return Err(Error::Config(
                "a pinned tagged savings propensity only applies to the CCM model".into(),
            ));
        }
        if let Some(l) = t.lambda {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::Config(format!("tagged lambda must be in [0, 1), got {l}")));
            }
        }
    }

    // Quenched savings come from the master stream; trade randomness from
    // the replica stream, so the same population can be re-run.
    let savings: Vec<f64> = match model {
        KineticModel::Ccm { savings_law } => {
            let mut rng = master_rng(cfg.seed);
            let mut s: Vec<f64> = (0..n).map(|_| savings_law.sample(&mut rng)).collect();
            if let Some(Tagged { index, lambda: Some(l) }) = tagged {
                s[index] = l;
            }
            s
        }
        KineticModel::Cc { lambda } => vec![*lambda; n],
        KineticModel::GenericTwoNoise | KineticModel::Yakovenko => Vec::new(),
    };

    let mut rng = replica_rng(cfg.seed, 0);
    let mut wealth = vec![total_wealth / n as f64; n];
    let initial_total: f64 = wealth.iter().sum();

    let sweeps = cfg.steps;
    let post = sweeps - cfg.burn_in;
    let recorded_sweeps = post.div_ceil(cfg.stride) as usize;
    let mut pooled = Vec::with_capacity(recorded_sweeps * n);
    let mut noise = Vec::with_capacity(recorded_sweeps * n);
    let mut tagged_series = tagged.map(|_| Vec::with_capacity(post as usize));
    let mut mean_acc = vec![0.0f64; n];

    for sweep in 0..sweeps {
        let record = sweep >= cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.stride);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let j = loop {
                let j = rng.random_range(0..n);
                if j != i {
                    break j;
                }
            };
            let (xi, xj) = (wealth[i], wealth[j]);
            let (a, b, xi_noise) = match model {
                KineticModel::Ccm { .. } | KineticModel::Cc { .. } => {
                    let (li, lj) = (savings[i], savings[j]);
                    let r = rng.random::<f64>();
                    let (a, b) = ccm_trade(xi, xj, li, lj, r);
                    (a, b, r * ((1.0 - li) * xi + (1.0 - lj) * xj))
                }
                KineticModel::GenericTwoNoise => {
                    let lambda = rng.random::<f64>();
                    let eta = rng.random::<f64>();
                    let ((a, b), rec) = generic_trade(xi, xj, lambda, eta);
                    (a, b, rec.noise_value)
                }
                KineticModel::Yakovenko => {
                    let lambda = rng.random::<f64>();
                    let (a, b) = yakovenko_trade(xi, xj, lambda);
                    (a, b, lambda * xj)
                }
            };
            wealth[i] = a;
            wealth[j] = b;
            if record {
                noise.push(xi_noise);
            }
        }
        if sweep >= cfg.burn_in {
            for (acc, &w) in mean_acc.iter_mut().zip(&wealth) {
                *acc += w;
            }
            if let (Some(series), Some(t)) = (&mut tagged_series, &tagged) {
                series.push(wealth[t.index]);
            }
            if record {
                pooled.extend_from_slice(&wealth);
            }
        }
    }

    let final_total: f64 = wealth.iter().sum();
    let mean_wealths = mean_acc.iter().map(|s| s / post as f64).collect();
    Ok(KineticRun {
        pooled: EmpiricalDistribution::new(pooled),
        tagged: tagged_series.map(EmpiricalDistribution::new),
        noise: EmpiricalDistribution::new(noise),
        savings,
        mean_wealths,
        total_wealth_drift: ((final_total - initial_total) / initial_total).abs(),
    })
}

/// Long-run `(lambda_i, w_i)` table of the CCM model with `<x> = 1`,
/// for tail-exponent analysis.
pub fn ccm_average_wealth_profile(
    n: usize,
    savings_law: SavingsLaw,
    cfg: &crate::ar::SimConfig,
) -> Result<Vec<(f64, f64)>> {
    let run =
        simulate_kinetic(&KineticModel::Ccm { savings_law }, n, n as f64, cfg, None)?;
    Ok(run.savings.into_iter().zip(run.mean_wealths).collect())
}
