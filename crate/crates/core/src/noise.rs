//! The stochastic market return `xi`: distribution family, parameters and
//! an optional time-dependent mean schedule.

use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Distribution family of the market return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Exponential,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    /// Mean grows linearly: `a(t) = t / horizon`, reaching 1 at `t = horizon`.
    LinearRamp,
}

/// Time dependence of the mean market return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanSchedule {
    pub kind: ScheduleKind,
    /// Horizon `T` in time steps; for a linear ramp, `a(t) = t/T` on `1..=T`.
    pub horizon: u64,
}

/// The market-return distribution `h(xi)`: family, parameters and an
/// optional mean schedule.
///
/// `std` is only meaningful for the Gaussian family; for the exponential
/// family the standard deviation equals the mean by definition. When a
/// schedule is present it overrides `mean` at each time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<MeanSchedule>,
}

impl NoiseSpec {
    pub fn exponential(mean: f64) -> Self {
        Self { family: NoiseFamily::Exponential, mean, std: None, schedule: None }
    }

    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self { family: NoiseFamily::Gaussian, mean, std: Some(std), schedule: None }
    }

    pub fn with_schedule(mut self, schedule: MeanSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0) {
            return Err(Error::Config(format!("noise mean must be positive, got {}", self.mean)));
        }
        if self.family == NoiseFamily::Gaussian && !(self.sigma() > 0.0) {
            return Err(Error::Config("gaussian noise needs a positive std".into()));
        }
        if let Some(s) = &self.schedule {
            if s.horizon == 0 {
                return Err(Error::Config("schedule horizon must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Standard deviation of the static distribution: `std` for Gaussian,
    /// the mean itself for exponential.
    pub fn sigma(&self) -> f64 {
        match self.family {
            NoiseFamily::Exponential => self.mean,
            NoiseFamily::Gaussian => self.std.unwrap_or(self.mean),
        }
    }

    /// True when the mean does not change over time.
    pub fn is_static(&self) -> bool {
        !matches!(self.schedule, Some(MeanSchedule { kind: ScheduleKind::LinearRamp, .. }))
    }

    /// Mean return `a(t)` at time step `t` (steps count from 1).
    pub fn mean_at(&self, t: u64) -> Result<f64> {
        match self.schedule {
            Some(MeanSchedule { kind: ScheduleKind::LinearRamp, horizon }) => {
                if t < 1 || t > horizon {
                    Err(Error::ScheduleDomain { t, horizon })
                } else {
                    Ok(t as f64 / horizon as f64)
                }
            }
            _ => Ok(self.mean),
        }
    }
}

/// Draw one market return from `h(xi, t)`.
///
/// Exponential draws are non-negative exactly; Gaussian draws may be
/// negative (interpreted downstream as debt).
pub fn sample_noise(spec: &NoiseSpec, t: u64, rng: &mut SimRng) -> Result<f64> {
    let a = spec.mean_at(t)?;
    Ok(match spec.family {
        NoiseFamily::Exponential => a * rng.sample::<f64, _>(Exp1),
        NoiseFamily::Gaussian => a + spec.sigma() * rng.sample::<f64, _>(StandardNormal),
    })
}
