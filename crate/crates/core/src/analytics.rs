//! Exact and semi-analytic steady states of the AR market model.
//!
//! For exponential noise the stationary wealth is the weighted sum
//! `x = sum_{m>=0} lambda^m xi_m`, whose Laplace transform is the infinite
//! product `prod_{m>=0} (1 + lambda^m s)^-1`. Expanding in simple poles
//! gives a series of exponentials
//!
//! ```text
//! P(x)   = sum_{m=0}^inf C_m exp(-x / lambda^m)
//! C_m^-1 = lambda^m * prod_{n>=0, n!=m} (1 - lambda^(n-m))
//! ```
//!
//! Truncating at order `M` (terms `m = 0..=M`) drops scales below
//! `lambda^M`; the truncation can be read as the finite-time distribution
//! `P_M` of a trajectory started from zero wealth, up to the weight of the
//! dropped scales. The same `P_M` is computed independently here by the
//! convolution recursion
//! `P_m(x) = (1/lambda^m) int_0^x P_{m-1}(y) h((x-y)/lambda^m) dy`
//! on a uniform grid, which serves as the numerical oracle for the series.

use crate::ar::CapacityLaw;
use crate::error::{Error, Result};
use crate::noise::{NoiseFamily, NoiseSpec};
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Largest savings the series evaluator accepts. Beyond this the product
/// factors `1 - lambda^k` are tiny and the alternating coefficients cancel
/// catastrophically; callers should use [`convolution_recursion`] instead.
pub const SERIES_LAMBDA_MAX: f64 = 0.9;

/// Largest truncation order before the intermediate products overflow f64.
pub const SERIES_ORDER_MAX: usize = 24;

/// Infinite-product factors are dropped once they differ from 1 by less
/// than this.
const PRODUCT_EPS: f64 = 1e-15;

/// Normalization drift that marks a convolution grid as too coarse.
const RESOLUTION_LIMIT: f64 = 1e-2;

/// The exponential-noise steady state truncated at order `M`:
/// coefficients `C_0..C_M` with decay scales `lambda^0..lambda^M`.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesDistribution {
    lambda: f64,
    order: usize,
    coefficients: Vec<f64>,
    scales: Vec<f64>,
}

/// Coefficients of the exponential-noise series at savings `lambda`.
///
/// Each infinite product over `n > m` is truncated once `lambda^(n-m)`
/// drops below machine precision; the finitely many `n < m` factors are
/// negative, so coefficient signs alternate.
pub fn series_coefficients(lambda: f64, order: usize) -> Result<SeriesDistribution> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("series needs lambda in (0, 1), got {lambda}")));
    }
    if lambda > SERIES_LAMBDA_MAX {
        return Err(Error::Domain(format!(
            "series evaluation refuses lambda = {lambda} > {SERIES_LAMBDA_MAX}; \
             use convolution_recursion instead"
        )));
    }
    if !(1..=SERIES_ORDER_MAX).contains(&order) {
        return Err(Error::Domain(format!(
            "series order must be in 1..={SERIES_ORDER_MAX}, got {order}"
        )));
    }

    // prod_{j>=1} (1 - lambda^j), shared by every coefficient
    let mut tail = 1.0;
    let mut lj = lambda;
    while lj >= PRODUCT_EPS {
        tail *= 1.0 - lj;
        lj *= lambda;
    }

    let mut coefficients = Vec::with_capacity(order + 1);
    let mut scales = Vec::with_capacity(order + 1);
    let mut scale = 1.0; // lambda^m
    let mut below = 1.0; // prod_{j=1..m} (1 - lambda^-j)
    for m in 0..=order {
        if m > 0 {
            scale *= lambda;
            below *= 1.0 - lambda.powi(-(m as i32));
        }
        let inv = scale * below * tail;
        if inv == 0.0 || !inv.is_finite() {
            return Err(Error::Domain(format!(
                "series coefficient C_{m} not representable at lambda = {lambda}"
            )));
        }
        coefficients.push(1.0 / inv);
        scales.push(scale);
    }
    Ok(SeriesDistribution { lambda, order, coefficients, scales })
}

impl SeriesDistribution {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `C_0..C_M`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `lambda^0..lambda^M`.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// `sum C_m` — tends to 0 as the order grows (the boundary condition
    /// `P(0) = 0`).
    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// `sum C_m lambda^m` — the total mass; tends to 1 as the order grows.
    pub fn mass(&self) -> f64 {
        self.coefficients.iter().zip(&self.scales).map(|(c, s)| c * s).sum()
    }

    /// `sum C_m lambda^2m` — the raw first moment; tends to `1/(1-lambda)`
    /// for unit-mean noise.
    pub fn mean(&self) -> f64 {
        self.coefficients.iter().zip(&self.scales).map(|(c, s)| c * s * s).sum()
    }

    /// The truncated series value; may undershoot zero near `x = 0` at low
    /// order (a truncation artifact that is reported, not hidden).
    pub fn raw_pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("series pdf needs x >= 0, got {x}")));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| c * (-x / s).exp())
            .sum())
    }

    /// Density output: the raw series clamped at zero.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.raw_pdf(x)?.max(0.0))
    }

    /// CDF normalized by the truncated mass, suitable as a KS reference.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let raw: f64 = self
            .coefficients
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| c * s * (1.0 - (-x / s).exp()))
            .sum();
        (raw / self.mass()).clamp(0.0, 1.0)
    }
}

/// Uniform evaluation grid for tabulated densities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub points: usize,
    pub x_max: f64,
}

impl GridSpec {
    pub fn new(points: usize, x_max: f64) -> Self {
        Self { points, x_max }
    }

    /// Default resolution: 4096 points.
    pub fn with_x_max(x_max: f64) -> Self {
        Self { points: 4096, x_max }
    }
}

/// A density tabulated on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct TabulatedDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl TabulatedDensity {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 || x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x).min(n - 1);
        if i == 0 {
            return self.density[0];
        }
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        self.density[i - 1] * (1.0 - t) + self.density[i] * t
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) * 0.5)
        .sum()
}

/// Numerically integrate the convolution recursion for exponential noise,
/// producing the finite-time densities `P_0..P_m_max` (index = order).
///
/// Within each grid cell the previous density is linear and the
/// exponential kernel is integrated exactly, so the update stays accurate
/// even when the kernel width `lambda^m` shrinks far below the grid
/// spacing. The trapezoid normalization of every output is monitored; a
/// drift beyond 1% reports the grid as too coarse.
pub fn convolution_recursion(
    noise: &NoiseSpec,
    lambda: f64,
    m_max: usize,
    grid: &GridSpec,
) -> Result<Vec<TabulatedDensity>> {
    noise.validate()?;
    if noise.family != NoiseFamily::Exponential || !noise.is_static() {
        return Err(Error::Config(
            "convolution_recursion needs static exponential noise".into(),
        ));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("recursion needs lambda in (0, 1), got {lambda}")));
    }
    if grid.points < 16 {
        return Err(Error::Config(format!("grid needs at least 16 points, got {}", grid.points)));
    }
    let required = 20.0 * noise.mean / (1.0 - lambda);
    if grid.x_max < required {
        return Err(Error::Config(format!(
            "grid x_max = {} does not cover 20 <xi>/(1-lambda) = {required:.3}",
            grid.x_max
        )));
    }

    let n = grid.points;
    let h = grid.x_max / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| h * i as f64).collect();

    // P_0 = h(xi)
    let a = noise.mean;
    let p0: Vec<f64> = xs.iter().map(|&x| (-x / a).exp() / a).collect();
    let mut out = vec![TabulatedDensity { grid: xs.clone(), density: p0 }];

    let mut scale = 1.0;
    for m in 1..=m_max {
        scale *= lambda;
        let s = scale * a; // kernel width of lambda^m xi
        let alpha = h / s;
        let decay = (-alpha).exp();
        let flat = 1.0 - decay;
        let slope = (1.0 - decay * (1.0 + alpha)) / alpha;

        let prev = &out[m - 1].density;
        let mut cur = vec![0.0; n];
        for i in 1..n {
            cur[i] = decay * cur[i - 1] + prev[i] * flat + (prev[i - 1] - prev[i]) * slope;
        }
        let density = TabulatedDensity { grid: xs.clone(), density: cur };
        let drift = (density.integral() - 1.0).abs();
        if drift > RESOLUTION_LIMIT {
            return Err(Error::Resolution { order: m, drift, limit: RESOLUTION_LIMIT });
        }
        out.push(density);
    }
    Ok(out)
}

/// Stationary Gaussian parameters for Gaussian noise `G(alpha0, sigma0)`:
/// `alpha = alpha0/(1-lambda)`, `sigma = sigma0/sqrt(1-lambda^2)`.
pub fn gaussian_fixed_point(alpha0: f64, sigma0: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("fixed point needs lambda in [0, 1), got {lambda}")));
    }
    if !(sigma0 > 0.0) {
        return Err(Error::Domain(format!("fixed point needs sigma0 > 0, got {sigma0}")));
    }
    Ok((alpha0 / (1.0 - lambda), sigma0 / (1.0 - lambda * lambda).sqrt()))
}

/// Gamma-family density `x^(n-1) exp(-x) / Gamma(n)` with the continuous
/// gamma-function normalization so non-integer shapes are well-defined.
pub fn gamma_pdf(n: f64, x: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("gamma pdf needs n > 0, got {n}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("gamma pdf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if n > 1.0 {
            0.0
        } else if n == 1.0 {
            1.0
        } else {
            f64::INFINITY
        });
    }
    Ok(((n - 1.0) * x.ln() - x - ln_gamma(n)).exp())
}

/// Regularized lower incomplete gamma: CDF of the unit-scale Gamma family.
pub fn gamma_cdf(n: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(n, x)
    }
}

/// CDF of an exponential with the given mean; zero for `x < 0`.
pub fn exponential_cdf(mean: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x / mean).exp_m1()
    }
}

/// The shape `n = (1 + 2 lambda)/(1 - lambda)` of the Gamma-like curve that
/// approximately fits the CC model; a labeled reference, not an exact law.
pub fn cc_gamma_shape(lambda: f64) -> f64 {
    (1.0 + 2.0 * lambda) / (1.0 - lambda)
}

/// Density of average wealth `w = <xi>/mu` under a capacity law with floor
/// `mu_min`: `P(w) = <xi> g(<xi>/w) / w^2` on `[<xi>, <xi>/mu_min]`,
/// zero outside the support.
pub fn pareto_density(law: &CapacityLaw, mu_min: f64, xi_mean: f64, w: f64) -> Result<f64> {
    pareto_support(law, mu_min, xi_mean)?;
    let upper = if mu_min > 0.0 { xi_mean / mu_min } else { f64::INFINITY };
    if w < xi_mean || w > upper {
        return Ok(0.0);
    }
    let mu = xi_mean / w;
    Ok(xi_mean * capacity_pdf(law, mu_min, mu) / (w * w))
}

/// CDF of average wealth under the same law: `P(W <= w) = 1 - F_mu(<xi>/w)`.
pub fn pareto_cdf(law: &CapacityLaw, mu_min: f64, xi_mean: f64, w: f64) -> Result<f64> {
    pareto_support(law, mu_min, xi_mean)?;
    if w <= xi_mean {
        return Ok(0.0);
    }
    let mu = (xi_mean / w).max(mu_min);
    Ok(1.0 - capacity_cdf(law, mu_min, mu))
}

fn pareto_support(law: &CapacityLaw, mu_min: f64, xi_mean: f64) -> Result<()> {
    if !(xi_mean > 0.0) {
        return Err(Error::Domain(format!("pareto density needs <xi> > 0, got {xi_mean}")));
    }
    if !(0.0..1.0).contains(&mu_min) {
        return Err(Error::Domain(format!("capacity floor must be in [0, 1), got {mu_min}")));
    }
    match law {
        CapacityLaw::Uniform01 => Ok(()),
        CapacityLaw::PowerAlpha { alpha } if (0.0..1.0).contains(alpha) => Ok(()),
        CapacityLaw::PowerAlpha { alpha } => {
            Err(Error::Domain(format!("power-law exponent must be in [0, 1), got {alpha}")))
        }
        CapacityLaw::Constant { .. } => Err(Error::Domain(
            "average wealth under a constant capacity is degenerate; no density".into(),
        )),
    }
}

fn capacity_pdf(law: &CapacityLaw, mu_min: f64, mu: f64) -> f64 {
    match law {
        CapacityLaw::Uniform01 => 1.0 / (1.0 - mu_min),
        CapacityLaw::PowerAlpha { alpha } => {
            (1.0 + alpha) * mu.powf(*alpha) / (1.0 - mu_min.powf(1.0 + alpha))
        }
        CapacityLaw::Constant { .. } => unreachable!("rejected by pareto_support"),
    }
}

fn capacity_cdf(law: &CapacityLaw, mu_min: f64, mu: f64) -> f64 {
    let mu = mu.clamp(mu_min, 1.0);
    match law {
        CapacityLaw::Uniform01 => (mu - mu_min) / (1.0 - mu_min),
        CapacityLaw::PowerAlpha { alpha } => {
            let lo = mu_min.powf(1.0 + alpha);
            (mu.powf(1.0 + alpha) - lo) / (1.0 - lo)
        }
        CapacityLaw::Constant { .. } => unreachable!("rejected by pareto_support"),
    }
}
