//! Monte Carlo pricing of European calls and annuity guarantees, with
//! closed-form oracles for the no-jump and Merton cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    map_paths, step_factors, terminal_prices, GbmParams, MertonParams, Model, PathSet, SimGrid,
    SplitJumpParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CallSpec {
    pub s0: f64,
    pub strike: f64,
    pub maturity_years: f64,
    /// Continuously compounded discount rate; 0 gives the raw expected payoff.
    pub discount_rate: f64,
}

impl CallSpec {
    pub fn new(s0: f64, strike: f64, maturity_years: f64, discount_rate: f64) -> Result<Self> {
        let c = Self {
            s0,
            strike,
            maturity_years,
            discount_rate,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid("s0 must be > 0"));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::invalid("strike must be > 0"));
        }
        if !(self.maturity_years > 0.0 && self.maturity_years.is_finite()) {
            return Err(Error::invalid("maturity must be > 0"));
        }
        if !(self.discount_rate >= 0.0 && self.discount_rate.is_finite()) {
            return Err(Error::invalid("discount rate must be >= 0"));
        }
        Ok(())
    }
}

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

fn estimate_from_payoffs(payoffs: &[f64], seed: u64) -> McEstimate {
    let n = payoffs.len() as f64;
    let mean = payoffs.iter().sum::<f64>() / n;
    let std_error = if payoffs.len() > 1 {
        let var = payoffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_error,
        n_paths: payoffs.len(),
        seed,
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// E[(S - K)+] when ln S ~ N(mean, var).
fn lognormal_call_expectation(mean: f64, var: f64, strike: f64) -> f64 {
    if var <= 0.0 {
        return (mean.exp() - strike).max(0.0);
    }
    let sd = var.sqrt();
    let d2 = (mean - strike.ln()) / sd;
    let d1 = d2 + sd;
    (mean + 0.5 * var).exp() * std_normal_cdf(d1) - strike * std_normal_cdf(d2)
}

/// Black-Scholes European call under rate `discount_rate` and the given
/// volatility; the no-jump closed-form baseline.
pub fn bs_call(spec: &CallSpec, sigma: f64) -> Result<f64> {
    spec.validate()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be >= 0"));
    }
    let t = spec.maturity_years;
    let r = spec.discount_rate;
    if sigma == 0.0 {
        return Ok((spec.s0 - spec.strike * (-r * t).exp()).max(0.0));
    }
    let mean = spec.s0.ln() + (r - 0.5 * sigma * sigma) * t;
    Ok((-r * t).exp() * lognormal_call_expectation(mean, sigma * sigma * t, spec.strike))
}

/// Poisson-weighted Black-Scholes series for a European call under
/// risk-neutral Merton dynamics; the oracle the Monte Carlo engine is
/// validated against. Only the volatility of `params.gbm` is used; the
/// drift is pinned to `spec.discount_rate` minus the jump compensator.
pub fn merton_call(spec: &CallSpec, params: &MertonParams, n_terms: usize) -> Result<f64> {
    spec.validate()?;
    params.validate()?;
    if n_terms == 0 {
        return Err(Error::invalid("n_terms must be >= 1"));
    }
    let t = spec.maturity_years;
    let r = spec.discount_rate;
    let sigma = params.gbm.sigma;
    let compensator = params.lambda * params.mean_jump_factor_excess();
    let base_mean = spec.s0.ln() + (r - compensator - 0.5 * sigma * sigma) * t;
    let lt = params.lambda * t;

    let mut weight = (-lt).exp(); // Poisson(lt) pmf at n = 0
    let mut total = 0.0;
    for n in 0..n_terms {
        if n > 0 {
            weight *= lt / n as f64;
        }
        let mean = base_mean + n as f64 * params.mu_j;
        let var = sigma * sigma * t + n as f64 * params.sigma_j * params.sigma_j;
        total += weight * lognormal_call_expectation(mean, var, spec.strike);
    }
    Ok((-r * t).exp() * total)
}

/// Monte Carlo price of a European call under any model.
pub fn mc_call_price(
    spec: &CallSpec,
    model: &Model,
    grid: &SimGrid,
    workers: usize,
) -> Result<McEstimate> {
    spec.validate()?;
    if grid.s0 != spec.s0 {
        return Err(Error::invalid("grid.s0 must equal spec.s0"));
    }
    if (grid.horizon_years - spec.maturity_years).abs() > 1e-12 {
        return Err(Error::invalid("grid horizon must equal spec maturity"));
    }
    let discount = (-spec.discount_rate * spec.maturity_years).exp();
    let payoffs: Vec<f64> = terminal_prices(model, grid, workers)?
        .into_iter()
        .map(|s| discount * (s - spec.strike).max(0.0))
        .collect();
    Ok(estimate_from_payoffs(&payoffs, grid.seed))
}

/// Which jump law a payoff surface sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceModelKind {
    /// Merton jumps of deterministic size mu_j = intensity (sigma_j = 0).
    Merton,
    /// Upward-only split jumps with mean size 1/eta_up = intensity.
    SplitUp,
}

/// Expected-payoff grid over jump-arrival x jump-intensity axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSurface {
    pub lambda_axis: Vec<f64>,
    pub intensity_axis: Vec<f64>,
    /// Row i corresponds to lambda_axis[i], column j to intensity_axis[j].
    pub values: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    /// No-jump expected payoff (the lambda = 0 baseline).
    pub baseline: McEstimate,
    pub seed: u64,
}

impl PayoffSurface {
    /// CSV export: `lambda,intensity,expected_payoff,std_error`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,intensity,expected_payoff,std_error")?;
        for (i, lam) in self.lambda_axis.iter().enumerate() {
            for (j, inten) in self.intensity_axis.iter().enumerate() {
                writeln!(w, "{lam},{inten},{},{}", self.values[i][j], self.std_errors[i][j])?;
            }
        }
        Ok(())
    }
}

fn surface_model(kind: SurfaceModelKind, base: &GbmParams, lambda: f64, intensity: f64) -> Result<Model> {
    match kind {
        SurfaceModelKind::Merton => Ok(Model::Merton(MertonParams::new(
            *base, lambda, intensity, 0.0,
        )?)),
        SurfaceModelKind::SplitUp => {
            if intensity == 0.0 {
                // zero mean jump size contributes nothing; drop the stream
                Ok(Model::Split(SplitJumpParams::new(*base, 0.0, 2.0, 0.0, 1.0)?))
            } else {
                Ok(Model::Split(SplitJumpParams::new(
                    *base,
                    lambda,
                    1.0 / intensity,
                    0.0,
                    1.0,
                )?))
            }
        }
    }
}

/// Sweeps `mc_call_price` over the grid with common random numbers: every
/// cell reuses the same substream layout, so the surface is smooth in the
/// grid and each cell is independently re-computable to bit-identical
/// values.
pub fn payoff_surface(
    spec: &CallSpec,
    base: &GbmParams,
    lambda_axis: &[f64],
    intensity_axis: &[f64],
    grid: &SimGrid,
    kind: SurfaceModelKind,
    workers: usize,
) -> Result<PayoffSurface> {
    if lambda_axis.is_empty() || intensity_axis.is_empty() {
        return Err(Error::invalid("surface axes must be non-empty"));
    }
    for axis in [lambda_axis, intensity_axis] {
        if axis.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("axis values must be >= 0"));
        }
        if axis.windows(2).any(|w| w[0] >= w[1]) && axis.len() > 1 {
            return Err(Error::invalid("axis values must be strictly ascending"));
        }
    }

    let baseline = mc_call_price(spec, &Model::Gbm(*base), grid, workers)?;
    let mut values = Vec::with_capacity(lambda_axis.len());
    let mut std_errors = Vec::with_capacity(lambda_axis.len());
    for &lam in lambda_axis {
        let mut row_v = Vec::with_capacity(intensity_axis.len());
        let mut row_e = Vec::with_capacity(intensity_axis.len());
        for &inten in intensity_axis {
            let model = surface_model(kind, base, lam, inten)?;
            let est = mc_call_price(spec, &model, grid, workers)?;
            row_v.push(est.mean);
            row_e.push(est.std_error);
        }
        values.push(row_v);
        std_errors.push(row_e);
    }
    Ok(PayoffSurface {
        lambda_axis: lambda_axis.to_vec(),
        intensity_axis: intensity_axis.to_vec(),
        values,
        std_errors,
        baseline,
        seed: grid.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnuitySpec {
    /// Initial subaccount value.
    pub a0: f64,
    /// Continuous M&E fee rate.
    pub fee_c: f64,
    /// Continuous contribution rate.
    pub contribution_k: f64,
    /// Guarantee roll-up rate.
    pub guarantee_g: f64,
    pub maturity_years: f64,
}

impl AnnuitySpec {
    pub fn new(a0: f64, fee_c: f64, contribution_k: f64, guarantee_g: f64, maturity_years: f64) -> Result<Self> {
        let a = Self {
            a0,
            fee_c,
            contribution_k,
            guarantee_g,
            maturity_years,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(Error::invalid("a0 must be > 0"));
        }
        if !(self.fee_c >= 0.0 && self.fee_c.is_finite()) {
            return Err(Error::invalid("fee rate must be >= 0"));
        }
        if !(self.contribution_k >= 0.0 && self.contribution_k.is_finite()) {
            return Err(Error::invalid("contribution rate must be >= 0"));
        }
        if !(self.guarantee_g >= 0.0 && self.guarantee_g.is_finite()) {
            return Err(Error::invalid("guarantee rate must be >= 0"));
        }
        if !(self.maturity_years > 0.0 && self.maturity_years.is_finite()) {
            return Err(Error::invalid("maturity must be > 0"));
        }
        Ok(())
    }
}

/// Simulated annuity subaccount trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnuityPaths {
    pub paths: PathSet,
    /// Paths absorbed at zero (fees drove the account non-positive).
    pub absorbed: Vec<bool>,
}

/// Euler step A_{k+1} = A_k * (asset gross return) - c A_k dt + k dt, with
/// the asset return drawn from the chosen jump model. Accounts crossing
/// zero are absorbed there and flagged.
pub fn simulate_annuity(
    spec: &AnnuitySpec,
    model: &Model,
    grid: &SimGrid,
    workers: usize,
) -> Result<AnnuityPaths> {
    spec.validate()?;
    model.validate()?;
    grid.validate()?;
    let dt = grid.dt();
    let rows: Vec<(Vec<f64>, bool)> = map_paths(grid.n_paths, workers, |path| {
        let mut a = spec.a0;
        let mut absorbed = false;
        let mut out = Vec::with_capacity(grid.n_steps + 1);
        out.push(a);
        for factor in step_factors(model, grid, path) {
            if !absorbed {
                a = a * factor - spec.fee_c * a * dt + spec.contribution_k * dt;
                if a <= 0.0 {
                    a = 0.0;
                    absorbed = true;
                }
            }
            out.push(a);
        }
        (out, absorbed)
    });
    let (values, absorbed): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(AnnuityPaths {
        paths: PathSet {
            times: grid.times(),
            values,
            model_tag: format!("annuity-{}", model.tag()),
            seed: grid.seed,
        },
        absorbed,
    })
}

/// Roll-up guarantee G_t = a0 e^{gt} + (k/g)(e^{gt} - 1), with the k t
/// limit as g -> 0.
pub fn guarantee_value(spec: &AnnuitySpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(0.0..=spec.maturity_years).contains(&t) {
        return Err(Error::invalid("t must lie in [0, maturity]"));
    }
    let g = spec.guarantee_g;
    let growth = (g * t).exp();
    let accrual = if g * t < 1e-12 {
        spec.contribution_k * t
    } else {
        spec.contribution_k * (g * t).exp_m1() / g
    };
    Ok(spec.a0 * growth + accrual)
}

/// max(G_t - A_t, 0).
pub fn annuity_payoff(account: f64, guarantee: f64) -> f64 {
    (guarantee - account).max(0.0)
}

/// When the guarantee payoff is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuaranteeEvaluation {
    /// GMAB reading: payoff at maturity only.
    AtMaturity,
    /// GMDB-style reading: running maximum of the payoff over grid dates.
    MaxOverDates,
}

/// Monte Carlo mean of the guarantee payoff (undiscounted).
pub fn price_annuity_guarantee(
    spec: &AnnuitySpec,
    model: &Model,
    grid: &SimGrid,
    evaluation: GuaranteeEvaluation,
    workers: usize,
) -> Result<McEstimate> {
    let sim = simulate_annuity(spec, model, grid, workers)?;
    let guarantees: Vec<f64> = sim
        .paths
        .times
        .iter()
        .map(|&t| guarantee_value(spec, t.min(spec.maturity_years)))
        .collect::<Result<_>>()?;
    let payoffs: Vec<f64> = sim
        .paths
        .values
        .iter()
        .map(|path| match evaluation {
            GuaranteeEvaluation::AtMaturity => {
                annuity_payoff(*path.last().unwrap(), *guarantees.last().unwrap())
            }
            GuaranteeEvaluation::MaxOverDates => path
                .iter()
                .zip(&guarantees)
                .map(|(&a, &g)| annuity_payoff(a, g))
                .fold(0.0, f64::max),
        })
        .collect();
    Ok(estimate_from_payoffs(&payoffs, grid.seed))
}
