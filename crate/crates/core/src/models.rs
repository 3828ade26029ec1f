//! Jump-diffusion parameterizations and seeded path simulation.
//!
//! All models share the exact log-normal stepping of the diffusion part;
//! jumps multiply the step-end value. Every random quantity comes from its
//! own `(seed, path, purpose)` substream (see [`crate::rng`]), which is what
//! makes the no-jump reductions and path-count extension exact.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{poisson_inversion, purpose, substream};

/// Trading-day convention used wherever daily data meets annualized rates.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    /// Drift rate per year.
    pub mu: f64,
    /// Volatility per sqrt-year.
    pub sigma: f64,
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.sigma.is_finite() {
            return Err(Error::invalid("GBM parameters must be finite"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MertonParams {
    pub gbm: GbmParams,
    /// Expected jump arrivals per year.
    pub lambda: f64,
    /// Mean of the normal jump exponent.
    pub mu_j: f64,
    /// Standard deviation of the jump exponent.
    pub sigma_j: f64,
}

impl MertonParams {
    pub fn new(gbm: GbmParams, lambda: f64, mu_j: f64, sigma_j: f64) -> Result<Self> {
        let p = Self {
            gbm,
            lambda,
            mu_j,
            sigma_j,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        if ![self.lambda, self.mu_j, self.sigma_j]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::invalid("Merton parameters must be finite"));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda must be >= 0"));
        }
        if self.sigma_j < 0.0 {
            return Err(Error::invalid("sigma_j must be >= 0"));
        }
        Ok(())
    }

    /// E[e^Y] - 1, the mean relative jump size.
    pub fn mean_jump_factor_excess(&self) -> f64 {
        (self.mu_j + 0.5 * self.sigma_j * self.sigma_j).exp() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KouParams {
    pub gbm: GbmParams,
    /// Jump arrivals per year (up and down combined).
    pub lambda: f64,
    /// Probability of an upward jump.
    pub p: f64,
    /// Upward exponential rate, > 1 so E[e^Y] is finite.
    pub eta1: f64,
    /// Downward exponential rate, > 0.
    pub eta2: f64,
}

impl KouParams {
    pub fn new(gbm: GbmParams, lambda: f64, p: f64, eta1: f64, eta2: f64) -> Result<Self> {
        let k = Self {
            gbm,
            lambda,
            p,
            eta1,
            eta2,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        if ![self.lambda, self.p, self.eta1, self.eta2]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::invalid("Kou parameters must be finite"));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p must be in [0, 1]"));
        }
        if self.eta1 <= 1.0 {
            return Err(Error::invalid("eta1 must be > 1"));
        }
        if self.eta2 <= 0.0 {
            return Err(Error::invalid("eta2 must be > 0"));
        }
        Ok(())
    }

    /// Downward jump probability, derived.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitJumpParams {
    pub gbm: GbmParams,
    /// Upward jump arrivals per year.
    pub lambda_up: f64,
    /// Upward exponential rate, > 1.
    pub eta_up: f64,
    /// Downward jump arrivals per year.
    pub lambda_down: f64,
    /// Downward exponential rate, > 0.
    pub eta_down: f64,
}

impl SplitJumpParams {
    pub fn new(
        gbm: GbmParams,
        lambda_up: f64,
        eta_up: f64,
        lambda_down: f64,
        eta_down: f64,
    ) -> Result<Self> {
        let p = Self {
            gbm,
            lambda_up,
            eta_up,
            lambda_down,
            eta_down,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        if ![self.lambda_up, self.eta_up, self.lambda_down, self.eta_down]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::invalid("split-jump parameters must be finite"));
        }
        if self.lambda_up < 0.0 || self.lambda_down < 0.0 {
            return Err(Error::invalid("jump arrival rates must be >= 0"));
        }
        if self.eta_up <= 1.0 {
            return Err(Error::invalid("eta_up must be > 1"));
        }
        if self.eta_down <= 0.0 {
            return Err(Error::invalid("eta_down must be > 0"));
        }
        Ok(())
    }

    /// lambda_up (E[e^{Y_up}] - 1) + lambda_down (E[e^{Y_down}] - 1).
    pub fn mean_jump_rate_excess(&self) -> f64 {
        self.lambda_up * (self.eta_up / (self.eta_up - 1.0) - 1.0)
            + self.lambda_down * (self.eta_down / (self.eta_down + 1.0) - 1.0)
    }
}

/// Any of the supported price dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Gbm(GbmParams),
    Merton(MertonParams),
    Kou(KouParams),
    Split(SplitJumpParams),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Gbm(p) => p.validate(),
            Model::Merton(p) => p.validate(),
            Model::Kou(p) => p.validate(),
            Model::Split(p) => p.validate(),
        }
    }

    pub fn gbm(&self) -> &GbmParams {
        match self {
            Model::Gbm(p) => p,
            Model::Merton(p) => &p.gbm,
            Model::Kou(p) => &p.gbm,
            Model::Split(p) => &p.gbm,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Model::Gbm(_) => "gbm",
            Model::Merton(_) => "merton",
            Model::Kou(_) => "kou",
            Model::Split(_) => "split",
        }
    }

    /// Replaces the drift so that E[S_T] = s0 e^{rT}.
    pub fn with_risk_neutral_drift(&self, r: f64) -> Model {
        let mut m = *self;
        let compensator = match &m {
            Model::Gbm(_) => 0.0,
            Model::Merton(p) => p.lambda * p.mean_jump_factor_excess(),
            Model::Kou(p) => {
                let up = p.p * p.eta1 / (p.eta1 - 1.0);
                let down = p.q() * p.eta2 / (p.eta2 + 1.0);
                p.lambda * (up + down - 1.0)
            }
            Model::Split(p) => p.mean_jump_rate_excess(),
        };
        let mu = r - compensator;
        match &mut m {
            Model::Gbm(p) => p.mu = mu,
            Model::Merton(p) => p.gbm.mu = mu,
            Model::Kou(p) => p.gbm.mu = mu,
            Model::Split(p) => p.gbm.mu = mu,
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub s0: f64,
    pub horizon_years: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimGrid {
    pub fn new(s0: f64, horizon_years: f64, n_steps: usize, n_paths: usize, seed: u64) -> Result<Self> {
        let g = Self {
            s0,
            horizon_years,
            n_steps,
            n_paths,
            seed,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid("s0 must be > 0"));
        }
        if !(self.horizon_years > 0.0 && self.horizon_years.is_finite()) {
            return Err(Error::invalid("horizon must be > 0"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be >= 1"));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths must be >= 1"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon_years / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|k| k as f64 * dt).collect()
    }
}

/// Ensemble of simulated trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub model_tag: String,
    pub seed: u64,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    pub fn terminal_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|p| *p.last().unwrap())
    }

    /// CSV export: `time,path_0,path_1,...`; times with 9 decimal digits,
    /// values with 12 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "time")?;
        for i in 0..self.n_paths() {
            write!(w, ",path_{i}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t:.9}")?;
            for path in &self.values {
                write!(w, ",{:.11e}", path[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Multiplicative gross factors for one path, one per step.
///
/// The diffusion normal is always consumed so that the draw layout is
/// identical across models; jump-count uniforms live in their own streams
/// and jump sizes in per-step streams instantiated only when a jump lands.
pub(crate) fn step_factors(model: &Model, grid: &SimGrid, path: u64) -> Vec<f64> {
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let g = model.gbm();
    let drift = (g.mu - 0.5 * g.sigma * g.sigma) * dt;

    let mut diffusion = substream(grid.seed, path, purpose::DIFFUSION);
    let mut up_counts = match model {
        Model::Gbm(_) => None,
        _ => Some(substream(grid.seed, path, purpose::JUMP_COUNT_UP)),
    };
    let mut down_counts = match model {
        Model::Split(_) => Some(substream(grid.seed, path, purpose::JUMP_COUNT_DOWN)),
        _ => None,
    };

    (0..grid.n_steps)
        .map(|step| {
            let z: f64 = StandardNormal.sample(&mut diffusion);
            let mut exponent = drift + g.sigma * sqrt_dt * z;
            match model {
                Model::Gbm(_) => {}
                Model::Merton(p) => {
                    let u: f64 = up_counts.as_mut().unwrap().gen();
                    let k = poisson_inversion(u, p.lambda * dt);
                    if k > 0 {
                        let mut sizes = substream(grid.seed, path, purpose::jump_size_up(step));
                        for _ in 0..k {
                            let z: f64 = StandardNormal.sample(&mut sizes);
                            exponent += p.mu_j + p.sigma_j * z;
                        }
                    }
                }
                Model::Kou(p) => {
                    let u: f64 = up_counts.as_mut().unwrap().gen();
                    let k = poisson_inversion(u, p.lambda * dt);
                    if k > 0 {
                        let mut sizes = substream(grid.seed, path, purpose::jump_size_up(step));
                        for _ in 0..k {
                            exponent += kou_exponent(p, &mut sizes);
                        }
                    }
                }
                Model::Split(p) => {
                    let u: f64 = up_counts.as_mut().unwrap().gen();
                    let k_up = poisson_inversion(u, p.lambda_up * dt);
                    if k_up > 0 {
                        let mut sizes = substream(grid.seed, path, purpose::jump_size_up(step));
                        for _ in 0..k_up {
                            let e: f64 = Exp1.sample(&mut sizes);
                            exponent += e / p.eta_up;
                        }
                    }
                    let u: f64 = down_counts.as_mut().unwrap().gen();
                    let k_down = poisson_inversion(u, p.lambda_down * dt);
                    if k_down > 0 {
                        let mut sizes = substream(grid.seed, path, purpose::jump_size_down(step));
                        for _ in 0..k_down {
                            let e: f64 = Exp1.sample(&mut sizes);
                            exponent -= e / p.eta_down;
                        }
                    }
                }
            }
            exponent.exp()
        })
        .collect()
}

fn kou_exponent<R: Rng>(p: &KouParams, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    let e: f64 = Exp1.sample(rng);
    if u < p.p {
        e / p.eta1
    } else {
        -e / p.eta2
    }
}

/// Runs one closure per path index, optionally on a dedicated thread pool.
/// Output is positionally indexed, so it is identical for any worker count.
pub(crate) fn map_paths<T, F>(n_paths: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        (0..n_paths as u64).map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| (0..n_paths as u64).into_par_iter().map(f).collect())
    }
}

/// Simulates any model with a worker-count hint; results are bit-identical
/// for every hint value.
pub fn simulate(model: &Model, grid: &SimGrid, workers: usize) -> Result<PathSet> {
    model.validate()?;
    grid.validate()?;
    let values = map_paths(grid.n_paths, workers, |path| {
        let mut s = grid.s0;
        let mut out = Vec::with_capacity(grid.n_steps + 1);
        out.push(s);
        for factor in step_factors(model, grid, path) {
            s *= factor;
            out.push(s);
        }
        out
    });
    Ok(PathSet {
        times: grid.times(),
        values,
        model_tag: model.tag().to_string(),
        seed: grid.seed,
    })
}

/// Terminal prices only, without materializing full paths.
pub(crate) fn terminal_prices(model: &Model, grid: &SimGrid, workers: usize) -> Result<Vec<f64>> {
    model.validate()?;
    grid.validate()?;
    Ok(map_paths(grid.n_paths, workers, |path| {
        step_factors(model, grid, path)
            .into_iter()
            .fold(grid.s0, |s, f| s * f)
    }))
}

pub fn simulate_gbm(params: &GbmParams, grid: &SimGrid) -> Result<PathSet> {
    simulate(&Model::Gbm(*params), grid, 1)
}

pub fn simulate_merton(params: &MertonParams, grid: &SimGrid) -> Result<PathSet> {
    simulate(&Model::Merton(*params), grid, 1)
}

pub fn simulate_kou(params: &KouParams, grid: &SimGrid) -> Result<PathSet> {
    simulate(&Model::Kou(*params), grid, 1)
}

pub fn simulate_split(params: &SplitJumpParams, grid: &SimGrid) -> Result<PathSet> {
    simulate(&Model::Split(*params), grid, 1)
}

/// Draws `n` jump exponents from the double-exponential law:
/// +Exp(eta1) with probability p, -Exp(eta2) otherwise.
pub fn sample_kou_jump(params: &KouParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let mut rng = substream(seed, 0, purpose::FLAT);
    Ok((0..n).map(|_| kou_exponent(params, &mut rng)).collect())
}
