//! Gibbs sampler for jump-diffusion parameters from daily returns.
//!
//! Data augmentation: each day carries a latent jump indicator J_k (at most
//! one jump per day) and, on jump days, a latent jump size xi_k. All full
//! conditionals are then conjugate, so every update is accepted:
//!
//!   r_k | J_k, xi_k  ~  N(a dt + J_k xi_k, sigma^2 dt),   a = mu - sigma^2/2
//!   J_k              ~  Bernoulli(lambda dt)
//!   xi_k             ~  N(mu_j, sigma_j^2)
//!
//! The log drift a gets a normal prior, sigma^2 and sigma_j^2 inverse-gamma
//! priors, mu_j a normal prior, and lambda a gamma prior updated as a
//! Gamma-Poisson pair on the jump count. Draws are reported as mu = a +
//! sigma^2/2 to match the arithmetic drift of the SDE.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data_io::PriceSeries;
use crate::error::{Error, Result};
use crate::inference::log_returns;
use crate::models::TRADING_DAYS_PER_YEAR;
use crate::rng::{purpose, substream};

const SIGMA2_FLOOR: f64 = 1e-16; // sigma >= 1e-8

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Normal prior on the log drift a = mu - sigma^2/2.
    pub drift_mean: f64,
    pub drift_var: f64,
    /// Inverse-gamma prior on sigma^2.
    pub var_shape: f64,
    pub var_scale: f64,
    /// Gamma prior on lambda (shape, rate).
    pub lambda_shape: f64,
    pub lambda_rate: f64,
    /// Normal prior on mu_j.
    pub jump_mean_mean: f64,
    pub jump_mean_var: f64,
    /// Inverse-gamma prior on sigma_j^2.
    pub jump_var_shape: f64,
    pub jump_var_scale: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        // weakly informative on annualized daily-equity scales
        Self {
            drift_mean: 0.0,
            drift_var: 1.0,
            var_shape: 2.5,
            var_scale: 0.1,
            lambda_shape: 2.0,
            lambda_rate: 0.2,
            jump_mean_mean: 0.0,
            jump_mean_var: 0.25,
            jump_var_shape: 2.5,
            jump_var_scale: 0.01,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            self.drift_var,
            self.var_shape,
            self.var_scale,
            self.lambda_shape,
            self.lambda_rate,
            self.jump_mean_var,
            self.jump_var_shape,
            self.jump_var_scale,
        ];
        if positives.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid("prior shape/scale/variance parameters must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub priors: PriorSpec,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thinning: 5,
            seed: 0,
            priors: PriorSpec::default(),
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid("burn_in must be < iterations"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be >= 1"));
        }
        self.priors.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDraw {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub mu_j: f64,
    pub sigma_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub draws: Vec<ParamDraw>,
    /// Block updates performed; conjugate sampling accepts all of them.
    pub accept_count: u64,
    pub config: GibbsConfig,
    /// Set when the sigma^2 conditional collapsed onto its floor
    /// (degenerate, e.g. constant-price, input).
    pub sigma_floor_hit: bool,
}

impl PosteriorChain {
    /// CSV export: `iter,mu,sigma,lambda,mu_j,sigma_j`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,mu,sigma,lambda,mu_j,sigma_j")?;
        for (i, d) in self.draws.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{},{}",
                d.mu, d.sigma, d.lambda, d.mu_j, d.sigma_j
            )?;
        }
        Ok(())
    }
}

struct State {
    a: f64,
    sigma2: f64,
    lambda: f64,
    mu_j: f64,
    sigma_j2: f64,
}

/// Calibrates Merton-model parameters from a daily price series.
pub fn gibbs_fit(series: &PriceSeries, config: &GibbsConfig) -> Result<PosteriorChain> {
    config.validate()?;
    if series.len() < 30 {
        return Err(Error::invalid("series too short for calibration (need >= 30 observations)"));
    }
    let returns = log_returns(series)?;
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::numeric("non-finite log return in input"));
    }

    let dt = 1.0 / TRADING_DAYS_PER_YEAR;
    let n = returns.len();
    let pr = &config.priors;
    let mut rng = substream(config.seed, 0, purpose::FLAT);

    // moment-based start: sigma from raw return spread, jumps vague
    let (r_mean, r_sd) = {
        let m = returns.iter().sum::<f64>() / n as f64;
        let v = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        (m, v.sqrt())
    };
    let mut st = State {
        a: r_mean / dt,
        sigma2: (r_sd * r_sd / dt).max(SIGMA2_FLOOR),
        lambda: 1.0,
        mu_j: 0.0,
        sigma_j2: 0.01,
    };
    // zero-variance input: the sigma^2 conditional is held up only by its
    // prior scale; flag the run as degenerate up front
    let mut sigma_floor_hit = r_sd * r_sd < SIGMA2_FLOOR;

    let mut jump = vec![false; n];
    let mut xi = vec![0.0f64; n];
    let mut draws = Vec::new();
    let mut accept_count = 0u64;

    for it in 0..config.iterations {
        let diff_var = st.sigma2 * dt;
        let jump_var = diff_var + st.sigma_j2;
        let p_jump_day = (st.lambda * dt).min(1.0 - 1e-12);

        // latent (J_k, xi_k), xi integrated out of the indicator update
        let mut n_jumps = 0usize;
        for k in 0..n {
            let resid = returns[k] - st.a * dt;
            let l1 = p_jump_day * normal_pdf(resid - st.mu_j, jump_var);
            let l0 = (1.0 - p_jump_day) * normal_pdf(resid, diff_var);
            let p1 = l1 / (l0 + l1);
            if !p1.is_finite() {
                return Err(Error::numeric("jump-indicator probability is not finite"));
            }
            if rng.gen::<f64>() < p1 {
                jump[k] = true;
                n_jumps += 1;
                let prec = 1.0 / st.sigma_j2 + 1.0 / diff_var;
                let mean = (st.mu_j / st.sigma_j2 + resid / diff_var) / prec;
                let z: f64 = StandardNormal.sample(&mut rng);
                xi[k] = mean + z / prec.sqrt();
            } else {
                jump[k] = false;
                xi[k] = 0.0;
            }
        }

        // log drift a | rest
        let y_sum: f64 = (0..n).map(|k| returns[k] - xi[k]).sum();
        let prec_a = 1.0 / pr.drift_var + n as f64 * dt / st.sigma2;
        let mean_a = (pr.drift_mean / pr.drift_var + y_sum / st.sigma2) / prec_a;
        let z: f64 = StandardNormal.sample(&mut rng);
        st.a = mean_a + z / prec_a.sqrt();

        // sigma^2 | rest
        let sse: f64 = (0..n)
            .map(|k| {
                let e = returns[k] - st.a * dt - xi[k];
                e * e
            })
            .sum();
        st.sigma2 = inv_gamma(
            &mut rng,
            pr.var_shape + n as f64 / 2.0,
            pr.var_scale + sse / (2.0 * dt),
        );
        if st.sigma2 < SIGMA2_FLOOR {
            st.sigma2 = SIGMA2_FLOOR;
            sigma_floor_hit = true;
        }

        // lambda | jump count (Gamma-Poisson)
        st.lambda = gamma_rate(
            &mut rng,
            pr.lambda_shape + n_jumps as f64,
            pr.lambda_rate + n as f64 * dt,
        );

        // mu_j, sigma_j^2 | jump-day sizes (prior draw when no jumps)
        if n_jumps > 0 {
            let xj: Vec<f64> = (0..n).filter(|&k| jump[k]).map(|k| xi[k]).collect();
            let m = xj.len() as f64;
            let sum: f64 = xj.iter().sum();
            let prec_j = 1.0 / pr.jump_mean_var + m / st.sigma_j2;
            let mean_j = (pr.jump_mean_mean / pr.jump_mean_var + sum / st.sigma_j2) / prec_j;
            let z: f64 = StandardNormal.sample(&mut rng);
            st.mu_j = mean_j + z / prec_j.sqrt();
            let ss: f64 = xj.iter().map(|x| (x - st.mu_j).powi(2)).sum();
            st.sigma_j2 = inv_gamma(
                &mut rng,
                pr.jump_var_shape + m / 2.0,
                pr.jump_var_scale + ss / 2.0,
            );
        } else {
            let z: f64 = StandardNormal.sample(&mut rng);
            st.mu_j = pr.jump_mean_mean + pr.jump_mean_var.sqrt() * z;
            st.sigma_j2 = inv_gamma(&mut rng, pr.jump_var_shape, pr.jump_var_scale);
        }
        st.sigma_j2 = st.sigma_j2.max(SIGMA2_FLOOR);

        accept_count += 6; // six conjugate blocks, all accepted

        if it >= config.burn_in && (it - config.burn_in) % config.thinning == 0 {
            draws.push(ParamDraw {
                mu: st.a + 0.5 * st.sigma2,
                sigma: st.sigma2.sqrt(),
                lambda: st.lambda,
                mu_j: st.mu_j,
                sigma_j: st.sigma_j2.sqrt(),
            });
        }
    }

    Ok(PosteriorChain {
        draws,
        accept_count,
        config: *config,
        sigma_floor_hit,
    })
}

fn normal_pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn gamma_rate<R: Rng>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).unwrap().sample(rng)
}

fn inv_gamma<R: Rng>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    1.0 / gamma_rate(rng, shape, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mu: ParamSummary,
    pub sigma: ParamSummary,
    pub lambda: ParamSummary,
    pub mu_j: ParamSummary,
    pub sigma_j: ParamSummary,
}

fn summarize(xs: &mut Vec<f64>) -> ParamSummary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let pos = q * (xs.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        xs[lo] * (1.0 - w) + xs[hi] * w
    };
    ParamSummary {
        mean,
        sd,
        q05: quantile(0.05),
        q95: quantile(0.95),
    }
}

/// Per-parameter mean, standard deviation, and 5%/95% quantiles.
pub fn posterior_summary(chain: &PosteriorChain) -> Result<PosteriorSummary> {
    if chain.draws.is_empty() {
        return Err(Error::invalid("empty posterior chain"));
    }
    let col = |f: fn(&ParamDraw) -> f64| -> ParamSummary {
        let mut xs: Vec<f64> = chain.draws.iter().map(f).collect();
        summarize(&mut xs)
    };
    Ok(PosteriorSummary {
        mu: col(|d| d.mu),
        sigma: col(|d| d.sigma),
        lambda: col(|d| d.lambda),
        mu_j: col(|d| d.mu_j),
        sigma_j: col(|d| d.sigma_j),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::PriceSeries;
    use chrono::NaiveDate;

    fn series_from_closes(closes: Vec<f64>) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2005, 1, 1).unwrap();
        let dates = (0..closes.len())
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect();
        PriceSeries::new(dates, closes, "fixture").unwrap()
    }

    /// Ten years of daily closes from the Merton preset used throughout.
    pub(crate) fn merton_fixture(seed: u64) -> PriceSeries {
        use crate::models::{simulate_merton, GbmParams, MertonParams, SimGrid};
        let params = MertonParams::new(GbmParams::new(0.1, 0.5).unwrap(), 10.0, 0.05, 0.025).unwrap();
        let grid = SimGrid::new(100.0, 10.0, 2520, 1, seed).unwrap();
        series_from_closes(simulate_merton(&params, &grid).unwrap().values.remove(0))
    }

    fn quick_config(seed: u64) -> GibbsConfig {
        GibbsConfig {
            iterations: 3000,
            burn_in: 1000,
            thinning: 2,
            seed,
            ..GibbsConfig::default()
        }
    }

    #[test]
    fn rejects_zero_length_chain_request() {
        let s = merton_fixture(1);
        let cfg = GibbsConfig {
            iterations: 100,
            burn_in: 100,
            ..GibbsConfig::default()
        };
        assert!(gibbs_fit(&s, &cfg).is_err());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = merton_fixture(2);
        let cfg = quick_config(9);
        let a = gibbs_fit(&s, &cfg).unwrap();
        let b = gibbs_fit(&s, &cfg).unwrap();
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn draws_respect_domain_constraints() {
        let s = merton_fixture(3);
        let chain = gibbs_fit(&s, &quick_config(4)).unwrap();
        assert!(!chain.draws.is_empty());
        for d in &chain.draws {
            assert!(d.sigma > 0.0 && d.sigma_j > 0.0 && d.lambda >= 0.0);
        }
    }

    #[test]
    fn no_jump_data_concentrates_lambda_near_zero() {
        use crate::models::{simulate_gbm, GbmParams, SimGrid};
        let p = GbmParams::new(0.05, 0.2).unwrap();
        let grid = SimGrid::new(100.0, 10.0, 2520, 1, 21).unwrap();
        let closes = simulate_gbm(&p, &grid).unwrap().values.remove(0);
        let mut cfg = quick_config(5);
        // tight prior near zero arrivals
        cfg.priors.lambda_shape = 1.0;
        cfg.priors.lambda_rate = 10.0;
        let chain = gibbs_fit(&series_from_closes(closes), &cfg).unwrap();
        let summary = posterior_summary(&chain).unwrap();
        assert!(summary.lambda.q95 < 1.0, "lambda q95 {}", summary.lambda.q95);
    }

    #[test]
    fn scale_invariant_posterior_for_fixed_seed() {
        let s = merton_fixture(6);
        // power-of-two scale keeps the close ratios bit-identical
        let scaled = series_from_closes(s.closes.iter().map(|c| c * 1024.0).collect());
        let cfg = quick_config(7);
        let a = gibbs_fit(&s, &cfg).unwrap();
        let b = gibbs_fit(&scaled, &cfg).unwrap();
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn degenerate_series_hits_sigma_floor() {
        let chain = gibbs_fit(&series_from_closes(vec![100.0; 60]), &quick_config(8)).unwrap();
        assert!(chain.sigma_floor_hit);
    }

    #[test]
    fn summary_of_identical_draws() {
        let d = ParamDraw {
            mu: 0.1,
            sigma: 0.5,
            lambda: 10.0,
            mu_j: 0.05,
            sigma_j: 0.025,
        };
        let chain = PosteriorChain {
            draws: vec![d; 10],
            accept_count: 60,
            config: GibbsConfig::default(),
            sigma_floor_hit: false,
        };
        let s = posterior_summary(&chain).unwrap();
        assert_eq!(s.sigma.sd, 0.0);
        assert_eq!(s.sigma.q05, s.sigma.mean);
        assert_eq!(s.sigma.q95, s.sigma.mean);
    }

    #[test]
    fn summary_mean_of_two_draws() {
        let mk = |v: f64| ParamDraw {
            mu: v,
            sigma: v,
            lambda: v,
            mu_j: v,
            sigma_j: v,
        };
        let chain = PosteriorChain {
            draws: vec![mk(1.0), mk(3.0)],
            accept_count: 12,
            config: GibbsConfig::default(),
            sigma_floor_hit: false,
        };
        assert_eq!(posterior_summary(&chain).unwrap().mu.mean, 2.0);
    }

    #[test]
    fn chain_csv_header() {
        let chain = gibbs_fit(&merton_fixture(10), &quick_config(11)).unwrap();
        let mut buf = Vec::new();
        chain.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("iter,mu,sigma,lambda,mu_j,sigma_j\n"));
    }
}
