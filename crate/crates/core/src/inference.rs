//! Parameter estimation from daily price series: log-return statistics and
//! the median-multiple jump detector.

use serde::{Deserialize, Serialize};

use crate::data_io::PriceSeries;
use crate::error::{Error, Result};
use crate::models::{GbmParams, SplitJumpParams, TRADING_DAYS_PER_YEAR};

pub use crate::gibbs::{
    gibbs_fit, posterior_summary, GibbsConfig, ParamDraw, ParamSummary, PosteriorChain,
    PosteriorSummary, PriorSpec,
};

/// Daily log returns r_k = ln(close_{k+1} / close_k).
pub fn log_returns(series: &PriceSeries) -> Result<Vec<f64>> {
    series.validate()?;
    Ok(series
        .closes
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect())
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn annualize(returns: &[f64]) -> (f64, f64) {
    let (mean, sd) = mean_sd(returns);
    let vol = sd * TRADING_DAYS_PER_YEAR.sqrt();
    // mean log return recovers mu - sigma^2/2; add the correction back
    let drift = mean * TRADING_DAYS_PER_YEAR + 0.5 * vol * vol;
    (drift, vol)
}

/// Annualized (drift, volatility) from daily log returns.
///
/// vol = stddev(r) sqrt(252), drift = mean(r) * 252 + vol^2 / 2, i.e. the
/// arithmetic drift of the underlying SDE rather than the log drift.
pub fn estimate_drift_vol(series: &PriceSeries) -> Result<(f64, f64)> {
    if series.len() < 3 {
        return Err(Error::invalid("need at least 3 observations"));
    }
    let returns = log_returns(series)?;
    Ok(annualize(&returns))
}

/// Output of the median-multiple spike detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDetection {
    pub up_count: usize,
    pub down_count: usize,
    /// Annualized arrival rates, count * 252 / number of return observations.
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Mean relative magnitude |spike| / price-before-spike.
    pub up_intensity: f64,
    pub down_intensity: f64,
    /// Annualized drift and volatility of the non-spike remainder.
    pub drift: f64,
    pub vol: f64,
    pub threshold_multiple: f64,
    /// Set when a side has no differences of its sign, so its median (and
    /// therefore its spike count) is undefined and reported as zero.
    pub up_median_undefined: bool,
    pub down_median_undefined: bool,
}

impl JumpDetection {
    /// Packages the detector output as split-jump model parameters.
    /// Fails when an intensity is zero (the exponential rate would be
    /// infinite); callers should fall back to a zero arrival rate instead.
    pub fn to_split_params(&self) -> Result<SplitJumpParams> {
        let eta_up = if self.up_count > 0 {
            1.0 / self.up_intensity
        } else {
            2.0 // unused: lambda_up = 0
        };
        let eta_down = if self.down_count > 0 {
            1.0 / self.down_intensity
        } else {
            1.0 // unused: lambda_down = 0
        };
        SplitJumpParams::new(
            GbmParams::new(self.drift, self.vol)?,
            self.lambda_up,
            eta_up,
            self.lambda_down,
            eta_down,
        )
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Flags consecutive-day price differences beyond `threshold_multiple` times
/// the median of their own sign as jump spikes, then estimates drift and
/// volatility from the non-spike remainder.
pub fn detect_jumps(series: &PriceSeries, threshold_multiple: f64) -> Result<JumpDetection> {
    if series.len() < 3 {
        return Err(Error::invalid("need at least 3 observations"));
    }
    if !(threshold_multiple > 0.0 && threshold_multiple.is_finite()) {
        return Err(Error::invalid("threshold multiple must be > 0"));
    }

    let diffs: Vec<f64> = series.closes.windows(2).map(|w| w[1] - w[0]).collect();
    let mut pos: Vec<f64> = diffs.iter().copied().filter(|d| *d > 0.0).collect();
    let mut neg: Vec<f64> = diffs.iter().copied().filter(|d| *d < 0.0).collect();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    neg.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let up_median = (!pos.is_empty()).then(|| median(&pos));
    let down_median = (!neg.is_empty()).then(|| median(&neg));

    let mut up_spikes: Vec<usize> = Vec::new();
    let mut down_spikes: Vec<usize> = Vec::new();
    for (k, d) in diffs.iter().enumerate() {
        if let Some(m) = up_median {
            if *d > threshold_multiple * m {
                up_spikes.push(k);
            }
        }
        if let Some(m) = down_median {
            if *d < threshold_multiple * m {
                down_spikes.push(k);
            }
        }
    }

    let rel = |idxs: &[usize]| -> f64 {
        if idxs.is_empty() {
            return 0.0;
        }
        idxs.iter()
            .map(|&k| diffs[k].abs() / series.closes[k])
            .sum::<f64>()
            / idxs.len() as f64
    };

    let n_returns = diffs.len() as f64;
    let annualize_count = TRADING_DAYS_PER_YEAR / n_returns;

    let spike: Vec<bool> = {
        let mut v = vec![false; diffs.len()];
        for &k in up_spikes.iter().chain(&down_spikes) {
            v[k] = true;
        }
        v
    };
    let remainder: Vec<f64> = series
        .closes
        .windows(2)
        .enumerate()
        .filter(|(k, _)| !spike[*k])
        .map(|(_, w)| (w[1] / w[0]).ln())
        .collect();
    let (drift, vol) = if remainder.is_empty() {
        (0.0, 0.0)
    } else {
        annualize(&remainder)
    };

    Ok(JumpDetection {
        up_count: up_spikes.len(),
        down_count: down_spikes.len(),
        lambda_up: up_spikes.len() as f64 * annualize_count,
        lambda_down: down_spikes.len() as f64 * annualize_count,
        up_intensity: rel(&up_spikes),
        down_intensity: rel(&down_spikes),
        drift,
        vol,
        threshold_multiple,
        up_median_undefined: up_median.is_none(),
        down_median_undefined: down_median.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    pub(crate) fn series_from_closes(closes: Vec<f64>) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
        let dates = (0..closes.len())
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect();
        PriceSeries::new(dates, closes, "test").unwrap()
    }

    #[test]
    fn log_returns_basic() {
        let s = series_from_closes(vec![100.0, 100.0, 100.0]);
        assert_eq!(log_returns(&s).unwrap(), vec![0.0, 0.0]);

        let s = series_from_closes(vec![100.0, 100.0 * 0.01f64.exp()]);
        let r = log_returns(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.01).abs() < 1e-12);

        let s = series_from_closes(vec![100.0, 110.0, 99.0]);
        let r = log_returns(&s).unwrap();
        assert!((r[0] - 1.1f64.ln()).abs() < 1e-12);
        assert!((r[1] - 0.9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_series_zero_drift_vol() {
        let s = series_from_closes(vec![50.0; 10]);
        let (drift, vol) = estimate_drift_vol(&s).unwrap();
        assert_eq!(drift, 0.0);
        assert_eq!(vol, 0.0);
    }

    #[test]
    fn recovers_gbm_parameters_from_synthetic_series() {
        use crate::models::{simulate_gbm, SimGrid};
        let p = GbmParams::new(0.08, 0.4).unwrap();
        // one 10-year daily path
        let grid = SimGrid::new(100.0, 10.0, 2520, 1, 314).unwrap();
        let path = simulate_gbm(&p, &grid).unwrap().values.remove(0);
        let s = series_from_closes(path);
        let (_, vol) = estimate_drift_vol(&s).unwrap();
        assert!((vol - 0.4).abs() < 0.03, "vol {vol}");
    }

    #[test]
    fn monotone_small_increments_detect_nothing() {
        let closes: Vec<f64> = (0..100).map(|i| 100.0 + i as f64 * 0.5).collect();
        let d = detect_jumps(&series_from_closes(closes), 4.0).unwrap();
        assert_eq!((d.up_count, d.down_count), (0, 0));
        assert!(d.down_median_undefined);
        assert_eq!(d.down_intensity, 0.0);
    }

    #[test]
    fn single_injected_up_spike_detected() {
        // 251 diffs of +0.1 and one of +10
        let mut closes = vec![100.0];
        for _ in 0..200 {
            closes.push(closes.last().unwrap() + 0.1);
        }
        closes.push(closes.last().unwrap() + 10.0);
        for _ in 0..51 {
            closes.push(closes.last().unwrap() + 0.1);
        }
        let d = detect_jumps(&series_from_closes(closes), 4.0).unwrap();
        assert_eq!((d.up_count, d.down_count), (1, 0));
        assert!((d.lambda_up - 252.0 / 252.0).abs() < 1e-12);
        assert!(d.up_intensity > 0.0);
    }

    #[test]
    fn detector_counts_monotone_in_threshold() {
        let mut closes = vec![100.0f64];
        let mut state = 1u64;
        for _ in 0..400 {
            // cheap LCG noise, deterministic
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            closes.push(closes.last().unwrap() * (1.0 + 0.02 * (u - 0.5)));
        }
        let s = series_from_closes(closes);
        let mut prev = usize::MAX;
        for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let d = detect_jumps(&s, t).unwrap();
            let total = d.up_count + d.down_count;
            assert!(total <= prev);
            prev = total;
        }
    }

    #[test]
    fn detector_scale_invariant() {
        let mut closes = vec![100.0];
        for i in 0..300 {
            let step = if i == 150 {
                -8.0
            } else if i % 2 == 0 {
                0.15
            } else {
                -0.05
            };
            closes.push(closes.last().unwrap() + step);
        }
        let base = detect_jumps(&series_from_closes(closes.clone()), 4.0).unwrap();
        for scale in [0.01, 1000.0] {
            let scaled: Vec<f64> = closes.iter().map(|c| c * scale).collect();
            let d = detect_jumps(&series_from_closes(scaled), 4.0).unwrap();
            assert_eq!((d.up_count, d.down_count), (base.up_count, base.down_count));
            assert!((d.up_intensity - base.up_intensity).abs() < 1e-12);
            assert!((d.down_intensity - base.down_intensity).abs() < 1e-12);
        }
    }

    #[test]
    fn detector_output_converts_to_split_params() {
        // small two-sided noise so both medians are defined, plus one crash
        let mut closes = vec![100.0];
        for i in 0..300 {
            let step = if i == 150 {
                -8.0
            } else if i % 2 == 0 {
                0.15
            } else {
                -0.05
            };
            closes.push(closes.last().unwrap() + step);
        }
        let d = detect_jumps(&series_from_closes(closes), 4.0).unwrap();
        assert_eq!(d.down_count, 1);
        let p = d.to_split_params().unwrap();
        assert_eq!(p.lambda_up, 0.0);
        assert!(p.lambda_down > 0.0);
        assert!((1.0 / p.eta_down - d.down_intensity).abs() < 1e-12);
    }
}
