use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::RngStream;

/// Smallest sample accepted by the KS routines.
pub const MIN_KS_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `D_n = sup |F_n - F|`, or the two-sample analogue.
    pub statistic: f64,
    pub n: usize,
    pub critical: f64,
    pub alpha: f64,
    /// Asymptotic (or permutation) p-value.
    pub p_value: f64,
    pub reject: bool,
}

/// Reference distributions for the one-sample test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Exponential { rate: f64 },
    /// Uniform on `(0, 1)`.
    Uniform,
}

impl Distribution {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::Uniform => x.clamp(0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::Unsupported(format!("exponential distribution with rate {rate}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    /// `uniform`, `exp` (rate 1) or `exp(<rate>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(Distribution::Uniform);
        }
        if s == "exp" {
            return Ok(Distribution::Exponential { rate: 1.0 });
        }
        if let Some(rate) = s.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(rate) = rate.trim().parse::<f64>() {
                let d = Distribution::Exponential { rate };
                d.validate()?;
                return Ok(d);
            }
        }
        Err(Error::Unsupported(format!("distribution `{s}`; expected uniform, exp or exp(<rate>)")))
    }
}

/// `c(α) = sqrt(-ln(α / 2) / 2)`, the asymptotic KS quantile.
pub fn ks_c_alpha(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    // The series converges slowly near 0, where the survival is 1 to double precision.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite sample {x}")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov test with asymptotic critical value `c(α)/√n`.
pub fn ks_one_sample(samples: &[f64], dist: &Distribution, alpha: f64) -> Result<KsResult> {
    dist.validate()?;
    check_alpha(alpha)?;
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_KS_SAMPLES,
        });
    }
    let sorted = sorted_finite(samples)?;
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sqrt_n = nf.sqrt();
    let critical = ks_c_alpha(alpha) / sqrt_n;
    Ok(KsResult {
        statistic: d,
        n,
        critical,
        alpha,
        p_value: kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d),
        reject: d > critical,
    })
}

/// `sup_x |F_a(x) - F_b(x)|` over sorted samples, stepping across ties.
fn two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn check_two_samples(a: &[f64], b: &[f64]) -> Result<()> {
    let got = a.len().min(b.len());
    if got < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got,
            need: MIN_KS_SAMPLES,
        });
    }
    Ok(())
}

/// Two-sample KS test for continuous data, asymptotic critical value
/// `c(α) sqrt((n + m) / (n m))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    check_alpha(alpha)?;
    check_two_samples(a, b)?;
    let (sa, sb) = (sorted_finite(a)?, sorted_finite(b)?);
    let d = two_sample_statistic(&sa, &sb);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let en = (n * m / (n + m)).sqrt();
    let critical = ks_c_alpha(alpha) / en;
    Ok(KsResult {
        statistic: d,
        n: a.len() + b.len(),
        critical,
        alpha,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
        reject: d > critical,
    })
}

/// Two-sample KS statistic calibrated by random relabelling, suitable for
/// discrete data with ties. Permutation `p` uses stream `(seed, base + p)`.
pub fn permutation_two_sample(a: &[f64], b: &[f64], alpha: f64, permutations: usize, seed: u64, base_stream: u64) -> Result<KsResult> {
    check_alpha(alpha)?;
    check_two_samples(a, b)?;
    if permutations == 0 {
        return Err(Error::InvalidArgument("permutations must be > 0".into()));
    }
    let (sa, sb) = (sorted_finite(a)?, sorted_finite(b)?);
    let observed = two_sample_statistic(&sa, &sb);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let null: Vec<f64> = (0..permutations as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, base_stream + p).rng();
            let mut v = pooled.clone();
            v.shuffle(&mut rng);
            let (x, y) = v.split_at_mut(a.len());
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            two_sample_statistic(x, y)
        })
        .collect();
    let exceed = null.iter().filter(|&&d| d >= observed - 1e-12).count();
    let p_value = (1 + exceed) as f64 / (1 + permutations) as f64;
    let mut sorted_null = null;
    sorted_null.sort_by(f64::total_cmp);
    let q = ((1.0 - alpha) * permutations as f64).ceil() as usize;
    let critical = sorted_null[q.clamp(1, permutations) - 1];
    Ok(KsResult {
        statistic: observed,
        n: a.len() + b.len(),
        critical,
        alpha,
        p_value,
        reject: p_value < alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::Exp1;

    #[test]
    fn c_alpha_value() {
        assert!((ks_c_alpha(0.01) - 1.6276).abs() < 1e-4);
        assert!((ks_c_alpha(0.05) - 1.3581).abs() < 1e-4);
        // The asymptotic p-value at the critical point is alpha.
        assert!((kolmogorov_survival(ks_c_alpha(0.01)) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn exact_quantiles_fit() {
        let n = 1000;
        let q: Vec<f64> = (1..=n).map(|i| -(1.0 - i as f64 / (n + 1) as f64).ln()).collect();
        let r = ks_one_sample(&q, &Distribution::Exponential { rate: 1.0 }, 0.01).unwrap();
        assert!(r.statistic <= 1.0 / (n + 1) as f64 + 1e-12, "{}", r.statistic);
        assert!(!r.reject);
    }

    #[test]
    fn degenerate_sample_rejects() {
        let r = ks_one_sample(&[0.0; 50], &Distribution::Exponential { rate: 1.0 }, 0.01).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.reject);
    }

    #[test]
    fn input_errors() {
        let d = Distribution::Uniform;
        assert!(matches!(ks_one_sample(&[0.5; 3], &d, 0.01), Err(Error::TooFewSamples { got: 3, .. })));
        assert!(ks_one_sample(&[f64::NAN; 20], &d, 0.01).is_err());
        assert!(matches!("gamma(2)".parse::<Distribution>(), Err(Error::Unsupported(_))));
        assert!(matches!("exp(-1)".parse::<Distribution>(), Err(Error::Unsupported(_))));
        assert_eq!("exp(2.5)".parse::<Distribution>().unwrap(), Distribution::Exponential { rate: 2.5 });
    }

    #[test]
    fn one_sample_calibration() {
        let trials = 200u64;
        let rejections = (0..trials)
            .filter(|&t| {
                let mut rng = RngStream::new(99, t).rng();
                let xs: Vec<f64> = (0..5000).map(|_| rng.sample(Exp1)).collect();
                ks_one_sample(&xs, &Distribution::Exponential { rate: 1.0 }, 0.01).unwrap().reject
            })
            .count();
        let rate = rejections as f64 / trials as f64;
        assert!((rate - 0.01).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn two_sample_ties_and_power() {
        let a: Vec<f64> = (0..100).map(|i| (i % 5) as f64).collect();
        let b: Vec<f64> = (0..120).map(|i| (i % 5) as f64).collect();
        let r = permutation_two_sample(&a, &b, 0.01, 200, 1, 0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        let c: Vec<f64> = (0..100).map(|i| (i % 5 + 2) as f64).collect();
        let r = permutation_two_sample(&a, &c, 0.01, 200, 1, 0).unwrap();
        assert!(r.reject);
        let r = ks_two_sample(&a, &c, 0.01).unwrap();
        assert!((r.statistic - 0.4).abs() < 1e-12);
    }

    #[test]
    fn permutation_is_deterministic() {
        let a: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| (i % 6) as f64).collect();
        let x = permutation_two_sample(&a, &b, 0.05, 300, 3, 10).unwrap();
        let y = permutation_two_sample(&a, &b, 0.05, 300, 3, 10).unwrap();
        assert_eq!(x, y);
    }
}
