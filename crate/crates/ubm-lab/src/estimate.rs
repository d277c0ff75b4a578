//! Monte Carlo estimates with schedule-independent reductions.
//!
//! Samples are keyed by index through the seed tree, collected in index
//! order, and reduced by a fixed-topology pairwise tree sum, so the result
//! is bit-identical no matter how the work was scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ubm_core::rng::SeedTree;
use ubm_core::symbols::BiasSpec;

/// Verdict of a comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Outside a soft bound that is reported but not enforced.
    Flag,
}

/// A Monte Carlo result with optional prediction and verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

impl Estimate {
    /// Attach a prediction with the default stochastic rule
    /// `|value - prediction| <= 3 stderr`.
    pub fn versus(mut self, prediction: f64) -> Self {
        let ok = (self.value - prediction).abs() <= 3.0 * self.stderr;
        self.prediction = Some(prediction);
        self.verdict = Some(if ok { Verdict::Pass } else { Verdict::Fail });
        self.rule = Some("|value - prediction| <= 3 stderr".into());
        self
    }

    /// Attach a prediction with an explicit absolute tolerance.
    pub fn versus_abs(mut self, prediction: f64, tol: f64) -> Self {
        let ok = (self.value - prediction).abs() <= tol;
        self.prediction = Some(prediction);
        self.verdict = Some(if ok { Verdict::Pass } else { Verdict::Fail });
        self.rule = Some(format!("|value - prediction| <= {tol:e}"));
        self
    }

    pub fn passed(&self) -> bool {
        !matches!(self.verdict, Some(Verdict::Fail))
    }
}

/// Fixed-topology pairwise sum; deterministic for a given slice.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}

/// Map sample indices to values in parallel; any error aborts with the
/// offending sample's seed path attached.
pub fn par_sample<F>(
    n_samples: usize,
    seed: &SeedTree,
    f: F,
) -> Result<Vec<f64>, String>
where
    F: Fn(&SeedTree) -> Result<f64, ubm_core::Error> + Sync,
{
    let results: Vec<Result<f64, String>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let node = seed.child("sample", i);
            match f(&node) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(format!("non-finite observable {v} at seed {}", node.path_string())),
                Err(e) => Err(format!("{e} at seed {}", node.path_string())),
            }
        })
        .collect();
    results.into_iter().collect()
}

/// Plain Monte Carlo mean with `stderr = sample std / sqrt(n)`.
pub fn mc_estimate<F>(n_samples: usize, seed: &SeedTree, f: F) -> Result<Estimate, String>
where
    F: Fn(&SeedTree) -> Result<f64, ubm_core::Error> + Sync,
{
    if n_samples < 2 {
        return Err("mc_estimate needs n_samples >= 2".into());
    }
    let values = par_sample(n_samples, seed, f)?;
    Ok(estimate_from_values(&values, seed))
}

pub fn estimate_from_values(values: &[f64], seed: &SeedTree) -> Estimate {
    let n = values.len();
    let mean = tree_sum(values) / n as f64;
    let centered_sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = tree_sum(&centered_sq) / (n as f64 - 1.0);
    Estimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
        n_samples: n,
        seed_path: seed.path_string(),
        prediction: None,
        verdict: None,
        rule: None,
    }
}

/// Covariance estimate of paired samples with its first-order standard
/// error (standard deviation of the centered products over sqrt n).
pub fn covariance_estimate(xs: &[f64], ys: &[f64], seed: &SeedTree) -> Estimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = tree_sum(xs) / n;
    let my = tree_sum(ys) / n;
    let products: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let mut est = estimate_from_values(&products, seed);
    // Covariance normalizes by n, not n - 1; negligible here but keep the
    // estimator unbiased-free and consistent with its stderr.
    est.value = tree_sum(&products) / n;
    est
}

/// Self-normalized importance sampling `E_f[X] = sum w X / sum w` with the
/// delta-method standard error and an effective-sample-size gate.
pub struct Reweighted {
    pub estimate: Estimate,
    pub effective_sample_size: f64,
}

pub fn reweighted_expectation(
    log_weights: &[f64],
    observables: &[f64],
    seed: &SeedTree,
) -> Result<Reweighted, ubm_core::Error> {
    assert_eq!(log_weights.len(), observables.len());
    let n = log_weights.len();
    let max_lw = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max_lw.is_finite() {
        return Err(ubm_core::Error::NonFinite("importance weights".into()));
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max_lw).exp()).collect();
    let wsum = tree_sum(&weights);
    let wsq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let ess = wsum * wsum / tree_sum(&wsq);
    if ess < 50.0 {
        return Err(ubm_core::Error::WeightDegeneracy { ess });
    }
    let wx: Vec<f64> = weights
        .iter()
        .zip(observables)
        .map(|(w, x)| w * x)
        .collect();
    let value = tree_sum(&wx) / wsum;
    // Delta method: Var ~ sum w^2 (x - value)^2 / (sum w)^2.
    let dev: Vec<f64> = weights
        .iter()
        .zip(observables)
        .map(|(w, x)| w * w * (x - value) * (x - value))
        .collect();
    let stderr = (tree_sum(&dev)).sqrt() / wsum;
    Ok(Reweighted {
        estimate: Estimate {
            value,
            stderr,
            n_samples: n,
            seed_path: seed.path_string(),
            prediction: None,
            verdict: None,
            rule: None,
        },
        effective_sample_size: ess,
    })
}

/// Reweighted expectation driven by trajectory sampling: the bias weight is
/// `exp(sum_j Tr f_j(U_{t_j}))` evaluated on eigenangle slices.
pub fn reweighted_trajectory_expectation<S>(
    n_samples: usize,
    seed: &SeedTree,
    bias: &BiasSpec,
    sample: S,
) -> Result<Reweighted, String>
where
    // Returns (per-insertion slices ordered as in the bias, observable).
    S: Fn(&SeedTree) -> Result<(Vec<Vec<f64>>, f64), ubm_core::Error> + Sync,
{
    let pairs: Vec<Result<(f64, f64), String>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let node = seed.child("sample", i);
            match sample(&node) {
                Ok((slices, obs)) => {
                    let refs: Vec<&[f64]> = slices.iter().map(|s| s.as_slice()).collect();
                    let lw = bias.log_weight(&refs);
                    if lw.is_finite() && obs.is_finite() {
                        Ok((lw, obs))
                    } else {
                        Err(format!(
                            "non-finite weight/observable at seed {}",
                            node.path_string()
                        ))
                    }
                }
                Err(e) => Err(format!("{e} at seed {}", node.path_string())),
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_, _>>()?;
    let (lws, obs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    reweighted_expectation(&lws, &obs, seed).map_err(|e| e.to_string())
}
