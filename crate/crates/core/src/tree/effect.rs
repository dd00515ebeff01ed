use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use super::TreeError;

/// Difference-in-means effect of one node or cell, treated minus control.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub tau: f64,
    pub se: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub n_treated: usize,
    pub n_control: usize,
    pub mean_treated: f64,
    pub mean_control: f64,
}

impl EffectEstimate {
    pub fn samples(&self) -> usize {
        self.n_treated + self.n_control
    }
}

/// Count, mean and centered sum of squares of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmSummary {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl ArmSummary {
    /// Two-pass summary.
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = values
            .clone()
            .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return Self::default();
        }
        let mean = sum / n as f64;
        let m2 = values.map(|v| (v - mean) * (v - mean)).sum();
        Self { n, mean, m2 }
    }

    /// Unbiased sample variance; needs `n >= 2`.
    pub fn variance(&self) -> f64 {
        (self.m2 / (self.n as f64 - 1.0)).max(0.0)
    }
}

/// Welch two-sample estimate from arm summaries.
pub fn welch(treated: ArmSummary, control: ArmSummary) -> Result<EffectEstimate, TreeError> {
    if treated.n < 2 || control.n < 2 {
        return Err(TreeError::InsufficientArm {
            n_treated: treated.n,
            n_control: control.n,
        });
    }
    let v1 = treated.variance() / treated.n as f64;
    let v0 = control.variance() / control.n as f64;
    let tau = treated.mean - control.mean;
    let se = (v1 + v0).sqrt();
    let p_value = if se > 0.0 {
        let df = (v1 + v0).powi(2)
            / (v1 * v1 / (treated.n as f64 - 1.0) + v0 * v0 / (control.n as f64 - 1.0));
        let t = (tau / se).abs();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t)).min(1.0)
    } else {
        1.0
    };
    Ok(EffectEstimate {
        tau,
        se,
        p_value,
        n_treated: treated.n,
        n_control: control.n,
        mean_treated: treated.mean,
        mean_control: control.mean,
    })
}

/// Mean difference with a two-sided Welch t-test p-value. Each arm needs at
/// least two outcomes. A zero standard error gives `p = 1`.
pub fn estimate_effect(treated: &[f64], control: &[f64]) -> Result<EffectEstimate, TreeError> {
    welch(
        ArmSummary::of(treated.iter().copied()),
        ArmSummary::of(control.iter().copied()),
    )
}

/// Two-sided normal p-value for `tau_a - tau_b` with independent errors.
pub fn difference_p_value(tau_a: f64, se_a: f64, tau_b: f64, se_b: f64) -> f64 {
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if se > 0.0 {
        let z = ((tau_a - tau_b) / se).abs();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    } else {
        1.0
    }
}
