use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;

/// Features `x1..xN` uniform on [0, 1), then `b1..bM` uniform on {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub n_continuous: usize,
    pub n_binary: usize,
}

impl Domain {
    pub fn len(&self) -> usize {
        self.n_continuous + self.n_binary
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<String> {
        (1..=self.n_continuous)
            .map(|i| format!("x{i}"))
            .chain((1..=self.n_binary).map(|i| format!("b{i}")))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        let (prefix, num) = name.split_at_checked(1)?;
        let i: usize = num.parse().ok()?;
        match prefix {
            "x" if (1..=self.n_continuous).contains(&i) => Some(i - 1),
            "b" if (1..=self.n_binary).contains(&i) => Some(self.n_continuous + i - 1),
            _ => None,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, x: &mut [f64]) {
        for (i, slot) in x.iter_mut().enumerate() {
            let u = rng.random::<f64>();
            *slot = if i < self.n_continuous {
                u
            } else {
                f64::from(u8::from(u < 0.5))
            };
        }
    }
}

/// `min <= x < max` on one feature; an absent bound is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub feature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Intersection of intervals; the empty list is the whole space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureBox(pub Vec<Interval>);

impl FeatureBox {
    pub fn contains(&self, domain: &Domain, x: &[f64]) -> bool {
        self.0.iter().all(|iv| {
            let Some(j) = domain.index_of(&iv.feature) else {
                return false;
            };
            iv.min.is_none_or(|m| x[j] >= m) && iv.max.is_none_or(|m| x[j] < m)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEffect {
    #[serde(rename = "box")]
    pub region: FeatureBox,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Constant(f64),
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Piecewise(Vec<BoxEffect>),
}

impl Baseline {
    pub fn at(&self, domain: &Domain, x: &[f64]) -> f64 {
        match self {
            Baseline::Constant(c) => *c,
            Baseline::Linear {
                intercept,
                coefficients,
            } => intercept + coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
            Baseline::Piecewise(boxes) => boxes
                .iter()
                .find(|b| b.region.contains(domain, x))
                .map_or(0.0, |b| b.effect),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeMode {
    #[default]
    Gaussian,
    Binary,
}

fn default_p_treated() -> f64 {
    0.5
}

/// JSON-described generator of frames with a known effect function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_units: usize,
    pub n_continuous: usize,
    #[serde(default)]
    pub n_binary: usize,
    pub baseline: Baseline,
    /// Effect boxes; they must partition the domain.
    pub effects: Vec<BoxEffect>,
    #[serde(default = "default_p_treated")]
    pub p_treated: f64,
    pub noise_sigma: f64,
    #[serde(default)]
    pub outcome: OutcomeMode,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Zero effect everywhere, unit-variance noise.
    pub fn null(n_units: usize, n_continuous: usize, seed: u64) -> Self {
        Self {
            n_units,
            n_continuous,
            n_binary: 0,
            baseline: Baseline::Constant(0.0),
            effects: vec![BoxEffect {
                region: FeatureBox::default(),
                effect: 0.0,
            }],
            p_treated: 0.5,
            noise_sigma: 1.0,
            outcome: OutcomeMode::Gaussian,
            seed,
        }
    }

    /// Effect `upper` where `x1 >= 0.5`, `lower` elsewhere; zero baseline.
    pub fn two_box(
        n_units: usize,
        n_continuous: usize,
        upper: f64,
        lower: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let half = |min, max| {
            FeatureBox(vec![Interval {
                feature: "x1".into(),
                min,
                max,
            }])
        };
        Self {
            effects: vec![
                BoxEffect {
                    region: half(Some(0.5), None),
                    effect: upper,
                },
                BoxEffect {
                    region: half(None, Some(0.5)),
                    effect: lower,
                },
            ],
            noise_sigma,
            ..Self::null(n_units, n_continuous, seed)
        }
    }

    pub fn domain(&self) -> Domain {
        Domain {
            n_continuous: self.n_continuous,
            n_binary: self.n_binary,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |s: String| Err(SynthError::Spec(s));
        if self.n_units == 0 {
            return bad("n_units must be positive".into());
        }
        if !(self.p_treated > 0.0 && self.p_treated < 1.0) {
            return bad("p_treated must lie in (0, 1)".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative".into());
        }
        if self.domain().is_empty() {
            return bad("at least one feature is required".into());
        }
        if let Baseline::Linear { coefficients, .. } = &self.baseline {
            if coefficients.len() > self.domain().len() {
                return bad("more baseline coefficients than features".into());
            }
        }
        check_partition(&self.domain(), &self.effects, "effects")?;
        if let Baseline::Piecewise(boxes) = &self.baseline {
            check_partition(&self.domain(), boxes, "baseline")?;
        }
        Ok(())
    }
}

const MAX_GRID_CELLS: usize = 1 << 20;

/// Verifies every point of the domain lies in exactly one box by testing one
/// representative per cell of the grid spanned by all box boundaries.
fn check_partition(domain: &Domain, boxes: &[BoxEffect], what: &str) -> Result<(), SynthError> {
    let err = |s: String| SynthError::Spec(format!("{what}: {s}"));
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); domain.len()];
    for b in boxes {
        if !b.effect.is_finite() {
            return Err(err("box values must be finite".into()));
        }
        for iv in &b.region.0 {
            let j = domain
                .index_of(&iv.feature)
                .ok_or_else(|| err(format!("unknown feature `{}`", iv.feature)))?;
            if let (Some(lo), Some(hi)) = (iv.min, iv.max) {
                if lo >= hi {
                    return Err(err(format!("empty interval on {}", iv.feature)));
                }
            }
            cuts[j].extend(iv.min.into_iter().chain(iv.max));
        }
    }
    let reps: Vec<Vec<f64>> = cuts
        .into_iter()
        .enumerate()
        .map(|(j, mut c)| {
            // A feature no box constrains cannot change membership.
            if c.is_empty() {
                return vec![0.0];
            }
            if j >= domain.n_continuous {
                return vec![0.0, 1.0];
            }
            c.retain(|v| *v > 0.0 && *v < 1.0);
            c.push(0.0);
            c.push(1.0);
            c.sort_by(f64::total_cmp);
            c.dedup();
            c.windows(2)
                .map(|w| w[0] + (w[1] - w[0]) / 2.0)
                .chain([0.0])
                .collect()
        })
        .collect();
    let cells: usize = reps.iter().map(Vec::len).product();
    if cells > MAX_GRID_CELLS {
        return Err(err(format!("partition check needs {cells} cells")));
    }
    let mut x = vec![0.0; domain.len()];
    for cell in 0..cells {
        let mut rest = cell;
        for (slot, r) in x.iter_mut().zip(&reps) {
            *slot = r[rest % r.len()];
            rest /= r.len();
        }
        let hits = boxes
            .iter()
            .filter(|b| b.region.contains(domain, &x))
            .count();
        if hits != 1 {
            return Err(err(format!(
                "point {x:?} lies in {hits} boxes (boxes must partition the domain)"
            )));
        }
    }
    Ok(())
}
