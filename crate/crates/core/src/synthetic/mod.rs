//! Treatment frames with planted, piecewise-constant effects, and the
//! ground-truth oracle used to score fitted trees.
//!
//! Random numbers come from ChaCha20 (`rand_chacha`) seeded with
//! `seed_from_u64(spec.seed)`, one stream per purpose:
//!
//! | stream | purpose                          |
//! |--------|----------------------------------|
//! | 1      | feature values                   |
//! | 2      | treatment assignment             |
//! | 3      | outcome noise                    |
//! | 4      | evaluation points (`evaluate_tree`) |

mod spec;
pub mod telemetry;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::features::FeatureKind;
use crate::frames::{FeatureSpec, OutcomeKind, TreatmentFrame, TreatmentMeta};
use crate::tree::{CausalTree, TreeNode};

pub use spec::{Baseline, BoxEffect, Domain, FeatureBox, Interval, OutcomeMode, SyntheticSpec};

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64";
pub const STREAM_FEATURES: u64 = 1;
pub const STREAM_ASSIGNMENT: u64 = 2;
pub const STREAM_NOISE: u64 = 3;
pub const STREAM_EVALUATION: u64 = 4;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("tree features {tree:?} do not match the oracle domain {oracle:?}")]
    Domain {
        tree: Vec<String>,
        oracle: Vec<String>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The planted effect function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCate {
    pub domain: Domain,
    pub boxes: Vec<BoxEffect>,
}

impl OracleCate {
    /// Effect of the box containing `x`; `None` outside every box.
    pub fn cate(&self, x: &[f64]) -> Option<f64> {
        self.boxes
            .iter()
            .find(|b| b.region.contains(&self.domain, x))
            .map(|b| b.effect)
    }

    /// The piecewise-constant effect a fitted tree implies: one box per leaf,
    /// valued at the leaf's estimated effect.
    pub fn from_tree(tree: &CausalTree, domain: Domain) -> Result<Self, SynthError> {
        if tree.features != domain.names() {
            return Err(SynthError::Domain {
                tree: tree.features.clone(),
                oracle: domain.names(),
            });
        }
        fn collect(node: &TreeNode, path: &mut Vec<Interval>, out: &mut Vec<BoxEffect>) {
            match (&node.split, node.children()) {
                (Some(split), Some((left, right))) => {
                    path.push(Interval {
                        feature: split.feature.clone(),
                        min: Some(split.threshold),
                        max: None,
                    });
                    collect(left, path, out);
                    path.pop();
                    path.push(Interval {
                        feature: split.feature.clone(),
                        min: None,
                        max: Some(split.threshold),
                    });
                    collect(right, path, out);
                    path.pop();
                }
                _ => out.push(BoxEffect {
                    region: FeatureBox(path.clone()),
                    effect: node.effect.tau,
                }),
            }
        }
        let mut boxes = Vec::new();
        collect(&tree.root, &mut Vec::new(), &mut boxes);
        Ok(Self { domain, boxes })
    }
}

/// Planted effect at `x`. `x` must lie in the oracle's domain.
pub fn oracle_cate(oracle: &OracleCate, x: &[f64]) -> f64 {
    oracle.cate(x).expect("point outside the synthetic domain")
}

/// Draws a frame: `y = f(x) + w tau(x) + noise`, `w ~ Bernoulli(p_treated)`
/// independent of `x`. Binary outcomes draw `y ~ Bernoulli(clamp(f + w tau))`.
pub fn generate(spec: &SyntheticSpec) -> Result<(TreatmentFrame, OracleCate), SynthError> {
    spec.validate()?;
    let domain = spec.domain();
    let schema: Vec<FeatureSpec> = domain
        .names()
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let kind = if i < domain.n_continuous {
                FeatureKind::Continuous
            } else {
                FeatureKind::Binary
            };
            FeatureSpec::new(name, kind)
        })
        .collect();
    let outcome_kind = match spec.outcome {
        OutcomeMode::Gaussian => OutcomeKind::Continuous,
        OutcomeMode::Binary => OutcomeKind::BinaryWin,
    };
    let meta = TreatmentMeta {
        control: "control".into(),
        treated: "treated".into(),
    };
    let mut frame = TreatmentFrame::new(schema, outcome_kind, meta)
        .map_err(|e| SynthError::Spec(e.to_string()))?;
    let oracle = OracleCate {
        domain: domain.clone(),
        boxes: spec.effects.clone(),
    };

    let mut feat_rng = stream(spec.seed, STREAM_FEATURES);
    let mut assign_rng = stream(spec.seed, STREAM_ASSIGNMENT);
    let mut noise_rng = stream(spec.seed, STREAM_NOISE);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("validated sigma"));

    let mut x = vec![0.0; domain.len()];
    for _ in 0..spec.n_units {
        domain.sample(&mut feat_rng, &mut x);
        let treated = assign_rng.random::<f64>() < spec.p_treated;
        let mean = spec.baseline.at(&domain, &x)
            + if treated {
                oracle_cate(&oracle, &x)
            } else {
                0.0
            };
        let y = match spec.outcome {
            OutcomeMode::Gaussian => {
                mean + noise.as_ref().map_or(0.0, |n| n.sample(&mut noise_rng))
            }
            OutcomeMode::Binary => {
                f64::from(u8::from(noise_rng.random::<f64>() < mean.clamp(0.0, 1.0)))
            }
        };
        frame
            .push_row(&x, treated, y)
            .map_err(|e| SynthError::Spec(e.to_string()))?;
    }
    Ok((frame, oracle))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEvaluation {
    pub n_eval: usize,
    pub mean_absolute_error: f64,
    /// Share of points with a nonzero planted effect whose predicted effect
    /// has the same sign; `None` when the planted effect is zero everywhere
    /// sampled.
    pub sign_agreement: Option<f64>,
}

/// Scores `tree` against the planted effect on `n_eval` fresh points.
pub fn evaluate_tree(
    tree: &CausalTree,
    oracle: &OracleCate,
    n_eval: usize,
    seed: u64,
) -> Result<TreeEvaluation, SynthError> {
    if tree.features != oracle.domain.names() {
        return Err(SynthError::Domain {
            tree: tree.features.clone(),
            oracle: oracle.domain.names(),
        });
    }
    let mut rng = stream(seed, STREAM_EVALUATION);
    let mut x = vec![0.0; oracle.domain.len()];
    let (mut abs_err, mut signed, mut agree) = (0.0, 0usize, 0usize);
    for _ in 0..n_eval {
        oracle.domain.sample(&mut rng, &mut x);
        let truth = oracle_cate(oracle, &x);
        let pred = tree.predict(&x).expect("domain matches tree").tau;
        abs_err += (pred - truth).abs();
        if truth != 0.0 {
            signed += 1;
            agree += usize::from(pred.signum() == truth.signum());
        }
    }
    Ok(TreeEvaluation {
        n_eval,
        mean_absolute_error: if n_eval == 0 {
            0.0
        } else {
            abs_err / n_eval as f64
        },
        sign_agreement: (signed > 0).then(|| agree as f64 / signed as f64),
    })
}
