use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::frames::TreatmentFrame;

use super::effect::{difference_p_value, welch, ArmSummary};
use super::{min_leaf_count, CausalTree, Split, SplitCriterion, TreeConfig, TreeError, TreeNode};

const TRAIN: usize = 0;
const VALID: usize = 2;
const CONTROL: usize = 0;
const TREATED: usize = 1;

/// Split searches above this many (rows x features) fan out across threads.
const PARALLEL_WORK: usize = 200_000;

/// Running sums of centered outcomes for one (partition, arm) group.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: usize,
    sum: f64,
    sumsq: f64,
}

impl Acc {
    fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sumsq += v * v;
    }

    fn minus(self, o: Acc) -> Acc {
        Acc {
            n: self.n - o.n,
            sum: self.sum - o.sum,
            sumsq: self.sumsq - o.sumsq,
        }
    }

    fn summary(self) -> ArmSummary {
        let n = self.n as f64;
        let mean = self.sum / n;
        ArmSummary {
            n: self.n,
            mean,
            m2: (self.sumsq - self.sum * mean).max(0.0),
        }
    }
}

/// Indexed by `partition + arm` with partition in {TRAIN, VALID}.
type Groups = [Acc; 4];

fn minus(a: &Groups, b: &Groups) -> Groups {
    std::array::from_fn(|g| a[g].minus(b[g]))
}

fn arm_total(g: &Groups, arm: usize) -> usize {
    g[TRAIN + arm].n + g[VALID + arm].n
}

/// `(tau, se^2)` of one partition of a child; `None` when an arm has fewer
/// than two rows.
fn partition_effect(g: &Groups, partition: usize) -> Option<(f64, f64)> {
    let (t, c) = (g[partition + TREATED], g[partition + CONTROL]);
    if t.n < 2 || c.n < 2 {
        return None;
    }
    let (t, c) = (t.summary(), c.summary());
    Some((
        t.mean - c.mean,
        t.variance() / t.n as f64 + c.variance() / c.n as f64,
    ))
}

#[derive(Debug, Clone)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
    left: Groups,
    right: Groups,
}

/// Strictly lower by more than a relative 1e-12, so float noise from
/// shifting or scaling outcomes never reorders near-equal candidates.
fn clearly_better(score: f64, best: f64) -> bool {
    let tol = 1e-12 * score.abs().max(best.abs());
    score < best - tol
}

struct Builder<'a> {
    frame: &'a TreatmentFrame,
    config: &'a TreeConfig,
    validation: Vec<bool>,
    min_leaf: usize,
    min_arm: usize,
    /// Feature indices in name order, for tie-breaking.
    feature_order: Vec<usize>,
    feature_names: Vec<String>,
}

struct NodeRows {
    rows: Vec<u32>,
    /// Per feature, the node's rows sorted by (value, row index).
    sorted: Vec<Vec<u32>>,
}

impl Builder<'_> {
    fn group(&self, r: usize) -> usize {
        let partition = if self.validation[r] { VALID } else { TRAIN };
        partition + usize::from(self.frame.treatment()[r])
    }

    fn build(&self, node: NodeRows, depth: u32) -> Result<TreeNode, TreeError> {
        let y = self.frame.outcomes();
        let w = self.frame.treatment();
        let arm = |treated: bool| {
            node.rows
                .iter()
                .map(|&r| r as usize)
                .filter(move |&r| w[r] == treated)
                .map(|r| y[r])
        };
        let effect = welch(ArmSummary::of(arm(true)), ArmSummary::of(arm(false)))?;
        let mut out = TreeNode {
            effect,
            samples: node.rows.len(),
            depth,
            split: None,
            left: None,
            right: None,
        };
        if depth >= self.config.max_depth || node.rows.len() < 2 * self.min_leaf {
            return Ok(out);
        }
        let Some(best) = self.best_split(&node) else {
            return Ok(out);
        };
        if !self.passes_gate(&best) {
            return Ok(out);
        }

        let col = self.frame.column(best.feature);
        let goes_left = |r: &u32| col[*r as usize] >= best.threshold;
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            node.rows.iter().partition(|r| goes_left(r));
        let mut left_sorted = Vec::with_capacity(node.sorted.len());
        let mut right_sorted = Vec::with_capacity(node.sorted.len());
        for list in node.sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|r| goes_left(r));
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let left = self.build(
            NodeRows {
                rows: left_rows,
                sorted: left_sorted,
            },
            depth + 1,
        )?;
        let right = self.build(
            NodeRows {
                rows: right_rows,
                sorted: right_sorted,
            },
            depth + 1,
        )?;
        out.split = Some(Split {
            feature: self.feature_names[best.feature].clone(),
            threshold: best.threshold,
            feature_index: best.feature,
        });
        out.left = Some(Box::new(left));
        out.right = Some(Box::new(right));
        Ok(out)
    }

    fn best_split(&self, node: &NodeRows) -> Option<Candidate> {
        let y = self.frame.outcomes();
        let (train_n, train_sum) = node
            .rows
            .iter()
            .filter(|&&r| !self.validation[r as usize])
            .fold((0usize, 0.0), |(n, s), &r| (n + 1, s + y[r as usize]));
        if train_n == 0 {
            return None;
        }
        let center = train_sum / train_n as f64;
        let mut totals = Groups::default();
        for &r in &node.rows {
            totals[self.group(r as usize)].add(y[r as usize] - center);
        }

        let search = |&j: &usize| self.search_feature(j, &node.sorted[j], &totals, center);
        let per_feature: Vec<Option<Candidate>> =
            if node.rows.len() * node.sorted.len() >= PARALLEL_WORK {
                self.feature_order.par_iter().map(search).collect()
            } else {
                self.feature_order.iter().map(search).collect()
            };
        per_feature
            .into_iter()
            .flatten()
            .fold(None, |best: Option<Candidate>, c| match best {
                Some(b) if !clearly_better(c.score, b.score) => Some(b),
                _ => Some(c),
            })
    }

    fn admissible(&self, g: &Groups) -> bool {
        let total = arm_total(g, TREATED) + arm_total(g, CONTROL);
        total >= self.min_leaf
            && arm_total(g, TREATED) >= self.min_arm
            && arm_total(g, CONTROL) >= self.min_arm
            && g[TRAIN + TREATED].n >= 2
            && g[TRAIN + CONTROL].n >= 2
    }

    fn score(&self, left: &Groups, right: &Groups) -> Option<f64> {
        let (tau_l, var_l) = partition_effect(left, TRAIN)?;
        let (tau_r, var_r) = partition_effect(right, TRAIN)?;
        let n_l = (left[TRAIN].n + left[TRAIN + 1].n) as f64;
        let n_r = (right[TRAIN].n + right[TRAIN + 1].n) as f64;
        let n = n_l + n_r;
        Some(match self.config.split_criterion {
            SplitCriterion::ExpectedVariance => (n_l * var_l + n_r * var_r) / n,
            SplitCriterion::Heterogeneity => -(n_l * n_r / (n * n)) * (tau_l - tau_r).powi(2),
        })
    }

    fn search_feature(
        &self,
        feature: usize,
        sorted: &[u32],
        totals: &Groups,
        center: f64,
    ) -> Option<Candidate> {
        let col = self.frame.column(feature);
        let y = self.frame.outcomes();
        let value = |i: usize| col[sorted[i] as usize];

        let mut boundaries: Vec<usize> = (1..sorted.len())
            .filter(|&i| value(i - 1) < value(i))
            .collect();
        let k = self.config.candidate_thresholds_per_feature;
        if boundaries.len() > k {
            let m = sorted.len();
            let mut picked: Vec<usize> = (1..=k)
                .filter_map(|q| {
                    let target = (q * m).div_ceil(k + 1);
                    let at = boundaries.partition_point(|&b| b < target);
                    boundaries.get(at).copied()
                })
                .collect();
            picked.dedup();
            boundaries = picked;
        }

        let mut prefix = Groups::default();
        let mut next = 0;
        let mut best: Option<Candidate> = None;
        for &i in &boundaries {
            while next < i {
                let r = sorted[next] as usize;
                prefix[self.group(r)].add(y[r] - center);
                next += 1;
            }
            let right = prefix;
            let left = minus(totals, &right);
            if !self.admissible(&left) || !self.admissible(&right) {
                continue;
            }
            let Some(score) = self.score(&left, &right) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| clearly_better(score, b.score)) {
                let (a, b) = (value(i - 1), value(i));
                let mid = a / 2.0 + b / 2.0;
                let threshold = if mid > a { mid } else { b };
                best = Some(Candidate {
                    feature,
                    threshold,
                    score,
                    left,
                    right,
                });
            }
        }
        best
    }

    /// Child effect difference significant on training rows and replicated
    /// with the same sign on validation rows.
    fn passes_gate(&self, c: &Candidate) -> bool {
        let alpha = self.config.alpha;
        let effects = |p| {
            Some((
                partition_effect(&c.left, p)?,
                partition_effect(&c.right, p)?,
            ))
        };
        let Some(((tl, vl), (tr, vr))) = effects(TRAIN) else {
            return false;
        };
        if difference_p_value(tl, vl.sqrt(), tr, vr.sqrt()) >= alpha {
            return false;
        }
        let Some(((ql, ul), (qr, ur))) = effects(VALID) else {
            return false;
        };
        let same_sign = (tl - tr) * (ql - qr) > 0.0;
        same_sign && difference_p_value(ql, ul.sqrt(), qr, ur.sqrt()) < alpha
    }
}

/// Fits a causal tree on `frame`. Fully determined by the frame contents
/// and `config` (including `config.seed`, which draws the validation rows).
pub fn fit(frame: &TreatmentFrame, config: &TreeConfig) -> Result<CausalTree, TreeError> {
    config.validate()?;
    frame.check_fittable(config.min_arm_count)?;
    let n = frame.n_rows();
    assert!(n <= u32::MAX as usize, "frame too large");

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let n_valid = (config.validation_fraction * n as f64).round() as usize;
    let mut validation = vec![false; n];
    for &r in &order[..n_valid] {
        validation[r] = true;
    }

    let feature_names = frame.feature_names();
    let mut feature_order: Vec<usize> = (0..feature_names.len()).collect();
    feature_order.sort_by(|&a, &b| feature_names[a].cmp(&feature_names[b]));

    let sorted = (0..feature_names.len())
        .map(|j| {
            let col = frame.column(j);
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let builder = Builder {
        frame,
        config,
        validation,
        min_leaf: min_leaf_count(config, n),
        min_arm: config.min_arm_count.max(2),
        feature_order,
        feature_names: feature_names.clone(),
    };
    let root = builder.build(
        NodeRows {
            rows: (0..n as u32).collect(),
            sorted,
        },
        0,
    )?;
    Ok(CausalTree {
        config: config.clone(),
        seed: config.seed,
        frame_sha256: frame.fingerprint(),
        features: feature_names,
        root,
    })
}
