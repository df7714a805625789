//! Small-scale simulator for the fine-grained target policy optimization
//! objective.
//!
//! The policy is a product of independent categorical distributions, one per
//! answer slot (label, box choice, keyword choice). Slots play the role of
//! tokens: each rollout picks one candidate per slot, is rendered into a full
//! `<Think>/<Answer>` completion, scored by the reward module, and the clipped
//! importance-sampled objective with a KL penalty toward a frozen reference
//! is maximized by plain gradient ascent on the logits.
//!
//! ```text
//! J = 1/G sum_j 1/|o_j| sum_t [ min(r A_j, clip(r, 1-eps, 1+eps) A_j) - beta k3 ]
//! r  = pi(o_jt) / pi_old(o_jt)
//! k3 = pi_ref/pi - ln(pi_ref/pi) - 1
//! ```

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{RewardConfig, RewardVector, DEFAULT_GROUP_SIZE};
use crate::parser::{parse_response, render_response, ParsedAnswer};
use crate::rewards::{score_group, score_response, GroupScores, RewardError};
use crate::types::{BBox, Label, Sample};

pub const SLOT_LABEL: usize = 0;
pub const SLOT_BOX: usize = 1;
pub const SLOT_KEYWORD: usize = 2;

/// Rationale used for every rendered rollout unless randomized rationales are
/// enabled. Short enough that the verbosity penalty never fires.
pub const PLACEHOLDER_RATIONALE: &str =
    "1. Visual grounding: key objects located. 2. Semantic analysis: tone of the text. 3. Incongruity check: compared.";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("mismatched shapes: {0}")]
    MismatchedShapes(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Logits of a product of categorical distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLogits {
    slots: Vec<Vec<f64>>,
}

impl SlotLogits {
    pub fn new(slots: Vec<Vec<f64>>) -> Result<Self, SimError> {
        if slots.is_empty() {
            return Err(SimError::InvalidPolicy("no slots".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if s.len() < 2 {
                return Err(SimError::InvalidPolicy(format!("slot {i} has {} candidates; need >= 2", s.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(SimError::InvalidPolicy(format!("slot {i} has a non-finite logit")));
            }
        }
        Ok(SlotLogits { slots })
    }

    pub fn uniform(sizes: &[usize]) -> Result<Self, SimError> {
        Self::new(sizes.iter().map(|&n| vec![0.0; n]).collect())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.slots.iter().map(Vec::len).collect()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Vec<f64>] {
        &self.slots
    }

    pub fn log_probs(&self, slot: usize) -> Vec<f64> {
        let z = &self.slots[slot];
        let lse = log_sum_exp(z);
        z.iter().map(|v| v - lse).collect()
    }

    pub fn probs(&self, slot: usize) -> Vec<f64> {
        self.log_probs(slot).into_iter().map(f64::exp).collect()
    }

    pub fn log_prob(&self, slot: usize, index: usize) -> f64 {
        let z = &self.slots[slot];
        z[index] - log_sum_exp(z)
    }

    fn same_shape(&self, other: &SlotLogits, what: &str) -> Result<(), SimError> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(SimError::MismatchedShapes(format!("{what}: {:?} vs {:?}", self.shape(), other.shape())))
        }
    }

    /// `self += step * direction`.
    pub fn add_scaled(&mut self, direction: &[Vec<f64>], step: f64) {
        for (s, d) in self.slots.iter_mut().zip(direction) {
            for (v, g) in s.iter_mut().zip(d) {
                *v += step * g;
            }
        }
    }

    /// Adds `delta` to a single logit.
    pub fn perturbed(&self, slot: usize, index: usize, delta: f64) -> SlotLogits {
        let mut out = self.clone();
        out.slots[slot][index] += delta;
        out
    }

    /// Draws one candidate per slot; returns indices and their log-probs.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, Vec<f64>) {
        let mut choice = Vec::with_capacity(self.slots.len());
        let mut logp = Vec::with_capacity(self.slots.len());
        for slot in 0..self.slots.len() {
            let lp = self.log_probs(slot);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = lp.len() - 1;
            for (k, l) in lp.iter().enumerate() {
                acc += l.exp();
                if u < acc {
                    pick = k;
                    break;
                }
            }
            choice.push(pick);
            logp.push(lp[pick]);
        }
        (choice, logp)
    }
}

/// Per-slot total-variation distance between two policies of equal shape.
pub fn total_variation(a: &SlotLogits, b: &SlotLogits) -> Result<Vec<f64>, SimError> {
    a.same_shape(b, "total variation")?;
    Ok((0..a.num_slots())
        .map(|s| 0.5 * a.probs(s).iter().zip(b.probs(s)).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .collect())
}

/// Candidate values for the box and keyword slots. The label slot always
/// offers `[sarcastic, not sarcastic]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTables {
    pub boxes: Vec<Vec<BBox>>,
    pub keywords: Vec<String>,
}

pub const LABEL_CANDIDATES: [Label; 2] = [Label::Sarcastic, Label::NotSarcastic];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotPolicy {
    pub logits: SlotLogits,
    pub tables: CandidateTables,
}

impl SlotPolicy {
    pub fn uniform(tables: CandidateTables) -> Result<Self, SimError> {
        let logits = SlotLogits::uniform(&[LABEL_CANDIDATES.len(), tables.boxes.len(), tables.keywords.len()])?;
        Ok(SlotPolicy { logits, tables })
    }

    pub fn answer_for(&self, choice: &[usize]) -> ParsedAnswer {
        ParsedAnswer {
            label: LABEL_CANDIDATES[choice[SLOT_LABEL]],
            boxes: self.tables.boxes[choice[SLOT_BOX]].clone(),
            keywords: self.tables.keywords[choice[SLOT_KEYWORD]].clone(),
        }
    }

    /// Every slot combination in row-major order.
    pub fn all_choices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for n in self.logits.shape() {
            out = out.into_iter().flat_map(|prefix| (0..n).map(move |k| [prefix.clone(), vec![k]].concat())).collect();
        }
        out
    }
}

/// The parts of a sampled group the objective needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollouts {
    pub choices: Vec<Vec<usize>>,
    /// Log-probabilities of the chosen candidates under the sampling policy.
    pub old_logprobs: Vec<Vec<f64>>,
    /// One advantage per rollout, shared by all of its slots.
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGroup {
    pub completions: Vec<String>,
    pub rollouts: Rollouts,
    pub ground_truth: Sample,
    pub rewards: Vec<RewardVector>,
    pub scores: GroupScores,
}

/// How rollouts are rendered into text.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Replace the fixed rationale with one of random length in
    /// `0..=2*think_word_cap` words, exercising the verbosity penalty.
    pub random_rationale: bool,
}

fn rationale<R: Rng + ?Sized>(rng: &mut R, opts: RenderOptions, cfg: &RewardConfig) -> String {
    if !opts.random_rationale {
        return PLACEHOLDER_RATIONALE.to_string();
    }
    let n = rng.gen_range(0..=2 * cfg.think_word_cap);
    vec!["because"; n].join(" ")
}

/// Samples `g` rollouts from `policy` with a deterministic stream seeded by
/// `seed`, renders and scores them.
pub fn sample_group(
    policy: &SlotPolicy,
    gt: &Sample,
    g: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
    opts: RenderOptions,
) -> Result<TrajectoryGroup, SimError> {
    if g < 2 {
        return Err(SimError::GroupTooSmall(g));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices = Vec::with_capacity(g);
    let mut old_logprobs = Vec::with_capacity(g);
    let mut completions = Vec::with_capacity(g);
    for _ in 0..g {
        let (choice, logp) = policy.logits.sample(&mut rng);
        let think = rationale(&mut rng, opts, reward_cfg);
        completions.push(render_response(&think, &policy.answer_for(&choice)));
        choices.push(choice);
        old_logprobs.push(logp);
    }
    let scored = score_group(&completions, gt, reward_cfg)?;
    Ok(TrajectoryGroup {
        completions,
        rollouts: Rollouts { choices, old_logprobs, advantages: scored.scores.advantages.clone() },
        ground_truth: gt.clone(),
        rewards: scored.rewards,
        scores: scored.scores,
    })
}

/// Objective value and its gradient with respect to the logits of `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub gradient: Vec<Vec<f64>>,
}

/// Low-variance nonnegative KL estimator at one sampled candidate:
/// `q/p - ln(q/p) - 1` with `p` the policy and `q` the reference probability.
pub fn k3(logp_policy: f64, logp_ref: f64) -> f64 {
    let log_ratio = logp_ref - logp_policy;
    log_ratio.exp() - log_ratio - 1.0
}

fn check_rollouts(theta: &SlotLogits, rollouts: &Rollouts) -> Result<(), SimError> {
    let g = rollouts.choices.len();
    if g == 0 {
        return Err(SimError::MismatchedShapes("empty rollout group".into()));
    }
    if rollouts.old_logprobs.len() != g || rollouts.advantages.len() != g {
        return Err(SimError::MismatchedShapes(format!(
            "{g} rollouts, {} log-prob rows, {} advantages",
            rollouts.old_logprobs.len(),
            rollouts.advantages.len()
        )));
    }
    let shape = theta.shape();
    for (j, (choice, logp)) in rollouts.choices.iter().zip(&rollouts.old_logprobs).enumerate() {
        if choice.len() != shape.len() || logp.len() != shape.len() {
            return Err(SimError::MismatchedShapes(format!("rollout {j} does not cover {} slots", shape.len())));
        }
        if let Some((t, &k)) = choice.iter().enumerate().find(|(t, &k)| k >= shape[*t]) {
            return Err(SimError::MismatchedShapes(format!("rollout {j} slot {t} picks {k} of {}", shape[t])));
        }
    }
    Ok(())
}

/// Clipped surrogate with KL penalty and its exact gradient; `old` and
/// `reference` are frozen.
pub fn ftpo_objective(
    theta: &SlotLogits,
    old: &SlotLogits,
    reference: &SlotLogits,
    rollouts: &Rollouts,
    eps_clip: f64,
    beta_kl: f64,
) -> Result<Objective, SimError> {
    theta.same_shape(old, "theta/old")?;
    theta.same_shape(reference, "theta/ref")?;
    check_rollouts(theta, rollouts)?;
    if eps_clip.is_nan() || eps_clip <= 0.0 {
        return Err(SimError::InvalidHyperparameter(format!("eps_clip must be > 0, got {eps_clip}")));
    }
    if beta_kl.is_nan() || beta_kl < 0.0 {
        return Err(SimError::InvalidHyperparameter(format!("beta_kl must be >= 0, got {beta_kl}")));
    }

    let n_slots = theta.num_slots();
    let theta_lp: Vec<Vec<f64>> = (0..n_slots).map(|s| theta.log_probs(s)).collect();
    let ref_lp: Vec<Vec<f64>> = (0..n_slots).map(|s| reference.log_probs(s)).collect();
    let mut gradient: Vec<Vec<f64>> = theta.shape().into_iter().map(|n| vec![0.0; n]).collect();
    let g = rollouts.choices.len() as f64;
    let weight = 1.0 / (g * n_slots as f64);
    let mut value = 0.0;

    for ((choice, old_lp), &adv) in rollouts.choices.iter().zip(&rollouts.old_logprobs).zip(&rollouts.advantages) {
        for (t, &a) in choice.iter().enumerate() {
            let lp = theta_lp[t][a];
            let ratio = (lp - old_lp[t]).exp();
            let unclipped = ratio * adv;
            let clipped = ratio.clamp(1.0 - eps_clip, 1.0 + eps_clip) * adv;
            let kl = k3(lp, ref_lp[t][a]);
            value += weight * (unclipped.min(clipped) - beta_kl * kl);

            // d/dz log p(a) = onehot(a) - p. The surrogate contributes only
            // when the unclipped branch is active.
            let surrogate_coef = if unclipped <= clipped { adv * ratio } else { 0.0 };
            // d k3 / d log p(a) = 1 - p_ref(a)/p(a)
            let kl_coef = 1.0 - (ref_lp[t][a] - lp).exp();
            let coef = weight * (surrogate_coef - beta_kl * kl_coef);
            if coef != 0.0 {
                for (k, gk) in gradient[t].iter_mut().enumerate() {
                    let p = theta_lp[t][k].exp();
                    *gk += coef * (f64::from(u8::from(k == a)) - p);
                }
            }
        }
    }
    Ok(Objective { value, gradient })
}

/// Central finite-difference gradient of the objective value.
pub fn finite_difference_gradient(
    theta: &SlotLogits,
    old: &SlotLogits,
    reference: &SlotLogits,
    rollouts: &Rollouts,
    eps_clip: f64,
    beta_kl: f64,
    h: f64,
) -> Result<Vec<Vec<f64>>, SimError> {
    let shape = theta.shape();
    let mut grad = Vec::with_capacity(shape.len());
    for (s, &n) in shape.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let up = ftpo_objective(&theta.perturbed(s, k, h), old, reference, rollouts, eps_clip, beta_kl)?.value;
            let down = ftpo_objective(&theta.perturbed(s, k, -h), old, reference, rollouts, eps_clip, beta_kl)?.value;
            row.push((up - down) / (2.0 * h));
        }
        grad.push(row);
    }
    Ok(grad)
}

/// Relative error with the denominator floored at `1e-6`, so components
/// that vanish analytically are compared in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Instances with a ratio this close to a clip boundary are re-drawn.
pub const CLIP_BOUNDARY_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub instances: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Random generic instance: 2 slots with 2..=4 candidates, `g` rollouts drawn
/// from `old`, standardized random advantages.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    g: usize,
    eps_clip: f64,
) -> (SlotLogits, SlotLogits, SlotLogits, Rollouts) {
    loop {
        let sizes: Vec<usize> = (0..2).map(|_| rng.gen_range(2..=4)).collect();
        let draw = |rng: &mut R| {
            SlotLogits::new(sizes.iter().map(|&n| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
                .expect("finite logits")
        };
        let old = draw(rng);
        let theta = draw(rng);
        let reference = draw(rng);
        let mut choices = Vec::with_capacity(g);
        let mut old_logprobs = Vec::with_capacity(g);
        for _ in 0..g {
            let (c, lp) = old.sample(rng);
            choices.push(c);
            old_logprobs.push(lp);
        }
        let totals: Vec<f64> = (0..g).map(|_| rng.gen_range(-0.3..1.0)).collect();
        let advantages = crate::rewards::group_advantages(&totals, 1e-6);
        let near_boundary = choices.iter().zip(&old_logprobs).any(|(c, lp)| {
            c.iter().enumerate().any(|(t, &a)| {
                let r = (theta.log_prob(t, a) - lp[t]).exp();
                (r - (1.0 - eps_clip)).abs() < CLIP_BOUNDARY_MARGIN || (r - (1.0 + eps_clip)).abs() < CLIP_BOUNDARY_MARGIN
            })
        });
        if !near_boundary {
            return (theta, old, reference, Rollouts { choices, old_logprobs, advantages });
        }
    }
}

/// Compares analytic and finite-difference gradients on `instances` random
/// generic points.
pub fn gradcheck(seed: u64, instances: usize) -> Result<GradcheckReport, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..instances {
        let eps_clip = 0.2;
        let beta_kl = rng.gen_range(0.0..1.0);
        let (theta, old, reference, rollouts) = random_instance(&mut rng, DEFAULT_GROUP_SIZE, eps_clip);
        let analytic = ftpo_objective(&theta, &old, &reference, &rollouts, eps_clip, beta_kl)?.gradient;
        let numeric =
            finite_difference_gradient(&theta, &old, &reference, &rollouts, eps_clip, beta_kl, GRADCHECK_STEP)?;
        for (a_row, n_row) in analytic.iter().zip(&numeric) {
            for (&a, &n) in a_row.iter().zip(n_row) {
                max_err = max_err.max(relative_error(a, n));
            }
        }
    }
    Ok(GradcheckReport {
        instances,
        max_relative_error: max_err,
        passed: max_err < GRADCHECK_TOLERANCE,
    })
}

/// Simulator hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub group_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub eps_clip: f64,
    pub beta_kl: f64,
    pub seed: u64,
    pub random_rationale: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            group_size: DEFAULT_GROUP_SIZE,
            steps: 500,
            lr: 0.5,
            eps_clip: 0.2,
            beta_kl: 0.04,
            seed: 7,
            random_rationale: false,
        }
    }
}

/// Mean reward components over one step's group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub mean_total: f64,
    pub mean_fmt: f64,
    pub mean_acc: f64,
    pub mean_box: f64,
    pub mean_txt: f64,
    pub mean_over: f64,
}

impl StepStats {
    pub const CSV_HEADER: &'static str = "step,mean_total,mean_fmt,mean_acc,mean_box,mean_txt,mean_over";

    fn from_rewards(step: usize, rewards: &[RewardVector]) -> Self {
        let n = rewards.len() as f64;
        let mean = |f: fn(&RewardVector) -> f64| rewards.iter().map(f).sum::<f64>() / n;
        StepStats {
            step,
            mean_total: mean(|v| v.total),
            mean_fmt: mean(|v| v.fmt),
            mean_acc: mean(|v| v.acc),
            mean_box: mean(|v| v.box_),
            mean_txt: mean(|v| v.txt),
            mean_over: mean(|v| v.over),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.mean_total, self.mean_fmt, self.mean_acc, self.mean_box, self.mean_txt, self.mean_over
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub curve: Vec<StepStats>,
    pub initial: SlotPolicy,
    pub final_policy: SlotPolicy,
}

impl TrainOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(StepStats::CSV_HEADER);
        out.push('\n');
        for row in &self.curve {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Sample, score, take one ascent step; the sampling policy is refreshed to
/// the current policy every step and the reference stays at `init`.
pub fn train(init: &SlotPolicy, gt: &Sample, cfg: &SimConfig, reward_cfg: &RewardConfig) -> Result<TrainOutcome, SimError> {
    if cfg.steps < 1 {
        return Err(SimError::InvalidHyperparameter("steps must be >= 1".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(SimError::InvalidHyperparameter(format!("lr must be finite and >= 0, got {}", cfg.lr)));
    }
    let reference = init.logits.clone();
    let mut policy = init.clone();
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let opts = RenderOptions { random_rationale: cfg.random_rationale };
    let mut curve = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let group = sample_group(&policy, gt, cfg.group_size, seeds.next_u64(), reward_cfg, opts)?;
        curve.push(StepStats::from_rewards(step, &group.rewards));
        let old = policy.logits.clone();
        let obj = ftpo_objective(&policy.logits, &old, &reference, &group.rollouts, cfg.eps_clip, cfg.beta_kl)?;
        policy.logits.add_scaled(&obj.gradient, cfg.lr);
    }
    Ok(TrainOutcome { curve, initial: init.clone(), final_policy: policy })
}

/// Reward of every slot combination rendered with the placeholder rationale.
pub fn enumerate_totals(policy: &SlotPolicy, gt: &Sample, reward_cfg: &RewardConfig) -> Result<Vec<(Vec<usize>, f64)>, SimError> {
    policy
        .all_choices()
        .into_iter()
        .map(|c| {
            let text = render_response(PLACEHOLDER_RATIONALE, &policy.answer_for(&c));
            let v = score_response(&parse_response(&text), gt, reward_cfg)?;
            Ok((c, v.total))
        })
        .collect()
}

/// Highest total reachable by any slot combination.
pub fn max_attainable_total(policy: &SlotPolicy, gt: &Sample, reward_cfg: &RewardConfig) -> Result<f64, SimError> {
    Ok(enumerate_totals(policy, gt, reward_cfg)?.into_iter().map(|(_, t)| t).fold(f64::NEG_INFINITY, f64::max))
}

/// Exact expected total under the policy.
pub fn expected_total(policy: &SlotPolicy, gt: &Sample, reward_cfg: &RewardConfig) -> Result<f64, SimError> {
    let probs: Vec<Vec<f64>> = (0..policy.logits.num_slots()).map(|s| policy.logits.probs(s)).collect();
    Ok(enumerate_totals(policy, gt, reward_cfg)?
        .into_iter()
        .map(|(c, t)| c.iter().enumerate().map(|(s, &k)| probs[s][k]).product::<f64>() * t)
        .sum())
}

/// Built-in toy task: a sarcastic sample whose box and keyword are both in
/// the candidate tables, alongside distractors.
pub fn toy_task() -> (Sample, CandidateTables) {
    let target = BBox::new(120, 40, 560, 800).expect("valid box");
    let gt = Sample::new("toy-0", "great service as always, only waited three hours for a cold coffee", Label::Sarcastic)
        .with_targets(vec![target], "great service");
    let tables = CandidateTables {
        boxes: vec![
            vec![],
            vec![target],
            vec![BBox::WHOLE_IMAGE],
            vec![BBox::new(600, 600, 900, 900).expect("valid box")],
        ],
        keywords: vec![String::new(), "great service".into(), "great".into(), "cold coffee".into()],
    };
    (gt, tables)
}
