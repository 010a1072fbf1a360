use std::collections::VecDeque;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::encoder::Encoder;
use super::network::QNetwork;
use super::policy::sample_action;
use crate::corpus::{reannotate, AnnotatedQuestion};
use crate::error::{Error, Result};
use crate::eval::reciprocal_rank;
use crate::kg::KnowledgeGraph;
use crate::qa::{exchanges, ConvQa, Exchange, RankedAnswerList};
use crate::reformulator::Generator;
use crate::taxonomy::{valid_actions, ActionMask, Category};
use crate::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub h: usize,
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    /// Treat every transition as terminal (TD target = reward).
    pub terminal_after_one_step: bool,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            gamma: 1.0,
            tau: 0.3,
            batch_size: 10,
            epochs: 5,
            h: 128,
            d: 256,
            k: 5,
            seed: 0,
            terminal_after_one_step: false,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be > 0, got {}", self.tau));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("h", self.h),
            ("k", self.k),
        ] {
            if v == 0 {
                return fail(format!("{name} must be > 0"));
            }
        }
        if self.d < super::encoder::MIN_DIM {
            return fail(format!("d must be >= {}, got {}", super::encoder::MIN_DIM, self.d));
        }
        Ok(())
    }

    pub fn queue_capacity(&self) -> usize {
        4 * self.batch_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub s: Vec<f64>,
    pub a: Category,
    pub s_next: Vec<f64>,
    pub next_mask: ActionMask,
    pub r: f64,
    pub terminal: bool,
}

/// Bounded FIFO of experiences; the oldest entry is dropped on overflow.
#[derive(Debug, Clone)]
pub struct ExperienceQueue {
    items: VecDeque<Experience>,
    capacity: usize,
}

impl ExperienceQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Removes exactly `n` oldest experiences, or none if fewer are queued.
    pub fn pop_batch(&mut self, n: usize) -> Option<Vec<Experience>> {
        (self.items.len() >= n).then(|| self.items.drain(..n).collect())
    }
}

/// `r + γ · max over valid a′ of Q(s′, a′)`, or `r` for terminal transitions.
pub fn td_targets(batch: &[Experience], net: &QNetwork, gamma: f64, terminal_after_one_step: bool) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    batch
        .iter()
        .map(|e| {
            if terminal_after_one_step || e.terminal || gamma == 0.0 {
                return Ok(e.r);
            }
            let q = net.q_values(&e.s_next, &e.next_mask)?;
            let best = e
                .next_mask
                .valid_categories()
                .map(|c| q[c.index()])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(e.r + gamma * best)
        })
        .collect()
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s_next: Vec<f64>,
    pub next_mask: ActionMask,
    pub r: f64,
    pub terminal: bool,
}

/// A sequence of start states visited once per epoch.
pub trait Environment {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn observe(&mut self, index: usize) -> Result<(Vec<f64>, ActionMask)>;
    fn step(&mut self, index: usize, action: Category, rng: &mut SeededRng) -> Result<Transition>;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    pub steps: usize,
    pub updates: usize,
    pub losses: Vec<f64>,
    pub rewards: Vec<f64>,
}

/// Deep Q-learning over `env`: Boltzmann exploration, FIFO experience
/// queue, one gradient step per full batch.
pub fn train_dqn<E: Environment + ?Sized>(
    env: &mut E,
    net: &mut QNetwork,
    cfg: &DqnConfig,
    rng: &mut SeededRng,
) -> Result<TrainStats> {
    cfg.validate()?;
    let mut queue = ExperienceQueue::new(cfg.queue_capacity());
    let mut stats = TrainStats::default();
    for _ in 0..cfg.epochs {
        for i in 0..env.len() {
            let (s, mask) = env.observe(i)?;
            let q = net.q_values(&s, &mask)?;
            let a = sample_action(&q, &mask, cfg.tau, rng)?;
            let t = env.step(i, a, rng)?;
            stats.steps += 1;
            stats.rewards.push(t.r);
            queue.push(Experience {
                s,
                a,
                s_next: t.s_next,
                next_mask: t.next_mask,
                r: t.r,
                terminal: t.terminal,
            });
            if let Some(batch) = queue.pop_batch(cfg.batch_size) {
                let targets = td_targets(&batch, net, cfg.gamma, cfg.terminal_after_one_step)?;
                let pairs: Vec<(&[f64], usize)> = batch.iter().map(|e| (e.s.as_slice(), e.a.index())).collect();
                stats.losses.push(net.update(&pairs, &targets, cfg.alpha)?);
                stats.updates += 1;
            }
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Gain in reciprocal rank of the gold answer.
    #[default]
    Extrinsic,
    /// Gain in the model's own top-1 probability.
    Intrinsic,
}

struct Cached {
    state: Vec<f64>,
    mask: ActionMask,
    history: Vec<Exchange>,
    baseline: Option<RankedAnswerList>,
}

/// Dev questions as an environment whose reward compares QA answers to a
/// reformulation against answers to the original question.
pub struct QaEnvironment<'a, Q: ?Sized, G: ?Sized, En: ?Sized> {
    kg: &'a KnowledgeGraph,
    questions: &'a [AnnotatedQuestion],
    qa: &'a Q,
    generator: &'a G,
    encoder: &'a En,
    reward: RewardMode,
    cache: Vec<Option<Cached>>,
}

impl<'a, Q, G, En> QaEnvironment<'a, Q, G, En>
where
    Q: ConvQa + ?Sized,
    G: Generator + ?Sized,
    En: Encoder + ?Sized,
{
    pub fn new(
        kg: &'a KnowledgeGraph,
        questions: &'a [AnnotatedQuestion],
        qa: &'a Q,
        generator: &'a G,
        encoder: &'a En,
        reward: RewardMode,
    ) -> Self {
        Self {
            kg,
            questions,
            qa,
            generator,
            encoder,
            reward,
            cache: questions.iter().map(|_| None).collect(),
        }
    }

    fn cached(&mut self, i: usize) -> &mut Cached {
        let aq = &self.questions[i];
        let (kg, encoder) = (self.kg, self.encoder);
        self.cache[i].get_or_insert_with(|| Cached {
            state: encoder.encode_annotated(aq),
            mask: valid_actions(aq, kg),
            history: exchanges(aq),
            baseline: None,
        })
    }
}

impl<Q, G, En> Environment for QaEnvironment<'_, Q, G, En>
where
    Q: ConvQa + ?Sized,
    G: Generator + ?Sized,
    En: Encoder + ?Sized,
{
    fn len(&self) -> usize {
        self.questions.len()
    }

    fn observe(&mut self, index: usize) -> Result<(Vec<f64>, ActionMask)> {
        let c = self.cached(index);
        Ok((c.state.clone(), c.mask))
    }

    fn step(&mut self, index: usize, action: Category, rng: &mut SeededRng) -> Result<Transition> {
        let aq = &self.questions[index];
        let reform = self.generator.generate(aq, action, rng).ok_or_else(|| {
            Error::Contract(format!(
                "generator produced nothing for valid category {action} on {}#{}: `{}`",
                aq.conversation_id,
                aq.turn_index,
                aq.text()
            ))
        })?;
        let next = reannotate(self.kg, aq, reform.tokens);
        let s_next = self.encoder.encode_annotated(&next);
        let next_mask = valid_actions(&next, self.kg);
        let (qa, reward_mode) = (self.qa, self.reward);
        let cached = self.cached(index);
        if cached.baseline.is_none() {
            cached.baseline = Some(qa.answer(&cached.history, &aq.question)?);
        }
        let baseline = cached.baseline.as_ref().expect("just filled");
        let answered = qa.answer(&cached.history, &next.question)?;
        let r = match reward_mode {
            RewardMode::Extrinsic => {
                reciprocal_rank(&answered, &aq.gold_answers)? - reciprocal_rank(baseline, &aq.gold_answers)?
            }
            RewardMode::Intrinsic => answered.top1_probability() - baseline.top1_probability(),
        };
        Ok(Transition {
            s_next,
            next_mask,
            r,
            terminal: false,
        })
    }
}

/// Trains a freshly initialised selector on annotated dev questions.
pub fn train_rcs<Q, G, En>(
    questions: &[AnnotatedQuestion],
    kg: &KnowledgeGraph,
    qa: &Q,
    generator: &G,
    encoder: &En,
    reward: RewardMode,
    cfg: &DqnConfig,
) -> Result<(QNetwork, TrainStats)>
where
    Q: ConvQa + ?Sized,
    G: Generator + ?Sized,
    En: Encoder + ?Sized,
{
    cfg.validate()?;
    if encoder.dim() != cfg.d {
        return Err(Error::Validation(format!(
            "encoder dimension {} differs from configured d = {}",
            encoder.dim(),
            cfg.d
        )));
    }
    let mut rng = SeededRng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::random(cfg.d, cfg.h, &mut rng)?;
    let mut env = QaEnvironment::new(kg, questions, qa, generator, encoder, reward);
    let stats = train_dqn(&mut env, &mut net, cfg, &mut rng)?;
    Ok((net, stats))
}
