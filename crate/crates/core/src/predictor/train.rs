use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, EnvState, DEFAULT_RADIUS};
use crate::error::{Error, Result};
use crate::kv::{join, parse_list, parse_value, KvMap};
use crate::policy::{best_action, GoalVector, HorizonWeights};
use crate::seed;

use super::mlp::Activations;
use super::net::{Predictions, PredictorNet, Workspace};
use super::replay::{episode_samples, CompactObservation, ExperienceSample, ReplayBuffer};

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Steps over which epsilon anneals linearly; `None` uses half of the
    /// planned training steps.
    pub decay_steps: Option<u64>,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64, decay_steps: u64) -> f64 {
        if decay_steps == 0 || step >= decay_steps {
            return self.end;
        }
        let frac = step as f64 / decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub offsets: Vec<u32>,
    pub hidden: Vec<usize>,
    pub radius: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub epsilon: EpsilonSchedule,
    pub training_episodes: usize,
    /// Environment steps between gradient updates.
    pub train_interval: u64,
    pub episodes_per_epoch: usize,
    /// Size of the frozen held-out batch whose loss is logged each epoch.
    pub heldout_samples: usize,
    /// Offset weighting used by the greedy part of the behaviour policy.
    pub horizon: Vec<f64>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            offsets: vec![1, 2, 4, 8, 16, 32],
            hidden: vec![128, 128],
            radius: DEFAULT_RADIUS,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 64,
            replay_capacity: 100_000,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.1,
                decay_steps: None,
            },
            training_episodes: 2000,
            train_interval: 4,
            episodes_per_epoch: 100,
            heldout_samples: 1024,
            horizon: vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0],
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() || self.offsets[0] == 0 || self.offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "offsets must be positive and strictly increasing, got {:?}",
                self.offsets
            )));
        }
        if self.horizon.len() != self.offsets.len() {
            return Err(Error::Config(format!(
                "{} horizon weights for {} offsets",
                self.horizon.len(),
                self.offsets.len()
            )));
        }
        HorizonWeights::new(self.horizon.clone())?;
        if self.batch_size == 0 || self.train_interval == 0 || self.episodes_per_epoch == 0 {
            return Err(Error::Config(
                "batch_size, train_interval and episodes_per_epoch must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("learning_rate must be > 0 and momentum in [0, 1)".into()));
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(Error::Config("epsilon values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn horizon_weights(&self) -> Result<HorizonWeights> {
        HorizonWeights::new(self.horizon.clone())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("offsets", join(&self.offsets));
        kv.set("hidden", join(&self.hidden));
        kv.set("radius", self.radius);
        kv.set("optimizer", self.optimizer.name());
        kv.set("learning_rate", self.learning_rate);
        kv.set("momentum", self.momentum);
        kv.set("batch_size", self.batch_size);
        kv.set("replay_capacity", self.replay_capacity);
        kv.set("epsilon_start", self.epsilon.start);
        kv.set("epsilon_end", self.epsilon.end);
        kv.set(
            "epsilon_decay_steps",
            self.epsilon
                .decay_steps
                .map_or_else(|| "auto".to_string(), |s| s.to_string()),
        );
        kv.set("training_episodes", self.training_episodes);
        kv.set("train_interval", self.train_interval);
        kv.set("episodes_per_epoch", self.episodes_per_epoch);
        kv.set("heldout_samples", self.heldout_samples);
        kv.set("horizon", join(&self.horizon));
        kv
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "offsets" => self.offsets = parse_list(key, value)?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "radius" => self.radius = parse_value(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "replay_capacity" => self.replay_capacity = parse_value(key, value)?,
            "epsilon_start" => self.epsilon.start = parse_value(key, value)?,
            "epsilon_end" => self.epsilon.end = parse_value(key, value)?,
            "epsilon_decay_steps" => {
                self.epsilon.decay_steps = match value {
                    "auto" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "training_episodes" => self.training_episodes = parse_value(key, value)?,
            "train_interval" => self.train_interval = parse_value(key, value)?,
            "episodes_per_epoch" => self.episodes_per_epoch = parse_value(key, value)?,
            "heldout_samples" => self.heldout_samples = parse_value(key, value)?,
            "horizon" => self.horizon = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown predictor key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let mut cfg = PredictorConfig::default();
        for (k, v) in kv.iter() {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Stochastic gradient descent with classical momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64, params: usize) -> Self {
        Sgd {
            learning_rate,
            momentum,
            velocity: vec![0.0; params],
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v - self.learning_rate * g;
            *p += *v;
        }
    }
}

/// Adam with the usual bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, params: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; params],
            v: vec![0.0; params],
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl Optimizer {
    pub fn for_config(config: &PredictorConfig, params: usize) -> Self {
        match config.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(config.learning_rate, config.momentum, params)),
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(config.learning_rate, params)),
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd(o) => o.apply(params, grad),
            Optimizer::Adam(o) => o.apply(params, grad),
        }
    }
}

impl From<Sgd> for Optimizer {
    fn from(o: Sgd) -> Self {
        Optimizer::Sgd(o)
    }
}

/// Scratch space for loss and gradient evaluation.
#[derive(Debug, Default)]
pub struct TrainScratch {
    input: Vec<f64>,
    obs: Vec<f64>,
    acts: Activations,
    out_grad: Vec<f64>,
    back: (Vec<f64>, Vec<f64>),
    grad: Vec<f64>,
}

impl TrainScratch {
    /// Parameter gradient from the last `batch_loss` call with `with_grad`.
    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }
}

/// Mean squared error over the valid `(offset, measurement)` targets of the
/// taken action, and optionally its gradient accumulated into `scratch`.
pub fn batch_loss(
    net: &PredictorNet,
    batch: &[&ExperienceSample],
    scratch: &mut TrainScratch,
    with_grad: bool,
) -> Result<f64> {
    let count: usize = batch.iter().map(|s| 3 * s.valid.iter().filter(|&&v| v).count()).sum();
    if batch.is_empty() || count == 0 {
        return Err(Error::EmptyTargets);
    }
    let k = net.offsets().len();
    let block = k * 3;
    let n_out = PredictorNet::output_len_for(k);
    if with_grad {
        scratch.grad.clear();
        scratch.grad.resize(net.mlp().params().len(), 0.0);
    }
    let norm = count as f64;
    let mut total = 0.0;
    for s in batch {
        if s.targets.len() != block || s.valid.len() != k {
            return Err(Error::Dimension {
                expected: block,
                actual: s.targets.len(),
            });
        }
        s.observation.expand_into(s.measurements, &mut scratch.obs);
        PredictorNet::encode_input(&scratch.obs, s.measurements, &s.goal, &mut scratch.input);
        net.mlp().forward(&scratch.input, &mut scratch.acts)?;
        let out = scratch.acts.output();
        let base = s.action.index() * block;
        scratch.out_grad.clear();
        scratch.out_grad.resize(n_out, 0.0);
        for (kk, _) in s.valid.iter().enumerate().filter(|(_, &v)| v) {
            for j in 0..3 {
                let idx = base + kk * 3 + j;
                let diff = out[idx] - s.targets[kk * 3 + j];
                total += diff * diff;
                scratch.out_grad[idx] = 2.0 * diff / norm;
            }
        }
        if with_grad {
            net.mlp()
                .backward(&scratch.acts, &scratch.out_grad, &mut scratch.grad, &mut scratch.back);
        }
    }
    Ok(total / norm)
}

/// One gradient-descent update; returns the loss before the update.
pub fn train_step(
    net: &mut PredictorNet,
    batch: &[&ExperienceSample],
    opt: &mut Optimizer,
    scratch: &mut TrainScratch,
) -> Result<f64> {
    let loss = batch_loss(net, batch, scratch, true)?;
    opt.apply(net.mlp_mut().params_mut(), &scratch.grad);
    Ok(loss)
}

/// Uniform goal in `[-1, 1]^3`.
pub fn sample_goal<R: Rng>(rng: &mut R) -> GoalVector {
    GoalVector::clamped(std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)))
}

/// Epsilon-greedy choice: a uniformly random action with probability
/// `epsilon`, otherwise `greedy()`.
pub fn epsilon_greedy<R: Rng>(rng: &mut R, epsilon: f64, greedy: impl FnOnce() -> Result<Action>) -> Result<Action> {
    if rng.gen::<f64>() < epsilon {
        Ok(Action::ALL[rng.gen_range(0..Action::COUNT)])
    } else {
        greedy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub loss: f64,
    pub epsilon: f64,
}

/// Held-out loss per epoch; row 0 is the untrained network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<EpochRow>,
    pub episodes: usize,
    pub env_steps: u64,
    pub updates: u64,
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss,epsilon")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.epoch, r.loss, r.epsilon)?;
        }
        Ok(())
    }
}

struct Rollout {
    samples: Vec<ExperienceSample>,
    steps: u64,
}

/// Plays one episode under a fixed goal, choosing actions epsilon-greedily
/// with respect to `net`.
fn rollout(
    mut env: EnvState,
    net: &PredictorNet,
    goal: GoalVector,
    horizon: &HorizonWeights,
    mut epsilon_at: impl FnMut(u64) -> f64,
    rng: &mut ChaCha8Rng,
    mut on_step: impl FnMut(&mut ChaCha8Rng, u64) -> Result<()>,
) -> Result<Rollout> {
    let radius = net.radius();
    let mut ws = Workspace::default();
    let mut steps = Vec::new();
    let mut history = vec![env.measurements()];
    let mut t = 0u64;
    while !env.is_done() {
        let obs = env.observe(radius);
        let m = env.measurements();
        let eps = epsilon_at(t);
        let action = epsilon_greedy(rng, eps, || {
            let pred: Predictions = net.forward_with(&obs, m, &goal, &mut ws)?;
            Ok(best_action(&pred, &goal, horizon))
        })?;
        let out = env.step(action)?;
        steps.push((CompactObservation::pack(&obs), action));
        history.push(out.measurements);
        t += 1;
        on_step(rng, t)?;
    }
    Ok(Rollout {
        samples: episode_samples(steps, &history, goal, net.offsets()),
        steps: t,
    })
}

/// Trains a predictor from scratch on episodes produced by `factory`.
///
/// Each episode draws a fresh goal uniformly from `[-1, 1]^3` and keeps it
/// for the whole episode. Samples enter a replay buffer when their episode
/// ends; every `train_interval` environment steps one minibatch update runs.
/// A held-out set collected by a uniformly random policy is scored at the
/// end of each epoch.
pub fn collect_and_train<F>(factory: F, config: &PredictorConfig, seed: u64) -> Result<(PredictorNet, TrainingLog)>
where
    F: Fn(u64) -> Result<EnvState>,
{
    config.validate()?;
    let horizon = config.horizon_weights()?;
    let mut net = PredictorNet::new(
        &config.offsets,
        config.radius,
        &config.hidden,
        &mut seed::rng(seed::derive(seed, "init", 0)),
    )?;

    let heldout = heldout_set(&factory, &net, config, seed)?;
    let heldout_refs: Vec<&ExperienceSample> = heldout.iter().collect();
    let mut scratch = TrainScratch::default();
    let mut opt = Optimizer::for_config(config, net.mlp().params().len());
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let mut batch_rng = seed::rng(seed::derive(seed, "batches", 0));
    let mut log = TrainingLog::default();

    let probe = factory(seed::derive(seed, "episode", 0))?;
    let planned = config.training_episodes as u64 * u64::from(probe.config().episode_length);
    let decay = config.epsilon.decay_steps.unwrap_or(planned / 2);
    drop(probe);

    log.rows.push(EpochRow {
        epoch: 0,
        loss: batch_loss(&net, &heldout_refs, &mut scratch, false)?,
        epsilon: config.epsilon.value(0, decay),
    });

    let mut global = 0u64;
    for ep in 0..config.training_episodes {
        let env = factory(seed::derive(seed, "episode", ep as u64))?;
        let goal = sample_goal(&mut seed::rng(seed::derive(seed, "goal", ep as u64)));
        let mut act_rng = seed::rng(seed::derive(seed, "act", ep as u64));
        let start = global;
        let mut pending_updates = 0u64;
        let rollout = rollout(
            env,
            &net,
            goal,
            &horizon,
            |t| config.epsilon.value(start + t, decay),
            &mut act_rng,
            |_, t| {
                if (start + t).is_multiple_of(config.train_interval) {
                    pending_updates += 1;
                }
                Ok(())
            },
        )?;
        global += rollout.steps;
        log.env_steps = global;
        buffer.extend(rollout.samples);
        if buffer.len() >= config.batch_size {
            for _ in 0..pending_updates {
                let batch = buffer.sample(config.batch_size, &mut batch_rng);
                if batch_loss(&net, &batch, &mut scratch, true).is_ok() {
                    opt.apply(net.mlp_mut().params_mut(), &scratch.grad);
                    log.updates += 1;
                }
            }
        }
        log.episodes = ep + 1;
        if (ep + 1) % config.episodes_per_epoch == 0 || ep + 1 == config.training_episodes {
            log.rows.push(EpochRow {
                epoch: log.rows.len(),
                loss: batch_loss(&net, &heldout_refs, &mut scratch, false)?,
                epsilon: config.epsilon.value(global, decay),
            });
        }
    }
    Ok((net, log))
}

fn heldout_set<F>(factory: &F, net: &PredictorNet, config: &PredictorConfig, seed: u64) -> Result<Vec<ExperienceSample>>
where
    F: Fn(u64) -> Result<EnvState>,
{
    let horizon = config.horizon_weights()?;
    let mut pool = Vec::new();
    let mut ep = 0u64;
    let want = config.heldout_samples.max(1);
    while pool.len() < want * 4 && ep < 1000 {
        let env = factory(seed::derive(seed, "heldout-episode", ep))?;
        let goal = sample_goal(&mut seed::rng(seed::derive(seed, "heldout-goal", ep)));
        let mut rng = seed::rng(seed::derive(seed, "heldout-act", ep));
        let r = rollout(env, net, goal, &horizon, |_| 1.0, &mut rng, |_, _| Ok(()))?;
        pool.extend(r.samples.into_iter().filter(|s| s.valid.iter().any(|&v| v)));
        ep += 1;
    }
    if pool.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let mut rng = seed::rng(seed::derive(seed, "heldout-pick", 0));
    let picked = rand::seq::index::sample(&mut rng, pool.len(), want.min(pool.len()));
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}
