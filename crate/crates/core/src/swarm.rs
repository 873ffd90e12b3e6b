//! Discrete particle swarm: cognitive phase, sub-swarm formation, mixed phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_instance, sample_operands, InstructionPool};
use crate::encoding::{decode_instance, decode_sequence, encode_instance, PositionCode, PositionVector};
use crate::fitness::{classify, EquivalenceClass, Evaluator, FitnessObservation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRates {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub cognitive: PhaseRates,
    pub mixed: PhaseRates,
    /// Swarm size N.
    pub particles: usize,
    /// Sequence length n.
    pub dimensions: usize,
    pub cognitive_iters: u32,
    pub mixed_iters: u32,
    pub n_min: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 1.0,
            cognitive: PhaseRates { beta: 0.4, gamma: 0.0 },
            mixed: PhaseRates { beta: 0.1, gamma: 0.4 },
            particles: 50,
            dimensions: 10,
            cognitive_iters: 200,
            mixed_iters: 800,
            n_min: 2,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (name, v) in [
            ("alpha", self.alpha),
            ("cognitive.beta", self.cognitive.beta),
            ("cognitive.gamma", self.cognitive.gamma),
            ("mixed.beta", self.mixed.beta),
            ("mixed.gamma", self.mixed.gamma),
        ] {
            if !unit(v) {
                return Err((name, format!("{v} is outside [0, 1]")));
            }
        }
        if self.particles == 0 {
            return Err(("particles", "swarm needs at least one particle".into()));
        }
        if self.n_min == 0 || self.dimensions < self.n_min {
            return Err(("n_min", format!("need dimensions ({}) >= n_min ({}) >= 1", self.dimensions, self.n_min)));
        }
        Ok(())
    }

    /// Applies a (beta, gamma) variant to both phases.
    pub fn with_variant(mut self, beta: f64, gamma: f64) -> Self {
        self.cognitive = PhaseRates { beta, gamma };
        self.mixed = PhaseRates { beta, gamma };
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: PositionVector,
    pub personal_best: PositionVector,
    pub best_fitness: f64,
    pub best_observation: Option<FitnessObservation>,
    pub last_observation: Option<FitnessObservation>,
    pub assigned_class: Option<EquivalenceClass>,
}

impl Particle {
    pub fn new(position: PositionVector) -> Self {
        Particle {
            personal_best: position.clone(),
            position,
            best_fitness: 0.0,
            best_observation: None,
            last_observation: None,
            assigned_class: None,
        }
    }

    /// Records an observation of the current position; returns true when it became the personal best.
    pub fn record(&mut self, obs: FitnessObservation) -> bool {
        let cls = classify(&obs);
        let f = cls.map_or(0.0, |c| c.fitness);
        let improved = f > self.best_fitness;
        if improved {
            self.best_fitness = f;
            self.personal_best = self.position.clone();
            self.assigned_class = cls.map(|c| c.class);
            self.best_observation = Some(obs.clone());
        }
        self.last_observation = Some(obs);
        improved
    }

    /// A particle whose position is its personal best, used as a crossover source.
    pub fn best_view(&self) -> Particle {
        let mut p = self.clone();
        p.position = self.personal_best.clone();
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSwarm {
    pub class: EquivalenceClass,
    pub members: Vec<usize>,
    pub leader: usize,
}

pub struct Swarm {
    pub particles: Vec<Particle>,
    pub hp: Hyperparameters,
    pub pool: InstructionPool,
    rng: ChaCha8Rng,
    pub iteration: u64,
}

impl Swarm {
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn decode_position(&self, p: usize) -> Vec<crate::catalog::InstructionInstance> {
        decode_sequence(self.pool.catalog(), &self.particles[p].position).expect("swarm positions are decodable")
    }

    /// Hash-free fingerprint of the full swarm state, for determinism checks.
    pub fn state_fingerprint(&self) -> Vec<(Vec<PositionCode>, u64, Option<EquivalenceClass>)> {
        self.particles
            .iter()
            .map(|p| (p.position.clone(), p.best_fitness.to_bits(), p.assigned_class))
            .collect()
    }
}

pub fn initialize_swarm(pool: &InstructionPool, hp: &Hyperparameters, mut rng: ChaCha8Rng) -> Swarm {
    let catalog = pool.catalog().clone();
    let particles = (0..hp.particles)
        .map(|_| {
            let pos: PositionVector =
                (0..hp.dimensions).map(|_| encode_instance(&catalog, &sample_instance(pool, &mut rng))).collect();
            Particle::new(pos)
        })
        .collect();
    Swarm { particles, hp: hp.clone(), pool: pool.clone(), rng, iteration: 0 }
}

pub fn initialize_swarm_seeded(pool: &InstructionPool, hp: &Hyperparameters, seed: u64) -> Swarm {
    initialize_swarm(pool, hp, ChaCha8Rng::seed_from_u64(seed))
}

// ------------------------------------------------------------------ mutation operators

fn coin<R: Rng + ?Sized>(rng: &mut R, prob: f64) -> bool {
    rng.random::<f64>() < prob
}

pub fn mutate_operands<R: Rng + ?Sized>(p: &mut Particle, prob: f64, pool: &InstructionPool, rng: &mut R) -> bool {
    if !coin(rng, prob) || p.position.is_empty() {
        return false;
    }
    let d = rng.random_range(0..p.position.len());
    let catalog = pool.catalog();
    let inst = decode_instance(catalog, p.position[d]).expect("swarm positions are decodable");
    let spec = catalog.spec_of(&inst);
    let fresh = crate::catalog::InstructionInstance { opcode: inst.opcode, operands: sample_operands(spec, rng) };
    p.position[d] = p.position[d].with_operand_bits(crate::encoding::pack_operands(catalog, &fresh));
    true
}

pub fn mutate_instruction<R: Rng + ?Sized>(p: &mut Particle, prob: f64, pool: &InstructionPool, rng: &mut R) -> bool {
    if !coin(rng, prob) || p.position.is_empty() {
        return false;
    }
    let d = rng.random_range(0..p.position.len());
    let catalog = pool.catalog();
    let old = decode_instance(catalog, p.position[d]).expect("swarm positions are decodable");
    let old_spec = catalog.spec_of(&old);
    let new_spec = pool.sample_spec(rng);
    let operands =
        if new_spec.layout_compatible(old_spec) { old.operands } else { sample_operands(new_spec, rng) };
    let inst = crate::catalog::InstructionInstance { opcode: new_spec.opcode_index, operands };
    p.position[d] = encode_instance(catalog, &inst);
    true
}

pub fn crossover_with_leader<R: Rng + ?Sized>(p: &mut Particle, leader: &Particle, prob: f64, rng: &mut R) -> bool {
    if !coin(rng, prob) || p.position.is_empty() || leader.position.is_empty() {
        return false;
    }
    let d2 = rng.random_range(0..p.position.len());
    p.position[d2] = leader.position[d2.min(leader.position.len() - 1)];
    true
}

pub fn reduce_dimension<R: Rng + ?Sized>(p: &mut Particle, prob: f64, n_min: usize, rng: &mut R) -> bool {
    if !coin(rng, prob) || p.position.len() <= n_min {
        return false;
    }
    let d = rng.random_range(0..p.position.len());
    p.position.remove(d);
    true
}

// ------------------------------------------------------------------ sub-swarms

pub fn select_leader(sub: &SubSwarm, swarm: &Swarm) -> usize {
    select_leader_by(&sub.members, |i| swarm.particles[i].best_fitness)
}

fn select_leader_by(members: &[usize], fitness: impl Fn(usize) -> f64) -> usize {
    let mut best = members[0];
    for &m in &members[1..] {
        let (fm, fb) = (fitness(m), fitness(best));
        if fm > fb || (fm == fb && m < best) {
            best = m;
        }
    }
    best
}

pub fn form_subswarms(swarm: &Swarm) -> Vec<SubSwarm> {
    subswarms_of(&swarm.particles)
}

pub fn subswarms_of(particles: &[Particle]) -> Vec<SubSwarm> {
    let mut groups: [Vec<usize>; 9] = Default::default();
    for (i, p) in particles.iter().enumerate() {
        if let Some(c) = p.assigned_class {
            groups[c.index()].push(i);
        }
    }
    EquivalenceClass::ALL
        .into_iter()
        .zip(groups)
        .filter(|(_, m)| !m.is_empty())
        .map(|(class, members)| {
            let leader = select_leader_by(&members, |i| particles[i].best_fitness);
            SubSwarm { class, members, leader }
        })
        .collect()
}

// ------------------------------------------------------------------ phases

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cognitive,
    Mixed,
}

/// One line of the evaluation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub evaluation: u64,
    pub iteration: u64,
    pub particle: usize,
    pub phase: Phase,
    pub codes: Vec<PositionCode>,
    pub fired: Vec<EquivalenceClass>,
    pub class: Option<EquivalenceClass>,
    pub fitness: f64,
    pub valid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

pub trait Observer {
    fn on_evaluation(&mut self, _rec: &EvalRecord, _obs: &FitnessObservation, _swarm: &Swarm) -> Flow {
        Flow::Continue
    }
    fn on_iteration(&mut self, _swarm: &Swarm, _subswarms: &[SubSwarm], _phase: Phase) {}
}

/// Observer that ignores everything.
pub struct Silent;
impl Observer for Silent {}

/// Evaluation counter and stop state shared across phases.
#[derive(Clone, Debug, Default)]
pub struct RunState {
    pub evaluations: u64,
    pub budget: Option<u64>,
    pub stopped: bool,
}

impl RunState {
    pub fn with_budget(budget: Option<u64>) -> Self {
        RunState { budget, ..Default::default() }
    }

    fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.evaluations))
    }
}

fn evaluate_all(swarm: &Swarm, evaluator: &Evaluator, count: usize) -> Vec<FitnessObservation> {
    let catalog = swarm.pool.catalog();
    let eval_one = |p: &Particle| match decode_sequence(catalog, &p.position) {
        Ok(seq) => evaluator.evaluate(&seq),
        Err(_) => FitnessObservation::zero(evaluator.reps, false),
    };
    let ps = &swarm.particles[..count];
    if evaluator.reentrant() {
        ps.par_iter().map(eval_one).collect()
    } else {
        ps.iter().map(eval_one).collect()
    }
}

/// Evaluates the first `count` particles and merges results in index order.
fn evaluate_and_merge(
    swarm: &mut Swarm,
    evaluator: &Evaluator,
    observer: &mut dyn Observer,
    state: &mut RunState,
    phase: Phase,
) {
    let count = match state.remaining() {
        Some(r) => (r as usize).min(swarm.particles.len()),
        None => swarm.particles.len(),
    };
    let observations = evaluate_all(swarm, evaluator, count);
    for (i, obs) in observations.into_iter().enumerate() {
        let cls = classify(&obs);
        let rec = EvalRecord {
            evaluation: state.evaluations,
            iteration: swarm.iteration,
            particle: i,
            phase,
            codes: swarm.particles[i].position.clone(),
            fired: obs.fired_classes(),
            class: cls.map(|c| c.class),
            fitness: cls.map_or(0.0, |c| c.fitness),
            valid: obs.valid,
        };
        swarm.particles[i].record(obs.clone());
        state.evaluations += 1;
        if observer.on_evaluation(&rec, &obs, swarm) == Flow::Stop {
            state.stopped = true;
            return;
        }
    }
    if state.remaining() == Some(0) {
        state.stopped = true;
    }
}

pub fn cognitive_phase(swarm: &mut Swarm, evaluator: &Evaluator, observer: &mut dyn Observer, state: &mut RunState) {
    let beta = swarm.hp.cognitive.beta;
    for _ in 0..swarm.hp.cognitive_iters {
        if state.stopped {
            return;
        }
        let Swarm { particles, pool, rng, .. } = swarm;
        for p in particles.iter_mut() {
            mutate_instruction(p, beta, pool, rng);
            mutate_operands(p, beta, pool, rng);
        }
        evaluate_and_merge(swarm, evaluator, observer, state, Phase::Cognitive);
        swarm.iteration += 1;
        observer.on_iteration(swarm, &form_subswarms(swarm), Phase::Cognitive);
    }
}

pub fn mixed_phase(
    swarm: &mut Swarm,
    initial: &[SubSwarm],
    evaluator: &Evaluator,
    observer: &mut dyn Observer,
    state: &mut RunState,
) {
    let PhaseRates { beta, gamma } = swarm.hp.mixed;
    let n_min = swarm.hp.n_min;
    let mut subs = initial.to_vec();
    for _ in 0..swarm.hp.mixed_iters {
        if state.stopped {
            return;
        }
        let mut membership: Vec<Option<usize>> = vec![None; swarm.particles.len()];
        for (k, s) in subs.iter().enumerate() {
            for &m in &s.members {
                membership[m] = Some(k);
            }
        }
        let leaders: Vec<Particle> = subs.iter().map(|s| swarm.particles[s.leader].best_view()).collect();
        let Swarm { particles, pool, rng, .. } = swarm;
        for (i, p) in particles.iter_mut().enumerate() {
            mutate_instruction(p, beta, pool, rng);
            mutate_operands(p, beta, pool, rng);
            if let Some(k) = membership[i] {
                crossover_with_leader(p, &leaders[k], gamma, rng);
                reduce_dimension(p, beta, n_min, rng);
            }
        }
        evaluate_and_merge(swarm, evaluator, observer, state, Phase::Mixed);
        swarm.iteration += 1;
        // migration and late joiners take effect here
        subs = form_subswarms(swarm);
        observer.on_iteration(swarm, &subs, Phase::Mixed);
    }
}
