mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specswarm::catalog::{build_pool, InstructionPool};
use specswarm::encoding::{decode_sequence, encode_instance, PositionCode};
use specswarm::fitness::{BaselineProfile, EquivalenceClass, Evaluator, FitnessObservation};
use specswarm::oracle::{DataEnvironment, MicroarchProfile, SimBackend};
use specswarm::swarm::*;

use common::*;

fn sse_avx_pool() -> InstructionPool {
    build_pool(&full_catalog(), &["SSE2", "AVX"]).unwrap()
}

fn small_hp(cognitive: u32, mixed: u32) -> Hyperparameters {
    Hyperparameters { cognitive_iters: cognitive, mixed_iters: mixed, ..Default::default() }
}

#[test]
fn initial_shape_matches_parameters() {
    let pool = sse_avx_pool();
    let s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 1);
    assert_eq!(s.particles.len(), 50);
    assert!(s.particles.iter().all(|p| p.position.len() == 10));
    let hp = Hyperparameters { particles: 1, dimensions: 1, n_min: 1, ..Default::default() };
    let s = initialize_swarm_seeded(&pool, &hp, 1);
    assert_eq!(s.particles.len(), 1);
    assert_eq!(s.particles[0].position.len(), 1);
}

#[test]
fn initialization_is_seeded() {
    let pool = sse_avx_pool();
    let hp = Hyperparameters::default();
    let a = initialize_swarm_seeded(&pool, &hp, 77);
    let b = initialize_swarm_seeded(&pool, &hp, 77);
    let c = initialize_swarm_seeded(&pool, &hp, 78);
    assert_eq!(a.state_fingerprint(), b.state_fingerprint());
    assert_ne!(a.state_fingerprint(), c.state_fingerprint());
}

fn vpxor_particle(r: [u8; 3]) -> (Particle, PositionCode) {
    let cat = full_catalog();
    let code = encode_instance(&cat, &regs(&cat, "VPXOR_XMMdq_XMMdq_XMMdq", &r));
    (Particle::new(vec![code]), code)
}

#[test]
fn operand_mutation_keeps_opcode_bits() {
    let pool = sse_avx_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 2);
    for mut p in s.particles {
        let before = p.position.clone();
        assert!(!mutate_operands(&mut p, 0.0, &pool, &mut rng));
        assert_eq!(p.position, before);
        assert!(mutate_operands(&mut p, 1.0, &pool, &mut rng));
        let differing = before.iter().zip(&p.position).filter(|(a, b)| a != b).count();
        assert!(differing <= 1);
        for (a, b) in before.iter().zip(&p.position) {
            assert_eq!(a.opcode_bits(), b.opcode_bits());
            assert_eq!(a.width, b.width);
        }
    }
}

#[test]
fn operand_mutation_worked_example() {
    let cat = full_catalog();
    let vpxor = cat.find("VPXOR_XMMdq_XMMdq_XMMdq").unwrap().opcode_index as u64;
    let (mut p, code) = vpxor_particle([1, 2, 3]);
    assert_eq!(code.value, (vpxor << 12) | (1 << 8) | (2 << 4) | 3);
    let pool = InstructionPool::from_opcodes(cat.clone(), [vpxor as u32]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let target = (vpxor << 12) | (5 << 8) | (13 << 4) | 15;
    let mut found = false;
    for _ in 0..20_000 {
        mutate_operands(&mut p, 1.0, &pool, &mut rng);
        assert_eq!(p.position[0].opcode_bits(), vpxor);
        if p.position[0].value == target {
            found = true;
            break;
        }
    }
    assert!(found, "operand mutation never reached xmm5, xmm13, xmm15");
    let seq = decode_sequence(&cat, &p.position).unwrap();
    assert_eq!(cat.render(&seq[0]), "vpxor xmm5, xmm13, xmm15");
}

#[test]
fn instruction_mutation_keeps_compatible_operands() {
    let cat = full_catalog();
    let vpand = cat.find("VPAND_XMMdq_XMMdq_XMMdq").unwrap().opcode_index;
    let pool = InstructionPool::from_opcodes(cat.clone(), [vpand]).unwrap();
    let (mut p, _) = vpxor_particle([1, 2, 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let before = p.position.clone();
    assert!(!mutate_instruction(&mut p, 0.0, &pool, &mut rng));
    assert_eq!(p.position, before);
    assert!(mutate_instruction(&mut p, 1.0, &pool, &mut rng));
    let v = vpand as u64;
    assert_eq!(p.position[0].value, (v << 12) | (1 << 8) | (2 << 4) | 3);
    let seq = decode_sequence(&cat, &p.position).unwrap();
    assert_eq!(cat.render(&seq[0]), "vpand xmm1, xmm2, xmm3");
}

#[test]
fn instruction_mutation_stays_in_pool() {
    let pool = sse_avx_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 3);
    let cat = pool.catalog().clone();
    for k in 0..10_000 {
        let p = &mut s.particles[k % 50];
        mutate_instruction(p, 1.0, &pool, &mut rng);
        for inst in decode_sequence(&cat, &p.position).unwrap() {
            assert!(pool.contains(inst.opcode));
        }
    }
}

#[test]
fn crossover_copies_leader_dimension() {
    let pool = sse_avx_pool();
    let s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let leader = s.particles[0].clone();
    let mut p = s.particles[1].clone();
    let before = p.position.clone();
    assert!(!crossover_with_leader(&mut p, &leader, 0.0, &mut rng));
    assert_eq!(p.position, before);
    assert!(crossover_with_leader(&mut p, &leader, 1.0, &mut rng));
    let changed: Vec<usize> = (0..10).filter(|&d| p.position[d] != before[d]).collect();
    assert!(changed.len() <= 1);
    for d in changed {
        assert_eq!(p.position[d], leader.position[d]);
    }
    let mut me = s.particles[2].clone();
    let same = me.clone();
    for _ in 0..50 {
        crossover_with_leader(&mut me, &same, 1.0, &mut rng);
        assert_eq!(me.position, same.position);
    }
}

#[test]
fn reduction_respects_floor() {
    let pool = sse_avx_pool();
    let s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = s.particles[0].clone();
    assert!(reduce_dimension(&mut p, 1.0, 2, &mut rng));
    assert_eq!(p.position.len(), 9);
    for _ in 0..20 {
        reduce_dimension(&mut p, 1.0, 2, &mut rng);
    }
    assert_eq!(p.position.len(), 2);
    assert!(!reduce_dimension(&mut p, 1.0, 2, &mut rng));
}

#[test]
fn oracle_guided_reduction_finds_pair() {
    let cat = full_catalog();
    let backend = SimBackend::new(cat.clone(), MicroarchProfile::AlderLake);
    let eval = Evaluator::new(&backend, BaselineProfile::zero(), 1, DataEnvironment::clean());
    let base = build_pool(&cat, &["BASE"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut seq: Vec<_> = (0..8)
        .map(|_| loop {
            let i = specswarm::catalog::sample_instance(&base, &mut rng);
            if !cat.spec_of(&i).is_simd() {
                break i;
            }
        })
        .collect();
    seq.insert(2, regs(&cat, "XORPS_XMMdq_XMMdq", &[1, 2]));
    seq.insert(6, regs(&cat, "VPADDD_YMMqq_YMMqq_YMMqq", &[0, 1, 2]));
    let mut p = Particle::new(specswarm::encode_sequence(&cat, &seq));
    while p.position.len() > 2 {
        let mut trial = p.clone();
        reduce_dimension(&mut trial, 1.0, 2, &mut rng);
        let obs = eval.evaluate(&decode_sequence(&cat, &trial.position).unwrap());
        if obs.fired[EquivalenceClass::McSmc] {
            p = trial;
        }
    }
    let out = decode_sequence(&cat, &p.position).unwrap();
    let txt = cat.render_sequence(&out);
    assert_eq!(txt.trim_end(), "xorps xmm1, xmm2\nvpaddd ymm0, ymm1, ymm2");
}

fn classed(classes: &[Option<(EquivalenceClass, f64)>]) -> Vec<Particle> {
    classes
        .iter()
        .map(|c| {
            let mut p = Particle::new(vec![]);
            if let Some((cls, f)) = c {
                p.assigned_class = Some(*cls);
                p.best_fitness = *f;
            }
            p
        })
        .collect()
}

#[test]
fn subswarm_partition_examples() {
    use EquivalenceClass::*;
    let ps = classed(&[Some((McSmc, 1.0)), Some((McSmc, 2.0)), Some((FpAssist, 1.0))]);
    let subs = subswarms_of(&ps);
    let mut sizes: Vec<usize> = subs.iter().map(|s| s.members.len()).collect();
    sizes.sort();
    assert_eq!(sizes, vec![1, 2]);
    assert!(subswarms_of(&classed(&[None, None])).is_empty());
}

#[test]
fn leader_is_argmax_with_low_index_ties() {
    use EquivalenceClass::*;
    let ps = classed(&[Some((McSmc, 3.0)), Some((McSmc, 7.0)), Some((McSmc, 5.0))]);
    assert_eq!(subswarms_of(&ps)[0].leader, 1);
    let ps = classed(&[Some((McSmc, 7.0)), Some((McSmc, 7.0))]);
    assert_eq!(subswarms_of(&ps)[0].leader, 0);
}

proptest! {
    #[test]
    fn leader_matches_brute_force(fits in proptest::collection::vec((0u8..3, 0u32..20), 1..40)) {
        let classes = [EquivalenceClass::McSmc, EquivalenceClass::FpAssist, EquivalenceClass::HwAssist];
        let ps = classed(&fits.iter().map(|&(c, f)| Some((classes[c as usize], f as f64))).collect::<Vec<_>>());
        let subs = subswarms_of(&ps);
        prop_assert_eq!(subs.iter().map(|s| s.members.len()).sum::<usize>(), ps.len());
        for s in &subs {
            let best = s.members.iter().map(|&m| ps[m].best_fitness).fold(f64::MIN, f64::max);
            let want = *s.members.iter().find(|&&m| ps[m].best_fitness == best).unwrap();
            prop_assert_eq!(s.leader, want);
            prop_assert!(s.members.iter().all(|&m| ps[m].assigned_class == Some(s.class)));
        }
    }
}

fn sim_evaluator(backend: &SimBackend) -> Evaluator<'_> {
    Evaluator::new(backend, BaselineProfile::zero(), 100, DataEnvironment::clean())
}

#[test]
fn cognitive_phase_discovers_smc() {
    let pool = sse_avx_pool();
    let backend = SimBackend::new(pool.catalog().clone(), MicroarchProfile::AlderLake);
    let eval = sim_evaluator(&backend);
    let mut s = initialize_swarm_seeded(&pool, &small_hp(200, 0), 11);
    cognitive_phase(&mut s, &eval, &mut Silent, &mut RunState::default());
    assert!(s.particles.iter().any(|p| p.assigned_class == Some(EquivalenceClass::McSmc)));
    assert_eq!(s.iteration, 200);
}

#[test]
fn zero_iterations_and_zero_rates_leave_positions() {
    let pool = sse_avx_pool();
    let backend = SimBackend::new(pool.catalog().clone(), MicroarchProfile::AlderLake);
    let eval = sim_evaluator(&backend);
    let mut s = initialize_swarm_seeded(&pool, &small_hp(0, 0), 12);
    let before = s.state_fingerprint();
    cognitive_phase(&mut s, &eval, &mut Silent, &mut RunState::default());
    assert_eq!(s.state_fingerprint(), before);

    let hp = small_hp(5, 5).with_variant(0.0, 0.0);
    let mut s = initialize_swarm_seeded(&pool, &hp, 12);
    let positions: Vec<_> = s.particles.iter().map(|p| p.position.clone()).collect();
    let mut state = RunState::default();
    cognitive_phase(&mut s, &eval, &mut Silent, &mut state);
    let subs = form_subswarms(&s);
    mixed_phase(&mut s, &subs, &eval, &mut Silent, &mut state);
    assert_eq!(state.evaluations, 500);
    assert_eq!(s.particles.iter().map(|p| p.position.clone()).collect::<Vec<_>>(), positions);
}

/// Checks monotonicity, length bounds and pool closure after every iteration.
struct Invariants {
    prev_best: Vec<f64>,
    prev_class: Vec<Option<EquivalenceClass>>,
    n_min: usize,
    n: usize,
    failures: Vec<String>,
}

impl Observer for Invariants {
    fn on_iteration(&mut self, swarm: &Swarm, subs: &[SubSwarm], _phase: Phase) {
        let cat = swarm.pool.catalog();
        for (i, p) in swarm.particles.iter().enumerate() {
            if p.best_fitness < self.prev_best[i] {
                self.failures.push(format!("particle {i} best fell"));
            }
            if p.assigned_class != self.prev_class[i] && p.best_fitness <= self.prev_best[i] {
                self.failures.push(format!("particle {i} changed class without improving"));
            }
            self.prev_class[i] = p.assigned_class;
            self.prev_best[i] = p.best_fitness;
            if !(self.n_min..=self.n).contains(&p.position.len()) {
                self.failures.push(format!("particle {i} length {}", p.position.len()));
            }
            match decode_sequence(cat, &p.position) {
                Ok(seq) if seq.iter().all(|x| swarm.pool.contains(x.opcode)) => {}
                _ => self.failures.push(format!("particle {i} left the pool")),
            }
        }
        for s in subs {
            let best = s.members.iter().map(|&m| swarm.particles[m].best_fitness).fold(0.0, f64::max);
            if swarm.particles[s.leader].best_fitness != best {
                self.failures.push("leader not optimal".into());
            }
        }
    }
}

#[test]
fn invariants_hold_through_both_phases() {
    let pool = build_pool(&full_catalog(), &["SSE2", "AVX", "FMA", "AES"]).unwrap();
    let backend = SimBackend::new(pool.catalog().clone(), MicroarchProfile::AlderLake);
    let eval = Evaluator::new(&backend, BaselineProfile::zero(), 100, DataEnvironment::with_denormals([1, 2]));
    for seed in 0..4 {
        let hp = small_hp(40, 160);
        let mut s = initialize_swarm_seeded(&pool, &hp, seed);
        let mut inv =
            Invariants { prev_best: vec![0.0; 50], prev_class: vec![None; 50], n_min: hp.n_min, n: hp.dimensions, failures: vec![] };
        let mut state = RunState::default();
        cognitive_phase(&mut s, &eval, &mut inv, &mut state);
        let subs = form_subswarms(&s);
        mixed_phase(&mut s, &subs, &eval, &mut inv, &mut state);
        assert!(inv.failures.is_empty(), "seed {seed}: {:?}", &inv.failures[..inv.failures.len().min(5)]);
        assert_eq!(state.evaluations, 200 * 50);
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let pool = sse_avx_pool();
    let backend = SimBackend::new(pool.catalog().clone(), MicroarchProfile::AlderLake);
    let eval = sim_evaluator(&backend);
    struct Snap(Vec<Vec<(Vec<PositionCode>, u64, Option<EquivalenceClass>)>>);
    impl Observer for Snap {
        fn on_iteration(&mut self, swarm: &Swarm, _subs: &[SubSwarm], _phase: Phase) {
            self.0.push(swarm.state_fingerprint());
        }
    }
    let run = || {
        let mut s = initialize_swarm_seeded(&pool, &small_hp(20, 30), 99);
        let mut snap = Snap(vec![]);
        let mut st = RunState::default();
        cognitive_phase(&mut s, &eval, &mut snap, &mut st);
        let subs = form_subswarms(&s);
        mixed_phase(&mut s, &subs, &eval, &mut snap, &mut st);
        snap.0
    };
    assert_eq!(run(), run());
}

#[test]
fn budget_and_observer_stop_the_run() {
    let pool = sse_avx_pool();
    let backend = SimBackend::new(pool.catalog().clone(), MicroarchProfile::AlderLake);
    let eval = sim_evaluator(&backend);
    let mut s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 1);
    let mut st = RunState::with_budget(Some(125));
    cognitive_phase(&mut s, &eval, &mut Silent, &mut st);
    assert_eq!(st.evaluations, 125);
    assert!(st.stopped);

    struct StopAt(u64);
    impl Observer for StopAt {
        fn on_evaluation(&mut self, rec: &EvalRecord, _obs: &FitnessObservation, _s: &Swarm) -> Flow {
            if rec.evaluation + 1 >= self.0 {
                Flow::Stop
            } else {
                Flow::Continue
            }
        }
    }
    let mut s = initialize_swarm_seeded(&pool, &Hyperparameters::default(), 1);
    let mut st = RunState::default();
    cognitive_phase(&mut s, &eval, &mut StopAt(7), &mut st);
    assert_eq!(st.evaluations, 7);
}

#[test]
fn hyperparameter_validation() {
    assert!(Hyperparameters::default().validate().is_ok());
    let bad = Hyperparameters { alpha: 1.5, ..Default::default() };
    assert_eq!(bad.validate().unwrap_err().0, "alpha");
    let bad = Hyperparameters { dimensions: 1, n_min: 2, ..Default::default() };
    assert_eq!(bad.validate().unwrap_err().0, "n_min");
    let v = Hyperparameters::default().with_variant(0.1, 0.4);
    assert_eq!((v.cognitive.beta, v.mixed.gamma), (0.1, 0.4));
}
