mod common;

use proptest::prelude::*;

use specswarm::catalog::InstructionInstance;
use specswarm::error::BackendError;
use specswarm::fitness::*;
use specswarm::oracle::{DataEnvironment, MicroarchProfile, NoiseModel, SimBackend};

use common::*;
use EquivalenceClass::*;

fn obs(pairs: &[(EquivalenceClass, f64)]) -> FitnessObservation {
    let mut o = FitnessObservation::zero(1, true);
    for &(c, e) in pairs {
        o.excess[c] = e;
        o.fired[c] = e > 0.0;
    }
    o
}

#[test]
fn classify_examples() {
    assert_eq!(classify(&FitnessObservation::zero(1, true)), None);
    assert_eq!(classify(&obs(&[(McSmc, 5.0), (SseAvxMix, 2.0)])), Some(Classification { class: McSmc, fitness: 7.0 }));
    assert_eq!(
        classify(&obs(&[(HwAssist, 4.0), (McSmc, 4.0), (McMemoryOrdering, 1.0)])),
        Some(Classification { class: HwAssist, fitness: 9.0 })
    );
}

#[test]
fn labels_use_counter_names() {
    assert_eq!(McSmc.event_name(), "MACHINE_CLEARS.SMC");
    assert_eq!(serde_json::to_string(&SseAvxMix).unwrap(), "\"ASSISTS.SSE_AVX_MIX\"");
    for c in EquivalenceClass::ALL {
        assert_eq!(c.event_name().parse::<EquivalenceClass>().unwrap(), c);
        assert_eq!(c.label().parse::<EquivalenceClass>().unwrap(), c);
    }
    let m = ClassMap::from_fn(|c| c.index() as u64);
    let text = serde_json::to_string(&m).unwrap();
    assert!(text.contains("\"MACHINE_CLEARS.SMC\":6"));
    assert_eq!(serde_json::from_str::<ClassMap<u64>>(&text).unwrap(), m);
}

#[test]
fn empty_sequence_on_simulator_is_neutral() {
    let b = SimBackend::new(full_catalog(), MicroarchProfile::AlderLake);
    let o = evaluate(&b, &[], 100, &DataEnvironment::clean(), &BaselineProfile::zero()).unwrap();
    assert!(!o.any_fired());
    assert_eq!(classify(&o), None);
}

#[test]
fn noisy_baseline_thresholds_match_samples() {
    let b = SimBackend::new(full_catalog(), MicroarchProfile::AlderLake)
        .with_noise(NoiseModel { lambda: 2.0, seed: 31 })
        .unwrap();
    let replay = SimBackend::new(full_catalog(), MicroarchProfile::AlderLake)
        .with_noise(NoiseModel { lambda: 2.0, seed: 31 })
        .unwrap();
    let env = DataEnvironment::clean();
    let base = calibrate_baseline(&b, 40, 1, &env).unwrap();
    let samples: Vec<Vec<f64>> =
        (0..40).map(|_| replay.measure(&[], 1, &env).unwrap().counts.0.iter().map(|&x| x as f64).collect()).collect();
    for c in EquivalenceClass::ALL {
        let xs: Vec<f64> = samples.iter().map(|s| s[c.index()]).collect();
        let m = xs.iter().sum::<f64>() / 40.0;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 39.0).sqrt();
        assert!((base.mean[c] - m).abs() < 1e-12);
        assert!((base.threshold[c] - (m + 3.0 * sd)).abs() < 1e-9);
        assert!(base.threshold[c] > 0.0, "{c}");
    }
}

/// Stand-in for a hardware backend: needs 30 samples, can be told to fault.
struct Strict {
    fault: bool,
}

impl FitnessBackend for Strict {
    fn capabilities(&self) -> Capabilities {
        Capabilities { reentrant: false, microarch_profile: MicroarchProfile::AlderLake, min_calibration_samples: 30 }
    }

    fn measure(&self, seq: &[InstructionInstance], reps: u32, _env: &DataEnvironment) -> Result<Measurement, BackendError> {
        if self.fault && !seq.is_empty() {
            return Ok(Measurement::invalid());
        }
        let mut counts = ClassMap::default();
        counts[McSmc] = reps as u64 * (1 + seq.len() as u64);
        Ok(Measurement { counts, valid: true })
    }
}

#[test]
fn calibration_sample_floor() {
    let env = DataEnvironment::clean();
    let err = calibrate_baseline(&Strict { fault: false }, 0, 100, &env).unwrap_err();
    assert_eq!(err, BackendError::TooFewSamples { needed: 30, got: 0 });
    assert!(calibrate_baseline(&Strict { fault: false }, 29, 100, &env).is_err());
    let b = calibrate_baseline(&Strict { fault: false }, 30, 100, &env).unwrap();
    assert_eq!(b.mean[McSmc], 1.0);
    assert_eq!(b.threshold[McSmc], 1.0);
}

#[test]
fn faults_become_invalid_zero_observations() {
    let c = full_catalog();
    let b = Strict { fault: true };
    let base = calibrate_baseline(&b, 30, 10, &DataEnvironment::clean()).unwrap();
    let eval = Evaluator::new(&b, base, 10, DataEnvironment::clean());
    let o = eval.evaluate(&[regs(&c, "VPXOR_XMMdq_XMMdq_XMMdq", &[1, 2, 3])]);
    assert!(!o.valid);
    assert!(!o.any_fired());
    assert_eq!(fitness_of(&o), 0.0);
}

#[test]
fn excess_is_per_rep_over_baseline() {
    let c = full_catalog();
    let b = Strict { fault: false };
    let base = calibrate_baseline(&b, 30, 10, &DataEnvironment::clean()).unwrap();
    let seq = vec![regs(&c, "VPXOR_XMMdq_XMMdq_XMMdq", &[1, 2, 3]); 3];
    let o = evaluate(&b, &seq, 10, &DataEnvironment::clean(), &base).unwrap();
    assert_eq!(o.raw_counts[McSmc], 40);
    assert_eq!(o.excess[McSmc], 3.0);
    assert!(o.fired[McSmc]);
    assert_eq!(classify(&o).unwrap().class, McSmc);
}

fn arb_obs() -> impl Strategy<Value = FitnessObservation> {
    (proptest::collection::vec(0u32..6, 9), proptest::collection::vec(0u32..4, 9)).prop_map(|(e, t)| {
        let mut excess = ClassMap::default();
        let mut threshold = ClassMap::default();
        for c in EquivalenceClass::ALL {
            excess[c] = e[c.index()] as f64;
            threshold[c] = t[c.index()] as f64;
        }
        let base = BaselineProfile { threshold, ..BaselineProfile::zero() };
        let counts = ClassMap::from_fn(|c| excess[c] as u64);
        base.observe(&Measurement { counts, valid: true }, 1)
    })
}

proptest! {
    #[test]
    fn classification_follows_fired_flags(o in arb_obs()) {
        let fired: Vec<_> = o.fired_classes();
        for c in EquivalenceClass::ALL {
            prop_assert!(o.excess[c] >= 0.0);
        }
        match classify(&o) {
            None => prop_assert!(fired.is_empty()),
            Some(cl) => {
                prop_assert!(o.fired[cl.class]);
                let best = fired.iter().map(|&c| o.excess[c]).fold(f64::MIN, f64::max);
                let first = *fired.iter().find(|&&c| o.excess[c] == best).unwrap();
                prop_assert_eq!(cl.class, first);
                let sum: f64 = fired.iter().map(|&c| o.excess[c]).sum();
                prop_assert_eq!(cl.fitness, sum);
            }
        }
    }
}
