//! End-to-end campaigns: config, phases, minimization, reports.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::catalog::{build_pool, load_catalog, Catalog, InstructionInstance};
use crate::encoding::{decode_sequence, encode_sequence, PositionCode};
use crate::error::{BackendError, CampaignError};
use crate::fitness::{calibrate_baseline_k, BaselineProfile, EquivalenceClass, Evaluator, FitnessBackend, FitnessObservation};
use crate::hw::{emit_kernel, CounterMap, HwBackend, HwConfig};
use crate::oracle::{DataEnvironment, MicroarchProfile, NoiseModel, RuleTable, RuleTrace, SimBackend};
use crate::swarm::{
    cognitive_phase, form_subswarms, initialize_swarm_seeded, mixed_phase, EvalRecord, Flow, Hyperparameters, Observer,
    Phase, RunState, SubSwarm, Swarm,
};

// ------------------------------------------------------------------ config

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Sim,
    Hw,
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sim" => Ok(BackendKind::Sim),
            "hw" => Ok(BackendKind::Hw),
            _ => Err(format!("unknown backend `{s}` (expected sim or hw)")),
        }
    }
}

/// The six (beta, gamma) variants of the ablation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "b1g0")]
    B1G0,
    #[serde(rename = "b04g0")]
    B04G0,
    #[serde(rename = "b01g0")]
    B01G0,
    #[serde(rename = "b01g01")]
    B01G01,
    #[serde(rename = "b01g04")]
    B01G04,
    #[serde(rename = "b0g1")]
    B0G1,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::B1G0, Preset::B04G0, Preset::B01G0, Preset::B01G01, Preset::B01G04, Preset::B0G1];

    pub fn name(self) -> &'static str {
        match self {
            Preset::B1G0 => "b1g0",
            Preset::B04G0 => "b04g0",
            Preset::B01G0 => "b01g0",
            Preset::B01G01 => "b01g01",
            Preset::B01G04 => "b01g04",
            Preset::B0G1 => "b0g1",
        }
    }

    /// (beta, gamma)
    pub fn rates(self) -> (f64, f64) {
        match self {
            Preset::B1G0 => (1.0, 0.0),
            Preset::B04G0 => (0.4, 0.0),
            Preset::B01G0 => (0.1, 0.0),
            Preset::B01G01 => (0.1, 0.1),
            Preset::B01G04 => (0.1, 0.4),
            Preset::B0G1 => (0.0, 1.0),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected one of b1g0, b04g0, b01g0, b01g01, b01g04, b0g1)"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    /// Evaluation budget; the primary stop criterion.
    pub max_evaluations: Option<u64>,
    /// Stop once every listed class has been hit.
    pub until: Vec<EquivalenceClass>,
    /// Wall-clock limit in seconds.
    pub max_seconds: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub samples: usize,
    pub k: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { samples: 30, k: crate::fitness::DEFAULT_K }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub lambda: f64,
    /// Defaults to a value derived from the campaign seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HwSection {
    pub core: Option<usize>,
    pub timeout_ms: u64,
    pub counter_map: Option<PathBuf>,
    /// Keep every emitted kernel under `<output_dir>/kernels`.
    pub audit: bool,
}

impl Default for HwSection {
    fn default() -> Self {
        HwSection { core: None, timeout_ms: 2000, counter_map: None, audit: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub catalog: PathBuf,
    pub extensions: Vec<String>,
    pub backend: BackendKind,
    /// Simulated microarchitecture; ignored in favour of detection on hardware.
    pub profile: Option<MicroarchProfile>,
    pub seed: u64,
    pub reps: u32,
    pub preset: Option<Preset>,
    pub output_dir: Option<PathBuf>,
    pub swarm: Hyperparameters,
    pub env: DataEnvironment,
    pub noise: Option<NoiseConfig>,
    pub stop: StopConfig,
    pub baseline: BaselineConfig,
    pub hw: HwSection,
    /// Rule table override (TOML).
    pub rules: Option<PathBuf>,
    pub minimize: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            catalog: PathBuf::from("data/instructions.xml"),
            extensions: Vec::new(),
            backend: BackendKind::Sim,
            profile: None,
            seed: 0,
            reps: 100,
            preset: None,
            output_dir: None,
            swarm: Hyperparameters::default(),
            env: DataEnvironment::default(),
            noise: None,
            stop: StopConfig::default(),
            baseline: BaselineConfig::default(),
            hw: HwSection::default(),
            rules: None,
            minimize: true,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        toml::from_str(text).map_err(|e| CampaignError::config("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CampaignError::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative paths in a config file are relative to the file
        if let Some(dir) = path.parent() {
            for p in [Some(&mut cfg.catalog), cfg.rules.as_mut(), cfg.hw.counter_map.as_mut()].into_iter().flatten() {
                if p.is_relative() && !p.exists() {
                    let joined = dir.join(&*p);
                    if joined.exists() {
                        *p = joined;
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// Hyperparameters after the preset, if any, is applied.
    pub fn effective_hp(&self) -> Hyperparameters {
        match self.preset {
            Some(p) => {
                let (b, g) = p.rates();
                self.swarm.clone().with_variant(b, g)
            }
            None => self.swarm.clone(),
        }
    }

    pub fn sim_profile(&self) -> MicroarchProfile {
        self.profile.unwrap_or(MicroarchProfile::AlderLake)
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.extensions.is_empty() {
            return Err(CampaignError::config("extensions", "no extensions selected"));
        }
        if self.reps == 0 {
            return Err(CampaignError::config("reps", "must be at least 1"));
        }
        self.effective_hp()
            .validate()
            .map_err(|(field, reason)| CampaignError::config(&format!("swarm.{field}"), reason))?;
        self.env.validate().map_err(|r| CampaignError::config("env.denormal_registers", r))?;
        if !(self.baseline.k.is_finite() && self.baseline.k >= 0.0) {
            return Err(CampaignError::config("baseline.k", format!("{} is not a non-negative number", self.baseline.k)));
        }
        if let Some(n) = &self.noise {
            if !(n.lambda.is_finite() && n.lambda > 0.0) {
                return Err(CampaignError::config("noise.lambda", format!("{} must be positive", n.lambda)));
            }
            if self.backend == BackendKind::Hw {
                return Err(CampaignError::config("noise", "synthetic noise applies to the sim backend only"));
            }
        }
        if self.stop.max_evaluations == Some(0) {
            return Err(CampaignError::config("stop.max_evaluations", "must be at least 1"));
        }
        Ok(())
    }

    fn rule_table(&self) -> Result<RuleTable, CampaignError> {
        match &self.rules {
            None => Ok(RuleTable::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CampaignError::config("rules", format!("{}: {e}", p.display())))?;
                RuleTable::from_toml(&text).map_err(|e| CampaignError::config("rules", e))
            }
        }
    }
}

// ------------------------------------------------------------------ backend selection

pub enum Backend {
    Sim(SimBackend),
    Hw(HwBackend),
}

impl Backend {
    pub fn as_dyn(&self) -> &dyn FitnessBackend {
        match self {
            Backend::Sim(b) => b,
            Backend::Hw(b) => b,
        }
    }

    pub fn profile(&self) -> MicroarchProfile {
        match self {
            Backend::Sim(b) => b.profile(),
            Backend::Hw(b) => b.profile(),
        }
    }
}

pub fn build_backend(cfg: &CampaignConfig, catalog: Arc<Catalog>) -> Result<Backend, CampaignError> {
    let rules = cfg.rule_table()?;
    match cfg.backend {
        BackendKind::Sim => {
            let mut b = SimBackend::new(catalog, cfg.sim_profile()).with_rules(rules);
            if let Some(n) = &cfg.noise {
                let seed = n.seed.unwrap_or(cfg.seed ^ 0x5eed_0f_5eed);
                b = b.with_noise(NoiseModel { lambda: n.lambda, seed })?;
            }
            Ok(Backend::Sim(b))
        }
        BackendKind::Hw => {
            let counter_map = match &cfg.hw.counter_map {
                None => None,
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| CampaignError::config("hw.counter_map", format!("{}: {e}", p.display())))?;
                    let profile = crate::hw::detect_platform()
                        .ok_or_else(|| BackendError::Unavailable("host CPU is not a supported profile".into()))?;
                    Some(CounterMap::parse(&text, profile).map_err(|e| CampaignError::config("hw.counter_map", e))?)
                }
            };
            let audit_dir = match (&cfg.output_dir, cfg.hw.audit) {
                (Some(d), true) => Some(d.join("kernels")),
                _ => None,
            };
            let hc = HwConfig {
                profile: None,
                counter_map,
                core: cfg.hw.core.or(HwConfig::default().core),
                timeout: Duration::from_millis(cfg.hw.timeout_ms),
                audit_dir,
            };
            let b = HwBackend::new(catalog, hc)?;
            if let Some(p) = cfg.profile {
                if p != b.profile() {
                    return Err(CampaignError::config("profile", format!("{p} requested but host is {}", b.profile())));
                }
            }
            Ok(Backend::Hw(b))
        }
    }
}

// ------------------------------------------------------------------ report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproducer {
    /// Instruction lines, one per line.
    pub assembly: String,
    pub codes: Vec<PositionCode>,
    /// Reproducer kernel file name inside the output directory.
    pub file: String,
    pub fitness: f64,
    /// Rule trace of the reproducer (simulated backend only).
    pub trace: Option<RuleTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDiscovery {
    pub class: EquivalenceClass,
    pub first_hit_evaluation: u64,
    pub first_hit_seconds: f64,
    pub best_fitness: f64,
    pub best_codes: Vec<PositionCode>,
    pub reproducer: Option<Reproducer>,
    /// Why no reproducer was produced, when none was.
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    Budget,
    Until,
    WallClock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub hyperparameters: Hyperparameters,
    pub profile: MicroarchProfile,
    pub catalog_digest: String,
    pub pool_size: usize,
    pub rules: RuleTable,
    pub baseline: BaselineProfile,
    pub total_evaluations: u64,
    pub iterations: u64,
    pub stop_reason: StopReason,
    pub elapsed_seconds: f64,
    /// In class row order.
    pub discoveries: Vec<ClassDiscovery>,
}

impl CampaignReport {
    pub fn discovery(&self, c: EquivalenceClass) -> Option<&ClassDiscovery> {
        self.discoveries.iter().find(|d| d.class == c)
    }
}

pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub log: Vec<EvalRecord>,
}

// ------------------------------------------------------------------ run

struct Tracker<'o> {
    start: Instant,
    first_hit: [Option<(u64, f64)>; 9],
    best: [Option<(f64, Vec<PositionCode>)>; 9],
    log: Vec<EvalRecord>,
    sink: Option<BufWriter<File>>,
    sink_error: Option<std::io::Error>,
    until: Vec<EquivalenceClass>,
    deadline: Option<Instant>,
    reason: Option<StopReason>,
    extra: &'o mut dyn Observer,
}

impl Observer for Tracker<'_> {
    fn on_evaluation(&mut self, rec: &EvalRecord, obs: &FitnessObservation, swarm: &Swarm) -> Flow {
        if let Some(c) = rec.class {
            let i = c.index();
            if self.first_hit[i].is_none() {
                self.first_hit[i] = Some((rec.evaluation, self.start.elapsed().as_secs_f64()));
            }
            if self.best[i].as_ref().is_none_or(|(f, _)| rec.fitness > *f) {
                self.best[i] = Some((rec.fitness, rec.codes.clone()));
            }
        }
        if let Some(w) = self.sink.as_mut() {
            let line = serde_json::to_string(rec).expect("log record serializes");
            if let Err(e) = writeln!(w, "{line}") {
                self.sink_error.get_or_insert(e);
            }
        }
        self.log.push(rec.clone());
        let mut flow = self.extra.on_evaluation(rec, obs, swarm);
        if !self.until.is_empty() && self.until.iter().all(|c| self.first_hit[c.index()].is_some()) {
            self.reason.get_or_insert(StopReason::Until);
            flow = Flow::Stop;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.reason.get_or_insert(StopReason::WallClock);
            flow = Flow::Stop;
        }
        flow
    }

    fn on_iteration(&mut self, swarm: &Swarm, subs: &[SubSwarm], phase: Phase) {
        self.extra.on_iteration(swarm, subs, phase);
    }
}

/// Loads the catalog, builds the backend and runs the campaign, writing outputs when
/// `output_dir` is set.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome, CampaignError> {
    cfg.validate()?;
    let catalog = Arc::new(load_catalog(&cfg.catalog)?);
    // fail on a bad pool before touching any backend
    build_pool(&catalog, &cfg.extensions)?;
    let backend = build_backend(cfg, catalog.clone())?;
    let log_path = match &cfg.output_dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| output_error(d, e))?;
            Some(d.join(LOG_FILE))
        }
        None => None,
    };
    let outcome = run_with(cfg, catalog, &backend, log_path.as_deref(), &mut crate::swarm::Silent)?;
    if let Some(d) = &cfg.output_dir {
        emit_report(&outcome, d, &kernel_settings(cfg))?;
    }
    Ok(outcome)
}

fn output_error(p: &Path, e: impl fmt::Display) -> CampaignError {
    CampaignError::Output { path: p.display().to_string(), reason: e.to_string() }
}

/// Runs a campaign against an already-built backend.
pub fn run_with(
    cfg: &CampaignConfig,
    catalog: Arc<Catalog>,
    backend: &Backend,
    log_path: Option<&Path>,
    observer: &mut dyn Observer,
) -> Result<CampaignOutcome, CampaignError> {
    cfg.validate()?;
    let hp = cfg.effective_hp();
    let pool = build_pool(&catalog, &cfg.extensions)?;
    let rules = match backend {
        Backend::Sim(b) => b.rules().clone(),
        Backend::Hw(_) => cfg.rule_table()?,
    };
    let dynb = backend.as_dyn();
    let samples = cfg.baseline.samples.max(dynb.capabilities().min_calibration_samples);
    let baseline = calibrate_baseline_k(dynb, samples, cfg.reps, &cfg.env, cfg.baseline.k)?;
    let evaluator = Evaluator::new(dynb, baseline.clone(), cfg.reps, cfg.env.clone());

    let sink = match log_path {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| output_error(p, e))?)),
        None => None,
    };
    let start = Instant::now();
    let mut tracker = Tracker {
        start,
        first_hit: [None; 9],
        best: Default::default(),
        log: Vec::new(),
        sink,
        sink_error: None,
        until: cfg.stop.until.clone(),
        deadline: cfg.stop.max_seconds.map(|s| start + Duration::from_secs(s)),
        reason: None,
        extra: observer,
    };

    let mut swarm = initialize_swarm_seeded(&pool, &hp, cfg.seed);
    let mut state = RunState::with_budget(cfg.stop.max_evaluations);
    cognitive_phase(&mut swarm, &evaluator, &mut tracker, &mut state);
    let subs = form_subswarms(&swarm);
    mixed_phase(&mut swarm, &subs, &evaluator, &mut tracker, &mut state);
    let elapsed = start.elapsed().as_secs_f64();

    if let Some(mut w) = tracker.sink.take() {
        if let Err(e) = w.flush() {
            tracker.sink_error.get_or_insert(e);
        }
    }
    if let (Some(e), Some(p)) = (tracker.sink_error.take(), log_path) {
        return Err(output_error(p, e));
    }
    let stop_reason = if !state.stopped {
        StopReason::Completed
    } else {
        tracker.reason.unwrap_or(StopReason::Budget)
    };

    // minimization runs against a noiseless oracle on the simulator so the result is stable
    let clean_sim;
    let (min_backend, min_baseline): (&dyn FitnessBackend, BaselineProfile) = match backend {
        Backend::Sim(b) => {
            clean_sim = SimBackend::new(catalog.clone(), b.profile()).with_rules(b.rules().clone());
            (&clean_sim, BaselineProfile::zero())
        }
        Backend::Hw(b) => (b, baseline.clone()),
    };
    let min_eval = Evaluator::new(min_backend, min_baseline, cfg.reps, cfg.env.clone());

    let mut discoveries = Vec::new();
    for c in EquivalenceClass::ALL {
        let Some((first_eval, first_secs)) = tracker.first_hit[c.index()] else { continue };
        let (best_fitness, best_codes) = tracker.best[c.index()].clone().expect("hit implies best");
        let mut d = ClassDiscovery {
            class: c,
            first_hit_evaluation: first_eval,
            first_hit_seconds: first_secs,
            best_fitness,
            best_codes: best_codes.clone(),
            reproducer: None,
            note: None,
        };
        if cfg.minimize {
            let seq = decode_sequence(&catalog, &best_codes).map_err(BackendError::from)?;
            match minimize(&seq, &min_eval, c) {
                Ok(min) => {
                    let obs = min_eval.try_evaluate(&min)?;
                    let trace = match backend {
                        Backend::Sim(b) => Some(b.trace(&min, &cfg.env)),
                        Backend::Hw(_) => None,
                    };
                    d.reproducer = Some(Reproducer {
                        assembly: catalog.render_sequence(&min),
                        codes: encode_sequence(&catalog, &min),
                        file: reproducer_file(c),
                        fitness: obs.excess[c],
                        trace,
                    });
                }
                Err(CampaignError::DoesNotFire(_)) => {
                    d.note = Some("best sequence did not re-fire during minimization".into());
                }
                Err(e) => return Err(e),
            }
        }
        discoveries.push(d);
    }

    let report = CampaignReport {
        config: cfg.clone(),
        hyperparameters: hp,
        profile: backend.profile(),
        catalog_digest: catalog.digest().to_string(),
        pool_size: pool.len(),
        rules,
        baseline,
        total_evaluations: state.evaluations,
        iterations: swarm.iteration,
        stop_reason,
        elapsed_seconds: elapsed,
        discoveries,
    };
    Ok(CampaignOutcome { report, log: tracker.log })
}

// ------------------------------------------------------------------ minimization

fn fires(evaluator: &Evaluator, seq: &[InstructionInstance], class: EquivalenceClass) -> Result<bool, CampaignError> {
    let obs = evaluator.try_evaluate(seq)?;
    Ok(obs.valid && obs.fired[class])
}

/// Greedy 1-minimal reduction: drop instructions in index order while `class` keeps firing.
pub fn minimize(
    seq: &[InstructionInstance],
    evaluator: &Evaluator,
    class: EquivalenceClass,
) -> Result<Vec<InstructionInstance>, CampaignError> {
    if !fires(evaluator, seq, class)? {
        return Err(CampaignError::DoesNotFire(class.event_name().to_string()));
    }
    let mut cur = seq.to_vec();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < cur.len() {
            let mut trial = cur.clone();
            trial.remove(i);
            if fires(evaluator, &trial, class)? {
                cur = trial;
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            return Ok(cur);
        }
    }
}

// ------------------------------------------------------------------ output

pub const REPORT_FILE: &str = "report.json";
pub const LOG_FILE: &str = "log.jsonl";

pub fn reproducer_file(c: EquivalenceClass) -> String {
    format!("{}.s", c.event_name())
}

/// What a reproducer kernel is emitted with.
#[derive(Clone, Debug)]
pub struct KernelSettings {
    pub reps: u32,
    pub env: DataEnvironment,
}

/// Writes the report, one `.s` reproducer per discovered class, and the evaluation log.
pub fn emit_report(outcome: &CampaignOutcome, dir: &Path, kernels: &KernelSettings) -> Result<(), CampaignError> {
    std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    let report = &outcome.report;
    for d in &report.discoveries {
        let Some(r) = &d.reproducer else { continue };
        let lines: Vec<String> = r.assembly.lines().map(str::to_string).collect();
        let k = crate::hw::emit_kernel_text(&lines, kernels.reps, &kernels.env);
        let p = dir.join(&r.file);
        std::fs::write(&p, k.assembly_text).map_err(|e| output_error(&p, e))?;
    }
    let p = dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(report).map_err(|e| output_error(&p, e))?;
    std::fs::write(&p, text + "\n").map_err(|e| output_error(&p, e))?;
    let p = dir.join(LOG_FILE);
    let mut w = BufWriter::new(File::create(&p).map_err(|e| output_error(&p, e))?);
    for rec in &outcome.log {
        let line = serde_json::to_string(rec).map_err(|e| output_error(&p, e))?;
        writeln!(w, "{line}").map_err(|e| output_error(&p, e))?;
    }
    w.flush().map_err(|e| output_error(&p, e))?;
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<CampaignReport, CampaignError> {
    let p = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| output_error(&p, e))?;
    serde_json::from_str(&text).map_err(|e| output_error(&p, e))
}

pub fn load_log(dir: &Path) -> Result<Vec<EvalRecord>, CampaignError> {
    let p = dir.join(LOG_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| output_error(&p, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| output_error(&p, e)))
        .collect()
}

/// Full reproducer kernel for a sequence, as written by [`emit_report`].
pub fn reproducer_kernel(catalog: &Catalog, seq: &[InstructionInstance], kernels: &KernelSettings) -> Result<String, CampaignError> {
    Ok(emit_kernel(catalog, seq, kernels.reps, &kernels.env)?.assembly_text)
}

pub fn kernel_settings(cfg: &CampaignConfig) -> KernelSettings {
    KernelSettings { reps: cfg.reps, env: cfg.env.clone() }
}
