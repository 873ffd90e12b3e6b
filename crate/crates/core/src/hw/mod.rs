//! Hardware fitness backend: real kernels, real PMU counters.

pub mod counters;
pub mod kernel;
pub mod platform;
#[cfg(target_os = "linux")]
pub mod runner;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::catalog::{Catalog, InstructionInstance};
use crate::error::BackendError;
use crate::fitness::{Capabilities, FitnessBackend, Measurement};
use crate::oracle::{DataEnvironment, MicroarchProfile};

pub use counters::{CounterMap, RawEvent};
pub use kernel::{emit_kernel, emit_kernel_text, KernelArtifact};
pub use platform::detect_platform;

pub const MIN_CALIBRATION_SAMPLES: usize = 30;

#[derive(Clone, Debug)]
pub struct HwConfig {
    /// Overrides detection; mostly for tests.
    pub profile: Option<MicroarchProfile>,
    pub counter_map: Option<CounterMap>,
    pub core: Option<usize>,
    pub timeout: Duration,
    /// Every emitted kernel is written here when set.
    pub audit_dir: Option<PathBuf>,
}

impl Default for HwConfig {
    fn default() -> Self {
        HwConfig {
            profile: None,
            counter_map: None,
            core: std::env::var("SPECSWARM_CORE").ok().and_then(|s| s.trim().parse().ok()),
            timeout: Duration::from_secs(2),
            audit_dir: None,
        }
    }
}

pub struct HwBackend {
    catalog: Arc<Catalog>,
    profile: MicroarchProfile,
    counter_map: CounterMap,
    #[cfg(target_os = "linux")]
    events: Vec<runner::EventSpec>,
    #[cfg(target_os = "linux")]
    opts: runner::RunOptions,
    audit_dir: Option<PathBuf>,
    avx512: bool,
    seq: AtomicU64,
    lock: Mutex<()>,
}

#[cfg(target_arch = "x86_64")]
fn cpu_has_avx512() -> bool {
    raw_cpuid::CpuId::new().get_extended_feature_info().map(|f| f.has_avx512f()).unwrap_or(false)
}

#[cfg(not(target_arch = "x86_64"))]
fn cpu_has_avx512() -> bool {
    false
}

impl HwBackend {
    #[cfg(target_os = "linux")]
    pub fn new(catalog: Arc<Catalog>, cfg: HwConfig) -> Result<Self, BackendError> {
        let profile = match cfg.profile {
            Some(p) => p,
            None => detect_platform().ok_or_else(|| {
                BackendError::Unavailable("host CPU is not one of alder_lake, sapphire_rapids, comet_lake, ice_lake".into())
            })?,
        };
        let counter_map = cfg.counter_map.unwrap_or_else(|| CounterMap::builtin(profile));
        let mut opts = runner::RunOptions { core: cfg.core, timeout: cfg.timeout, ..Default::default() };
        if opts.core.is_none() {
            opts.core = HwConfig::default().core;
        }
        for tool in [&opts.assembler, &opts.linker] {
            if !runner::tool_available(tool) {
                return Err(BackendError::Unavailable(format!("`{tool}` not found on PATH")));
            }
        }
        let events = runner::events_for(&counter_map);
        if events.is_empty() {
            return Err(BackendError::Counters(format!("no supported counters for {profile}")));
        }
        probe_counters(&events)?;
        if let Some(d) = &cfg.audit_dir {
            std::fs::create_dir_all(d).map_err(|e| BackendError::Load(format!("{}: {e}", d.display())))?;
        }
        Ok(HwBackend {
            catalog,
            profile,
            counter_map,
            events,
            opts,
            audit_dir: cfg.audit_dir,
            avx512: cpu_has_avx512(),
            seq: AtomicU64::new(0),
            lock: Mutex::new(()),
        })
    }

    #[cfg(not(target_os = "linux"))]
    pub fn new(_catalog: Arc<Catalog>, _cfg: HwConfig) -> Result<Self, BackendError> {
        Err(BackendError::Unavailable("hardware backend requires Linux perf events".into()))
    }

    pub fn profile(&self) -> MicroarchProfile {
        self.profile
    }

    pub fn counter_map(&self) -> &CounterMap {
        &self.counter_map
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn kernel(&self, seq: &[InstructionInstance], reps: u32, env: &DataEnvironment) -> Result<KernelArtifact, BackendError> {
        let req = kernel::requirements(&self.catalog, seq);
        if req.avx512 && !self.avx512 {
            return Err(BackendError::UnsupportedOperand("sequence needs AVX-512 but the CPU lacks it".into()));
        }
        emit_kernel(&self.catalog, seq, reps, env)
    }
}

/// Opens and closes each event once in this process to surface permission problems early.
#[cfg(target_os = "linux")]
pub fn probe_counters(events: &[runner::EventSpec]) -> Result<(), BackendError> {
    use perf_event_open_sys::bindings as b;
    for ev in events {
        let mut attr = b::perf_event_attr::default();
        attr.size = std::mem::size_of::<b::perf_event_attr>() as u32;
        attr.type_ = ev.pmu_type;
        attr.config = ev.config;
        attr.set_disabled(1);
        attr.set_exclude_kernel(1);
        attr.set_exclude_hv(1);
        let fd = unsafe { perf_event_open_sys::perf_event_open(&mut attr, 0, -1, -1, 0) };
        if fd < 0 {
            let err = std::io::Error::last_os_error();
            let hint = match err.raw_os_error() {
                Some(libc::EACCES) | Some(libc::EPERM) => {
                    "; user-space counting needs kernel.perf_event_paranoid <= 2 or CAP_PERFMON"
                }
                Some(libc::ENOENT) | Some(libc::ENODEV) | Some(libc::EOPNOTSUPP) => "; no usable PMU (virtualized host?)",
                _ => "",
            };
            return Err(BackendError::Counters(format!("{} ({:#x}): {err}{hint}", ev.class.event_name(), ev.config)));
        }
        unsafe { libc::close(fd) };
    }
    Ok(())
}

impl FitnessBackend for HwBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities { reentrant: false, microarch_profile: self.profile, min_calibration_samples: MIN_CALIBRATION_SAMPLES }
    }

    #[cfg(target_os = "linux")]
    fn measure(&self, seq: &[InstructionInstance], reps: u32, env: &DataEnvironment) -> Result<Measurement, BackendError> {
        for inst in seq {
            if self.catalog.by_opcode(inst.opcode).is_none() {
                return Err(crate::error::DecodeError::UnknownOpcode(inst.opcode).into());
            }
        }
        let k = self.kernel(seq, reps, env)?;
        let _guard = self.lock.lock().expect("hw backend lock poisoned");
        if let Some(d) = &self.audit_dir {
            let n = self.seq.fetch_add(1, Ordering::Relaxed);
            let _ = std::fs::write(d.join(format!("kernel-{n:06}.s")), &k.assembly_text);
        }
        let out = runner::run_kernel_events(&k, &self.events, &self.opts)?;
        Ok(Measurement { counts: out.counts, valid: out.valid })
    }

    #[cfg(not(target_os = "linux"))]
    fn measure(&self, _seq: &[InstructionInstance], _reps: u32, _env: &DataEnvironment) -> Result<Measurement, BackendError> {
        Err(BackendError::Unavailable("hardware backend requires Linux perf events".into()))
    }
}
