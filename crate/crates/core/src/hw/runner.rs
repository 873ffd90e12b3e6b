//! Assembling, loading and executing kernels in a fault-isolated child process.

use std::ffi::CString;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crate::error::BackendError;
use crate::fitness::{ClassMap, EquivalenceClass};

use super::counters::CounterMap;
use super::kernel::KernelArtifact;

static KERNEL_SEQ: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub core: Option<usize>,
    pub timeout: Duration,
    pub assembler: String,
    pub linker: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            core: None,
            timeout: Duration::from_secs(2),
            assembler: std::env::var("SPECSWARM_AS").unwrap_or_else(|_| "as".into()),
            linker: std::env::var("SPECSWARM_CC").unwrap_or_else(|_| "cc".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub counts: ClassMap<u64>,
    pub valid: bool,
    /// Why the run was discarded, when it was.
    pub fault: Option<String>,
}

/// One event to open: class, PMU type and raw config.
#[derive(Clone, Copy, Debug)]
pub struct EventSpec {
    pub class: EquivalenceClass,
    pub pmu_type: u32,
    pub config: u64,
}

pub fn pmu_type(pmu: &str) -> Option<u32> {
    let read = |name: &str| {
        std::fs::read_to_string(format!("/sys/bus/event_source/devices/{name}/type"))
            .ok()
            .and_then(|s| s.trim().parse().ok())
    };
    read(pmu).or_else(|| read("cpu"))
}

pub fn events_for(cmap: &CounterMap) -> Vec<EventSpec> {
    // PERF_TYPE_RAW when the PMU directory is absent
    let ty = pmu_type(&cmap.pmu).unwrap_or(4);
    cmap.supported().map(|(class, e)| EventSpec { class, pmu_type: ty, config: e.config() }).collect()
}

pub fn tool_available(tool: &str) -> bool {
    Command::new(tool).arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

/// Assembles and links `k` into a shared object inside `dir`.
pub fn assemble(k: &KernelArtifact, dir: &Path, opts: &RunOptions) -> Result<PathBuf, BackendError> {
    let n = KERNEL_SEQ.fetch_add(1, Ordering::Relaxed);
    let stem = dir.join(format!("kernel-{}-{n}", std::process::id()));
    let src = stem.with_extension("s");
    let obj = stem.with_extension("o");
    let so = stem.with_extension("so");
    std::fs::write(&src, &k.assembly_text).map_err(|e| BackendError::Load(e.to_string()))?;
    let out = Command::new(&opts.assembler)
        .arg("--64")
        .arg("-o")
        .arg(&obj)
        .arg(&src)
        .output()
        .map_err(|e| BackendError::Assembler(format!("{}: {e}", opts.assembler)))?;
    if !out.status.success() {
        return Err(BackendError::Assembler(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let out = Command::new(&opts.linker)
        .args(["-shared", "-nostdlib", "-Wl,-z,noexecstack", "-o"])
        .arg(&so)
        .arg(&obj)
        .output()
        .map_err(|e| BackendError::Load(format!("{}: {e}", opts.linker)))?;
    if !out.status.success() {
        return Err(BackendError::Load(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let _ = std::fs::remove_file(&obj);
    Ok(so)
}

struct Loaded {
    handle: *mut libc::c_void,
    entry: extern "C" fn(),
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            libc::dlclose(self.handle);
        }
    }
}

fn load(so: &Path, symbol: &str) -> Result<Loaded, BackendError> {
    let path = CString::new(so.as_os_str().as_encoded_bytes()).map_err(|e| BackendError::Load(e.to_string()))?;
    let sym = CString::new(symbol).map_err(|e| BackendError::Load(e.to_string()))?;
    unsafe {
        let handle = libc::dlopen(path.as_ptr(), libc::RTLD_NOW | libc::RTLD_LOCAL);
        if handle.is_null() {
            let msg = std::ffi::CStr::from_ptr(libc::dlerror()).to_string_lossy().into_owned();
            return Err(BackendError::Load(msg));
        }
        let f = libc::dlsym(handle, sym.as_ptr());
        if f.is_null() {
            libc::dlclose(handle);
            return Err(BackendError::Load(format!("symbol {symbol} missing")));
        }
        Ok(Loaded { handle, entry: std::mem::transmute::<*mut libc::c_void, extern "C" fn()>(f) })
    }
}

const MAX_EVENTS: usize = 9;
const REC_WORDS: usize = 2 + 3 * MAX_EVENTS;
const STATUS_OK: u64 = 0;
const STATUS_OPEN_FAILED: u64 = 1;

fn make_attr(ev: &EventSpec) -> perf_event_open_sys::bindings::perf_event_attr {
    use perf_event_open_sys::bindings as b;
    let mut attr = b::perf_event_attr::default();
    attr.size = std::mem::size_of::<b::perf_event_attr>() as u32;
    attr.type_ = ev.pmu_type;
    attr.config = ev.config;
    attr.read_format = (b::PERF_FORMAT_TOTAL_TIME_ENABLED | b::PERF_FORMAT_TOTAL_TIME_RUNNING) as u64;
    attr.set_disabled(1);
    attr.set_exclude_kernel(1);
    attr.set_exclude_hv(1);
    attr
}

/// Child side. Uses only raw syscalls: no allocation after fork.
unsafe fn child_main(
    entry: extern "C" fn(),
    attrs: &mut [perf_event_open_sys::bindings::perf_event_attr],
    core: Option<usize>,
    wfd: libc::c_int,
) -> ! {
    use perf_event_open_sys::ioctls;
    let mut rec = [0u64; REC_WORDS];
    if let Some(c) = core {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(c, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
    let mut fds = [-1 as libc::c_int; MAX_EVENTS];
    for (i, a) in attrs.iter_mut().enumerate() {
        let fd = perf_event_open_sys::perf_event_open(a, 0, -1, -1, 0);
        if fd < 0 {
            rec[0] = STATUS_OPEN_FAILED;
            rec[1] = *libc::__errno_location() as u64;
            libc::write(wfd, rec.as_ptr() as *const libc::c_void, std::mem::size_of_val(&rec));
            libc::_exit(3);
        }
        fds[i] = fd;
    }
    let n = attrs.len();
    for &fd in &fds[..n] {
        ioctls::RESET(fd, 0);
        ioctls::ENABLE(fd, 0);
    }
    entry();
    for &fd in &fds[..n] {
        ioctls::DISABLE(fd, 0);
    }
    rec[0] = STATUS_OK;
    rec[1] = n as u64;
    for (i, &fd) in fds[..n].iter().enumerate() {
        let mut vals = [0u64; 3];
        libc::read(fd, vals.as_mut_ptr() as *mut libc::c_void, std::mem::size_of_val(&vals));
        rec[2 + 3 * i..5 + 3 * i].copy_from_slice(&vals);
    }
    libc::write(wfd, rec.as_ptr() as *const libc::c_void, std::mem::size_of_val(&rec));
    libc::_exit(0);
}

fn describe_status(status: libc::c_int) -> String {
    if libc::WIFSIGNALED(status) {
        let sig = libc::WTERMSIG(status);
        let name = match sig {
            libc::SIGSEGV => "SIGSEGV",
            libc::SIGILL => "SIGILL",
            libc::SIGFPE => "SIGFPE",
            libc::SIGBUS => "SIGBUS",
            libc::SIGKILL => "SIGKILL",
            libc::SIGTRAP => "SIGTRAP",
            _ => "signal",
        };
        format!("terminated by {name} ({sig})")
    } else {
        format!("exit status {}", libc::WEXITSTATUS(status))
    }
}

/// Runs an already-linked kernel in a forked child with the given counters.
pub fn execute(so: &Path, symbol: &str, events: &[EventSpec], opts: &RunOptions) -> Result<RunOutcome, BackendError> {
    if events.len() > MAX_EVENTS {
        return Err(BackendError::Counters(format!("at most {MAX_EVENTS} events per run")));
    }
    let loaded = load(so, symbol)?;
    let mut attrs: Vec<_> = events.iter().map(make_attr).collect();
    let mut fds = [0 as libc::c_int; 2];
    if unsafe { libc::pipe2(fds.as_mut_ptr(), libc::O_CLOEXEC) } != 0 {
        return Err(BackendError::Load(std::io::Error::last_os_error().to_string()));
    }
    let (rfd, wfd) = (fds[0], fds[1]);
    let pid = unsafe { libc::fork() };
    if pid < 0 {
        unsafe {
            libc::close(rfd);
            libc::close(wfd);
        }
        return Err(BackendError::Load(std::io::Error::last_os_error().to_string()));
    }
    if pid == 0 {
        unsafe {
            libc::close(rfd);
            child_main(loaded.entry, &mut attrs, opts.core, wfd);
        }
    }
    unsafe { libc::close(wfd) };
    let mut rec = [0u64; REC_WORDS];
    let want = std::mem::size_of_val(&rec);
    let mut got = 0usize;
    let deadline = std::time::Instant::now() + opts.timeout;
    let mut timed_out = false;
    while got < want {
        let left = deadline.saturating_duration_since(std::time::Instant::now());
        if left.is_zero() {
            timed_out = true;
            break;
        }
        let mut pfd = libc::pollfd { fd: rfd, events: libc::POLLIN, revents: 0 };
        let r = unsafe { libc::poll(&mut pfd, 1, left.as_millis().min(i32::MAX as u128) as i32) };
        if r == 0 {
            timed_out = true;
            break;
        }
        if r < 0 {
            if std::io::Error::last_os_error().kind() == std::io::ErrorKind::Interrupted {
                continue;
            }
            break;
        }
        let n = unsafe { libc::read(rfd, (rec.as_mut_ptr() as *mut u8).add(got) as *mut libc::c_void, want - got) };
        if n <= 0 {
            break;
        }
        got += n as usize;
    }
    if timed_out {
        unsafe { libc::kill(pid, libc::SIGKILL) };
    }
    let mut status = 0;
    unsafe {
        libc::waitpid(pid, &mut status, 0);
        libc::close(rfd);
    }
    drop(loaded);
    if timed_out {
        return Ok(RunOutcome { counts: ClassMap::default(), valid: false, fault: Some(format!("watchdog timeout after {:?}", opts.timeout)) });
    }
    if got == want && rec[0] == STATUS_OPEN_FAILED {
        let err = std::io::Error::from_raw_os_error(rec[1] as i32);
        let hint = match err.raw_os_error() {
            Some(libc::EACCES) | Some(libc::EPERM) => {
                " (needs kernel.perf_event_paranoid <= 2 for user-space counting, or CAP_PERFMON)"
            }
            _ => "",
        };
        return Err(BackendError::Counters(format!("perf_event_open: {err}{hint}")));
    }
    if got != want || !libc::WIFEXITED(status) || libc::WEXITSTATUS(status) != 0 {
        return Ok(RunOutcome { counts: ClassMap::default(), valid: false, fault: Some(describe_status(status)) });
    }
    let mut counts = ClassMap::<u64>::default();
    for (i, ev) in events.iter().enumerate() {
        let (value, enabled, running) = (rec[2 + 3 * i], rec[3 + 3 * i], rec[4 + 3 * i]);
        // scale for multiplexing
        counts[ev.class] = if running > 0 && running < enabled {
            ((value as u128 * enabled as u128) / running as u128) as u64
        } else {
            value
        };
    }
    Ok(RunOutcome { counts, valid: true, fault: None })
}

/// Assembles, loads and runs `k` under the counters of `cmap`.
pub fn run_kernel(k: &KernelArtifact, cmap: &CounterMap, opts: &RunOptions) -> Result<RunOutcome, BackendError> {
    run_kernel_events(k, &events_for(cmap), opts)
}

pub fn run_kernel_events(k: &KernelArtifact, events: &[EventSpec], opts: &RunOptions) -> Result<RunOutcome, BackendError> {
    let dir = tempfile::Builder::new()
        .prefix("specswarm-")
        .tempdir()
        .map_err(|e| BackendError::Load(e.to_string()))?;
    let so = assemble(k, dir.path(), opts)?;
    execute(&so, &k.entry_symbol, events, opts)
}
