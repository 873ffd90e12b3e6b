use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specswarm::campaign::{run_campaign, BackendKind, CampaignConfig, Preset};
use specswarm::catalog::{sample_operands, Operand};
use specswarm::{load_catalog, Catalog, EquivalenceClass, MicroarchProfile};

#[derive(Parser)]
#[command(name = "specswarm", version, about = "Swarm search for bad-speculation triggers in x86 ISE sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign.
    Run(RunArgs),
    /// Load a catalog and print what was kept.
    Catalog {
        #[arg(long, default_value = "data/instructions.xml")]
        catalog: PathBuf,
        /// Also list extension tags with instruction counts.
        #[arg(long)]
        extensions: bool,
        /// Print `iform<TAB>assembly` sample renderings of every kept spec instead.
        #[arg(long)]
        render: bool,
    },
    /// Print the detected microarchitecture profile.
    Platform,
}

#[derive(Args)]
struct RunArgs {
    /// TOML campaign config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated extension tags, e.g. SSE2,AVX,FMA.
    #[arg(long, value_delimiter = ',')]
    extensions: Option<Vec<String>>,
    #[arg(long, value_parser = parse_profile)]
    profile: Option<MicroarchProfile>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    max_evaluations: Option<u64>,
    /// Stop once these classes (counter names) have all fired.
    #[arg(long, value_delimiter = ',', value_parser = parse_class)]
    until: Option<Vec<EquivalenceClass>>,
    /// Core to pin hardware kernels to.
    #[arg(long, env = "SPECSWARM_CORE")]
    core: Option<usize>,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}
fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}
fn parse_profile(s: &str) -> Result<MicroarchProfile, String> {
    s.parse()
}
fn parse_class(s: &str) -> Result<EquivalenceClass, String> {
    s.parse()
}

fn build_config(a: RunArgs) -> Result<CampaignConfig> {
    let mut cfg = match &a.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(v) = a.catalog {
        cfg.catalog = v;
    }
    if let Some(v) = a.backend {
        cfg.backend = v;
    }
    if let Some(v) = a.preset {
        cfg.preset = Some(v);
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.extensions {
        cfg.extensions = v.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(v) = a.profile {
        cfg.profile = Some(v);
    }
    if let Some(v) = a.out {
        cfg.output_dir = Some(v);
    }
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.max_evaluations {
        cfg.stop.max_evaluations = Some(v);
    }
    if let Some(v) = a.until {
        cfg.stop.until = v;
    }
    if let Some(v) = a.core {
        cfg.hw.core = Some(v);
    }
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = build_config(a)?;
    let outcome = run_campaign(&cfg)?;
    let r = &outcome.report;
    println!(
        "profile {}  pool {}  evaluations {}  iterations {}  stop {:?}  {:.1}s",
        r.profile, r.pool_size, r.total_evaluations, r.iterations, r.stop_reason, r.elapsed_seconds
    );
    if r.discoveries.is_empty() {
        println!("no class fired");
    }
    for d in &r.discoveries {
        println!("{:<32} first hit at evaluation {:>6}  best fitness {:.3}", d.class.event_name(), d.first_hit_evaluation, d.best_fitness);
        if let Some(rep) = &d.reproducer {
            for line in rep.assembly.lines() {
                println!("    {line}");
            }
        } else if let Some(n) = &d.note {
            println!("    ({n})");
        }
    }
    if let Some(d) = &cfg.output_dir {
        println!("report written to {}", d.display());
    }
    Ok(())
}

/// Three renderings per spec: the all-zero operand assignment and two seeded samples.
fn print_renderings(c: &Catalog, out: &mut dyn Write) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for s in c.specs() {
        let zero: Option<Vec<Operand>> = s.slots.iter().map(|sl| Operand::from_field(sl.kind, 0)).collect();
        let mut samples: Vec<Vec<Operand>> = zero.into_iter().collect();
        samples.push(sample_operands(s, &mut rng));
        samples.push(sample_operands(s, &mut rng));
        for ops in samples {
            if let Ok(i) = c.instance(s.opcode_index, ops) {
                // a closed pipe just ends the listing
                if writeln!(out, "{}\t{}", s.iform, c.render(&i)).is_err() {
                    return;
                }
            }
        }
    }
}

fn list_catalog(path: &Path, extensions: bool, render: bool, out: &mut dyn Write) -> Result<()> {
    let c = load_catalog(path).with_context(|| format!("loading {}", path.display()))?;
    if render {
        print_renderings(&c, out);
        return Ok(());
    }
    writeln!(out, "{}", c.summary())?;
    writeln!(out, "{} extensions, digest {}", c.by_extension().len(), c.digest())?;
    if extensions {
        for (ext, ids) in c.by_extension() {
            writeln!(out, "{ext:<24} {}", ids.len())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run(a),
        Command::Catalog { catalog, extensions, render } => list_catalog(&catalog, extensions, render, &mut std::io::stdout().lock()),
        Command::Platform => {
            match specswarm::hw::detect_platform() {
                Some(p) => println!("{p}"),
                None => println!("unsupported"),
            }
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
