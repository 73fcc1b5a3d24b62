use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qmsep::harness::{cmd_attack, cmd_oracle_check, cmd_synth, load_config, parse_fault, ExperimentConfig};
use qmsep::money::SchemeKind;
use qmsep::synth::Backend;

#[derive(Parser)]
#[command(name = "qmsep", version, about = "Witness synthesis, oracle views and quantum-money forgery experiments")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize witnesses for a verifier circuit with both backends.
    Synth(SynthArgs),
    /// Run the counterfeiting attack and emit CSV rows plus a JSON summary.
    Attack(AttackArgs),
    /// Check equivalence and accounting properties of the oracle views.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    verifier: PathBuf,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Alternations N per Trial.
    #[arg(long)]
    alternations: Option<usize>,
    /// Trial repetitions T.
    #[arg(long)]
    t_trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Reusability used in the parameter formulas; measured when omitted.
    #[arg(long)]
    delta_r: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; the JSON summary goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    n_updates: Option<usize>,
    /// Allow t_max and N to differ from the formulas.
    #[arg(long)]
    scaled: bool,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    alternations: Option<usize>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write full transcripts as JSON lines.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples for the sampled-mode comparison (0 skips it).
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ExperimentConfig::default(),
    };
    let config_out = cfg.out.clone().map(PathBuf::from);
    match cli.command {
        Command::Synth(a) => {
            let c = &mut cfg.synth;
            set(&mut c.a, a.a);
            set(&mut c.b, a.b);
            set(&mut c.backend, a.backend);
            set(&mut c.trials, a.trials);
            set(&mut c.seed, a.seed);
            if a.alternations.is_some() {
                c.alternations = a.alternations;
            }
            if a.t_trials.is_some() {
                c.t_trials = a.t_trials;
            }
            let text = fs::read_to_string(&a.verifier).with_context(|| format!("reading {}", a.verifier.display()))?;
            let report = cmd_synth(&text, c).with_context(|| format!("verifier {}", a.verifier.display()))?;
            let json = serde_json::to_string_pretty(&report)? + "\n";
            write_or_print(a.out.or(config_out).as_deref(), &json)?;
            Ok(true)
        }
        Command::Attack(a) => {
            let c = &mut cfg.attack;
            set(&mut c.scheme, a.scheme);
            if a.l.is_some() {
                c.l = a.l;
            }
            if a.m.is_some() {
                c.m = a.m;
            }
            set(&mut c.epsilon, a.eps);
            if a.delta_r.is_some() {
                c.delta_r = a.delta_r;
            }
            set(&mut c.trials, a.trials);
            set(&mut c.seed, a.seed);
            if a.t_max.is_some() {
                c.t_max = a.t_max;
            }
            if a.n_updates.is_some() {
                c.n_updates = a.n_updates;
            }
            c.scaled |= a.scaled;
            set(&mut c.backend, a.backend);
            if a.alternations.is_some() {
                c.alternations = a.alternations;
            }
            if a.jobs.is_some() {
                c.jobs = a.jobs;
            }
            let report = cmd_attack(c)?;
            let summary = serde_json::to_string_pretty(&report.summary)? + "\n";
            let out = a.out.or(config_out);
            match &out {
                Some(p) => {
                    fs::write(p, &report.csv).with_context(|| format!("writing {}", p.display()))?;
                    let sp = p.with_extension("json");
                    fs::write(&sp, &summary).with_context(|| format!("writing {}", sp.display()))?;
                    print!("{summary}");
                }
                None => {
                    print!("{}", report.csv);
                    eprint!("{summary}");
                }
            }
            if let Some(p) = a.transcripts {
                let mut lines = String::new();
                for t in &report.transcripts {
                    lines += &serde_json::to_string(t)?;
                    lines.push('\n');
                }
                fs::write(&p, lines).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(true)
        }
        Command::OracleCheck(a) => {
            let c = &mut cfg.oracle_check;
            set(&mut c.l, a.l);
            set(&mut c.queries, a.queries);
            set(&mut c.trials, a.trials);
            set(&mut c.seed, a.seed);
            set(&mut c.mc_samples, a.mc_samples);
            if let Some(f) = a.inject_fault {
                c.fault = parse_fault(&f)?;
            }
            let report = cmd_oracle_check(c)?;
            for line in &report.checks {
                eprintln!(
                    "{} {}: {:.3e} (tolerance {:.1e})",
                    if line.pass { "PASS" } else { "FAIL" },
                    line.name,
                    line.value,
                    line.tolerance
                );
            }
            let json = serde_json::to_string_pretty(&report)? + "\n";
            write_or_print(config_out.as_deref(), &json)?;
            Ok(report.all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
