//! Command line for determinant-criterion experiment selection.
//!
//! Subcommands:
//!
//! * `generate` — write an instance JSON file from one of the built-in
//!   families (`gaussian`, `correlated`, `duplicated-basis`).
//! * `solve` — load an instance, solve the continuous relaxation, round it
//!   with the requested scheme and emit a JSON run report.
//! * `verify` — run the seeded oracle-backed property suite and exit
//!   nonzero on any violation.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dopt::bounds::{self, ApproximationCertificate};
use dopt::derand;
use dopt::gen::{generate_instance, Family};
use dopt::model::{Design, FractionalDesign, Instance, Mode};
use dopt::relaxation::{solve_relaxation, SolverConfig};
use dopt::sampling::{
    sample_bernoulli_fill, sample_proportional, sample_with_repetitions, RngSeed,
};
use dopt::verify::{run_suite, VerifyConfig};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "dopt", version, about = "Determinant-criterion experiment selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Generate(GenerateArgs),
    /// Solve the relaxation and round it with one scheme.
    Solve(SolveArgs),
    /// Run the randomized self-verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Ambient dimension m.
    #[arg(long)]
    m: usize,
    /// Number of experiments n.
    #[arg(long)]
    n: usize,
    /// Budget k (m <= k <= n).
    #[arg(long)]
    k: usize,
    /// without_reps | with_reps
    #[arg(long, default_value = "without_reps", value_parser = parse_mode)]
    mode: Mode,
    /// gaussian | correlated | duplicated-basis
    #[arg(long, default_value = "gaussian")]
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON path.
    #[arg(long)]
    instance: PathBuf,
    /// Rounding scheme.
    #[arg(long, value_enum)]
    scheme: Scheme,
    /// Inflation parameter for the asymptotic schemes (and the epsilon the
    /// certificates are quoted at).
    #[arg(long)]
    eps: Option<f64>,
    /// Best-of-T trials for the sampling schemes.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relaxation duality-gap tolerance (relative to m).
    #[arg(long, default_value_t = 1e-7)]
    rel_tol: f64,
    /// Relaxation iteration cap.
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 3)]
    max_m: usize,
    #[arg(long, default_value_t = 4)]
    max_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    num_instances: usize,
    /// Negative-control bias injected into conditional expectations
    /// (testing hook; any sizable value must make the suite fail).
    #[arg(long, default_value_t = 0.0, hide = true)]
    h_bias: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    SampleProportional,
    DerandProportional,
    SampleAsymptotic,
    DerandAsymptotic,
    SampleRepetitions,
    DerandRepetitions,
}

impl Scheme {
    fn name(self) -> &'static str {
        match self {
            Scheme::SampleProportional => "sample-proportional",
            Scheme::DerandProportional => "derand-proportional",
            Scheme::SampleAsymptotic => "sample-asymptotic",
            Scheme::DerandAsymptotic => "derand-asymptotic",
            Scheme::SampleRepetitions => "sample-repetitions",
            Scheme::DerandRepetitions => "derand-repetitions",
        }
    }

    fn required_mode(self) -> Mode {
        match self {
            Scheme::SampleRepetitions | Scheme::DerandRepetitions => Mode::WithRepetitions,
            _ => Mode::WithoutRepetitions,
        }
    }

    fn is_sampler(self) -> bool {
        matches!(
            self,
            Scheme::SampleProportional | Scheme::SampleAsymptotic | Scheme::SampleRepetitions
        )
    }

    fn needs_eps(self) -> bool {
        matches!(self, Scheme::SampleAsymptotic | Scheme::DerandAsymptotic)
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "without_reps" => Ok(Mode::WithoutRepetitions),
        "with_reps" => Ok(Mode::WithRepetitions),
        other => Err(format!("unknown mode '{other}' (expected without_reps|with_reps)")),
    }
}

// ---- run report ----------------------------------------------------------

#[derive(Serialize)]
struct InstanceSummary {
    path: String,
    m: usize,
    n: usize,
    k: usize,
    mode: Mode,
}

#[derive(Serialize)]
struct RelaxationSummary {
    value: f64,
    converged: bool,
    gap: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct DesignSummary {
    members: Vec<usize>,
    objective: f64,
    /// objective / relaxation value
    ratio: f64,
}

#[derive(Serialize)]
struct Timings {
    relaxation_ms: f64,
    rounding_ms: f64,
}

#[derive(Serialize)]
struct RunReport {
    instance: InstanceSummary,
    scheme: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    seed: u64,
    trials: usize,
    relaxation: RelaxationSummary,
    design: DesignSummary,
    /// Objective of every trial (samplers; the report's design is the best).
    trial_objectives: Vec<f64>,
    /// Certified floor `objective >= alpha * relaxation.value`, when one
    /// applies to the scheme at these parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<ApproximationCertificate>,
    timings_ms: Timings,
}

// ---- entry ----------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Generate(args) => exit_code(cmd_generate(args)),
        Command::Solve(args) => exit_code(cmd_solve(args)),
        Command::Verify(args) => cmd_verify(args),
    };
    std::process::exit(code);
}

fn exit_code(r: anyhow::Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let family: Family = args.family.parse()?;
    let inst = generate_instance(args.m, args.n, args.k, args.mode, family, RngSeed(args.seed))?;
    std::fs::write(&args.out, inst.to_json_string())
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} (m={}, n={}, k={}, mode={}, family={})",
        args.out.display(),
        inst.m(),
        inst.n(),
        inst.k(),
        inst.mode(),
        args.family
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let inst = Instance::from_json_str(&text)?;
    if inst.mode() != args.scheme.required_mode() {
        return Err(anyhow!(
            "scheme {} requires a {} instance, but {} is {}",
            args.scheme.name(),
            args.scheme.required_mode(),
            args.instance.display(),
            inst.mode()
        ));
    }
    if args.scheme.needs_eps() && args.eps.is_none() {
        return Err(anyhow!("scheme {} requires --eps", args.scheme.name()));
    }
    if let Some(e) = args.eps {
        if !(e > 0.0) || !e.is_finite() {
            return Err(anyhow!("--eps must be positive, got {e}"));
        }
    }
    if args.trials == 0 {
        return Err(anyhow!("--trials must be at least 1"));
    }

    let cfg = SolverConfig { max_iters: args.max_iters, rel_tol: args.rel_tol, ridge: 1e-8 };
    let t0 = Instant::now();
    let solved = solve_relaxation(&inst, &cfg)?;
    let relaxation_ms = t0.elapsed().as_secs_f64() * 1e3;
    let frac = &solved.fractional;

    let t1 = Instant::now();
    let (design, trial_objectives, trials_used) = round(&inst, frac, &args)?;
    let rounding_ms = t1.elapsed().as_secs_f64() * 1e3;

    let certificate = certificate_for(&inst, args.scheme, args.eps)?;
    let report = RunReport {
        instance: InstanceSummary {
            path: args.instance.display().to_string(),
            m: inst.m(),
            n: inst.n(),
            k: inst.k(),
            mode: inst.mode(),
        },
        scheme: args.scheme.name(),
        eps: args.eps,
        seed: args.seed,
        trials: trials_used,
        relaxation: RelaxationSummary {
            value: frac.value(),
            converged: solved.converged,
            gap: solved.gap,
            iterations: solved.iterations,
        },
        design: DesignSummary {
            members: design.members().to_vec(),
            objective: design.value(),
            ratio: design.value() / frac.value(),
        },
        trial_objectives,
        certificate,
        timings_ms: Timings { relaxation_ms, rounding_ms },
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

/// Applies the scheme; samplers take the best objective over `trials` seeded
/// runs (seeds `seed ^ t`), reporting every trial's objective.
fn round(
    inst: &Instance,
    frac: &FractionalDesign,
    args: &SolveArgs,
) -> anyhow::Result<(Design, Vec<f64>, usize)> {
    let seed = RngSeed(args.seed);
    if args.scheme.is_sampler() {
        let mut best: Option<Design> = None;
        let mut objectives = Vec::with_capacity(args.trials);
        for t in 0..args.trials {
            let d = match args.scheme {
                Scheme::SampleProportional => sample_proportional(inst, frac, seed.for_trial(t as u64))?,
                Scheme::SampleAsymptotic => sample_bernoulli_fill(
                    inst,
                    frac,
                    args.eps.expect("checked by caller"),
                    seed.for_trial(t as u64),
                )?,
                Scheme::SampleRepetitions => {
                    sample_with_repetitions(inst, frac, seed.for_trial(t as u64))?
                }
                _ => unreachable!(),
            };
            objectives.push(d.value());
            match &best {
                Some(b) if b.value() >= d.value() => {}
                _ => best = Some(d),
            }
        }
        Ok((best.expect("at least one trial"), objectives, args.trials))
    } else {
        let d = match args.scheme {
            Scheme::DerandProportional => derand::derandomize_proportional(inst, frac)?,
            Scheme::DerandAsymptotic => {
                derand::derandomize_asymptotic(inst, frac, args.eps.expect("checked by caller"))?
            }
            Scheme::DerandRepetitions => derand::derandomize_repetitions(inst, frac)?,
            _ => unreachable!(),
        };
        let objectives = vec![d.value()];
        Ok((d, objectives, 1))
    }
}

fn certificate_for(
    inst: &Instance,
    scheme: Scheme,
    eps: Option<f64>,
) -> anyhow::Result<Option<ApproximationCertificate>> {
    let (m, n, k) = (inst.m(), inst.n(), inst.k());
    let cert = match scheme {
        Scheme::SampleProportional | Scheme::DerandProportional => {
            let mut c = bounds::ratio_without_reps(m, n, k)?;
            if let Some(e) = eps.filter(|e| *e < 1.0) {
                c.corollary_floor = bounds::corollary_floor(m, k, e)?;
                c.eps = Some(e);
            }
            Some(c)
        }
        Scheme::SampleAsymptotic | Scheme::DerandAsymptotic => {
            bounds::ratio_asymptotic(m, n, k, eps.expect("checked by caller"))?
        }
        Scheme::SampleRepetitions | Scheme::DerandRepetitions => {
            let mut c = bounds::ratio_with_reps(m, k, eps.filter(|e| *e < 1.0).unwrap_or(0.5))?;
            if eps.is_none() {
                c.eps = None;
                c.threshold = None;
            }
            Some(c)
        }
    };
    Ok(cert)
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let cfg = VerifyConfig {
        max_n: args.max_n,
        max_m: args.max_m,
        max_k: args.max_k,
        seed: args.seed,
        num_instances: args.num_instances,
        h_bias: args.h_bias,
    };
    if cfg.max_m < 1 || cfg.max_k < cfg.max_m || cfg.max_n < cfg.max_k.max(3) {
        eprintln!("error: need max_m >= 1, max_k >= max_m, max_n >= max(max_k, 3)");
        return 2;
    }
    let report = run_suite(&cfg);
    print!("{}", report.render_table());
    if report.ok() {
        0
    } else {
        1
    }
}
