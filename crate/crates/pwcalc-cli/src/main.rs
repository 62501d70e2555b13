use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pwcalc::extended_sa::Finite;
use pwcalc::harness::candidate::restricted_ylogxy;
use pwcalc::harness::{run_suite, Candidate, Profile, RandomSpec, SuiteKind};
use pwcalc::matrix_core::{c, matrix_to_json, read_matrix, write_matrix, CMatrix, CVector};
use pwcalc::perspectives_means::{connection, lebesgue_decomposition, max_f_divergence, perspective_apply_with, t2_bound};
use pwcalc::pw_calculus::ENDPOINT_TOL;
use pwcalc::scalar_functions::{parse_monotone_spec, parse_spec, power, ExtendedFunction};

/// Divergences smaller than this times Tr A + Tr B print as 0.
const DIVERGENCE_PRINT_FLOOR: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "pwcalc", version, about = "Operator perspectives and two-variable calculus of PSD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pair {
    /// JSON matrix file for the first argument
    #[arg(long = "A", value_name = "FILE")]
    a: PathBuf,
    /// JSON matrix file for the second argument
    #[arg(long = "B", value_name = "FILE")]
    b: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// φ_f(A, B) as an extended self-adjoint value
    Perspective {
        /// Function spec, e.g. `power:2`, `tlogt`, `neglog`, `repr77:<path>`
        #[arg(long = "f")]
        f: String,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Distance from 0 or 1 at which eigenvalues of R are snapped to the endpoint
        #[arg(long = "tau-end", default_value_t = ENDPOINT_TOL)]
        tau_end: f64,
    },
    /// A σ_h B for an operator monotone h ≥ 0
    Mean {
        /// Generator spec: `geometric`, `parallel`, `arithmetic`, `harmonic`, `power:p`
        #[arg(long = "h")]
        h: String,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tr φ_f(A, B), printed as an extended real
    Divergence {
        #[arg(long = "f")]
        f: String,
        #[command(flatten)]
        pair: Pair,
    },
    /// A = [B]A + (A - [B]A), the parts of A absolutely continuous and singular with respect to B
    Lebesgue {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest λ with A² ≤ λB, next to the norm of φ_{t²}(A, B)
    T2bound {
        #[command(flatten)]
        pair: Pair,
    },
    /// Runs a randomized suite; exit status 1 when any trial fails
    Suite {
        /// convexity, continuity, pw-axioms, perspective-axioms or connection-axioms
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Perspective of this function spec
        #[arg(long = "f", conflicts_with_all = ["h", "candidate"])]
        f: Option<String>,
        /// Connection of this generator spec
        #[arg(long = "h", conflicts_with = "candidate")]
        h: Option<String>,
        /// Named candidate: parallel-sum, anticommutator, ylogxy, negated-geometric, biased:<f spec>
        #[arg(long)]
        candidate: Option<String>,
        /// well-conditioned, rank-deficient:k, projection, commuting, dominated:α or singular
        #[arg(long, default_value = "well-conditioned")]
        profile: String,
        /// Write 0 for wall_time_ms so identical runs give identical reports
        #[arg(long)]
        no_timing: bool,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `pwcalc --help`");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(pair: &Pair) -> Result<(CMatrix, CMatrix), Failure> {
    Ok((read_matrix(&pair.a)?, read_matrix(&pair.b)?))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn function(spec: &str) -> Result<ExtendedFunction, Failure> {
    parse_spec(spec).map_err(usage)
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Perspective { f, pair, out, tau_end } => {
            let f = function(&f)?;
            if !(0.0..0.5).contains(&tau_end) {
                return Err(usage(format!("--tau-end must lie in [0, 0.5), got {tau_end}")));
            }
            let (a, b) = load(&pair)?;
            let result = perspective_apply_with(&f, &a, &b, tau_end)?;
            eprintln!(
                "classification: {:?}, infinity dimension: {}, eigenvalues of R snapped to 0: {}, to 1: {}",
                result.classification,
                result.value.infinity_dim(),
                result.hits_at_zero,
                result.hits_at_one
            );
            emit(&result.value.to_json(), out.as_deref())?;
        }
        Command::Mean { h, pair, out } => {
            let h = parse_monotone_spec(&h).map_err(usage)?;
            let (a, b) = load(&pair)?;
            let m = connection(&h, &a, &b)?;
            match out {
                Some(path) => write_matrix(path, &m)?,
                None => println!("{}", matrix_to_json(&m)),
            }
        }
        Command::Divergence { f, pair } => {
            let f = function(&f)?;
            let (a, b) = load(&pair)?;
            let value = max_f_divergence(&f, &a, &b)?;
            // rounding noise of the spectral assembly, relative to the input sizes
            let floor = DIVERGENCE_PRINT_FLOOR * (a.trace().re.abs() + b.trace().re.abs());
            match value {
                Finite(x) if x.abs() <= floor => println!("0"),
                other => println!("{other}"),
            }
        }
        Command::Lebesgue { pair, out } => {
            let (a, b) = load(&pair)?;
            let d = lebesgue_decomposition(&a, &b)?;
            let doc = format!(
                "{{\n\"ac_part\": {},\n\"singular_part\": {}\n}}",
                matrix_to_json(&d.ac_part),
                matrix_to_json(&d.singular_part)
            );
            emit(&doc, out.as_deref())?;
        }
        Command::T2bound { pair } => {
            let (a, b) = load(&pair)?;
            let bound = t2_bound(&a, &b)?;
            let norm = perspective_apply_with(&power(2.0)?, &a, &b, ENDPOINT_TOL)?.value.norm();
            println!("bounded: {}", bound.bounded);
            println!("lambda_min: {}", bound.lambda_min);
            println!("certified: {}", bound.certified);
            println!("perspective_norm: {norm}");
        }
        Command::Suite { name, seed, dim, trials, report, f, h, candidate, profile, no_timing } => {
            let kind: SuiteKind = name.parse().map_err(usage)?;
            if dim == 0 {
                return Err(usage("--dim must be positive"));
            }
            let cand = match (f, h, candidate) {
                (Some(f), _, _) => Candidate::perspective(&function(&f)?)?,
                (_, Some(h), _) => Candidate::connection(&parse_monotone_spec(&h).map_err(usage)?)?,
                (_, _, Some(name)) => named_candidate(&name, dim)?,
                _ => return Err(usage("one of --f, --h or --candidate is required")),
            };
            let spec = RandomSpec::new(dim, parse_profile(&profile)?, seed);
            let mut result = run_suite(kind, &cand, &spec, trials);
            if no_timing {
                result = result.without_timing();
            }
            if let Some(path) = report {
                std::fs::write(path, result.to_json())?;
            }
            println!(
                "suite {} on {}: {}/{} trials passed in {} ms",
                result.suite, result.candidate, result.passes, result.trials, result.wall_time_ms
            );
            for (check, tally) in &result.checks {
                println!("  {check}: {} run, {} failed", tally.run, tally.failed);
            }
            for (note, count) in &result.notes {
                println!("  note ({count}x): {note}");
            }
            if !result.is_clean() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn named_candidate(name: &str, dim: usize) -> Result<Candidate, Failure> {
    if let Some(spec) = name.strip_prefix("biased:") {
        let v = CVector::from_fn(dim, |i, _| c(if i == 0 { 1.0 } else { 0.0 }));
        return Ok(Candidate::biased(&function(spec)?, v)?);
    }
    Ok(match name {
        "parallel-sum" => Candidate::parallel_sum(),
        "anticommutator" => Candidate::anticommutator(),
        "ylogxy" => restricted_ylogxy()?,
        "negated-geometric" => Candidate::negated(Candidate::connection(&parse_monotone_spec("geometric")?)?),
        other => return Err(usage(format!("unknown candidate `{other}`"))),
    })
}

fn parse_profile(text: &str) -> Result<Profile, Failure> {
    let (name, arg) = text.split_once(':').unwrap_or((text, ""));
    let bad = || usage(format!("bad profile `{text}`"));
    Ok(match (name, arg) {
        ("well-conditioned", "") => Profile::WellConditioned,
        ("rank-deficient", k) => Profile::RankDeficient(k.parse().map_err(|_| bad())?),
        ("projection", "") => Profile::Projection,
        ("commuting", "") => Profile::CommutingPair,
        ("dominated", alpha) => {
            let alpha: f64 = alpha.parse().map_err(|_| bad())?;
            if !(alpha > 0.0) {
                return Err(bad());
            }
            Profile::DominatedPair(alpha)
        }
        ("singular", "") => Profile::SingularPair,
        _ => return Err(bad()),
    })
}
