//! `graphon` command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use graphon::measures::{check_flatter, check_flatter_exact, DiscreteMeasure};
use graphon::metrics::{cut_distance, cut_norm, weak_star_distance, CutNormMode, OptimizerConfig};
use graphon::multiway::{deterministic_multiway_set, multiway_hausdorff, sample_multiway_set, MultiwayMatrixSet};
use graphon::named::{build_named_graphon, NamedGraphon};
use graphon::order::{chi_estimate, preceq_necessary, sample_envelope, OrderStatus};
use graphon::reproduce::{self, Scenario};
use graphon::{common_refinement, interval_coupling, GraphonError, SignedStepKernel, StepGraphon};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "graphon", version, about = "Step-graphon calculus from the command line")]
struct Cli {
    /// Print JSON instead of the human-readable report.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the JSON result to this file.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named graphon.
    Build {
        #[arg(long)]
        name: NamedGraphon,
        /// Value of the constant graphon.
        #[arg(long)]
        c: Option<f64>,
        /// Strip width, 2^-k with 3 <= k <= 10.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Edge density of a graphon.
    Density {
        #[arg(long)]
        w: PathBuf,
    },
    /// Integral of f(W) over the unit square.
    Intf {
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        f: IntegrandArg,
    },
    /// Cut norm of a kernel, or of U - W on their interval overlay.
    Cutnorm {
        #[command(flatten)]
        input: KernelInput,
        #[arg(long, conflicts_with = "heuristic")]
        exact: bool,
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Upper bound on the cut distance.
    Cutdist {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        w: PathBuf,
        /// Number of local-search restarts.
        #[arg(long, default_value_t = 32)]
        budget: usize,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dyadic weak* distance.
    Wstar {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
    /// Is L1 flatter than L2?
    Flatness {
        #[arg(long)]
        l1: PathBuf,
        #[arg(long)]
        l2: PathBuf,
        /// Solve over exact rationals.
        #[arg(long)]
        exact_rational: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Structuredness order probes.
    #[command(subcommand)]
    Order(OrderCommand),
    /// Multiway cut sets.
    #[command(subcommand)]
    Multiway(MultiwayCommand),
    /// Re-run a worked example and compare with its predictions.
    Reproduce {
        #[arg(long)]
        which: Scenario,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct KernelInput {
    /// Signed kernel file.
    #[arg(long, conflicts_with_all = ["u", "w"], required_unless_present_all = ["u", "w"])]
    kernel: Option<PathBuf>,
    #[arg(long, requires = "w")]
    u: Option<PathBuf>,
    #[arg(long, requires = "u")]
    w: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OrderCommand {
    /// Necessary conditions for U ⪯ W.
    Check {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        w: PathBuf,
    },
    /// Sampled envelope signatures of W.
    Envelope {
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hausdorff distance between sampled envelopes.
    Chi {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum MultiwayCommand {
    /// Multiway matrices of W for parts of masses a.
    Sample {
        #[arg(long)]
        w: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only the deterministic vertex family.
        #[arg(long)]
        deterministic: bool,
    },
    /// Hausdorff distance between two sets.
    Hausdorff {
        #[arg(long)]
        su: PathBuf,
        #[arg(long)]
        sw: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandArg {
    /// x^2
    X2,
    /// |x - 1/2|
    Abs,
    /// exp(x)
    Exp,
}

impl IntegrandArg {
    fn eval(self, x: f64) -> f64 {
        match self {
            IntegrandArg::X2 => x * x,
            IntegrandArg::Abs => (x - 0.5).abs(),
            IntegrandArg::Exp => x.exp(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            IntegrandArg::X2 => "x2",
            IntegrandArg::Abs => "abs",
            IntegrandArg::Exp => "exp",
        }
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<GraphonError> for Failure {
    fn from(e: GraphonError) -> Self {
        let code = match e {
            GraphonError::SolverFailure(_) | GraphonError::ScalingDiverged { .. } => EXIT_SOLVER,
            _ => EXIT_ERROR,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_ERROR, message: format!("{}: {e}", path.display()) }
}

/// Result of a command: JSON payload, human-readable text and exit code.
struct Outcome {
    code: u8,
    json: serde_json::Value,
    text: String,
}

impl Outcome {
    fn ok(json: serde_json::Value, text: String) -> Self {
        Outcome { code: EXIT_OK, json, text }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure { code: EXIT_ERROR, message: format!("serialization failed: {e}") })
}

/// Reads JSON from a file, or from standard input when the path is `-`.
fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map_err(|e| io_failure(path, e))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    }
    serde_json::from_str(&text).map_err(|e| io_failure(path, e))
}

fn matrix_text(m: &[Vec<f64>]) -> String {
    m.iter().map(|r| r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n")
}

fn graphon_text(w: &StepGraphon) -> String {
    let weights: Vec<String> = w.weights().iter().map(|a| format!("{a:.6}")).collect();
    format!("{} blocks, weights {}\nvalues\n{}", w.num_blocks(), weights.join(" "), matrix_text(w.values()))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Build { name, c, eps } => {
            let w = build_named_graphon(*name, *c, *eps)?;
            Ok(Outcome::ok(to_json(&w)?, graphon_text(&w)))
        }
        Command::Density { w } => {
            let w: StepGraphon = read_json(w)?;
            let d = w.edge_density();
            Ok(Outcome::ok(json!({ "edge_density": d }), format!("edge density {d:.12}")))
        }
        Command::Intf { w, f } => {
            let w: StepGraphon = read_json(w)?;
            let v = w.int_f(|x| f.eval(x));
            Ok(Outcome::ok(json!({ "f": f.name(), "value": v }), format!("int {}(W) = {v:.12}", f.name())))
        }
        Command::Cutnorm { input, exact, heuristic: _, seed } => {
            let y = match (&input.kernel, &input.u, &input.w) {
                (Some(k), _, _) => read_json::<SignedStepKernel>(k)?,
                (None, Some(u), Some(w)) => {
                    let u: StepGraphon = read_json(u)?;
                    let w: StepGraphon = read_json(w)?;
                    let (ur, wr) = common_refinement(&u, &w, &interval_coupling(&u, &w))?;
                    SignedStepKernel::difference(&ur, &wr)?
                }
                _ => unreachable!("clap enforces the input group"),
            };
            let mode = if *exact { CutNormMode::Exact } else { CutNormMode::Heuristic };
            let r = cut_norm(&y, mode, *seed)?;
            let bits = |v: &[u8]| v.iter().map(|b| b.to_string()).collect::<String>();
            let text =
                format!("cut norm {:.12} ({:?})\nS {}\nT {}", r.value, r.mode, bits(&r.witness_s), bits(&r.witness_t))
                    .to_lowercase();
            Ok(Outcome::ok(to_json(&r)?, text))
        }
        Command::Cutdist { u, w, budget, max_iters, seed } => {
            let u: StepGraphon = read_json(u)?;
            let w: StepGraphon = read_json(w)?;
            let cfg = OptimizerConfig { restarts: *budget, max_iters: *max_iters, ..OptimizerConfig::default() };
            let r = cut_distance(&u, &w, &cfg, *seed);
            let text = format!(
                "cut distance <= {:.12}\npermutation sweep {}\ncoupling\n{}",
                r.value,
                r.permutation_sweep,
                matrix_text(r.coupling.matrix())
            );
            Ok(Outcome::ok(to_json(&r)?, text))
        }
        Command::Wstar { u, w, depth } => {
            let u: StepGraphon = read_json(u)?;
            let w: StepGraphon = read_json(w)?;
            let d = weak_star_distance(&u, &w, *depth);
            Ok(Outcome::ok(
                json!({ "depth": depth, "distance": d }),
                format!("weak* distance at depth {depth}: {d:.12e}"),
            ))
        }
        Command::Flatness { l1, l2, exact_rational, tol } => {
            let l1: DiscreteMeasure = read_json(l1)?;
            let l2: DiscreteMeasure = read_json(l2)?;
            let r = if *exact_rational { check_flatter_exact(&l1, &l2)? } else { check_flatter(&l1, &l2, *tol)? };
            let mut text = format!("feasible {}\nresidual {:.3e}", r.feasible, r.residual);
            if let Some(reason) = &r.reason {
                text.push_str(&format!("\nreason {reason}"));
            }
            if let Some(c) = &r.coupling {
                text.push_str(&format!("\ncoupling\n{}", matrix_text(c.matrix())));
            }
            Ok(Outcome { code: if r.feasible { EXIT_OK } else { EXIT_NEGATIVE }, json: to_json(&r)?, text })
        }
        Command::Order(cmd) => run_order(cmd),
        Command::Multiway(cmd) => run_multiway(cmd),
        Command::Reproduce { which, eps, seed } => {
            let r = reproduce::run(*which, *eps, *seed)?;
            Ok(Outcome {
                code: if r.passed() { EXIT_OK } else { EXIT_TOLERANCE },
                json: to_json(&r)?,
                text: r.to_string().trim_end().to_string(),
            })
        }
    }
}

fn run_order(cmd: &OrderCommand) -> Result<Outcome, Failure> {
    match cmd {
        OrderCommand::Check { u, w } => {
            let u: StepGraphon = read_json(u)?;
            let w: StepGraphon = read_json(w)?;
            let v = preceq_necessary(&u, &w)?;
            let mut lines = vec![format!("status {}", if v.is_consistent() { "consistent" } else { "refuted" })];
            for r in &v.reasons {
                let mark = if r.passed { "ok  " } else { "FAIL" };
                lines.push(format!("  [{mark}] {:?}: {}", r.condition, r.detail));
            }
            Ok(Outcome {
                code: if v.status == OrderStatus::Consistent { EXIT_OK } else { EXIT_NEGATIVE },
                json: to_json(&v)?,
                text: lines.join("\n"),
            })
        }
        OrderCommand::Envelope { w, n, count, depth, seed } => {
            let w: StepGraphon = read_json(w)?;
            let e = sample_envelope(&w, *n, *count, *depth, *seed)?;
            let text = format!(
                "{} signatures of length {} at resolution {} and depth {}",
                e.signatures.len(),
                e.signatures.first().map_or(0, Vec::len),
                e.resolution,
                e.depth
            );
            Ok(Outcome::ok(to_json(&e)?, text))
        }
        OrderCommand::Chi { u, w, n, count, depth, seed } => {
            let u: StepGraphon = read_json(u)?;
            let w: StepGraphon = read_json(w)?;
            let chi = chi_estimate(&u, &w, *n, *count, *depth, *seed)?;
            Ok(Outcome::ok(
                json!({ "chi": chi, "resolution": n, "count": count, "depth": depth, "seed": seed }),
                format!("chi estimate {chi:.12e}"),
            ))
        }
    }
}

fn run_multiway(cmd: &MultiwayCommand) -> Result<Outcome, Failure> {
    match cmd {
        MultiwayCommand::Sample { w, a, count, seed, deterministic } => {
            let w: StepGraphon = read_json(w)?;
            let s = if *deterministic {
                deterministic_multiway_set(&w, a)?
            } else {
                sample_multiway_set(&w, a, *count, *seed)?
            };
            let text = format!("{} matrices of size {}", s.len(), s.a().len());
            Ok(Outcome::ok(to_json(&s)?, text))
        }
        MultiwayCommand::Hausdorff { su, sw } => {
            let su: MultiwayMatrixSet = read_json(su)?;
            let sw: MultiwayMatrixSet = read_json(sw)?;
            let d = multiway_hausdorff(&su, &sw)?;
            Ok(Outcome::ok(json!({ "distance": d }), format!("hausdorff distance {d:.12e}")))
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), Failure> {
    let pretty = serde_json::to_string_pretty(&outcome.json)
        .map_err(|e| Failure { code: EXIT_ERROR, message: e.to_string() })?;
    if let Some(path) = &cli.out {
        fs::write(path, format!("{pretty}\n")).map_err(|e| io_failure(path, e))?;
    }
    let body = if cli.json { &pretty } else { &outcome.text };
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{body}").map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    let result = run(&cli).and_then(|outcome| {
        emit(&cli, &outcome)?;
        Ok(outcome.code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
