//! Command-line front end.
//!
//! Every command prints one JSON [`RunReport`] on stdout. Exit codes: 0 on
//! success, 1 when a checked property is violated, 2 on input errors (in
//! which case nothing is written to stdout).

pub mod io;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::maxcorr::{extract_witness, mu_classical, mu_schmidt, mu_variational, MaxCorrError, ObservablePair};
use crate::maxent::{
    bell_fidelity, decomposition_search, detect_isotropic, fidelity_mu_lower_bound, lambda_bounds, ppt_check,
    twirl_clifford, twirl_exact, twirl_parameter, SearchConfig,
};
use crate::states::{classical_bsc, isotropic, random_density, state_distance, BipartiteState, RngSeed};

use io::{read_joint, read_state, sha256_hex, write_joint, write_state, InputError, StateFile};
use report::{matrix_json, RunReport, Status, Tolerances};
use suites::{run_suite, Suite};

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_K: usize = 8;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEARCH_ITERS: usize = 400;
pub const DEFAULT_ORACLE_ITERS: usize = 2000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxcorr", version, about = "Maximal correlation and maximal entanglement of bipartite states")]
pub struct Cli {
    /// Leave wall-clock time out of the report.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximal correlation of a state (JSON) or classical joint (.csv).
    Mu {
        file: PathBuf,
        /// Include optimal observables.
        #[arg(long)]
        witness: bool,
        /// Cross-check against the variational oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_ORACLE_ITERS)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximal correlation of a classical joint given as headerless CSV.
    MuClassical { file: PathBuf },
    /// Certified bounds on maximal entanglement.
    Ment {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_SEARCH_ITERS)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Known interval for the maximal entanglement of an isotropic state.
    IsoBounds {
        #[arg(long)]
        epsilon: f64,
    },
    /// Twirl a two-qubit state onto the isotropic line.
    Twirl {
        file: PathBuf,
        /// Also write the twirled state here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Partial-transpose separability test.
    Ppt { file: PathBuf },
    /// Write a state or joint distribution file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a randomized property suite.
    Suite {
        name: Suite,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "2x2", value_parser = parse_dims)]
        dims: (usize, usize),
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Bell state mixed with white noise.
    Isotropic {
        epsilon: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Binary symmetric joint distribution (CSV).
    Bsc {
        epsilon: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Random mixed state from the induced measure.
    Random {
        #[arg(long, default_value_t = 2)]
        da: usize,
        #[arg(long, default_value_t = 2)]
        db: usize,
        /// Defaults to full rank.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxB, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a == 0 || b == 0 || a > 4 || b > 4 {
        return Err(format!("dimensions must be in 1..=4, got {a}x{b}"));
    }
    Ok((a, b))
}

/// What a command produced before it is wrapped into a [`RunReport`].
struct Outcome {
    digest: Option<String>,
    seed: Option<u64>,
    results: Value,
    warnings: Vec<String>,
    violation: bool,
}

impl Outcome {
    fn new(results: Value) -> Self {
        Self {
            digest: None,
            seed: None,
            results,
            warnings: Vec::new(),
            violation: false,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> InputError {
    InputError::Invalid(e.to_string())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn pair_json(p: &ObservablePair) -> Value {
    json!({
        "x": matrix_json(&p.x),
        "y": matrix_json(&p.y),
        "objective": p.objective,
        "constraint_violation": p.constraint_violation(),
    })
}

fn classical_results(file: &Path) -> Result<Outcome, InputError> {
    let (joint, digest) = read_joint(file)?;
    let r = mu_classical(&joint).map_err(input_err)?;
    let mut out = Outcome::new(json!({
        "kind": "classical",
        "shape": [joint.rows(), joint.cols()],
        "mu": r.mu,
        "spectrum": r.schmidt,
        "lambda1_deviation": r.lambda1_deviation,
        "support": [r.marginal_ranks.0, r.marginal_ranks.1],
        "determinant": r.determinant,
    }));
    out.digest = Some(digest);
    out.warnings = r.warnings;
    Ok(out)
}

fn cmd_mu(file: &Path, witness: bool, oracle: bool, restarts: usize, iters: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, InputError> {
    if is_csv(file) {
        return classical_results(file);
    }
    let (state, digest) = read_state(file)?;
    let r = mu_schmidt(&state).map_err(input_err)?;
    let mut warnings = r.warnings.clone();
    let mut violation = false;
    let mut results = json!({
        "kind": "quantum",
        "dims": [state.d_a(), state.d_b()],
        "mu": r.mu,
        "schmidt": r.schmidt,
        "lambda1_deviation": r.lambda1_deviation,
        "marginal_ranks": [r.marginal_ranks.0, r.marginal_ranks.1],
    });
    if witness {
        results["witness"] = match extract_witness(&state) {
            Ok(w) => {
                if w.is_degenerate() {
                    warnings.push(format!(
                        "second Schmidt coefficient has multiplicity {}; the witness is not unique",
                        w.multiplicity
                    ));
                }
                if w.hermitian.is_none() {
                    warnings.push(format!(
                        "no Hermitian pair attains μ; best Hermitian objective {:.12}",
                        w.hermitian_value
                    ));
                }
                json!({
                    "pair": pair_json(&w.pair),
                    "hermitian": w.hermitian.as_ref().map(pair_json),
                    "hermitian_value": w.hermitian_value,
                    "multiplicity": w.multiplicity,
                })
            }
            Err(MaxCorrError::NoWitness { mu }) => {
                warnings.push(format!("μ = {mu:e}: no nonzero correlation to witness"));
                Value::Null
            }
            Err(e) => return Err(input_err(e)),
        };
    }
    if oracle {
        let v = mu_variational(&state, restarts, iters, RngSeed(seed)).map_err(input_err)?;
        let gap = v.value - r.mu;
        if gap > tol.agreement_tol {
            violation = true;
            warnings.push(format!("variational value exceeds μ by {gap:.3e}"));
        } else if gap < -tol.agreement_tol {
            warnings.push(format!("variational oracle stopped {:.3e} below μ", -gap));
        }
        if !v.converged {
            warnings.push("variational oracle hit the iteration limit".into());
        }
        results["oracle"] = json!({
            "value": v.value,
            "gap": gap,
            "agrees": gap.abs() <= tol.agreement_tol,
            "converged": v.converged,
            "iterations": v.iterations,
            "restarts": restarts,
            "restart_values": v.restart_values,
        });
    }
    Ok(Outcome {
        digest: Some(digest),
        seed: oracle.then_some(seed),
        results,
        warnings,
        violation,
    })
}

fn cmd_ment(file: &Path, config: SearchConfig) -> Result<Outcome, InputError> {
    let (state, digest) = read_state(file)?;
    let search = decomposition_search(&state, &config).map_err(input_err)?;
    let ppt = ppt_check(&state).map_err(input_err)?;
    let two_qubit = state.dims() == (2, 2);
    let lower = if two_qubit {
        Some(fidelity_mu_lower_bound(&state).map_err(input_err)?)
    } else {
        None
    };
    let mut warnings = Vec::new();
    let mut violation = false;
    if let Some(l) = lower {
        if l > search.upper_bound + 1e-8 {
            violation = true;
            warnings.push(format!("lower bound {l} exceeds certified upper bound {}", search.upper_bound));
        }
    }
    if !ppt.is_ppt && search.upper_bound <= 1e-8 {
        violation = true;
        warnings.push("entangled (NPT) state reached a zero upper bound".into());
    }
    if !ppt.conclusive {
        warnings.push(format!("PPT is not conclusive for {}x{} systems", state.d_a(), state.d_b()));
    }
    let isotropic = detect_isotropic(&state).map(|delta| {
        json!({
            "delta": delta,
            "bounds": lambda_bounds(delta).ok(),
        })
    });
    let d = &search.decomposition;
    let component_mu = d.component_mus().map_err(input_err)?;
    let results = json!({
        "dims": [state.d_a(), state.d_b()],
        "certified_upper_bound": search.upper_bound,
        "fidelity_lower_bound": lower,
        "ppt": ppt,
        "separable": ppt.conclusive.then_some(ppt.is_ppt),
        "isotropic": isotropic,
        "search": {
            "k": config.k,
            "restarts": config.restarts,
            "iters": config.iters,
            "best_restart": search.best_restart,
            "best_start": search.best_start,
            "restart_bounds": search.restart_bounds,
        },
        "decomposition": {
            "components": d.len(),
            "residual": d.residual(),
            "weights": d.weights(),
            "component_mu": component_mu,
        },
    });
    Ok(Outcome {
        digest: Some(digest),
        seed: Some(config.seed.0),
        results,
        warnings,
        violation,
    })
}

fn cmd_iso_bounds(epsilon: f64) -> Result<Outcome, InputError> {
    let bounds = lambda_bounds(epsilon).map_err(input_err)?;
    let state = isotropic(epsilon).map_err(input_err)?;
    let mu = crate::maxcorr::mu(&state).map_err(input_err)?;
    let ppt = ppt_check(&state).map_err(input_err)?;
    Ok(Outcome::new(json!({
        "bounds": bounds,
        "mu": mu,
        "bell_fidelity": bell_fidelity(&state).map_err(input_err)?,
        "fidelity_lower_bound": fidelity_mu_lower_bound(&state).map_err(input_err)?,
        "ppt_min_eigenvalue": ppt.min_eigenvalue,
    })))
}

fn cmd_twirl(file: &Path, output: Option<&Path>) -> Result<Outcome, InputError> {
    let (state, digest) = read_state(file)?;
    let exact = twirl_exact(&state).map_err(input_err)?;
    let finite = twirl_clifford(&state).map_err(input_err)?;
    let deviation = state_distance(&exact, &finite);
    let mut out = Outcome::new(json!({
        "bell_fidelity": bell_fidelity(&state).map_err(input_err)?,
        "delta": twirl_parameter(&state).map_err(input_err)?,
        "clifford_deviation": deviation,
        "twirled": StateFile::from_state(&exact),
    }));
    if deviation > 1e-10 {
        out.violation = true;
        out.warnings
            .push(format!("closed-form twirl differs from the Clifford average by {deviation:e}"));
    }
    if let Some(path) = output {
        write_state(path, &exact)?;
    }
    out.digest = Some(digest);
    Ok(out)
}

fn cmd_ppt(file: &Path) -> Result<Outcome, InputError> {
    let (state, digest) = read_state(file)?;
    let r = ppt_check(&state).map_err(input_err)?;
    let verdict = match (r.is_ppt, r.conclusive) {
        (false, _) => "entangled",
        (true, true) => "separable",
        (true, false) => "inconclusive",
    };
    let mut out = Outcome::new(json!({
        "dims": [state.d_a(), state.d_b()],
        "min_eigenvalue": r.min_eigenvalue,
        "is_ppt": r.is_ppt,
        "conclusive": r.conclusive,
        "verdict": verdict,
    }));
    out.digest = Some(digest);
    Ok(out)
}

fn file_digest(path: &Path) -> Result<String, InputError> {
    std::fs::read(path)
        .map(|b| sha256_hex(&b))
        .map_err(|source| InputError::Read {
            path: path.to_path_buf(),
            source,
        })
}

fn cmd_gen(kind: &GenKind) -> Result<Outcome, InputError> {
    let (results, path, seed) = match kind {
        GenKind::Isotropic { epsilon, output } => {
            write_state(output, &isotropic(*epsilon).map_err(input_err)?)?;
            (json!({"kind": "isotropic", "epsilon": epsilon}), output, None)
        }
        GenKind::Bsc { epsilon, output } => {
            write_joint(output, &classical_bsc(*epsilon).map_err(input_err)?)?;
            (json!({"kind": "bsc", "epsilon": epsilon}), output, None)
        }
        GenKind::Random {
            da,
            db,
            rank,
            seed,
            output,
        } => {
            let rank = rank.unwrap_or(da * db);
            let s: BipartiteState = random_density(*da, *db, rank, RngSeed(*seed)).map_err(input_err)?;
            write_state(output, &s)?;
            (json!({"kind": "random", "dims": [da, db], "rank": rank}), output, Some(*seed))
        }
    };
    let mut results = results;
    results["output"] = json!(path.display().to_string());
    results["output_digest"] = json!(file_digest(path)?);
    let mut out = Outcome::new(results);
    out.seed = seed;
    Ok(out)
}

fn cmd_suite(name: Suite, trials: usize, seed: u64, dims: (usize, usize)) -> Outcome {
    let r = run_suite(name, trials, RngSeed(seed), dims);
    let mut out = Outcome::new(serde_json::to_value(&r).expect("suite report serializes"));
    out.seed = Some(seed);
    if !r.all_passed() {
        out.violation = true;
        out.warnings.push(format!(
            "{} of {} trials violated the {} tolerance {:e}",
            r.failed,
            r.trials,
            name.name(),
            r.tolerance
        ));
    }
    out
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Mu { .. } => "mu".into(),
        Command::MuClassical { .. } => "mu-classical".into(),
        Command::Ment { .. } => "ment".into(),
        Command::IsoBounds { .. } => "iso-bounds".into(),
        Command::Twirl { .. } => "twirl".into(),
        Command::Ppt { .. } => "ppt".into(),
        Command::Gen { kind } => match kind {
            GenKind::Isotropic { .. } => "gen isotropic".into(),
            GenKind::Bsc { .. } => "gen bsc".into(),
            GenKind::Random { .. } => "gen random".into(),
        },
        Command::Suite { name, .. } => format!("suite {}", name.name()),
    }
}

fn execute(cli: &Cli, tol: &Tolerances) -> Result<Outcome, InputError> {
    match &cli.command {
        Command::Mu {
            file,
            witness,
            oracle,
            restarts,
            iters,
            seed,
        } => cmd_mu(file, *witness, *oracle, *restarts, *iters, *seed, tol),
        Command::MuClassical { file } => classical_results(file),
        Command::Ment {
            file,
            k,
            restarts,
            iters,
            seed,
        } => cmd_ment(
            file,
            SearchConfig {
                k: *k,
                restarts: *restarts,
                iters: *iters,
                seed: RngSeed(*seed),
            },
        ),
        Command::IsoBounds { epsilon } => cmd_iso_bounds(*epsilon),
        Command::Twirl { file, output } => cmd_twirl(file, output.as_deref()),
        Command::Ppt { file } => cmd_ppt(file),
        Command::Gen { kind } => cmd_gen(kind),
        Command::Suite {
            name,
            trials,
            seed,
            dims,
        } => Ok(cmd_suite(*name, *trials, *seed, *dims)),
    }
}

/// Runs a parsed command and returns the report.
pub fn run(cli: &Cli) -> Result<RunReport, InputError> {
    let start = Instant::now();
    let tol = Tolerances::from_env().map_err(InputError::Invalid)?;
    let outcome = execute(cli, &tol)?;
    let mut warnings = outcome.warnings;
    if tol.agreement_tol_source != "default" {
        warnings.push(format!(
            "agreement tolerance overridden to {:e} by {}",
            tol.agreement_tol,
            report::TOL_ENV
        ));
    }
    Ok(RunReport {
        command: command_name(&cli.command),
        input_digest: outcome.digest,
        seed: outcome.seed,
        tolerances: tol,
        status: if outcome.violation { Status::Violation } else { Status::Ok },
        results: outcome.results,
        warnings,
        wall_time_ms: (!cli.no_timing).then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Parses arguments, prints the report and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            println!("{}", report.to_json());
            match report.status {
                Status::Ok => EXIT_OK,
                Status::Violation => EXIT_VIOLATION,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(d) = e.diagnostics() {
                eprintln!("{}", serde_json::to_string_pretty(d).expect("diagnostics serialize"));
            }
            EXIT_INPUT
        }
    }
}
