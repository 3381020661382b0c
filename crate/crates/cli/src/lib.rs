pub mod io;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hardy_core::bilocal::{check_bilocal, BilocalCertificate, Verdict};
use hardy_core::hardy3::{ConditionReport, HardySettings, Provenance, Tolerances, ZERO_LABELS};
use hardy_core::hardy3_sym::SYMMETRIC_ZERO_LABELS;
use hardy_core::hardy_n::hardy_set;
use hardy_core::magic::{classify, magic_frame, CanonicalForm, FULL_RANK_TOL};
use hardy_core::pipeline::{canonical_form, certify, evaluate, settings_table, PipelineOptions, TestKind};
use hardy_core::qudit::{reduce_to_3qubit, Branch, REDUCE_TOL};
use hardy_core::search::{maximize_success, q3_constant, SearchOptions};
use hardy_core::tensor::{Complex, MeasurementPair, PureState};
use hardy_core::Error;

use crate::io::{fmt17, format_settings, format_state, parse_settings, parse_state};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONSTRUCTION: i32 = 2;
pub const EXIT_NOT_ENTANGLED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hardy",
    version,
    about = "Hardy-type tests for genuine tripartite nonlocality"
)]
pub struct Cli {
    /// Emit one JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, env = "HW_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_zero: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_pos: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub lp_tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a test for the state, evaluate it and certify the table.
    Test {
        state: PathBuf,
        /// Also write the constructed settings to this file.
        #[arg(long)]
        emit_settings: Option<PathBuf>,
    },
    /// Evaluate the six conditions for given settings.
    Evaluate {
        state: PathBuf,
        settings: PathBuf,
        /// Use `~b1 a2 a3` as the last zero condition.
        #[arg(long)]
        chenq: bool,
    },
    /// Bi-local LP on the correlation table of a state and settings.
    Verify { state: PathBuf, settings: PathBuf },
    /// Magic-basis canonical form and class.
    Canonical { state: PathBuf },
    /// Local projection of a qudit state onto three qubits.
    Reduce { state: PathBuf },
    /// The n-party condition set.
    Hset { n: usize },
    /// Maximize the six-condition success probability.
    Maxprob {
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, default_value_t = 4000)]
        iters: usize,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotFullyEntangled { .. } => EXIT_NOT_ENTANGLED,
            Error::ConstructionFailed { .. }
            | Error::MagicResidualTooLarge { .. }
            | Error::NotMagicBasis(_)
            | Error::DegenerateQuadratic
            | Error::ZeroRay(_)
            | Error::LpNumericalFailure(_) => EXIT_CONSTRUCTION,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<Box<dyn std::error::Error>> for CliError {
    fn from(e: Box<dyn std::error::Error>) -> Self {
        match e.downcast::<Error>() {
            Ok(core) => (*core).into(),
            Err(other) => Self {
                code: EXIT_INPUT,
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

pub fn load_state(path: &Path) -> Result<PureState, CliError> {
    Ok(parse_state(&read(path)?)?)
}

pub fn load_settings(path: &Path, dims: &[usize]) -> Result<Vec<MeasurementPair>, CliError> {
    Ok(parse_settings(&read(path)?, dims)?)
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&format!("{x:.16e}")).expect("formatted float is valid JSON")
    } else {
        Value::Null
    }
}

fn cnum(c: Complex) -> Value {
    json!([num(c.re), num(c.im)])
}

fn ray_json(r: &[Complex]) -> Value {
    Value::Array(r.iter().map(|&c| cnum(c)).collect())
}

fn settings_json(pairs: &[MeasurementPair]) -> Value {
    Value::Array(
        pairs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                json!({
                    "party": k + 1,
                    "a": { "zero": ray_json(p.a.ray(0)), "one": ray_json(p.a.ray(1)) },
                    "b": { "zero": ray_json(p.b.ray(0)), "one": ray_json(p.b.ray(1)) },
                })
            })
            .collect(),
    )
}

fn labels(kind: TestKind) -> [&'static str; 5] {
    match kind {
        TestKind::SixCondition => ZERO_LABELS,
        TestKind::Symmetric => SYMMETRIC_ZERO_LABELS,
    }
}

fn report_json(r: &ConditionReport, kind: TestKind) -> Value {
    let zeros: serde_json::Map<String, Value> = labels(kind)
        .iter()
        .zip(&r.zeros)
        .map(|(l, z)| (l.to_string(), num(*z)))
        .collect();
    json!({
        "p_pos": num(r.p_pos),
        "zeros": zeros,
        "max_zero": num(r.max_zero()),
        "passed": r.passed,
        "tol_zero": num(r.tol.zero),
        "tol_pos": num(r.tol.pos),
    })
}

fn report_text(out: &mut String, r: &ConditionReport, kind: TestKind) {
    out.push_str(&format!("P(a1 a2 a3) = {}\n", fmt17(r.p_pos)));
    for (l, z) in labels(kind).iter().zip(&r.zeros) {
        out.push_str(&format!("P({l}) = {}\n", fmt17(*z)));
    }
    out.push_str(&format!("conditions: {}\n", if r.passed { "PASSED" } else { "FAILED" }));
}

fn lp_json(c: &BilocalCertificate) -> Value {
    json!({
        "verdict": match c.verdict { Verdict::Feasible => "FEASIBLE", Verdict::Infeasible => "INFEASIBLE" },
        "margin": num(c.margin),
    })
}

fn lp_line(c: &BilocalCertificate, tol: f64) -> String {
    match c.verdict {
        Verdict::Infeasible => format!("INFEASIBLE margin={}>{tol:e}", fmt17(c.margin)),
        Verdict::Feasible => format!("FEASIBLE margin={}<={tol:e}", fmt17(c.margin)),
    }
}

fn canon_json(c: &CanonicalForm) -> Value {
    json!({
        "h": cnum(c.h),
        "u": num(c.u),
        "v": num(c.v),
        "s": num(c.s),
        "t": num(c.t),
        "permutation": c.permutation.iter().map(|p| p + 1).collect::<Vec<_>>(),
        "magic_residual": num(c.transform.residual),
    })
}

fn canon_text(out: &mut String, c: &CanonicalForm) {
    out.push_str(&format!("h = {} {}\n", fmt17(c.h.re), fmt17(c.h.im)));
    for (name, x) in [("u", c.u), ("v", c.v), ("s", c.s), ("t", c.t)] {
        out.push_str(&format!("{name} = {}\n", fmt17(x)));
    }
    let p: Vec<String> = c.permutation.iter().map(|p| (p + 1).to_string()).collect();
    out.push_str(&format!("parties = {}\n", p.join(" ")));
    out.push_str(&format!("magic residual = {}\n", fmt17(c.transform.residual)));
}

fn kind_name(kind: TestKind) -> &'static str {
    match kind {
        TestKind::SixCondition => "six-condition",
        TestKind::Symmetric => "symmetric",
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::TNonzero => "TNonzero",
        Branch::TZero => "TZero",
    }
}

fn options(cli: &Cli) -> PipelineOptions {
    let mut o = PipelineOptions::with_seed(cli.seed);
    o.tol = Tolerances {
        zero: cli.tol_zero,
        pos: cli.tol_pos,
    };
    o.lp_tol = cli.lp_tol;
    o
}

/// Output and exit code of one invocation.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn emit(cli: &Cli, text: String, value: Value, code: i32) -> Outcome {
    if cli.json {
        Outcome {
            text: format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable")),
            code,
        }
    } else {
        Outcome { text, code }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = options(cli);
    match &cli.command {
        Command::Test { state, emit_settings } => {
            let psi = load_state(state)?;
            let c = certify(&psi, &opts)?;
            let pass = c.passed();
            if let Some(path) = emit_settings {
                std::fs::write(path, format_settings(&c.settings.pairs))?;
            }
            let mut t = String::new();
            let dims: Vec<String> = psi.dims().iter().map(|d| d.to_string()).collect();
            t.push_str(&format!("dims = {}\n", dims.join(" ")));
            canon_text(&mut t, &c.canon);
            if let Some(r) = &c.reduction {
                t.push_str(&format!("reduction = {}\n", branch_name(r.branch)));
            }
            t.push_str(&format!("class = {}\n", c.class));
            t.push_str(&format!("test = {}\n", kind_name(c.kind)));
            if let Provenance::Constructed { z, x, y, degenerate } = c.settings.provenance {
                t.push_str(&format!(
                    "z = {} {}\nx = {} {}\ny = {} {}\n",
                    fmt17(z.re),
                    fmt17(z.im),
                    fmt17(x.re),
                    fmt17(x.im),
                    fmt17(y.re),
                    fmt17(y.im)
                ));
                if degenerate {
                    t.push_str("quadratic degenerate: first setting sampled\n");
                }
            }
            t.push_str("settings:\n");
            t.push_str(&format_settings(&c.settings.pairs));
            report_text(&mut t, &c.report, c.kind);
            t.push_str(&format!("LP: {}\n", lp_line(&c.lp, cli.lp_tol)));
            t.push_str(&format!("result: {}\n", if pass { "PASS" } else { "FAIL" }));
            let v = json!({
                "dims": psi.dims(),
                "canonical": canon_json(&c.canon),
                "reduction": c.reduction.as_ref().map(|r| branch_name(r.branch)),
                "class": c.class.to_string(),
                "test": kind_name(c.kind),
                "settings": settings_json(&c.settings.pairs),
                "report": report_json(&c.report, c.kind),
                "lp": lp_json(&c.lp),
                "passed": pass,
            });
            Ok(emit(cli, t, v, if pass { EXIT_OK } else { EXIT_CONSTRUCTION }))
        }
        Command::Evaluate { state, settings, chenq } => {
            let psi = load_state(state)?;
            let pairs = load_settings(settings, psi.dims())?;
            let kind = if *chenq {
                TestKind::Symmetric
            } else {
                TestKind::SixCondition
            };
            let r = evaluate(&psi, &HardySettings::external(pairs), kind, opts.tol)?;
            let mut t = String::new();
            report_text(&mut t, &r, kind);
            Ok(emit(cli, t, report_json(&r, kind), EXIT_OK))
        }
        Command::Verify { state, settings } => {
            let psi = load_state(state)?;
            let pairs = load_settings(settings, psi.dims())?;
            let table = settings_table(&psi, &pairs)?;
            let c = check_bilocal(&table, opts.lp_tol)?;
            Ok(emit(
                cli,
                format!("{}\n", lp_line(&c, cli.lp_tol)),
                lp_json(&c),
                EXIT_OK,
            ))
        }
        Command::Canonical { state } => {
            let psi = load_state(state)?;
            let (c, reduction) = canonical_form(&psi, &opts.closest)?;
            let class = classify(&c, opts.classify_tol);
            let mut t = String::new();
            canon_text(&mut t, &c);
            if let Some(r) = &reduction {
                t.push_str(&format!("reduction = {}\n", branch_name(r.branch)));
            }
            t.push_str(&format!("class = {class}\n"));
            let mut v = canon_json(&c);
            v["class"] = json!(class.to_string());
            v["reduction"] = json!(reduction.as_ref().map(|r| branch_name(r.branch)));
            Ok(emit(cli, t, v, EXIT_OK))
        }
        Command::Reduce { state } => {
            let psi = load_state(state)?;
            hardy_core::tensor::is_fully_entangled(&psi, FULL_RANK_TOL)?;
            let (magic, _) = magic_frame(&psi, &opts.closest)?;
            let (reduced, record) = reduce_to_3qubit(&magic, REDUCE_TOL)?;
            let mut t = format!("branch = {}\n", branch_name(record.branch));
            for (k, [k0, k1]) in record.kets.iter().enumerate() {
                for (name, ket) in [("0", k0), ("1", k1)] {
                    t.push_str(&format!("party {} ket {name}:", k + 1));
                    for c in ket {
                        t.push_str(&format!(" {} {}", fmt17(c.re), fmt17(c.im)));
                    }
                    t.push('\n');
                }
            }
            t.push_str("# reduced state, magic-basis coordinates\n");
            t.push_str(&format_state(&reduced));
            let v = json!({
                "branch": branch_name(record.branch),
                "kets": record.kets.iter().map(|[a, b]| json!([ray_json(a), ray_json(b)])).collect::<Vec<_>>(),
                "state": {
                    "dims": reduced.dims(),
                    "amplitudes": reduced.amps().iter().map(|&c| cnum(c)).collect::<Vec<_>>(),
                },
            });
            Ok(emit(cli, t, v, EXIT_OK))
        }
        Command::Hset { n } => {
            let set = hardy_set(*n)?;
            let mut t = format!("P({}) > 0\n", set.positivity);
            for w in &set.zeros {
                t.push_str(&format!("P({w}) = 0\n"));
            }
            let v = json!({
                "n": set.n,
                "positivity": set.positivity.to_string(),
                "zeros": set.zeros.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            });
            Ok(emit(cli, t, v, EXIT_OK))
        }
        Command::Maxprob { restarts, iters } => {
            let r = maximize_success(&SearchOptions {
                seed: cli.seed,
                restarts: *restarts,
                iters: *iters,
            })?;
            let (xi, q3) = q3_constant();
            let within = r.p_best <= q3 + 1e-6;
            let mut t = format!("p_best = {}\n", fmt17(r.p_best));
            t.push_str(&format!(
                "q3 = {} (xi = {}) bound {}\n",
                fmt17(q3),
                fmt17(xi),
                if within { "holds" } else { "VIOLATED" }
            ));
            t.push_str(&format!("restart = {}\n", r.restart));
            canon_text(&mut t, &r.canon);
            let z = r.point.z();
            t.push_str(&format!("z = {} {}\n", fmt17(z.re), fmt17(z.im)));
            let v = json!({
                "p_best": num(r.p_best),
                "q3": num(q3),
                "xi": num(xi),
                "bound_holds": within,
                "restart": r.restart,
                "canonical": canon_json(&r.canon),
                "z": cnum(z),
                "settings": settings_json(&r.settings.pairs),
            });
            Ok(emit(cli, t, v, EXIT_OK))
        }
    }
}

/// Runs the CLI, writing the report to `out` and errors to `err`; returns the
/// exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli) {
        Ok(o) => {
            let _ = out.write_all(o.text.as_bytes());
            o.code
        }
        Err(e) => {
            if cli.json {
                let _ = writeln!(out, "{}", json!({ "error": e.message, "exit_code": e.code }));
            }
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
