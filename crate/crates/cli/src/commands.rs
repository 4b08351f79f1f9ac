use std::fmt;

use lipconc::harness::run_selftest;
use lipconc::lp::{lipschitz_constant, phi_norm_certified, verify_phi_psi};
use lipconc::martingale::{azuma_bound, concentration_bound_from_parts, martingale_profile, verify_sumvi_with_delta};
use lipconc::mixing::{delta_matrix, operator_norm_2};
use lipconc::montecarlo::{empirical_tail, SimulationConfig};
use lipconc::psi::{psi, psi_decomposition_rhs, psi_norm};
use lipconc::rational;
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::problem::{InputError, Problem};

pub const DEFAULT_SELFTEST_INSTANCES: usize = 500;
pub const DEFAULT_SELFTEST_SEED: u64 = 20_241_015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Psi,
    Phi,
    VerifyLp,
    Decompose,
    Eta,
    Martingale,
    Bound,
    Simulate,
    Selftest,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Psi => "psi",
            Subcommand::Phi => "phi",
            Subcommand::VerifyLp => "verify-lp",
            Subcommand::Decompose => "decompose",
            Subcommand::Eta => "eta",
            Subcommand::Martingale => "martingale",
            Subcommand::Bound => "bound",
            Subcommand::Simulate => "simulate",
            Subcommand::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub instances: Option<usize>,
    pub seed: Option<u64>,
    pub max_table: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { instances: None, seed: None, max_table: 1_000_000 }
    }
}

#[derive(Debug)]
pub enum CommandError {
    Input(InputError),
    Certificate(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Input(_) => 1,
            CommandError::Certificate(_) => 2,
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandError::Input(e) => write!(f, "invalid input: {e}"),
            CommandError::Certificate(msg) => write!(f, "internal certificate failure: {msg}"),
        }
    }
}

impl From<InputError> for CommandError {
    fn from(e: InputError) -> Self {
        CommandError::Input(e)
    }
}

impl From<lipconc::Error> for CommandError {
    fn from(e: lipconc::Error) -> Self {
        match e {
            lipconc::Error::CertificateFailure(msg) => CommandError::Certificate(msg),
            other => CommandError::Input(InputError::new("", other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    /// One line for standard error.
    pub summary: String,
    /// A verification in the payload failed; the process exits with 3.
    pub violation: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.violation {
            3
        } else {
            0
        }
    }
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn r(x: &lipconc::Rational) -> Value {
    Value::String(rational::to_string(x))
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

struct Payload {
    fields: Map<String, Value>,
    summary: String,
    violation: bool,
    seed: Option<u64>,
}

impl Payload {
    fn new(fields: Value, summary: String) -> Self {
        let fields = match fields {
            Value::Object(map) => map,
            other => {
                let mut map = Map::new();
                map.insert("result".into(), other);
                map
            }
        };
        Self { fields, summary, violation: false, seed: None }
    }
}

fn parse_problem(input: Option<&[u8]>) -> Result<Problem, CommandError> {
    let bytes = input.ok_or_else(|| InputError::new("", "this command needs a problem file"))?;
    let text = std::str::from_utf8(bytes).map_err(|_| InputError::new("", "problem file is not UTF-8"))?;
    Ok(Problem::from_json_str(text)?)
}

/// Runs one subcommand on the raw problem-file bytes.
pub fn run(command: Subcommand, input: Option<&[u8]>, options: &Options) -> Result<Outcome, CommandError> {
    let payload = match command {
        Subcommand::Selftest => selftest(options)?,
        _ => {
            let problem = parse_problem(input)?;
            match command {
                Subcommand::Psi => psi_cmd(&problem, options)?,
                Subcommand::Phi => phi_cmd(&problem, options)?,
                Subcommand::VerifyLp => verify_lp(&problem, options)?,
                Subcommand::Decompose => decompose(&problem, options)?,
                Subcommand::Eta => eta_cmd(&problem, options)?,
                Subcommand::Martingale => martingale(&problem, options)?,
                Subcommand::Bound => bound(&problem, options)?,
                Subcommand::Simulate => simulate(&problem, options)?,
                Subcommand::Selftest => unreachable!(),
            }
        }
    };

    let mut report = Map::new();
    report.insert("tool".into(), json!("lipconc"));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("command".into(), json!(command.name()));
    report.insert("input_digest".into(), input.map_or(Value::Null, |b| json!(digest(b))));
    if let Some(seed) = payload.seed {
        report.insert("seed".into(), json!(seed));
    }
    report.extend(payload.fields);
    Ok(Outcome {
        report: Value::Object(report),
        summary: payload.summary,
        violation: payload.violation,
    })
}

fn psi_cmd(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, kappa) = (p.weights()?, p.function_table(o.max_table)?);
    let value = psi(w, &kappa)?;
    let norm = psi_norm(w, &kappa)?;
    let summary = format!("ψ = {}, Ψ-norm = {}", rational::to_string(&value), rational::to_string(&norm));
    Ok(Payload::new(json!({ "psi": r(&value), "psi_norm": r(&norm) }), summary))
}

fn phi_cmd(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, kappa) = (p.weights()?, p.function_table(o.max_table)?);
    let norm = phi_norm_certified(&kappa, w)?;
    let summary = format!(
        "Φ-norm = {} ({} + {} pivots, certificates verified)",
        rational::to_string(&norm.value),
        norm.positive.pivots,
        norm.negative.pivots
    );
    Ok(Payload::new(
        json!({
            "phi_norm": r(&norm.value),
            "certificate": { "positive": to_value(&norm.positive), "negative": to_value(&norm.negative) },
        }),
        summary,
    ))
}

fn verify_lp(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, kappa) = (p.weights()?, p.function_table(o.max_table)?);
    let v = p.shift();
    let report = verify_phi_psi(&kappa, w, &v)?;
    let summary = format!(
        "sup ⟨κ,φ⟩ = {} ≤ {}: {}",
        rational::to_string(&report.lhs),
        rational::to_string(&report.rhs),
        if report.all_hold() { "holds" } else { "VIOLATED" }
    );
    let mut payload = Payload::new(to_value(&report), summary);
    payload.fields.insert("v".into(), r(&v));
    payload.violation = !report.all_hold();
    Ok(payload)
}

fn decompose(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    if p.n == 0 {
        return Err(InputError::new("n", "decomposition needs n ≥ 1").into());
    }
    let (w, kappa) = (p.weights()?, p.function_table(o.max_table)?);
    let lhs = psi(w, &kappa)?;
    let rhs = psi_decomposition_rhs(w, &kappa)?;
    let holds = lhs == rhs;
    let summary = format!(
        "ψ = {}, section decomposition = {}: {}",
        rational::to_string(&lhs),
        rational::to_string(&rhs),
        if holds { "equal" } else { "MISMATCH" }
    );
    let mut payload = Payload::new(json!({ "psi": r(&lhs), "decomposition_rhs": r(&rhs), "holds": holds }), summary);
    payload.violation = !holds;
    Ok(payload)
}

fn eta_cmd(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let measure = p.measure(o.max_table)?;
    let delta = delta_matrix(&measure)?;
    let norm = operator_norm_2(&delta);
    let n = delta.n();
    let eta_bar: Vec<Value> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| json!({ "i": i + 1, "j": j + 1, "value": r(&delta.entries()[i][j]) }))
        .collect();
    let summary = format!("Δ_{n} computed, ‖Δ‖₂ ≤ {norm}");
    Ok(Payload::new(
        json!({ "eta_bar": eta_bar, "delta": to_value(&delta), "delta_norm": norm }),
        summary,
    ))
}

fn martingale(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, f, measure) = (p.weights()?, p.function_table(o.max_table)?, p.measure(o.max_table)?);
    let delta = delta_matrix(&measure)?;
    let profile = martingale_profile(&f, &measure)?;
    let report = verify_sumvi_with_delta(&f, &measure, w, &delta)?;
    let summary = format!(
        "D² = {} ≤ ‖f‖²‖Δw‖² = {}: {}",
        rational::to_string(&report.lhs),
        rational::to_string(&report.rhs),
        if report.all_hold() { "holds" } else { "VIOLATED" }
    );
    let mut payload = Payload::new(
        json!({ "profile": to_value(&profile), "delta": to_value(&delta), "bound": to_value(&report) }),
        summary,
    );
    payload.violation = !report.all_hold();
    Ok(payload)
}

fn bound(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, f, measure) = (p.weights()?, p.function_table(o.max_table)?, p.measure(o.max_table)?);
    let thresholds = p.thresholds()?;
    let lipschitz = lipschitz_constant(&f, w)?;
    let delta_norm = operator_norm_2(&delta_matrix(&measure)?);
    let profile = martingale_profile(&f, &measure)?;
    let d2 = rational::to_f64(&profile.d_squared);
    let bounds = thresholds
        .iter()
        .map(|&t| {
            let corollary = concentration_bound_from_parts(&lipschitz, w, delta_norm, t)?;
            let azuma = if profile.d_squared.is_zero() { 0.0 } else { azuma_bound(t, d2)? };
            Ok(json!({ "t": t, "corollary": corollary, "azuma": azuma }))
        })
        .collect::<lipconc::Result<Vec<_>>>()?;
    let summary = format!("{} thresholds evaluated, ‖f‖_Lip = {}", bounds.len(), rational::to_string(&lipschitz));
    Ok(Payload::new(
        json!({
            "lipschitz": r(&lipschitz),
            "w_norm_squared": r(&w.norm_squared()),
            "delta_norm": delta_norm,
            "d_squared": r(&profile.d_squared),
            "bounds": bounds,
        }),
        summary,
    ))
}

fn simulate(p: &Problem, o: &Options) -> Result<Payload, CommandError> {
    let (w, f, measure) = (p.weights()?, p.function_table(o.max_table)?, p.measure(o.max_table)?);
    let mut cfg: SimulationConfig = p.simulation()?.clone();
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    let report = empirical_tail(&f, &measure, w, &cfg)?;
    let summary = format!(
        "{} samples, seed {}: {}",
        cfg.sample_count,
        cfg.seed,
        if report.all_within_bound() { "all frequencies within bounds" } else { "FREQUENCY ABOVE BOUND" }
    );
    let mut payload = Payload::new(to_value(&report), summary);
    payload.fields.remove("seed");
    payload.seed = Some(cfg.seed);
    payload.violation = !report.all_within_bound();
    Ok(payload)
}

fn selftest(o: &Options) -> Result<Payload, CommandError> {
    let instances = o.instances.unwrap_or(DEFAULT_SELFTEST_INSTANCES);
    if instances == 0 {
        return Err(InputError::new("--instances", "must be at least 1").into());
    }
    let seed = o.seed.unwrap_or(DEFAULT_SELFTEST_SEED);
    let report = run_selftest(instances, seed)?;
    let summary = format!(
        "selftest: {instances} instances per check, seed {seed}: {}",
        if report.passed { "all checks passed" } else { "FAILURES" }
    );
    let mut payload = Payload::new(to_value(&report), summary);
    payload.fields.remove("seed");
    payload.seed = Some(seed);
    payload.violation = !report.passed;
    Ok(payload)
}
