//! Command-line front end: every subcommand emits one JSON report.
//!
//! Windows are written `a..b` and are inclusive on both ends; `a <= b` is required.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::actions::{self, ActionError};
use crate::fplinalg::{Field, LinComb, LinalgError};
use crate::operads::{self, Flavor, OperadElt, OperadError};
use crate::simplicial::{self, BasedSimplicialSet, SimplicialData, SimplicialError, SimplicialJson};
use crate::spectra::{self, Spectrum, SpectrumError, SpectrumJson};
use crate::stabilization::{self, CanonicalE, Side, StabError};
use crate::steenrod::{self, Adem, Mono, SteenrodError};
use crate::suite;

pub const DEFAULT_BUDGET: usize = 1 << 20;

#[derive(Parser, Debug, Serialize)]
#[command(name = "opsteen", version, about = "Operads, Kan suspensions, spectra and Steenrod operations over F_p")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Enumeration budget: the most basis elements or simplices built in one degree.
    #[arg(long, global = true, env = "OPSTEEN_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Print wall time to stderr (never written into the report).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Based simplicial sets: examples, validation, Kan suspension, Moore loops, chains.
    #[command(subcommand)]
    Sset(SsetOp),
    /// Surjection (MS) and Barratt-Eccles (BE) operad elements.
    #[command(subcommand)]
    Operad(OperadOp),
    /// Suspension towers, stabilization, the stable arity-2 complex.
    #[command(subcommand)]
    Stable(StableOp),
    /// Adem rewriting, bases, projection to the Steenrod algebra, the 1 - P^0 sequence.
    #[command(subcommand)]
    Adem(AdemOp),
    /// Sequential spectra: Eilenberg-MacLane and suspension spectra, spectral (co)chains.
    #[command(subcommand)]
    Spectrum(SpectrumOp),
    /// Operations on spectra and on free algebras over spheres.
    #[command(subcommand)]
    Act(ActOp),
    /// Run the acceptance battery.
    Suite(SuiteArgs),
}

/// An inclusive integer range `a..b`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("window {s:?} is not of the form a..b"))?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad window start {a:?}"))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad window end {b:?}"))?;
    if lo > hi {
        return Err(format!("window {lo}..{hi} is empty"));
    }
    Ok(Window { lo, hi })
}

/// `sphere:q` names the free algebra generator of degree q.
fn parse_sphere(s: &str) -> Result<i64, String> {
    s.strip_prefix("sphere:").and_then(|q| q.parse().ok()).ok_or_else(|| format!("expected sphere:<q>, got {s:?}"))
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FlavorArg {
    Ms,
    Be,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Flavor {
        match f {
            FlavorArg::Ms => Flavor::Ms,
            FlavorArg::Be => Flavor::Be,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Stable,
    Unstable,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraArg {
    /// The generalized algebra B: all integer indices, Adem relations only.
    B,
    /// The Steenrod algebra A: nonnegative indices and P^0 = 1.
    A,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SsetOp {
    /// Built-in examples: point, rp2, rp2-plus, sphere:N, simplex:N, simplex-plus:N, points:M.
    Example {
        name: String,
        #[arg(long, default_value_t = 4)]
        cutoff: usize,
    },
    /// Check the simplicial identities.
    Validate { input: String },
    /// Kan suspension.
    Suspend { input: String },
    /// Moore loop space (cutoff drops by one).
    Loop { input: String },
    /// Normalized reduced chains and their Betti numbers.
    Chains {
        input: String,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperadOp {
    /// List basis elements of one arity and degree.
    Basis {
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        degree: i64,
    },
    /// Differential of an element (JSON file or inline JSON).
    Diff { input: String },
    /// Partial composition `a ∘_r b`.
    Compose {
        a: String,
        b: String,
        #[arg(long)]
        r: usize,
    },
    /// Table reduction BE → MS.
    Tr { input: String },
    /// Stabilization map Ψ (lowers degree by arity − 1).
    Psi { input: String },
    /// Evaluate the co-operation ⟨f⟩ on one simplex of a based simplicial set.
    Aw {
        input: String,
        #[arg(long)]
        sset: String,
        #[arg(long)]
        dim: usize,
        /// Simplex label, e.g. "(0,1,2)".
        #[arg(long)]
        simplex: String,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StableOp {
    /// H_d(Σ^k P(n)) for k = 0..levels with the Ψ connecting maps.
    Tower {
        #[arg(long, value_enum, default_value = "be")]
        flavor: FlavorArg,
        #[arg(long)]
        arity: usize,
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Betti numbers of the stable arity-2 complex and of its Σ_2-coinvariants (p = 2).
    Est2 {
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-5..5")]
        window: Window,
    },
    /// Components of e_d^un or e_d^st and the coherence check Ψ(x_{k+1}) = x_k.
    Canonical {
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        #[arg(long, value_enum, default_value = "stable")]
        side: SideArg,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdemOp {
    /// Rewrite to admissible form, e.g. "P^1 P^1" or "bP^2 P^0"; sums with '+'.
    Expand {
        word: String,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, value_enum, default_value = "b")]
        algebra: AlgebraArg,
    },
    /// Product of two sums.
    Mul {
        a: String,
        b: String,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, value_enum, default_value = "b")]
        algebra: AlgebraArg,
    },
    /// Admissible basis in one degree: excess at most K in B, or the Cartan-Serre basis of A.
    Basis {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        /// Excess bound K; omit for the basis of A.
        #[arg(long, allow_hyphen_values = true)]
        excess: Option<i64>,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
    },
    /// Image in the Steenrod algebra A.
    Project {
        word: String,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Rank checks for 0 → B → B → A → 0 with the map 1 − P^0.
    Exact {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-3..4")]
        window: Window,
        #[arg(long, default_value_t = 3)]
        ceiling: i64,
        /// Weight bound t; words have length at most log_p t.
        #[arg(long)]
        t: Option<u64>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumOp {
    /// Eilenberg-MacLane spectrum Σ^n HF_p from the cocycle model.
    BuildEm {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 4)]
        cutoff: usize,
    },
    /// Shifted suspension spectrum Σ^{∞−shift} S.
    BuildSusp {
        input: String,
        #[arg(long, default_value_t = 0)]
        shift: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Check the structure maps.
    Validate { input: String },
    /// Spectral chains in a degree window, with the stabilization witness.
    Chains {
        input: String,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Window,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Spectral cochains in a degree window.
    Cohomology {
        input: String,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Window,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActOp {
    /// Tables of P^s: H^q → H^{q+s} for every q with both degrees in the window (p = 2).
    Psq {
        #[arg(long, allow_hyphen_values = true)]
        s: i64,
        #[arg(long)]
        spectrum: String,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Window,
        /// Use the unstable e_d^un at level 0 instead of the stable element.
        #[arg(long)]
        unstable: bool,
    },
    /// Homology of the truncated free algebra over Σ^k E on one generator.
    FreeH {
        #[arg(long, value_parser = parse_sphere, default_value = "sphere:0")]
        x: i64,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Whether P^s of the generator is nonzero at level k.
    FreeOp {
        #[arg(long, value_parser = parse_sphere, default_value = "sphere:0")]
        x: i64,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, allow_hyphen_values = true)]
        s: i64,
    },
    /// Ψ tower maps on the free algebra truncations: products and the unit die.
    Products {
        #[arg(long, value_parser = parse_sphere, default_value = "sphere:1")]
        x: i64,
        #[arg(long, default_value_t = 4)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        max_k: usize,
    },
    /// Partition towers for arities j: mixed partitions vanish in the limit.
    Additivity {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        arities: Vec<usize>,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "0..1")]
        window: Window,
        /// Levels per arity, in the order of --arities; a single value applies to all.
        #[arg(long, value_delimiter = ',', default_value = "3,2")]
        levels: Vec<usize>,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = suite::DEFAULT_SEED)]
    pub seed: u64,
    /// Comma-separated criterion ids (1 to 16).
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
    /// Skip the second run and the determinism criterion.
    #[arg(long)]
    pub no_repeat: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed input or a failed validation: exit 1.
    Validation,
    /// Budget or window too small for the job: exit 2.
    Insufficient,
}

#[derive(Clone, Debug, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// What the job would need, when known.
    pub required: Value,
}

impl CliError {
    fn validation(message: impl Into<String>) -> CliError {
        CliError { kind: ErrorKind::Validation, message: message.into(), required: Value::Null }
    }

    fn insufficient(message: impl Into<String>, required: Value) -> CliError {
        CliError { kind: ErrorKind::Insufficient, message: message.into(), required }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> CliError {
        match e {
            LinalgError::OutOfWindow { degree, lo, hi } => {
                CliError::insufficient(e.to_string(), json!({ "degree": degree, "stored": [lo, hi] }))
            }
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<SimplicialError> for CliError {
    fn from(e: SimplicialError) -> CliError {
        match e {
            SimplicialError::Linalg(l) => l.into(),
            SimplicialError::Cutoff { dim, cutoff } => CliError::insufficient(e.to_string(), json!({ "dimension": dim, "cutoff": cutoff })),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<OperadError> for CliError {
    fn from(e: OperadError) -> CliError {
        match e {
            OperadError::Linalg(l) => l.into(),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> CliError {
        let msg = e.to_string();
        match e {
            SpectrumError::Simplicial(s) => s.into(),
            SpectrumError::Linalg(l) => l.into(),
            SpectrumError::Cutoff { need, cutoff } => CliError::insufficient(msg, json!({ "cutoff": need, "have": cutoff })),
            SpectrumError::Budget { level, dim, count, budget } => {
                CliError::insufficient(msg, json!({ "level": level, "dimension": dim, "count": count.to_string(), "budget": budget }))
            }
            SpectrumError::Window { lo, hi, level, need, cutoff } => {
                CliError::insufficient(msg, json!({ "window": [lo, hi], "level": level, "cutoff": need, "have": cutoff }))
            }
            SpectrumError::Mismatch(_) => CliError::validation(msg),
        }
    }
}

impl From<StabError> for CliError {
    fn from(e: StabError) -> CliError {
        let msg = e.to_string();
        match e {
            StabError::Linalg(l) => l.into(),
            StabError::Operad(o) => o.into(),
            StabError::Budget { what, count, budget } => {
                CliError::insufficient(msg, json!({ "what": what, "count": count, "budget": budget }))
            }
            StabError::Window(w) => CliError::insufficient(msg, json!({ "reason": w })),
            StabError::NeedsTwo(_) | StabError::Tower(_) => CliError::validation(msg),
        }
    }
}

impl From<SteenrodError> for CliError {
    fn from(e: SteenrodError) -> CliError {
        let msg = e.to_string();
        match e {
            SteenrodError::Window { first, second, have_first, have_second } => {
                CliError::insufficient(msg, json!({ "ceilings": [first, second], "have": [have_first, have_second] }))
            }
            SteenrodError::Projection { need, have } => CliError::insufficient(msg, json!({ "ceiling": need, "have": have })),
            _ => CliError::validation(msg),
        }
    }
}

impl From<ActionError> for CliError {
    fn from(e: ActionError) -> CliError {
        let msg = e.to_string();
        match e {
            ActionError::Spectrum(s) => s.into(),
            ActionError::Stab(s) => s.into(),
            ActionError::Linalg(l) => l.into(),
            ActionError::Operad(o) => o.into(),
            ActionError::Window(w) => CliError::insufficient(msg, json!({ "reason": w })),
            ActionError::Budget { what, count, budget } => {
                CliError::insufficient(msg, json!({ "what": what, "count": count, "budget": budget }))
            }
            ActionError::NeedsTwo(_) | ActionError::NotCocycle(_) => CliError::validation(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::validation(format!("malformed JSON: {e}"))
    }
}

/// What a handler produced.
pub struct Done {
    pub result: Value,
    pub certificates: Value,
    /// False when the job ran but a validation it performs failed.
    pub valid: bool,
}

fn done(result: Value) -> Result<Done, CliError> {
    Ok(Done { result, certificates: Value::Null, valid: true })
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Value,
    pub status: &'static str,
    pub result: Value,
    pub certificates: Value,
    pub error: Option<CliError>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            "ok" => 0,
            "insufficient" => 2,
            _ => 1,
        }
    }
}

fn command_name(c: &Command) -> String {
    let (top, op) = match c {
        Command::Sset(op) => ("sset", serde_json::to_value(op)),
        Command::Operad(op) => ("operad", serde_json::to_value(op)),
        Command::Stable(op) => ("stable", serde_json::to_value(op)),
        Command::Adem(op) => ("adem", serde_json::to_value(op)),
        Command::Spectrum(op) => ("spectrum", serde_json::to_value(op)),
        Command::Act(op) => ("act", serde_json::to_value(op)),
        Command::Suite(_) => return "suite".into(),
    };
    let sub = match op {
        Ok(Value::Object(m)) => m.keys().next().cloned(),
        Ok(Value::String(s)) => Some(s),
        _ => None,
    };
    match sub {
        Some(s) => format!("{top} {s}"),
        None => top.into(),
    }
}

/// Runs one job and assembles its report.
pub fn run(cli: &Cli) -> Report {
    let outcome = dispatch(cli);
    let inputs = json!({ "args": serde_json::to_value(&cli.command).unwrap_or(Value::Null), "budget": cli.budget });
    let command = command_name(&cli.command);
    match outcome {
        Ok(d) => Report {
            schema_version: suite::SCHEMA_VERSION,
            command,
            inputs,
            status: if d.valid { "ok" } else { "validation_failure" },
            result: d.result,
            certificates: d.certificates,
            error: None,
        },
        Err(e) => Report {
            schema_version: suite::SCHEMA_VERSION,
            command,
            inputs,
            status: match e.kind {
                ErrorKind::Validation => "validation_failure",
                ErrorKind::Insufficient => "insufficient",
            },
            result: Value::Null,
            certificates: Value::Null,
            error: Some(e),
        },
    }
}

fn dispatch(cli: &Cli) -> Result<Done, CliError> {
    let budget = cli.budget;
    match &cli.command {
        Command::Sset(op) => sset(op),
        Command::Operad(op) => operad(op),
        Command::Stable(op) => stable(op, budget),
        Command::Adem(op) => adem(op),
        Command::Spectrum(op) => spectrum(op, budget),
        Command::Act(op) => act(op, budget),
        Command::Suite(a) => run_suite(a, budget),
    }
}

fn field(p: u32) -> Result<Field, CliError> {
    Ok(Field::new(p)?)
}

/// Inline JSON (starting with `{`) or a path to a JSON file; a report envelope yields its `result`.
fn read_json<T: DeserializeOwned>(src: &str) -> Result<T, CliError> {
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        std::fs::read_to_string(src).map_err(|e| CliError::validation(format!("cannot read {src}: {e}")))?
    };
    let mut v: Value = serde_json::from_str(&text)?;
    if v.get("schema_version").is_some() {
        v = v.get_mut("result").map(Value::take).unwrap_or(Value::Null);
    }
    Ok(serde_json::from_value(v)?)
}

fn example(name: &str, cutoff: usize) -> Result<BasedSimplicialSet, CliError> {
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => (b, Some(a.parse::<usize>().map_err(|_| CliError::validation(format!("bad size in {name:?}")))?)),
        None => (name, None),
    };
    let s = match (base, arg) {
        ("point", None) => BasedSimplicialSet::point(cutoff)?,
        ("rp2", None) => BasedSimplicialSet::rp2(cutoff)?,
        ("rp2-plus", None) => BasedSimplicialSet::rp2_plus(cutoff)?,
        ("sphere", Some(n)) => BasedSimplicialSet::sphere(n, cutoff)?,
        ("simplex", Some(n)) => BasedSimplicialSet::standard_simplex(n, cutoff)?,
        ("simplex-plus", Some(n)) => BasedSimplicialSet::standard_simplex_plus(n, cutoff)?,
        ("points", Some(m)) => BasedSimplicialSet::points_plus(m, cutoff)?,
        _ => return Err(CliError::validation(format!("unknown example {name:?}"))),
    };
    Ok(s)
}

fn load_sset(src: &str) -> Result<BasedSimplicialSet, CliError> {
    let j: SimplicialJson = read_json(src)?;
    Ok(BasedSimplicialSet::from_json(&j)?)
}

fn load_spectrum(src: &str) -> Result<Spectrum, CliError> {
    let j: SpectrumJson = read_json(src)?;
    let name = if src.trim_start().starts_with('{') {
        "inline".to_string()
    } else {
        std::path::Path::new(src).file_stem().map_or("spectrum".into(), |s| s.to_string_lossy().into_owned())
    };
    Ok(Spectrum::from_json(&name, &j)?)
}

fn load_elt(src: &str) -> Result<OperadElt, CliError> {
    Ok(OperadElt::from_json(&read_json(src)?)?)
}

fn sset(op: &SsetOp) -> Result<Done, CliError> {
    match op {
        SsetOp::Example { name, cutoff } => done(serde_json::to_value(example(name, *cutoff)?.to_json())?),
        SsetOp::Validate { input } => {
            let j: SimplicialJson = read_json(input)?;
            match BasedSimplicialSet::from_json(&j).and_then(|s| s.validate().map(|_| s)) {
                Ok(s) => done(json!({ "valid": true, "nondegenerate_counts": s.nondegenerate_counts(true) })),
                Err(e) => Ok(Done { result: json!({ "valid": false, "reason": e.to_string() }), certificates: Value::Null, valid: false }),
            }
        }
        SsetOp::Suspend { input } => {
            let s = simplicial::kan_suspension(&load_sset(input)?)?;
            done(serde_json::to_value(s.to_json())?)
        }
        SsetOp::Loop { input } => {
            let s = simplicial::moore_loop(&load_sset(input)?)?;
            done(serde_json::to_value(s.to_json())?)
        }
        SsetOp::Chains { input, p } => {
            let s = load_sset(input)?;
            let c = simplicial::normalized_chains(&s, field(*p)?)?;
            let (lo, hi) = c.window();
            let betti: BTreeMap<i64, usize> =
                (lo.max(0)..=hi.min(s.cutoff() as i64 - 1)).map(|d| Ok((d, c.betti(d)?))).collect::<Result<_, CliError>>()?;
            done(json!({ "complex": c.to_json(), "betti": betti }))
        }
    }
}

fn elt_summary(e: &OperadElt) -> Value {
    fn term(c: u32, k: impl std::fmt::Display) -> String {
        if c == 1 {
            k.to_string()
        } else {
            format!("{c}·{k}")
        }
    }
    let terms: Vec<String> = match e {
        OperadElt::Ms { elt, .. } => elt.terms.iter().map(|(k, c)| term(*c, k)).collect(),
        OperadElt::Be { elt, .. } => elt.terms.iter().map(|(k, c)| term(*c, k)).collect(),
    };
    json!({ "element": e.to_json(), "degree": e.arity_degree().map(|x| x.1), "text": if terms.is_empty() { "0".to_string() } else { terms.join(" + ") } })
}

fn operad(op: &OperadOp) -> Result<Done, CliError> {
    match op {
        OperadOp::Basis { flavor, arity, degree } => {
            let items: Vec<String> = match Flavor::from(*flavor) {
                Flavor::Ms => operads::ms_basis(*arity, *degree).iter().map(|s| s.to_string()).collect(),
                Flavor::Be => operads::be_basis(*arity, *degree).iter().map(|s| s.to_string()).collect(),
            };
            done(json!({ "count": items.len(), "basis": items }))
        }
        OperadOp::Diff { input } => done(elt_summary(&load_elt(input)?.differential())),
        OperadOp::Compose { a, b, r } => {
            let (a, b) = (load_elt(a)?, load_elt(b)?);
            let out = match (&a, &b) {
                (OperadElt::Ms { elt: x, arity: n }, OperadElt::Ms { elt: y, arity: m }) => {
                    OperadElt::Ms { arity: n + m - 1, elt: operads::ms_compose_elt(x, *r, y)? }
                }
                (OperadElt::Be { elt: x, arity: n }, OperadElt::Be { elt: y, arity: m }) => {
                    OperadElt::Be { arity: n + m - 1, elt: operads::be_compose_elt(x, *r, y)? }
                }
                _ => return Err(CliError::validation("cannot compose elements of different flavors")),
            };
            done(elt_summary(&out))
        }
        OperadOp::Tr { input } => match load_elt(input)? {
            OperadElt::Be { arity, elt } => done(elt_summary(&OperadElt::Ms { arity, elt: operads::tr(&elt) })),
            OperadElt::Ms { .. } => Err(CliError::validation("TR takes a BE element")),
        },
        OperadOp::Psi { input } => done(elt_summary(&stabilization::psi(&load_elt(input)?))),
        OperadOp::Aw { input, sset, dim, simplex } => {
            let e = load_elt(input)?;
            let s = load_sset(sset)?;
            if *dim > s.cutoff() {
                return Err(SimplicialError::Cutoff { dim: *dim, cutoff: s.cutoff() }.into());
            }
            let x = s.index_of(*dim, simplex).ok_or_else(|| CliError::validation(format!("no simplex {simplex} in dimension {dim}")))?;
            let out = operads::aw_evaluate_elt(&actions::as_surjections(&e), &s, *dim, x);
            let terms: Vec<Value> = out
                .terms
                .iter()
                .map(|(t, c)| json!({ "coef": c, "factors": t.iter().map(|&(d, y)| s.label(d, y)).collect::<Vec<_>>() }))
                .collect();
            done(json!({ "terms": terms }))
        }
    }
}

fn stable(op: &StableOp, budget: usize) -> Result<Done, CliError> {
    match op {
        StableOp::Tower { flavor, arity, degree, levels, p } => {
            let t = stabilization::tower_homology((*flavor).into(), field(*p)?, *arity, *degree, *levels, budget)?;
            let certificates = json!({ "stabilized": t.stabilized, "connecting": t.connecting });
            Ok(Done { result: serde_json::to_value(&t)?, certificates, valid: true })
        }
        StableOp::Est2 { window } => {
            let e = stabilization::est2_complex(field(2)?, window.lo - 1, window.hi + 1)?;
            let mut free = BTreeMap::new();
            let mut coinvariant = BTreeMap::new();
            for d in window.lo..=window.hi {
                free.insert(d, e.free.betti(d)?);
                coinvariant.insert(d, e.coinvariant.betti(d)?);
            }
            done(json!({ "free_betti": free, "coinvariant_betti": coinvariant }))
        }
        StableOp::Canonical { degree, side, levels } => {
            let side = match side {
                SideArg::Stable => Side::Stable,
                SideArg::Unstable => Side::Unstable,
            };
            let f2 = field(2)?;
            let t = CanonicalE::new(*degree, side).tower(f2, *levels)?;
            let coherent = t.check().is_ok();
            let comps: Vec<Value> = (0..=*levels).map(|k| Ok(elt_summary(&t.component(f2, k)?))).collect::<Result<_, CliError>>()?;
            Ok(Done { result: json!({ "components": comps }), certificates: json!({ "coherent": coherent }), valid: coherent })
        }
    }
}

fn parse_sum(p: u32, s: &str) -> Result<LinComb<Mono>, CliError> {
    let mut out = LinComb::zero(field(p)?);
    for part in s.split('+') {
        let part = part.trim();
        let m = if part == "1" { Mono::unit() } else { Mono::parse(part)? };
        if p == 2 && m.0.iter().any(|l| l.0 != 0) {
            return Err(SteenrodError::BocksteinAtTwo.into());
        }
        out.add_term(m, 1);
    }
    Ok(out)
}

fn sum_json(p: u32, degree: i64, s: &LinComb<Mono>) -> Value {
    let terms: Vec<Value> = s
        .terms
        .iter()
        .map(|(m, c)| {
            let index: Value = if p == 2 { json!(m.0.iter().map(|l| l.1).collect::<Vec<_>>()) } else { json!(m.0) };
            json!({ "coef": c, "index": index, "text": m.to_string() })
        })
        .collect();
    json!({ "p": p, "degree": degree, "terms": terms })
}

fn sum_degree(p: u32, s: &LinComb<Mono>) -> Result<i64, CliError> {
    let mut ds = s.terms.keys().map(|m| steenrod::degree(p, m));
    let d = ds.next().unwrap_or(0);
    if ds.any(|e| e != d) {
        return Err(CliError::validation("sum is not homogeneous"));
    }
    Ok(d)
}

fn adem(op: &AdemOp) -> Result<Done, CliError> {
    match op {
        AdemOp::Expand { word, p, algebra } => {
            let a = Adem::new(field(*p)?);
            let s = parse_sum(*p, word)?;
            let d = sum_degree(*p, &s)?;
            let mut out = LinComb::zero(a.field());
            for (m, c) in &s.terms {
                let e = match algebra {
                    AlgebraArg::B => a.expand(m),
                    AlgebraArg::A => a.expand_a(m),
                };
                out.add_scaled(&e, *c);
            }
            done(sum_json(*p, d, &out))
        }
        AdemOp::Mul { a: x, b: y, p, algebra } => {
            let a = Adem::new(field(*p)?);
            let (x, y) = (parse_sum(*p, x)?, parse_sum(*p, y)?);
            let d = sum_degree(*p, &x)? + sum_degree(*p, &y)?;
            let out = match algebra {
                AlgebraArg::B => a.multiply(&x, &y),
                AlgebraArg::A => a.multiply_a(&a.project_to_a(&x), &a.project_to_a(&y)),
            };
            done(sum_json(*p, d, &out))
        }
        AdemOp::Basis { p, degree, excess, max_len } => {
            field(*p)?;
            let b = match excess {
                Some(k) => steenrod::basis_bk(*p, *k, *degree, *max_len),
                None => steenrod::basis_a(*p, *degree, *max_len),
            };
            let items: Vec<String> = b.iter().map(|m| m.to_string()).collect();
            done(json!({ "count": items.len(), "basis": items }))
        }
        AdemOp::Project { word, p } => {
            let a = Adem::new(field(*p)?);
            let s = parse_sum(*p, word)?;
            let d = sum_degree(*p, &s)?;
            done(sum_json(*p, d, &a.project_to_a(&a.expand_sum(&s))))
        }
        AdemOp::Exact { p, window, ceiling, t } => {
            let a = Adem::new(field(*p)?);
            let max_len = steenrod::max_len_for(*p, t.unwrap_or((*p * *p) as u64));
            let reports: Vec<_> = (window.lo..=window.hi).map(|d| steenrod::exactness_check(&a, d, *ceiling, max_len)).collect();
            let valid = reports.iter().all(|r| r.image_rank == r.domain_dim && r.composite_zero && r.projection_rank == r.a_dim);
            let certificates: Vec<Value> =
                reports.iter().map(|r| json!({ "degree": r.degree, "closing_length": r.closing_length })).collect();
            Ok(Done { result: serde_json::to_value(reports)?, certificates: json!(certificates), valid })
        }
    }
}

fn spectrum(op: &SpectrumOp, budget: usize) -> Result<Done, CliError> {
    match op {
        SpectrumOp::BuildEm { p, n, levels, cutoff } => {
            let e = spectra::em_spectrum(field(*p)?, *n, *levels, *cutoff, budget as u64)?;
            let adjoint_bijective: Vec<bool> = (0..*levels).map(|k| e.adjoint(k).map(|s| s.is_bijective())).collect::<Result<_, _>>()?;
            let certificates = json!({ "adjoint_bijective": adjoint_bijective });
            Ok(Done { result: serde_json::to_value(e.to_json())?, certificates, valid: adjoint_bijective.iter().all(|&b| b) })
        }
        SpectrumOp::BuildSusp { input, shift, levels, cutoff } => {
            let s = load_sset(input)?;
            let e = spectra::suspension_spectrum(&s, *shift, *levels, cutoff.unwrap_or(s.cutoff()))?;
            done(serde_json::to_value(e.to_json())?)
        }
        SpectrumOp::Validate { input } => {
            let j: SpectrumJson = read_json(input)?;
            match Spectrum::from_json("input", &j).and_then(|e| e.validate()) {
                Ok(()) => done(json!({ "valid": true })),
                Err(e) => Ok(Done { result: json!({ "valid": false, "reason": e.to_string() }), certificates: Value::Null, valid: false }),
            }
        }
        SpectrumOp::Chains { input, window, p } => {
            let e = load_spectrum(input)?;
            let ch = spectra::spectral_chains(field(*p)?, &e, window.lo, window.hi)?;
            let mut betti = BTreeMap::new();
            for d in window.lo..=window.hi {
                betti.insert(d, ch.complex.homology(d)?.betti);
            }
            let certificates = json!({ "level": ch.level, "witness": ch.witness, "approximate": ch.approximate() });
            Ok(Done { result: json!({ "betti": betti, "complex": ch.complex.to_json() }), certificates, valid: true })
        }
        SpectrumOp::Cohomology { input, window, p } => {
            let e = load_spectrum(input)?;
            let ch = spectra::spectral_chains(field(*p)?, &e, window.lo, window.hi)?;
            let co = spectra::spectral_cochains(&ch);
            let mut betti = BTreeMap::new();
            for d in window.lo..=window.hi {
                betti.insert(d, co.homology(d)?.betti);
            }
            let certificates = json!({ "level": ch.level, "witness": ch.witness, "approximate": ch.approximate() });
            Ok(Done { result: json!({ "betti": betti }), certificates, valid: true })
        }
    }
}

/// `class label → image sum` for one operation table.
fn labelled(t: &actions::OperationTable) -> Value {
    let mut m = serde_json::Map::new();
    for (i, col) in t.columns.iter().enumerate() {
        let parts: Vec<String> = col
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| if c == 1 { format!("H^{}[{j}]", t.target_degree) } else { format!("{c}·H^{}[{j}]", t.target_degree) })
            .collect();
        let image = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        m.insert(format!("H^{}[{i}]", t.source_degree), Value::String(image));
    }
    Value::Object(m)
}

fn act(op: &ActOp, budget: usize) -> Result<Done, CliError> {
    let f2 = field(2)?;
    match op {
        ActOp::Psq { s, spectrum: src, window, unstable } => {
            let e = load_spectrum(src)?;
            let ch = spectra::spectral_chains_f2(&e, window.lo, window.hi)?;
            let mut tables = Vec::new();
            let mut skipped = Vec::new();
            for q in window.lo..=window.hi {
                if q + s < window.lo || q + s > window.hi {
                    continue;
                }
                let t = if *unstable { actions::unstable_p(&ch, &e, *s, q) } else { actions::stable_p(&ch, &e, *s, q) };
                match t {
                    Ok(t) => tables
                        .push(json!({ "q": q, "table": labelled(&t), "rank": t.rank, "identity": (*s == 0).then(|| t.is_identity()) })),
                    Err(ActionError::Window(reason)) => skipped.push(json!({ "q": q, "reason": reason })),
                    Err(err) => return Err(err.into()),
                }
            }
            let certificates = json!({
                "level": ch.level,
                "witness": ch.witness,
                "approximate": ch.approximate(),
                "skipped": skipped,
            });
            Ok(Done { result: json!({ "s": s, "tables": tables }), certificates, valid: true })
        }
        ActOp::FreeH { x, k, t, p } => {
            let r = actions::free_algebra_truncation_h(field(*p)?, *x, *k, *t, budget)?;
            let certificates = json!({ "matches_prediction": r.matches });
            Ok(Done { result: serde_json::to_value(&r)?, certificates, valid: r.matches != Some(false) })
        }
        ActOp::FreeOp { x, k, s } => done(serde_json::to_value(actions::free_algebra_operation(f2, *x, *k, *s)?)?),
        ActOp::Products { x, t, max_k } => {
            let r = actions::product_disappearance(f2, *x, *t, *max_k, budget)?;
            let valid = r.psi_kills_e0 && r.d_e0_st_nonzero && r.products_killed;
            Ok(Done { result: serde_json::to_value(&r)?, certificates: json!({ "products_killed": r.products_killed }), valid })
        }
        ActOp::Additivity { arities, window, levels } => {
            if levels.is_empty() || (levels.len() != 1 && levels.len() != arities.len()) {
                return Err(CliError::validation("--levels needs one value or one per arity"));
            }
            let pick = |j: usize| {
                if levels.len() == 1 {
                    levels[0]
                } else {
                    arities.iter().position(|&a| a == j).map_or(levels[0], |i| levels[i])
                }
            };
            let r = actions::additivity_check(f2, arities, (window.lo, window.hi), &pick, budget)?;
            let certificates: Vec<Value> =
                r.towers.iter().map(|t| json!({ "parts": t.parts, "degree": t.degree, "stabilized": t.stabilized })).collect();
            let valid = r.mixed_vanish && r.extremes_match;
            Ok(Done { result: serde_json::to_value(&r)?, certificates: json!(certificates), valid })
        }
    }
}

fn run_suite(a: &SuiteArgs, budget: usize) -> Result<Done, CliError> {
    if let Some(only) = &a.only {
        if let Some(bad) = only.iter().find(|&&i| !(1..=16).contains(&i)) {
            return Err(CliError::validation(format!("no criterion {bad}")));
        }
    }
    let run = suite::run_suite(a.seed, budget, a.only.as_deref(), !a.no_repeat);
    let certificates: BTreeMap<usize, bool> = run.report.criteria.iter().map(|c| (c.id, c.pass)).collect();
    let valid = run.report.all_pass;
    Ok(Done { result: serde_json::to_value(&run.report)?, certificates: json!(certificates), valid })
}
