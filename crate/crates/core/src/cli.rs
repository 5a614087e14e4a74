//! Batch front end: JSON documents of named objects in, JSON reports out.
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "objects": {
//!     "Z": { "type": "povm", "outcomes": [0, 1],
//!            "effects": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
//!                        [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]] },
//!     "id": { "type": "channel", "in_dim": 2, "out_dim": 2,
//!             "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]] },
//!     "rho": { "type": "state", "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]] }
//!   }
//! }
//! ```
//!
//! Matrices are arrays of rows and complex entries are `[re, im]` pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::analysis::{compare_with, extremality_counterexample, is_extreme, Relation, SolverOptions, StochasticMatrix};
use crate::channels::{Channel, CHANNEL_TOL};
use crate::dilation::{minimal_naimark, minimal_output_dimension};
use crate::error::Error;
use crate::matrix::{c64, ComplexMatrix, HermitianMatrix};
use crate::observables::{luders_instrument, minimal_sufficient_reduction_with_tol, DensityMatrix, Povm, POVM_TOL};
use crate::realization::{
    certify_equivalence_with, margins, realize_channel_after_with, realize_observable_after_with, sequential_joint,
    Realization,
};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("dimension error in object `{object}`: {message}")]
    Dimension { object: String, message: String },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("no object named `{0}` in the document")]
    MissingObject(String),
    #[error("object `{name}` is a {found}, expected a {expected}")]
    WrongType {
        name: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Domain(#[from] Error),
}

impl CliError {
    /// Process exit code; every error maps to 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// A parsed but not yet validated object.
#[derive(Clone, Debug, PartialEq)]
pub enum DocObject {
    Povm {
        outcomes: Vec<usize>,
        effects: Vec<ComplexMatrix>,
    },
    Channel {
        in_dim: usize,
        out_dim: usize,
        kraus: Vec<ComplexMatrix>,
    },
    State(ComplexMatrix),
}

impl DocObject {
    pub fn kind(&self) -> &'static str {
        match self {
            DocObject::Povm { .. } => "povm",
            DocObject::Channel { .. } => "channel",
            DocObject::State(_) => "state",
        }
    }

    pub fn from_povm(a: &Povm) -> Self {
        DocObject::Povm {
            outcomes: a.outcomes().to_vec(),
            effects: a.effects().iter().map(|e| e.as_matrix().clone()).collect(),
        }
    }

    pub fn from_channel(ch: &Channel) -> Self {
        DocObject::Channel {
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            kraus: ch.kraus().to_vec(),
        }
    }

    pub fn from_state(rho: &DensityMatrix) -> Self {
        DocObject::State(rho.matrix().as_matrix().clone())
    }

    pub fn to_json(&self) -> Value {
        match self {
            DocObject::Povm { outcomes, effects } => json!({
                "type": "povm",
                "outcomes": outcomes,
                "effects": effects.iter().map(matrix_to_json).collect::<Vec<_>>(),
            }),
            DocObject::Channel { in_dim, out_dim, kraus } => json!({
                "type": "channel",
                "in_dim": in_dim,
                "out_dim": out_dim,
                "kraus": kraus.iter().map(matrix_to_json).collect::<Vec<_>>(),
            }),
            DocObject::State(m) => json!({
                "type": "state",
                "matrix": matrix_to_json(m),
            }),
        }
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub objects: BTreeMap<String, DocObject>,
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn dimension(object: &str, message: impl Into<String>) -> CliError {
    CliError::Dimension {
        object: object.to_string(),
        message: message.into(),
    }
}

fn parse_complex(v: &Value, path: &str) -> Result<num_complex::Complex64, CliError> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(c64(re, im)),
            _ => Err(schema(path, "complex entries must be pairs of numbers")),
        },
        _ => Err(schema(path, "expected a [re, im] pair")),
    }
}

fn parse_matrix(v: &Value, path: &str, object: &str) -> Result<ComplexMatrix, CliError> {
    let rows = v.as_array().ok_or_else(|| schema(path, "expected an array of rows"))?;
    let mut entries = Vec::new();
    let mut width = None;
    for (r, row) in rows.iter().enumerate() {
        let row_path = format!("{path}[{r}]");
        let row = row.as_array().ok_or_else(|| schema(&row_path, "expected an array of entries"))?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(dimension(object, format!("ragged rows at {row_path}")));
        }
        for (c, z) in row.iter().enumerate() {
            entries.push(parse_complex(z, &format!("{row_path}[{c}]"))?);
        }
    }
    let width = width.unwrap_or(0);
    if rows.is_empty() || width == 0 {
        return Err(dimension(object, format!("empty matrix at {path}")));
    }
    Ok(ComplexMatrix::from_row_slice(rows.len(), width, &entries))
}

fn parse_matrix_list(v: Option<&Value>, path: &str, object: &str) -> Result<Vec<ComplexMatrix>, CliError> {
    let list = v
        .ok_or_else(|| schema(path, "missing field"))?
        .as_array()
        .ok_or_else(|| schema(path, "expected an array of matrices"))?;
    list.iter()
        .enumerate()
        .map(|(i, m)| parse_matrix(m, &format!("{path}[{i}]"), object))
        .collect()
}

fn parse_usize(v: &Value, path: &str) -> Result<usize, CliError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a nonnegative integer"))
}

fn parse_object(name: &str, v: &Value) -> Result<DocObject, CliError> {
    let path = format!("objects.{name}");
    let map = v.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
    let kind = map
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(&format!("{path}.type"), "expected one of povm, channel, state"))?;
    match kind {
        "povm" => {
            let effects = parse_matrix_list(map.get("effects"), &format!("{path}.effects"), name)?;
            let dim = effects.first().map(|m| m.nrows());
            if effects.iter().any(|m| !m.is_square() || Some(m.nrows()) != dim) {
                return Err(dimension(name, "effects must be square matrices of one size"));
            }
            let outcomes = match map.get("outcomes") {
                None => (0..effects.len()).collect(),
                Some(list) => list
                    .as_array()
                    .ok_or_else(|| schema(&format!("{path}.outcomes"), "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| parse_usize(x, &format!("{path}.outcomes[{i}]")))
                    .collect::<Result<_, _>>()?,
            };
            Ok(DocObject::Povm { outcomes, effects })
        }
        "channel" => {
            let kraus = parse_matrix_list(map.get("kraus"), &format!("{path}.kraus"), name)?;
            let shape = kraus
                .first()
                .map(|k| k.shape())
                .ok_or_else(|| dimension(name, "a channel needs at least one Kraus operator"))?;
            if kraus.iter().any(|k| k.shape() != shape) {
                return Err(dimension(name, "Kraus operators must share one shape"));
            }
            for (field, expected) in [("in_dim", shape.1), ("out_dim", shape.0)] {
                if let Some(v) = map.get(field) {
                    let d = parse_usize(v, &format!("{path}.{field}"))?;
                    if d != expected {
                        return Err(dimension(name, format!("{field} is {d} but the Kraus operators give {expected}")));
                    }
                }
            }
            Ok(DocObject::Channel {
                in_dim: shape.1,
                out_dim: shape.0,
                kraus,
            })
        }
        "state" => {
            let m = parse_matrix(
                map.get("matrix").ok_or_else(|| schema(&format!("{path}.matrix"), "missing field"))?,
                &format!("{path}.matrix"),
                name,
            )?;
            if !m.is_square() {
                return Err(dimension(name, "a state must be a square matrix"));
            }
            Ok(DocObject::State(m))
        }
        other => Err(schema(&format!("{path}.type"), format!("unknown object type `{other}`"))),
    }
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text).map_err(|e| CliError::Syntax {
            line: e.line(),
            message: e.to_string(),
        })?;
        let map = root.as_object().ok_or_else(|| schema("$", "expected a top-level object"))?;
        match map.get("schema_version").and_then(Value::as_str) {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(schema("schema_version", format!("unsupported version `{v}`"))),
            None => return Err(schema("schema_version", "missing string field")),
        }
        let objects = map
            .get("objects")
            .ok_or_else(|| schema("objects", "missing field"))?
            .as_object()
            .ok_or_else(|| schema("objects", "expected an object"))?;
        let objects = objects
            .iter()
            .map(|(name, v)| Ok((name.clone(), parse_object(name, v)?)))
            .collect::<Result<_, CliError>>()?;
        Ok(Self { objects })
    }

    pub fn to_json(&self) -> Value {
        let objects: Map<String, Value> = self.objects.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        json!({ "schema_version": SCHEMA_VERSION, "objects": objects })
    }

    /// Canonical text form; keys are sorted.
    pub fn serialize(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn insert(&mut self, name: impl Into<String>, object: DocObject) {
        self.objects.insert(name.into(), object);
    }

    fn get(&self, name: &str) -> Result<&DocObject, CliError> {
        self.objects.get(name).ok_or_else(|| CliError::MissingObject(name.to_string()))
    }

    fn wrong(&self, name: &str, expected: &'static str) -> CliError {
        CliError::WrongType {
            name: name.to_string(),
            expected,
            found: self.objects[name].kind(),
        }
    }

    /// Validated observable.
    pub fn povm(&self, name: &str, tol: f64) -> Result<Povm, CliError> {
        match self.get(name)? {
            DocObject::Povm { outcomes, effects } => {
                let effects = effects
                    .iter()
                    .map(|m| HermitianMatrix::with_tol(m.clone(), tol))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(crate::observables::validate_povm(outcomes.clone(), effects, tol)?)
            }
            _ => Err(self.wrong(name, "povm")),
        }
    }

    pub fn channel(&self, name: &str, tol: f64) -> Result<Channel, CliError> {
        match self.get(name)? {
            DocObject::Channel { kraus, .. } => Ok(Channel::with_tol(kraus.clone(), tol)?),
            _ => Err(self.wrong(name, "channel")),
        }
    }

    pub fn state(&self, name: &str, tol: f64) -> Result<DensityMatrix, CliError> {
        match self.get(name)? {
            DocObject::State(m) => Ok(DensityMatrix::with_tol(HermitianMatrix::with_tol(m.clone(), tol)?, tol)?),
            _ => Err(self.wrong(name, "state")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Reduce,
    Dilate,
    LeastDisturbing,
    MinOutdim,
    Compare,
    Extreme,
    RealizeObs,
    RealizeChan,
    CertEquiv,
    SeqJoint,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Validate,
        Command::Reduce,
        Command::Dilate,
        Command::LeastDisturbing,
        Command::MinOutdim,
        Command::Compare,
        Command::Extreme,
        Command::RealizeObs,
        Command::RealizeChan,
        Command::CertEquiv,
        Command::SeqJoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Reduce => "reduce",
            Command::Dilate => "dilate",
            Command::LeastDisturbing => "least-disturbing",
            Command::MinOutdim => "min-outdim",
            Command::Compare => "compare",
            Command::Extreme => "extreme",
            Command::RealizeObs => "realize-obs",
            Command::RealizeChan => "realize-chan",
            Command::CertEquiv => "cert-equiv",
            Command::SeqJoint => "seq-joint",
        }
    }

    fn arity(self) -> usize {
        match self {
            Command::Compare | Command::RealizeObs | Command::RealizeChan | Command::CertEquiv | Command::SeqJoint => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::UnknownCommand(s.to_string()))
    }
}

/// Instrument used by `seq-joint` for the first measurement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InstrumentKind {
    #[default]
    Luders,
    LeastDisturbing,
}

impl FromStr for InstrumentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "luders" => Ok(InstrumentKind::Luders),
            "least-disturbing" => Ok(InstrumentKind::LeastDisturbing),
            other => Err(CliError::Usage(format!(
                "unknown instrument `{other}` (expected luders or least-disturbing)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Validation tolerance for input objects.
    pub tol: f64,
    pub solver: SolverOptions,
    pub seed: u64,
    pub instrument: InstrumentKind,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: POVM_TOL,
            solver: SolverOptions::default(),
            seed: 0,
            instrument: InstrumentKind::Luders,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportStatus {
    Ok,
    Undecided,
}

/// Structured command output, rendered in the document format.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    pub status: ReportStatus,
    pub result: Map<String, Value>,
    pub objects: Document,
}

impl Report {
    fn new(command: Command) -> Self {
        Self {
            command,
            status: ReportStatus::Ok,
            result: Map::new(),
            objects: Document::default(),
        }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.result.insert(key.to_string(), value);
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            ReportStatus::Ok => 0,
            ReportStatus::Undecided => 2,
        }
    }

    pub fn to_json(&self, opts: &RunOptions) -> Value {
        let mut doc = self.objects.to_json();
        let map = doc.as_object_mut().expect("documents are objects");
        map.insert("command".into(), json!(self.command.name()));
        map.insert(
            "status".into(),
            json!(match self.status {
                ReportStatus::Ok => "ok",
                ReportStatus::Undecided => "undecided",
            }),
        );
        map.insert("result".into(), Value::Object(self.result.clone()));
        map.insert(
            "settings".into(),
            json!({
                "tol": opts.tol,
                "cert_tol": opts.solver.cert_tol,
                "budget": opts.solver.budget,
                "seed": opts.seed,
                "grid": opts.solver.grid,
            }),
        );
        doc
    }

    pub fn render(&self, opts: &RunOptions) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json(opts)).expect("JSON values always serialize");
        s.push('\n');
        s
    }
}

/// Finite numbers as JSON numbers, anything else as `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn stochastic_json(p: &StochasticMatrix) -> Value {
    Value::Array(
        (0..p.rows())
            .map(|k| Value::Array((0..p.cols()).map(|j| num(p.get(k, j))).collect()))
            .collect(),
    )
}

fn verdict<T>(r: &Realization<T>) -> &'static str {
    if r.is_feasible() {
        "feasible"
    } else if r.refuted {
        "infeasible"
    } else {
        "budget_exhausted"
    }
}

fn realization_json<T>(r: &Realization<T>) -> Value {
    json!({
        "status": verdict(r),
        "residual": num(r.residual),
        "iterations": r.iterations,
        "refuted": r.refuted,
    })
}

/// Runs `command` on the named objects of `doc`.
pub fn run_command(command: &str, args: &[String], doc: &Document, opts: &RunOptions) -> Result<Report, CliError> {
    let cmd: Command = command.parse()?;
    if args.len() != cmd.arity() {
        return Err(CliError::Usage(format!(
            "`{cmd}` takes {} object name(s), got {}",
            cmd.arity(),
            args.len()
        )));
    }
    for name in args {
        doc.get(name)?;
    }
    let tol = opts.tol;
    let mut report = Report::new(cmd);
    match cmd {
        Command::Validate => {
            let name = &args[0];
            match doc.get(name)? {
                DocObject::Povm { .. } => {
                    let a = doc.povm(name, tol)?;
                    report.set("dim", json!(a.dim()));
                    report.set("outcomes", json!(a.outcomes()));
                }
                DocObject::Channel { .. } => {
                    let ch = doc.channel(name, tol.max(CHANNEL_TOL))?;
                    report.set("in_dim", json!(ch.in_dim()));
                    report.set("out_dim", json!(ch.out_dim()));
                }
                DocObject::State(_) => {
                    let rho = doc.state(name, tol)?;
                    report.set("dim", json!(rho.dim()));
                }
            }
            report.set("type", json!(doc.get(name)?.kind()));
            report.set("valid", json!(true));
        }
        Command::Reduce => {
            let a = doc.povm(&args[0], tol)?;
            let (reduced, f) = minimal_sufficient_reduction_with_tol(&a, crate::observables::PROPORTIONALITY_TOL);
            report.set("relabeling", json!(f.pairs().map(|(x, y)| [x, y]).collect::<Vec<_>>()));
            report.set("outcomes", json!(reduced.len()));
            report.objects.insert("reduced", DocObject::from_povm(&reduced));
        }
        Command::Dilate => {
            let a = doc.povm(&args[0], tol)?;
            let dil = minimal_naimark(&a)?;
            report.set("dil_dim", json!(dil.dil_dim()));
            let blocks: Vec<[usize; 2]> = dil.blocks().unwrap_or(&[]).iter().map(|r| [r.start, r.end]).collect();
            report.set("blocks", json!(blocks));
            report.set("isometry", matrix_to_json(dil.isometry()));
            report.objects.insert("pvm", DocObject::from_povm(dil.pvm()));
        }
        Command::LeastDisturbing => {
            let a = doc.povm(&args[0], tol)?;
            let dil = minimal_naimark(&a)?;
            report.set("out_dim", json!(dil.dil_dim()));
            report.objects.insert("channel", DocObject::from_channel(&dil.least_disturbing_channel()));
        }
        Command::MinOutdim => {
            let a = doc.povm(&args[0], tol)?;
            report.set("value", json!(minimal_output_dimension(&a)));
        }
        Command::Compare => {
            let a = doc.povm(&args[0], tol)?;
            let b = doc.povm(&args[1], tol)?;
            let v = compare_with(&a, &b, &opts.solver)?;
            report.set("relation", json!(v.relation.as_str()));
            report.set("forward_residual", num(v.forward_residual));
            report.set("backward_residual", num(v.backward_residual));
            report.set("forward", v.forward.as_ref().map_or(Value::Null, stochastic_json));
            report.set("backward", v.backward.as_ref().map_or(Value::Null, stochastic_json));
            if v.relation == Relation::Undecided {
                report.status = ReportStatus::Undecided;
            }
        }
        Command::Extreme => {
            let a = doc.povm(&args[0], tol)?;
            report.set("extreme", json!(is_extreme(&a)));
            if let Some((plus, minus)) = extremality_counterexample(&a) {
                report.objects.insert("plus", DocObject::from_povm(&plus));
                report.objects.insert("minus", DocObject::from_povm(&minus));
            }
        }
        Command::RealizeObs => {
            let a = doc.povm(&args[0], tol)?;
            let b = doc.povm(&args[1], tol)?;
            let r = realize_observable_after_with(&a, &b, &opts.solver)?;
            if let Some(w) = &r.witness {
                report.objects.insert("b_prime", DocObject::from_povm(w));
            }
            report.result = realization_json(&r).as_object().cloned().unwrap_or_default();
            if !r.is_feasible() && !r.refuted {
                report.status = ReportStatus::Undecided;
            }
        }
        Command::RealizeChan => {
            let a = doc.povm(&args[0], tol)?;
            let ch = doc.channel(&args[1], tol.max(CHANNEL_TOL))?;
            let r = realize_channel_after_with(&a, &ch, &opts.solver)?;
            if let Some(w) = &r.witness {
                report.objects.insert("gamma", DocObject::from_channel(w));
            }
            report.result = realization_json(&r).as_object().cloned().unwrap_or_default();
            if !r.is_feasible() && !r.refuted {
                report.status = ReportStatus::Undecided;
            }
        }
        Command::CertEquiv => {
            let l1 = doc.channel(&args[0], tol.max(CHANNEL_TOL))?;
            let l2 = doc.channel(&args[1], tol.max(CHANNEL_TOL))?;
            let s = certify_equivalence_with(&l1, &l2, &opts.solver)?;
            report.set("forward", realization_json(&s.forward));
            report.set("backward", realization_json(&s.backward));
            let equivalent = s.forward.is_feasible() && s.backward.is_feasible();
            let refuted = s.forward.refuted || s.backward.refuted;
            report.set("equivalent", if equivalent { json!(true) } else if refuted { json!(false) } else { Value::Null });
            if let Some(w) = &s.forward.witness {
                report.objects.insert("gamma_12", DocObject::from_channel(w));
            }
            if let Some(w) = &s.backward.witness {
                report.objects.insert("gamma_21", DocObject::from_channel(w));
            }
            if !equivalent && !refuted {
                report.status = ReportStatus::Undecided;
            }
        }
        Command::SeqJoint => {
            let a = doc.povm(&args[0], tol)?;
            let c = doc.povm(&args[1], tol)?;
            let instrument = match opts.instrument {
                InstrumentKind::Luders => luders_instrument(&a),
                InstrumentKind::LeastDisturbing => minimal_naimark(&a)?.instrument(),
            };
            let g = sequential_joint(&instrument, &c)?;
            let (first, _) = margins(&g);
            report.set("first_outcomes", json!(g.first_outcomes()));
            report.set("second_outcomes", json!(g.second_outcomes()));
            report.set("first_margin_error", num(first.distance(&a).unwrap_or(f64::INFINITY)));
            report.objects.insert("joint", DocObject::from_povm(g.povm()));
        }
    }
    Ok(report)
}
