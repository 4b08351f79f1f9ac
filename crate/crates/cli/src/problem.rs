//! Problem-file schema.
//!
//! ```json
//! {
//!   "alphabet": 2,                      // or ["a", "b"], or {"size": 2, "labels": [...]}
//!   "n": 2,
//!   "weights": ["1", "3/2"],            // rational strings, decimals parsed exactly
//!   "function": "sum_of_symbols",       // or "hamming_to:01", "indicator:1,0", or {"table": [...]}
//!   "measure": {"dense": ["1/4", ...]}, // or {"markov": {"init": [...], "transitions": [[[...]]]}}
//!   "v": "1/2",
//!   "thresholds": [1.0, 2.0],
//!   "simulation": {"sample_count": 100000, "seed": 7, "thresholds": [1.0]}
//! }
//! ```
//!
//! Validation walks the raw JSON so every error carries the path of the
//! offending field, e.g. `weights[1]`.

use std::fmt;

use lipconc::mixing::{expand_markov, MarkovSpec, Measure};
use lipconc::montecarlo::SimulationConfig;
use lipconc::rational::{self, Rational};
use lipconc::word_space::{hamming_distance, table_len};
use lipconc::{Alphabet, TableFunction, WeightVector, Word};
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for InputError {}

type Parse<T> = Result<T, InputError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionSpec {
    Table(Vec<Rational>),
    HammingTo(Word),
    SumOfSymbols,
    Indicator(Word),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureSpec {
    Dense(Vec<Rational>),
    Markov(MarkovSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub alphabet: Alphabet,
    pub n: usize,
    pub weights: Option<WeightVector>,
    pub function: Option<FunctionSpec>,
    pub measure: Option<MeasureSpec>,
    pub v: Option<Rational>,
    pub thresholds: Option<Vec<f64>>,
    pub simulation: Option<SimulationConfig>,
}

const FIELDS: &[&str] = &["alphabet", "n", "weights", "function", "measure", "v", "thresholds", "simulation"];

fn rational_at(v: &Value, path: &str) -> Parse<Rational> {
    match v {
        Value::String(s) => rational::parse(s)
            .map_err(|_| InputError::new(path, format!("cannot parse {s:?} as an exact rational"))),
        Value::Number(n) if n.is_i64() => Ok(rational::int(n.as_i64().unwrap())),
        Value::Number(_) => Err(InputError::new(
            path,
            "non-integer numbers must be given as strings (e.g. \"0.1\" or \"1/10\") to stay exact",
        )),
        _ => Err(InputError::new(path, "expected a rational string")),
    }
}

fn rational_list(v: &Value, path: &str) -> Parse<Vec<Rational>> {
    let items = v.as_array().ok_or_else(|| InputError::new(path, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| rational_at(x, &format!("{path}[{i}]")))
        .collect()
}

fn float_list(v: &Value, path: &str) -> Parse<Vec<f64>> {
    let items = v.as_array().ok_or_else(|| InputError::new(path, "expected an array"))?;
    if items.is_empty() {
        return Err(InputError::new(path, "must be nonempty"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = format!("{path}[{i}]");
            let t = x.as_f64().ok_or_else(|| InputError::new(&p, "expected a number"))?;
            if t > 0.0 && t.is_finite() {
                Ok(t)
            } else {
                Err(InputError::new(&p, "thresholds must be strictly positive"))
            }
        })
        .collect()
}

fn u64_at(v: &Value, path: &str) -> Parse<u64> {
    v.as_u64().ok_or_else(|| InputError::new(path, "expected a nonnegative integer"))
}

fn parse_alphabet(v: &Value) -> Parse<Alphabet> {
    let path = "alphabet";
    let labels = |arr: &Vec<Value>, p: &str| -> Parse<Alphabet> {
        let labels = arr
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| InputError::new(format!("{p}[{i}]"), "expected a string label"))
            })
            .collect::<Parse<Vec<_>>>()?;
        Alphabet::with_labels(labels).map_err(|e| InputError::new(p, e.to_string()))
    };
    match v {
        Value::Number(_) => {
            let m = u64_at(v, path)? as usize;
            Alphabet::new(m).map_err(|e| InputError::new(path, e.to_string()))
        }
        Value::Array(arr) => labels(arr, path),
        Value::Object(obj) => {
            let size = obj.get("size").map(|s| u64_at(s, "alphabet.size")).transpose()?;
            match (obj.get("labels"), size) {
                (Some(Value::Array(arr)), size) => {
                    let a = labels(arr, "alphabet.labels")?;
                    if size.is_some_and(|s| s as usize != a.size()) {
                        return Err(InputError::new("alphabet.size", "does not match number of labels"));
                    }
                    Ok(a)
                }
                (Some(_), _) => Err(InputError::new("alphabet.labels", "expected an array of strings")),
                (None, Some(s)) => Alphabet::new(s as usize).map_err(|e| InputError::new("alphabet.size", e.to_string())),
                (None, None) => Err(InputError::new(path, "needs \"size\" or \"labels\"")),
            }
        }
        _ => Err(InputError::new(path, "expected a size, a list of labels, or an object")),
    }
}

/// `"0,1,1"`, `"011"` (single-character symbols) or labels separated by commas.
fn parse_word(text: &str, alphabet: &Alphabet, n: usize, path: &str) -> Parse<Word> {
    let tokens: Vec<String> = if text.contains(',') || (n == 1 && alphabet.symbol_of(text.trim()).is_some()) {
        text.split(',').map(|t| t.trim().to_string()).collect()
    } else {
        text.chars().map(String::from).collect()
    };
    let symbols = tokens
        .iter()
        .map(|t| {
            alphabet
                .symbol_of(t)
                .or_else(|| t.parse::<usize>().ok().filter(|&s| s < alphabet.size()))
                .ok_or_else(|| InputError::new(path, format!("{t:?} is not a symbol of the alphabet")))
        })
        .collect::<Parse<Vec<_>>>()?;
    if symbols.len() != n {
        return Err(InputError::new(path, format!("word has length {}, expected n = {n}", symbols.len())));
    }
    Ok(Word(symbols))
}

fn format_word(x: &Word, alphabet: &Alphabet) -> String {
    let parts: Vec<String> = x
        .symbols()
        .iter()
        .map(|&s| match alphabet.labels() {
            Some(l) => l[s].clone(),
            None => s.to_string(),
        })
        .collect();
    parts.join(",")
}

fn parse_function(v: &Value, alphabet: &Alphabet, n: usize) -> Parse<FunctionSpec> {
    let path = "function";
    match v {
        Value::String(s) => {
            if s == "sum_of_symbols" {
                Ok(FunctionSpec::SumOfSymbols)
            } else if let Some(word) = s.strip_prefix("hamming_to:") {
                Ok(FunctionSpec::HammingTo(parse_word(word, alphabet, n, path)?))
            } else if let Some(word) = s.strip_prefix("indicator:") {
                Ok(FunctionSpec::Indicator(parse_word(word, alphabet, n, path)?))
            } else {
                Err(InputError::new(
                    path,
                    format!("unknown builtin {s:?} (expected sum_of_symbols, hamming_to:<word> or indicator:<word>)"),
                ))
            }
        }
        Value::Array(_) => Ok(FunctionSpec::Table(rational_list(v, path)?)),
        Value::Object(obj) => match obj.get("table") {
            Some(t) => Ok(FunctionSpec::Table(rational_list(t, "function.table")?)),
            None => Err(InputError::new(path, "object form needs a \"table\" field")),
        },
        _ => Err(InputError::new(path, "expected a builtin name or a table")),
    }
}

fn parse_markov(v: &Value, m: usize, n: usize) -> Parse<MarkovSpec> {
    if n == 0 {
        return Err(InputError::new("measure.markov", "a Markov chain needs n ≥ 1"));
    }
    let obj = v
        .as_object()
        .ok_or_else(|| InputError::new("measure.markov", "expected an object"))?;
    let init_v = obj
        .get("init")
        .ok_or_else(|| InputError::new("measure.markov.init", "missing"))?;
    let initial = rational_list(init_v, "measure.markov.init")?;
    if initial.len() != m {
        return Err(InputError::new("measure.markov.init", format!("expected {m} entries")));
    }
    let trans_v = obj.get("transitions").cloned().unwrap_or(Value::Array(vec![]));
    let trans = trans_v
        .as_array()
        .ok_or_else(|| InputError::new("measure.markov.transitions", "expected an array of matrices"))?;
    // A single matrix is reused for every step of a homogeneous chain.
    let matrices: Vec<&Value> = if trans.len() == 1 && n > 2 {
        vec![&trans[0]; n - 1]
    } else {
        trans.iter().collect()
    };
    if matrices.len() != n - 1 {
        return Err(InputError::new(
            "measure.markov.transitions",
            format!("expected {} matrices (or one, for a homogeneous chain)", n - 1),
        ));
    }
    let mut transitions = Vec::with_capacity(matrices.len());
    for (t, mat) in matrices.iter().enumerate() {
        let t_idx = if trans.len() == 1 { 0 } else { t };
        let p = format!("measure.markov.transitions[{t_idx}]");
        let rows = mat.as_array().ok_or_else(|| InputError::new(&p, "expected a matrix"))?;
        if rows.len() != m {
            return Err(InputError::new(&p, format!("expected {m} rows")));
        }
        let mut matrix = Vec::with_capacity(m);
        for (a, row) in rows.iter().enumerate() {
            let rp = format!("{p}[{a}]");
            let row = rational_list(row, &rp)?;
            if row.len() != m {
                return Err(InputError::new(&rp, format!("expected {m} entries")));
            }
            if row.iter().any(|x| x.is_negative()) {
                return Err(InputError::new(&rp, "transition probabilities must be nonnegative"));
            }
            if !rational::is_one(&rational::sum(&row)) {
                return Err(InputError::new(&rp, "row does not sum to 1"));
            }
            matrix.push(row);
        }
        transitions.push(matrix);
    }
    let spec = MarkovSpec { initial, transitions };
    spec.validate()
        .map_err(|e| InputError::new("measure.markov", e.to_string()))?;
    Ok(spec)
}

fn parse_measure(v: &Value, m: usize, n: usize) -> Parse<MeasureSpec> {
    let obj = v
        .as_object()
        .ok_or_else(|| InputError::new("measure", "expected {\"dense\": [...]} or {\"markov\": {...}}"))?;
    match (obj.get("dense"), obj.get("markov")) {
        (Some(d), None) => {
            let probs = rational_list(d, "measure.dense")?;
            if let Some(i) = probs.iter().position(|p| p.is_negative()) {
                return Err(InputError::new(format!("measure.dense[{i}]"), "probabilities must be nonnegative"));
            }
            if !rational::is_one(&rational::sum(&probs)) {
                return Err(InputError::new("measure.dense", "probabilities do not sum to 1"));
            }
            Ok(MeasureSpec::Dense(probs))
        }
        (None, Some(mk)) => Ok(MeasureSpec::Markov(parse_markov(mk, m, n)?)),
        _ => Err(InputError::new("measure", "exactly one of \"dense\" or \"markov\" is required")),
    }
}

fn parse_simulation(v: &Value) -> Parse<SimulationConfig> {
    let obj = v
        .as_object()
        .ok_or_else(|| InputError::new("simulation", "expected an object"))?;
    let sample_count = u64_at(
        obj.get("sample_count")
            .ok_or_else(|| InputError::new("simulation.sample_count", "missing"))?,
        "simulation.sample_count",
    )?;
    if sample_count == 0 {
        return Err(InputError::new("simulation.sample_count", "must be at least 1"));
    }
    let seed = u64_at(
        obj.get("seed").ok_or_else(|| InputError::new("simulation.seed", "missing"))?,
        "simulation.seed",
    )?;
    let thresholds = float_list(
        obj.get("thresholds")
            .ok_or_else(|| InputError::new("simulation.thresholds", "missing"))?,
        "simulation.thresholds",
    )?;
    Ok(SimulationConfig { sample_count, seed, thresholds })
}

impl Problem {
    pub fn from_json_str(text: &str) -> Parse<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| InputError::new("", format!("invalid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Parse<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| InputError::new("", "problem file must be a JSON object"))?;
        if let Some(unknown) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(InputError::new(unknown.as_str(), "unknown field"));
        }
        let alphabet = parse_alphabet(obj.get("alphabet").ok_or_else(|| InputError::new("alphabet", "missing"))?)?;
        let n = u64_at(obj.get("n").ok_or_else(|| InputError::new("n", "missing"))?, "n")? as usize;
        let m = alphabet.size();

        let weights = obj
            .get("weights")
            .map(|w| {
                let entries = rational_list(w, "weights")?;
                if entries.len() != n {
                    return Err(InputError::new("weights", format!("expected {n} weights, found {}", entries.len())));
                }
                WeightVector::new(entries).map_err(|e| match e {
                    lipconc::Error::NonPositiveWeight { index } => {
                        InputError::new(format!("weights[{index}]"), "weights must be strictly positive")
                    }
                    other => InputError::new("weights", other.to_string()),
                })
            })
            .transpose()?;
        let function = obj.get("function").map(|f| parse_function(f, &alphabet, n)).transpose()?;
        let measure = obj.get("measure").map(|v| parse_measure(v, m, n)).transpose()?;
        let v = obj
            .get("v")
            .map(|v| {
                let r = rational_at(v, "v")?;
                if r.is_negative() {
                    Err(InputError::new("v", "must be nonnegative"))
                } else {
                    Ok(r)
                }
            })
            .transpose()?;
        let thresholds = obj.get("thresholds").map(|t| float_list(t, "thresholds")).transpose()?;
        let simulation = obj.get("simulation").map(parse_simulation).transpose()?;

        Ok(Problem { alphabet, n, weights, function, measure, v, thresholds, simulation })
    }

    /// Canonical JSON form; parsing it back yields an identical `Problem`.
    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert(
            "alphabet".into(),
            match self.alphabet.labels() {
                Some(l) => json!(l),
                None => json!(self.alphabet.size()),
            },
        );
        obj.insert("n".into(), json!(self.n));
        let strings = |v: &[Rational]| -> Value { v.iter().map(rational::to_string).collect() };
        if let Some(w) = &self.weights {
            obj.insert("weights".into(), strings(w.entries()));
        }
        if let Some(f) = &self.function {
            let value = match f {
                FunctionSpec::Table(t) => json!({ "table": strings(t) }),
                FunctionSpec::SumOfSymbols => json!("sum_of_symbols"),
                FunctionSpec::HammingTo(x) => json!(format!("hamming_to:{}", format_word(x, &self.alphabet))),
                FunctionSpec::Indicator(x) => json!(format!("indicator:{}", format_word(x, &self.alphabet))),
            };
            obj.insert("function".into(), value);
        }
        if let Some(mu) = &self.measure {
            let value = match mu {
                MeasureSpec::Dense(p) => json!({ "dense": strings(p) }),
                MeasureSpec::Markov(spec) => {
                    let transitions: Vec<Value> = spec
                        .transitions
                        .iter()
                        .map(|mat| Value::Array(mat.iter().map(|row| strings(row)).collect()))
                        .collect();
                    json!({ "markov": { "init": strings(&spec.initial), "transitions": transitions } })
                }
            };
            obj.insert("measure".into(), value);
        }
        if let Some(v) = &self.v {
            obj.insert("v".into(), json!(rational::to_string(v)));
        }
        if let Some(t) = &self.thresholds {
            obj.insert("thresholds".into(), json!(t));
        }
        if let Some(s) = &self.simulation {
            obj.insert(
                "simulation".into(),
                json!({ "sample_count": s.sample_count, "seed": s.seed, "thresholds": s.thresholds }),
            );
        }
        Value::Object(obj)
    }

    fn check_table_size(&self, max_table: usize) -> Parse<usize> {
        let m = self.alphabet.size();
        let entries = (m as u128).checked_pow(self.n as u32).unwrap_or(u128::MAX);
        if entries > max_table as u128 {
            return Err(InputError::new(
                "n",
                format!("{m}^{} = {entries} table entries exceeds --max-table {max_table}", self.n),
            ));
        }
        table_len(m, self.n).map_err(|e| InputError::new("n", e.to_string()))
    }

    pub fn weights(&self) -> Parse<&WeightVector> {
        self.weights.as_ref().ok_or_else(|| InputError::new("weights", "required by this command"))
    }

    pub fn shift(&self) -> Rational {
        self.v.clone().unwrap_or_else(Rational::zero)
    }

    /// Dense table of the function, expanding builtins.
    pub fn function_table(&self, max_table: usize) -> Parse<TableFunction> {
        let spec = self.function.as_ref().ok_or_else(|| InputError::new("function", "required by this command"))?;
        let len = self.check_table_size(max_table)?;
        let (m, n) = (self.alphabet.size(), self.n);
        let table = match spec {
            FunctionSpec::Table(values) => {
                if values.len() != len {
                    return Err(InputError::new(
                        "function.table",
                        format!("expected {len} entries (m^n), found {}", values.len()),
                    ));
                }
                TableFunction::new(m, n, values.clone())
            }
            FunctionSpec::SumOfSymbols => {
                TableFunction::from_fn(m, n, |x| rational::int(x.symbols().iter().sum::<usize>() as i64))
            }
            FunctionSpec::Indicator(target) => TableFunction::from_fn(m, n, |x| {
                rational::int(i64::from(x == target))
            }),
            FunctionSpec::HammingTo(target) => {
                let w = self.weights()?;
                TableFunction::from_fn(m, n, |x| hamming_distance(x, target, w).expect("lengths validated"))
            }
        };
        table.map_err(|e| InputError::new("function", e.to_string()))
    }

    pub fn measure(&self, max_table: usize) -> Parse<Measure> {
        let spec = self.measure.as_ref().ok_or_else(|| InputError::new("measure", "required by this command"))?;
        let len = self.check_table_size(max_table)?;
        let m = self.alphabet.size();
        match spec {
            MeasureSpec::Dense(p) => {
                if p.len() != len {
                    return Err(InputError::new(
                        "measure.dense",
                        format!("expected {len} entries (m^n), found {}", p.len()),
                    ));
                }
                Measure::new(m, self.n, p.clone()).map_err(|e| InputError::new("measure.dense", e.to_string()))
            }
            MeasureSpec::Markov(spec) => {
                if spec.arity() != self.n {
                    return Err(InputError::new("measure.markov.transitions", "chain length does not match n"));
                }
                expand_markov(spec).map_err(|e| InputError::new("measure.markov", e.to_string()))
            }
        }
    }

    pub fn thresholds(&self) -> Parse<&[f64]> {
        self.thresholds
            .as_deref()
            .ok_or_else(|| InputError::new("thresholds", "required by this command"))
    }

    pub fn simulation(&self) -> Parse<&SimulationConfig> {
        self.simulation
            .as_ref()
            .ok_or_else(|| InputError::new("simulation", "required by this command"))
    }
}
