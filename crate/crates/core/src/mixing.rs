//! Measures on `S^n`, conditional laws of future coordinates, and the
//! η-mixing coefficients assembled into the upper-triangular matrix `Δ_n`.
//!
//! Coordinates `i`, `j` are 1-based throughout this module, matching the
//! usual indexing of `X₁, …, X_n`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::word_space::{table_len, word_index, TableFunction, WeightVector, Word};

/// A probability table on `S^n` with exactly rational entries summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    table: TableFunction,
}

impl Measure {
    pub fn new(alphabet_size: usize, arity: usize, probabilities: Vec<Rational>) -> Result<Self> {
        Self::from_table(TableFunction::new(alphabet_size, arity, probabilities)?)
    }

    pub fn from_table(table: TableFunction) -> Result<Self> {
        if let Some(k) = table.values().iter().position(|p| p.is_negative()) {
            return Err(Error::InvalidMeasure(format!("entry {k} is negative")));
        }
        let total = table.sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "entries sum to {}, not 1",
                rational::to_string(&total)
            )));
        }
        Ok(Self { table })
    }

    pub fn uniform(alphabet_size: usize, arity: usize) -> Result<Self> {
        let len = table_len(alphabet_size, arity)?;
        Self::new(alphabet_size, arity, vec![rational::ratio(1, len as i64); len])
    }

    /// Independent coordinates with the given per-coordinate marginals.
    pub fn product(marginals: &[Vec<Rational>]) -> Result<Self> {
        let m = marginals.first().map(Vec::len).unwrap_or(1);
        if marginals.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidMeasure("marginals of unequal length".into()));
        }
        let table = TableFunction::from_fn(m, marginals.len(), |x| {
            x.symbols()
                .iter()
                .zip(marginals)
                .fold(Rational::one(), |acc, (&s, p)| acc * &p[s])
        })?;
        Self::from_table(table)
    }

    pub fn point_mass(alphabet_size: usize, x: &Word) -> Result<Self> {
        let index = word_index(x, alphabet_size)?;
        let len = table_len(alphabet_size, x.len())?;
        let mut probs = vec![Rational::zero(); len];
        probs[index] = Rational::one();
        Self::new(alphabet_size, x.len(), probs)
    }

    pub fn alphabet_size(&self) -> usize {
        self.table.alphabet_size()
    }

    pub fn arity(&self) -> usize {
        self.table.arity()
    }

    pub fn probabilities(&self) -> &[Rational] {
        self.table.values()
    }

    pub fn as_table(&self) -> &TableFunction {
        &self.table
    }

    /// Index range of the words starting with `prefix`.
    pub(crate) fn block(&self, prefix: &Word) -> Result<std::ops::Range<usize>> {
        let n = self.arity();
        if prefix.len() > n {
            return Err(Error::PrefixTooLong { prefix: prefix.len(), arity: n });
        }
        let size = self.alphabet_size().pow((n - prefix.len()) as u32);
        let start = word_index(prefix, self.alphabet_size())? * size;
        Ok(start..start + size)
    }

    /// `ℙ(X₁..ᵢ = prefix)`.
    pub fn prefix_probability(&self, prefix: &Word) -> Result<Rational> {
        let range = self.block(prefix)?;
        Ok(rational::sum(&self.probabilities()[range]))
    }

    /// Expectation of `f` under this measure.
    pub fn expectation(&self, f: &TableFunction) -> Result<Rational> {
        self.table.dot(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovSpec {
    pub initial: Vec<Rational>,
    /// `transitions[t][a][b] = ℙ(X_{t+2} = b | X_{t+1} = a)`.
    pub transitions: Vec<Vec<Vec<Rational>>>,
}

impl MarkovSpec {
    pub fn homogeneous(initial: Vec<Rational>, transition: Vec<Vec<Rational>>, n: usize) -> Self {
        Self {
            initial,
            transitions: vec![transition; n.saturating_sub(1)],
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.initial.len()
    }

    pub fn arity(&self) -> usize {
        self.transitions.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMarkov(msg));
        let m = self.initial.len();
        if m == 0 {
            return bad("initial distribution is empty".into());
        }
        if self.initial.iter().any(|p| p.is_negative()) {
            return bad("initial distribution has a negative entry".into());
        }
        if !rational::sum(&self.initial).is_one() {
            return bad("initial distribution does not sum to 1".into());
        }
        for (t, matrix) in self.transitions.iter().enumerate() {
            if matrix.len() != m {
                return bad(format!("transition {t} has {} rows, expected {m}", matrix.len()));
            }
            for (a, row) in matrix.iter().enumerate() {
                if row.len() != m {
                    return bad(format!("transition {t} row {a} has length {}, expected {m}", row.len()));
                }
                if row.iter().any(|p| p.is_negative()) {
                    return bad(format!("transition {t} row {a} has a negative entry"));
                }
                if !rational::sum(row).is_one() {
                    return bad(format!("transition {t} row {a} does not sum to 1"));
                }
            }
        }
        Ok(())
    }
}

/// `ℙ(x) = init(x₁) Π T_{i−1}(x_{i−1}, x_i)`.
pub fn expand_markov(spec: &MarkovSpec) -> Result<Measure> {
    spec.validate()?;
    let table = TableFunction::from_fn(spec.alphabet_size(), spec.arity(), |x| {
        let s = x.symbols();
        let mut p = spec.initial[s[0]].clone();
        for (t, pair) in s.windows(2).enumerate() {
            p *= &spec.transitions[t][pair[0]][pair[1]];
        }
        p
    })?;
    Measure::from_table(table)
}

/// Law of `X_j..n` given `X₁..ᵢ = prefix` (`i = |prefix| < j ≤ n`), as a
/// table on `S^{n−j+1}`.
pub fn conditional_law(p: &Measure, prefix: &Word, j: usize) -> Result<TableFunction> {
    let (m, n, i) = (p.alphabet_size(), p.arity(), prefix.len());
    if !(i < j && j <= n) {
        return Err(Error::InvalidIndices { i, j, n });
    }
    let range = p.block(prefix)?;
    let block = &p.probabilities()[range];
    let total = rational::sum(block);
    if total.is_zero() {
        return Err(Error::ZeroPrefixProbability);
    }
    let law_len = m.pow((n - j + 1) as u32);
    let mut law = vec![Rational::zero(); law_len];
    for chunk in block.chunks_exact(law_len) {
        for (acc, v) in law.iter_mut().zip(chunk) {
            *acc += v;
        }
    }
    for v in law.iter_mut() {
        *v /= &total;
    }
    TableFunction::new(m, n - j + 1, law)
}

/// `½ Σ |t1(x) − t2(x)|`.
pub fn tv_distance(t1: &[Rational], t2: &[Rational]) -> Result<Rational> {
    if t1.len() != t2.len() {
        return Err(Error::LengthMismatch { expected: t1.len(), found: t2.len() });
    }
    let l1 = t1
        .iter()
        .zip(t2)
        .fold(Rational::zero(), |acc, (a, b)| acc + (a - b).abs());
    Ok(l1 / rational::int(2))
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= 1 && i < j && j <= n {
        Ok(())
    } else {
        Err(Error::InvalidIndices { i, j, n })
    }
}

/// `η_ij(y, z, z′)`: TV distance between the laws of `X_j..n` given
/// `X₁..ᵢ = yz` and given `X₁..ᵢ = yz′`.
pub fn eta(p: &Measure, i: usize, j: usize, y: &Word, z: usize, z_alt: usize) -> Result<Rational> {
    check_pair(p.arity(), i, j)?;
    if y.len() + 1 != i {
        return Err(Error::LengthMismatch { expected: i - 1, found: y.len() });
    }
    let a = conditional_law(p, &y.push(z), j)?;
    let b = conditional_law(p, &y.push(z_alt), j)?;
    tv_distance(a.values(), b.values())
}

/// `max_{y, z, z′} η_ij(y, z, z′)` over conditioning prefixes of positive
/// probability; zero when no admissible pair exists.
pub fn eta_bar(p: &Measure, i: usize, j: usize) -> Result<Rational> {
    check_pair(p.arity(), i, j)?;
    let m = p.alphabet_size();
    let mut best = Rational::zero();
    for y in crate::word_space::words(m, i - 1) {
        let laws: Vec<TableFunction> = (0..m)
            .filter_map(|z| conditional_law(p, &y.push(z), j).ok())
            .collect();
        for (a, law_a) in laws.iter().enumerate() {
            for law_b in &laws[a + 1..] {
                let d = tv_distance(law_a.values(), law_b.values())?;
                if d > best {
                    best = d;
                }
            }
        }
    }
    Ok(best)
}

/// Upper-triangular `Δ_n` with unit diagonal and `η̄_ij` above it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct DeltaMatrix {
    #[serde(serialize_with = "rational::matrix_as_strings")]
    entries: Vec<Vec<Rational>>,
}

impl DeltaMatrix {
    /// Builds from the strictly-upper entries; everything else is implied.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> Result<Rational>) -> Result<Self> {
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            entries[i][i] = Rational::one();
            for j in i + 1..n {
                let e = upper(i + 1, j + 1)?;
                if e.is_negative() || e > Rational::one() {
                    return Err(Error::InvalidMeasure(format!(
                        "mixing coefficient ({}, {}) outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                entries[i][j] = e;
            }
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, |_, _| Ok(Rational::zero())).expect("zero is in range")
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n())
    }

    /// `Δ_n w`, exactly.
    pub fn apply(&self, w: &WeightVector) -> Result<Vec<Rational>> {
        if w.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), found: w.len() });
        }
        Ok(self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(w.entries())
                    .fold(Rational::zero(), |acc, (d, wj)| acc + d * wj)
            })
            .collect())
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(rational::to_f64).collect())
            .collect()
    }
}

pub fn delta_matrix(p: &Measure) -> Result<DeltaMatrix> {
    DeltaMatrix::from_upper(p.arity(), |i, j| eta_bar(p, i, j))
}

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 1_000_000;

/// Largest singular value of `Δ_n`, biased upward.
///
/// Power iteration on `A = ΔᵀΔ` from the all-ones vector. `A` is
/// entrywise nonnegative with a positive diagonal, so every iterate stays
/// positive and the Collatz–Wielandt ratio `max_k (Ax)_k / x_k` is an upper
/// bound on `λ_max(A)`, while the Rayleigh quotient is a lower bound. Stops
/// once they agree to the relative tolerance and returns the square root of
/// the upper end.
pub fn operator_norm_2(d: &DeltaMatrix) -> f64 {
    let n = d.n();
    if n == 0 {
        return 0.0;
    }
    let dm = d.to_f64();
    let mut a = vec![vec![0.0f64; n]; n];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = (0..n).map(|k| dm[k][r] * dm[k][c]).sum();
        }
    }
    let mul = |x: &[f64]| -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    };

    let mut x = vec![1.0f64; n];
    let mut upper = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERATIONS {
        let ax = mul(&x);
        let dot: f64 = x.iter().zip(&ax).map(|(p, q)| p * q).sum();
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let rayleigh = dot / norm_sq;
        let cw = x
            .iter()
            .zip(&ax)
            .filter(|(xi, _)| **xi > 0.0)
            .map(|(xi, yi)| yi / xi)
            .fold(0.0f64, f64::max);
        upper = upper.min(cw);
        if upper - rayleigh <= POWER_TOLERANCE * upper {
            break;
        }
        let scale = ax.iter().cloned().fold(0.0f64, f64::max);
        x = ax.into_iter().map(|v| v / scale).collect();
    }
    // Absorb rounding in the final ratio so the bound stays on the safe side.
    (upper * (1.0 + 4.0 * f64::EPSILON)).sqrt()
}
