//! Words over a finite alphabet, dense tables indexed by them, and the
//! structural operators on tables: marginal projection (sum over the first
//! symbol), y-sections (fix the last symbol) and prefix restriction.
//!
//! Tables are stored lexicographically with `x₁` most significant, so the
//! words sharing a prefix of length `i` occupy one contiguous block of
//! `m^(n-i)` entries.

use std::fmt;
use std::ops::Index;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidLabels(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn symbol_of(&self, label: &str) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }
}

/// A word `x ∈ S^n`; the empty word is the single element of `S^0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>, m: usize) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s >= m) {
            return Err(Error::SymbolOutOfRange { symbol: bad, size: m });
        }
        Ok(Self(symbols))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, s: usize) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<&[usize]> for Word {
    fn from(s: &[usize]) -> Self {
        Word(s.to_vec())
    }
}

/// Strictly positive coordinate weights `w` of the metric `d_w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<Rational>);

impl WeightVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|w| !w.is_positive()) {
            return Err(Error::NonPositiveWeight { index });
        }
        Ok(Self(entries))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![rational::int(1); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.0)
    }

    pub fn norm_squared(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, w| acc + w * w)
    }

    /// Sub-vector `w_{from+1}..w_{to}` (zero-based half-open range).
    pub fn slice(&self, from: usize, to: usize) -> WeightVector {
        WeightVector(self.0[from..to].to_vec())
    }
}

impl Index<usize> for WeightVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

/// `m^n`, or an error when it does not fit in memory-addressable range.
pub fn table_len(m: usize, n: usize) -> Result<usize> {
    (m as u128)
        .checked_pow(n as u32)
        .filter(|&len| len <= usize::MAX as u128)
        .map(|len| len as usize)
        .ok_or(Error::TableTooLarge {
            entries: u128::MAX,
            limit: usize::MAX,
        })
}

pub fn word_index(x: &Word, m: usize) -> Result<usize> {
    x.symbols().iter().try_fold(0usize, |acc, &s| {
        if s >= m {
            Err(Error::SymbolOutOfRange { symbol: s, size: m })
        } else {
            Ok(acc * m + s)
        }
    })
}

pub fn unindex(mut index: usize, m: usize, n: usize) -> Word {
    let mut symbols = vec![0; n];
    for slot in symbols.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    Word(symbols)
}

/// All words of `S^n` in index order.
pub fn words(m: usize, n: usize) -> impl Iterator<Item = Word> {
    let total = if n == 0 { 1 } else { m.pow(n as u32) };
    (0..total).map(move |i| unindex(i, m, n))
}

/// Ordered pairs of word indices differing in exactly one coordinate, as
/// `(x, y, coordinate)`. Each unordered edge appears twice.
pub fn hamming_edges(m: usize, n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    let total = m.pow(n as u32);
    (0..total).flat_map(move |x| {
        (0..n).flat_map(move |coord| {
            let stride = m.pow((n - 1 - coord) as u32);
            let current = (x / stride) % m;
            (0..m)
                .filter(move |&s| s != current)
                .map(move |s| (x, x - current * stride + s * stride, coord))
        })
    })
}

pub fn hamming_distance(x: &Word, y: &Word, w: &WeightVector) -> Result<Rational> {
    if x.len() != w.len() {
        return Err(Error::LengthMismatch { expected: w.len(), found: x.len() });
    }
    if y.len() != w.len() {
        return Err(Error::LengthMismatch { expected: w.len(), found: y.len() });
    }
    Ok(x.symbols()
        .iter()
        .zip(y.symbols())
        .zip(w.entries())
        .filter(|((a, b), _)| a != b)
        .fold(Rational::zero(), |acc, (_, wi)| acc + wi))
}

/// A function `S^n → ℚ` stored densely; arity 0 is a single scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableFunction {
    alphabet_size: usize,
    arity: usize,
    values: Vec<Rational>,
}

impl TableFunction {
    pub fn new(alphabet_size: usize, arity: usize, values: Vec<Rational>) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        let expected = table_len(alphabet_size, arity)?;
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: values.len() });
        }
        Ok(Self { alphabet_size, arity, values })
    }

    pub fn from_fn(
        alphabet_size: usize,
        arity: usize,
        mut f: impl FnMut(&Word) -> Rational,
    ) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        table_len(alphabet_size, arity)?;
        let values = words(alphabet_size, arity).map(|x| f(&x)).collect();
        Ok(Self { alphabet_size, arity, values })
    }

    pub fn constant(alphabet_size: usize, arity: usize, c: Rational) -> Result<Self> {
        let len = table_len(alphabet_size, arity)?;
        Self::new(alphabet_size, arity, vec![c; len])
    }

    pub fn scalar(alphabet_size: usize, c: Rational) -> Self {
        Self { alphabet_size, arity: 0, values: vec![c] }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: &Word) -> Result<&Rational> {
        if x.len() != self.arity {
            return Err(Error::LengthMismatch { expected: self.arity, found: x.len() });
        }
        Ok(&self.values[word_index(x, self.alphabet_size)?])
    }

    pub fn sum(&self) -> Rational {
        rational::sum(&self.values)
    }

    pub fn dot(&self, other: &TableFunction) -> Result<Rational> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b))
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> TableFunction {
        TableFunction {
            alphabet_size: self.alphabet_size,
            arity: self.arity,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, a: &Rational) -> TableFunction {
        self.map(|v| v * a)
    }

    pub fn shift(&self, a: &Rational) -> TableFunction {
        self.map(|v| v + a)
    }

    pub fn negate(&self) -> TableFunction {
        self.map(|v| -v)
    }

    pub fn check_same_shape(&self, other: &TableFunction) -> Result<()> {
        if self.alphabet_size != other.alphabet_size {
            return Err(Error::AlphabetMismatch(self.alphabet_size, other.alphabet_size));
        }
        if self.arity != other.arity {
            return Err(Error::LengthMismatch { expected: self.arity, found: other.arity });
        }
        Ok(())
    }

    /// `κ'(y) = Σ_{x₁} κ(x₁ y)`.
    pub fn marginal_projection(&self) -> Result<TableFunction> {
        if self.arity == 0 {
            return Err(Error::ArityZero);
        }
        let block = self.values.len() / self.alphabet_size;
        let mut values = self.values[..block].to_vec();
        for chunk in self.values.chunks_exact(block).skip(1) {
            for (acc, v) in values.iter_mut().zip(chunk) {
                *acc += v;
            }
        }
        Ok(TableFunction {
            alphabet_size: self.alphabet_size,
            arity: self.arity - 1,
            values,
        })
    }

    /// `κ_y(x) = κ(x y)`: fixes the last coordinate.
    pub fn y_section(&self, y: usize) -> Result<TableFunction> {
        if self.arity == 0 {
            return Err(Error::ArityZero);
        }
        if y >= self.alphabet_size {
            return Err(Error::SymbolOutOfRange { symbol: y, size: self.alphabet_size });
        }
        let values = self
            .values
            .iter()
            .skip(y)
            .step_by(self.alphabet_size)
            .cloned()
            .collect();
        Ok(TableFunction {
            alphabet_size: self.alphabet_size,
            arity: self.arity - 1,
            values,
        })
    }

    /// `x ↦ f(y x)` for a prefix `y` of length `i ≤ n`.
    pub fn prefix_restrict(&self, prefix: &Word) -> Result<TableFunction> {
        if prefix.len() > self.arity {
            return Err(Error::PrefixTooLong { prefix: prefix.len(), arity: self.arity });
        }
        let start_block = word_index(prefix, self.alphabet_size)?;
        let arity = self.arity - prefix.len();
        let block = self.alphabet_size.pow(arity as u32);
        let start = start_block * block;
        Ok(TableFunction {
            alphabet_size: self.alphabet_size,
            arity,
            values: self.values[start..start + block].to_vec(),
        })
    }
}
