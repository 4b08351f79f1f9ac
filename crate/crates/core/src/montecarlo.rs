//! Simulation checks that empirical deviation frequencies stay under the
//! proved tail bounds.
//!
//! Randomness comes from SplitMix64. Sample `k` of a run with seed `s`
//! draws from its own stream whose initial state is
//! `mix(s) ^ mix(k + 0x9E3779B97F4A7C15)` (wrapping), so results do not
//! depend on evaluation order. Uniforms on `[0, 1)` take the top 53 bits of
//! the next output. A word is drawn symbol by symbol from
//! `ℙ(xᵢ | x₁..ᵢ₋₁)` by inverse CDF over the symbols in increasing order.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::lipschitz_constant;
use crate::martingale::{azuma_bound, concentration_bound_from_parts, martingale_profile};
use crate::mixing::{delta_matrix, operator_norm_2, Measure};
use crate::rational::{self, Rational};
use crate::word_space::{unindex, TableFunction, WeightVector, Word};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for sample `index` of a run seeded with `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(mix64(seed) ^ mix64(index.wrapping_add(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub sample_count: u64,
    pub seed: u64,
    pub thresholds: Vec<f64>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig("sample_count must be at least 1".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::InvalidConfig("thresholds must be nonempty".into()));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidConfig(format!("threshold {t} is not a positive number")));
        }
        Ok(())
    }
}

/// Sequential conditional sampler with per-prefix cumulative tables.
#[derive(Debug, Clone)]
pub struct Sampler {
    alphabet_size: usize,
    arity: usize,
    /// `cumulative[i][k*m + s] = ℙ(X_{i+1} ≤ s | X₁..ᵢ = unindex(k))`.
    cumulative: Vec<Vec<f64>>,
}

impl Sampler {
    pub fn new(p: &Measure) -> Self {
        let (m, n) = (p.alphabet_size(), p.arity());
        let mut masses: Vec<Vec<Rational>> = vec![p.probabilities().to_vec()];
        for _ in 0..n {
            let next = masses.last().unwrap().chunks_exact(m).map(rational::sum).collect();
            masses.push(next);
        }
        masses.reverse(); // masses[i] is the marginal of X₁..ᵢ

        let cumulative = (0..n)
            .map(|i| {
                let mut table = Vec::with_capacity(masses[i + 1].len());
                for (parent, children) in masses[i].iter().zip(masses[i + 1].chunks_exact(m)) {
                    let mut acc = Rational::zero();
                    for child in children {
                        acc += child;
                        table.push(if parent.is_zero() {
                            0.0
                        } else {
                            rational::to_f64(&(&acc / parent))
                        });
                    }
                }
                table
            })
            .collect();
        Self { alphabet_size: m, arity: n, cumulative }
    }

    /// Draws a word and returns its table index.
    pub fn sample_index(&self, rng: &mut SplitMix64) -> usize {
        let m = self.alphabet_size;
        let mut index = 0usize;
        for level in &self.cumulative {
            let row = &level[index * m..(index + 1) * m];
            let u = rng.next_f64();
            // Past the last positive-probability symbol only by rounding.
            let last_positive = (0..m)
                .rev()
                .find(|&s| row[s] > if s == 0 { 0.0 } else { row[s - 1] })
                .unwrap_or(0);
            let symbol = (0..m)
                .find(|&s| u < row[s] && row[s] > if s == 0 { 0.0 } else { row[s - 1] })
                .unwrap_or(last_positive);
            index = index * m + symbol;
        }
        index
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> Word {
        unindex(self.sample_index(rng), self.alphabet_size, self.arity)
    }
}

pub fn sample_word(p: &Measure, rng: &mut SplitMix64) -> Word {
    Sampler::new(p).sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub t: f64,
    pub exceedances: u64,
    pub frequency: f64,
    /// `√(p̂(1 − p̂)/N)`
    pub std_error: f64,
    /// Azuma with the exact `D²(f)`; 0 when `D² = 0` (f is a.s. constant).
    pub azuma: f64,
    pub corollary: f64,
    /// `frequency ≤ min(1, azuma) + 3·std_error`
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub seed: u64,
    pub sample_count: u64,
    #[serde(with = "rational::as_string")]
    pub mean: Rational,
    #[serde(with = "rational::as_string")]
    pub d_squared: Rational,
    #[serde(with = "rational::as_string")]
    pub lipschitz: Rational,
    pub delta_norm: f64,
    pub thresholds: Vec<ThresholdReport>,
}

impl TailReport {
    pub fn all_within_bound(&self) -> bool {
        self.thresholds.iter().all(|t| t.within_bound)
    }
}

/// Estimates `ℙ(|f − E f| > t)` by simulation, with `E f` exact, next to the
/// Azuma and mixing-matrix bounds.
pub fn empirical_tail(
    f: &TableFunction,
    p: &Measure,
    w: &WeightVector,
    cfg: &SimulationConfig,
) -> Result<TailReport> {
    cfg.validate()?;
    f.check_same_shape(p.as_table())?;
    let mean = p.expectation(f)?;
    let profile = martingale_profile(f, p)?;
    let lipschitz = lipschitz_constant(f, w)?;
    let delta_norm = operator_norm_2(&delta_matrix(p)?);

    let deviations: Vec<Rational> = f.values().iter().map(|v| num_traits::Signed::abs(&(v - &mean))).collect();
    let cutoffs: Vec<Rational> = cfg
        .thresholds
        .iter()
        .map(|&t| rational::from_f64(t).expect("validated finite"))
        .collect();
    // exceeds[k][x]: |f(x) − E f| > t_k
    let exceeds: Vec<Vec<bool>> = cutoffs
        .iter()
        .map(|t| deviations.iter().map(|d| d > t).collect())
        .collect();

    let sampler = Sampler::new(p);
    let mut counts = vec![0u64; cfg.thresholds.len()];
    for k in 0..cfg.sample_count {
        let x = sampler.sample_index(&mut SplitMix64::stream(cfg.seed, k));
        for (count, table) in counts.iter_mut().zip(&exceeds) {
            if table[x] {
                *count += 1;
            }
        }
    }

    let d2 = rational::to_f64(&profile.d_squared);
    let n = cfg.sample_count as f64;
    let thresholds = cfg
        .thresholds
        .iter()
        .zip(counts)
        .map(|(&t, exceedances)| {
            let frequency = exceedances as f64 / n;
            let std_error = (frequency * (1.0 - frequency) / n).sqrt();
            let azuma = if profile.d_squared.is_zero() { 0.0 } else { azuma_bound(t, d2)? };
            let corollary = concentration_bound_from_parts(&lipschitz, w, delta_norm, t)?;
            Ok(ThresholdReport {
                t,
                exceedances,
                frequency,
                std_error,
                azuma,
                corollary,
                within_bound: frequency <= azuma.min(1.0) + 3.0 * std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TailReport {
        seed: cfg.seed,
        sample_count: cfg.sample_count,
        mean,
        d_squared: profile.d_squared,
        lipschitz,
        delta_norm,
        thresholds,
    })
}
