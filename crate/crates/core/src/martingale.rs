//! Martingale differences of `f(X)` along the coordinate filtration, the
//! `D²` functional, Azuma's tail bound, and the mixing-matrix bound on
//! `Σ V̄ᵢ²`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::lipschitz_constant;
use crate::mixing::{delta_matrix, operator_norm_2, DeltaMatrix, Measure};
use crate::rational::{self, Rational};
use crate::word_space::{TableFunction, WeightVector, Word};

fn check_shapes(f: &TableFunction, p: &Measure) -> Result<()> {
    f.check_same_shape(p.as_table())
}

/// `E[f(X) | X₁..ᵢ = prefix]`.
pub fn conditional_expectation(f: &TableFunction, p: &Measure, prefix: &Word) -> Result<Rational> {
    check_shapes(f, p)?;
    let range = p.block(prefix)?;
    let probs = &p.probabilities()[range.clone()];
    let mass = rational::sum(probs);
    if mass.is_zero() {
        return Err(Error::ZeroPrefixProbability);
    }
    let weighted = f.values()[range]
        .iter()
        .zip(probs)
        .fold(Rational::zero(), |acc, (fx, px)| acc + fx * px);
    Ok(weighted / mass)
}

/// `V_i(f; y₁..ᵢ) = E[f | X₁..ᵢ = y₁..ᵢ] − E[f | X₁..ᵢ₋₁ = y₁..ᵢ₋₁]`.
pub fn v_i(f: &TableFunction, p: &Measure, y: &Word) -> Result<Rational> {
    let i = y.len();
    if i == 0 || i > p.arity() {
        return Err(Error::InvalidIndices { i, j: i, n: p.arity() });
    }
    let now = conditional_expectation(f, p, y)?;
    let before = conditional_expectation(f, p, &Word(y.symbols()[..i - 1].to_vec()))?;
    Ok(now - before)
}

/// Conditional means for every prefix at every depth: `levels[i][k]` is
/// `E[f | X₁..ᵢ = unindex(k)]`, or `None` for null prefixes.
fn prefix_means(f: &TableFunction, p: &Measure) -> Vec<Vec<Option<Rational>>> {
    let (m, n) = (p.alphabet_size(), p.arity());
    let mut mass: Vec<Rational> = p.probabilities().to_vec();
    let mut moment: Vec<Rational> = f
        .values()
        .iter()
        .zip(p.probabilities())
        .map(|(fx, px)| fx * px)
        .collect();
    let mut levels = vec![Vec::new(); n + 1];
    for depth in (0..=n).rev() {
        levels[depth] = mass
            .iter()
            .zip(&moment)
            .map(|(pm, fm)| (!pm.is_zero()).then(|| fm / pm))
            .collect();
        if depth > 0 {
            mass = mass.chunks_exact(m).map(rational::sum).collect();
            moment = moment.chunks_exact(m).map(rational::sum).collect();
        }
    }
    levels
}

fn all_v_bar(f: &TableFunction, p: &Measure) -> Vec<Rational> {
    let m = p.alphabet_size();
    let levels = prefix_means(f, p);
    (1..levels.len())
        .map(|i| {
            levels[i]
                .iter()
                .enumerate()
                .filter_map(|(k, now)| {
                    let now = now.as_ref()?;
                    let before = levels[i - 1][k / m].as_ref()?;
                    Some((now - before).abs())
                })
                .fold(Rational::zero(), |acc, v| acc.max(v))
        })
        .collect()
}

/// `V̄ᵢ(f) = max |V_i(f; y)|` over positive-probability `y ∈ S^i`.
pub fn v_bar(f: &TableFunction, p: &Measure, i: usize) -> Result<Rational> {
    check_shapes(f, p)?;
    if i == 0 || i > p.arity() {
        return Err(Error::InvalidIndices { i, j: i, n: p.arity() });
    }
    Ok(all_v_bar(f, p).swap_remove(i - 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MartingaleProfile {
    #[serde(with = "rational::vec_as_strings")]
    pub v_bar: Vec<Rational>,
    #[serde(with = "rational::as_string")]
    pub d_squared: Rational,
}

pub fn martingale_profile(f: &TableFunction, p: &Measure) -> Result<MartingaleProfile> {
    check_shapes(f, p)?;
    let v_bar = all_v_bar(f, p);
    let d_squared = v_bar.iter().fold(Rational::zero(), |acc, v| acc + v * v);
    Ok(MartingaleProfile { v_bar, d_squared })
}

/// `2 exp(−t² / (2 D²))`. Not clamped; values above 1 are vacuous.
pub fn azuma_bound(t: f64, d_squared: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveArgument("t"));
    }
    if !(d_squared > 0.0) {
        return Err(Error::NonPositiveArgument("D²"));
    }
    Ok(2.0 * (-t * t / (2.0 * d_squared)).exp())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SumViReport {
    /// `Σ V̄ᵢ²`
    #[serde(with = "rational::as_string")]
    pub lhs: Rational,
    /// `‖f‖²_Lip · ‖Δ_n w‖₂²`
    #[serde(with = "rational::as_string")]
    pub rhs: Rational,
    #[serde(with = "rational::as_string")]
    pub lipschitz: Rational,
    #[serde(with = "rational::vec_as_strings")]
    pub v_bar: Vec<Rational>,
    #[serde(with = "rational::vec_as_strings")]
    pub delta_w: Vec<Rational>,
    pub per_i_holds: Vec<bool>,
    pub holds: bool,
}

impl SumViReport {
    pub fn all_hold(&self) -> bool {
        self.holds && self.per_i_holds.iter().all(|&h| h)
    }
}

pub fn verify_sumvi(f: &TableFunction, p: &Measure, w: &WeightVector) -> Result<SumViReport> {
    let delta = delta_matrix(p)?;
    verify_sumvi_with_delta(f, p, w, &delta)
}

/// As [`verify_sumvi`] with a precomputed `Δ_n`.
pub fn verify_sumvi_with_delta(
    f: &TableFunction,
    p: &Measure,
    w: &WeightVector,
    delta: &DeltaMatrix,
) -> Result<SumViReport> {
    let profile = martingale_profile(f, p)?;
    let lipschitz = lipschitz_constant(f, w)?;
    let delta_w = delta.apply(w)?;
    let norm_sq = delta_w.iter().fold(Rational::zero(), |acc, v| acc + v * v);
    let rhs = &lipschitz * &lipschitz * norm_sq;
    let per_i_holds = profile
        .v_bar
        .iter()
        .zip(&delta_w)
        .map(|(v, dw)| *v <= &lipschitz * dw)
        .collect();
    Ok(SumViReport {
        holds: profile.d_squared <= rhs,
        lhs: profile.d_squared,
        rhs,
        lipschitz,
        v_bar: profile.v_bar,
        delta_w,
        per_i_holds,
    })
}

/// `2 exp(−t² / (2 L² ‖w‖₂² ‖Δ‖₂²))` from its ingredients; a zero
/// Lipschitz constant gives 0.
pub fn concentration_bound_from_parts(
    lipschitz: &Rational,
    w: &WeightVector,
    delta_norm: f64,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveArgument("t"));
    }
    if lipschitz.is_zero() {
        return Ok(0.0);
    }
    let scale = rational::to_f64(&(lipschitz * lipschitz * w.norm_squared())) * delta_norm * delta_norm;
    Ok(2.0 * (-t * t / (2.0 * scale)).exp())
}

pub fn concentration_bound(f: &TableFunction, p: &Measure, w: &WeightVector, t: f64) -> Result<f64> {
    check_shapes(f, p)?;
    if w.len() != f.arity() {
        return Err(Error::LengthMismatch { expected: f.arity(), found: w.len() });
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveArgument("t"));
    }
    let lipschitz = lipschitz_constant(f, w)?;
    if lipschitz.is_zero() {
        return Ok(0.0);
    }
    let norm = operator_norm_2(&delta_matrix(p)?);
    concentration_bound_from_parts(&lipschitz, w, norm, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{expand_markov, MarkovSpec};
    use crate::rational::{int, ratio};
    use crate::word_space::words;

    fn indicator_11() -> TableFunction {
        TableFunction::new(2, 2, vec![int(0), int(0), int(0), int(1)]).unwrap()
    }

    fn sticky(n: usize) -> Measure {
        let t = vec![vec![ratio(9, 10), ratio(1, 10)], vec![ratio(1, 10), ratio(9, 10)]];
        expand_markov(&MarkovSpec::homogeneous(vec![ratio(1, 2), ratio(1, 2)], t, n)).unwrap()
    }

    #[test]
    fn conditional_expectation_examples() {
        let p = Measure::uniform(2, 2).unwrap();
        let f = indicator_11();
        assert_eq!(conditional_expectation(&f, &p, &Word(vec![1, 1])).unwrap(), int(1));
        assert_eq!(conditional_expectation(&f, &p, &Word::empty()).unwrap(), ratio(1, 4));
        assert_eq!(conditional_expectation(&f, &p, &Word(vec![1])).unwrap(), ratio(1, 2));
        let point = Measure::point_mass(2, &Word(vec![0, 0])).unwrap();
        assert_eq!(
            conditional_expectation(&f, &point, &Word(vec![1])),
            Err(Error::ZeroPrefixProbability)
        );
    }

    #[test]
    fn v_i_examples() {
        let p = Measure::uniform(2, 2).unwrap();
        let c = TableFunction::constant(2, 2, int(5)).unwrap();
        for y in words(2, 2).chain(words(2, 1)) {
            assert_eq!(v_i(&c, &p, &y).unwrap(), int(0));
        }
        assert_eq!(v_i(&indicator_11(), &p, &Word(vec![1])).unwrap(), ratio(1, 4));
        assert!(v_i(&c, &p, &Word::empty()).is_err());
    }

    #[test]
    fn martingale_property_on_chain() {
        let p = sticky(3);
        let f = TableFunction::from_fn(2, 3, |x| int(x.symbols().iter().sum::<usize>() as i64)).unwrap();
        for i in 1..=3 {
            for prefix in words(2, i - 1) {
                let base = p.prefix_probability(&prefix).unwrap();
                let total = (0..2).fold(Rational::zero(), |acc, s| {
                    let y = prefix.push(s);
                    let weight = p.prefix_probability(&y).unwrap() / &base;
                    acc + weight * v_i(&f, &p, &y).unwrap()
                });
                assert_eq!(total, int(0));
            }
        }
    }

    #[test]
    fn v_bar_examples() {
        let p = Measure::uniform(2, 2).unwrap();
        let f = indicator_11();
        assert_eq!(v_bar(&f, &p, 1).unwrap(), ratio(1, 4));
        assert_eq!(v_bar(&f, &p, 2).unwrap(), ratio(1, 2));
        let c = TableFunction::constant(2, 2, int(-3)).unwrap();
        assert_eq!(v_bar(&c, &p, 2).unwrap(), int(0));
    }

    #[test]
    fn v_bar_matches_direct_enumeration() {
        let p = sticky(3);
        let f = TableFunction::from_fn(2, 3, |x| {
            let s = x.symbols();
            ratio((s[0] * 3 + s[1] * 5) as i64 - 2 * s[2] as i64, 7)
        })
        .unwrap();
        for i in 1..=3 {
            let direct = words(2, i)
                .map(|y| v_i(&f, &p, &y).unwrap().abs())
                .fold(Rational::zero(), |a, b| a.max(b));
            assert_eq!(v_bar(&f, &p, i).unwrap(), direct);
        }
    }

    #[test]
    fn profile_examples() {
        let p = Measure::uniform(2, 2).unwrap();
        let c = TableFunction::constant(2, 2, int(1)).unwrap();
        let zero = martingale_profile(&c, &p).unwrap();
        assert_eq!(zero.v_bar, vec![int(0), int(0)]);
        assert_eq!(zero.d_squared, int(0));
        let prof = martingale_profile(&indicator_11(), &p).unwrap();
        assert_eq!(prof.d_squared, ratio(5, 16));
        let max_sq = prof.v_bar.iter().map(|v| v * v).max().unwrap();
        assert!(prof.d_squared >= max_sq);
    }

    #[test]
    fn azuma_examples() {
        let near_zero = azuma_bound(1e-9, 1.0).unwrap();
        assert!((near_zero - 2.0).abs() < 1e-12);
        let v = azuma_bound(2.0, 1.0).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() <= 1e-12 * v);
        assert!((v - 0.270671).abs() < 1e-6);
        let (t, d2) = (0.7, 1.3);
        let doubled = azuma_bound(2.0 * t, d2).unwrap();
        let expected = 2.0 * (azuma_bound(t, d2).unwrap() / 2.0).powi(4);
        assert!((doubled - expected).abs() <= 1e-12 * expected);
        assert!(azuma_bound(0.0, 1.0).is_err());
        assert!(azuma_bound(1.0, 0.0).is_err());
        assert!(azuma_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn sumvi_constant() {
        let p = sticky(2);
        let c = TableFunction::constant(2, 2, int(2)).unwrap();
        let r = verify_sumvi(&c, &p, &WeightVector::ones(2)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone()), (int(0), int(0)));
        assert!(r.all_hold());
    }

    #[test]
    fn sumvi_product_distance() {
        let p = Measure::uniform(3, 3).unwrap();
        let anchor = Word(vec![0, 1, 2]);
        let w = WeightVector::ones(3);
        let f = TableFunction::from_fn(3, 3, |x| crate::word_space::hamming_distance(x, &anchor, &w).unwrap()).unwrap();
        let r = verify_sumvi(&f, &p, &w).unwrap();
        assert_eq!(r.rhs, int(3));
        // Independent coordinates: each V̄ᵢ is max |[xᵢ≠aᵢ] − 2/3| = 2/3.
        assert_eq!(r.v_bar, vec![ratio(2, 3); 3]);
        assert_eq!(r.lhs, ratio(4, 3));
        assert!(r.all_hold());
    }

    #[test]
    fn sumvi_sticky_chain_sum() {
        let p = sticky(2);
        let f = TableFunction::from_fn(2, 2, |x| int(x.symbols().iter().sum::<usize>() as i64)).unwrap();
        let r = verify_sumvi(&f, &p, &WeightVector::ones(2)).unwrap();
        assert_eq!(r.rhs, ratio(106, 25));
        // E f = 1. Given X₁=0: E = 1/10, given X₁=1: E = 19/10, so V̄₁ = 9/10.
        // Given X₁=0, X₂ ∈ {0,1}: E = 0 or 1 vs 1/10, so V̄₂ = 9/10.
        assert_eq!(r.v_bar, vec![ratio(9, 10), ratio(9, 10)]);
        assert_eq!(r.lhs, ratio(81, 50));
        assert!(r.all_hold());
    }

    #[test]
    fn concentration_examples() {
        let p = Measure::uniform(2, 1).unwrap();
        let f = TableFunction::new(2, 1, vec![int(0), int(1)]).unwrap();
        let w = WeightVector::ones(1);
        let v = concentration_bound(&f, &p, &w, 2.0).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() <= 1e-12);

        let c = TableFunction::constant(2, 1, int(1)).unwrap();
        assert_eq!(concentration_bound(&c, &p, &w, 1.0).unwrap(), 0.0);
        assert!(concentration_bound(&f, &p, &w, 0.0).is_err());

        let lip = int(1);
        let b1 = concentration_bound_from_parts(&lip, &w, 1.3, 0.5).unwrap();
        let b2 = concentration_bound_from_parts(&lip, &w, 1.3, 1.0).unwrap();
        let expected = 2.0 * (b1 / 2.0).powi(4);
        assert!((b2 - expected).abs() <= 1e-12 * expected);
    }
}
