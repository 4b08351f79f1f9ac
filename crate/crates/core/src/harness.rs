//! Random instance generators and the exact-verification self-test.
//!
//! Every check here compares exact rationals. Generators are driven by a
//! seeded ChaCha8 stream so a `(seed, count)` pair always reproduces the same
//! instance family.

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{build_polytope_lp, build_polytope_lp_all_pairs, lipschitz_constant, solve_lp};
use crate::martingale::{v_bar, v_i, verify_sumvi};
use crate::mixing::Measure;
use crate::psi::{psi, psi_decomposition_rhs, psi_norm, ramp};
use crate::rational::{self, Rational};
use crate::word_space::{words, TableFunction, WeightVector, Word};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const MAX_DENOMINATOR: i64 = 6;

/// Uniform over rationals `p/q` in `[lo, hi]` with `1 ≤ q ≤ 6`.
pub fn random_rational(rng: &mut impl Rng, lo: i64, hi: i64) -> Rational {
    let q = rng.gen_range(1..=MAX_DENOMINATOR);
    rational::ratio(rng.gen_range(lo * q..=hi * q), q)
}

pub fn random_table(rng: &mut impl Rng, m: usize, n: usize) -> TableFunction {
    TableFunction::from_fn(m, n, |_| random_rational(rng, -3, 3)).expect("small table")
}

/// Weights in `(0, 2]`.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> WeightVector {
    let entries = (0..n)
        .map(|_| {
            let q = rng.gen_range(1..=MAX_DENOMINATOR);
            rational::ratio(rng.gen_range(1..=2 * q), q)
        })
        .collect();
    WeightVector::new(entries).expect("positive by construction")
}

pub fn random_shift(rng: &mut impl Rng) -> Rational {
    [rational::int(0), rational::ratio(1, 2), rational::int(1)]
        .choose(rng)
        .cloned()
        .unwrap()
}

/// A dense measure with integer weights in `0..=9` (roughly one in six
/// entries forced to zero), normalized exactly.
pub fn random_measure(rng: &mut impl Rng, m: usize, n: usize) -> Measure {
    loop {
        let weights: Vec<i64> = (0..m.pow(n as u32))
            .map(|_| if rng.gen_ratio(1, 6) { 0 } else { rng.gen_range(1..=9) })
            .collect();
        let total: i64 = weights.iter().sum();
        if total > 0 {
            let probs = weights.iter().map(|&k| rational::ratio(k, total)).collect();
            return Measure::new(m, n, probs).expect("normalized");
        }
    }
}

/// Rescales and shifts a nonconstant `f` into `Φ_{w,n}`: `(f − min f)/‖f‖_Lip`.
pub fn normalize_into_polytope(f: &TableFunction, w: &WeightVector) -> Result<Option<TableFunction>> {
    let lipschitz = lipschitz_constant(f, w)?;
    if lipschitz.is_zero() {
        return Ok(None);
    }
    let min = f.values().iter().min().cloned().unwrap_or_default();
    Ok(Some(f.map(|v| (v - &min) / &lipschitz)))
}

fn random_shape(rng: &mut impl Rng) -> (usize, usize) {
    (rng.gen_range(2..=3), rng.gen_range(1..=3))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpSection {
    pub instances: usize,
    pub n1_instances: usize,
    pub solves: usize,
    pub certificate_failures: usize,
    /// `sup_{Φ^{+v}} ⟨κ,φ⟩ > ψ(κ) + v(Σκ)₊`
    pub shifted_violations: usize,
    /// `‖κ‖_Φ > ‖κ‖_Ψ`
    pub norm_violations: usize,
    /// `n = 1` instances with `‖κ‖_Φ ≠ ‖κ‖_Ψ`.
    pub n1_tightness_violations: usize,
    /// Smallest and largest `‖κ‖_Ψ − ‖κ‖_Φ` seen for `n ≥ 2`.
    #[serde(serialize_with = "opt_rational")]
    pub min_gap: Option<Rational>,
    #[serde(serialize_with = "opt_rational")]
    pub max_gap: Option<Rational>,
}

impl LpSection {
    pub fn passed(&self) -> bool {
        self.certificate_failures == 0
            && self.shifted_violations == 0
            && self.norm_violations == 0
            && self.n1_tightness_violations == 0
    }
}

fn opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&rational::to_string(r)),
        None => s.serialize_none(),
    }
}

/// Signed LP optimum; certificate failures are counted instead of aborting.
fn certified_sup(
    kappa: &TableFunction,
    w: &WeightVector,
    v: &Rational,
    section: &mut LpSection,
) -> Result<Option<Rational>> {
    section.solves += 1;
    match solve_lp(&build_polytope_lp(kappa, w, v)?) {
        Ok(cert) => Ok(Some(cert.objective_value)),
        Err(Error::CertificateFailure(_)) => {
            section.certificate_failures += 1;
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// The shifted LP inequality for a random `v`, plus the norm inequality
/// (and `n = 1` tightness) on every instance.
pub fn check_lp_inequalities(rng: &mut impl Rng, instances: usize) -> Result<LpSection> {
    let mut section = LpSection {
        instances,
        n1_instances: 0,
        solves: 0,
        certificate_failures: 0,
        shifted_violations: 0,
        norm_violations: 0,
        n1_tightness_violations: 0,
        min_gap: None,
        max_gap: None,
    };
    let zero = Rational::zero();
    for _ in 0..instances {
        let (m, n) = random_shape(rng);
        let kappa = random_table(rng, m, n);
        let w = random_weights(rng, n);
        let v = random_shift(rng);

        let plus = certified_sup(&kappa, &w, &zero, &mut section)?;
        let minus = certified_sup(&kappa.negate(), &w, &zero, &mut section)?;
        let shifted = if v.is_zero() {
            plus.clone()
        } else {
            certified_sup(&kappa, &w, &v, &mut section)?
        };

        if let Some(lhs) = shifted {
            if lhs > psi(&w, &kappa)? + &v * ramp(&kappa.sum()) {
                section.shifted_violations += 1;
            }
        }
        if let (Some(plus), Some(minus)) = (plus, minus) {
            let phi = plus.max(minus);
            let psi = psi_norm(&w, &kappa)?;
            if phi > psi {
                section.norm_violations += 1;
            }
            if n == 1 {
                section.n1_instances += 1;
                if phi != psi {
                    section.n1_tightness_violations += 1;
                }
            } else {
                let gap = psi - phi;
                section.min_gap = Some(section.min_gap.take().map_or(gap.clone(), |g| g.min(gap.clone())));
                section.max_gap = Some(section.max_gap.take().map_or(gap.clone(), |g| g.max(gap)));
            }
        }
    }
    Ok(section)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountSection {
    pub instances: usize,
    pub violations: usize,
}

impl CountSection {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `ψ(κ)` against its y-section decomposition. The first instances are
/// forced to `n = 1`.
pub fn check_decomposition(rng: &mut impl Rng, instances: usize) -> Result<CountSection> {
    let mut violations = 0;
    for k in 0..instances {
        let (m, mut n) = random_shape(rng);
        if k < instances / 5 {
            n = 1;
        }
        let kappa = random_table(rng, m, n);
        let w = random_weights(rng, n);
        if psi(&w, &kappa)? != psi_decomposition_rhs(&w, &kappa)? {
            violations += 1;
        }
    }
    Ok(CountSection { instances, violations })
}

/// `(κ')_y = (κ_y)'` on arity-3 tables, for every `y`.
pub fn check_commutation(rng: &mut impl Rng, instances: usize) -> Result<CountSection> {
    let mut violations = 0;
    for _ in 0..instances {
        let m = rng.gen_range(2..=3);
        let kappa = random_table(rng, m, 3);
        let projected = kappa.marginal_projection()?;
        for y in 0..m {
            if projected.y_section(y)? != kappa.y_section(y)?.marginal_projection()? {
                violations += 1;
                break;
            }
        }
    }
    Ok(CountSection { instances, violations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCheckSection {
    pub instances: usize,
    pub mismatches: usize,
    pub certificate_failures: usize,
}

impl CrossCheckSection {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.certificate_failures == 0
    }
}

/// Edge-only constraints against all-pairs constraints, `m = n = 2`.
pub fn check_edge_sufficiency(rng: &mut impl Rng, instances: usize) -> Result<CrossCheckSection> {
    let mut section = CrossCheckSection { instances, mismatches: 0, certificate_failures: 0 };
    for _ in 0..instances {
        let kappa = random_table(rng, 2, 2);
        let w = random_weights(rng, 2);
        let v = random_shift(rng);
        let edge = solve_lp(&build_polytope_lp(&kappa, &w, &v)?);
        let full = solve_lp(&build_polytope_lp_all_pairs(&kappa, &w, &v)?);
        match (edge, full) {
            (Ok(a), Ok(b)) => {
                if a.objective_value != b.objective_value {
                    section.mismatches += 1;
                }
            }
            _ => section.certificate_failures += 1,
        }
    }
    Ok(section)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MartingaleSection {
    pub instances: usize,
    pub bound_violations: usize,
    pub per_coordinate_violations: usize,
    pub mean_zero_violations: usize,
    pub translation_violations: usize,
    pub homogeneity_violations: usize,
}

impl MartingaleSection {
    pub fn passed(&self) -> bool {
        self.bound_violations == 0
            && self.per_coordinate_violations == 0
            && self.mean_zero_violations == 0
            && self.translation_violations == 0
            && self.homogeneity_violations == 0
    }
}

fn positive_prefixes(p: &Measure, len: usize) -> Result<Vec<(Word, Rational)>> {
    let mut out = Vec::new();
    for y in words(p.alphabet_size(), len) {
        let mass = p.prefix_probability(&y)?;
        if mass.is_positive() {
            out.push((y, mass));
        }
    }
    Ok(out)
}

/// Martingale-difference structure of a single instance:
/// `(mean-zero ok, translation ok, homogeneity ok)`.
pub fn martingale_structure(
    f: &TableFunction,
    p: &Measure,
    shift: &Rational,
    scale: &Rational,
) -> Result<(bool, bool, bool)> {
    let n = p.arity();
    let shifted = f.shift(shift);
    let mut mean_zero = true;
    let mut translation = true;
    for i in 1..=n {
        for (prefix, mass) in positive_prefixes(p, i - 1)? {
            let mut weighted = Rational::zero();
            for s in 0..p.alphabet_size() {
                let y = prefix.push(s);
                let child = p.prefix_probability(&y)?;
                if child.is_zero() {
                    continue;
                }
                let diff = v_i(f, p, &y)?;
                if diff != v_i(&shifted, p, &y)? {
                    translation = false;
                }
                weighted += child / &mass * diff;
            }
            if !weighted.is_zero() {
                mean_zero = false;
            }
        }
    }
    let scaled = f.scale(scale);
    let mut homogeneity = true;
    for i in 1..=n {
        if v_bar(&scaled, p, i)? != scale.abs() * v_bar(f, p, i)? {
            homogeneity = false;
        }
    }
    Ok((mean_zero, translation, homogeneity))
}

/// Mixing-matrix bound on `Σ V̄ᵢ²` and its per-coordinate form, plus
/// martingale structure, on dense random measures.
pub fn check_martingale(rng: &mut impl Rng, instances: usize) -> Result<MartingaleSection> {
    let mut section = MartingaleSection {
        instances,
        bound_violations: 0,
        per_coordinate_violations: 0,
        mean_zero_violations: 0,
        translation_violations: 0,
        homogeneity_violations: 0,
    };
    for k in 0..instances {
        let (m, n) = random_shape(rng);
        let p = random_measure(rng, m, n);
        let raw = random_table(rng, m, n);
        let w = random_weights(rng, n);
        // Every other instance is normalized into Φ_{w,n}.
        let f = if k % 2 == 1 {
            normalize_into_polytope(&raw, &w)?.unwrap_or(raw)
        } else {
            raw
        };

        let report = verify_sumvi(&f, &p, &w)?;
        if !report.holds {
            section.bound_violations += 1;
        }
        if report.per_i_holds.iter().any(|h| !h) {
            section.per_coordinate_violations += 1;
        }

        let shift = random_rational(rng, -3, 3);
        let mut scale = random_rational(rng, -3, 3);
        if scale.is_zero() {
            scale = -Rational::one();
        }
        let (mean_zero, translation, homogeneity) = martingale_structure(&f, &p, &shift, &scale)?;
        section.mean_zero_violations += usize::from(!mean_zero);
        section.translation_violations += usize::from(!translation);
        section.homogeneity_violations += usize::from(!homogeneity);
    }
    Ok(section)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub instances: usize,
    pub lp: LpSection,
    pub decomposition: CountSection,
    pub commutation: CountSection,
    pub edge_sufficiency: CrossCheckSection,
    pub martingale: MartingaleSection,
    pub passed: bool,
}

/// Runs every randomized check with `instances` cases each (a tenth of that,
/// at least one, for the all-pairs cross-check).
pub fn run_selftest(instances: usize, seed: u64) -> Result<SelftestReport> {
    let mut rng = rng(seed);
    let lp = check_lp_inequalities(&mut rng, instances)?;
    let decomposition = check_decomposition(&mut rng, instances)?;
    let commutation = check_commutation(&mut rng, instances)?;
    let edge_sufficiency = check_edge_sufficiency(&mut rng, (instances / 10).max(1))?;
    let martingale = check_martingale(&mut rng, instances)?;
    let passed = lp.passed()
        && decomposition.passed()
        && commutation.passed()
        && edge_sufficiency.passed()
        && martingale.passed();
    Ok(SelftestReport {
        seed,
        instances,
        lp,
        decomposition,
        commutation,
        edge_sufficiency,
        martingale,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_respect_ranges() {
        let mut r = rng(1);
        for _ in 0..200 {
            let q = random_rational(&mut r, -3, 3);
            assert!(q >= rational::int(-3) && q <= rational::int(3));
            let w = random_weights(&mut r, 3);
            assert!(w.entries().iter().all(|x| x.is_positive() && *x <= rational::int(2)));
            let p = random_measure(&mut r, 2, 2);
            assert_eq!(rational::sum(p.probabilities()), Rational::one());
        }
    }

    #[test]
    fn normalized_functions_land_in_polytope() {
        let mut r = rng(2);
        for _ in 0..50 {
            let f = random_table(&mut r, 3, 2);
            let w = random_weights(&mut r, 2);
            if let Some(g) = normalize_into_polytope(&f, &w).unwrap() {
                assert_eq!(lipschitz_constant(&g, &w).unwrap(), Rational::one());
                assert!(g.values().iter().all(|v| !v.is_negative() && *v <= w.total()));
            }
        }
    }

    #[test]
    fn small_selftest_passes_and_is_reproducible() {
        let a = run_selftest(12, 7).unwrap();
        assert!(a.passed, "{a:?}");
        assert_eq!(a, run_selftest(12, 7).unwrap());
    }
}
