//! Exact linear programming over the polytope `Φ^{+v}_{w,n}` of 1-Lipschitz
//! functions (w.r.t. `d_w`) with values in `[0, v + Σwᵢ]`.
//!
//! Since `d_w` is the shortest-path metric of the graph whose edges change a
//! single coordinate `i` at cost `wᵢ`, the Lipschitz condition only needs to
//! be imposed on those edges. The LP is solved by a dense-tableau primal
//! simplex over `BigRational` with Bland's rule; every solution is returned
//! together with a dual vector and re-checked against the original
//! constraints before it is handed out.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::psi;
use crate::rational::{self, ramp, Rational};
use crate::word_space::{hamming_distance, hamming_edges, unindex, TableFunction, WeightVector};

/// `φ(plus) − φ(minus) ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceConstraint {
    pub plus: usize,
    pub minus: usize,
    pub rhs: Rational,
}

/// `maximize ⟨objective, φ⟩` subject to `0 ≤ φ ≤ upper_bound` and the
/// difference constraints. Row order for duals: the `num_vars` box rows
/// first, then `differences` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub objective: Vec<Rational>,
    pub upper_bound: Rational,
    pub differences: Vec<DifferenceConstraint>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.num_vars() + self.differences.len()
    }

    fn rhs(&self, row: usize) -> &Rational {
        if row < self.num_vars() {
            &self.upper_bound
        } else {
            &self.differences[row - self.num_vars()].rhs
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpCertificate {
    #[serde(with = "rational::vec_as_strings")]
    pub primal: Vec<Rational>,
    #[serde(with = "rational::vec_as_strings")]
    pub dual: Vec<Rational>,
    #[serde(with = "rational::as_string")]
    pub objective_value: Rational,
    pub pivots: usize,
}

impl LpCertificate {
    /// Checks primal feasibility, dual feasibility and equality of the two
    /// objectives directly against `problem`, independent of the tableau.
    pub fn verify(&self, problem: &LpProblem) -> Result<()> {
        let fail = |msg: String| Err(Error::CertificateFailure(msg));
        let n = problem.num_vars();
        if self.primal.len() != n || self.dual.len() != problem.num_constraints() {
            return fail("certificate dimensions do not match problem".into());
        }
        for (k, x) in self.primal.iter().enumerate() {
            if x.is_negative() || x > &problem.upper_bound {
                return fail(format!("primal variable {k} violates its box"));
            }
        }
        for (d, c) in problem.differences.iter().enumerate() {
            if &self.primal[c.plus] - &self.primal[c.minus] > c.rhs {
                return fail(format!("primal violates difference constraint {d}"));
            }
        }
        if let Some(row) = self.dual.iter().position(|y| y.is_negative()) {
            return fail(format!("dual multiplier {row} is negative"));
        }
        // Aᵀy ≥ c
        let mut reduced: Vec<Rational> = self.dual[..n].to_vec();
        for (c, y) in problem.differences.iter().zip(&self.dual[n..]) {
            reduced[c.plus] += y;
            reduced[c.minus] -= y;
        }
        for (k, (lhs, c)) in reduced.iter().zip(&problem.objective).enumerate() {
            if lhs < c {
                return fail(format!("dual constraint for variable {k} violated"));
            }
        }
        let primal_obj = rational::sum(
            &self
                .primal
                .iter()
                .zip(&problem.objective)
                .map(|(x, c)| x * c)
                .collect::<Vec<_>>(),
        );
        let dual_obj = self
            .dual
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (row, y)| acc + y * problem.rhs(row));
        if primal_obj != dual_obj {
            return fail(format!(
                "duality gap: primal {} vs dual {}",
                rational::to_string(&primal_obj),
                rational::to_string(&dual_obj)
            ));
        }
        if primal_obj != self.objective_value {
            return fail("reported objective differs from primal objective".into());
        }
        Ok(())
    }
}

fn check_inputs(kappa: &TableFunction, w: &WeightVector, v: &Rational) -> Result<()> {
    if w.len() != kappa.arity() {
        return Err(Error::LengthMismatch { expected: kappa.arity(), found: w.len() });
    }
    if v.is_negative() {
        return Err(Error::NegativeShift);
    }
    Ok(())
}

/// LP whose feasible set is `Φ^{+v}_{w,n}`, with Lipschitz constraints on
/// single-coordinate edges only.
pub fn build_polytope_lp(kappa: &TableFunction, w: &WeightVector, v: &Rational) -> Result<LpProblem> {
    check_inputs(kappa, w, v)?;
    let differences = hamming_edges(kappa.alphabet_size(), kappa.arity())
        .map(|(x, y, coord)| DifferenceConstraint { plus: x, minus: y, rhs: w[coord].clone() })
        .collect();
    Ok(LpProblem {
        objective: kappa.values().to_vec(),
        upper_bound: v + w.total(),
        differences,
    })
}

/// Same feasible set, but with `φ(x) − φ(y) ≤ d_w(x, y)` for every ordered
/// pair `x ≠ y`. Quadratic in the table size; meant for cross-checking.
pub fn build_polytope_lp_all_pairs(
    kappa: &TableFunction,
    w: &WeightVector,
    v: &Rational,
) -> Result<LpProblem> {
    check_inputs(kappa, w, v)?;
    let (m, n) = (kappa.alphabet_size(), kappa.arity());
    let len = kappa.len();
    let mut differences = Vec::with_capacity(len * len.saturating_sub(1));
    for x in 0..len {
        for y in 0..len {
            if x != y {
                let rhs = hamming_distance(&unindex(x, m, n), &unindex(y, m, n), w)?;
                differences.push(DifferenceConstraint { plus: x, minus: y, rhs });
            }
        }
    }
    Ok(LpProblem {
        objective: kappa.values().to_vec(),
        upper_bound: v + w.total(),
        differences,
    })
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// `z_j − c_j` per column, objective value in the last slot.
    z: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn new(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let r = problem.num_constraints();
        let cols = n + r;
        let mut rows = Vec::with_capacity(r);
        for row in 0..r {
            let mut line = vec![Rational::zero(); cols + 1];
            if row < n {
                line[row] = rational::int(1);
            } else {
                let c = &problem.differences[row - n];
                line[c.plus] += rational::int(1);
                line[c.minus] -= rational::int(1);
            }
            line[n + row] = rational::int(1);
            line[cols] = problem.rhs(row).clone();
            rows.push(line);
        }
        let mut z = vec![Rational::zero(); cols + 1];
        for (j, c) in problem.objective.iter().enumerate() {
            z[j] = -c;
        }
        Tableau {
            rows,
            z,
            basis: (n..n + r).collect(),
            cols,
        }
    }

    /// Bland: lowest-index improving column.
    fn entering(&self) -> Option<usize> {
        (0..self.cols).find(|&j| self.z[j].is_negative())
    }

    /// Minimum ratio, ties broken by lowest basic variable index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[col];
            if !a.is_positive() {
                continue;
            }
            let ratio = &row[self.cols] / a;
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let pivot = self.rows[prow][pcol].clone();
        for v in self.rows[prow].iter_mut() {
            if !v.is_zero() {
                *v /= &pivot;
            }
        }
        let support: Vec<(usize, Rational)> = self.rows[prow]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, v)| (j, v.clone()))
            .collect();
        let eliminate = |line: &mut Vec<Rational>| {
            let factor = line[pcol].clone();
            if factor.is_zero() {
                return;
            }
            for (j, v) in &support {
                line[*j] -= &factor * v;
            }
        };
        for (i, line) in self.rows.iter_mut().enumerate() {
            if i != prow {
                eliminate(line);
            }
        }
        eliminate(&mut self.z);
        self.basis[prow] = pcol;
    }
}

/// Solves `problem` to optimality and returns a checked certificate.
///
/// The origin is always feasible (every right-hand side is nonnegative), so
/// no phase one is needed, and the box rows keep the problem bounded.
pub fn solve_lp(problem: &LpProblem) -> Result<LpCertificate> {
    if problem.upper_bound.is_negative() || problem.differences.iter().any(|c| c.rhs.is_negative()) {
        return Err(Error::CertificateFailure("origin is not feasible".into()));
    }
    let n = problem.num_vars();
    let mut tableau = Tableau::new(problem);
    let mut pivots = 0;
    while let Some(col) = tableau.entering() {
        let row = tableau
            .leaving(col)
            .ok_or_else(|| Error::CertificateFailure("LP reported unbounded".into()))?;
        tableau.pivot(row, col);
        pivots += 1;
    }

    let mut primal = vec![Rational::zero(); n];
    for (row, &var) in tableau.basis.iter().enumerate() {
        if var < n {
            primal[var] = tableau.rows[row][tableau.cols].clone();
        }
    }
    let certificate = LpCertificate {
        primal,
        dual: tableau.z[n..tableau.cols].to_vec(),
        objective_value: tableau.z[tableau.cols].clone(),
        pivots,
    };
    certificate.verify(problem)?;
    Ok(certificate)
}

/// `sup_{φ ∈ Φ^{+v}_{w,n}} ⟨κ, φ⟩` with its certificate.
pub fn phi_sup_certified(
    kappa: &TableFunction,
    w: &WeightVector,
    v: &Rational,
) -> Result<LpCertificate> {
    solve_lp(&build_polytope_lp(kappa, w, v)?)
}

pub fn phi_sup(kappa: &TableFunction, w: &WeightVector, v: &Rational) -> Result<Rational> {
    Ok(phi_sup_certified(kappa, w, v)?.objective_value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhiNorm {
    #[serde(with = "rational::as_string")]
    pub value: Rational,
    /// Certificate for `sup ⟨κ, φ⟩`.
    pub positive: LpCertificate,
    /// Certificate for `sup ⟨−κ, φ⟩`.
    pub negative: LpCertificate,
}

pub fn phi_norm_certified(kappa: &TableFunction, w: &WeightVector) -> Result<PhiNorm> {
    let zero = Rational::zero();
    let positive = phi_sup_certified(kappa, w, &zero)?;
    let negative = phi_sup_certified(&kappa.negate(), w, &zero)?;
    let value = positive.objective_value.clone().max(negative.objective_value.clone());
    Ok(PhiNorm { value, positive, negative })
}

/// `sup_{φ ∈ Φ_{w,n}} |⟨κ, φ⟩|`, as the larger of the two signed LPs.
pub fn phi_norm(kappa: &TableFunction, w: &WeightVector) -> Result<Rational> {
    Ok(phi_norm_certified(kappa, w)?.value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormComparison {
    #[serde(with = "rational::as_string")]
    pub phi_norm: Rational,
    #[serde(with = "rational::as_string")]
    pub psi_norm: Rational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhiPsiReport {
    #[serde(with = "rational::as_string")]
    pub lhs: Rational,
    #[serde(with = "rational::as_string")]
    pub rhs: Rational,
    pub holds: bool,
    /// Present when `v = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norms: Option<NormComparison>,
}

impl PhiPsiReport {
    pub fn all_hold(&self) -> bool {
        self.holds && self.norms.as_ref().is_none_or(|n| n.holds)
    }
}

/// Evaluates both sides of `sup_{Φ^{+v}} ⟨κ,φ⟩ ≤ ψ(κ) + v (Σκ)₊` and, for
/// `v = 0`, of `‖κ‖_Φ ≤ ‖κ‖_Ψ`.
pub fn verify_phi_psi(kappa: &TableFunction, w: &WeightVector, v: &Rational) -> Result<PhiPsiReport> {
    let lhs = phi_sup(kappa, w, v)?;
    let rhs = psi::psi(w, kappa)? + v * ramp(&kappa.sum());
    let norms = if v.is_zero() {
        let phi = phi_norm(kappa, w)?;
        let psi = psi::psi_norm(w, kappa)?;
        Some(NormComparison { holds: phi <= psi, phi_norm: phi, psi_norm: psi })
    } else {
        None
    };
    Ok(PhiPsiReport { holds: lhs <= rhs, lhs, rhs, norms })
}

/// Smallest `c` with `|f(x) − f(y)| ≤ c·d_w(x, y)`, scanned over
/// single-coordinate edges.
pub fn lipschitz_constant(f: &TableFunction, w: &WeightVector) -> Result<Rational> {
    if w.len() != f.arity() {
        return Err(Error::LengthMismatch { expected: f.arity(), found: w.len() });
    }
    let values = f.values();
    Ok(hamming_edges(f.alphabet_size(), f.arity())
        .filter(|(x, y, _)| x < y)
        .map(|(x, y, coord)| (&values[x] - &values[y]).abs() / &w[coord])
        .fold(Rational::zero(), |acc, r| acc.max(r)))
}
