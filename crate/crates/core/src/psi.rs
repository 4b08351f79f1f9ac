//! The recursive Ψ functional and its y-section decomposition.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::word_space::{TableFunction, WeightVector};

pub use crate::rational::ramp;

fn check_arity(w: &WeightVector, kappa: &TableFunction) -> Result<()> {
    if w.len() != kappa.arity() {
        return Err(Error::LengthMismatch { expected: kappa.arity(), found: w.len() });
    }
    Ok(())
}

/// `ψ_{w,n}(κ) = w₁ Σ_x (κ(x))₊ + ψ_{w₂..n, n−1}(κ')`, with `ψ_{·,0} = 0`.
///
/// The recursion is linear, so it is unrolled: each level adds the ramped
/// mass of the current table and then projects out the leading coordinate.
pub fn psi(w: &WeightVector, kappa: &TableFunction) -> Result<Rational> {
    check_arity(w, kappa)?;
    let mut total = Rational::zero();
    let mut current = kappa.clone();
    for wi in w.entries() {
        let positive_mass = current
            .values()
            .iter()
            .map(ramp)
            .fold(Rational::zero(), |acc, v| acc + v);
        total += wi * positive_mass;
        current = current.marginal_projection()?;
    }
    Ok(total)
}

pub fn psi_norm(w: &WeightVector, kappa: &TableFunction) -> Result<Rational> {
    let plus = psi(w, kappa)?;
    let minus = psi(w, &kappa.negate())?;
    Ok(plus.max(minus))
}

/// Right-hand side of the y-section decomposition:
/// `Σ_y [ψ_{w₁..n−1}(κ_y) + w_n (Σ_x κ_y(x))₊]`.
pub fn psi_decomposition_rhs(w: &WeightVector, kappa: &TableFunction) -> Result<Rational> {
    check_arity(w, kappa)?;
    let n = kappa.arity();
    if n == 0 {
        return Err(Error::ArityZero);
    }
    let head = w.slice(0, n - 1);
    let last = &w[n - 1];
    let mut total = Rational::zero();
    for y in 0..kappa.alphabet_size() {
        let section = kappa.y_section(y)?;
        total += psi(&head, &section)?;
        total += last * ramp(&section.sum());
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn diag_kappa() -> TableFunction {
        // κ(00)=1, κ(11)=−1, else 0
        TableFunction::new(2, 2, vec![int(1), int(0), int(0), int(-1)]).unwrap()
    }

    #[test]
    fn psi_of_scalar_is_zero() {
        let w = WeightVector::new(vec![]).unwrap();
        assert_eq!(psi(&w, &TableFunction::scalar(3, int(17))).unwrap(), int(0));
    }

    #[test]
    fn psi_examples() {
        let k1 = TableFunction::new(2, 1, vec![int(1), int(-1)]).unwrap();
        assert_eq!(psi(&WeightVector::ones(1), &k1).unwrap(), int(1));
        assert_eq!(psi(&WeightVector::ones(2), &diag_kappa()).unwrap(), int(2));
        let w = WeightVector::new(vec![ratio(1, 2), int(3)]).unwrap();
        assert_eq!(psi(&w, &diag_kappa()).unwrap(), ratio(7, 2));
    }

    #[test]
    fn psi_rejects_length_mismatch() {
        assert!(matches!(
            psi(&WeightVector::ones(3), &diag_kappa()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn psi_norm_examples() {
        let w = WeightVector::ones(1);
        let zero = TableFunction::constant(2, 1, int(0)).unwrap();
        assert_eq!(psi_norm(&w, &zero).unwrap(), int(0));
        let k = TableFunction::new(2, 1, vec![int(1), int(-1)]).unwrap();
        assert_eq!(psi_norm(&w, &k).unwrap(), int(1));
        let k = TableFunction::new(2, 1, vec![int(2), int(-1)]).unwrap();
        assert_eq!(psi(&w, &k).unwrap(), int(2));
        assert_eq!(psi(&w, &k.negate()).unwrap(), int(1));
        assert_eq!(psi_norm(&w, &k).unwrap(), int(2));
    }

    #[test]
    fn decomposition_examples() {
        let w2 = WeightVector::ones(2);
        assert_eq!(psi_decomposition_rhs(&w2, &diag_kappa()).unwrap(), int(2));
        let k1 = TableFunction::new(2, 1, vec![int(1), int(-1)]).unwrap();
        assert_eq!(psi_decomposition_rhs(&WeightVector::ones(1), &k1).unwrap(), int(1));
        let zero = TableFunction::constant(3, 2, int(0)).unwrap();
        assert_eq!(psi_decomposition_rhs(&w2, &zero).unwrap(), int(0));
        assert_eq!(
            psi_decomposition_rhs(&WeightVector::new(vec![]).unwrap(), &TableFunction::scalar(2, int(1))),
            Err(Error::ArityZero)
        );
    }
}
