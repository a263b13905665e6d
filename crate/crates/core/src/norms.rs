//! Schatten norms, the `op(ℓ∞,ℓ∞)` norm and `L^p` norms over the group.

use nalgebra::DMatrix;

use crate::group::QuadratureRule;
use crate::sum::pairwise;
use crate::{Error, Result, C64};

const SVD_MAX_ITER: usize = 10_000;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return Ok(vec![m.norm()]);
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric(format!("SVD did not converge on a {}×{} matrix", m.nrows(), m.ncols())))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `Σ s_i^r`; zero singular values contribute nothing.
pub fn schatten_power_of(singular: &[f64], r: f64) -> f64 {
    let v: Vec<f64> = singular.iter().filter(|&&s| s > 0.0).map(|s| s.powf(r)).collect();
    pairwise(&v)
}

/// `‖M‖^r_{S_r} = Σ s_i^r`.
pub fn schatten_power(m: &DMatrix<C64>, r: f64) -> Result<f64> {
    check_order(r)?;
    Ok(schatten_power_of(&singular_values(m)?, r))
}

/// `‖M‖_{S_r} = (Σ s_i^r)^{1/r}`.
pub fn schatten_norm(m: &DMatrix<C64>, r: f64) -> Result<f64> {
    Ok(schatten_power(m, r)?.powf(1.0 / r))
}

fn check_order(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("Schatten order must be positive and finite, got {r}")))
    }
}

/// `op(ℓ∞,ℓ∞)` norm: the largest absolute row sum.
pub fn opinf_norm(m: &DMatrix<C64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `op(ℓ∞,ℓ∞)` norm of the transpose: the largest absolute column sum.
pub fn opinf_norm_transpose(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(Σ w_i v_i^p)^{1/p}` for nonnegative node values; `p = ∞` takes the
/// node maximum, which only approximates the essential supremum.
pub fn lp_norm_x(values: &[f64], p: f64, rule: &QuadratureRule) -> Result<f64> {
    if values.len() != rule.len() {
        return Err(Error::domain(format!("{} values for {} nodes", values.len(), rule.len())));
    }
    if !(p >= 1.0) {
        return Err(Error::domain(format!("L^p order must be ≥ 1, got {p}")));
    }
    if let Some(node) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite { node });
    }
    if p.is_infinite() {
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    let terms: Vec<f64> = values
        .iter()
        .zip(rule.weights())
        .map(|(v, w)| if *v == 0.0 { 0.0 } else { w * v.powf(p) })
        .collect();
    Ok(pairwise(&terms).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupId, Irrep, Level};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn worked_values() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(4.0)]));
        assert!((schatten_norm(&d, 1.0).unwrap() - 7.0).abs() < 1e-12);
        let id = DMatrix::<C64>::identity(2, 2);
        assert!((schatten_norm(&id, 0.5).unwrap() - 4.0).abs() < 1e-12);
        let sub = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0), c(-2.0), c(-1.0)]));
        assert!((schatten_norm(&sub, 1.0).unwrap() - 4.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(-2.0), c(3.0), c(4.0)]);
        assert_eq!(opinf_norm(&m), 7.0);
        assert_eq!(opinf_norm_transpose(&m), 6.0);
        assert_eq!(opinf_norm(&DMatrix::<C64>::identity(4, 4)), 1.0);
        assert!(schatten_norm(&m, 0.0).is_err());
    }

    #[test]
    fn coefficient_norms_on_su2() {
        let rule = QuadratureRule::new(GroupId::SU2, Level::integer(6));
        for twice in [2u32, 5] {
            let ir = Irrep::spin(GroupId::SU2, Level::from_twice(twice)).unwrap();
            let d = ir.dim as f64;
            let tab = rule.rep_values(&ir).unwrap();
            for (i, j) in [(0, 0), (1, 2)] {
                let vals: Vec<f64> = tab.iter().map(|m| m[(i, j)].norm()).collect();
                let l2 = lp_norm_x(&vals, 2.0, &rule).unwrap();
                assert!((l2 - d.powf(-0.5)).abs() < 1e-12);
                for q in [3.0, 4.0, f64::INFINITY] {
                    let lq = lp_norm_x(&vals, q, &rule).unwrap();
                    assert!(lq <= d.powf(-1.0 / q) + 1e-10, "q={q}");
                }
            }
        }
    }

    #[test]
    fn constant_has_norm_constant() {
        let rule = QuadratureRule::new(GroupId::Torus(2), Level::integer(2));
        let v = vec![2.5; rule.len()];
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm_x(&v, p, &rule).unwrap() - 2.5).abs() < 1e-13);
        }
    }

    fn matrix(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
        proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n * n)
            .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn schatten_two_is_frobenius(m in matrix(4)) {
            let s2 = schatten_norm(&m, 2.0).unwrap();
            prop_assert!((s2 - m.norm()).abs() < 1e-12 * (1.0 + m.norm()));
        }

        #[test]
        fn unitary_invariance(m in matrix(3), a in matrix(3), b in matrix(3)) {
            let u = a.qr().q();
            let v = b.qr().q();
            for r in [0.5, 1.0, 2.0] {
                let lhs = schatten_norm(&(&u * &m * &v), r).unwrap();
                let rhs = schatten_norm(&m, r).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs));
            }
        }
    }
}
