use std::f64::consts::PI;

use super::{GroupId, Irrep, Level};
use crate::{Error, Result};

/// Relative slack when comparing `⟨ξ⟩` against a cutoff.
const CUTOFF_SLACK: f64 = 1e-12;

/// All irreps with `⟨ξ⟩ ≤ cutoff`, sorted by `(λ², label)`.
pub fn enumerate_dual(group: GroupId, cutoff: f64) -> Result<Vec<Irrep>> {
    if !(cutoff >= 1.0) || !cutoff.is_finite() {
        return Err(Error::domain(format!("cutoff must be a finite value ≥ 1, got {cutoff}")));
    }
    let bound = cutoff * (1.0 + CUTOFF_SLACK);
    let lambda_sq_max = bound * bound - 1.0;
    let mut out = match group {
        GroupId::Torus(n) => {
            let kmax = (lambda_sq_max.max(0.0) / (4.0 * PI * PI)).sqrt().floor() as i64;
            let mut v = Vec::new();
            for_each_in_cube(n as usize, kmax, |k| {
                let ir = Irrep::torus(k.to_vec());
                if ir.weight <= bound {
                    v.push(ir);
                }
            });
            v
        }
        GroupId::SU2 | GroupId::SO3 => {
            // ℓ(ℓ+1) ≤ λ²_max
            let lmax = 0.5 * ((1.0 + 4.0 * lambda_sq_max.max(0.0)).sqrt() - 1.0);
            let step = if group == GroupId::SU2 { 1 } else { 2 };
            let top = (2.0 * lmax).floor() as u32 + 1;
            (0..=top)
                .step_by(step)
                .map(|tw| Irrep::spin(group, Level::from_twice(tw)).expect("valid spin"))
                .filter(|ir| ir.weight <= bound)
                .collect()
        }
    };
    out.sort_by(|a, b| a.dual_order(b));
    Ok(out)
}

/// All irreps whose matrix coefficients have band-limit level ≤ `level`
/// (`max |k_i| ≤ level` on the torus, `ℓ ≤ level` otherwise), in dual order.
pub fn duals_up_to_level(group: GroupId, level: Level) -> Vec<Irrep> {
    let mut out = match group {
        GroupId::Torus(n) => {
            let kmax = (level.twice() / 2) as i64;
            let mut v = Vec::new();
            for_each_in_cube(n as usize, kmax, |k| v.push(Irrep::torus(k.to_vec())));
            v
        }
        GroupId::SU2 | GroupId::SO3 => {
            let step = if group == GroupId::SU2 { 1 } else { 2 };
            (0..=level.twice())
                .step_by(step)
                .map(|tw| Irrep::spin(group, Level::from_twice(tw)).expect("valid spin"))
                .collect()
        }
    };
    out.sort_by(|a, b| a.dual_order(b));
    out
}

fn for_each_in_cube(n: usize, kmax: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![-kmax; n];
    loop {
        f(&k);
        let mut axis = n;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if k[axis] < kmax {
                k[axis] += 1;
                break;
            }
            k[axis] = -kmax;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::IrrepLabel;

    fn labels(v: &[Irrep]) -> Vec<String> {
        v.iter().map(|i| i.label.to_string()).collect()
    }

    #[test]
    fn torus_cutoff() {
        let d = enumerate_dual(GroupId::Torus(1), 14.0).unwrap();
        assert_eq!(labels(&d), ["(0)", "(-1)", "(1)", "(-2)", "(2)"]);
        assert!(d.iter().all(|i| i.dim == 1));
    }

    #[test]
    fn spin_cutoffs() {
        let su2 = enumerate_dual(GroupId::SU2, 2.2).unwrap();
        assert_eq!(su2.iter().map(|i| i.dim).collect::<Vec<_>>(), [1, 2, 3, 4]);
        let so3 = enumerate_dual(GroupId::SO3, 2.7).unwrap();
        assert_eq!(so3.iter().map(|i| i.dim).collect::<Vec<_>>(), [1, 3, 5]);
    }

    #[test]
    fn cutoff_below_one_is_rejected() {
        assert!(enumerate_dual(GroupId::SU2, 0.5).is_err());
        assert!(enumerate_dual(GroupId::SU2, f64::NAN).is_err());
        assert_eq!(enumerate_dual(GroupId::SU2, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn torus_two_is_sorted_by_norm() {
        let d = enumerate_dual(GroupId::Torus(2), 10.0).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d[0].label, IrrepLabel::Torus(vec![0, 0]));
        for w in d.windows(2) {
            assert!(w[0].lambda_sq <= w[1].lambda_sq);
        }
    }

    #[test]
    fn level_enumeration() {
        assert_eq!(duals_up_to_level(GroupId::Torus(2), Level::integer(1)).len(), 9);
        assert_eq!(duals_up_to_level(GroupId::SU2, Level::integer(2)).len(), 5);
        assert_eq!(duals_up_to_level(GroupId::SO3, Level::integer(2)).len(), 3);
    }
}
