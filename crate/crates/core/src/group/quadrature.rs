use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{rep_eval, torus_character, wigner, GroupId, GroupPoint, Irrep, IrrepLabel, Level};
use crate::sum::pairwise_c;
use crate::{Error, Result, C64};

#[derive(Clone, Debug)]
enum Layout {
    /// Uniform points on each axis; first axis slowest.
    Torus,
    /// Node index `(ia * nb + ib) * ng + ig`.
    Euler {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
    },
}

/// Product Haar quadrature.
///
/// A rule at level `L` integrates every product `ξ_ij · conj(ξ'_kl)` with
/// both levels at most `L` exactly, and more generally any band-limited
/// integrand whose band-limit does not exceed `2L`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    group: GroupId,
    level: Level,
    nodes: Vec<GroupPoint>,
    weights: Vec<f64>,
    layout: Layout,
}

impl QuadratureRule {
    pub fn new(group: GroupId, level: Level) -> Self {
        match group {
            GroupId::Torus(n) => {
                let level = level.ceil();
                let per_axis = level.twice() as usize + 2;
                let dim = n as usize;
                let total = per_axis.pow(n);
                let nodes = (0..total)
                    .map(|mut idx| {
                        let mut c = vec![0.0; dim];
                        for axis in (0..dim).rev() {
                            c[axis] = (idx % per_axis) as f64 / per_axis as f64;
                            idx /= per_axis;
                        }
                        GroupPoint::Torus(c)
                    })
                    .collect();
                let weights = vec![1.0 / total as f64; total];
                QuadratureRule {
                    group,
                    level,
                    nodes,
                    weights,
                    layout: Layout::Torus,
                }
            }
            GroupId::SU2 | GroupId::SO3 => {
                let two_l = level.twice() as usize;
                let n_uniform = 2 * two_l + 2;
                let n_gl = two_l + 2;
                let alpha: Vec<f64> = (0..n_uniform)
                    .map(|i| 2.0 * PI * i as f64 / n_uniform as f64)
                    .collect();
                let gamma: Vec<f64> = (0..n_uniform)
                    .map(|i| group.gamma_period() * i as f64 / n_uniform as f64)
                    .collect();
                let (x, w_gl) = gauss_legendre(n_gl);
                let beta: Vec<f64> = x.iter().map(|v| v.clamp(-1.0, 1.0).acos()).collect();

                let mut nodes = Vec::with_capacity(n_uniform * n_gl * n_uniform);
                let mut weights = Vec::with_capacity(nodes.capacity());
                let scale = 1.0 / (n_uniform * n_uniform) as f64;
                for &a in &alpha {
                    for (ib, &b) in beta.iter().enumerate() {
                        for &g in &gamma {
                            nodes.push(GroupPoint::Euler {
                                alpha: a,
                                beta: b,
                                gamma: g,
                            });
                            weights.push(scale * 0.5 * w_gl[ib]);
                        }
                    }
                }
                let total: f64 = crate::sum::pairwise(&weights);
                weights.iter_mut().for_each(|w| *w /= total);
                QuadratureRule {
                    group,
                    level,
                    nodes,
                    weights,
                    layout: Layout::Euler { alpha, beta, gamma },
                }
            }
        }
    }

    /// Rule exact for integrands of the given band-limit.
    pub fn for_band_limit(group: GroupId, band_limit: Level) -> Self {
        Self::new(group, band_limit.halved_up())
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn nodes(&self) -> &[GroupPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest band-limit integrated exactly.
    pub fn exact_band_limit(&self) -> Level {
        Level::from_twice(2 * self.level.twice())
    }

    /// `ξ(x_i)` at every node, in node order.
    pub fn rep_values(&self, irrep: &Irrep) -> Result<Vec<DMatrix<C64>>> {
        match (&self.layout, &irrep.label) {
            (Layout::Torus, IrrepLabel::Torus(k)) => {
                if k.len() != self.group.dim() {
                    return Err(Error::domain("irrep dimension does not match the torus"));
                }
                Ok(self
                    .nodes
                    .par_iter()
                    .map(|x| match x {
                        GroupPoint::Torus(c) => DMatrix::from_element(1, 1, torus_character(k, c)),
                        _ => unreachable!("torus rule holds torus points"),
                    })
                    .collect())
            }
            (Layout::Euler { alpha, beta, gamma }, IrrepLabel::Spin(l)) => {
                // Validates the cap and the group through rep_eval once.
                rep_eval(irrep, &self.nodes[0])?;
                let two_j = l.twice();
                let small: Vec<DMatrix<f64>> =
                    beta.par_iter().map(|&b| wigner::small_d(two_j, b)).collect();
                let (nb, ng) = (beta.len(), gamma.len());
                Ok((0..self.nodes.len())
                    .into_par_iter()
                    .map(|idx| {
                        let ig = idx % ng;
                        let ib = (idx / ng) % nb;
                        let ia = idx / (ng * nb);
                        wigner::assemble(two_j, &small[ib], alpha[ia], gamma[ig])
                    })
                    .collect())
            }
            _ => Err(Error::domain(format!(
                "irrep {} does not belong to {}",
                irrep.label, self.group
            ))),
        }
    }
}

/// `Σ w_i f(x_i)`, evaluated in parallel and reduced in a fixed order.
pub fn integrate<F>(rule: &QuadratureRule, f: F) -> Result<C64>
where
    F: Fn(&GroupPoint) -> C64 + Sync,
{
    let values: Vec<C64> = rule.nodes.par_iter().map(&f).collect();
    integrate_values(rule, &values)
}

/// `Σ w_i v_i` for values already sampled at the nodes.
pub fn integrate_values(rule: &QuadratureRule, values: &[C64]) -> Result<C64> {
    if values.len() != rule.len() {
        return Err(Error::domain(format!(
            "{} values for a rule with {} nodes",
            values.len(),
            rule.len()
        )));
    }
    if let Some(node) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let weighted: Vec<C64> = values
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| v * *w)
        .collect();
    Ok(pairwise_c(&weighted))
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::duals_up_to_level;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^10 = 2/11, degree 10 ≤ 2·6−1.
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn torus_rule_shape() {
        let r = QuadratureRule::new(GroupId::Torus(1), Level::integer(3));
        assert_eq!(r.len(), 8);
        assert!(r.weights().iter().all(|&w| w == 0.125));
        let r2 = QuadratureRule::new(GroupId::Torus(2), Level::integer(1));
        assert_eq!(r2.len(), 16);
    }

    #[test]
    fn weights_are_normalized() {
        for g in [GroupId::Torus(2), GroupId::SU2, GroupId::SO3] {
            let r = QuadratureRule::new(g, Level::from_twice(3));
            let s: f64 = r.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let one = integrate(&r, |_| C64::new(1.0, 0.0)).unwrap();
            assert!((one.re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn schur_orthogonality_su2() {
        let level = Level::integer(2);
        let rule = QuadratureRule::new(GroupId::SU2, level);
        let duals = duals_up_to_level(GroupId::SU2, level);
        let tables: Vec<_> = duals.iter().map(|ir| rule.rep_values(ir).unwrap()).collect();
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for (ir, tab) in duals.iter().zip(&tables) {
            let s = (ir.dim as f64).sqrt();
            for j in 0..ir.dim {
                for i in 0..ir.dim {
                    basis.push(tab.iter().map(|m| m[(i, j)] * s).collect());
                }
            }
        }
        let mut worst: f64 = 0.0;
        for (a, fa) in basis.iter().enumerate() {
            for (b, fb) in basis.iter().enumerate() {
                let vals: Vec<C64> = fa.iter().zip(fb).map(|(x, y)| x * y.conj()).collect();
                let g = integrate_values(&rule, &vals).unwrap();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn non_finite_reports_node() {
        let rule = QuadratureRule::new(GroupId::Torus(1), Level::integer(1));
        let err = integrate(&rule, |x| match x {
            GroupPoint::Torus(c) if c[0] == 0.5 => C64::new(f64::NAN, 0.0),
            _ => C64::new(1.0, 0.0),
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { node: 2 }));
    }
}
