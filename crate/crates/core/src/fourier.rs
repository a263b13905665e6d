//! Group Fourier transform `f̂(ξ) = ∫ f(x) ξ(x)* dx`, its inverse
//! `f(x) = Σ d_ξ Tr(ξ(x) f̂(ξ))` and the Parseval defect.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::group::{
    duals_up_to_level, integrate_values, rep_eval, GroupId, GroupPoint, Irrep, IrrepLabel, Level,
    QuadratureRule,
};
use crate::matrix_json::ComplexMatrixJson;
use crate::sum::{pairwise, pairwise_c};
use crate::{Error, Result, C64};

/// Complex samples of a function at the nodes of a quadrature rule.
#[derive(Clone, Debug)]
pub struct GridFunction {
    rule: Arc<QuadratureRule>,
    values: Vec<C64>,
    band_limit: Option<Level>,
    coeffs: OnceLock<FourierCoefficients>,
}

impl GridFunction {
    pub fn new(rule: Arc<QuadratureRule>, values: Vec<C64>, band_limit: Option<Level>) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::domain(format!(
                "{} samples for a rule with {} nodes",
                values.len(),
                rule.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(GridFunction {
            rule,
            values,
            band_limit,
            coeffs: OnceLock::new(),
        })
    }

    pub fn from_fn<F>(rule: Arc<QuadratureRule>, band_limit: Option<Level>, f: F) -> Result<Self>
    where
        F: Fn(&GroupPoint) -> C64 + Sync,
    {
        let values = rule.nodes().par_iter().map(&f).collect();
        Self::new(rule, values, band_limit)
    }

    pub fn constant(rule: Arc<QuadratureRule>, c: C64) -> Result<Self> {
        let n = rule.len();
        Self::new(rule, vec![c; n], Some(Level::ZERO))
    }

    /// `scale · ξ_ij` sampled on the rule.
    pub fn rep_entry(rule: Arc<QuadratureRule>, irrep: &Irrep, i: usize, j: usize, scale: f64) -> Result<Self> {
        if i >= irrep.dim || j >= irrep.dim {
            return Err(Error::domain(format!("entry ({i},{j}) outside a {}-dimensional irrep", irrep.dim)));
        }
        let table = rule.rep_values(irrep)?;
        let values = table.iter().map(|m| m[(i, j)] * scale).collect();
        Self::new(rule, values, Some(irrep.level()))
    }

    /// Random combination of all matrix coefficients up to `level`, with
    /// real and imaginary parts of each coefficient uniform in `[-1, 1]`.
    pub fn random_band_limited<R: Rng + ?Sized>(
        rule: Arc<QuadratureRule>,
        level: Level,
        rng: &mut R,
    ) -> Result<Self> {
        let group = rule.group();
        let duals = duals_up_to_level(group, level);
        let mut entries = Vec::with_capacity(duals.len());
        for ir in duals {
            let m = DMatrix::from_fn(ir.dim, ir.dim, |_, _| {
                C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
            });
            entries.push((ir, m));
        }
        let coeffs = FourierCoefficients::new(group, f64::INFINITY, entries)?;
        let values = inverse_ft_on_rule(&coeffs, &rule)?;
        Self::new(rule, values, Some(level))
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn band_limit(&self) -> Option<Level> {
        self.band_limit
    }

    pub fn group(&self) -> GroupId {
        self.rule.group()
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> Result<C64> {
        integrate_values(&self.rule, &self.values)
    }

    /// `‖f‖²_{L²}`.
    pub fn l2_norm_sq(&self) -> f64 {
        let v: Vec<f64> = self
            .values
            .iter()
            .zip(self.rule.weights())
            .map(|(f, w)| w * f.norm_sqr())
            .collect();
        pairwise(&v)
    }

    /// Pointwise product; band-limits add.
    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_rule(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let band = match (self.band_limit, other.band_limit) {
            (Some(a), Some(b)) => Some(a.saturating_add(b)),
            _ => None,
        };
        Self::new(self.rule.clone(), values, band)
    }

    pub fn scale(&self, c: C64) -> GridFunction {
        GridFunction {
            rule: self.rule.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            band_limit: self.band_limit,
            coeffs: OnceLock::new(),
        }
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &GridFunction, b: C64) -> Result<GridFunction> {
        self.check_same_rule(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let band = match (self.band_limit, other.band_limit) {
            (Some(p), Some(q)) => Some(p.max(q)),
            _ => None,
        };
        Self::new(self.rule.clone(), values, band)
    }

    /// Value at an arbitrary point through the Fourier series of the
    /// samples. Exact when the declared band-limit is within the rule's
    /// exactness level.
    pub fn interpolate(&self, x: &GroupPoint) -> Result<C64> {
        let band = self.band_limit.ok_or_else(|| {
            Error::domain("interpolation needs a declared band-limit")
        })?;
        if band > self.rule.level() {
            return Err(Error::domain(format!(
                "band-limit {band} exceeds the rule level {}",
                self.rule.level()
            )));
        }
        if let Some(c) = self.coeffs.get() {
            return inverse_ft(c, x);
        }
        let duals = duals_up_to_level(self.group(), band);
        let c = forward_ft(self, &duals)?;
        let c = self.coeffs.get_or_init(|| c);
        inverse_ft(c, x)
    }

    pub(crate) fn same_rule(&self, rule: &QuadratureRule) -> bool {
        self.rule.group() == rule.group() && self.rule.level() == rule.level()
    }

    fn check_same_rule(&self, other: &GridFunction) -> Result<()> {
        if self.same_rule(&other.rule) {
            Ok(())
        } else {
            Err(Error::domain("grid functions live on different quadrature rules"))
        }
    }
}

/// `[ξ] ↦ f̂(ξ)` over a finite set of irreps, in dual order.
#[derive(Clone, Debug)]
pub struct FourierCoefficients {
    group: GroupId,
    cutoff: f64,
    entries: Vec<(Irrep, DMatrix<C64>)>,
    index: HashMap<IrrepLabel, usize>,
    pub warnings: Vec<String>,
}

impl FourierCoefficients {
    pub fn new(group: GroupId, cutoff: f64, mut entries: Vec<(Irrep, DMatrix<C64>)>) -> Result<Self> {
        for (ir, m) in &entries {
            Irrep::from_label(group, &ir.label)?;
            if m.nrows() != ir.dim || m.ncols() != ir.dim {
                return Err(Error::domain(format!(
                    "coefficient at {} must be {d}×{d}",
                    ir.label,
                    d = ir.dim
                )));
            }
        }
        entries.sort_by(|a, b| a.0.dual_order(&b.0));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (ir, _))| (ir.label.clone(), i))
            .collect();
        Ok(FourierCoefficients {
            group,
            cutoff,
            entries,
            index,
            warnings: Vec::new(),
        })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn entries(&self) -> &[(Irrep, DMatrix<C64>)] {
        &self.entries
    }

    pub fn get(&self, label: &IrrepLabel) -> Option<&DMatrix<C64>> {
        self.index.get(label).map(|&i| &self.entries[i].1)
    }

    /// `Σ d_ξ ‖f̂(ξ)‖²_HS`.
    pub fn l2_norm_sq(&self) -> f64 {
        let v: Vec<f64> = self
            .entries
            .iter()
            .map(|(ir, m)| ir.dim as f64 * m.norm_squared())
            .collect();
        pairwise(&v)
    }

    /// Largest band-limit level among the stored irreps.
    pub fn max_level(&self) -> Level {
        self.entries.iter().map(|(ir, _)| ir.level()).max().unwrap_or(Level::ZERO)
    }

    pub fn to_json(&self) -> FourierCoefficientsJson {
        FourierCoefficientsJson {
            group: self.group,
            cutoff: finite_or_none(self.cutoff),
            entries: self
                .entries
                .iter()
                .map(|(ir, m)| BlockJson {
                    label: ir.label.clone(),
                    dim: ir.dim,
                    matrix: ComplexMatrixJson::from_matrix(m),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &FourierCoefficientsJson) -> Result<Self> {
        let entries = json
            .entries
            .iter()
            .map(|b| {
                let ir = Irrep::from_label(json.group, &b.label)?;
                if ir.dim != b.dim {
                    return Err(Error::domain(format!("wrong dimension for {}", b.label)));
                }
                Ok((ir, b.matrix.to_matrix(b.dim)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.group, json.cutoff.unwrap_or(f64::INFINITY), entries)
    }
}

pub(crate) fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BlockJson {
    pub label: IrrepLabel,
    pub dim: usize,
    #[serde(flatten)]
    pub matrix: ComplexMatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FourierCoefficientsJson {
    pub group: GroupId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    pub entries: Vec<BlockJson>,
}

/// `f̂(ξ) = Σ_i w_i f(x_i) ξ(x_i)*` for every requested irrep.
pub fn forward_ft(f: &GridFunction, duals: &[Irrep]) -> Result<FourierCoefficients> {
    let rule = f.rule();
    let mut warnings = Vec::new();
    let top = duals.iter().map(|ir| ir.level()).max().unwrap_or(Level::ZERO);
    match f.band_limit() {
        Some(b) if b.saturating_add(top) > rule.exact_band_limit() => warnings.push(format!(
            "precision: integrand band-limit {} exceeds the rule's exact band-limit {}",
            b.saturating_add(top),
            rule.exact_band_limit()
        )),
        None => warnings.push("precision: band-limit not declared, exactness not certified".into()),
        _ => {}
    }
    let weighted: Vec<C64> = f
        .values()
        .iter()
        .zip(rule.weights())
        .map(|(v, w)| v * *w)
        .collect();
    let mut entries = Vec::with_capacity(duals.len());
    for ir in duals {
        let table = rule.rep_values(ir)?;
        let d = ir.dim;
        // entry (m, n) = Σ w f conj(ξ_nm)
        let cells: Vec<C64> = (0..d * d)
            .into_par_iter()
            .map(|cell| {
                let (m, n) = (cell % d, cell / d);
                let terms: Vec<C64> = weighted
                    .iter()
                    .zip(&table)
                    .map(|(wf, xi)| wf * xi[(n, m)].conj())
                    .collect();
                pairwise_c(&terms)
            })
            .collect();
        entries.push((ir.clone(), DMatrix::from_vec(d, d, cells)));
    }
    let cutoff = duals.iter().map(|ir| ir.weight).fold(1.0, f64::max);
    let mut out = FourierCoefficients::new(rule.group(), cutoff, entries)?;
    out.warnings = warnings;
    Ok(out)
}

/// `Σ d_ξ Tr(ξ(x) f̂(ξ))`.
pub fn inverse_ft(coeffs: &FourierCoefficients, x: &GroupPoint) -> Result<C64> {
    x.check(coeffs.group())?;
    let mut acc = C64::new(0.0, 0.0);
    for (ir, m) in coeffs.entries() {
        let xi = rep_eval(ir, x)?;
        acc += trace_of_product(&xi, m) * ir.dim as f64;
    }
    Ok(acc)
}

/// The inverse transform evaluated at every node of `rule`.
pub fn inverse_ft_on_rule(coeffs: &FourierCoefficients, rule: &QuadratureRule) -> Result<Vec<C64>> {
    if rule.group() != coeffs.group() {
        return Err(Error::domain("coefficients and rule belong to different groups"));
    }
    let mut values = vec![C64::new(0.0, 0.0); rule.len()];
    for (ir, m) in coeffs.entries() {
        let table = rule.rep_values(ir)?;
        let d = ir.dim as f64;
        values
            .par_iter_mut()
            .zip(table.par_iter())
            .for_each(|(v, xi)| *v += trace_of_product(xi, m) * d);
    }
    Ok(values)
}

/// `|‖f‖²_{L²} − Σ d_ξ ‖f̂(ξ)‖²_HS|`.
pub fn parseval_defect(f: &GridFunction, coeffs: &FourierCoefficients) -> f64 {
    (f.l2_norm_sq() - coeffs.l2_norm_sq()).abs()
}

/// `Tr(A B)` without forming the product.
pub(crate) fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::enumerate_dual;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rule(g: GroupId, twice: u32) -> Arc<QuadratureRule> {
        Arc::new(QuadratureRule::new(g, Level::from_twice(twice)))
    }

    #[test]
    fn single_character_on_circle() {
        let r = rule(GroupId::Torus(1), 8);
        let f = GridFunction::from_fn(r, Some(Level::integer(3)), |x| match x {
            GroupPoint::Torus(c) => C64::from_polar(1.0, 2.0 * PI * 3.0 * c[0]),
            _ => unreachable!(),
        })
        .unwrap();
        let duals = enumerate_dual(GroupId::Torus(1), 30.0).unwrap();
        let c = forward_ft(&f, &duals).unwrap();
        assert!(c.warnings.is_empty());
        for (ir, m) in c.entries() {
            let expect = if ir.label == IrrepLabel::Torus(vec![3]) { 1.0 } else { 0.0 };
            assert!((m[(0, 0)] - expect).norm() < 1e-12);
        }
        let v = inverse_ft(&c, &GroupPoint::Torus(vec![0.25])).unwrap();
        assert!((v - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(parseval_defect(&f, &c) < 1e-12);
    }

    #[test]
    fn scaled_coefficient_has_single_entry() {
        let r = rule(GroupId::SU2, 4);
        let ir = Irrep::spin(GroupId::SU2, Level::integer(1)).unwrap();
        let f = GridFunction::rep_entry(r, &ir, 1, 0, 3f64.sqrt()).unwrap();
        let c = forward_ft(&f, std::slice::from_ref(&ir)).unwrap();
        let m = c.get(&ir.label).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // f̂ of ξ_ij is E_ji / d
                let expect = if (i, j) == (0, 1) { 3f64.sqrt() / 3.0 } else { 0.0 };
                assert!((m[(i, j)].norm() - expect).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn random_function_round_trip_su2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = rule(GroupId::SU2, 6);
        let f = GridFunction::random_band_limited(r.clone(), Level::integer(3), &mut rng).unwrap();
        let duals = duals_up_to_level(GroupId::SU2, Level::integer(3));
        let c = forward_ft(&f, &duals).unwrap();
        assert!(c.warnings.is_empty(), "{:?}", c.warnings);
        assert!(parseval_defect(&f, &c) < 1e-10 * f.l2_norm_sq().max(1.0));
        let back = inverse_ft_on_rule(&c, &r).unwrap();
        let err = back.iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn shortfall_is_warned() {
        let r = rule(GroupId::SO3, 2);
        let f = GridFunction::constant(r, C64::new(2.0, 0.0)).unwrap();
        let duals = duals_up_to_level(GroupId::SO3, Level::integer(3));
        let c = forward_ft(&f, &duals).unwrap();
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let r = rule(GroupId::SU2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = GridFunction::random_band_limited(r, Level::from_twice(1), &mut rng).unwrap();
        let duals = duals_up_to_level(GroupId::SU2, Level::from_twice(1));
        let c = forward_ft(&f, &duals).unwrap();
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let back: FourierCoefficientsJson = serde_json::from_str(&text).unwrap();
        let c2 = FourierCoefficients::from_json(&back).unwrap();
        for ((_, a), (_, b)) in c.entries().iter().zip(c2.entries()) {
            assert_eq!(a, b);
        }
    }
}
