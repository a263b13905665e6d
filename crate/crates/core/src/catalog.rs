//! Ready-made symbols: heat semigroup, Bessel potentials, sub-Laplacian
//! powers, a continuous function with non-nuclear convolution, and an
//! `x`-dependent separable test operator. Each named entry carries the
//! criterion verdicts it is expected to produce.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::fourier::GridFunction;
use crate::group::{GroupId, GroupPoint, Irrep, IrrepLabel, Level, QuadratureRule};
use crate::norms::schatten_power;
use crate::nuclearity::{criterion_invariant_l2, LambdaSchedule, Logic, PartialSum, Verdict};
use crate::quantize::{Block, Blocks, Symbol};
use crate::sum::pairwise;
use crate::{Error, Result, C64};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn scalar(value: f64, dim: usize) -> Block {
    Block::Scalar {
        value: C64::new(value, 0.0),
        dim,
    }
}

/// `e^{−tλ²} I`.
pub fn heat_symbol(group: GroupId, t: f64, cutoff: f64) -> Result<Symbol> {
    positive("t", t)?;
    Symbol::invariant(group, cutoff, Blocks::formula(move |ir| scalar((-t * ir.lambda_sq).exp(), ir.dim)))
}

/// `⟨ξ⟩^{−α} I = (1 + λ²)^{−α/2} I`.
pub fn bessel_symbol(group: GroupId, alpha: f64, cutoff: f64) -> Result<Symbol> {
    if !alpha.is_finite() {
        return Err(Error::domain("alpha must be finite"));
    }
    Symbol::invariant(group, cutoff, Blocks::formula(move |ir| scalar(ir.weight.powf(-alpha), ir.dim)))
}

/// Diagonal entries `(1 + ℓ(ℓ+1) − m²)^{−α/2}`, rows by descending `m`
/// (half-integer `m` on SU(2)).
pub fn sublaplacian_symbol(group: GroupId, alpha: f64, cutoff: f64) -> Result<Symbol> {
    if group.is_torus() {
        return Err(Error::domain("the sub-Laplacian is defined here for SU2 and SO3 only"));
    }
    if !alpha.is_finite() {
        return Err(Error::domain("alpha must be finite"));
    }
    Symbol::diagonal(
        group,
        cutoff,
        Blocks::formula(move |ir| Block::Diagonal(sublaplacian_diagonal(ir, alpha))),
    )
}

fn sublaplacian_diagonal(ir: &Irrep, alpha: f64) -> DVector<C64> {
    let l = ir.level().value();
    DVector::from_fn(ir.dim, |i, _| {
        let m = l - i as f64;
        C64::new((1.0 + ir.lambda_sq - m * m).powf(-alpha / 2.0), 0.0)
    })
}

/// Invariant symbol from tabulated blocks; zero elsewhere.
pub fn multiplier_from_sequence(group: GroupId, cutoff: f64, entries: Vec<(Irrep, DMatrix<C64>)>) -> Result<Symbol> {
    Symbol::invariant_table(group, cutoff, entries)
}

/// Scalar multiplier `a(ξ) I`.
pub fn multiplier_from_fn(
    group: GroupId,
    cutoff: f64,
    a: impl Fn(&Irrep) -> C64 + Send + Sync + 'static,
) -> Result<Symbol> {
    Symbol::invariant(group, cutoff, Blocks::formula(move |ir| Block::Scalar { value: a(ir), dim: ir.dim }))
}

/// Random Hermitian blocks with `‖a(ξ)‖_{S₁} = d_ξ^{−4}`, reproducible from
/// `seed` irrep by irrep.
pub fn random_multiplier(group: GroupId, seed: u64, cutoff: f64) -> Result<Symbol> {
    Symbol::invariant(
        group,
        cutoff,
        Blocks::formula(move |ir| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ label_key(&ir.label).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let d = ir.dim;
            let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
            let s1 = schatten_power(&h, 1.0).unwrap_or(0.0);
            if s1 == 0.0 {
                return Block::zero(d);
            }
            Block::Dense(h * C64::new((d as f64).powi(-4) / s1, 0.0))
        }),
    )
}

fn label_key(label: &IrrepLabel) -> u64 {
    match label {
        IrrepLabel::Spin(l) => l.twice() as u64 + 1,
        IrrepLabel::Torus(k) => k
            .iter()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, &x| (h ^ x as u64).wrapping_mul(0x100_0000_01b3)),
    }
}

/// `g(x) a(ξ)`.
pub fn separable_symbol(g: GridFunction, a: &Symbol) -> Result<Symbol> {
    Symbol::separable(g, a)
}

/// `g = 1 + ½ cos β` on SU(2), band-limited at level 1.
pub fn separable_demo_weight() -> Result<GridFunction> {
    let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(1)));
    GridFunction::from_fn(rule, Some(Level::integer(1)), |x| match x {
        GroupPoint::Euler { beta, .. } => C64::new(1.0 + 0.5 * beta.cos(), 0.0),
        GroupPoint::Torus(_) => unreachable!("SU2 rule"),
    })
}

/// `(1 + ½ cos β) e^{−tλ²}` on SU(2).
pub fn separable_demo(t: f64, cutoff: f64) -> Result<Symbol> {
    separable_symbol(separable_demo_weight()?, &heat_symbol(GroupId::SU2, t, cutoff)?)
}

/// Fourier coefficients of a continuous function on the circle whose
/// coefficients are not r-summable for any `r < 2`.
///
/// Block `k ≥ 1` occupies frequencies `[2^k, 2^{k+1})` and carries the
/// degree-`2^k` Rudin–Shapiro polynomial scaled by `k^{−2} 2^{−k/2}`. Only
/// blocks that fit entirely below `N` are included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanCoefficients {
    pub n_max: u64,
    pub blocks: u32,
    /// `c_n` for `n = 0..=n_max`; negative frequencies vanish.
    pub coeffs: Vec<f64>,
    /// `√2 Σ_{k ≤ blocks} k^{−2}`, a bound for the sup norm of every partial
    /// block sum, never above `√2 π²/6`.
    pub sup_certificate: f64,
}

/// `±1` Rudin–Shapiro sign of index `j`.
pub fn rudin_shapiro_sign(j: u64) -> f64 {
    if (j & (j >> 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn carleman_coefficients(n_max: u64) -> Result<CarlemanCoefficients> {
    if n_max < 3 {
        return Err(Error::domain(format!("frequency budget must be at least 3, got {n_max}")));
    }
    if n_max > 1 << 28 {
        return Err(Error::Capability(format!("frequency budget {n_max} exceeds 2^28")));
    }
    let blocks = (n_max + 1).ilog2() - 1;
    let mut coeffs = vec![0.0; n_max as usize + 1];
    for k in 1..=blocks {
        let amp = (k as f64).powi(-2) * 2f64.powf(-(k as f64) / 2.0);
        let start = 1u64 << k;
        for j in 0..start {
            coeffs[(start + j) as usize] = amp * rudin_shapiro_sign(j);
        }
    }
    let sup_certificate = 2f64.sqrt() * pairwise(&(1..=blocks).map(|k| (k as f64).powi(-2)).collect::<Vec<_>>());
    Ok(CarlemanCoefficients {
        n_max,
        blocks,
        coeffs,
        sup_certificate,
    })
}

impl CarlemanCoefficients {
    pub fn get(&self, n: i64) -> f64 {
        if n < 0 || n as u64 > self.n_max {
            0.0
        } else {
            self.coeffs[n as usize]
        }
    }

    /// `Σ_{|n| ≤ upto} |c_n|^r`.
    pub fn power_sum(&self, r: f64, upto: u64) -> f64 {
        let end = upto.min(self.n_max) as usize;
        let v: Vec<f64> = self.coeffs[..=end]
            .iter()
            .filter(|c| **c != 0.0)
            .map(|c| c.abs().powf(r))
            .collect();
        pairwise(&v)
    }

    /// `Σ_n |c_n|²` over all blocks of the infinite construction: `π⁴/90`.
    pub fn l2_limit() -> f64 {
        PI.powi(4) / 90.0
    }

    /// Largest modulus of the trigonometric sum on a uniform grid of
    /// `oversample · 2^⌈log₂(N+1)⌉` points, computed by FFT.
    pub fn measured_sup(&self, oversample: usize) -> f64 {
        let len = (self.n_max as usize + 1).next_power_of_two() * oversample.max(1);
        let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); len];
        for (n, c) in self.coeffs.iter().enumerate() {
            buf[n] = C64::new(*c, 0.0);
        }
        FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
        buf.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Fourier multiplier `σ(k) = c_k` on the circle, i.e. convolution with
    /// the function.
    pub fn symbol(&self, cutoff: f64) -> Result<Symbol> {
        let coeffs = Arc::new(self.coeffs.clone());
        Symbol::invariant(
            GroupId::Torus(1),
            cutoff,
            Blocks::formula(move |ir| {
                let v = match &ir.label {
                    IrrepLabel::Torus(k) if k[0] >= 0 && (k[0] as usize) < coeffs.len() => coeffs[k[0] as usize],
                    _ => 0.0,
                };
                scalar(v, 1)
            }),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSumRow {
    pub n: u64,
    pub r: f64,
    pub sum: f64,
}

/// Certified and measured properties of [`carleman_coefficients`], plus the
/// trace-class criterion verdict for the convolution operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub n_max: u64,
    pub blocks: u32,
    pub sup_certificate: f64,
    pub measured_sup: f64,
    pub sup_grid_points: usize,
    pub l2_sum: f64,
    pub l2_limit: f64,
    pub l2_relative_gap: f64,
    /// `Σ_{|n| ≤ N} |c_n|^r` at `N = 2^6, 2^7, …` for `r ∈ {1, 1.5, 2}`.
    pub power_sums: Vec<PowerSumRow>,
    /// Ratio of the `r = 1.5` sums at the largest `N` and at `N = 2^6`.
    pub growth_ratio_r15: f64,
    pub criterion_partial_sums: Vec<PartialSum>,
    pub criterion_verdict: Verdict,
}

const SUP_OVERSAMPLE: usize = 4;

pub fn carleman_demo(n_max: u64, schedule: &LambdaSchedule) -> Result<CarlemanReport> {
    let c = carleman_coefficients(n_max)?;
    let mut power_sums = Vec::new();
    let mut n = 64u64;
    while n <= n_max {
        for r in [1.0, 1.5, 2.0] {
            power_sums.push(PowerSumRow { n, r, sum: c.power_sum(r, n) });
        }
        n *= 2;
    }
    let growth_ratio_r15 = c.power_sum(1.5, n_max) / c.power_sum(1.5, 64.min(n_max));
    let l2_sum = c.power_sum(2.0, n_max);
    let l2_limit = CarlemanCoefficients::l2_limit();
    let crit = criterion_invariant_l2(&c.symbol(f64::INFINITY)?, 1.0, schedule)?;
    Ok(CarlemanReport {
        n_max,
        blocks: c.blocks,
        sup_certificate: c.sup_certificate,
        measured_sup: c.measured_sup(SUP_OVERSAMPLE),
        sup_grid_points: (n_max as usize + 1).next_power_of_two() * SUP_OVERSAMPLE,
        l2_sum,
        l2_limit,
        l2_relative_gap: (l2_limit - l2_sum) / l2_limit,
        power_sums,
        growth_ratio_r15,
        criterion_partial_sums: crit.partial_sums,
        criterion_verdict: crit.verdict,
    })
}

/// Parameters accepted by named catalog entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Frequency budget for the Carleman entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Where a criterion series is expected to converge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    Always,
    Never,
    /// Converges exactly when `parameter · r > threshold_times_r`.
    Above { parameter: String, threshold_times_r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCriterion {
    /// Criterion id as used in reports.
    pub criterion: String,
    pub p1: f64,
    pub p2: f64,
    pub converges: Region,
    pub logic: Logic,
    pub description: String,
}

impl ExpectedCriterion {
    /// Parameter value at the boundary for a given `r`.
    pub fn boundary(&self, r: f64) -> Option<f64> {
        match &self.converges {
            Region::Above { threshold_times_r, .. } => Some(threshold_times_r / r),
            _ => None,
        }
    }

    pub fn expected(&self, parameter: f64, r: f64) -> Verdict {
        let inside = match &self.converges {
            Region::Always => true,
            Region::Never => false,
            Region::Above { threshold_times_r, .. } => parameter * r > *threshold_times_r,
        };
        if inside {
            Verdict::ConvergedNumerically
        } else {
            Verdict::DivergenceDetected
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub group: GroupId,
    pub parameters: OperatorParams,
    pub symbol: Symbol,
    pub expected: Vec<ExpectedCriterion>,
}

/// Serializable description of an entry without its symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogListing {
    pub name: String,
    pub groups: Vec<String>,
    pub parameters: Vec<String>,
    pub summary: String,
}

pub const CATALOG_NAMES: &[&str] = &[
    "heat",
    "bessel",
    "sublaplacian",
    "carleman",
    "separable-demo",
    "random-multiplier",
    "zero",
];

pub fn catalog_listing() -> Vec<CatalogListing> {
    let any = || vec!["T^n".into(), "SU2".into(), "SO3".into()];
    let row = |name: &str, groups: Vec<String>, params: &[&str], summary: &str| CatalogListing {
        name: name.into(),
        groups,
        parameters: params.iter().map(|s| s.to_string()).collect(),
        summary: summary.into(),
    };
    vec![
        row("heat", any(), &["t"], "e^{-tλ²} I, the heat semigroup"),
        row("bessel", any(), &["alpha"], "⟨ξ⟩^{-α} I, Bessel potential (I − Δ)^{-α/2}"),
        row(
            "sublaplacian",
            vec!["SU2".into(), "SO3".into()],
            &["alpha"],
            "(I − L_sub)^{-α/2}, diagonal entries (1 + ℓ(ℓ+1) − m²)^{-α/2}",
        ),
        row(
            "carleman",
            vec!["T1".into()],
            &["n"],
            "convolution with a continuous function whose coefficients are only square summable",
        ),
        row("separable-demo", vec!["SU2".into()], &["t (default 1)"], "(1 + ½ cos β) e^{-tλ²}, x-dependent"),
        row("random-multiplier", any(), &["seed"], "random Hermitian blocks with trace norm d^{-4}"),
        row("zero", any(), &[], "the zero operator"),
    ]
}

fn expect(criterion: &str, p: f64, converges: Region, logic: Logic, description: &str) -> ExpectedCriterion {
    ExpectedCriterion {
        criterion: criterion.into(),
        p1: p,
        p2: p,
        converges,
        logic,
        description: description.into(),
    }
}

fn above(threshold_times_r: f64) -> Region {
    Region::Above {
        parameter: "alpha".into(),
        threshold_times_r,
    }
}

/// Heat time used by `separable-demo` when none is given.
pub const SEPARABLE_DEMO_T: f64 = 1.0;

/// Builds a named entry.
pub fn instantiate(name: &str, group: GroupId, params: &OperatorParams, cutoff: f64) -> Result<CatalogEntry> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| Error::Config(format!("operator {name} needs parameter {what}")))
    };
    let (symbol, expected) = match name {
        "heat" => (
            heat_symbol(group, need(params.t, "t")?, cutoff)?,
            vec![
                expect("invariant-l2", 2.0, Region::Always, Logic::Sufficient, "converges for every t > 0"),
                expect("general-lp", 2.0, Region::Always, Logic::Sufficient, "converges for every t > 0"),
            ],
        ),
        "bessel" => {
            let n = group.dim() as f64;
            let region = if group.is_torus() { "alpha r > n" } else { "alpha r > 3" };
            (
                bessel_symbol(group, need(params.alpha, "alpha")?, cutoff)?,
                vec![expect("invariant-l2", 2.0, above(n), Logic::Equivalent, region)],
            )
        }
        "sublaplacian" => (
            sublaplacian_symbol(group, need(params.alpha, "alpha")?, cutoff)?,
            vec![expect("diagonal-lp", 2.0, above(4.0), Logic::Sufficient, "alpha r > 4")],
        ),
        "carleman" => {
            if group != GroupId::Torus(1) {
                return Err(Error::Config("carleman lives on T1".into()));
            }
            let c = carleman_coefficients(params.n.unwrap_or(1 << 20))?;
            (
                c.symbol(cutoff)?,
                vec![expect(
                    "invariant-l2",
                    2.0,
                    Region::Never,
                    Logic::Equivalent,
                    "coefficients are not absolutely summable",
                )],
            )
        }
        "separable-demo" => {
            if group != GroupId::SU2 {
                return Err(Error::Config("separable-demo lives on SU2".into()));
            }
            (
                separable_demo(params.t.unwrap_or(SEPARABLE_DEMO_T), cutoff)?,
                vec![expect("general-lp", 4.0, Region::Always, Logic::Sufficient, "converges for every t > 0")],
            )
        }
        "random-multiplier" => (
            random_multiplier(group, params.seed.unwrap_or(0), cutoff)?,
            vec![expect("invariant-l2", 2.0, Region::Always, Logic::Sufficient, "terms are d^{-3}")],
        ),
        "zero" => (
            Symbol::zero(group, cutoff)?,
            vec![expect("invariant-l2", 2.0, Region::Always, Logic::Sufficient, "all terms vanish")],
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown catalog operator {other:?}; known: {}",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    let name = CATALOG_NAMES.iter().find(|n| **n == name).copied().expect("listed");
    Ok(CatalogEntry {
        name,
        group,
        parameters: params.clone(),
        symbol,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::singular_values;

    fn spin(group: GroupId, twice: u32) -> Irrep {
        Irrep::spin(group, Level::from_twice(twice)).unwrap()
    }

    #[test]
    fn heat_values() {
        let s = heat_symbol(GroupId::SU2, 1.0, 10.0).unwrap();
        let b = s.block(&spin(GroupId::SU2, 2)).unwrap();
        assert!((b.to_dense() - DMatrix::identity(3, 3) * C64::new((-2.0f64).exp(), 0.0)).norm() < 1e-16);
        assert_eq!(s.block(&spin(GroupId::SU2, 0)).unwrap().trace(), C64::new(1.0, 0.0));
        let t1 = heat_symbol(GroupId::Torus(1), 0.1, 100.0).unwrap();
        let v = t1.block(&Irrep::torus(vec![2])).unwrap().trace().re;
        assert!((v - (-1.6 * PI * PI).exp()).abs() < 1e-18);
        assert!(heat_symbol(GroupId::SO3, 0.0, 5.0).is_err());
    }

    #[test]
    fn bessel_values_and_composition() {
        let s = bessel_symbol(GroupId::SU2, 2.0, 10.0).unwrap();
        let b = s.block(&spin(GroupId::SU2, 2)).unwrap().trace();
        assert!((b.re - 1.0).abs() < 1e-15);
        let t = bessel_symbol(GroupId::Torus(1), 1.3, 10.0).unwrap();
        assert_eq!(t.block(&Irrep::torus(vec![0])).unwrap().trace(), C64::new(1.0, 0.0));
        let (a, b) = (0.7, 1.9);
        for ir in crate::group::enumerate_dual(GroupId::SO3, 30.0).unwrap() {
            let x = bessel_symbol(GroupId::SO3, a, 30.0).unwrap().block(&ir).unwrap().to_dense();
            let y = bessel_symbol(GroupId::SO3, b, 30.0).unwrap().block(&ir).unwrap().to_dense();
            let z = bessel_symbol(GroupId::SO3, a + b, 30.0).unwrap().block(&ir).unwrap().to_dense();
            assert!(crate::norms::max_abs(&(x * y - &z)) < 1e-12 * crate::norms::max_abs(&z).max(1e-300));
        }
    }

    #[test]
    fn sublaplacian_values() {
        let s = sublaplacian_symbol(GroupId::SO3, 2.0, 10.0).unwrap();
        let d = s.block(&spin(GroupId::SO3, 2)).unwrap().diagonal().unwrap();
        let want = [0.5, 1.0 / 3.0, 0.5];
        for (g, w) in d.iter().zip(want) {
            assert!((g.re - w).abs() < 1e-15);
        }
        let s2 = sublaplacian_symbol(GroupId::SU2, 1.0, 10.0).unwrap();
        let d = s2.block(&spin(GroupId::SU2, 1)).unwrap().diagonal().unwrap();
        // ℓ = ½, m = ±½: 1 + 3/4 − 1/4 = 3/2.
        assert!(d.iter().all(|z| (z.re - (1.5f64).powf(-0.5)).abs() < 1e-15));
        assert_eq!(s.block(&spin(GroupId::SO3, 0)).unwrap().trace(), C64::new(1.0, 0.0));
        assert!(sublaplacian_symbol(GroupId::Torus(2), 1.0, 5.0).is_err());
    }

    #[test]
    fn random_multiplier_norms() {
        let s = random_multiplier(GroupId::SU2, 7, 10.0).unwrap();
        for twice in [0, 1, 4, 7] {
            let ir = spin(GroupId::SU2, twice);
            let m = s.block(&ir).unwrap().to_dense();
            assert!((&m - m.adjoint()).norm() < 1e-15);
            let s1: f64 = singular_values(&m).unwrap().iter().sum();
            assert!((s1 - (ir.dim as f64).powi(-4)).abs() < 1e-14);
        }
        let again = random_multiplier(GroupId::SU2, 7, 10.0).unwrap();
        let ir = spin(GroupId::SU2, 3);
        assert_eq!(s.block(&ir).unwrap().to_dense(), again.block(&ir).unwrap().to_dense());
    }

    #[test]
    fn rudin_shapiro_flatness() {
        // |P|² + |Q|² = 2^{m+1} gives sup |P_m| ≤ 2^{(m+1)/2}.
        for m in [3u32, 8, 12] {
            let len = 1usize << m;
            let mut buf: Vec<C64> = (0..len).map(|j| C64::new(rudin_shapiro_sign(j as u64), 0.0)).collect();
            buf.resize(len * 8, C64::new(0.0, 0.0));
            FftPlanner::new().plan_fft_inverse(len * 8).process(&mut buf);
            let sup = buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(sup <= 2f64.powf((m as f64 + 1.0) / 2.0) + 1e-9);
        }
    }

    #[test]
    fn carleman_block_arithmetic() {
        let c = carleman_coefficients(127).unwrap();
        assert_eq!(c.blocks, 6);
        let l2 = c.power_sum(2.0, 127);
        let want: f64 = (1..=6).map(|k| (k as f64).powi(-4)).sum();
        assert!((l2 - want).abs() < 1e-14);
        assert!(l2 <= CarlemanCoefficients::l2_limit());
        assert!(c.measured_sup(4) <= c.sup_certificate);
        assert_eq!(c.get(-3), 0.0);
        assert_eq!(c.get(1), 0.0);
        assert!(carleman_coefficients(2).is_err());
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = instantiate("laplace", GroupId::SU2, &OperatorParams::default(), 5.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("heat") && msg.contains("sublaplacian"));
        assert!(instantiate("heat", GroupId::SU2, &OperatorParams::default(), 5.0).is_err());
    }

    #[test]
    fn expected_regions() {
        let e = instantiate(
            "bessel",
            GroupId::Torus(1),
            &OperatorParams {
                alpha: Some(1.0),
                ..Default::default()
            },
            10.0,
        )
        .unwrap();
        assert_eq!(e.expected[0].boundary(0.5), Some(2.0));
        assert_eq!(e.expected[0].expected(2.2, 0.5), Verdict::ConvergedNumerically);
        assert_eq!(e.expected[0].expected(1.8, 0.5), Verdict::DivergenceDetected);
    }
}
