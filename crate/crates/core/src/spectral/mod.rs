//! Finite-section spectra, the three trace computations, the trace =
//! eigenvalue-sum check, eigenvalue summability and the heat trace.

mod eigen;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use eigen::eigenvalues;

use crate::group::{enumerate_dual, integrate_values, GroupId, Irrep, Level, QuadratureRule};
use crate::nuclearity::{ensure_not_divergent, nr_upper_bound, CriterionInfo, CriterionQuery, Verdict};
use crate::quantize::{assemble_matrix, kernel_diagonal_on_rule, Symbol, SymbolKind, TruncatedOperator};
use crate::sum::{pairwise, pairwise_c};
use crate::{Error, Result, C64};

/// Largest matrix handed to the dense eigensolver by default.
pub const DEFAULT_EIGEN_BUDGET: usize = 2000;

/// Descending modulus, then argument in `(−π, π]`.
pub fn sort_spectrum(eigs: &mut [C64]) {
    fn arg(z: &C64) -> f64 {
        let a = z.im.atan2(z.re);
        if a == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            a
        }
    }
    eigs.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(arg(a).total_cmp(&arg(b))));
}

/// Sorted spectrum of the finite section, subject to [`DEFAULT_EIGEN_BUDGET`].
pub fn eigenvalues_truncated(a: &TruncatedOperator) -> Result<Vec<C64>> {
    eigenvalues_with_budget(a, DEFAULT_EIGEN_BUDGET)
}

pub fn eigenvalues_with_budget(a: &TruncatedOperator, budget: usize) -> Result<Vec<C64>> {
    if a.size() > budget {
        return Err(Error::Capability(format!(
            "finite section has size {} above the dense eigenproblem budget {budget}",
            a.size()
        )));
    }
    let mut e = eigenvalues(&a.matrix)?;
    sort_spectrum(&mut e);
    Ok(e)
}

/// Nuclearity on `L²` with `r = 1` is what makes a trace meaningful.
fn trace_query() -> CriterionQuery {
    CriterionQuery::l2(1.0).expect("valid query")
}

/// `∫_G Σ_{⟨ξ⟩≤Λ} d_ξ Tr σ(x, ξ) dx`.
///
/// Refused when the trace-class criterion for the symbol diverges.
pub fn trace_symbol(sigma: &Symbol, cutoff: f64) -> Result<C64> {
    ensure_not_divergent(sigma, &trace_query(), cutoff)?;
    trace_symbol_unchecked(sigma, cutoff)
}

fn trace_symbol_unchecked(sigma: &Symbol, cutoff: f64) -> Result<C64> {
    let duals = enumerate_dual(sigma.group(), cutoff)?;
    let block_sum = |blocks: &dyn Fn(&Irrep) -> Result<C64>| -> Result<C64> {
        let terms: Vec<C64> = duals
            .iter()
            .map(|ir| Ok(blocks(ir)? * ir.dim as f64))
            .collect::<Result<_>>()?;
        Ok(pairwise_c(&terms))
    };
    match sigma.kind() {
        SymbolKind::Invariant(_) | SymbolKind::Diagonal(_) => block_sum(&|ir| Ok(sigma.block(ir)?.trace())),
        SymbolKind::Separable { g, a } => Ok(g.integral()? * block_sum(&|ir| Ok(a.get(ir).trace()))?),
        SymbolKind::General(samples) => {
            let rule = &samples.rule;
            let per_node: Vec<C64> = (0..rule.len())
                .map(|n| {
                    let terms: Vec<C64> = duals
                        .iter()
                        .filter_map(|ir| samples.get(ir).map(|s| s[n].trace() * ir.dim as f64))
                        .collect();
                    pairwise_c(&terms)
                })
                .collect();
            integrate_values(rule, &per_node)
        }
    }
}

/// `∫_G K(x, x) dx` by quadrature on `rule`, with the symbol's own cutoff.
pub fn trace_kernel_diagonal(sigma: &Symbol, rule: &QuadratureRule) -> Result<C64> {
    ensure_not_divergent(sigma, &trace_query(), sigma.cutoff())?;
    let diag = kernel_diagonal_on_rule(sigma, rule)?;
    integrate_values(rule, &diag)
}

/// Quadrature rule on which the kernel diagonal of `sigma` integrates
/// exactly (or, for sampled symbols, the sampling rule).
pub fn kernel_rule(sigma: &Symbol) -> Arc<QuadratureRule> {
    match sigma.kind() {
        SymbolKind::Separable { g, .. } => g.rule().clone(),
        SymbolKind::General(s) => s.rule.clone(),
        _ => Arc::new(QuadratureRule::new(sigma.group(), Level::ZERO)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigTrace {
    pub eigenvalues: Vec<C64>,
    /// Sum of the eigenvalues in their sorted order.
    pub eigsum: C64,
    pub matrix_trace: C64,
}

/// Eigenvalue sum and matrix diagonal sum, required to agree to
/// `1e-9 · max(1, |tr|)`.
pub fn trace_eigsum(a: &TruncatedOperator) -> Result<EigTrace> {
    let eigenvalues = eigenvalues_truncated(a)?;
    let mut eigsum = C64::new(0.0, 0.0);
    for z in &eigenvalues {
        eigsum += z;
    }
    let matrix_trace = a.matrix_trace();
    let tol = 1e-9 * matrix_trace.norm().max(1.0);
    if (eigsum - matrix_trace).norm() > tol {
        return Err(Error::Numeric(format!(
            "eigenvalue sum {eigsum} differs from the matrix trace {matrix_trace} by more than {tol:e}"
        )));
    }
    Ok(EigTrace {
        eigenvalues,
        eigsum,
        matrix_trace,
    })
}

/// Which hypothesis licenses trace = eigenvalue sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LidskiiRegime {
    /// `r ≤ 2/3`, any `p`.
    SmallIndex,
    /// `1/r = 1 + |1/2 − 1/p|`.
    IndexCurve,
}

const CURVE_TOL: f64 = 1e-9;

pub fn lidskii_regime(r: f64, p: f64) -> Result<LidskiiRegime> {
    if !(r > 0.0 && r <= 1.0) || !(p >= 1.0) {
        return Err(Error::domain(format!("need 0 < r ≤ 1 and p ≥ 1, got r={r}, p={p}")));
    }
    if r <= 2.0 / 3.0 * (1.0 + 1e-12) {
        return Ok(LidskiiRegime::SmallIndex);
    }
    let gap = 1.0 / r - 1.0 - (0.5 - 1.0 / p).abs();
    if gap.abs() <= CURVE_TOL {
        return Ok(LidskiiRegime::IndexCurve);
    }
    Err(Error::Hypothesis(format!(
        "r = {r} exceeds 2/3 and 1/r − 1 − |1/2 − 1/p| = {gap:.6} ≠ 0 at p = {p}; trace = eigenvalue sum is not licensed"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summability {
    pub r: f64,
    pub s_exponent: f64,
    /// `Σ |λ_n|^s`.
    pub summability_value: f64,
    pub nr_bound: f64,
    /// `n_r^s`.
    pub bound_power: f64,
    pub pass: bool,
    /// `(n_r^s − Σ|λ|^s) / n_r^s`.
    pub relative_slack: f64,
}

/// `Σ |λ_n|^s ≤ n_r^s` with `s = 2r/(2 − r)`, allowing `1e-9` relative slack.
pub fn summability_check(eigs: &[C64], r: f64, nr_bound: f64) -> Summability {
    let s = 2.0 * r / (2.0 - r);
    let powers: Vec<f64> = eigs
        .iter()
        .map(|z| z.norm())
        .filter(|&m| m > 0.0)
        .map(|m| m.powf(s))
        .collect();
    let value = pairwise(&powers);
    let bound = nr_bound.powf(s);
    let pass = value <= bound * (1.0 + 1e-9);
    let relative_slack = if bound > 0.0 {
        (bound - value) / bound
    } else if value == 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    Summability {
        r,
        s_exponent: s,
        summability_value: value,
        nr_bound,
        bound_power: bound,
        pass,
        relative_slack,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub group: GroupId,
    pub cutoff: f64,
    pub size: usize,
    pub query: CriterionQuery,
    pub regime: LidskiiRegime,
    pub criterion: CriterionInfo,
    pub criterion_verdict: Verdict,
    pub eigenvalues: Vec<C64>,
    pub trace_symbol: C64,
    pub trace_kernel: C64,
    pub trace_eigsum: C64,
    pub matrix_trace: C64,
    /// `|trace_symbol − trace_eigsum|`.
    pub lidskii_residual: f64,
    pub lidskii_residual_relative: f64,
    /// `|trace_symbol − trace_kernel|`.
    pub kernel_residual: f64,
    pub s_exponent: f64,
    pub summability_value: f64,
    pub nr_upper_bound: f64,
    pub summability_pass: bool,
    /// `|Tr| / max |λ|`, a lower bound for the number of eigenvalues.
    pub eigenvalue_count_bound: Option<f64>,
    pub warnings: Vec<String>,
}

fn relative(diff: f64, reference: f64) -> f64 {
    diff / reference.max(1e-12)
}

/// Three-way trace comparison on the finite section at `cutoff`, after
/// checking that `(r, p)` with `p = p₁ = p₂` licenses the identity.
pub fn lidskii_verify(sigma: &Symbol, q: &CriterionQuery, cutoff: f64) -> Result<SpectralReport> {
    if q.p1 != q.p2 {
        return Err(Error::Hypothesis(format!(
            "trace = eigenvalue sum is stated on a single L^p; got p1 = {}, p2 = {}",
            q.p1, q.p2
        )));
    }
    let regime = lidskii_regime(q.r, q.p1)?;
    let criterion = ensure_not_divergent(sigma, q, cutoff)?;
    let truncated = sigma.with_cutoff(cutoff)?;
    let trace_symbol = trace_symbol_unchecked(&truncated, cutoff)?;
    let rule = kernel_rule(&truncated);
    let trace_kernel = integrate_values(&rule, &kernel_diagonal_on_rule(&truncated, &rule)?)?;
    let op = assemble_matrix(sigma, cutoff)?;
    let et = trace_eigsum(&op)?;
    let nr = nr_upper_bound(sigma, q, cutoff)?;
    let summ = summability_check(&et.eigenvalues, q.r, nr.value);
    let lidskii_residual = (trace_symbol - et.eigsum).norm();
    let top = et.eigenvalues.first().map_or(0.0, |z| z.norm());
    Ok(SpectralReport {
        group: sigma.group(),
        cutoff,
        size: op.size(),
        query: *q,
        regime,
        criterion: criterion.criterion,
        criterion_verdict: criterion.verdict,
        trace_symbol,
        trace_kernel,
        trace_eigsum: et.eigsum,
        matrix_trace: et.matrix_trace,
        lidskii_residual,
        lidskii_residual_relative: relative(lidskii_residual, trace_symbol.norm()),
        kernel_residual: (trace_symbol - trace_kernel).norm(),
        s_exponent: summ.s_exponent,
        summability_value: summ.summability_value,
        nr_upper_bound: nr.value,
        summability_pass: summ.pass,
        eigenvalue_count_bound: (top > 0.0).then(|| trace_symbol.norm() / top),
        eigenvalues: et.eigenvalues,
        warnings: op.warnings.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub group: GroupId,
    pub t: f64,
    pub cutoff: f64,
    pub irreps: usize,
    /// `Σ_{⟨ξ⟩≤Λ} d_ξ² e^{−tλ²}`.
    pub value: f64,
    /// Rigorous upper bound on the omitted terms; infinite when the bound
    /// does not apply at this cutoff.
    pub tail_bound: f64,
}

/// Truncated heat trace with a bound on what the truncation left out.
pub fn heat_trace(group: GroupId, t: f64, cutoff: f64) -> Result<HeatTrace> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("heat time must be positive, got {t}")));
    }
    let duals = enumerate_dual(group, cutoff)?;
    let terms: Vec<f64> = duals
        .iter()
        .map(|ir| (ir.dim * ir.dim) as f64 * (-t * ir.lambda_sq).exp())
        .collect();
    let tail_bound = match group {
        GroupId::Torus(n) => torus_heat_tail(n, t, cutoff),
        GroupId::SU2 | GroupId::SO3 => {
            let top = duals.last().map_or(0, |ir| ir.level().twice());
            spin_heat_tail(group, t, top)
        }
    };
    Ok(HeatTrace {
        group,
        t,
        cutoff,
        irreps: duals.len(),
        value: pairwise(&terms),
        tail_bound,
    })
}

/// Terms `f(ℓ) = (2ℓ+1)² e^{−tℓ(ℓ+1)}` past the last included level. The
/// ratio of consecutive terms decreases in `ℓ`, so once it is below one the
/// tail is dominated by a geometric series.
fn spin_heat_tail(group: GroupId, t: f64, top_twice: u32) -> f64 {
    let step = if group == GroupId::SO3 { 2 } else { 1 };
    let f = |twice: u32| {
        let l = twice as f64 / 2.0;
        (2.0 * l + 1.0).powi(2) * (-t * l * (l + 1.0)).exp()
    };
    let first = top_twice + step;
    let ratio = f(first + step) / f(first);
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        f(first) / (1.0 - ratio)
    }
}

/// The cube `|k|_∞ ≤ K` with `K = ⌊R/√n⌋` lies inside the included ball, so
/// the omitted mass is at most `(θ_K + τ_K)^n − θ_K^n` where `θ_K` is the
/// one-dimensional sum over `|j| ≤ K` and `τ_K` bounds the rest.
fn torus_heat_tail(n: u32, t: f64, cutoff: f64) -> f64 {
    let a = 4.0 * std::f64::consts::PI.powi(2) * t;
    let radius = ((cutoff * cutoff - 1.0).max(0.0) / (4.0 * std::f64::consts::PI.powi(2))).sqrt();
    let k = (radius / (n as f64).sqrt() + 1e-12).floor() as i64;
    let theta: f64 = 1.0 + 2.0 * (1..=k).map(|j| (-a * (j * j) as f64).exp()).sum::<f64>();
    let next = (k + 1) as f64;
    let ratio = (-a * (2.0 * next + 1.0)).exp();
    let tau = 2.0 * (-a * next * next).exp() / (1.0 - ratio);
    (theta + tau).powi(n as i32) - theta.powi(n as i32)
}

/// Cutoff `Λ` that includes exactly the irreps of level at most `lmax`: spin
/// `ℓ ≤ lmax`, or `|k| ≤ lmax` on a torus.
pub fn cutoff_for_level(group: GroupId, lmax: f64) -> Result<f64> {
    if !(lmax >= 0.0 && lmax.is_finite()) {
        return Err(Error::domain(format!("level must be a finite value ≥ 0, got {lmax}")));
    }
    let lambda_sq = match group {
        GroupId::Torus(_) => 4.0 * std::f64::consts::PI.powi(2) * lmax * lmax,
        GroupId::SU2 | GroupId::SO3 => lmax * (lmax + 1.0),
    };
    Ok((1.0 + lambda_sq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{Block, Blocks};
    use nalgebra::DMatrix;

    fn heat(group: GroupId, t: f64, cutoff: f64) -> Symbol {
        Symbol::invariant(
            group,
            cutoff,
            Blocks::formula(move |ir| Block::Scalar {
                value: C64::new((-t * ir.lambda_sq).exp(), 0.0),
                dim: ir.dim,
            }),
        )
        .unwrap()
    }

    #[test]
    fn heat_block_spectrum_on_su2() {
        let t = 0.7;
        let cutoff = cutoff_for_level(GroupId::SU2, 1.0).unwrap();
        let op = assemble_matrix(&heat(GroupId::SU2, t, cutoff), cutoff).unwrap();
        assert_eq!(op.size(), 14);
        let e = eigenvalues_truncated(&op).unwrap();
        let mut want = vec![1.0];
        want.extend([(-0.75 * t).exp(); 4]);
        want.extend([(-2.0 * t).exp(); 9]);
        for (g, w) in e.iter().zip(&want) {
            assert!((g - C64::new(*w, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sorting_rule() {
        let mut v = vec![C64::new(-1.0, 0.0), C64::new(0.0, 2.0), C64::new(1.0, 0.0), C64::new(0.0, -1.0)];
        sort_spectrum(&mut v);
        assert_eq!(v[0], C64::new(0.0, 2.0));
        assert_eq!(v[1], C64::new(0.0, -1.0));
        assert_eq!(v[2], C64::new(1.0, 0.0));
        assert_eq!(v[3], C64::new(-1.0, 0.0));
    }

    #[test]
    fn heat_trace_su2_direct() {
        let oracle: f64 = (0..8)
            .map(|twice| {
                let l = twice as f64 / 2.0;
                (2.0 * l + 1.0).powi(2) * (-l * (l + 1.0)).exp()
            })
            .sum();
        let h = heat_trace(GroupId::SU2, 1.0, cutoff_for_level(GroupId::SU2, 3.5).unwrap()).unwrap();
        assert_eq!(h.irreps, 8);
        assert!((h.value - oracle).abs() < 1e-14);
        assert!((h.value - 4.5518).abs() < 1e-4, "{}", h.value);
        // First omitted term is 81 e^{-20} ≈ 1.7e-7.
        assert!(h.tail_bound > 1.6e-7 && h.tail_bound < 2e-7, "{}", h.tail_bound);
        let big = heat_trace(GroupId::SU2, 1.0, 1e3).unwrap();
        assert!(big.value - h.value <= h.tail_bound);
    }

    #[test]
    fn large_time_leaves_trivial_rep() {
        for g in [GroupId::Torus(2), GroupId::SU2, GroupId::SO3] {
            let h = heat_trace(g, 60.0, 50.0).unwrap();
            assert!((h.value - 1.0).abs() < 1e-12);
        }
        assert!(heat_trace(GroupId::SU2, 0.0, 5.0).is_err());
    }

    #[test]
    fn torus_tail_bound_covers_gap() {
        let small = heat_trace(GroupId::Torus(2), 0.02, 20.0).unwrap();
        let big = heat_trace(GroupId::Torus(2), 0.02, 400.0).unwrap();
        assert!(big.value - small.value <= small.tail_bound);
        assert!(small.tail_bound.is_finite());
    }

    #[test]
    fn regimes() {
        assert_eq!(lidskii_regime(2.0 / 3.0, 4.0).unwrap(), LidskiiRegime::SmallIndex);
        assert_eq!(lidskii_regime(0.8, 4.0).unwrap(), LidskiiRegime::IndexCurve);
        assert_eq!(lidskii_regime(0.8, 4.0 / 3.0).unwrap(), LidskiiRegime::IndexCurve);
        assert!(matches!(lidskii_regime(0.8, 2.0), Err(Error::Hypothesis(_))));
        assert_eq!(lidskii_regime(1.0, 2.0).unwrap(), LidskiiRegime::IndexCurve);
    }

    #[test]
    fn summability_exponents() {
        let e = [C64::new(0.5, 0.0), C64::new(0.0, 0.25)];
        assert_eq!(summability_check(&e, 1.0, 1.0).s_exponent, 2.0);
        assert!((summability_check(&e, 2.0 / 3.0, 1.0).s_exponent - 1.0).abs() < 1e-15);
        assert!((summability_check(&e, 0.5, 1.0).s_exponent - 2.0 / 3.0).abs() < 1e-15);
        assert!(summability_check(&[], 1.0, 0.0).pass);
        assert!(!summability_check(&e, 1.0, 0.1).pass);
    }

    #[test]
    fn heat_lidskii_small_index() {
        let cutoff = cutoff_for_level(GroupId::SU2, 4.0).unwrap();
        let rep = lidskii_verify(&heat(GroupId::SU2, 1.0, cutoff), &CriterionQuery::new(2.0 / 3.0, 4.0, 4.0).unwrap(), cutoff)
            .unwrap();
        assert_eq!(rep.regime, LidskiiRegime::SmallIndex);
        assert!(rep.lidskii_residual < 1e-8);
        assert!(rep.kernel_residual < 1e-10);
        assert!(rep.summability_pass);
    }

    #[test]
    fn dirichlet_kernel_trace() {
        let k = 5.0;
        let cutoff = cutoff_for_level(GroupId::Torus(1), k).unwrap();
        // The projection onto |k| ≤ K: identity blocks there, zero beyond.
        let table = enumerate_dual(GroupId::Torus(1), cutoff)
            .unwrap()
            .into_iter()
            .map(|ir| (ir, Block::Scalar { value: C64::new(1.0, 0.0), dim: 1 }))
            .collect();
        let id = Symbol::invariant(GroupId::Torus(1), cutoff, Blocks::table(table)).unwrap();
        let rule = QuadratureRule::new(GroupId::Torus(1), Level::integer(3));
        let tr = trace_kernel_diagonal(&id, &rule).unwrap();
        assert!((tr - C64::new(11.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn nilpotent_block_trace_zero() {
        let ir = Irrep::spin(GroupId::SU2, Level::from_twice(1)).unwrap();
        let z = C64::new(0.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[z, C64::new(1.0, 0.0), z, z]);
        let s = Symbol::invariant_table(GroupId::SU2, 2.0, vec![(ir, m)]).unwrap();
        let op = assemble_matrix(&s, 2.0).unwrap();
        let et = trace_eigsum(&op).unwrap();
        assert!(et.eigsum.norm() < 1e-15);
    }
}
