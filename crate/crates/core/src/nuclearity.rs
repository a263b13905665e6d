//! Symbolic r-nuclearity criteria as partial-sum series over the dual, with
//! a numerical convergence verdict, and an explicit upper bound for the
//! r-nuclear quasi-norm of a truncated operator.
//!
//! Verdict rule, applied to partial sums `S(Λ_k)` on the schedule:
//!
//! 1. `ConvergedNumerically` if `S = 0` or the last increment is below
//!    `1e-6 · S`.
//! 2. Otherwise the increments `ΔS_k` over the top decade of the schedule are
//!    regressed as `log ΔS_k ≈ b log Λ_k + c`. `ConvergedNumerically` if
//!    `b ≤ -0.1` with `R² ≥ 0.99`: the tail decays like a power of `Λ`.
//! 3. `DivergenceDetected` if the increments themselves grow like `Λ^b`
//!    with `b > 0.05` and `R² > 0.999`, i.e. `S − S₀ ≈ c·Λ^b` for some
//!    offset `S₀`; or if `b > -0.05` and the partial sums over the same
//!    window fit `c·log Λ` or `c·Λ^β` (positive slope) with `R² > 0.999`.
//! 4. `Inconclusive` otherwise.
//!
//! Reports also carry the log-log slope of the individual terms against
//! `⟨ξ⟩` over the top decade.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fourier::GridFunction;
use crate::group::{enumerate_dual, GroupId, Irrep, IrrepLabel, Level, QuadratureRule};
use crate::norms::lp_norm_x;
use crate::quantize::{resample, Symbol, SymbolKind};
use crate::sum::{cumulative, pairwise};
use crate::{Error, Result};

const REL_INCREMENT_TOL: f64 = 1e-6;
const DECAY_SLOPE: f64 = -0.1;
const DECAY_R2: f64 = 0.99;
const FLAT_SLOPE: f64 = -0.05;
const GROWTH_R2: f64 = 0.999;

/// Exponents `r`, `p₁`, `p₂` of an `L^{p₁} → L^{p₂}` r-nuclearity question.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionQuery {
    pub r: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CriterionQuery {
    pub fn new(r: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::domain(format!(
                "r must lie in (0, 1]; for r > 1 the r-nuclear class only contains the zero operator (got {r})"
            )));
        }
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::domain(format!("{name} must be a finite value ≥ 1, got {p}")));
            }
        }
        Ok(CriterionQuery { r, p1, p2 })
    }

    /// `L² → L²` query.
    pub fn l2(r: f64) -> Result<Self> {
        Self::new(r, 2.0, 2.0)
    }

    /// `p̃₁ = min(2, p₁)`.
    pub fn p1_tilde(&self) -> f64 {
        self.p1.min(2.0)
    }

    /// `p̃₂ = max(2, p₂)`.
    pub fn p2_tilde(&self) -> f64 {
        self.p2.max(2.0)
    }

    /// Conjugate exponent of `p₁` (infinite for `p₁ = 1`).
    pub fn q1(&self) -> f64 {
        if self.p1 == 1.0 {
            f64::INFINITY
        } else {
            self.p1 / (self.p1 - 1.0)
        }
    }

    /// `q̃₁ = max(2, q₁)`, so `1/p̃₁ + 1/q̃₁ = 1`.
    pub fn q1_tilde(&self) -> f64 {
        self.q1().max(2.0)
    }

    /// Eigenvalue summability exponent `s = 2r/(2−r)`.
    pub fn summability_exponent(&self) -> f64 {
        2.0 * self.r / (2.0 - self.r)
    }
}

/// Increasing list of cutoffs at which partial sums are recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaSchedule(Vec<f64>);

impl TryFrom<Vec<f64>> for LambdaSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        LambdaSchedule::new(v)
    }
}

impl From<LambdaSchedule> for Vec<f64> {
    fn from(s: LambdaSchedule) -> Self {
        s.0
    }
}

impl LambdaSchedule {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("schedule is empty"));
        }
        if points.iter().any(|&p| !(p >= 1.0) || !p.is_finite()) {
            return Err(Error::domain("schedule cutoffs must be finite and ≥ 1"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("schedule must be strictly increasing"));
        }
        Ok(LambdaSchedule(points))
    }

    /// `2^from, …, 2^to`.
    pub fn dyadic(from: u32, to: u32) -> Result<Self> {
        Self::new((from..=to).map(|k| 2f64.powi(k as i32)).collect())
    }

    /// Dyadic schedule sized for convergence verdicts on `group`.
    pub fn deep(group: GroupId) -> Self {
        let top = match group {
            GroupId::Torus(1) => 22,
            GroupId::Torus(n) => (22 / n).max(3),
            GroupId::SU2 | GroupId::SO3 => 12,
        };
        Self::dyadic(1, top).expect("valid dyadic schedule")
    }

    /// This schedule with `cutoff` appended when it lies beyond the end.
    pub fn reaching(&self, cutoff: f64) -> Self {
        let mut v = self.0.clone();
        if cutoff > self.max() {
            v.push(cutoff);
        }
        LambdaSchedule(v)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        *self.0.last().expect("non-empty schedule")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConvergedNumerically,
    DivergenceDetected,
    Inconclusive,
}

/// Whether convergence of the series is sufficient, or equivalent, for the
/// property being tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Logic {
    Sufficient,
    Equivalent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionInfo {
    pub id: String,
    pub statement: String,
    pub logic: Logic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub label: IrrepLabel,
    pub dim: usize,
    pub weight: f64,
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub cutoff: f64,
    pub irreps: usize,
    pub sum: f64,
}

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl Fit {
    pub fn new(xs: &[f64], ys: &[f64]) -> Option<Fit> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return None;
        }
        let nf = n as f64;
        let mx = xs.iter().sum::<f64>() / nf;
        let my = ys.iter().sum::<f64>() / nf;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2))
            .sum();
        let r_squared = if ss_tot == 0.0 {
            if ss_res == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - ss_res / ss_tot
        };
        Some(Fit {
            slope,
            intercept,
            r_squared,
            points: n,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `ΔS / S` at the last schedule point.
    pub last_relative_increment: Option<f64>,
    /// `log ΔS_k` against `log Λ_k` over the window.
    pub increment_fit: Option<Fit>,
    /// `S_k` against `log Λ_k`.
    pub log_growth_fit: Option<Fit>,
    /// `log S_k` against `log Λ_k`.
    pub power_growth_fit: Option<Fit>,
    /// Lower end of the fitting window.
    pub window_from: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: CriterionInfo,
    pub group: GroupId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<CriterionQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    pub terms: Vec<TermRow>,
    pub partial_sums: Vec<PartialSum>,
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
    pub fitted_tail_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr_upper_bound: Option<f64>,
}

impl CriterionReport {
    pub fn final_sum(&self) -> f64 {
        self.partial_sums.last().map_or(0.0, |p| p.sum)
    }

    /// One row per irrep: `label,dim,weight,term`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "dim", "weight", "term"])
            .map_err(csv_err)?;
        for t in &self.terms {
            w.write_record([
                t.label.to_string(),
                t.dim.to_string(),
                format!("{:e}", t.weight),
                format!("{:e}", t.term),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Evaluates `term` on every irrep up to the end of the schedule and records
/// partial sums.
fn run_series<F>(group: GroupId, schedule: &LambdaSchedule, term: F) -> Result<(Vec<TermRow>, Vec<PartialSum>)>
where
    F: Fn(&Irrep) -> Result<f64> + Sync,
{
    let duals = enumerate_dual(group, schedule.max())?;
    let values: Vec<f64> = duals
        .par_iter()
        .map(|ir| {
            let t = term(ir)?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Numeric(format!("criterion term at {} is {t}", ir.label)));
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let running = cumulative(&values);
    let partial_sums = schedule
        .points()
        .iter()
        .map(|&cutoff| {
            let bound = cutoff * (1.0 + 1e-12);
            let count = duals.partition_point(|ir| ir.weight <= bound);
            PartialSum {
                cutoff,
                irreps: count,
                sum: if count == 0 { 0.0 } else { running[count - 1] },
            }
        })
        .collect();
    let terms = duals
        .into_iter()
        .zip(values)
        .map(|(ir, term)| TermRow {
            label: ir.label,
            dim: ir.dim,
            weight: ir.weight,
            term,
        })
        .collect();
    Ok((terms, partial_sums))
}

/// Applies the verdict rule to recorded partial sums.
pub fn assess(partial_sums: &[PartialSum]) -> (Verdict, Diagnostics) {
    let mut diag = Diagnostics::default();
    let Some(last) = partial_sums.last() else {
        return (Verdict::Inconclusive, diag);
    };
    if last.sum == 0.0 {
        return (Verdict::ConvergedNumerically, diag);
    }
    if partial_sums.len() >= 2 {
        let prev = partial_sums[partial_sums.len() - 2].sum;
        let rel = (last.sum - prev) / last.sum;
        diag.last_relative_increment = Some(rel);
        if rel < REL_INCREMENT_TOL {
            return (Verdict::ConvergedNumerically, diag);
        }
    }
    // Window: points with Λ ≥ Λ_max/10, widened to at least three increments.
    let n = partial_sums.len();
    let mut start = partial_sums.partition_point(|p| p.cutoff < last.cutoff / 10.0);
    start = start.min(n.saturating_sub(3)).max(1);
    if n < 4 && n - start < 2 {
        return (Verdict::Inconclusive, diag);
    }
    diag.window_from = Some(partial_sums[start].cutoff);
    let window = &partial_sums[start..];
    let ln_cut: Vec<f64> = window.iter().map(|p| p.cutoff.ln()).collect();

    let increments: Vec<f64> = (start..n)
        .map(|k| partial_sums[k].sum - partial_sums[k - 1].sum)
        .collect();
    let inc_fit = if increments.iter().all(|&d| d > 0.0) {
        let ys: Vec<f64> = increments.iter().map(|d| d.ln()).collect();
        Fit::new(&ln_cut, &ys)
    } else {
        None
    };
    diag.increment_fit = inc_fit;
    let sums: Vec<f64> = window.iter().map(|p| p.sum).collect();
    diag.log_growth_fit = Fit::new(&ln_cut, &sums);
    if sums.iter().all(|&s| s > 0.0) {
        let ys: Vec<f64> = sums.iter().map(|s| s.ln()).collect();
        diag.power_growth_fit = Fit::new(&ln_cut, &ys);
    }
    if inc_fit.is_some_and(|f| f.slope <= DECAY_SLOPE && f.r_squared >= DECAY_R2) {
        return (Verdict::ConvergedNumerically, diag);
    }
    if inc_fit.is_some_and(|f| f.slope > -FLAT_SLOPE && f.r_squared > GROWTH_R2) {
        return (Verdict::DivergenceDetected, diag);
    }
    let flat_or_growing = inc_fit.is_some_and(|f| f.slope > FLAT_SLOPE);
    let grows = |f: Option<Fit>| f.is_some_and(|f| f.slope > 0.0 && f.r_squared > GROWTH_R2);
    if flat_or_growing && (grows(diag.log_growth_fit) || grows(diag.power_growth_fit)) {
        return (Verdict::DivergenceDetected, diag);
    }
    (Verdict::Inconclusive, diag)
}

/// Log-log slope of positive terms against `⟨ξ⟩` over the top decade.
pub fn tail_exponent(terms: &[TermRow]) -> Option<f64> {
    let top = terms.iter().map(|t| t.weight).fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .filter(|t| t.weight >= top / 10.0 && t.term > 0.0 && t.weight > 1.0)
        .map(|t| (t.weight.ln(), t.term.ln()))
        .unzip();
    Fit::new(&xs, &ys).map(|f| f.slope)
}

fn finish(
    criterion: CriterionInfo,
    group: GroupId,
    query: Option<CriterionQuery>,
    branch: Option<String>,
    (terms, partial_sums): (Vec<TermRow>, Vec<PartialSum>),
) -> CriterionReport {
    let (verdict, diagnostics) = assess(&partial_sums);
    let fitted_tail_exponent = tail_exponent(&terms);
    CriterionReport {
        criterion,
        group,
        query,
        branch,
        terms,
        partial_sums,
        verdict,
        diagnostics,
        fitted_tail_exponent,
        nr_upper_bound: None,
    }
}

fn info(id: &str, statement: &str, logic: Logic, note: Option<&str>) -> CriterionInfo {
    CriterionInfo {
        id: id.into(),
        statement: statement.into(),
        logic,
        note: note.map(Into::into),
    }
}

fn invariant_l2_info() -> CriterionInfo {
    info(
        "invariant-l2",
        "Σ d_ξ ‖σ(ξ)‖^r_{S_r} < ∞ implies Op(σ) is r-nuclear on L²(G)",
        Logic::Sufficient,
        Some("for invariant operators on L² the condition is also known to be necessary; not verified independently here"),
    )
}

/// `Σ d_ξ ‖σ(ξ)‖^r_{S_r}`.
pub fn criterion_invariant_l2(sigma: &Symbol, r: f64, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    let q = CriterionQuery::l2(r)?;
    sigma.invariant_blocks()?;
    let series = run_series(sigma.group(), schedule, |ir| {
        Ok(ir.dim as f64 * sigma.block(ir)?.schatten_power(r)?)
    })?;
    Ok(finish(invariant_l2_info(), sigma.group(), Some(q), None, series))
}

/// Invariant `L^{p₁} → L^{p₂}` criterion, branch chosen by `p₂ ≤ 2`.
pub fn criterion_invariant_lp(sigma: &Symbol, q: &CriterionQuery, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    sigma.invariant_blocks()?;
    let r = q.r;
    let inv_p1 = 1.0 / q.p1_tilde();
    let (branch, series) = if q.p2 <= 2.0 {
        let series = run_series(sigma.group(), schedule, |ir| {
            let d = ir.dim as f64;
            Ok(d.powf(1.0 + (inv_p1 - 0.5) * r) * sigma.block(ir)?.schatten_power(r)?)
        })?;
        ("p2 ≤ 2", series)
    } else {
        let p2 = q.p2;
        let inner = 2.0 * r / p2;
        let series = run_series(sigma.group(), schedule, |ir| {
            let d = ir.dim as f64;
            let b = sigma.block(ir)?;
            let opinf = b.opinf_transpose();
            let s = b.schatten_power(inner)?;
            if s == 0.0 {
                return Ok(0.0);
            }
            Ok(d.powf(1.0 + (inv_p1 - 1.0 / p2) * r) * opinf.powf((p2 - 2.0) * r / p2) * s)
        })?;
        ("p2 > 2", series)
    };
    let statement = if q.p2 <= 2.0 {
        "Σ d_ξ^{1+(1/p̃₁−1/2)r} ‖σ(ξ)‖^r_{S_r} < ∞ implies Op(σ) is r-nuclear from L^{p₁} to L^{p₂}"
    } else {
        "Σ d_ξ^{1+(1/p̃₁−1/p₂)r} ‖σ(ξ)^t‖^{(p₂−2)r/p₂}_{op(ℓ∞,ℓ∞)} ‖σ(ξ)‖^{2r/p₂}_{S_{2r/p₂}} < ∞ implies Op(σ) is r-nuclear from L^{p₁} to L^{p₂}"
    };
    Ok(finish(
        info("invariant-lp", statement, Logic::Sufficient, None),
        sigma.group(),
        Some(*q),
        Some(branch.into()),
        series,
    ))
}

/// `Σ d_ξ^{1+(1/p̃₁−1/p̃₂)r} Σ_j |σ(ξ)_jj|^r` for diagonal symbols.
pub fn criterion_diagonal(sigma: &Symbol, q: &CriterionQuery, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    sigma.invariant_blocks()?;
    let r = q.r;
    let exponent = 1.0 + (1.0 / q.p1_tilde() - 1.0 / q.p2_tilde()) * r;
    let series = run_series(sigma.group(), schedule, |ir| {
        let b = sigma.block(ir)?;
        let diag = b
            .diagonal()
            .ok_or_else(|| Error::domain(format!("symbol is not diagonal at {}", ir.label)))?;
        let powers: Vec<f64> = diag
            .iter()
            .map(|z| z.norm())
            .filter(|&a| a > 0.0)
            .map(|a| a.powf(r))
            .collect();
        Ok((ir.dim as f64).powf(exponent) * pairwise(&powers))
    })?;
    Ok(finish(
        info(
            "diagonal-lp",
            "Σ d_ξ^{1+(1/p̃₁−1/p̃₂)r} Σ_j |σ(ξ)_jj|^r < ∞ implies Op(σ) is r-nuclear from L^{p₁} to L^{p₂}",
            Logic::Sufficient,
            None,
        ),
        sigma.group(),
        Some(*q),
        None,
        series,
    ))
}

/// `Σ d_ξ^{2+r/p̃₁} ‖‖σ(·,ξ)^t‖_{op(ℓ∞,ℓ∞)}‖^r_{L^{p₂}}` for any symbol.
pub fn criterion_general(sigma: &Symbol, q: &CriterionQuery, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    let r = q.r;
    let exponent = 2.0 + r / q.p1_tilde();
    let g_norm = match sigma.kind() {
        SymbolKind::Separable { g, .. } => {
            let abs: Vec<f64> = g.values().iter().map(|z| z.norm()).collect();
            Some(lp_norm_x(&abs, q.p2, g.rule())?)
        }
        _ => None,
    };
    let series = run_series(sigma.group(), schedule, |ir| {
        let d = (ir.dim as f64).powf(exponent);
        let x_norm = match sigma.kind() {
            SymbolKind::Invariant(b) | SymbolKind::Diagonal(b) => b.get(ir).opinf_transpose(),
            SymbolKind::Separable { a, .. } => g_norm.unwrap_or(0.0) * a.get(ir).opinf_transpose(),
            SymbolKind::General(s) => match s.get(ir) {
                Some(samples) => {
                    let v: Vec<f64> = samples.iter().map(crate::norms::opinf_norm_transpose).collect();
                    lp_norm_x(&v, q.p2, &s.rule)?
                }
                None => 0.0,
            },
        };
        Ok(if x_norm == 0.0 { 0.0 } else { d * x_norm.powf(r) })
    })?;
    Ok(finish(
        info(
            "general-lp",
            "Σ d_ξ^{2+r/p̃₁} ‖‖σ(x,ξ)^t‖_{op(ℓ∞,ℓ∞)}‖^r_{L^{p₂}(G)} < ∞ implies Op(σ) is r-nuclear from L^{p₁} to L^{p₂}",
            Logic::Sufficient,
            None,
        ),
        sigma.group(),
        Some(*q),
        None,
        series,
    ))
}

/// `Σ d_ξ² ⟨ξ⟩^{-s}`, finite exactly when `s > dim G`.
pub fn dim_sum_convergence(group: GroupId, s: f64, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("exponent must be positive, got {s}")));
    }
    let series = run_series(group, schedule, |ir| {
        let d = ir.dim as f64;
        Ok(d * d * ir.weight.powf(-s))
    })?;
    Ok(finish(
        info(
            "dimension-sum",
            "Σ d_ξ² ⟨ξ⟩^{-s} < ∞ if and only if s > dim G",
            Logic::Equivalent,
            None,
        ),
        group,
        None,
        None,
        series,
    ))
}

/// The criterion that applies to the symbol's kind: invariant (L² or L^p),
/// diagonal, or general for `x`-dependent symbols.
pub fn matching_criterion(sigma: &Symbol, q: &CriterionQuery, schedule: &LambdaSchedule) -> Result<CriterionReport> {
    match sigma.kind() {
        SymbolKind::Invariant(_) if q.p1 == 2.0 && q.p2 == 2.0 => criterion_invariant_l2(sigma, q.r, schedule),
        SymbolKind::Invariant(_) => criterion_invariant_lp(sigma, q, schedule),
        SymbolKind::Diagonal(_) => criterion_diagonal(sigma, q, schedule),
        SymbolKind::Separable { .. } | SymbolKind::General(_) => criterion_general(sigma, q, schedule),
    }
}

/// Fails with [`Error::Divergent`] when the matching criterion diverges on
/// the deep schedule (extended to `cutoff`).
pub fn ensure_not_divergent(sigma: &Symbol, q: &CriterionQuery, cutoff: f64) -> Result<CriterionReport> {
    let schedule = LambdaSchedule::deep(sigma.group()).reaching(cutoff);
    let report = matching_criterion(sigma, q, &schedule)?;
    if report.verdict == Verdict::DivergenceDetected {
        return Err(Error::Divergent(format!(
            "{} series for the {} symbol grows without bound",
            report.criterion.id,
            sigma.kind_name()
        )));
    }
    Ok(report)
}

/// How the bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRoute {
    /// `g = d s_j (ξU)_ij`, `h = conj((ξV)_ij)` from `σ(ξ) = U S V*`, with
    /// coefficient norms bounded by `d^{-1/max(2,p)}`.
    SingularValue,
    /// `g = d (ξσ)_ij`, `h = conj(ξ_ij)` with norms computed by quadrature.
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NrBound {
    pub value: f64,
    pub cutoff: f64,
    pub route: BoundRoute,
    pub criterion_verdict: Verdict,
}

/// Upper bound for the r-nuclear quasi-norm of `Op(σ)` truncated at
/// `cutoff`, from an explicit decomposition `Σ g_k ⊗ h_k` of its kernel.
///
/// Refused with [`Error::Divergent`] when the matching criterion diverges.
pub fn nr_upper_bound(sigma: &Symbol, q: &CriterionQuery, cutoff: f64) -> Result<NrBound> {
    let report = ensure_not_divergent(sigma, q, cutoff)?;
    let duals = enumerate_dual(sigma.group(), cutoff)?;
    let r = q.r;
    let (sum, route) = match sigma.kind() {
        SymbolKind::Invariant(_) | SymbolKind::Diagonal(_) => {
            let exponent = 1.0 + (1.0 / q.p1_tilde() - 1.0 / q.p2_tilde()) * r;
            let terms: Vec<f64> = duals
                .par_iter()
                .map(|ir| Ok((ir.dim as f64).powf(exponent) * sigma.block(ir)?.schatten_power(r)?))
                .collect::<Result<_>>()?;
            (pairwise(&terms), BoundRoute::SingularValue)
        }
        SymbolKind::Separable { .. } | SymbolKind::General(_) => {
            (quadrature_bound_sum(sigma, q, &duals)?, BoundRoute::Quadrature)
        }
    };
    Ok(NrBound {
        value: sum.powf(1.0 / r),
        cutoff,
        route,
        criterion_verdict: report.verdict,
    })
}

fn quadrature_bound_sum(sigma: &Symbol, q: &CriterionQuery, duals: &[Irrep]) -> Result<f64> {
    let top = duals.iter().map(|ir| ir.level()).max().unwrap_or(Level::ZERO);
    let rule: Arc<QuadratureRule> = match sigma.kind() {
        SymbolKind::Separable { g, .. } => {
            let need = g.band_limit().unwrap_or(Level::ZERO).saturating_add(top);
            if g.rule().level() >= need {
                g.rule().clone()
            } else {
                let rule = Arc::new(QuadratureRule::new(sigma.group(), need));
                let _: GridFunction = resample(g, rule.clone())?;
                rule
            }
        }
        SymbolKind::General(s) => s.rule.clone(),
        _ => unreachable!("x-independent symbols use the singular-value route"),
    };
    let r = q.r;
    let (p2, q1) = (q.p2, q.q1());
    let mut parts = Vec::with_capacity(duals.len());
    for ir in duals {
        let table = rule.rep_values(ir)?;
        let d = ir.dim;
        let products: Vec<_> = (0..rule.len())
            .into_par_iter()
            .map(|n| Ok(sigma.value_at_node(&rule, n, ir)?.left_mul(&table[n])))
            .collect::<Result<_>>()?;
        let cells: Vec<f64> = (0..d * d)
            .into_par_iter()
            .map(|cell| {
                let (i, j) = (cell % d, cell / d);
                let g: Vec<f64> = products.iter().map(|p| d as f64 * p[(i, j)].norm()).collect();
                let h: Vec<f64> = table.iter().map(|m| m[(i, j)].norm()).collect();
                let gn = lp_norm_x(&g, p2, &rule)?;
                let hn = lp_norm_x(&h, q1, &rule)?;
                Ok(if gn == 0.0 { 0.0 } else { (gn * hn).powf(r) })
            })
            .collect::<Result<_>>()?;
        parts.push(pairwise(&cells));
    }
    Ok(pairwise(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{Block, Blocks};
    use crate::C64;

    fn scalar_symbol(group: GroupId, f: impl Fn(&Irrep) -> f64 + Send + Sync + 'static) -> Symbol {
        Symbol::invariant(
            group,
            f64::INFINITY,
            Blocks::formula(move |ir| Block::Scalar {
                value: C64::new(f(ir), 0.0),
                dim: ir.dim,
            }),
        )
        .unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(CriterionQuery::new(1.2, 2.0, 2.0).is_err());
        assert!(CriterionQuery::new(0.0, 2.0, 2.0).is_err());
        assert!(CriterionQuery::new(1.0, 0.5, 2.0).is_err());
        let q = CriterionQuery::new(0.5, 1.0, 4.0).unwrap();
        assert_eq!(q.p1_tilde(), 1.0);
        assert_eq!(q.p2_tilde(), 4.0);
        assert_eq!(q.q1_tilde(), f64::INFINITY);
        assert!((CriterionQuery::l2(1.0).unwrap().summability_exponent() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_symbol_sums_to_zero() {
        let z = Symbol::zero(GroupId::SU2, 4.0).unwrap();
        let rep = criterion_invariant_l2(&z, 1.0, &LambdaSchedule::dyadic(1, 5).unwrap()).unwrap();
        assert_eq!(rep.final_sum(), 0.0);
        assert_eq!(rep.verdict, Verdict::ConvergedNumerically);
    }

    #[test]
    fn heat_converges() {
        let heat = scalar_symbol(GroupId::SU2, |ir| (-ir.lambda_sq).exp());
        let rep = criterion_invariant_l2(&heat, 1.0, &LambdaSchedule::dyadic(1, 4).unwrap()).unwrap();
        assert_eq!(rep.verdict, Verdict::ConvergedNumerically);
        let q = CriterionQuery::new(1.0, 1.0, 4.0).unwrap();
        let rep = criterion_invariant_lp(&heat, &q, &LambdaSchedule::dyadic(1, 4).unwrap()).unwrap();
        assert_eq!(rep.branch.as_deref(), Some("p2 > 2"));
        assert_eq!(rep.verdict, Verdict::ConvergedNumerically);
    }

    #[test]
    fn lp_with_two_two_matches_l2() {
        let s = scalar_symbol(GroupId::SO3, |ir| ir.weight.powf(-4.0));
        let sched = LambdaSchedule::dyadic(1, 6).unwrap();
        let a = criterion_invariant_l2(&s, 0.7, &sched).unwrap();
        let b = criterion_invariant_lp(&s, &CriterionQuery::new(0.7, 2.0, 2.0).unwrap(), &sched).unwrap();
        assert_eq!(a.terms, b.terms);
    }

    #[test]
    fn dimension_sum_boundary_on_circle() {
        let sched = LambdaSchedule::deep(GroupId::Torus(1));
        let conv = dim_sum_convergence(GroupId::Torus(1), 1.5, &sched).unwrap();
        assert_eq!(conv.verdict, Verdict::ConvergedNumerically);
        let div = dim_sum_convergence(GroupId::Torus(1), 1.0, &sched).unwrap();
        assert_eq!(div.verdict, Verdict::DivergenceDetected);
        assert!(div.diagnostics.log_growth_fit.unwrap().r_squared > 0.999);
        let slope = conv.fitted_tail_exponent.unwrap();
        assert!((slope + 1.5).abs() < 0.01, "{slope}");
    }

    #[test]
    fn homogeneity() {
        let s = scalar_symbol(GroupId::SU2, |ir| ir.weight.powf(-12.0));
        let sched = LambdaSchedule::dyadic(1, 5).unwrap();
        let q = CriterionQuery::new(0.6, 1.5, 3.0).unwrap();
        let c = C64::new(-2.5, 1.0);
        let scaled = s.scale(c);
        for f in [criterion_invariant_lp, criterion_general, criterion_diagonal] {
            let a = f(&s, &q, &sched).unwrap().final_sum();
            let b = f(&scaled, &q, &sched).unwrap().final_sum();
            assert!((b - c.norm().powf(q.r) * a).abs() < 1e-12 * b.abs().max(1.0));
        }
        let na = nr_upper_bound(&s, &q, 8.0).unwrap().value;
        let nb = nr_upper_bound(&scaled, &q, 8.0).unwrap().value;
        assert!((nb - c.norm() * na).abs() < 1e-12 * nb);
    }

    #[test]
    fn single_block_bound() {
        let ir = Irrep::spin(GroupId::SO3, Level::integer(1)).unwrap();
        let c = 0.7;
        let s = Symbol::invariant(
            GroupId::SO3,
            10.0,
            Blocks::table(vec![(ir, Block::Scalar { value: C64::new(c, 0.0), dim: 3 })]),
        )
        .unwrap();
        let b = nr_upper_bound(&s, &CriterionQuery::l2(1.0).unwrap(), 3.0).unwrap();
        assert!((b.value - 9.0 * c).abs() < 1e-14);
    }

    #[test]
    fn divergent_symbol_is_refused() {
        let s = scalar_symbol(GroupId::Torus(1), |ir| 1.0 / ir.weight);
        let err = nr_upper_bound(&s, &CriterionQuery::l2(1.0).unwrap(), 50.0).unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = Fit::new(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.r_squared - 1.0).abs() < 1e-15);
    }
}
