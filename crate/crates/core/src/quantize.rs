//! Matrix-valued symbols and the global quantization
//! `Af(x) = Σ_ξ d_ξ Tr(ξ(x) σ(x,ξ) f̂(ξ))`.
//!
//! Symbol values are held as [`Block`]s so scalar and diagonal symbols stay
//! cheap at large `d_ξ`. Invariant and diagonal symbols may be tabulated or
//! given by a formula on the whole dual; the symbol's `cutoff` is the
//! default truncation used by [`apply_op`], [`kernel_eval`] and
//! [`assemble_matrix`]. Tabulated symbols vanish outside their table.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fourier::{
    finite_or_none, forward_ft, trace_of_product, BlockJson, FourierCoefficients, GridFunction,
};
use crate::group::{
    duals_up_to_level, enumerate_dual, rep_eval, GroupId, GroupPoint, Irrep, IrrepLabel, Level,
    QuadratureRule,
};
use crate::matrix_json::{ComplexMatrixJson, ComplexVectorJson};
use crate::norms;
use crate::{Error, Result, C64};

/// Value of a symbol at one irrep.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    /// `value · I_dim`.
    Scalar { value: C64, dim: usize },
    Diagonal(DVector<C64>),
    Dense(DMatrix<C64>),
}

impl Block {
    pub fn zero(dim: usize) -> Self {
        Block::Scalar {
            value: C64::new(0.0, 0.0),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Block::Scalar { dim, .. } => *dim,
            Block::Diagonal(v) => v.len(),
            Block::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            Block::Scalar { value, dim } => DMatrix::from_diagonal_element(*dim, *dim, *value),
            Block::Diagonal(v) => DMatrix::from_diagonal(v),
            Block::Dense(m) => m.clone(),
        }
    }

    /// Diagonal entries if the block is diagonal.
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        match self {
            Block::Scalar { value, dim } => Some(vec![*value; *dim]),
            Block::Diagonal(v) => Some(v.iter().copied().collect()),
            Block::Dense(m) => {
                let n = m.nrows();
                let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)));
                off_zero.then(|| (0..n).map(|i| m[(i, i)]).collect())
            }
        }
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        match self {
            Block::Scalar { value, dim } => Ok(vec![value.norm(); *dim]),
            Block::Diagonal(v) => {
                let mut s: Vec<f64> = v.iter().map(|z| z.norm()).collect();
                s.sort_by(|a, b| b.total_cmp(a));
                Ok(s)
            }
            Block::Dense(m) => norms::singular_values(m),
        }
    }

    /// `‖σ‖^r_{S_r}`.
    pub fn schatten_power(&self, r: f64) -> Result<f64> {
        match self {
            Block::Scalar { value, dim } => {
                let a = value.norm();
                Ok(if a == 0.0 { 0.0 } else { *dim as f64 * a.powf(r) })
            }
            _ => Ok(norms::schatten_power_of(&self.singular_values()?, r)),
        }
    }

    /// `‖σ^t‖_{op(ℓ∞,ℓ∞)}`, the largest absolute column sum.
    pub fn opinf_transpose(&self) -> f64 {
        match self {
            Block::Scalar { value, .. } => value.norm(),
            Block::Diagonal(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Block::Dense(m) => norms::opinf_norm_transpose(m),
        }
    }

    pub fn trace(&self) -> C64 {
        match self {
            Block::Scalar { value, dim } => value * *dim as f64,
            Block::Diagonal(v) => v.iter().sum(),
            Block::Dense(m) => m.trace(),
        }
    }

    pub fn scale(&self, c: C64) -> Block {
        match self {
            Block::Scalar { value, dim } => Block::Scalar {
                value: value * c,
                dim: *dim,
            },
            Block::Diagonal(v) => Block::Diagonal(v * c),
            Block::Dense(m) => Block::Dense(m * c),
        }
    }

    /// `ξ · σ`.
    pub fn left_mul(&self, xi: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            Block::Scalar { value, .. } => xi * *value,
            Block::Diagonal(v) => {
                let mut out = xi.clone();
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    col *= v[j];
                }
                out
            }
            Block::Dense(m) => xi * m,
        }
    }

    /// `σ · A`.
    pub fn mul_right(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            Block::Scalar { value, .. } => a * *value,
            Block::Diagonal(v) => {
                let mut out = a.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= v[i];
                }
                out
            }
            Block::Dense(m) => m * a,
        }
    }

    fn is_finite(&self) -> bool {
        let ok = |z: &C64| z.re.is_finite() && z.im.is_finite();
        match self {
            Block::Scalar { value, .. } => ok(value),
            Block::Diagonal(v) => v.iter().all(ok),
            Block::Dense(m) => m.iter().all(ok),
        }
    }
}

/// Formula for an invariant symbol.
pub type BlockFn = Arc<dyn Fn(&Irrep) -> Block + Send + Sync>;

/// Values of an `x`-independent symbol on the dual.
#[derive(Clone)]
pub enum Blocks {
    Table {
        entries: Vec<(Irrep, Block)>,
        index: HashMap<IrrepLabel, usize>,
    },
    Formula(BlockFn),
}

impl Blocks {
    pub fn table(mut entries: Vec<(Irrep, Block)>) -> Self {
        entries.sort_by(|a, b| a.0.dual_order(&b.0));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (ir, _))| (ir.label.clone(), i))
            .collect();
        Blocks::Table { entries, index }
    }

    pub fn formula(f: impl Fn(&Irrep) -> Block + Send + Sync + 'static) -> Self {
        Blocks::Formula(Arc::new(f))
    }

    /// Value at `irrep`; zero outside a table.
    pub fn get(&self, irrep: &Irrep) -> Block {
        match self {
            Blocks::Table { entries, index } => index
                .get(&irrep.label)
                .map(|&i| entries[i].1.clone())
                .unwrap_or_else(|| Block::zero(irrep.dim)),
            Blocks::Formula(f) => f(irrep),
        }
    }

    fn scale(&self, c: C64) -> Blocks {
        match self {
            Blocks::Table { entries, .. } => {
                Blocks::table(entries.iter().map(|(ir, b)| (ir.clone(), b.scale(c))).collect())
            }
            Blocks::Formula(f) => {
                let f = f.clone();
                Blocks::formula(move |ir| f(ir).scale(c))
            }
        }
    }
}

/// Samples of an `x`-dependent symbol at the nodes of a rule.
#[derive(Clone, Debug)]
pub struct NodeSamples {
    pub rule: Arc<QuadratureRule>,
    entries: Vec<(Irrep, Vec<DMatrix<C64>>)>,
    index: HashMap<IrrepLabel, usize>,
}

impl NodeSamples {
    fn new(rule: Arc<QuadratureRule>, mut entries: Vec<(Irrep, Vec<DMatrix<C64>>)>) -> Self {
        entries.sort_by(|a, b| a.0.dual_order(&b.0));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (ir, _))| (ir.label.clone(), i))
            .collect();
        NodeSamples { rule, entries, index }
    }

    pub fn entries(&self) -> &[(Irrep, Vec<DMatrix<C64>>)] {
        &self.entries
    }

    pub fn get(&self, irrep: &Irrep) -> Option<&[DMatrix<C64>]> {
        self.index.get(&irrep.label).map(|&i| self.entries[i].1.as_slice())
    }
}

#[derive(Clone)]
pub enum SymbolKind {
    /// `σ(ξ)`, independent of `x`.
    Invariant(Blocks),
    /// `σ(ξ)` diagonal, independent of `x`.
    Diagonal(Blocks),
    /// `σ(x,ξ) = g(x) a(ξ)`.
    Separable { g: GridFunction, a: Blocks },
    /// `σ(x_n, ξ)` sampled at quadrature nodes.
    General(NodeSamples),
}

/// A matrix-valued symbol on the unitary dual.
#[derive(Clone)]
pub struct Symbol {
    group: GroupId,
    cutoff: f64,
    kind: SymbolKind,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("group", &self.group)
            .field("cutoff", &self.cutoff)
            .field("kind", &self.kind_name())
            .finish()
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("cutoff must be ≥ 1, got {cutoff}")))
    }
}

impl Symbol {
    pub fn invariant(group: GroupId, cutoff: f64, blocks: Blocks) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_table(group, &blocks, false)?;
        Ok(Symbol {
            group,
            cutoff,
            kind: SymbolKind::Invariant(blocks),
        })
    }

    /// Diagonal symbol; tabulated blocks must be diagonal.
    pub fn diagonal(group: GroupId, cutoff: f64, blocks: Blocks) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_table(group, &blocks, true)?;
        Ok(Symbol {
            group,
            cutoff,
            kind: SymbolKind::Diagonal(blocks),
        })
    }

    /// Tabulated invariant symbol from dense matrices.
    pub fn invariant_table(group: GroupId, cutoff: f64, entries: Vec<(Irrep, DMatrix<C64>)>) -> Result<Self> {
        let blocks = entries.into_iter().map(|(ir, m)| (ir, Block::Dense(m))).collect();
        Self::invariant(group, cutoff, Blocks::table(blocks))
    }

    pub fn identity(group: GroupId, cutoff: f64) -> Result<Self> {
        Self::invariant(
            group,
            cutoff,
            Blocks::formula(|ir| Block::Scalar {
                value: C64::new(1.0, 0.0),
                dim: ir.dim,
            }),
        )
    }

    pub fn zero(group: GroupId, cutoff: f64) -> Result<Self> {
        Self::invariant(group, cutoff, Blocks::table(Vec::new()))
    }

    /// `g(x) · a(ξ)` for an `x`-independent `a`.
    pub fn separable(g: GridFunction, a: &Symbol) -> Result<Self> {
        if g.group() != a.group {
            return Err(Error::domain(format!(
                "g lives on {} but the symbol on {}",
                g.group(),
                a.group
            )));
        }
        let blocks = a.invariant_blocks()?.clone();
        Ok(Symbol {
            group: a.group,
            cutoff: a.cutoff,
            kind: SymbolKind::Separable { g, a: blocks },
        })
    }

    /// Samples `f(x_n, ξ)` at every node of `rule` for all `⟨ξ⟩ ≤ cutoff`.
    pub fn general<F>(rule: Arc<QuadratureRule>, cutoff: f64, f: F) -> Result<Self>
    where
        F: Fn(&GroupPoint, &Irrep) -> DMatrix<C64> + Sync,
    {
        check_cutoff(cutoff)?;
        let group = rule.group();
        let duals = enumerate_dual(group, cutoff)?;
        let mut entries = Vec::with_capacity(duals.len());
        for ir in duals {
            let samples: Vec<DMatrix<C64>> = rule.nodes().par_iter().map(|x| f(x, &ir)).collect();
            entries.push((ir, samples));
        }
        Self::general_from_samples(rule, cutoff, entries)
    }

    pub fn general_from_samples(
        rule: Arc<QuadratureRule>,
        cutoff: f64,
        entries: Vec<(Irrep, Vec<DMatrix<C64>>)>,
    ) -> Result<Self> {
        check_cutoff(cutoff)?;
        let group = rule.group();
        for (ir, samples) in &entries {
            Irrep::from_label(group, &ir.label)?;
            if samples.len() != rule.len() {
                return Err(Error::domain(format!("{} samples for {} nodes", samples.len(), rule.len())));
            }
            for (node, m) in samples.iter().enumerate() {
                if m.nrows() != ir.dim || m.ncols() != ir.dim {
                    return Err(Error::domain(format!("sample at {} has the wrong size", ir.label)));
                }
                if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite { node });
                }
            }
        }
        Ok(Symbol {
            group,
            cutoff,
            kind: SymbolKind::General(NodeSamples::new(rule, entries)),
        })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SymbolKind::Invariant(_) => "invariant",
            SymbolKind::Diagonal(_) => "diagonal",
            SymbolKind::Separable { .. } => "separable",
            SymbolKind::General(_) => "general",
        }
    }

    pub fn with_cutoff(&self, cutoff: f64) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut s = self.clone();
        s.cutoff = cutoff;
        Ok(s)
    }

    /// `c · σ`.
    pub fn scale(&self, c: C64) -> Symbol {
        let kind = match &self.kind {
            SymbolKind::Invariant(b) => SymbolKind::Invariant(b.scale(c)),
            SymbolKind::Diagonal(b) => SymbolKind::Diagonal(b.scale(c)),
            SymbolKind::Separable { g, a } => SymbolKind::Separable {
                g: g.clone(),
                a: a.scale(c),
            },
            SymbolKind::General(s) => SymbolKind::General(NodeSamples::new(
                s.rule.clone(),
                s.entries
                    .iter()
                    .map(|(ir, v)| (ir.clone(), v.iter().map(|m| m * c).collect()))
                    .collect(),
            )),
        };
        Symbol {
            group: self.group,
            cutoff: self.cutoff,
            kind,
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self.kind, SymbolKind::Invariant(_) | SymbolKind::Diagonal(_))
    }

    /// The `x`-independent values, for invariant and diagonal symbols.
    pub fn invariant_blocks(&self) -> Result<&Blocks> {
        match &self.kind {
            SymbolKind::Invariant(b) | SymbolKind::Diagonal(b) => Ok(b),
            _ => Err(Error::domain(format!("{} symbol depends on x", self.kind_name()))),
        }
    }

    /// `σ(ξ)` for an invariant or diagonal symbol.
    pub fn block(&self, irrep: &Irrep) -> Result<Block> {
        let b = self.invariant_blocks()?.get(irrep);
        check_block(irrep, &b)?;
        Ok(b)
    }

    /// `σ(x_n, ξ)` at node `node` of `rule`.
    pub fn value_at_node(&self, rule: &QuadratureRule, node: usize, irrep: &Irrep) -> Result<Block> {
        match &self.kind {
            SymbolKind::Invariant(_) | SymbolKind::Diagonal(_) => self.block(irrep),
            SymbolKind::Separable { g, a } => {
                let gx = if g.same_rule(rule) {
                    g.values()[node]
                } else {
                    g.interpolate(&rule.nodes()[node])?
                };
                Ok(a.get(irrep).scale(gx))
            }
            SymbolKind::General(s) => {
                if s.rule.group() == rule.group() && s.rule.level() == rule.level() {
                    Ok(s.get(irrep)
                        .map(|v| Block::Dense(v[node].clone()))
                        .unwrap_or_else(|| Block::zero(irrep.dim)))
                } else {
                    self.value_at(&rule.nodes()[node], irrep)
                }
            }
        }
    }

    /// `σ(x, ξ)` at an arbitrary point. Sampled symbols only know their
    /// own nodes.
    pub fn value_at(&self, x: &GroupPoint, irrep: &Irrep) -> Result<Block> {
        x.check(self.group)?;
        match &self.kind {
            SymbolKind::Invariant(_) | SymbolKind::Diagonal(_) => self.block(irrep),
            SymbolKind::Separable { g, a } => Ok(a.get(irrep).scale(g.interpolate(x)?)),
            SymbolKind::General(s) => {
                let node = s
                    .rule
                    .nodes()
                    .iter()
                    .position(|p| p == x)
                    .ok_or_else(|| Error::domain("sampled symbol is only known at its quadrature nodes"))?;
                self.value_at_node(&s.rule.clone(), node, irrep)
            }
        }
    }

    /// Duals with `⟨ξ⟩ ≤ cutoff`; fails on an infinite cutoff.
    pub fn duals(&self) -> Result<Vec<Irrep>> {
        if !self.cutoff.is_finite() {
            return Err(Error::domain("symbol has no finite cutoff"));
        }
        enumerate_dual(self.group, self.cutoff)
    }

    pub fn to_json(&self) -> Result<SymbolJson> {
        let cutoff = finite_or_none(self.cutoff);
        let tabulate = |blocks: &Blocks| -> Result<Vec<(Irrep, Block)>> {
            match blocks {
                Blocks::Table { entries, .. } => Ok(entries.clone()),
                Blocks::Formula(_) => Ok(self.duals()?.into_iter().map(|ir| {
                    let b = blocks.get(&ir);
                    (ir, b)
                }).collect()),
            }
        };
        let dense = |v: Vec<(Irrep, Block)>| -> Vec<BlockJson> {
            v.into_iter()
                .map(|(ir, b)| BlockJson {
                    label: ir.label.clone(),
                    dim: ir.dim,
                    matrix: ComplexMatrixJson::from_matrix(&b.to_dense()),
                })
                .collect()
        };
        Ok(match &self.kind {
            SymbolKind::Invariant(b) => SymbolJson::Invariant {
                group: self.group,
                cutoff,
                entries: dense(tabulate(b)?),
            },
            SymbolKind::Diagonal(b) => SymbolJson::Diagonal {
                group: self.group,
                cutoff,
                entries: tabulate(b)?
                    .into_iter()
                    .map(|(ir, b)| DiagonalJson {
                        label: ir.label.clone(),
                        dim: ir.dim,
                        diagonal: ComplexVectorJson::from_slice(&b.diagonal().unwrap_or_default()),
                    })
                    .collect(),
            },
            SymbolKind::Separable { g, a } => SymbolJson::Separable {
                group: self.group,
                cutoff,
                rule_level: g.rule().level().value(),
                band_limit: g.band_limit().map(|l| l.value()),
                g: ComplexVectorJson::from_slice(g.values()),
                entries: dense(tabulate(a)?),
            },
            SymbolKind::General(s) => SymbolJson::General {
                group: self.group,
                cutoff,
                rule_level: s.rule.level().value(),
                samples: s
                    .entries
                    .iter()
                    .map(|(ir, v)| SampleJson {
                        label: ir.label.clone(),
                        dim: ir.dim,
                        nodes: v.iter().map(ComplexMatrixJson::from_matrix).collect(),
                    })
                    .collect(),
            },
        })
    }

    pub fn from_json(json: &SymbolJson) -> Result<Self> {
        let dense_blocks = |group: GroupId, entries: &[BlockJson]| -> Result<Blocks> {
            let v = entries
                .iter()
                .map(|b| {
                    let ir = irrep_checked(group, &b.label, b.dim)?;
                    Ok((ir, Block::Dense(b.matrix.to_matrix(b.dim)?)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Blocks::table(v))
        };
        let inf = |c: Option<f64>| c.unwrap_or(f64::INFINITY);
        match json {
            SymbolJson::Invariant { group, cutoff, entries } => {
                Symbol::invariant(*group, inf(*cutoff), dense_blocks(*group, entries)?)
            }
            SymbolJson::Diagonal { group, cutoff, entries } => {
                let v = entries
                    .iter()
                    .map(|e| {
                        let ir = irrep_checked(*group, &e.label, e.dim)?;
                        let d = e.diagonal.to_vec(Some(e.dim))?;
                        Ok((ir, Block::Diagonal(DVector::from_vec(d))))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Symbol::diagonal(*group, inf(*cutoff), Blocks::table(v))
            }
            SymbolJson::Separable {
                group,
                cutoff,
                rule_level,
                band_limit,
                g,
                entries,
            } => {
                let rule = Arc::new(QuadratureRule::new(*group, Level::from_f64(*rule_level)?));
                let band = band_limit.map(Level::from_f64).transpose()?;
                let g = GridFunction::new(rule, g.to_vec(None)?, band)?;
                let a = Symbol::invariant(*group, inf(*cutoff), dense_blocks(*group, entries)?)?;
                Symbol::separable(g, &a)
            }
            SymbolJson::General {
                group,
                cutoff,
                rule_level,
                samples,
            } => {
                let rule = Arc::new(QuadratureRule::new(*group, Level::from_f64(*rule_level)?));
                let entries = samples
                    .iter()
                    .map(|s| {
                        let ir = irrep_checked(*group, &s.label, s.dim)?;
                        let v = s.nodes.iter().map(|m| m.to_matrix(s.dim)).collect::<Result<Vec<_>>>()?;
                        Ok((ir, v))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Symbol::general_from_samples(rule, inf(*cutoff), entries)
            }
        }
    }
}

fn irrep_checked(group: GroupId, label: &IrrepLabel, dim: usize) -> Result<Irrep> {
    let ir = Irrep::from_label(group, label)?;
    if ir.dim != dim {
        return Err(Error::domain(format!("irrep {label} has dimension {}, not {dim}", ir.dim)));
    }
    Ok(ir)
}

fn check_block(irrep: &Irrep, b: &Block) -> Result<()> {
    if b.dim() != irrep.dim {
        return Err(Error::domain(format!(
            "symbol block at {} has side {}, expected {}",
            irrep.label,
            b.dim(),
            irrep.dim
        )));
    }
    if let Block::Dense(m) = b {
        if m.ncols() != m.nrows() {
            return Err(Error::domain("symbol blocks must be square"));
        }
    }
    if !b.is_finite() {
        return Err(Error::Numeric(format!("symbol block at {} is not finite", irrep.label)));
    }
    Ok(())
}

fn check_table(group: GroupId, blocks: &Blocks, diagonal: bool) -> Result<()> {
    if let Blocks::Table { entries, .. } = blocks {
        for (ir, b) in entries {
            Irrep::from_label(group, &ir.label)?;
            check_block(ir, b)?;
            if diagonal && b.diagonal().is_none() {
                return Err(Error::domain(format!("block at {} is not diagonal", ir.label)));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiagonalJson {
    pub label: IrrepLabel,
    pub dim: usize,
    #[serde(flatten)]
    pub diagonal: ComplexVectorJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleJson {
    pub label: IrrepLabel,
    pub dim: usize,
    pub nodes: Vec<ComplexMatrixJson>,
}

/// JSON form of a symbol; matrices are row-major `{re, im}` arrays.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolJson {
    Invariant {
        group: GroupId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
        entries: Vec<BlockJson>,
    },
    Diagonal {
        group: GroupId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
        entries: Vec<DiagonalJson>,
    },
    Separable {
        group: GroupId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
        rule_level: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        band_limit: Option<f64>,
        g: ComplexVectorJson,
        entries: Vec<BlockJson>,
    },
    General {
        group: GroupId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
        rule_level: f64,
        samples: Vec<SampleJson>,
    },
}

/// Duals used to apply `sigma` to `f`: the symbol's cutoff if finite,
/// otherwise the declared band-limit of `f`.
fn duals_for(sigma: &Symbol, f: &GridFunction) -> Result<Vec<Irrep>> {
    if sigma.cutoff.is_finite() {
        enumerate_dual(sigma.group, sigma.cutoff)
    } else if let Some(b) = f.band_limit() {
        Ok(duals_up_to_level(sigma.group, b))
    } else {
        Err(Error::domain("neither the symbol nor the function fixes a truncation"))
    }
}

/// `Op(σ)f` at every node of `f`'s rule.
pub fn apply_op(sigma: &Symbol, f: &GridFunction) -> Result<GridFunction> {
    if f.group() != sigma.group {
        return Err(Error::domain("symbol and function live on different groups"));
    }
    let duals = duals_for(sigma, f)?;
    let coeffs = forward_ft(f, &duals)?;
    let coeffs = if sigma.cutoff.is_finite() {
        coeffs
    } else {
        FourierCoefficients::new(coeffs.group(), f64::INFINITY, coeffs.entries().to_vec())?
    };
    apply_op_coeffs(sigma, &coeffs, f.rule())
}

/// `Σ_ξ d_ξ Tr(ξ(x) σ(x,ξ) f̂(ξ))` at every node of `rule`.
pub fn apply_op_coeffs(
    sigma: &Symbol,
    coeffs: &FourierCoefficients,
    rule: &Arc<QuadratureRule>,
) -> Result<GridFunction> {
    if coeffs.group() != sigma.group || rule.group() != sigma.group {
        return Err(Error::domain("symbol, coefficients and rule must share a group"));
    }
    if coeffs.cutoff() > sigma.cutoff * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "coefficient cutoff {} exceeds the symbol cutoff {}",
            coeffs.cutoff(),
            sigma.cutoff
        )));
    }
    let mut values = vec![C64::new(0.0, 0.0); rule.len()];
    for (ir, fhat) in coeffs.entries() {
        let table = rule.rep_values(ir)?;
        let d = ir.dim as f64;
        if sigma.is_invariant() {
            let b = sigma.block(ir)?.mul_right(fhat);
            values
                .par_iter_mut()
                .zip(table.par_iter())
                .for_each(|(v, xi)| *v += trace_of_product(xi, &b) * d);
        } else {
            let contrib: Vec<C64> = (0..rule.len())
                .into_par_iter()
                .map(|n| {
                    let s = sigma.value_at_node(rule, n, ir)?;
                    Ok(trace_of_product(&table[n], &s.mul_right(fhat)) * d)
                })
                .collect::<Result<_>>()?;
            values.iter_mut().zip(contrib).for_each(|(v, c)| *v += c);
        }
    }
    let band = match &sigma.kind {
        SymbolKind::Invariant(_) | SymbolKind::Diagonal(_) => Some(coeffs.max_level()),
        SymbolKind::Separable { g, .. } => g.band_limit().map(|b| b.saturating_add(coeffs.max_level())),
        SymbolKind::General(_) => None,
    };
    GridFunction::new(rule.clone(), values, band)
}

/// Truncated kernel `k(x,y) = Σ_ξ d_ξ Tr(ξ(x) σ(x,ξ) ξ(y)*)`.
pub fn kernel_eval(sigma: &Symbol, x: &GroupPoint, y: &GroupPoint) -> Result<C64> {
    y.check(sigma.group)?;
    let mut acc = C64::new(0.0, 0.0);
    for ir in sigma.duals()? {
        let xi_x = rep_eval(&ir, x)?;
        let xi_y = rep_eval(&ir, y)?;
        let s = sigma.value_at(x, &ir)?;
        acc += trace_of_product(&s.left_mul(&xi_x), &xi_y.adjoint()) * ir.dim as f64;
    }
    Ok(acc)
}

/// Kernel on the diagonal at every node of `rule`.
pub fn kernel_diagonal_on_rule(sigma: &Symbol, rule: &QuadratureRule) -> Result<Vec<C64>> {
    let mut values = vec![C64::new(0.0, 0.0); rule.len()];
    for ir in sigma.duals()? {
        let table = rule.rep_values(&ir)?;
        let d = ir.dim as f64;
        let contrib: Vec<C64> = (0..rule.len())
            .into_par_iter()
            .map(|n| {
                let s = sigma.value_at_node(rule, n, &ir)?;
                let xi = &table[n];
                Ok(trace_of_product(&s.left_mul(xi), &xi.adjoint()) * d)
            })
            .collect::<Result<_>>()?;
        values.iter_mut().zip(contrib).for_each(|(v, c)| *v += c);
    }
    Ok(values)
}

/// `ξ(x_n)* (Aξ)(x_n)` at each requested node, where `(Aξ)_ij = A(ξ_ij)`.
pub fn extract_symbol_at_nodes<A>(
    op: A,
    rule: &Arc<QuadratureRule>,
    irrep: &Irrep,
    nodes: &[usize],
) -> Result<Vec<DMatrix<C64>>>
where
    A: Fn(&GridFunction) -> Result<GridFunction>,
{
    if let Some(&bad) = nodes.iter().find(|&&n| n >= rule.len()) {
        return Err(Error::domain(format!("node {bad} out of range")));
    }
    let d = irrep.dim;
    let mut images = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            let xi_ij = GridFunction::rep_entry(rule.clone(), irrep, i, j, 1.0)?;
            let img = op(&xi_ij)?;
            if !img.same_rule(rule) {
                return Err(Error::domain("operator changed the quadrature rule"));
            }
            if let Some(node) = img.values().iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite { node });
            }
            images.push(img);
        }
    }
    let table = rule.rep_values(irrep)?;
    Ok(nodes
        .iter()
        .map(|&n| {
            let a_xi = DMatrix::from_fn(d, d, |i, j| images[i + j * d].values()[n]);
            table[n].adjoint() * a_xi
        })
        .collect())
}

pub fn extract_symbol<A>(op: A, rule: &Arc<QuadratureRule>, irrep: &Irrep, node: usize) -> Result<DMatrix<C64>>
where
    A: Fn(&GridFunction) -> Result<GridFunction>,
{
    Ok(extract_symbol_at_nodes(op, rule, irrep, &[node])?.remove(0))
}

/// Finite section of `Op(σ)` in the basis `{√d_ξ ξ_ij : ⟨ξ⟩ ≤ Λ}`.
///
/// Basis order: irreps in dual order, then `i + j·d_ξ` inside each irrep.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub group: GroupId,
    pub cutoff: f64,
    pub irreps: Vec<Irrep>,
    offsets: Vec<usize>,
    pub matrix: DMatrix<C64>,
    pub warnings: Vec<String>,
}

impl TruncatedOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(irrep index, i, j)` of a basis column.
    pub fn basis_entry(&self, col: usize) -> (usize, usize, usize) {
        let k = self.offsets.partition_point(|&o| o <= col) - 1;
        let d = self.irreps[k].dim;
        let local = col - self.offsets[k];
        (k, local % d, local / d)
    }

    pub fn column_of(&self, irrep_index: usize, i: usize, j: usize) -> usize {
        self.offsets[irrep_index] + i + j * self.irreps[irrep_index].dim
    }

    /// Sum of the diagonal.
    pub fn matrix_trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `U M U*` with the same basis bookkeeping.
    pub fn conjugated(&self, u: &DMatrix<C64>) -> Result<TruncatedOperator> {
        if u.nrows() != self.size() || u.ncols() != self.size() {
            return Err(Error::domain("conjugating matrix has the wrong size"));
        }
        let mut out = self.clone();
        out.matrix = u * &self.matrix * u.adjoint();
        Ok(out)
    }

    pub fn from_parts(group: GroupId, cutoff: f64, irreps: Vec<Irrep>, matrix: DMatrix<C64>) -> Result<Self> {
        let offsets = offsets_of(&irreps);
        let n = *offsets.last().unwrap_or(&0);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::domain(format!("matrix must be {n}×{n}")));
        }
        let mut offsets = offsets;
        offsets.pop();
        Ok(TruncatedOperator {
            group,
            cutoff,
            irreps,
            offsets,
            matrix,
            warnings: Vec::new(),
        })
    }
}

fn offsets_of(irreps: &[Irrep]) -> Vec<usize> {
    let mut out = Vec::with_capacity(irreps.len() + 1);
    let mut acc = 0;
    out.push(0);
    for ir in irreps {
        acc += ir.dim * ir.dim;
        out.push(acc);
    }
    out
}

/// Assembles `M_{(ξ',i',j'),(ξ,i,j)} = ⟨Op(σ)(√d ξ_ij), √d' ξ'_{i'j'}⟩`.
///
/// Invariant symbols are placed exactly. Separable symbols factor as
/// multiplication by `g` after `Op(a)`; the multiplication matrix and all
/// general symbols go through quadrature.
pub fn assemble_matrix(sigma: &Symbol, cutoff: f64) -> Result<TruncatedOperator> {
    let duals = enumerate_dual(sigma.group, cutoff)?;
    let offsets = offsets_of(&duals);
    let n = *offsets.last().unwrap();
    let top = duals.iter().map(|ir| ir.level()).max().unwrap_or(Level::ZERO);
    let mut warnings = Vec::new();

    let invariant_matrix = |blocks: &Blocks| -> Result<DMatrix<C64>> {
        let mut m = DMatrix::zeros(n, n);
        for (ir, &off) in duals.iter().zip(&offsets) {
            let b = blocks.get(ir);
            check_block(ir, &b)?;
            let s = b.to_dense();
            let d = ir.dim;
            // Op(σ) ξ_ij = Σ_k σ_kj ξ_ik
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        m[(off + i + k * d, off + i + j * d)] = s[(k, j)];
                    }
                }
            }
        }
        Ok(m)
    };

    let matrix = match &sigma.kind {
        SymbolKind::Invariant(b) | SymbolKind::Diagonal(b) => invariant_matrix(b)?,
        SymbolKind::Separable { g, a } => {
            let needed = g
                .band_limit()
                .map(|b| b.saturating_add(top).saturating_add(top));
            let g = match needed {
                Some(need) if need > g.rule().exact_band_limit() => {
                    let rule = Arc::new(QuadratureRule::for_band_limit(sigma.group, need));
                    resample(g, rule)?
                }
                Some(_) => g.clone(),
                None => {
                    warnings.push("precision: band-limit of g not declared, exactness not certified".into());
                    g.clone()
                }
            };
            let rule = g.rule().clone();
            let basis = basis_table(&duals, &rule)?;
            let weighted = weighted_columns(&basis, &rule, Some(g.values()));
            let mult = basis.adjoint() * weighted;
            mult * invariant_matrix(a)?
        }
        SymbolKind::General(s) => {
            let rule = s.rule.clone();
            if rule.level() < top.saturating_add(top) {
                warnings.push(format!(
                    "precision: sample rule level {} is below twice the top level {}",
                    rule.level(),
                    top
                ));
            }
            let basis = basis_table(&duals, &rule)?;
            // Column (ξ,i,j) of the image table holds √d (ξ(x_n) σ(x_n,ξ))_ij.
            let mut image = DMatrix::<C64>::zeros(rule.len(), n);
            for (ir, &off) in duals.iter().zip(&offsets) {
                let table = rule.rep_values(ir)?;
                let d = ir.dim;
                let sd = (d as f64).sqrt();
                let rows: Vec<DMatrix<C64>> = (0..rule.len())
                    .into_par_iter()
                    .map(|node| Ok(sigma.value_at_node(&rule, node, ir)?.left_mul(&table[node])))
                    .collect::<Result<_>>()?;
                for (node, p) in rows.iter().enumerate() {
                    for j in 0..d {
                        for i in 0..d {
                            image[(node, off + i + j * d)] = p[(i, j)] * sd;
                        }
                    }
                }
            }
            let weighted = weighted_columns(&image, &rule, None);
            basis.adjoint() * weighted
        }
    };
    let mut offsets = offsets;
    offsets.pop();
    Ok(TruncatedOperator {
        group: sigma.group,
        cutoff,
        irreps: duals,
        offsets,
        matrix,
        warnings,
    })
}

/// Node × basis table of `√d ξ_ij(x_n)`.
fn basis_table(duals: &[Irrep], rule: &QuadratureRule) -> Result<DMatrix<C64>> {
    let n: usize = duals.iter().map(|ir| ir.dim * ir.dim).sum();
    let mut out = DMatrix::zeros(rule.len(), n);
    let mut off = 0;
    for ir in duals {
        let table = rule.rep_values(ir)?;
        let d = ir.dim;
        let sd = (d as f64).sqrt();
        for (node, xi) in table.iter().enumerate() {
            for j in 0..d {
                for i in 0..d {
                    out[(node, off + i + j * d)] = xi[(i, j)] * sd;
                }
            }
        }
        off += d * d;
    }
    Ok(out)
}

/// Rows scaled by `w_n` (times `g_n` when given).
fn weighted_columns(table: &DMatrix<C64>, rule: &QuadratureRule, g: Option<&[C64]>) -> DMatrix<C64> {
    let mut out = table.clone();
    for (node, mut row) in out.row_iter_mut().enumerate() {
        let w = rule.weights()[node];
        let s = g.map_or(C64::new(w, 0.0), |g| g[node] * w);
        row *= s;
    }
    out
}

/// Re-samples a band-limited grid function on another rule.
pub(crate) fn resample(g: &GridFunction, rule: Arc<QuadratureRule>) -> Result<GridFunction> {
    let band = g
        .band_limit()
        .ok_or_else(|| Error::domain("resampling needs a declared band-limit"))?;
    let duals = duals_up_to_level(g.group(), band);
    let coeffs = forward_ft(g, &duals)?;
    let values = crate::fourier::inverse_ft_on_rule(&coeffs, &rule)?;
    GridFunction::new(rule, values, Some(band))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    fn spin(twice: u32) -> Irrep {
        Irrep::spin(GroupId::SU2, Level::from_twice(twice)).unwrap()
    }

    #[test]
    fn heat_acts_on_coefficients() {
        let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(2)));
        let ir = spin(2);
        let f = GridFunction::rep_entry(rule, &ir, 0, 2, 3f64.sqrt()).unwrap();
        let t = 0.3;
        let af = apply_op(&heat(GroupId::SU2, t, 3.0), &f).unwrap();
        for (a, b) in af.values().iter().zip(f.values()) {
            assert!((a - b * (-2.0 * t).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_reproduces_band_limited_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rule = Arc::new(QuadratureRule::new(GroupId::SO3, Level::integer(3)));
        let f = GridFunction::random_band_limited(rule, Level::integer(2), &mut rng).unwrap();
        let cutoff = Irrep::spin(GroupId::SO3, Level::integer(2)).unwrap().weight;
        let af = apply_op(&Symbol::identity(GroupId::SO3, cutoff).unwrap(), &f).unwrap();
        for (a, b) in af.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn cutoff_mismatch_is_rejected() {
        let rule = Arc::new(QuadratureRule::new(GroupId::Torus(1), Level::integer(4)));
        let f = GridFunction::constant(rule.clone(), C64::new(1.0, 0.0)).unwrap();
        let duals = enumerate_dual(GroupId::Torus(1), 20.0).unwrap();
        let c = forward_ft(&f, &duals).unwrap();
        let sigma = Symbol::identity(GroupId::Torus(1), 2.0).unwrap();
        assert!(matches!(apply_op_coeffs(&sigma, &c, &rule), Err(Error::Domain(_))));
    }

    #[test]
    fn dirichlet_kernel() {
        let sigma = Symbol::identity(GroupId::Torus(1), 20.0).unwrap();
        let x = GroupPoint::Torus(vec![0.3]);
        let k = kernel_eval(&sigma, &x, &x).unwrap();
        // |k| ≤ 3 since ⟨3⟩ ≈ 18.9 ≤ 20 < ⟨4⟩
        assert!((k - C64::new(7.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn multiplication_symbol_is_scalar() {
        let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(3)));
        let g = GridFunction::from_fn(rule.clone(), Some(Level::integer(1)), |x| match x {
            GroupPoint::Euler { beta, .. } => C64::new(1.0 + 0.5 * beta.cos(), 0.0),
            _ => unreachable!(),
        })
        .unwrap();
        let ir = spin(2);
        let gv = g.clone();
        let op = move |f: &GridFunction| gv.mul(f);
        let nodes = [0, 17, 101];
        let got = extract_symbol_at_nodes(op, &rule, &ir, &nodes).unwrap();
        for (m, &n) in got.iter().zip(&nodes) {
            let expect = DMatrix::<C64>::identity(3, 3) * g.values()[n];
            assert!(norms::max_abs(&(m - expect)) < 1e-10);
        }
    }

    #[test]
    fn invariant_matrix_structure() {
        let t = 1.0;
        let sigma = heat(GroupId::SU2, t, 3.0);
        let cutoff = spin(2).weight;
        let op = assemble_matrix(&sigma, cutoff).unwrap();
        assert_eq!(op.size(), 1 + 4 + 9);
        let expect = [1.0]
            .into_iter()
            .chain(std::iter::repeat_n((-0.75f64 * t).exp(), 4))
            .chain(std::iter::repeat_n((-2.0f64 * t).exp(), 9));
        for (k, e) in expect.enumerate() {
            assert!((op.matrix[(k, k)].re - e).abs() < 1e-15);
        }
        let off: f64 = (0..op.size())
            .flat_map(|i| (0..op.size()).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| op.matrix[(i, j)].norm())
            .sum();
        assert_eq!(off, 0.0);
        assert_eq!(op.basis_entry(5), (2, 0, 0));
        assert_eq!(op.column_of(2, 1, 2), 5 + 1 + 6);
    }

    #[test]
    fn separable_with_unit_g_matches_invariant() {
        let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(1)));
        let g = GridFunction::constant(rule, C64::new(1.0, 0.0)).unwrap();
        let a = heat(GroupId::SU2, 0.5, 3.0);
        let sep = Symbol::separable(g, &a).unwrap();
        let cutoff = spin(2).weight;
        let m1 = assemble_matrix(&a, cutoff).unwrap().matrix;
        let m2 = assemble_matrix(&sep, cutoff).unwrap().matrix;
        assert!(norms::max_abs(&(m1 - m2)) < 1e-10);
    }

    #[test]
    fn general_matches_invariant_assembly() {
        let a = heat(GroupId::SU2, 0.5, 2.0);
        let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(2)));
        let gen = Symbol::general(rule, 2.0, |_, ir| a.block(ir).unwrap().to_dense()).unwrap();
        let m1 = assemble_matrix(&a, 2.0).unwrap();
        let m2 = assemble_matrix(&gen, 2.0).unwrap();
        assert!(m2.warnings.is_empty());
        assert!(norms::max_abs(&(m1.matrix - m2.matrix)) < 1e-12);
    }

    #[test]
    fn symbol_json_round_trip() {
        let a = heat(GroupId::SO3, 0.5, 3.0);
        let json = a.to_json().unwrap();
        let text = serde_json::to_string(&json).unwrap();
        let back = Symbol::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for ir in a.duals().unwrap() {
            assert_eq!(a.block(&ir).unwrap().to_dense(), back.block(&ir).unwrap().to_dense());
        }
    }

    #[test]
    fn diagonal_rejects_dense_blocks() {
        let ir = spin(1);
        let m = DMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        let r = Symbol::diagonal(GroupId::SU2, 2.0, Blocks::table(vec![(ir, Block::Dense(m))]));
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
