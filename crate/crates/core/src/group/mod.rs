//! Concrete compact groups: `T^n`, `SU(2)` and `SO(3)`.
//!
//! Each group comes with an enumeration of its unitary dual, explicit unitary
//! matrix realizations of every irreducible representation, and product Haar
//! quadrature rules that integrate products of matrix coefficients exactly.
//!
//! Conventions:
//!
//! - Torus characters are `ξ_k(x) = e^{2πi k·x}` with `x ∈ [0,1)^n`, so the
//!   Laplace eigenvalue is `λ² = 4π²|k|²`.
//! - `SU(2)`/`SO(3)` points are zyz Euler angles and
//!   `D^ℓ_{mn}(α,β,γ) = e^{-imα} d^ℓ_{mn}(β) e^{-inγ}` with rows and columns
//!   ordered by descending magnetic index `m = ℓ, ℓ-1, …, -ℓ`. For `ℓ = 1/2`
//!   this is exactly `exp(-iασ₃/2) exp(-iβσ₂/2) exp(-iγσ₃/2)`.
//! - The weight is `⟨ξ⟩ = (1 + λ²)^{1/2}` on every group.

mod dual;
mod quadrature;
pub mod wigner;

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result, C64};

pub use dual::{duals_up_to_level, enumerate_dual};
pub use quadrature::{integrate, integrate_values, QuadratureRule};

/// Largest spin accepted by [`rep_eval`].
pub const MAX_SPIN: f64 = 64.0;

/// One of the supported compact groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupId {
    Torus(u32),
    SU2,
    SO3,
}

impl GroupId {
    pub fn torus(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("torus dimension must be positive"));
        }
        Ok(GroupId::Torus(n))
    }

    /// Manifold dimension: `n` for `T^n`, 3 for `SU(2)` and `SO(3)`.
    pub fn dim(&self) -> usize {
        match *self {
            GroupId::Torus(n) => n as usize,
            GroupId::SU2 | GroupId::SO3 => 3,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, GroupId::Torus(_))
    }

    /// Period of the third Euler angle.
    pub(crate) fn gamma_period(&self) -> f64 {
        match self {
            GroupId::SU2 => 4.0 * PI,
            _ => 2.0 * PI,
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Torus(n) => write!(f, "T{n}"),
            GroupId::SU2 => f.write_str("SU2"),
            GroupId::SO3 => f.write_str("SO3"),
        }
    }
}

impl FromStr for GroupId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '^' | '(' | ')' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "su2" | "s3" => Ok(GroupId::SU2),
            "so3" => Ok(GroupId::SO3),
            t if t.starts_with('t') => {
                let n: u32 = t[1..]
                    .parse()
                    .map_err(|_| Error::domain(format!("unknown group `{s}`")))?;
                GroupId::torus(n)
            }
            _ => Err(Error::domain(format!(
                "unknown group `{s}` (expected t1, t2, su2 or so3)"
            ))),
        }
    }
}

impl Serialize for GroupId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A non-negative half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(u32);

impl Level {
    pub const ZERO: Level = Level(0);

    pub fn from_twice(twice: u32) -> Self {
        Level(twice)
    }

    pub fn integer(n: u32) -> Self {
        Level(2 * n)
    }

    /// Parses a value that must be a multiple of 1/2.
    pub fn from_f64(x: f64) -> Result<Self> {
        let twice = 2.0 * x;
        if !(x >= 0.0) || (twice - twice.round()).abs() > 1e-9 || twice > u32::MAX as f64 {
            return Err(Error::domain(format!("{x} is not a non-negative half-integer")));
        }
        Ok(Level(twice.round() as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Smallest integer level not below `self`.
    pub fn ceil(self) -> Level {
        Level(self.0 + self.0 % 2)
    }

    pub fn saturating_add(self, other: Level) -> Level {
        Level(self.0.saturating_add(other.0))
    }

    /// Level needed so a rule at that level integrates band-limit `self`,
    /// i.e. `ceil(self / 2)` in half-integer steps.
    pub fn halved_up(self) -> Level {
        Level(self.0.div_ceil(2))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Label of an irreducible representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrrepLabel {
    /// Character index `k ∈ Z^n`.
    Torus(Vec<i64>),
    /// Spin `ℓ` (half-integers only on `SU(2)`).
    Spin(Level),
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrepLabel::Torus(k) => {
                let parts: Vec<String> = k.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            IrrepLabel::Spin(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Spin(f64),
    Torus(Vec<i64>),
}

impl Serialize for IrrepLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IrrepLabel::Torus(k) => LabelRepr::Torus(k.clone()).serialize(s),
            IrrepLabel::Spin(l) => LabelRepr::Spin(l.value()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for IrrepLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match LabelRepr::deserialize(d)? {
            LabelRepr::Torus(k) => Ok(IrrepLabel::Torus(k)),
            LabelRepr::Spin(l) => Level::from_f64(l)
                .map(IrrepLabel::Spin)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// One equivalence class `[ξ]` of the unitary dual.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub label: IrrepLabel,
    pub dim: usize,
    /// Laplace eigenvalue `λ²`.
    pub lambda_sq: f64,
    /// `⟨ξ⟩ = (1 + λ²)^{1/2}`.
    pub weight: f64,
}

impl Irrep {
    pub fn torus(k: Vec<i64>) -> Self {
        let norm_sq: i64 = k.iter().map(|v| v * v).sum();
        let lambda_sq = 4.0 * PI * PI * norm_sq as f64;
        Irrep {
            label: IrrepLabel::Torus(k),
            dim: 1,
            lambda_sq,
            weight: (1.0 + lambda_sq).sqrt(),
        }
    }

    pub fn spin(group: GroupId, l: Level) -> Result<Self> {
        match group {
            GroupId::SU2 => {}
            GroupId::SO3 if l.is_integer() => {}
            GroupId::SO3 => {
                return Err(Error::domain(format!("SO(3) has no spin-{l} representation")))
            }
            GroupId::Torus(_) => return Err(Error::domain("torus irreps are labelled by k ∈ Z^n")),
        }
        let v = l.value();
        let lambda_sq = v * (v + 1.0);
        Ok(Irrep {
            label: IrrepLabel::Spin(l),
            dim: l.twice() as usize + 1,
            lambda_sq,
            weight: (1.0 + lambda_sq).sqrt(),
        })
    }

    /// Rebuilds an irrep from its label, validating it against the group.
    pub fn from_label(group: GroupId, label: &IrrepLabel) -> Result<Self> {
        match (group, label) {
            (GroupId::Torus(n), IrrepLabel::Torus(k)) if k.len() == n as usize => {
                Ok(Irrep::torus(k.clone()))
            }
            (GroupId::SU2 | GroupId::SO3, IrrepLabel::Spin(l)) => Irrep::spin(group, *l),
            _ => Err(Error::domain(format!("label {label} does not belong to {group}"))),
        }
    }

    /// Band-limit level of the matrix coefficients: `max |k_i|` on the torus,
    /// `ℓ` otherwise.
    pub fn level(&self) -> Level {
        match &self.label {
            IrrepLabel::Torus(k) => {
                Level::integer(k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as u32)
            }
            IrrepLabel::Spin(l) => *l,
        }
    }

    pub(crate) fn dual_order(&self, other: &Irrep) -> Ordering {
        match (&self.label, &other.label) {
            (IrrepLabel::Torus(a), IrrepLabel::Torus(b)) => {
                let na: i64 = a.iter().map(|v| v * v).sum();
                let nb: i64 = b.iter().map(|v| v * v).sum();
                na.cmp(&nb).then_with(|| a.cmp(b))
            }
            _ => self.label.cmp(&other.label),
        }
    }
}

impl PartialEq for Irrep {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

impl Eq for Irrep {}

/// A point of the group in its coordinate chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroupPoint {
    /// Coordinates in `[0,1)^n`.
    Torus(Vec<f64>),
    /// zyz Euler angles.
    Euler { alpha: f64, beta: f64, gamma: f64 },
}

impl GroupPoint {
    pub fn torus(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::domain("torus coordinates must lie in [0,1)"));
        }
        Ok(GroupPoint::Torus(coords))
    }

    pub fn euler(group: GroupId, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if group.is_torus() {
            return Err(Error::domain("Euler angles only parametrize SU(2) and SO(3)"));
        }
        let p = GroupPoint::Euler { alpha, beta, gamma };
        p.check(group)?;
        Ok(p)
    }

    pub fn identity(group: GroupId) -> Self {
        match group {
            GroupId::Torus(n) => GroupPoint::Torus(vec![0.0; n as usize]),
            _ => GroupPoint::Euler {
                alpha: 0.0,
                beta: 0.0,
                gamma: 0.0,
            },
        }
    }

    /// Haar-distributed random point.
    pub fn random<R: Rng + ?Sized>(group: GroupId, rng: &mut R) -> Self {
        match group {
            GroupId::Torus(n) => GroupPoint::Torus((0..n).map(|_| rng.random::<f64>()).collect()),
            _ => {
                let alpha = 2.0 * PI * rng.random::<f64>();
                let beta = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
                let gamma = group.gamma_period() * rng.random::<f64>();
                GroupPoint::Euler { alpha, beta, gamma }
            }
        }
    }

    /// Verifies the coordinates lie in the chart ranges for `group`.
    pub fn check(&self, group: GroupId) -> Result<()> {
        match (group, self) {
            (GroupId::Torus(n), GroupPoint::Torus(c)) => {
                if c.len() != n as usize {
                    return Err(Error::domain(format!(
                        "point has {} coordinates, {group} needs {n}",
                        c.len()
                    )));
                }
                if c.iter().any(|v| !(0.0..1.0).contains(v)) {
                    return Err(Error::domain("torus coordinates must lie in [0,1)"));
                }
                Ok(())
            }
            (GroupId::SU2 | GroupId::SO3, GroupPoint::Euler { alpha, beta, gamma }) => {
                let ok = (0.0..2.0 * PI).contains(alpha)
                    && (0.0..=PI).contains(beta)
                    && (0.0..group.gamma_period()).contains(gamma);
                if ok {
                    Ok(())
                } else {
                    Err(Error::domain(format!("Euler angles out of range for {group}")))
                }
            }
            _ => Err(Error::domain(format!("point does not belong to {group}"))),
        }
    }

    /// Torus translation `x + h mod 1`.
    pub fn torus_shift(&self, h: &[f64]) -> Result<GroupPoint> {
        match self {
            GroupPoint::Torus(c) if c.len() == h.len() => Ok(GroupPoint::Torus(
                c.iter()
                    .zip(h)
                    .map(|(a, b)| {
                        let v = (a + b).rem_euclid(1.0);
                        if v >= 1.0 {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect(),
            )),
            _ => Err(Error::domain("torus shift needs a torus point of matching dimension")),
        }
    }
}

/// Evaluates the unitary matrix `ξ(x)`.
pub fn rep_eval(irrep: &Irrep, x: &GroupPoint) -> Result<DMatrix<C64>> {
    match (&irrep.label, x) {
        (IrrepLabel::Torus(k), GroupPoint::Torus(c)) => {
            if k.len() != c.len() {
                return Err(Error::domain("irrep and point dimensions differ"));
            }
            Ok(DMatrix::from_element(1, 1, torus_character(k, c)))
        }
        (IrrepLabel::Spin(l), GroupPoint::Euler { alpha, beta, gamma }) => {
            if l.value() > MAX_SPIN {
                return Err(Error::Capability(format!(
                    "spin {l} exceeds the Wigner-d cap of {MAX_SPIN}"
                )));
            }
            let d = wigner::small_d(l.twice(), *beta);
            Ok(wigner::assemble(l.twice(), &d, *alpha, *gamma))
        }
        _ => Err(Error::domain(format!(
            "irrep {} cannot be evaluated at this point",
            irrep.label
        ))),
    }
}

pub(crate) fn torus_character(k: &[i64], x: &[f64]) -> C64 {
    // Reduce k·x mod 1 before scaling to keep the phase accurate for large k.
    let phase: f64 = k
        .iter()
        .zip(x)
        .map(|(&ki, &xi)| (ki as f64 * xi).rem_euclid(1.0))
        .sum::<f64>()
        .rem_euclid(1.0);
    C64::from_polar(1.0, 2.0 * PI * phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_parsing() {
        assert_eq!("su2".parse::<GroupId>().unwrap(), GroupId::SU2);
        assert_eq!("SO(3)".parse::<GroupId>().unwrap(), GroupId::SO3);
        assert_eq!("T^2".parse::<GroupId>().unwrap(), GroupId::Torus(2));
        assert!("t0".parse::<GroupId>().is_err());
        assert!("g2".parse::<GroupId>().is_err());
        assert_eq!(GroupId::Torus(2).dim(), 2);
        assert_eq!(GroupId::SU2.dim(), 3);
    }

    #[test]
    fn irrep_invariants() {
        for twice in 0..12 {
            let ir = Irrep::spin(GroupId::SU2, Level::from_twice(twice)).unwrap();
            assert_eq!(ir.dim, twice as usize + 1);
            assert!((ir.weight * ir.weight - ir.lambda_sq - 1.0).abs() < 1e-12);
        }
        let t = Irrep::torus(vec![1, -2]);
        assert_eq!(t.dim, 1);
        assert!((t.lambda_sq - 20.0 * PI * PI).abs() < 1e-12);
        assert!(Irrep::spin(GroupId::SO3, Level::from_twice(1)).is_err());
    }

    #[test]
    fn torus_character_example() {
        let v = rep_eval(&Irrep::torus(vec![3]), &GroupPoint::Torus(vec![0.25])).unwrap();
        assert!((v[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn spin_cap_is_enforced() {
        let ir = Irrep::spin(GroupId::SU2, Level::integer(65)).unwrap();
        let err = rep_eval(&ir, &GroupPoint::identity(GroupId::SU2)).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn point_validation() {
        assert!(GroupPoint::euler(GroupId::SO3, 0.1, 0.2, 7.0).is_err());
        assert!(GroupPoint::euler(GroupId::SU2, 0.1, 0.2, 7.0).is_ok());
        assert!(GroupPoint::torus(vec![1.0]).is_err());
    }

    #[test]
    fn label_json_roundtrip() {
        let labels = [IrrepLabel::Spin(Level::from_twice(3)), IrrepLabel::Torus(vec![-1, 4])];
        for l in labels {
            let s = serde_json::to_string(&l).unwrap();
            let back: IrrepLabel = serde_json::from_str(&s).unwrap();
            assert_eq!(back, l);
        }
    }
}
