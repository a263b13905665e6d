//! Heat traces on every supported group, and the short-time law on T¹.

use lienuc::group::GroupId;
use lienuc::spectral::{cutoff_for_level, heat_trace};

fn main() -> lienuc::Result<()> {
    for group in [GroupId::Torus(1), GroupId::Torus(2), GroupId::SU2, GroupId::SO3] {
        let h = heat_trace(group, 1.0, cutoff_for_level(group, 8.0)?)?;
        println!("{group}: Tr e^(-Δ) ≈ {:.10} over {} irreps, tail ≤ {:.1e}", h.value, h.irreps, h.tail_bound);
    }
    for t in [0.1, 0.01, 0.001] {
        let h = heat_trace(GroupId::Torus(1), t, cutoff_for_level(GroupId::Torus(1), 200.0)?)?;
        let lead = (4.0 * std::f64::consts::PI * t).powf(-0.5);
        println!("T1 t = {t}: {:.8} vs (4πt)^(-1/2) = {lead:.8}", h.value);
    }
    Ok(())
}
