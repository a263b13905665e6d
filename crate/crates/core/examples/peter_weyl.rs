//! Orthonormality of the normalized matrix coefficients on SU(2) under the
//! product quadrature rule.

use lienuc::group::{duals_up_to_level, GroupId, Level, QuadratureRule};
use lienuc::C64;

fn main() -> lienuc::Result<()> {
    let level = Level::integer(3);
    let rule = QuadratureRule::new(GroupId::SU2, level);
    println!("rule: {} nodes, exact to band-limit {}", rule.len(), rule.exact_band_limit().value());

    let duals = duals_up_to_level(GroupId::SU2, level);
    let mut worst: f64 = 0.0;
    for a in &duals {
        let ta = rule.rep_values(a)?;
        for b in &duals {
            let tb = rule.rep_values(b)?;
            let scale = ((a.dim * b.dim) as f64).sqrt();
            for (i, j) in [(0, 0), (a.dim - 1, 0)] {
                for (k, l) in [(0, 0), (0, b.dim - 1)] {
                    let ip: C64 = ta
                        .iter()
                        .zip(&tb)
                        .zip(rule.weights())
                        .map(|((x, y), w)| x[(i, j)] * y[(k, l)].conj() * *w * scale)
                        .sum();
                    let want = if a.label == b.label && (i, j) == (k, l) { 1.0 } else { 0.0 };
                    worst = worst.max((ip - want).norm());
                }
            }
        }
    }
    println!("{} irreps with ℓ ≤ 3, largest Gram deviation {worst:.2e}", duals.len());
    Ok(())
}
