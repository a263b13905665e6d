//! Eigenvalues of a finite section of an x-dependent operator.

use lienuc::catalog::separable_demo;
use lienuc::group::GroupId;
use lienuc::quantize::assemble_matrix;
use lienuc::spectral::{cutoff_for_level, eigenvalues_truncated};

fn main() -> lienuc::Result<()> {
    let cutoff = cutoff_for_level(GroupId::SU2, 2.0)?;
    let op = assemble_matrix(&separable_demo(0.25, cutoff)?, cutoff)?;
    let eigs = eigenvalues_truncated(&op)?;
    println!("{} eigenvalues, largest first:", eigs.len());
    for z in eigs.iter().take(8) {
        println!("  {:+.10} {:+.2e}i", z.re, z.im);
    }
    Ok(())
}
