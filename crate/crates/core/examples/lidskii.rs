//! Trace = eigenvalue sum for an x-dependent operator on SU(2), the
//! hypothesis gate, and the eigenvalue summability bound.

use lienuc::catalog::separable_demo;
use lienuc::group::GroupId;
use lienuc::nuclearity::CriterionQuery;
use lienuc::spectral::{cutoff_for_level, lidskii_regime, lidskii_verify};

fn main() -> lienuc::Result<()> {
    let cutoff = cutoff_for_level(GroupId::SU2, 3.0)?;
    let sigma = separable_demo(1.0, cutoff)?;
    let rep = lidskii_verify(&sigma, &CriterionQuery::new(2.0 / 3.0, 4.0, 4.0)?, cutoff)?;
    println!("finite section {}×{}", rep.size, rep.size);
    println!("  symbol trace  {:.12}", rep.trace_symbol.re);
    println!("  kernel trace  {:.12}", rep.trace_kernel.re);
    println!("  eigenvalues   {:.12}", rep.trace_eigsum.re);
    println!("  relative residual {:.1e}", rep.lidskii_residual_relative);
    println!(
        "  Σ|λ|^{:.3} = {:.4} ≤ n_r^s = {:.4}",
        rep.s_exponent,
        rep.summability_value,
        rep.nr_upper_bound.powf(rep.s_exponent)
    );
    for (r, p) in [(0.6, 2.0), (0.8, 4.0), (0.8, 2.0)] {
        match lidskii_regime(r, p) {
            Ok(regime) => println!("(r, p) = ({r}, {p}): {regime:?}"),
            Err(e) => println!("(r, p) = ({r}, {p}): {e}"),
        }
    }
    Ok(())
}
