//! Diagonal criterion for (I − L_sub)^{-α/2} on SU(2) across α = 4/r.

use lienuc::catalog::sublaplacian_symbol;
use lienuc::group::{GroupId, Irrep, Level};
use lienuc::nuclearity::{criterion_diagonal, CriterionQuery, LambdaSchedule};

fn main() -> lienuc::Result<()> {
    let schedule = LambdaSchedule::deep(GroupId::SU2);
    for r in [1.0, 0.8] {
        let q = CriterionQuery::l2(r)?;
        for alpha in [3.5 / r, 4.4 / r] {
            let sigma = sublaplacian_symbol(GroupId::SU2, alpha, f64::INFINITY)?;
            let rep = criterion_diagonal(&sigma, &q, &schedule)?;
            println!("r = {r}, α = {alpha:.3}: {:?}", rep.verdict);
        }
    }

    let sigma = sublaplacian_symbol(GroupId::SU2, 3.0, f64::INFINITY)?;
    for l in [20, 50, 100, 200] {
        let b = sigma.block(&Irrep::spin(GroupId::SU2, Level::integer(l))?)?;
        println!("ℓ = {l}: ‖σ(ℓ)‖_S1 = {:.6e}  (ℓ^-1.5 = {:.6e})", b.schatten_power(1.0)?, (l as f64).powf(-1.5));
    }
    Ok(())
}
