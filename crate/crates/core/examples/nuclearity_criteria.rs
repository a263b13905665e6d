//! Criterion series for Bessel potentials on T¹ on both sides of the
//! boundary α r = 1, and the dimension sums Σ d^{-s} on SU(2).

use lienuc::catalog::bessel_symbol;
use lienuc::group::GroupId;
use lienuc::nuclearity::{criterion_invariant_l2, dim_sum_convergence, LambdaSchedule};

fn main() -> lienuc::Result<()> {
    let schedule = LambdaSchedule::dyadic(1, 18)?;
    for alpha in [0.8, 1.0, 1.2, 2.0] {
        let sigma = bessel_symbol(GroupId::Torus(1), alpha, f64::INFINITY)?;
        let rep = criterion_invariant_l2(&sigma, 1.0, &schedule)?;
        println!(
            "T1 Bessel α = {alpha}: {:?}, S(Λ = 2^18) = {:.4}, tail exponent {:?}",
            rep.verdict,
            rep.final_sum(),
            rep.fitted_tail_exponent.map(|e| (e * 1e3).round() / 1e3)
        );
    }
    for s in [2.5, 3.0, 3.5] {
        let rep = dim_sum_convergence(GroupId::SU2, s, &LambdaSchedule::deep(GroupId::SU2))?;
        println!("SU2 Σ d^-{s}: {:?}", rep.verdict);
    }
    Ok(())
}
