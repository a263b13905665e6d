//! A continuous function on T¹ whose Fourier coefficients are square
//! summable but not r-summable for any r < 2.

use lienuc::catalog::carleman_demo;
use lienuc::nuclearity::LambdaSchedule;

fn main() -> lienuc::Result<()> {
    let rep = carleman_demo(1 << 16, &LambdaSchedule::dyadic(1, 18)?)?;
    println!("N = {} ({} Rudin–Shapiro blocks)", rep.n_max, rep.blocks);
    println!("sup |f| on {} points: {:.4} (certified ≤ {:.4})", rep.sup_grid_points, rep.measured_sup, rep.sup_certificate);
    println!("Σ|c|² = {:.8}, limit {:.8}", rep.l2_sum, rep.l2_limit);
    for row in rep.power_sums.iter().filter(|p| p.r == 1.0) {
        println!("Σ_(n ≤ {:>6}) |c_n| = {:.4}", row.n, row.sum);
    }
    println!("trace-class criterion for f * ·: {:?}", rep.criterion_verdict);
    Ok(())
}
