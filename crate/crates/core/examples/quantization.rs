//! Apply an x-dependent operator through its symbol, then recover the
//! symbol from the operator alone.

use std::sync::Arc;

use lienuc::catalog::separable_demo;
use lienuc::group::{GroupId, Irrep, Level, QuadratureRule};
use lienuc::quantize::{apply_op, assemble_matrix, extract_symbol};

fn main() -> lienuc::Result<()> {
    let sigma = separable_demo(0.5, f64::INFINITY)?;
    let rule = Arc::new(QuadratureRule::new(GroupId::SU2, Level::integer(3)));
    let spin_one = Irrep::spin(GroupId::SU2, Level::integer(1))?;

    for node in [0, 40, 200] {
        let got = extract_symbol(|f| apply_op(&sigma, f), &rule, &spin_one, node)?;
        let want = sigma.value_at_node(&rule, node, &spin_one)?.to_dense();
        println!("node {node}: σ(x, ξ₁)₀₀ = {:.6}, recovery error {:.1e}", got[(0, 0)].re, (&got - want).norm());
    }

    let op = assemble_matrix(&sigma.with_cutoff(3.0)?, 3.0)?;
    println!("finite section for ⟨ξ⟩ ≤ 3: {}×{}, trace {:.6}", op.size(), op.size(), op.matrix_trace().re);
    Ok(())
}
