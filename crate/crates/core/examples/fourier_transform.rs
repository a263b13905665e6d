//! Forward and inverse group Fourier transform of a band-limited function,
//! with the Plancherel identity as a check.

use std::sync::Arc;

use lienuc::fourier::{forward_ft, inverse_ft, parseval_defect, GridFunction};
use lienuc::group::{duals_up_to_level, GroupId, GroupPoint, Level, QuadratureRule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lienuc::Result<()> {
    for group in [GroupId::Torus(2), GroupId::SU2, GroupId::SO3] {
        let level = Level::integer(3);
        let rule = Arc::new(QuadratureRule::new(group, level));
        let f = GridFunction::random_band_limited(rule, level, &mut ChaCha8Rng::seed_from_u64(7))?;
        let coeffs = forward_ft(&f, &duals_up_to_level(group, level))?;

        let x = match group {
            GroupId::Torus(_) => GroupPoint::torus(vec![0.1, 0.7])?,
            _ => GroupPoint::euler(group, 0.3, 1.1, 2.0)?,
        };
        let direct = f.interpolate(&x)?;
        let synth = inverse_ft(&coeffs, &x)?;
        println!(
            "{group}: ‖f‖² = {:.6}, Plancherel defect {:.1e}, |f(x) − Σ d Tr(ξ(x) f̂)| = {:.1e}",
            f.l2_norm_sq(),
            parseval_defect(&f, &coeffs),
            (direct - synth).norm()
        );
    }
    Ok(())
}
