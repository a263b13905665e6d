//! Wigner small-d matrices.
//!
//! Small spins use the explicit factorial sum
//!
//! `d^j_{m'm}(β) = Σ_s (-1)^{m'-m+s} √((j+m')!(j-m')!(j+m)!(j-m)!)
//!   / ((j+m-s)! s! (m'-m+s)! (j-m'-s)!) · cos(β/2)^{2j+m-m'-2s} sin(β/2)^{m'-m+2s}`
//!
//! whose alternating terms cancel badly once `j` passes about 10 (at
//! `j = 50` the result is useless). Larger spins diagonalize `J_y = V M V*`
//! once per `j` and form `d(β) = V e^{-iβM} V*`, accurate to a few ulps
//! times `j`. Rows and columns run over `m = j, j-1, …, -j`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

const TABLE_LEN: usize = 160;

fn log_factorials() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for n in 1..TABLE_LEN {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// Largest `2j` served by the factorial sum.
const EXPLICIT_MAX_TWO_J: u32 = 16;

/// Real `(2j+1)×(2j+1)` matrix `d^j(β)`; `two_j = 2j`.
pub fn small_d(two_j: u32, beta: f64) -> DMatrix<f64> {
    if two_j <= EXPLICIT_MAX_TWO_J {
        explicit_d(two_j, beta)
    } else {
        spectral_d(two_j, beta)
    }
}

type JyEigen = Arc<(DMatrix<C64>, Vec<f64>)>;

/// Eigenvectors of `J_y` with eigenvalues snapped to the exact `m`.
fn jy_eigen(two_j: u32) -> JyEigen {
    static CACHE: OnceLock<Mutex<HashMap<u32, JyEigen>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.lock().expect("cache poisoned").get(&two_j) {
        return e.clone();
    }
    let n = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    // ⟨m+1|J_+|m⟩ sits at (i-1, i) for m = j - i; J_y = (J_+ - J_-)/2i.
    let mut jy = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        let m = j - i as f64;
        let c = (j * (j + 1.0) - m * (m + 1.0)).sqrt() / 2.0;
        jy[(i - 1, i)] = C64::new(0.0, -c);
        jy[(i, i - 1)] = C64::new(0.0, c);
    }
    let eig = SymmetricEigen::new(jy);
    let snapped = eig.eigenvalues.iter().map(|mu| (2.0 * mu).round() / 2.0).collect();
    let e = Arc::new((eig.eigenvectors, snapped));
    cache.lock().expect("cache poisoned").insert(two_j, e.clone());
    e
}

fn spectral_d(two_j: u32, beta: f64) -> DMatrix<f64> {
    let e = jy_eigen(two_j);
    let (v, mu) = (&e.0, &e.1);
    let mut scaled = v.clone();
    for (k, m) in mu.iter().enumerate() {
        let phase = C64::from_polar(1.0, -beta * m);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    (scaled * v.adjoint()).map(|z| z.re)
}

fn explicit_d(two_j: u32, beta: f64) -> DMatrix<f64> {
    let big_j = two_j as usize;
    let n = big_j + 1;
    let lf = log_factorials();
    assert!(big_j + 1 < TABLE_LEN, "spin too large for log-factorial table");
    let c = (0.5 * beta).cos();
    let s = (0.5 * beta).sin();
    let (lc, ls) = (c.abs().ln(), s.abs().ln());
    let (neg_c, neg_s) = (c < 0.0, s < 0.0);

    DMatrix::from_fn(n, n, |i, k| {
        // Row i ↔ m' = j - i, column k ↔ m = j - k.
        let norm = 0.5 * (lf[big_j - i] + lf[i] + lf[big_j - k] + lf[k]);
        let s_lo = i.saturating_sub(k);
        let s_hi = (big_j - k).min(i);
        let mut acc = 0.0;
        for sv in s_lo..=s_hi {
            let cos_pow = big_j + i - k - 2 * sv;
            let sin_pow = k + 2 * sv - i;
            let mut log_mag = norm - lf[big_j - k - sv] - lf[sv] - lf[k + sv - i] - lf[i - sv];
            // 0^0 = 1; a zero base with positive power kills the term.
            if cos_pow > 0 {
                if c == 0.0 {
                    continue;
                }
                log_mag += cos_pow as f64 * lc;
            }
            if sin_pow > 0 {
                if s == 0.0 {
                    continue;
                }
                log_mag += sin_pow as f64 * ls;
            }
            let mut negative = (k + sv - i) % 2 == 1;
            if neg_c && cos_pow % 2 == 1 {
                negative = !negative;
            }
            if neg_s && sin_pow % 2 == 1 {
                negative = !negative;
            }
            let term = log_mag.exp();
            acc += if negative { -term } else { term };
        }
        acc
    })
}

/// `D_{mn} = e^{-imα} d_{mn} e^{-inγ}`.
pub fn assemble(two_j: u32, d: &DMatrix<f64>, alpha: f64, gamma: f64) -> DMatrix<C64> {
    let n = two_j as usize + 1;
    let phase = |idx: usize, angle: f64| {
        let m = (two_j as f64 - 2.0 * idx as f64) / 2.0;
        C64::from_polar(1.0, -m * angle)
    };
    let left: Vec<C64> = (0..n).map(|i| phase(i, alpha)).collect();
    let right: Vec<C64> = (0..n).map(|k| phase(k, gamma)).collect();
    DMatrix::from_fn(n, n, |i, k| left[i] * d[(i, k)] * right[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_matches_explicit() {
        for two_j in [1, 2, 5, 9, 16] {
            for beta in [0.0, 0.4, 1.5, 2.9, std::f64::consts::PI] {
                let gap = (explicit_d(two_j, beta) - spectral_d(two_j, beta)).abs().max();
                assert!(gap < 1e-13, "2j = {two_j}, β = {beta}: {gap:e}");
            }
        }
    }

    #[test]
    fn large_spin_orthogonal() {
        for two_j in [100, 301, 400] {
            let n = two_j as usize + 1;
            let d = small_d(two_j, 1.5);
            let defect = (&d * d.transpose() - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(defect < 1e-11, "2j = {two_j}: {defect:e}");
            // Composition: d(a) d(b) = d(a + b).
            let comp = (small_d(two_j, 0.5) * small_d(two_j, 1.0) - d).abs().max();
            assert!(comp < 1e-11, "2j = {two_j}: {comp:e}");
        }
    }

    #[test]
    fn spin_half_closed_form() {
        let beta = 0.7;
        let d = small_d(1, beta);
        let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
        let expect = [[c, -s], [s, c]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((d[(i, k)] - expect[i][k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_one_closed_form() {
        let b: f64 = 1.1;
        let d = small_d(2, b);
        let (c, s) = (b.cos(), b.sin());
        let r2 = std::f64::consts::SQRT_2;
        let expect = [
            [(1.0 + c) / 2.0, -s / r2, (1.0 - c) / 2.0],
            [s / r2, c, -s / r2],
            [(1.0 - c) / 2.0, s / r2, (1.0 + c) / 2.0],
        ];
        for i in 0..3 {
            for k in 0..3 {
                assert!((d[(i, k)] - expect[i][k]).abs() < 1e-14, "({i},{k})");
            }
        }
    }

    #[test]
    fn endpoints() {
        for two_j in 0..8 {
            let n = two_j as usize + 1;
            let at_zero = small_d(two_j, 0.0);
            assert!((at_zero - DMatrix::<f64>::identity(n, n)).abs().max() < 1e-15);
            // d(π) is the anti-diagonal with signs (-1)^{j-m}.
            let at_pi = small_d(two_j, std::f64::consts::PI);
            for i in 0..n {
                for k in 0..n {
                    let v = at_pi[(i, k)];
                    if i + k == n - 1 {
                        assert!((v.abs() - 1.0).abs() < 1e-12);
                    } else {
                        assert!(v.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn orthogonal_for_moderate_spin() {
        for two_j in [5u32, 12, 20] {
            let d = small_d(two_j, 1.234);
            let n = two_j as usize + 1;
            let err = (&d * d.transpose() - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-12, "two_j={two_j}: {err}");
        }
    }
}
