//! Dense complex eigenvalues: Householder reduction to Hessenberg form, then
//! single-shift QR with Wilkinson shifts and deflation. Hermitian pieces go
//! through nalgebra's symmetric solver instead.

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Sweeps allowed per eigenvalue before giving up.
const ITER_PER_EIGENVALUE: usize = 30;
const EXCEPTIONAL_EVERY: usize = 10;
const HERMITIAN_TOL: f64 = 1e-13;

/// All eigenvalues with multiplicity, in no particular order.
///
/// The matrix is first split into the connected components of its nonzero
/// pattern; each component is solved on its own.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::domain("eigenvalues need a square matrix"));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let mut out = Vec::with_capacity(n);
    for comp in components(m) {
        let sub = DMatrix::from_fn(comp.len(), comp.len(), |i, j| m[(comp[i], comp[j])]);
        out.extend(solve_block(sub)?);
    }
    Ok(out)
}

fn solve_block(m: DMatrix<C64>) -> Result<Vec<C64>> {
    match m.nrows() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![m[(0, 0)]]),
        _ if is_hermitian(&m) => hermitian(m),
        _ => {
            let mut h = m;
            hessenberg(&mut h);
            hessenberg_qr(h)
        }
    }
}

/// Index sets of the connected components of the graph with an edge
/// wherever `m[i][j]` or `m[j][i]` is nonzero, each sorted, ordered by
/// smallest index.
fn components(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

pub(crate) fn is_hermitian(m: &DMatrix<C64>) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE);
    (0..m.nrows()).all(|i| (0..=i).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

fn hermitian(m: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, ITER_PER_EIGENVALUE * n * 10)
        .ok_or_else(|| Error::NoConvergence(format!("Hermitian solver on a {n}×{n} block")))?;
    Ok(eig.eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect())
}

/// In-place unitary similarity to upper Hessenberg form.
pub(crate) fn hessenberg(h: &mut DMatrix<C64>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vn;
        }
        // Left: H ← (I − 2vv*)H on rows k+1.., columns k..
        for j in k..n {
            let dot: C64 = v.iter().enumerate().map(|(a, vi)| vi.conj() * h[(k + 1 + a, j)]).sum();
            for (a, vi) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= *vi * dot * 2.0;
            }
        }
        // Right: H ← H(I − 2vv*) on all rows, columns k+1..
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(a, vi)| h[(i, k + 1 + a)] * vi).sum();
            for (a, vi) in v.iter().enumerate() {
                h[(i, k + 1 + a)] -= dot * vi.conj() * 2.0;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let mean = (a + d) * 0.5;
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    (mean + disc, mean - disc)
}

fn hessenberg_qr(mut h: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = h.nrows();
    let limit = ITER_PER_EIGENVALUE * n;
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Find the start of the unreduced window ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (a, b) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eig[lo] = a;
            eig[hi] = b;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > limit {
            return Err(Error::NoConvergence(format!(
                "QR iteration on a {n}×{n} Hessenberg matrix exceeded {limit} sweeps; {} eigenvalues still undeflated, last subdiagonal {:e}",
                hi + 1,
                h[(hi, hi - 1)].norm()
            )));
        }
        let shift = if since_deflation.is_multiple_of(EXCEPTIONAL_EVERY) {
            // The window has at least three rows here, so hi − 2 ≥ lo.
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75 + h[(hi - 1, hi - 2)].norm() * 0.25
        } else {
            let (a, b) = eig2(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            if (a - h[(hi, hi)]).norm() <= (b - h[(hi, hi)]).norm() {
                a
            } else {
                b
            }
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

/// One explicit shifted QR step `H − μ = QR`, `H ← RQ + μ` on rows and
/// columns `lo..=hi`.
fn qr_sweep(h: &mut DMatrix<C64>, lo: usize, hi: usize, mu: C64) {
    for k in lo..=hi {
        h[(k, k)] -= mu;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (x, y) = (h[(k, k)], h[(k + 1, k)]);
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        for j in k..=hi {
            let (a, b) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = c.conj() * a + s.conj() * b;
            h[(k + 1, j)] = -s * a + c * b;
        }
        h[(k + 1, k)] = C64::new(0.0, 0.0);
        rotations.push((c, s));
    }
    for (off, (c, s)) in rotations.into_iter().enumerate() {
        let k = lo + off;
        for i in lo..=(k + 1).min(hi) {
            let (a, b) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = a * c + b * s;
            h[(i, k + 1)] = -a * s.conj() + b * c.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] += mu;
    }
}
