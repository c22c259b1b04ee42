//! Locally optimal block preconditioned conjugate gradient iteration for
//! Hermitian pencils `S u = theta M u` with `M` positive definite.
//!
//! The iteration keeps three blocks: the current Ritz vectors `X`, the
//! preconditioned residuals `W`, and the conjugate directions `P`
//! carried over from the previous step.  Each sweep `M`-orthonormalizes
//! `W` against `X`, then `P` against both, performs a Rayleigh-Ritz
//! solve on the combined basis, and extracts the lowest block together
//! with the implicit difference directions.  Rank-deficient blocks are
//! compressed by eigenvalue whitening of their Gram matrices, so the
//! basis never degenerates even when searching well past convergence.
//!
//! With the adaptive shift policy the preconditioner is retargeted each
//! sweep to sit just below the current lowest Ritz value, which turns
//! the sine-transform preconditioner into an inverse iteration whose
//! shift tracks the eigenvalue from above.  All randomness comes from a
//! caller-provided seed and the iteration is strictly serial, so runs
//! are reproducible bit for bit.

use super::dst::Preconditioner;
use super::{ShiftPolicy, SolveOptions, SpectralResult};
use crate::error::Error;
use crate::sparse::CsrMatrix;
use crate::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

/// `a^H b` for column-major blocks of height `n`.
fn gram(n: usize, a: &[C], b: &[C]) -> DMatrix<C> {
    let p = a.len() / n;
    let q = b.len() / n;
    let mut g = DMatrix::zeros(p, q);
    for c in 0..q {
        let bc = &b[c * n..(c + 1) * n];
        for r in 0..p {
            let ar = &a[r * n..(r + 1) * n];
            let mut acc = C::ZERO;
            for i in 0..n {
                acc += ar[i].conj() * bc[i];
            }
            g[(r, c)] = acc;
        }
    }
    g
}

/// `x * c` for a column-major block, producing a fresh block.
fn block_mul(n: usize, x: &[C], c: &DMatrix<C>) -> Vec<C> {
    let q = c.ncols();
    let mut y = vec![C::ZERO; n * q];
    block_mul_acc(n, x, c, &mut y, 1.0);
    y
}

/// `y += alpha * x * c`.
fn block_mul_acc(n: usize, x: &[C], c: &DMatrix<C>, y: &mut [C], alpha: f64) {
    let p = c.nrows();
    debug_assert_eq!(x.len(), n * p);
    for j in 0..c.ncols() {
        let yj = &mut y[j * n..(j + 1) * n];
        for r in 0..p {
            let coeff = c[(r, j)] * alpha;
            if coeff == C::ZERO {
                continue;
            }
            let xr = &x[r * n..(r + 1) * n];
            for i in 0..n {
                yj[i] += coeff * xr[i];
            }
        }
    }
}

fn hermitize(mut a: DMatrix<C>) -> DMatrix<C> {
    let ah = a.adjoint();
    a += ah;
    a * C::new(0.5, 0.0)
}

/// Eigendecomposition of a small Hermitian matrix with ascending values.
fn sorted_eig(a: DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    let p = a.nrows();
    let se = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(p, p);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `M`-orthonormalize a block by whitening its Gram matrix, dropping
/// directions below `drop_tol` relative to the largest one.  Companion
/// blocks (`m y`, optionally `s y`) are transformed consistently.
/// Returns the retained rank.
fn whiten(
    n: usize,
    drop_tol: f64,
    y: &mut Vec<C>,
    my: &mut Vec<C>,
    sy: Option<&mut Vec<C>>,
) -> usize {
    if y.is_empty() {
        return 0;
    }
    let g = hermitize(gram(n, y, my));
    let p = g.nrows();
    let se = g.symmetric_eigen();
    let lmax = se.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    if lmax <= 0.0 {
        y.clear();
        my.clear();
        if let Some(sy) = sy {
            sy.clear();
        }
        return 0;
    }
    let keep: Vec<usize> = (0..p)
        .filter(|&i| se.eigenvalues[i] > drop_tol * lmax)
        .collect();
    let mut t = DMatrix::zeros(p, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = C::new(1.0 / se.eigenvalues[i].sqrt(), 0.0);
        t.set_column(c, &(se.eigenvectors.column(i) * scale));
    }
    *y = block_mul(n, y, &t);
    *my = block_mul(n, my, &t);
    if let Some(sy) = sy {
        *sy = block_mul(n, sy, &t);
    }
    keep.len()
}

fn column_norms(n: usize, x: &[C]) -> Vec<f64> {
    x.chunks(n)
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

pub(super) fn lobpcg(
    s: &CsrMatrix,
    m: &CsrMatrix,
    pre: &mut Preconditioner,
    opts: &SolveOptions,
) -> Result<SpectralResult> {
    let n = s.n;
    let k = opts.k.min(n).max(1);
    let p = (k + opts.block_extra).min(n);
    let drop_tol = 1e-12;
    let s_scale = s.max_abs_row_sum();
    let m_scale = m.max_abs_row_sum();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<C> = (0..n * p)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut mx = vec![C::ZERO; n * p];
    m.matmat(&x, &mut mx, p);
    if whiten(n, drop_tol, &mut x, &mut mx, None) < p {
        return Err(Error::Config(
            "random start block collapsed during orthonormalization".into(),
        ));
    }
    let mut sx = vec![C::ZERO; n * p];
    s.matmat(&x, &mut sx, p);
    let (mut theta, c0) = sorted_eig(hermitize(gram(n, &x, &sx)));
    x = block_mul(n, &x, &c0);
    sx = block_mul(n, &sx, &c0);
    mx = block_mul(n, &mx, &c0);

    if let ShiftPolicy::Fixed(s0) = opts.shift {
        pre.set_shift(s0);
    }

    let mut pdir: Vec<C> = Vec::new();
    let mut spdir: Vec<C> = Vec::new();
    let mut mpdir: Vec<C> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut converged = false;
    let mut iterations = 0;

    let mut resid = vec![C::ZERO; n * p];
    for iter in 0..opts.max_iter {
        iterations = iter;
        // residual block R = S X - M X diag(theta)
        for j in 0..p {
            let th = C::new(theta[j], 0.0);
            let (sj, mj) = (&sx[j * n..(j + 1) * n], &mx[j * n..(j + 1) * n]);
            let rj = &mut resid[j * n..(j + 1) * n];
            for i in 0..n {
                rj[i] = sj[i] - th * mj[i];
            }
        }
        let xnorms = column_norms(n, &x);
        let rnorms = column_norms(n, &resid);
        let rel: Vec<f64> = (0..p)
            .map(|j| rnorms[j] / ((s_scale + theta[j].abs() * m_scale) * xnorms[j]))
            .collect();
        if rel.iter().any(|r| !r.is_finite()) {
            return Err(Error::NoConvergence {
                iters: iter,
                best_residual: f64::NAN,
                best_values: theta[..k].to_vec(),
            });
        }
        let worst = rel[..k].iter().fold(0.0f64, |a, &b| a.max(b));
        if best.as_ref().map_or(true, |(_, b)| worst < *b) {
            best = Some((theta[..k].to_vec(), worst));
        }
        if worst < opts.tol {
            converged = true;
            break;
        }

        if matches!(opts.shift, ShiftPolicy::Adaptive) {
            let gap = if p > 1 { (theta[1] - theta[0]).abs() } else { 0.0 };
            let margin = (1e-8 * theta[0].abs().max(1.0)).max(0.01 * gap);
            pre.set_shift(theta[0] - margin);
        }

        // preconditioned residuals
        let mut w = vec![C::ZERO; n * p];
        for j in 0..p {
            pre.apply(&resid[j * n..(j + 1) * n], &mut w[j * n..(j + 1) * n]);
        }
        // project out the X component in the M inner product
        let cxw = gram(n, &mx, &w);
        block_mul_acc(n, &x, &cxw, &mut w, -1.0);
        let mut mw = vec![C::ZERO; n * p];
        m.matmat(&w, &mut mw, p);
        let rw = whiten(n, drop_tol, &mut w, &mut mw, None);
        if rw == 0 {
            break; // residuals lie entirely in span(X): stagnation
        }
        let mut sw = vec![C::ZERO; n * rw];
        s.matmat(&w, &mut sw, rw);

        let mut rp = 0;
        if !pdir.is_empty() {
            let cxp = gram(n, &mx, &pdir);
            block_mul_acc(n, &x, &cxp, &mut pdir, -1.0);
            block_mul_acc(n, &sx, &cxp, &mut spdir, -1.0);
            block_mul_acc(n, &mx, &cxp, &mut mpdir, -1.0);
            let cwp = gram(n, &mw, &pdir);
            block_mul_acc(n, &w, &cwp, &mut pdir, -1.0);
            block_mul_acc(n, &sw, &cwp, &mut spdir, -1.0);
            block_mul_acc(n, &mw, &cwp, &mut mpdir, -1.0);
            rp = whiten(n, drop_tol, &mut pdir, &mut mpdir, Some(&mut spdir));
        }

        // Rayleigh-Ritz on the combined basis [X W P]
        let dim = p + rw + rp;
        let mut a = DMatrix::zeros(dim, dim);
        let fill = |a: &mut DMatrix<C>, g: &DMatrix<C>, r0: usize, c0: usize| {
            for r in 0..g.nrows() {
                for c in 0..g.ncols() {
                    a[(r0 + r, c0 + c)] = g[(r, c)];
                }
            }
        };
        let g_xx = gram(n, &x, &sx);
        let g_xw = gram(n, &x, &sw);
        let g_ww = gram(n, &w, &sw);
        fill(&mut a, &g_xx, 0, 0);
        fill(&mut a, &g_xw, 0, p);
        fill(&mut a, &g_xw.adjoint(), p, 0);
        fill(&mut a, &g_ww, p, p);
        if rp > 0 {
            let g_xp = gram(n, &x, &spdir);
            let g_wp = gram(n, &w, &spdir);
            let g_pp = gram(n, &pdir, &spdir);
            fill(&mut a, &g_xp, 0, p + rw);
            fill(&mut a, &g_xp.adjoint(), p + rw, 0);
            fill(&mut a, &g_wp, p, p + rw);
            fill(&mut a, &g_wp.adjoint(), p + rw, p);
            fill(&mut a, &g_pp, p + rw, p + rw);
        }
        let (vals, vecs) = sorted_eig(hermitize(a));
        theta = vals[..p].to_vec();
        let cfull = vecs.columns(0, p).into_owned();
        let cx = cfull.rows(0, p).into_owned();
        let cw = cfull.rows(p, rw).into_owned();
        let cp = if rp > 0 {
            Some(cfull.rows(p + rw, rp).into_owned())
        } else {
            None
        };

        let assemble3 = |bx: &[C], bw: &[C], bp: &Vec<C>| -> Vec<C> {
            let mut out = block_mul(n, bx, &cx);
            block_mul_acc(n, bw, &cw, &mut out, 1.0);
            if let Some(cp) = &cp {
                block_mul_acc(n, bp, cp, &mut out, 1.0);
            }
            out
        };
        let x_new = assemble3(&x, &w, &pdir);
        let sx_new = assemble3(&sx, &sw, &spdir);
        let mx_new = assemble3(&mx, &mw, &mpdir);
        // difference directions: the W and P contributions only
        let mut p_new = block_mul(n, &w, &cw);
        let mut sp_new = block_mul(n, &sw, &cw);
        let mut mp_new = block_mul(n, &mw, &cw);
        if let Some(cp) = &cp {
            block_mul_acc(n, &pdir, cp, &mut p_new, 1.0);
            block_mul_acc(n, &spdir, cp, &mut sp_new, 1.0);
            block_mul_acc(n, &mpdir, cp, &mut mp_new, 1.0);
        }
        x = x_new;
        sx = sx_new;
        mx = mx_new;
        pdir = p_new;
        spdir = sp_new;
        mpdir = mp_new;
    }

    if !converged {
        let (vals, residual) = best.expect("at least one sweep ran");
        return Err(Error::NoConvergence {
            iters: iterations,
            best_residual: residual,
            best_values: vals,
        });
    }

    // final polish: re-orthonormalize the leading block and redo a small
    // Rayleigh-Ritz so the returned pairs are orthonormal to rounding
    let mut xk = x[..n * k].to_vec();
    let mut mxk = mx[..n * k].to_vec();
    let mut sxk = sx[..n * k].to_vec();
    whiten(n, drop_tol, &mut xk, &mut mxk, Some(&mut sxk));
    let (vals, c) = sorted_eig(hermitize(gram(n, &xk, &sxk)));
    xk = block_mul(n, &xk, &c);
    sxk = block_mul(n, &sxk, &c);
    mxk = block_mul(n, &mxk, &c);

    let g = gram(n, &xk, &mxk);
    let mut ortho_defect = 0.0f64;
    for r in 0..k {
        for cidx in 0..k {
            let target = if r == cidx { C::new(1.0, 0.0) } else { C::ZERO };
            ortho_defect = ortho_defect.max((g[(r, cidx)] - target).norm());
        }
    }
    let mut residuals = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for j in 0..k {
        let (sj, mj, xj) = (
            &sxk[j * n..(j + 1) * n],
            &mxk[j * n..(j + 1) * n],
            &xk[j * n..(j + 1) * n],
        );
        let th = C::new(vals[j], 0.0);
        let rn: f64 = sj
            .iter()
            .zip(mj)
            .map(|(a, b)| (a - th * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residuals.push(rn);
        vectors.push(xj.to_vec());
    }
    Ok(SpectralResult {
        eigenvalues: vals,
        vectors,
        residuals,
        iterations: iterations + 1,
        converged: true,
        method: "lobpcg",
        ortho_defect,
    })
}
