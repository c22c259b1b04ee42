//! Shared test oracles, deliberately built from different numerics than
//! the library under test: composite Simpson panels instead of Gauss
//! quadrature, a power-series Bessel evaluation with bisection, a cyclic
//! complex Jacobi eigensolver instead of the Cholesky + QR dense path,
//! and a physical-domain isoparametric assembler instead of the
//! pulled-back reference-strip forms.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magduct::geometry::Profile;
use magduct::sparse::{CooBuilder, CsrMatrix};

/// Composite Simpson over `[a, b]` with `2n` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let m = 2 * n.max(1);
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Tensor-product Simpson over a rectangle.
pub fn simpson2d<F: Fn(f64, f64) -> f64>(
    f: F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    nx: usize,
    ny: usize,
) -> f64 {
    simpson(|x| simpson(|y| f(x, y), ay, by, ny), ax, bx, nx)
}

/// Bessel J0 by its power series; ample accuracy on the bisection
/// bracket `[2, 3]`.
pub fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// First positive zero of J0 by bisection.
pub fn j0_first_zero_oracle() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    assert!(j0_series(lo) > 0.0 && j0_series(hi) < 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if j0_series(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dense column-major Hermitian matrix for the oracle eigensolver.
#[derive(Clone)]
pub struct DenseH {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl DenseH {
    pub fn zeros(n: usize) -> DenseH {
        DenseH { n, a: vec![Complex64::ZERO; n * n] }
    }

    pub fn from_csr(m: &CsrMatrix) -> DenseH {
        let n = m.n;
        let mut d = DenseH::zeros(n);
        for r in 0..n {
            for idx in m.indptr[r]..m.indptr[r + 1] {
                d.a[m.indices[idx] as usize * n + r] = m.values[idx];
            }
        }
        d
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.a[c * self.n + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.a[c * self.n + r] = v;
    }
}

/// Hand-rolled complex Cholesky `M = L L^*`; panics unless positive
/// definite (test inputs are constructed to be).
fn cholesky(m: &DenseH) -> DenseH {
    let n = m.n;
    let mut l = DenseH::zeros(n);
    for j in 0..n {
        let mut d = m.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        assert!(d > 0.0, "oracle: mass matrix not positive definite");
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut s = m.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, s / ljj);
        }
    }
    l
}

/// `C = L^{-1} S L^{-*}`, Hermitized.
fn whiten_pencil(s: &DenseH, l: &DenseH) -> DenseH {
    let n = s.n;
    // forward: L Y = S, column by column
    let mut y = s.clone();
    for c in 0..n {
        for r in 0..n {
            let mut v = y.at(r, c);
            for k in 0..r {
                v -= l.at(r, k) * y.at(k, c);
            }
            y.set(r, c, v / l.at(r, r));
        }
    }
    // right: C L^* = Y, so column j of C uses the earlier columns
    let mut cmat = y;
    for j in 0..n {
        for k in 0..j {
            let f = l.at(j, k).conj();
            for r in 0..n {
                let v = cmat.at(r, j) - cmat.at(r, k) * f;
                cmat.set(r, j, v);
            }
        }
        let d = l.at(j, j).re;
        for r in 0..n {
            let v = cmat.at(r, j) / d;
            cmat.set(r, j, v);
        }
    }
    for r in 0..n {
        for c in 0..r {
            let h = 0.5 * (cmat.at(r, c) + cmat.at(c, r).conj());
            cmat.set(r, c, h);
            cmat.set(c, r, h.conj());
        }
    }
    cmat
}

/// All eigenvalues of a Hermitian matrix by cyclic complex Jacobi
/// rotations, ascending.
pub fn jacobi_eigenvalues(mut a: DenseH) -> Vec<f64> {
    let n = a.n;
    if n == 1 {
        return vec![a.at(0, 0).re];
    }
    let norm: f64 = a.a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let stop = 1e-14 * norm.max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.at(p, q).norm_sqr();
            }
        }
        if (2.0 * off).sqrt() < stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq.norm() < 1e-300 {
                    continue;
                }
                let (app, aqq) = (a.at(p, p).re, a.at(q, q).re);
                let abs = apq.norm();
                let phase = apq / abs;
                let tau = (aqq - app) / (2.0 * abs);
                // sign chosen so the (p, q) entry of V^* A V vanishes
                // with the V laid out below
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // V acts on the (p, q) plane:
                //   V_pp = c,          V_pq = -s
                //   V_qp = s conj(ph), V_qq = c conj(ph)
                let vqp = Complex64::new(s, 0.0) * phase.conj();
                let vqq = Complex64::new(c, 0.0) * phase.conj();
                // columns: A <- A V
                for r in 0..n {
                    let (arp, arq) = (a.at(r, p), a.at(r, q));
                    a.set(r, p, arp * c + arq * vqp);
                    a.set(r, q, -arp * s + arq * vqq);
                }
                // rows: A <- V^* A
                for col in 0..n {
                    let (apc, aqc) = (a.at(p, col), a.at(q, col));
                    a.set(p, col, apc * c + aqc * vqp.conj());
                    a.set(q, col, -apc * s + aqc * vqq.conj());
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// All generalized eigenvalues of the Hermitian pencil `(S, M)` via the
/// oracle Cholesky + Jacobi route, ascending.
pub fn pencil_eigenvalues_oracle(s: &CsrMatrix, m: &CsrMatrix) -> Vec<f64> {
    let sd = DenseH::from_csr(s);
    let md = DenseH::from_csr(m);
    let l = cholesky(&md);
    jacobi_eigenvalues(whiten_pencil(&sd, &l))
}

/// Random Hermitian pencil: `S` dense Hermitian with entries of order
/// one, `M` an identity-dominated Gram matrix (safely positive
/// definite).  Returned as CSR so the library solvers accept it.
pub fn random_pencil(n: usize, seed: u64) -> (CsrMatrix, CsrMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| -> Complex64 {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    };
    let mut s = CooBuilder::new(n);
    let mut m = CooBuilder::new(n);
    let mut g = vec![Complex64::ZERO; n * n];
    for v in g.iter_mut() {
        *v = draw(1.0);
    }
    for r in 0..n {
        for c in r..n {
            let v = if r == c {
                Complex64::new(draw(1.0).re, 0.0)
            } else {
                draw(1.0)
            };
            s.add(r, c, v);
            if r != c {
                s.add(c, r, v.conj());
            }
            // M = I + G G^* / (4n)
            let mut dot = Complex64::ZERO;
            for k in 0..n {
                dot += g[r * n + k] * g[c * n + k].conj();
            }
            let mv = dot / (4.0 * n as f64)
                + if r == c { Complex64::new(1.0, 0.0) } else { Complex64::ZERO };
            m.add(r, c, mv);
            if r != c {
                m.add(c, r, mv.conj());
            }
        }
    }
    (s.build(), m.build())
}

/// Lowest eigenvalues of the Dirichlet Laplacian on the *physical*
/// deformed strip `{0 < y < pi g(x)}`, truncated to `|x| < length`,
/// discretized directly with isoparametric bilinear quadrilaterals on
/// the mapped tensor mesh.  Independent route to the same spectrum the
/// library reaches through the transformed form on the straight strip.
pub fn mapped_deformed_eigenvalues(
    profile: &Profile,
    lambda: f64,
    length: f64,
    nx: usize,
    ny: usize,
    k: usize,
) -> Vec<f64> {
    let g = |x: f64| 1.0 + lambda * profile.eval(x);
    let xs: Vec<f64> = (0..nx)
        .map(|i| -length + 2.0 * length * i as f64 / (nx - 1) as f64)
        .collect();
    let ts: Vec<f64> = (0..ny)
        .map(|j| std::f64::consts::PI * j as f64 / (ny - 1) as f64)
        .collect();
    let node = |i: usize, j: usize| -> (f64, f64) { (xs[i], g(xs[i]) * ts[j]) };

    let interior = |i: usize, j: usize| -> Option<usize> {
        if i == 0 || i == nx - 1 || j == 0 || j == ny - 1 {
            None
        } else {
            Some((i - 1) * (ny - 2) + (j - 1))
        }
    };
    let dof = (nx - 2) * (ny - 2);
    let mut s = DenseH::zeros(dof);
    let mut m = DenseH::zeros(dof);

    let gp = 1.0 / 3.0f64.sqrt();
    let quad = [(-gp, -gp), (gp, -gp), (gp, gp), (-gp, gp)];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let corners = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
            let ids = [
                interior(i, j),
                interior(i + 1, j),
                interior(i + 1, j + 1),
                interior(i, j + 1),
            ];
            let mut sl = [[0.0f64; 4]; 4];
            let mut ml = [[0.0f64; 4]; 4];
            for &(xi, eta) in &quad {
                let nfun = [
                    0.25 * (1.0 - xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 + eta),
                    0.25 * (1.0 - xi) * (1.0 + eta),
                ];
                let dxi = [
                    -0.25 * (1.0 - eta),
                    0.25 * (1.0 - eta),
                    0.25 * (1.0 + eta),
                    -0.25 * (1.0 + eta),
                ];
                let deta = [
                    -0.25 * (1.0 - xi),
                    -0.25 * (1.0 + xi),
                    0.25 * (1.0 + xi),
                    0.25 * (1.0 - xi),
                ];
                let (mut jxx, mut jxe, mut jyx, mut jye) = (0.0, 0.0, 0.0, 0.0);
                for a in 0..4 {
                    jxx += corners[a].0 * dxi[a];
                    jxe += corners[a].0 * deta[a];
                    jyx += corners[a].1 * dxi[a];
                    jye += corners[a].1 * deta[a];
                }
                let det = jxx * jye - jxe * jyx;
                assert!(det > 0.0, "oracle: mapped element degenerated");
                let mut gxs = [0.0f64; 4];
                let mut gys = [0.0f64; 4];
                for a in 0..4 {
                    gxs[a] = (jye * dxi[a] - jyx * deta[a]) / det;
                    gys[a] = (-jxe * dxi[a] + jxx * deta[a]) / det;
                }
                for a in 0..4 {
                    for b in 0..4 {
                        sl[a][b] += (gxs[a] * gxs[b] + gys[a] * gys[b]) * det;
                        ml[a][b] += nfun[a] * nfun[b] * det;
                    }
                }
            }
            for a in 0..4 {
                let Some(ra) = ids[a] else { continue };
                for b in 0..4 {
                    let Some(rb) = ids[b] else { continue };
                    let sv = s.at(ra, rb) + Complex64::new(sl[a][b], 0.0);
                    s.set(ra, rb, sv);
                    let mv = m.at(ra, rb) + Complex64::new(ml[a][b], 0.0);
                    m.set(ra, rb, mv);
                }
            }
        }
    }
    let l = cholesky(&m);
    let vals = jacobi_eigenvalues(whiten_pencil(&s, &l));
    vals.into_iter().take(k).collect()
}
