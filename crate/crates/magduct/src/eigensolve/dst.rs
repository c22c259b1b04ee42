//! Sine-transform preconditioning for the strip pencils.
//!
//! On the tensor grid the zero-field straight form factorizes exactly:
//! with 2 x 2 Gauss quadrature the bilinear stiffness and mass matrices
//! are Kronecker products of the one-dimensional hat-function matrices,
//!
//! ```text
//!   S0 = Kx (x) My + Mx (x) Ky,      M = Mx (x) My,
//! ```
//!
//! and the one-dimensional Dirichlet matrices are diagonalized by the
//! discrete sine basis `sin(pi k j / (n + 1))`.  The preconditioner
//! applies `(S0 - sigma M)^{-1}` spectrally: a DST-I along each grid
//! direction, a diagonal division, and the inverse transforms.  The
//! shift `sigma` may be moved just below the smallest pencil eigenvalue
//! of `(S0, M)` (known in closed form), which turns the solve into an
//! inexpensive inverse iteration for the magnetic and deformed pencils
//! whose dominant part is `S0`.
//!
//! The DST-I of length `n` rides on a complex FFT of length `2(n + 1)`
//! applied to the odd extension; it is its own inverse up to the factor
//! `(n + 1) / 2`.  Everything here acts on complex data, so the solver
//! can precondition complex residual blocks directly.

use crate::assembly::StripGrid;
use crate::sparse::CsrMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unnormalized DST-I of length `n` (complex data).
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Dst1 {
    pub fn new(n: usize) -> Dst1 {
        let len = 2 * (n + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        Dst1 {
            n,
            fft,
            buf: vec![Complex64::ZERO; len],
        }
    }

    /// In-place `X_k = sum_j x_j sin(pi j k / (n + 1))`.
    pub fn apply(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        let len = 2 * (n + 1);
        self.buf[0] = Complex64::ZERO;
        self.buf[n + 1] = Complex64::ZERO;
        for j in 1..=n {
            self.buf[j] = data[j - 1];
            self.buf[len - j] = -data[j - 1];
        }
        self.fft.process(&mut self.buf);
        // the FFT of the odd extension returns -2i times the sine sum
        for k in 1..=n {
            let c = self.buf[k];
            data[k - 1] = Complex64::new(-0.5 * c.im, 0.5 * c.re);
        }
    }
}

/// One-dimensional hat-function eigenvalues on `n` interior nodes with
/// spacing `h`: `(stiffness, mass)` against the sine mode `k = 1..=n`.
fn p1_eigenvalues(n: usize, h: f64) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / (n + 1) as f64;
            ((2.0 - 2.0 * t.cos()) / h, h * (2.0 + t.cos()) / 3.0)
        })
        .collect()
}

/// Ground eigenvalue of the zero-field pencil `(S0, M)` on `grid`,
/// exact from the tensor factorization.  This is the discrete stand-in
/// for the essential-spectrum threshold 1 on that grid, and the
/// reference level that detection runs calibrate against.
pub fn band_floor(grid: &StripGrid) -> f64 {
    let tx = std::f64::consts::PI / (grid.nx - 1) as f64;
    let ty = std::f64::consts::PI / (grid.ny - 1) as f64;
    let rx = (2.0 - 2.0 * tx.cos()) / grid.hx / (grid.hx * (2.0 + tx.cos()) / 3.0);
    let ry = (2.0 - 2.0 * ty.cos()) / grid.hy / (grid.hy * (2.0 + ty.cos()) / 3.0);
    rx + ry
}

/// Spectral inverse of `S0 - sigma M` on a strip grid.
pub struct TensorPreconditioner {
    nix: usize,
    niy: usize,
    dst_x: Dst1,
    dst_y: Dst1,
    mu_x: Vec<(f64, f64)>,
    mu_y: Vec<(f64, f64)>,
    sigma: f64,
    mu_min: f64,
    gap: f64,
    inv_diag: Vec<f64>,
    col: Vec<Complex64>,
}

impl TensorPreconditioner {
    pub fn new(grid: &StripGrid) -> TensorPreconditioner {
        let nix = grid.nx - 2;
        let niy = grid.ny - 2;
        let mu_x = p1_eigenvalues(nix, grid.hx);
        let mu_y = p1_eigenvalues(niy, grid.hy);
        let ratio = |m: &[(f64, f64)], k: usize| m[k].0 / m[k].1;
        let mu_min = ratio(&mu_x, 0) + ratio(&mu_y, 0);
        let mut gap = mu_min; // fallback for degenerate 1-mode grids
        if nix > 1 {
            gap = gap.min(ratio(&mu_x, 1) - ratio(&mu_x, 0));
        }
        if niy > 1 {
            gap = gap.min(ratio(&mu_y, 1) - ratio(&mu_y, 0));
        }
        let mut p = TensorPreconditioner {
            nix,
            niy,
            dst_x: Dst1::new(nix),
            dst_y: Dst1::new(niy),
            mu_x,
            mu_y,
            sigma: f64::NAN,
            mu_min,
            gap,
            inv_diag: vec![0.0; nix * niy],
            col: vec![Complex64::ZERO; nix],
        };
        p.set_shift(0.0);
        p
    }

    /// Smallest eigenvalue of the discrete pencil `(S0, M)`; shifts are
    /// clamped strictly below it so the preconditioner stays definite.
    pub fn mu_min(&self) -> f64 {
        self.mu_min
    }

    /// Shifts are kept a quarter mode-spacing under the band bottom:
    /// close enough for an inverse-iteration effect, far enough that the
    /// amplification ratio between neighboring modes stays bounded and
    /// the preconditioned residual block keeps its rank.
    pub fn max_safe_shift(&self) -> f64 {
        self.mu_min - (0.25 * self.gap).max(1e-12 * self.mu_min.max(1.0))
    }

    pub fn set_shift(&mut self, sigma: f64) {
        let sigma = sigma.min(self.max_safe_shift());
        if sigma == self.sigma {
            return;
        }
        self.sigma = sigma;
        let scale = 4.0 / ((self.nix + 1) as f64 * (self.niy + 1) as f64);
        for (i, &(kx, mx)) in self.mu_x.iter().enumerate() {
            for (j, &(ky, my)) in self.mu_y.iter().enumerate() {
                let d = kx * my + mx * ky - sigma * mx * my;
                self.inv_diag[i * self.niy + j] = scale / d;
            }
        }
    }

    pub fn shift(&self) -> f64 {
        self.sigma
    }

    /// `z = (S0 - sigma M)^{-1} r`, both of length `nix * niy`,
    /// y-fastest ordering.
    pub fn apply(&mut self, r: &[Complex64], z: &mut [Complex64]) {
        let (nix, niy) = (self.nix, self.niy);
        debug_assert_eq!(r.len(), nix * niy);
        z.copy_from_slice(r);
        for i in 0..nix {
            self.dst_y.apply(&mut z[i * niy..(i + 1) * niy]);
        }
        for j in 0..niy {
            for i in 0..nix {
                self.col[i] = z[i * niy + j];
            }
            self.dst_x.apply(&mut self.col);
            for i in 0..nix {
                z[i * niy + j] = self.col[i] * self.inv_diag[i * niy + j];
            }
        }
        for j in 0..niy {
            for i in 0..nix {
                self.col[i] = z[i * niy + j];
            }
            self.dst_x.apply(&mut self.col);
            for i in 0..nix {
                z[i * niy + j] = self.col[i];
            }
        }
        for i in 0..nix {
            self.dst_y.apply(&mut z[i * niy..(i + 1) * niy]);
        }
    }
}

/// Diagonal (Jacobi) alternative, kept as a slower fallback that makes
/// no structural assumption about the pencil.
pub struct JacobiPreconditioner {
    s_diag: Vec<f64>,
    m_diag: Vec<f64>,
    inv: Vec<f64>,
    sigma: f64,
}

impl JacobiPreconditioner {
    pub fn new(s: &CsrMatrix, m: &CsrMatrix) -> JacobiPreconditioner {
        let s_diag: Vec<f64> = s.diagonal().iter().map(|d| d.re).collect();
        let m_diag: Vec<f64> = m.diagonal().iter().map(|d| d.re).collect();
        let mut p = JacobiPreconditioner {
            s_diag,
            m_diag,
            inv: Vec::new(),
            sigma: f64::NAN,
        };
        p.set_shift(0.0);
        p
    }

    pub fn set_shift(&mut self, sigma: f64) {
        if sigma == self.sigma {
            return;
        }
        self.sigma = sigma;
        let dmax = self
            .s_diag
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()))
            .max(1e-300);
        let floor = 1e-12 * dmax;
        self.inv = self
            .s_diag
            .iter()
            .zip(&self.m_diag)
            .map(|(&s, &m)| 1.0 / (s - sigma * m).max(floor))
            .collect();
    }

    pub fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        for ((zi, ri), &w) in z.iter_mut().zip(r).zip(&self.inv) {
            *zi = ri * w;
        }
    }
}

/// Preconditioner selector used by the block solver.
pub enum Preconditioner {
    Identity,
    Jacobi(JacobiPreconditioner),
    SineTensor(TensorPreconditioner),
}

impl Preconditioner {
    pub fn identity() -> Preconditioner {
        Preconditioner::Identity
    }

    pub fn jacobi(s: &CsrMatrix, m: &CsrMatrix) -> Preconditioner {
        Preconditioner::Jacobi(JacobiPreconditioner::new(s, m))
    }

    pub fn sine_tensor(grid: &StripGrid) -> Preconditioner {
        Preconditioner::SineTensor(TensorPreconditioner::new(grid))
    }

    pub fn apply(&mut self, r: &[Complex64], z: &mut [Complex64]) {
        match self {
            Preconditioner::Identity => z.copy_from_slice(r),
            Preconditioner::Jacobi(j) => j.apply(r, z),
            Preconditioner::SineTensor(t) => t.apply(r, z),
        }
    }

    pub fn set_shift(&mut self, sigma: f64) {
        match self {
            Preconditioner::Identity => {}
            Preconditioner::Jacobi(j) => j.set_shift(sigma),
            Preconditioner::SineTensor(t) => t.set_shift(sigma),
        }
    }

    pub fn max_safe_shift(&self) -> Option<f64> {
        match self {
            Preconditioner::SineTensor(t) => Some(t.max_safe_shift()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_straight, StripGrid};
    use crate::gauge::VectorPotential;
    use num_complex::Complex64;

    #[test]
    fn dst_matches_direct_sum() {
        let n = 11;
        let mut dst = Dst1::new(n);
        let data: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let mut out = data.clone();
        dst.apply(&mut out);
        for k in 1..=n {
            let mut direct = Complex64::ZERO;
            for j in 1..=n {
                let s = (std::f64::consts::PI * (j * k) as f64 / (n + 1) as f64).sin();
                direct += data[j - 1] * s;
            }
            assert!((out[k - 1] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn dst_involution_scaling() {
        let n = 16;
        let mut dst = Dst1::new(n);
        let data: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(1.0 / (1.0 + j as f64), j as f64))
            .collect();
        let mut out = data.clone();
        dst.apply(&mut out);
        dst.apply(&mut out);
        let scale = (n + 1) as f64 / 2.0;
        for (a, b) in out.iter().zip(&data) {
            assert!((a - b * scale).norm() < 1e-11);
        }
    }

    #[test]
    fn tensor_preconditioner_inverts_shifted_operator() {
        let grid = StripGrid::new(3.0, 14, 9).unwrap();
        let sys = assemble_straight(&grid, &VectorPotential::Zero).unwrap();
        let mut pre = TensorPreconditioner::new(&grid);
        let sigma = 0.8;
        pre.set_shift(sigma);
        let n = grid.dof();
        let r: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut z = vec![Complex64::ZERO; n];
        pre.apply(&r, &mut z);
        // residual of (S0 - sigma M) z - r
        let mut sz = vec![Complex64::ZERO; n];
        let mut mz = vec![Complex64::ZERO; n];
        sys.s.matvec(&z, &mut sz);
        sys.m.matvec(&z, &mut mz);
        let mut worst = 0.0f64;
        let rn = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            worst = worst.max((sz[i] - mz[i] * sigma - r[i]).norm());
        }
        assert!(worst / rn < 1e-12, "relative defect {}", worst / rn);
    }

    #[test]
    fn mu_min_matches_rayleigh_on_first_sine_mode() {
        let grid = StripGrid::new(2.0, 12, 8).unwrap();
        let sys = assemble_straight(&grid, &VectorPotential::Zero).unwrap();
        let pre = TensorPreconditioner::new(&grid);
        let n = grid.dof();
        let niy = grid.ny - 2;
        let mut v = vec![Complex64::ZERO; n];
        for i in 0..grid.nx - 2 {
            for j in 0..grid.ny - 2 {
                let sx = (std::f64::consts::PI * (i + 1) as f64 / (grid.nx - 1) as f64).sin();
                let sy = (std::f64::consts::PI * (j + 1) as f64 / (grid.ny - 1) as f64).sin();
                v[i * niy + j] = Complex64::new(sx * sy, 0.0);
            }
        }
        let mut sv = vec![Complex64::ZERO; n];
        let mut mv = vec![Complex64::ZERO; n];
        sys.s.matvec(&v, &mut sv);
        sys.m.matvec(&v, &mut mv);
        let num: f64 = v.iter().zip(&sv).map(|(a, b)| (a.conj() * b).re).sum();
        let den: f64 = v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum();
        assert!((num / den - pre.mu_min()).abs() < 1e-10);
    }

    #[test]
    fn shift_clamp_keeps_definiteness() {
        let grid = StripGrid::new(2.0, 12, 8).unwrap();
        let mut pre = TensorPreconditioner::new(&grid);
        pre.set_shift(1e9);
        assert!(pre.shift() < pre.mu_min());
        assert!(pre.inv_diag.iter().all(|d| *d > 0.0));
    }
}
