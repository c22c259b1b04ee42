//! Eigenvalue machinery for the assembled Hermitian pencils.
//!
//! Everything funnels through [`lowest_pairs`]: small pencils are solved
//! densely (Cholesky reduction to a standard Hermitian problem), large
//! ones go through the preconditioned block iteration in [`lobpcg`].
//! Both paths return ascending eigenvalues, `M`-orthonormal vectors and
//! explicit residual norms, so tests can cross-check one path against
//! the other on the same pencil.
//!
//! On top of that sit the two queries the physics actually needs: the
//! discrete spectrum below a threshold (bound-state counting below the
//! essential spectrum), and the smallest ratio of the shifted form
//! against a Hardy weight (the computable side of the Hardy constants).

pub mod dst;
mod lobpcg;

pub use dst::{band_floor, Dst1, JacobiPreconditioner, Preconditioner, TensorPreconditioner};

use crate::assembly::HermitianFormSystem;
use crate::error::Error;
use crate::sparse::CsrMatrix;
use crate::Result;
use num_complex::Complex64;

/// Pencils smaller than this are handed to the dense solver unless the
/// caller forces the iterative path.
pub const DENSE_CUTOFF: usize = 2000;

/// How the preconditioner shift is steered during the iteration.
#[derive(Clone, Copy, Debug)]
pub enum ShiftPolicy {
    /// Leave the preconditioner as built.
    NoShift,
    /// Track the lowest Ritz value from just below (inverse iteration).
    Adaptive,
    /// One fixed shift for the whole solve.
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Number of requested eigenpairs.
    pub k: usize,
    /// Relative residual tolerance, measured against the matrix scales.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Skip the dense fallback even for small pencils.
    pub force_iterative: bool,
    /// Extra block columns beyond `k` (guard eigenvalues).
    pub block_extra: usize,
    pub shift: ShiftPolicy,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            k: 4,
            tol: 1e-9,
            max_iter: 600,
            seed: 0xC0FFEE,
            force_iterative: false,
            block_extra: 4,
            shift: ShiftPolicy::Adaptive,
        }
    }
}

/// Eigenpairs of a Hermitian pencil, ascending.
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors, one `Vec` per pair.
    pub vectors: Vec<Vec<Complex64>>,
    /// `||S u - theta M u||_2` per pair (`u` is `M`-normalized).
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: &'static str,
    /// `max |X^H M X - I|` over the returned block.
    pub ortho_defect: f64,
}

fn dense_lowest(s: &CsrMatrix, m: &CsrMatrix, k: usize) -> Result<SpectralResult> {
    let n = s.n;
    let k = k.min(n).max(1);
    let sd = s.to_dense();
    let md = m.to_dense();
    let chol = md
        .cholesky()
        .ok_or_else(|| Error::Config("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let t1 = l
        .solve_lower_triangular(&sd)
        .ok_or_else(|| Error::Config("singular Cholesky factor".into()))?;
    let t2 = l
        .solve_lower_triangular(&t1.adjoint())
        .ok_or_else(|| Error::Config("singular Cholesky factor".into()))?;
    let b = t2.adjoint();
    let b = (&b + &b.adjoint()) * Complex64::new(0.5, 0.0);
    let se = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));

    let la = l.adjoint();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut sx = vec![Complex64::ZERO; n];
    let mut mx = vec![Complex64::ZERO; n];
    for &idx in order.iter().take(k) {
        let u = se.eigenvectors.column(idx).into_owned();
        let xv = la
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Config("singular Cholesky factor".into()))?;
        let xvec: Vec<Complex64> = xv.iter().copied().collect();
        s.matvec(&xvec, &mut sx);
        m.matvec(&xvec, &mut mx);
        let th = Complex64::new(se.eigenvalues[idx], 0.0);
        let rn: f64 = sx
            .iter()
            .zip(&mx)
            .map(|(a, b)| (a - th * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        eigenvalues.push(se.eigenvalues[idx]);
        residuals.push(rn);
        vectors.push(xvec);
    }
    // orthonormality defect over the returned block
    let mut defect = 0.0f64;
    for (i, vi) in vectors.iter().enumerate() {
        m.matvec(vi, &mut mx);
        for (j, vj) in vectors.iter().enumerate() {
            let dot: Complex64 = vj.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum();
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::ZERO
            };
            defect = defect.max((dot - target).norm());
        }
    }
    Ok(SpectralResult {
        eigenvalues,
        vectors,
        residuals,
        iterations: 1,
        converged: true,
        method: "dense",
        ortho_defect: defect,
    })
}

/// Lowest `opts.k` eigenpairs of the Hermitian pencil `(S, M)`.
pub fn lowest_pairs(
    s: &CsrMatrix,
    m: &CsrMatrix,
    pre: &mut Preconditioner,
    opts: &SolveOptions,
) -> Result<SpectralResult> {
    if s.n != m.n {
        return Err(Error::Config(format!(
            "pencil dimension mismatch: {} vs {}",
            s.n, m.n
        )));
    }
    if s.n < DENSE_CUTOFF && !opts.force_iterative {
        dense_lowest(s, m, opts.k)
    } else {
        lobpcg::lobpcg(s, m, pre, opts)
    }
}

/// [`lowest_pairs`] with the sine-transform preconditioner built from
/// the system's own grid.
pub fn lowest_pairs_auto(sys: &HermitianFormSystem, opts: &SolveOptions) -> Result<SpectralResult> {
    let mut pre = Preconditioner::sine_tensor(&sys.grid);
    lowest_pairs(&sys.s, &sys.m, &mut pre, opts)
}

/// Discrete spectrum strictly below `threshold`, with solver evidence.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BelowThresholdReport {
    pub threshold: f64,
    pub eigenvalues_below: Vec<f64>,
    pub all_computed: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub method: String,
}

/// Compute the eigenvalues below `threshold`, growing the block until
/// at least one computed value lies at or above it (or a cap is hit).
pub fn discrete_spectrum_below_threshold(
    sys: &HermitianFormSystem,
    threshold: f64,
    opts: &SolveOptions,
) -> Result<BelowThresholdReport> {
    let mut k = opts.k.max(2);
    let cap = 64.min(sys.grid.dof());
    loop {
        let mut o = opts.clone();
        o.k = k;
        let res = lowest_pairs_auto(sys, &o)?;
        let below: Vec<f64> = res
            .eigenvalues
            .iter()
            .copied()
            .filter(|&e| e < threshold)
            .collect();
        if below.len() < res.eigenvalues.len() || k >= cap {
            return Ok(BelowThresholdReport {
                threshold,
                eigenvalues_below: below,
                all_computed: res.eigenvalues,
                residuals: res.residuals,
                iterations: res.iterations,
                method: res.method.into(),
            });
        }
        k = (2 * k).min(cap);
    }
}

/// Smallest eigenvalue of the weighted pencil `(S - M, W)`: the discrete
/// Hardy quotient `inf (s[u] - ||u||^2) / ||u||_w^2`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightedRatioReport {
    pub ratio: f64,
    pub all_computed: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: String,
    /// The quotient came out negative: the shifted form is indefinite on
    /// this grid, so no positive Hardy constant is certified by it.
    pub numerator_indefinite: bool,
}

pub fn smallest_weighted_ratio(
    sys: &HermitianFormSystem,
    opts: &SolveOptions,
) -> Result<WeightedRatioReport> {
    let w = sys
        .w
        .as_ref()
        .ok_or_else(|| Error::Config("system has no Hardy weight attached".into()))?;
    let shifted = CsrMatrix::linear_combination(1.0, &sys.s, -1.0, &sys.m);
    let mut pre = Preconditioner::sine_tensor(&sys.grid);
    let mut o = opts.clone();
    if let Some(safe) = pre.max_safe_shift() {
        o.shift = ShiftPolicy::Fixed(safe);
    }
    let res = lowest_pairs(&shifted, w, &mut pre, &o)?;
    Ok(WeightedRatioReport {
        ratio: res.eigenvalues[0],
        all_computed: res.eigenvalues.clone(),
        residual: res.residuals[0],
        iterations: res.iterations,
        method: res.method.into(),
        numerator_indefinite: res.eigenvalues[0] < 0.0,
    })
}
