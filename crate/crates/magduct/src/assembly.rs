//! Finite-element assembly of the strip quadratic forms.
//!
//! Discretization: bilinear rectangular elements on a tensor grid over
//! the truncated strip `(−L, L) × (0, π)`, Dirichlet conditions on all
//! four edges (the artificial vertical edges sit far in the region where
//! bound states have decayed), complex nodal values, 2 × 2 Gauss
//! quadrature per cell.  Degrees of freedom are the interior nodes,
//! numbered `y`-fastest so that each vertical grid line is contiguous.
//!
//! Three forms share the element loop, differing only in the coefficient
//! functions evaluated at quadrature points:
//!
//! * **straight**:  `∫ |(−i∇ + A) u|²` against `∫ |u|²`;
//! * **deformed**:  the straight-strip pullback of the widened strip
//!   `0 < y < π (1 + λ f(x))`, with metric factor `g = 1 + λ f` and the
//!   potential composed with the map, plus the first-order terms the
//!   pullback generates;
//! * **curved**:    the pullback from the curved strip of width `π` over
//!   the curve with signed curvature `β γ`, Jacobian `J = 1 + y β γ(x)`.
//!
//! Setting `λ = 0` (resp. `β = 0`) reproduces the straight form to
//! rounding, which is one of the assembly self-checks.  All matrices are
//! Hermitian by construction: real symmetric contributions enter the
//! local blocks symmetrically, imaginary first-order contributions enter
//! antisymmetrically.
//!
//! Aharonov–Bohm runs need the flux singularity strictly inside a cell;
//! [`StripGrid::with_puncture`] enforces a minimum distance of a quarter
//! cell from every node, and the 2 × 2 Gauss points then keep a uniform
//! distance from the singular point.  The `1/r²` strength of the
//! potential at the nearest quadrature points acts as a natural penalty
//! on any discrete density at the puncture.

use crate::error::Error;
use crate::gauge::VectorPotential;
use crate::geometry::{PlaneCurve, Profile};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::Result;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Tensor grid on the truncated strip `(−L, L) × (0, π)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StripGrid {
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Flux singularity that must stay clear of the nodes, if any.
    pub puncture: Option<(f64, f64)>,
}

impl StripGrid {
    pub fn new(length: f64, nx: usize, ny: usize) -> Result<StripGrid> {
        if !(length > 0.0) || nx < 3 || ny < 3 {
            return Err(Error::Config(format!(
                "grid needs L > 0 and at least 3 nodes per direction, got L = {length}, nx = {nx}, ny = {ny}"
            )));
        }
        Ok(StripGrid {
            length,
            nx,
            ny,
            hx: 2.0 * length / (nx - 1) as f64,
            hy: PI / (ny - 1) as f64,
            puncture: None,
        })
    }

    /// Grid that must keep the point `p` at least `min(hx, hy)/4` away
    /// from every node (Aharonov–Bohm runs).  Even node counts place the
    /// natural flux point `(0, π/2)` exactly at a cell center.
    pub fn with_puncture(length: f64, nx: usize, ny: usize, p: (f64, f64)) -> Result<StripGrid> {
        let mut g = StripGrid::new(length, nx, ny)?;
        let dx = (0..g.nx)
            .map(|i| (g.x(i) - p.0).abs())
            .fold(f64::INFINITY, f64::min);
        let dy = (0..g.ny)
            .map(|j| (g.y(j) - p.1).abs())
            .fold(f64::INFINITY, f64::min);
        let dist = dx.hypot(dy);
        let min = g.hx.min(g.hy) / 4.0;
        if dist < min {
            return Err(Error::PunctureNearNode {
                x: p.0,
                y: p.1,
                dist,
                min,
            });
        }
        g.puncture = Some(p);
        Ok(g)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.length + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// Number of interior (unknown) nodes.
    pub fn dof(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Interior numbering, `y`-fastest; `None` on the Dirichlet boundary.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1 {
            None
        } else {
            Some((i - 1) * (self.ny - 2) + (j - 1))
        }
    }

    /// Inverse of [`StripGrid::index`].
    pub fn node_of(&self, k: usize) -> (usize, usize) {
        (k / (self.ny - 2) + 1, k % (self.ny - 2) + 1)
    }
}

/// Assembled Hermitian pencil `(S, M)` with an optional weight `W`.
#[derive(Debug, Clone)]
pub struct HermitianFormSystem {
    pub grid: StripGrid,
    /// Quadratic form matrix.
    pub s: CsrMatrix,
    /// Mass matrix (positive definite).
    pub m: CsrMatrix,
    /// Hardy weight matrix, when one was requested.
    pub w: Option<CsrMatrix>,
    pub meta: SystemMeta,
}

/// Provenance of an assembled system, written next to matrix exports.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SystemMeta {
    pub mode: String,
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub dof: usize,
    pub lambda: f64,
    pub beta: f64,
    pub potential: String,
    pub weight: Option<String>,
}

/// Hardy weight selector.
#[derive(Debug, Clone, Copy)]
pub enum WeightKind {
    /// `1 / (1 + x²)` — the bounded-field Hardy weight.
    InverseQuadraticX,
    /// `1 / ((x − p₁)² + (y − p₂)²)` — the point-flux Hardy weight.
    InverseDistanceSq { p: (f64, f64) },
}

/// Coefficients of the sesquilinear form density at one quadrature point:
///
/// ```text
///   cxx u_x v̄_x + cyy u_y v̄_y + c00 u v̄
///   + cxy (u_x v̄_y + u_y v̄_x) + cx0 (u v̄_x + u_x v̄) + cy0 (u v̄_y + u_y v̄)
///   + i ax (u v̄_x − u_x v̄) + i ay (u v̄_y − u_y v̄)
/// ```
#[derive(Debug, Clone, Copy, Default)]
struct FormCoeffs {
    cxx: f64,
    cyy: f64,
    c00: f64,
    cxy: f64,
    cx0: f64,
    cy0: f64,
    ax: f64,
    ay: f64,
}

fn straight_coeffs(pot: &VectorPotential, x: f64, y: f64) -> Result<FormCoeffs> {
    let (a1, a2) = pot.eval(x, y)?;
    Ok(FormCoeffs {
        cxx: 1.0,
        cyy: 1.0,
        c00: a1 * a1 + a2 * a2,
        ax: a1,
        ay: a2,
        ..Default::default()
    })
}

fn deformed_coeffs(
    profile: &Profile,
    lambda: f64,
    pot: &VectorPotential,
    x: f64,
    y: f64,
) -> Result<FormCoeffs> {
    let f = profile.eval(x);
    let fp = profile.deriv(x);
    let g = 1.0 + lambda * f;
    let gp = lambda * fp;
    let (a1, a2) = pot.eval(x, g * y)?;
    Ok(FormCoeffs {
        cxx: 1.0,
        cyy: (y * y * gp * gp + 1.0) / (g * g),
        c00: a1 * a1 + a2 * a2 - 0.25 * (gp / g) * (gp / g),
        cxy: -y * gp / g,
        cx0: -gp / (2.0 * g),
        cy0: 0.0,
        ax: a1,
        ay: a2 - (y * gp * a1 + lambda * f * a2) / g,
    })
}

fn curved_coeffs(
    profile: &Profile,
    beta: f64,
    pot: &VectorPotential,
    curve: &PlaneCurve,
    x: f64,
    y: f64,
) -> Result<FormCoeffs> {
    let gam = profile.eval(x);
    let gamp = profile.deriv(x);
    let jac = 1.0 + y * beta * gam;
    let c = curve.eval(x);
    let (a1, a2) = pot.eval(c.a - y * c.db, c.b + y * c.da)?;
    let j2 = jac * jac;
    Ok(FormCoeffs {
        cxx: 1.0 / j2,
        cyy: 1.0,
        c00: y * y * beta * beta * gamp * gamp / (4.0 * j2 * j2)
            + beta * beta * gam * gam / (4.0 * j2)
            + a1 * a1
            + a2 * a2,
        cxy: 0.0,
        cx0: -y * beta * gamp / (2.0 * j2 * jac),
        cy0: -beta * gam / (2.0 * jac),
        ax: (c.da * a1 + c.db * a2) / jac,
        ay: (-(c.db + y * c.dda) * a1 + (c.da - y * c.ddb) * a2) / jac,
    })
}

/// Shared element loop: assembles `S` from a coefficient callback and `M`
/// from the plain mass density.
fn assemble_with<F>(grid: &StripGrid, mut coeffs: F) -> Result<(CsrMatrix, CsrMatrix)>
where
    F: FnMut(f64, f64) -> Result<FormCoeffs>,
{
    let n = grid.dof();
    let cells = (grid.nx - 1) * (grid.ny - 1);
    let mut s_coo = CooBuilder::with_capacity(n, cells * 16);
    let mut m_coo = CooBuilder::with_capacity(n, cells * 16);

    // 2x2 Gauss on the reference square [0,1]^2
    let gp = [0.5 - 0.5 / 3.0_f64.sqrt(), 0.5 + 0.5 / 3.0_f64.sqrt()];
    let (hx, hy) = (grid.hx, grid.hy);
    let wq = 0.25 * hx * hy; // each Gauss point carries a quarter cell

    // local bilinear shape functions at (xi, eta), node order
    // (0,0), (1,0), (0,1), (1,1)
    let shape = |xi: f64, eta: f64| -> ([f64; 4], [f64; 4], [f64; 4]) {
        let nv = [
            (1.0 - xi) * (1.0 - eta),
            xi * (1.0 - eta),
            (1.0 - xi) * eta,
            xi * eta,
        ];
        let dx = [
            -(1.0 - eta) / hx,
            (1.0 - eta) / hx,
            -eta / hx,
            eta / hx,
        ];
        let dy = [
            -(1.0 - xi) / hy,
            -xi / hy,
            (1.0 - xi) / hy,
            xi / hy,
        ];
        (nv, dx, dy)
    };
    let qshapes: Vec<([f64; 4], [f64; 4], [f64; 4])> = gp
        .iter()
        .flat_map(|&eta| gp.iter().map(move |&xi| shape(xi, eta)))
        .collect();

    let mut s_loc = [[Complex64::ZERO; 4]; 4];
    let mut m_loc = [[0.0f64; 4]; 4];
    for ci in 0..grid.nx - 1 {
        let x0 = grid.x(ci);
        for cj in 0..grid.ny - 1 {
            let y0 = grid.y(cj);
            for row in s_loc.iter_mut() {
                *row = [Complex64::ZERO; 4];
            }
            for row in m_loc.iter_mut() {
                *row = [0.0; 4];
            }
            for (q, (nv, dx, dy)) in qshapes.iter().enumerate() {
                let xi = gp[q % 2];
                let eta = gp[q / 2];
                let (x, y) = (x0 + xi * hx, y0 + eta * hy);
                let cf = coeffs(x, y)?;
                for k in 0..4 {
                    for l in 0..4 {
                        let re = cf.cxx * dx[l] * dx[k]
                            + cf.cyy * dy[l] * dy[k]
                            + cf.c00 * nv[l] * nv[k]
                            + cf.cxy * (dx[l] * dy[k] + dy[l] * dx[k])
                            + cf.cx0 * (nv[l] * dx[k] + dx[l] * nv[k])
                            + cf.cy0 * (nv[l] * dy[k] + dy[l] * nv[k]);
                        let im = cf.ax * (nv[l] * dx[k] - dx[l] * nv[k])
                            + cf.ay * (nv[l] * dy[k] - dy[l] * nv[k]);
                        s_loc[k][l] += wq * Complex64::new(re, im);
                        if l >= k {
                            // mass density is 1; fill symmetric half
                            m_loc[k][l] += wq * nv[l] * nv[k];
                        }
                    }
                }
            }
            let nodes = [
                grid.index(ci, cj),
                grid.index(ci + 1, cj),
                grid.index(ci, cj + 1),
                grid.index(ci + 1, cj + 1),
            ];
            for k in 0..4 {
                let Some(rk) = nodes[k] else { continue };
                for l in 0..4 {
                    let Some(cl) = nodes[l] else { continue };
                    s_coo.add(rk, cl, s_loc[k][l]);
                    let mv = if l >= k { m_loc[k][l] } else { m_loc[l][k] };
                    m_coo.add(rk, cl, Complex64::new(mv, 0.0));
                }
            }
        }
    }
    Ok((s_coo.build(), m_coo.build()))
}

fn potential_label(pot: &VectorPotential) -> String {
    match pot {
        VectorPotential::Zero => "zero".into(),
        VectorPotential::Transversal { field, .. } => {
            format!("transversal(alpha={})", field.alpha())
        }
        VectorPotential::AharonovBohm { phi, .. } => format!("aharonov_bohm(phi={phi})"),
        VectorPotential::Uniform { a1, a2 } => format!("uniform(a1={a1}, a2={a2})"),
    }
}

/// Check that a potential's singular point (if any) is compatible with
/// the grid puncture contract.
fn check_puncture(grid: &StripGrid, pot: &VectorPotential) -> Result<()> {
    if let VectorPotential::AharonovBohm { p, .. } = pot {
        match grid.puncture {
            Some(q) if (q.0 - p.0).abs() < 1e-12 && (q.1 - p.1).abs() < 1e-12 => Ok(()),
            _ => Err(Error::Config(format!(
                "Aharonov-Bohm assembly needs a grid punctured at ({}, {})",
                p.0, p.1
            ))),
        }
    } else {
        Ok(())
    }
}

/// `S, M` for the straight strip: `s[u] = ∫ |(−i∇ + A) u|²`.
pub fn assemble_straight(
    grid: &StripGrid,
    pot: &VectorPotential,
) -> Result<HermitianFormSystem> {
    check_puncture(grid, pot)?;
    let (s, m) = assemble_with(grid, |x, y| straight_coeffs(pot, x, y))?;
    Ok(HermitianFormSystem {
        grid: grid.clone(),
        s,
        m,
        w: None,
        meta: SystemMeta {
            mode: "straight".into(),
            length: grid.length,
            nx: grid.nx,
            ny: grid.ny,
            hx: grid.hx,
            hy: grid.hy,
            dof: grid.dof(),
            lambda: 0.0,
            beta: 0.0,
            potential: potential_label(pot),
            weight: None,
        },
    })
}

/// `S, M` for the deformed strip `0 < y < π (1 + λ f(x))`, pulled back to
/// the straight strip.
pub fn assemble_deformed(
    grid: &StripGrid,
    profile: &Profile,
    lambda: f64,
    pot: &VectorPotential,
) -> Result<HermitianFormSystem> {
    check_puncture(grid, pot)?;
    // the map must be a diffeomorphism
    let (lo, hi) = profile.support();
    for i in 0..=2048 {
        let x = lo + (hi - lo) * i as f64 / 2048.0;
        let g = 1.0 + lambda * profile.eval(x);
        if g <= 0.0 {
            return Err(Error::JacobianNonPositive { x, y: 0.0, value: g });
        }
    }
    // a point flux must sit in the unperturbed region, else its pullback
    // moves off the declared puncture
    if matches!(pot, VectorPotential::AharonovBohm { .. }) && profile.eval(0.0) != 0.0 {
        return Err(Error::Config(
            "point-flux runs need the deformation supported away from x = 0".into(),
        ));
    }
    let (s, m) = assemble_with(grid, |x, y| deformed_coeffs(profile, lambda, pot, x, y))?;
    Ok(HermitianFormSystem {
        grid: grid.clone(),
        s,
        m,
        w: None,
        meta: SystemMeta {
            mode: "deformed".into(),
            length: grid.length,
            nx: grid.nx,
            ny: grid.ny,
            hx: grid.hx,
            hy: grid.hy,
            dof: grid.dof(),
            lambda,
            beta: 0.0,
            potential: potential_label(pot),
            weight: None,
        },
    })
}

/// `S, M` for the curved strip of width `π` over the curve with signed
/// curvature `β γ`, pulled back to the straight strip.  `curve` must be
/// the reconstruction for exactly that curvature.
pub fn assemble_curved(
    grid: &StripGrid,
    profile: &Profile,
    beta: f64,
    pot: &VectorPotential,
    curve: &PlaneCurve,
) -> Result<HermitianFormSystem> {
    check_puncture(grid, pot)?;
    // curvature consistency between the profile and the curve
    let (lo, hi) = profile.support();
    for i in 0..=32 {
        let x = lo + (hi - lo) * i as f64 / 32.0;
        let c = curve.eval(x);
        let kap = c.db * c.dda - c.da * c.ddb;
        if (kap - beta * profile.eval(x)).abs() > 1e-8 {
            return Err(Error::Config(format!(
                "curve curvature {kap} at x = {x} does not match beta*gamma = {}",
                beta * profile.eval(x)
            )));
        }
    }
    // Jacobian positivity on the closed strip
    for i in 0..=2048 {
        let x = lo + (hi - lo) * i as f64 / 2048.0;
        let j = 1.0 + PI * (beta * profile.eval(x)).min(0.0);
        if j <= 0.0 {
            return Err(Error::JacobianNonPositive { x, y: PI, value: j });
        }
    }
    if matches!(pot, VectorPotential::AharonovBohm { .. }) {
        let c0 = curve.eval(0.0);
        if c0.a.abs() > 1e-12 || c0.b.abs() > 1e-12 || (c0.da - 1.0).abs() > 1e-12 {
            return Err(Error::Config(
                "point-flux runs need the curvature supported away from x = 0".into(),
            ));
        }
    }
    let (s, m) = assemble_with(grid, |x, y| {
        curved_coeffs(profile, beta, pot, curve, x, y)
    })?;
    Ok(HermitianFormSystem {
        grid: grid.clone(),
        s,
        m,
        w: None,
        meta: SystemMeta {
            mode: "curved".into(),
            length: grid.length,
            nx: grid.nx,
            ny: grid.ny,
            hx: grid.hx,
            hy: grid.hy,
            dof: grid.dof(),
            lambda: 0.0,
            beta,
            potential: potential_label(pot),
            weight: None,
        },
    })
}

/// Weight matrix `W_{kl} = ∫ w(x, y) b_l b_k` for the Hardy quotients.
pub fn assemble_weight(grid: &StripGrid, kind: WeightKind) -> CsrMatrix {
    let weight = |x: f64, y: f64| -> f64 {
        match kind {
            WeightKind::InverseQuadraticX => 1.0 / (1.0 + x * x),
            WeightKind::InverseDistanceSq { p } => {
                let dx = x - p.0;
                let dy = y - p.1;
                1.0 / (dx * dx + dy * dy)
            }
        }
    };
    let (w, _) = assemble_with(grid, |x, y| {
        Ok(FormCoeffs {
            c00: weight(x, y),
            ..Default::default()
        })
    })
    .expect("weight assembly cannot fail");
    w
}

impl HermitianFormSystem {
    /// Attach a Hardy weight matrix.
    pub fn with_weight(mut self, kind: WeightKind) -> Self {
        self.w = Some(assemble_weight(&self.grid, kind));
        self.meta.weight = Some(match kind {
            WeightKind::InverseQuadraticX => "inverse_quadratic_x".into(),
            WeightKind::InverseDistanceSq { p } => {
                format!("inverse_distance_sq(p=({}, {}))", p.0, p.1)
            }
        });
        self
    }

    /// Write `s.txt`, `m.txt`, optionally `w.txt` (triplet text) plus a
    /// `system.json` sidecar into `dir`.
    pub fn export(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut fs = std::io::BufWriter::new(std::fs::File::create(dir.join("s.txt"))?);
        self.s.write_triplets(&mut fs)?;
        let mut fm = std::io::BufWriter::new(std::fs::File::create(dir.join("m.txt"))?);
        self.m.write_triplets(&mut fm)?;
        if let Some(w) = &self.w {
            let mut fw = std::io::BufWriter::new(std::fs::File::create(dir.join("w.txt"))?);
            w.write_triplets(&mut fw)?;
        }
        let json = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(dir.join("system.json"), json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{ab_potential, transversal_potential, MagneticField};
    use crate::geometry::{reconstruct_curve, ProfileKind};

    fn zero_pot() -> VectorPotential {
        VectorPotential::Zero
    }

    #[test]
    fn grid_indexing_roundtrip() {
        let g = StripGrid::new(5.0, 11, 7).unwrap();
        assert_eq!(g.dof(), 9 * 5);
        assert!((g.hx - 1.0).abs() < 1e-15);
        for k in 0..g.dof() {
            let (i, j) = g.node_of(k);
            assert_eq!(g.index(i, j), Some(k));
        }
        assert_eq!(g.index(0, 3), None);
        assert_eq!(g.index(10, 3), None);
        assert_eq!(g.index(4, 0), None);
        assert_eq!(g.index(4, 6), None);
    }

    #[test]
    fn puncture_placement() {
        let p = (0.0, PI / 2.0);
        // even node counts center the puncture in a cell
        assert!(StripGrid::with_puncture(4.0, 40, 20, p).is_ok());
        // odd counts in both directions put a node exactly on the puncture
        assert!(matches!(
            StripGrid::with_puncture(4.0, 41, 21, p),
            Err(Error::PunctureNearNode { .. })
        ));
        // a node line through x = 0 alone is fine when the y spacing
        // keeps every node at least a quarter cell away
        assert!(StripGrid::with_puncture(4.0, 41, 20, p).is_ok());
    }

    #[test]
    fn straight_mass_and_stiffness_sums() {
        let g = StripGrid::new(3.0, 13, 9).unwrap();
        let sys = assemble_straight(&g, &zero_pot()).unwrap();
        assert!(sys.s.hermiticity_defect() < 1e-12);
        assert!(sys.m.hermiticity_defect() < 1e-15);
        // interior mass column sums build toward the domain area 2*L*pi;
        // check a central row sums to hx*hy (partition of unity)
        let k = g.index(6, 4).unwrap();
        let row_sum: Complex64 = (sys.m.indptr[k]..sys.m.indptr[k + 1])
            .map(|t| sys.m.values[t])
            .sum();
        assert!((row_sum.re - g.hx * g.hy).abs() < 1e-13);
        assert!(row_sum.im.abs() < 1e-16);
    }

    #[test]
    fn deformed_zero_lambda_matches_straight() {
        let g = StripGrid::new(3.0, 17, 9).unwrap();
        let f = Profile::bump(ProfileKind::Deformation, 1.0, 1.0, 0.0).unwrap();
        let y0 = PI / 2.0;
        let pot = transversal_potential(MagneticField::bump(0.5, 1.0, (0.0, y0), y0));
        let a = assemble_straight(&g, &pot).unwrap();
        let b = assemble_deformed(&g, &f, 0.0, &pot).unwrap();
        let diff = CsrMatrix::linear_combination(1.0, &a.s, -1.0, &b.s);
        let max = diff.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(max < 1e-12, "max deviation {max}");
    }

    #[test]
    fn curved_zero_beta_matches_straight() {
        let g = StripGrid::new(3.0, 17, 9).unwrap();
        let gam = Profile::bump(ProfileKind::Curvature, 1.0, 1.0, 0.0).unwrap();
        let xs: Vec<f64> = (0..=64).map(|i| -3.0 + 6.0 * i as f64 / 64.0).collect();
        let curve = reconstruct_curve(&gam, 0.0, &xs).unwrap();
        let y0 = PI / 2.0;
        let pot = transversal_potential(MagneticField::bump(0.5, 1.0, (0.0, y0), y0));
        let a = assemble_straight(&g, &pot).unwrap();
        let b = assemble_curved(&g, &gam, 0.0, &pot, &curve).unwrap();
        let diff = CsrMatrix::linear_combination(1.0, &a.s, -1.0, &b.s);
        let max = diff.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(max < 1e-12, "max deviation {max}");
    }

    #[test]
    fn deformed_hermitian_with_field() {
        let g = StripGrid::new(3.0, 17, 9).unwrap();
        let f = Profile::bump(ProfileKind::Deformation, 1.0, 1.0, 0.0).unwrap();
        let y0 = PI / 2.0;
        let pot = transversal_potential(MagneticField::bump(0.5, 1.0, (0.0, y0), y0));
        let sys = assemble_deformed(&g, &f, 0.3, &pot).unwrap();
        assert!(sys.s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn curved_hermitian_with_field() {
        let g = StripGrid::new(4.0, 17, 9).unwrap();
        let gam = Profile::bump(ProfileKind::Curvature, 1.0, 1.0, 2.5).unwrap();
        let xs: Vec<f64> = (0..=128).map(|i| -4.0 + 8.0 * i as f64 / 128.0).collect();
        let curve = reconstruct_curve(&gam, 0.2, &xs).unwrap();
        let y0 = PI / 2.0;
        let pot = transversal_potential(MagneticField::bump(0.5, 1.0, (0.0, y0), y0));
        let sys = assemble_curved(&g, &gam, 0.2, &pot, &curve).unwrap();
        assert!(sys.s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn curved_rejects_mismatched_curve() {
        let g = StripGrid::new(4.0, 9, 7).unwrap();
        let gam = Profile::bump(ProfileKind::Curvature, 1.0, 1.0, 0.0).unwrap();
        let xs: Vec<f64> = (0..=64).map(|i| -4.0 + 8.0 * i as f64 / 64.0).collect();
        let wrong = reconstruct_curve(&gam, 0.5, &xs).unwrap();
        assert!(assemble_curved(&g, &gam, 0.2, &zero_pot(), &wrong).is_err());
    }

    #[test]
    fn ab_requires_punctured_grid() {
        let y0 = PI / 2.0;
        let pot = ab_potential(0.5, y0).unwrap();
        let plain = StripGrid::new(4.0, 17, 9).unwrap();
        assert!(assemble_straight(&plain, &pot).is_err());
        let punct = StripGrid::with_puncture(4.0, 16, 8, (0.0, y0)).unwrap();
        let sys = assemble_straight(&punct, &pot).unwrap();
        assert!(sys.s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn weight_matrices_positive_and_symmetric() {
        let g = StripGrid::new(3.0, 13, 9).unwrap();
        let w = assemble_weight(&g, WeightKind::InverseQuadraticX);
        assert!(w.hermiticity_defect() < 1e-14);
        // mirror symmetry of the x-weight on the symmetric grid
        let d = w.to_dense();
        let n = g.dof();
        let mirror = |k: usize| -> usize {
            let (i, j) = g.node_of(k);
            g.index(g.nx - 1 - i, j).unwrap()
        };
        for k in (0..n).step_by(7) {
            for l in (0..n).step_by(11) {
                let v = d[(k, l)].re;
                let vm = d[(mirror(k), mirror(l))].re;
                assert!((v - vm).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ab_weight_diverges_under_refinement() {
        let y0 = PI / 2.0;
        let mut prev = 0.0;
        for nx in [16usize, 32, 64] {
            let ny = nx / 2;
            let g = StripGrid::with_puncture(4.0, nx, ny, (0.0, y0)).unwrap();
            let w = assemble_weight(&g, WeightKind::InverseDistanceSq { p: (0.0, y0) });
            let ones = vec![Complex64::new(1.0, 0.0); g.dof()];
            let mut wy = vec![Complex64::ZERO; g.dof()];
            w.matvec(&ones, &mut wy);
            let total: f64 = ones
                .iter()
                .zip(&wy)
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            assert!(total > prev, "no growth: {total} after {prev}");
            prev = total;
        }
    }

    #[test]
    fn export_roundtrip_files_exist() {
        let g = StripGrid::new(2.0, 9, 7).unwrap();
        let sys = assemble_straight(&g, &zero_pot())
            .unwrap()
            .with_weight(WeightKind::InverseQuadraticX);
        let dir = tempfile::tempdir().unwrap();
        sys.export(dir.path()).unwrap();
        for f in ["s.txt", "m.txt", "w.txt", "system.json"] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        let txt = std::fs::read_to_string(dir.path().join("s.txt")).unwrap();
        let first = txt.lines().next().unwrap();
        assert_eq!(first.split_whitespace().count(), 4);
    }
}
