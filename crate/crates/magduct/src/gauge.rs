//! Magnetic fields and vector potentials on the strip.
//!
//! Bounded fields are handled in the *transversal* (Poincaré) gauge
//! anchored at the flux point `p = (0, y0)`:
//!
//! ```text
//!   a1(x, y) = −(y − y0) ∫₀¹ B(ux, u(y − y0) + y0) u du
//!   a2(x, y) =        x  ∫₀¹ B(ux, u(y − y0) + y0) u du
//! ```
//!
//! which satisfies `A(x, y) · (x, y − y0) = 0` identically (the ray
//! integral is shared between the two components, so transversality holds
//! to machine precision by construction) and `curl A = B` wherever `B` is
//! continuous.  Point fluxes use the Aharonov–Bohm potential
//!
//! ```text
//!   A(x, y) = Φ · (−(y − y0), x) / (x² + (y − y0)²),
//! ```
//!
//! curl-free away from `p` with circulation `2πΦ` around it.
//!
//! The flux function `Φ(r)` — mean flux through the disk `B_r(p)` — is
//! what the Hardy certificate chains consume; it is computed by a
//! radial–angular tensor quadrature with breakpoints where the
//! integration circles cross the field support, so piecewise-smooth
//! fields (notably the constant patch) lose no accuracy.

use crate::error::Error;
use crate::quad::Rule;
use crate::Result;
use std::sync::Arc;

/// A bounded, compactly supported magnetic field `α · B(x, y)`.
#[derive(Clone)]
pub struct MagneticField {
    shape: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    alpha: f64,
    support_radius: f64,
    center: (f64, f64),
    flux_point: (f64, f64),
    smooth: bool,
}

impl std::fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MagneticField")
            .field("alpha", &self.alpha)
            .field("support_radius", &self.support_radius)
            .field("center", &self.center)
            .field("flux_point", &self.flux_point)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl MagneticField {
    /// C¹ radial bump `B₀ (1 − ρ²/R²)²` on the disk of radius `R` around
    /// `center`.
    pub fn bump(b0: f64, radius: f64, center: (f64, f64), y0: f64) -> MagneticField {
        let shape = move |x: f64, y: f64| {
            let dx = x - center.0;
            let dy = y - center.1;
            let s = (dx * dx + dy * dy) / (radius * radius);
            if s >= 1.0 {
                0.0
            } else {
                let t = 1.0 - s;
                b0 * t * t
            }
        };
        MagneticField {
            shape: Arc::new(shape),
            alpha: 1.0,
            support_radius: radius,
            center,
            flux_point: (0.0, y0),
            smooth: true,
        }
    }

    /// Discontinuous constant patch `B₀ · 1_{B_R(center)}`.  Not C¹; the
    /// transversal quadrature splits its panels at the patch boundary so
    /// the potential still comes out accurately.
    pub fn constant_patch(b0: f64, radius: f64, center: (f64, f64), y0: f64) -> MagneticField {
        let shape = move |x: f64, y: f64| {
            let dx = x - center.0;
            let dy = y - center.1;
            if dx * dx + dy * dy <= radius * radius {
                b0
            } else {
                0.0
            }
        };
        MagneticField {
            shape: Arc::new(shape),
            alpha: 1.0,
            support_radius: radius,
            center,
            flux_point: (0.0, y0),
            smooth: false,
        }
    }

    /// The zero field (kept around so that every pipeline has a gauge-free
    /// reference configuration).
    pub fn zero(y0: f64) -> MagneticField {
        MagneticField {
            shape: Arc::new(|_, _| 0.0),
            alpha: 1.0,
            support_radius: 0.0,
            center: (0.0, y0),
            flux_point: (0.0, y0),
            smooth: true,
        }
    }

    /// Arbitrary field shape with declared support disk and smoothness.
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(
        shape: F,
        support_radius: f64,
        center: (f64, f64),
        y0: f64,
        smooth: bool,
    ) -> MagneticField {
        MagneticField {
            shape: Arc::new(shape),
            alpha: 1.0,
            support_radius,
            center,
            flux_point: (0.0, y0),
            smooth,
        }
    }

    /// Same field with the coupling multiplier replaced.
    pub fn with_alpha(mut self, alpha: f64) -> MagneticField {
        self.alpha = alpha;
        self
    }

    /// `α B(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.alpha * (self.shape)(x, y)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// The gauge / certificate anchor `p = (0, y0)`.
    pub fn flux_point(&self) -> (f64, f64) {
        self.flux_point
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    /// Parameter values `u ∈ (0, 1)` at which the segment from `p` to
    /// `(x, y)` crosses the support circle; quadrature panels split there.
    /// Returns `(count, values)` to stay allocation-free in assembly
    /// loops.
    fn ray_breakpoints(&self, x: f64, y: f64) -> (usize, [f64; 2]) {
        let p = self.flux_point;
        let v = (x - p.0, y - p.1);
        let w = (p.0 - self.center.0, p.1 - self.center.1);
        let a = v.0 * v.0 + v.1 * v.1;
        if a == 0.0 {
            return (0, [0.0; 2]);
        }
        let b = 2.0 * (v.0 * w.0 + v.1 * w.1);
        let c = w.0 * w.0 + w.1 * w.1 - self.support_radius * self.support_radius;
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return (0, [0.0; 2]);
        }
        let sq = disc.sqrt();
        let mut out = [0.0f64; 2];
        let mut n = 0;
        for u in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if u > 1e-14 && u < 1.0 - 1e-14 {
                out[n] = u;
                n += 1;
            }
        }
        (n, out)
    }
}

/// A vector potential on the strip.
#[derive(Debug, Clone)]
pub enum VectorPotential {
    /// Transversal-gauge potential of a bounded field.
    Transversal { field: MagneticField, rule: Rule },
    /// Point flux `Φ` at `p = (0, y0)`.
    AharonovBohm { phi: f64, p: (f64, f64) },
    /// Constant potential `(a1, a2)`: pure gauge, zero field.  Shifts
    /// the momentum without touching the spectrum; exists so gauge
    /// invariance is testable rather than assumed.
    Uniform { a1: f64, a2: f64 },
    /// `A ≡ 0`.
    Zero,
}

/// Distance below which evaluation at the Aharonov–Bohm singularity is
/// refused.
pub const SINGULARITY_GUARD: f64 = 1e-12;

/// Build the transversal-gauge potential of `field` (16-point Gauss
/// panels along rays from the flux point).
pub fn transversal_potential(field: MagneticField) -> VectorPotential {
    VectorPotential::Transversal {
        field,
        rule: Rule::gauss(16),
    }
}

/// Build the Aharonov–Bohm potential with flux `phi` at `p = (0, y0)`.
/// Integer flux (including zero) is gauge-trivial and rejected.
pub fn ab_potential(phi: f64, y0: f64) -> Result<VectorPotential> {
    if (phi - phi.round()).abs() < 1e-12 {
        return Err(Error::IntegerFlux(phi));
    }
    Ok(VectorPotential::AharonovBohm { phi, p: (0.0, y0) })
}

impl VectorPotential {
    /// `(a1, a2)` at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        match self {
            VectorPotential::Zero => Ok((0.0, 0.0)),
            VectorPotential::Uniform { a1, a2 } => Ok((*a1, *a2)),
            VectorPotential::Transversal { field, rule } => {
                let (px, py) = field.flux_point();
                debug_assert_eq!(px, 0.0);
                let dy = y - py;
                let moment = |u: f64| field.eval(u * x, u * dy + py) * u;
                let (nb, brks) = field.ray_breakpoints(x, y);
                let mut i = 0.0;
                let mut lo = 0.0;
                for &u in brks[..nb].iter().chain(std::iter::once(&1.0)) {
                    i += rule.integrate(lo, u, moment);
                    lo = u;
                }
                Ok((-dy * i, x * i))
            }
            VectorPotential::AharonovBohm { phi, p } => {
                let dx = x - p.0;
                let dy = y - p.1;
                let r2 = dx * dx + dy * dy;
                if r2.sqrt() < SINGULARITY_GUARD {
                    return Err(Error::EvalAtSingularity {
                        x,
                        y,
                        dist: r2.sqrt(),
                    });
                }
                Ok((-phi * dy / r2, phi * dx / r2))
            }
        }
    }

    /// The flux point the potential is anchored at.
    pub fn flux_point(&self) -> Option<(f64, f64)> {
        match self {
            VectorPotential::Zero | VectorPotential::Uniform { .. } => None,
            VectorPotential::Transversal { field, .. } => Some(field.flux_point()),
            VectorPotential::AharonovBohm { p, .. } => Some(*p),
        }
    }

    /// The point where the potential itself is singular, if any.  Only
    /// the point flux has one; the transversal gauge is smooth even
    /// though it carries a flux reference point.
    pub fn singularity(&self) -> Option<(f64, f64)> {
        match self {
            VectorPotential::AharonovBohm { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Central-difference curl `∂x a2 − ∂y a1` (diagnostics/tests).
    pub fn curl_fd(&self, x: f64, y: f64, h: f64) -> Result<f64> {
        let (_, a2p) = self.eval(x + h, y)?;
        let (_, a2m) = self.eval(x - h, y)?;
        let (a1p, _) = self.eval(x, y + h)?;
        let (a1m, _) = self.eval(x, y - h)?;
        Ok((a2p - a2m) / (2.0 * h) - (a1p - a1m) / (2.0 * h))
    }

    /// Central-difference divergence `∂x a1 + ∂y a2`.
    pub fn div_fd(&self, x: f64, y: f64, h: f64) -> Result<f64> {
        let (a1p, _) = self.eval(x + h, y)?;
        let (a1m, _) = self.eval(x - h, y)?;
        let (_, a2p) = self.eval(x, y + h)?;
        let (_, a2m) = self.eval(x, y - h)?;
        Ok((a1p - a1m) / (2.0 * h) + (a2p - a2m) / (2.0 * h))
    }

    /// Circulation `∮ A · dl` around the circle of radius `r` about the
    /// flux point (trapezoid rule; spectrally accurate for these smooth
    /// integrands).
    pub fn circulation(&self, r: f64, n: usize) -> Result<f64> {
        let p = self.flux_point().unwrap_or((0.0, 0.0));
        let mut s = 0.0;
        for k in 0..n {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let (x, y) = (p.0 + r * t.cos(), p.1 + r * t.sin());
            let (a1, a2) = self.eval(x, y)?;
            s += -a1 * t.sin() + a2 * t.cos();
        }
        Ok(s * 2.0 * std::f64::consts::PI * r / n as f64)
    }
}

/// Mean flux `Φ(r)` through `B_r(p)` and its derivative `Φ'(r)`:
///
/// ```text
///   Φ(r) = (1/2π) ∫_{B_r(p)} B,    Φ'(r) = (r/2π) ∫₀^{2π} B(p + r e_θ) dθ.
/// ```
pub fn ball_flux(field: &MagneticField, r: f64) -> (f64, f64) {
    let p = field.flux_point();
    let n_ang = 64;
    let ring_mean = |rho: f64| -> f64 {
        let mut s = 0.0;
        for k in 0..n_ang {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_ang as f64;
            s += field.eval(p.0 + rho * t.cos(), p.1 + rho * t.sin());
        }
        s / n_ang as f64
    };
    // radial breakpoints where circles around p touch the support circle
    let d = {
        let (cx, cy) = field.center();
        ((cx - p.0).powi(2) + (cy - p.1).powi(2)).sqrt()
    };
    let rb = field.support_radius();
    let mut brk = vec![0.0];
    for cand in [(d - rb).abs(), d + rb] {
        if cand > 1e-14 && cand < r - 1e-14 {
            brk.push(cand);
        }
    }
    brk.push(r);
    brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rule = Rule::gauss(24);
    let mut phi = 0.0;
    for w in brk.windows(2) {
        let cells = 1 + ((w[1] - w[0]) / rb.max(1e-3) * 8.0) as usize;
        phi += rule.integrate_composite(w[0], w[1], cells, |rho| rho * ring_mean(rho));
    }
    (phi, r * ring_mean(r))
}

/// Sup-norm estimates for `(|a1|, |a2|)` over the rectangle
/// `[x0, x1] × [y0, y1]`: refined-grid sampling at two resolutions, one
/// Richardson step, multiplied by the safety slack `1.05`.
///
/// Refused when the rectangle contains the singular point of an
/// Aharonov–Bohm potential (the sup is infinite there).
pub fn sup_norm_estimate(
    pot: &VectorPotential,
    rect: (f64, f64, f64, f64),
) -> Result<(f64, f64)> {
    let (x0, x1, y0, y1) = rect;
    if let VectorPotential::AharonovBohm { p, .. } = pot {
        if p.0 >= x0 && p.0 <= x1 && p.1 >= y0 && p.1 <= y1 {
            return Err(Error::RegionContainsSingularity(p.0, p.1));
        }
    }
    let sample = |n: usize| -> Result<(f64, f64)> {
        let mut m1 = 0.0f64;
        let mut m2 = 0.0f64;
        for i in 0..=n {
            let x = x0 + (x1 - x0) * i as f64 / n as f64;
            for j in 0..=n {
                let y = y0 + (y1 - y0) * j as f64 / n as f64;
                let (a1, a2) = pot.eval(x, y)?;
                m1 = m1.max(a1.abs());
                m2 = m2.max(a2.abs());
            }
        }
        Ok((m1, m2))
    };
    let (c1, c2) = sample(96)?;
    let (f1, f2) = sample(192)?;
    // sampled maxima approach the sup from below at O(h²); one Richardson
    // step then a slack factor gives a usable upper estimate
    let slack = 1.05;
    let extrap = |c: f64, f: f64| (f + (f - c) / 3.0).max(f) * slack;
    Ok((extrap(c1, f1), extrap(c2, f2)))
}

/// Far-field / gauge diagnostics for a potential.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayReport {
    /// `(r, max_θ |A|)` on sampled circles.
    pub max_on_circle: Vec<(f64, f64)>,
    /// `(r, max_θ |div A|)` central-difference divergence samples.
    pub max_divergence: Vec<(f64, f64)>,
}

/// Tabulate `max |A|` and a finite-difference divergence on circles of
/// the given radii around the flux point.
pub fn decay_divergence_diagnostics(
    pot: &VectorPotential,
    radii: &[f64],
) -> Result<DecayReport> {
    let p = pot.flux_point().unwrap_or((0.0, 0.0));
    let n = 128;
    let mut max_on_circle = Vec::new();
    let mut max_divergence = Vec::new();
    for &r in radii {
        let mut ma = 0.0f64;
        let mut md = 0.0f64;
        for k in 0..n {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let (x, y) = (p.0 + r * t.cos(), p.1 + r * t.sin());
            let (a1, a2) = pot.eval(x, y)?;
            ma = ma.max((a1 * a1 + a2 * a2).sqrt());
            md = md.max(pot.div_fd(x, y, 1e-5)?.abs());
        }
        max_on_circle.push((r, ma));
        max_divergence.push((r, md));
    }
    Ok(DecayReport {
        max_on_circle,
        max_divergence,
    })
}
