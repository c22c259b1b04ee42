//! Strip geometry: boundary profiles, curvature, curve reconstruction.
//!
//! Two perturbation families share the [`Profile`] type:
//!
//! * *deformation* profiles `f ≥ 0` widen the straight strip to
//!   `0 < y < π (1 + λ f(x))`;
//! * *curvature* profiles `γ` (any sign) bend a strip of constant width
//!   `π` along the unit-speed curve whose signed curvature is `β γ`.
//!
//! Profiles are compactly supported and continuously differentiable; each
//! carries certified sup-norms of itself and its derivative, which feed
//! the analytic threshold certificates downstream.
//!
//! The curvature convention used everywhere is
//!
//! ```text
//!   κ(x) = b'(x) a''(x) − a'(x) b''(x)
//! ```
//!
//! for the unit-speed curve `x ↦ (a(x), b(x))`.  With this sign the strip
//! map `(x, y) ↦ (a − y b', b + y a')` has Jacobian `1 + y κ(x)`, which is
//! the quantity the transformed quadratic forms are written in.  The
//! tangent angle therefore obeys `θ'(x) = −κ(x)`; reconstruction
//! integrates `(cos θ, sin θ)` with nested Gauss panels.

use crate::error::Error;
use crate::quad::Rule;
use crate::Result;

/// Which geometric role a profile plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Boundary deformation `f`; must be non-negative.
    Deformation,
    /// Signed curvature `γ`.
    Curvature,
}

#[derive(Debug, Clone)]
enum Shape {
    /// `h (1 − ((x−c)/w)²)²` on `|x − c| ≤ w`, zero outside.  C¹ with
    /// closed-form norms.
    Bump { height: f64, half_width: f64, center: f64 },
    /// Monotone C¹ cubic interpolant of tabulated values, clamped to zero
    /// outside the table.
    Table(Pchip),
}

/// Compactly supported C¹ profile with certified norms.
#[derive(Debug, Clone)]
pub struct Profile {
    kind: ProfileKind,
    shape: Shape,
    support: (f64, f64),
    sup_norm: f64,
    deriv_sup_norm: f64,
}

impl Profile {
    /// Quartic bump `h (1 − ((x−c)/w)²)²` supported on `[c − w, c + w]`.
    pub fn bump(kind: ProfileKind, height: f64, half_width: f64, center: f64) -> Result<Profile> {
        if !(half_width > 0.0) || !height.is_finite() {
            return Err(Error::Config(format!(
                "bump needs positive half-width and finite height, got w = {half_width}, h = {height}"
            )));
        }
        if kind == ProfileKind::Deformation && height < 0.0 {
            return Err(Error::Config(
                "deformation profiles must be non-negative".into(),
            ));
        }
        // |p'| peaks at s = 1/sqrt(3): 8|h| / (3 sqrt(3) w)
        let deriv_sup = 8.0 * height.abs() / (3.0 * 3.0_f64.sqrt() * half_width);
        Ok(Profile {
            kind,
            shape: Shape::Bump { height, half_width, center },
            support: (center - half_width, center + half_width),
            sup_norm: height.abs(),
            deriv_sup_norm: deriv_sup,
        })
    }

    /// Monotone C¹ spline through `(xs, ps)`.  The end values must vanish
    /// so the clamped extension stays C¹.
    pub fn from_table(kind: ProfileKind, xs: &[f64], ps: &[f64]) -> Result<Profile> {
        let spline = Pchip::new(xs, ps)?;
        if ps[0] != 0.0 || *ps.last().unwrap() != 0.0 {
            return Err(Error::Config(
                "tabulated profiles must vanish at both table ends".into(),
            ));
        }
        if kind == ProfileKind::Deformation && ps.iter().any(|&p| p < 0.0) {
            return Err(Error::Config(
                "deformation profiles must be non-negative".into(),
            ));
        }
        let support = (xs[0], *xs.last().unwrap());
        // certify norms from a dense sampling with a small slack
        let mut sup = 0.0f64;
        let mut dsup = 0.0f64;
        let n = 64 * (xs.len() - 1);
        for i in 0..=n {
            let x = support.0 + (support.1 - support.0) * i as f64 / n as f64;
            sup = sup.max(spline.eval(x).abs());
            dsup = dsup.max(spline.deriv(x).abs());
        }
        Ok(Profile {
            kind,
            shape: Shape::Table(spline),
            support,
            sup_norm: sup * 1.005,
            deriv_sup_norm: dsup * 1.005,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// `p(x)`; identically zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Bump { height, half_width, center } => {
                let s = (x - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - s * s;
                    height * t * t
                }
            }
            Shape::Table(p) => {
                if x <= self.support.0 || x >= self.support.1 {
                    0.0
                } else {
                    p.eval(x)
                }
            }
        }
    }

    /// `p'(x)`.
    pub fn deriv(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Bump { height, half_width, center } => {
                let s = (x - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    -4.0 * height * s * (1.0 - s * s) / half_width
                }
            }
            Shape::Table(p) => {
                if x <= self.support.0 || x >= self.support.1 {
                    0.0
                } else {
                    p.deriv(x)
                }
            }
        }
    }

    /// Closed support `[x_lo, x_hi]`.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Certified `‖p‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Certified `‖p'‖_∞`.
    pub fn deriv_sup_norm(&self) -> f64 {
        self.deriv_sup_norm
    }

    /// Support radius `d = max(|x_lo|, |x_hi|)`, the reach of the
    /// perturbation from the flux region at `x = 0`.
    pub fn support_radius(&self) -> f64 {
        self.support.0.abs().max(self.support.1.abs())
    }

    /// `∫ p` over the support (closed form for bumps, Gauss panels for
    /// tables).
    pub fn integral(&self) -> f64 {
        match &self.shape {
            Shape::Bump { height, half_width, .. } => height * half_width * 16.0 / 15.0,
            Shape::Table(_) => {
                let rule = Rule::gauss(8);
                rule.integrate_composite(self.support.0, self.support.1, 64, |x| self.eval(x))
            }
        }
    }

    /// Check the declared sup-norms against a refined sampling.  `slack`
    /// is the allowed overshoot factor (≤ 1.01 in the shipped contracts).
    pub fn certify_norms(&self, samples: usize, slack: f64) -> Result<()> {
        let (lo, hi) = self.support;
        let mut sup = 0.0f64;
        let mut dsup = 0.0f64;
        for i in 0..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            sup = sup.max(self.eval(x).abs());
            dsup = dsup.max(self.deriv(x).abs());
        }
        if sup > self.sup_norm * slack {
            return Err(Error::BoundViolated {
                name: "sup_norm",
                declared: self.sup_norm,
                sampled: sup,
            });
        }
        if dsup > self.deriv_sup_norm * slack {
            return Err(Error::BoundViolated {
                name: "deriv_sup_norm",
                declared: self.deriv_sup_norm,
                sampled: dsup,
            });
        }
        Ok(())
    }
}

/// Fritsch–Carlson monotone cubic interpolant.
#[derive(Debug, Clone)]
struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Pchip> {
        if xs.len() < 3 || xs.len() != ys.len() {
            return Err(Error::Config(format!(
                "table needs at least 3 matching points, got {} / {}",
                xs.len(),
                ys.len()
            )));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneGrid(format!("{} then {}", w[0], w[1])));
            }
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                ds[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // clamped ends: the profile continues by zero outside the table
        ds[0] = 0.0;
        ds[n - 1] = 0.0;
        Ok(Pchip {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            ds,
        })
    }

    fn cell(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    fn deriv(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t * t - 2.0 * t;
        (dh00 * self.ys[i] + dh01 * self.ys[i + 1]) / h + dh10 * self.ds[i] + dh11 * self.ds[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

// ---------------------------------------------------------------------------
// curve reconstruction
// ---------------------------------------------------------------------------

/// Unit-speed planar curve sampled on a grid, together with the evaluator
/// it was reconstructed from (so discretizations can query it off-grid).
#[derive(Debug, Clone)]
pub struct PlaneCurve {
    /// Sample abscissae (arc length).
    pub xs: Vec<f64>,
    /// Positions.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Unit tangents `(a', b')`.
    pub da: Vec<f64>,
    pub db: Vec<f64>,
    /// Second derivatives `(a'', b'')`; `b'a'' − a'b'' = κ`.
    pub dda: Vec<f64>,
    pub ddb: Vec<f64>,
    /// `∫ κ` over the sampled window (net curvature in the sign
    /// convention above; the outgoing tangent angle is `−θ_total`).
    pub theta_total: f64,
    eval: CurveEvaluator,
}

impl PlaneCurve {
    /// Position and derivatives at arbitrary `x`.
    pub fn eval(&self, x: f64) -> CurvePoint {
        self.eval.eval(x)
    }

    /// Curvature at a sample index recovered from the stored derivative
    /// arrays.
    pub fn recovered_curvature(&self, i: usize) -> f64 {
        self.db[i] * self.dda[i] - self.da[i] * self.ddb[i]
    }
}

/// One evaluated curve point.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
    pub dda: f64,
    pub ddb: f64,
}

/// Evaluates the curve for a fixed curvature function by cached cumulative
/// Gauss panels: exact straight continuation outside the support, nested
/// 5-point panels inside.
#[derive(Clone)]
struct CurveEvaluator {
    kappa: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Panel breakpoints covering `[min(0, lo), max(0, hi)]`.
    brk: Vec<f64>,
    /// Tangent angle and position at each breakpoint, anchored by
    /// `θ(0) = 0`, `(a, b)(0) = (0, 0)`.
    theta: Vec<f64>,
    pos_a: Vec<f64>,
    pos_b: Vec<f64>,
    rule: Rule,
}

impl std::fmt::Debug for CurveEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurveEvaluator")
            .field("panels", &(self.brk.len() - 1))
            .finish()
    }
}

impl CurveEvaluator {
    /// `(range_lo, range_hi)` is the window that needs cached panels;
    /// `(sup_lo, sup_hi)` the curvature support.  Support endpoints and
    /// the anchor `x = 0` become panel breakpoints so that every Gauss
    /// panel sees a smooth (for the built-in bump: polynomial) integrand.
    fn new(
        kappa: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        range: (f64, f64),
        support: (f64, f64),
    ) -> Self {
        let lo = range.0.min(0.0);
        let hi = range.1.max(0.0);
        let rule = Rule::gauss(5);
        let mut marks = vec![lo, hi, 0.0];
        for s in [support.0, support.1] {
            if s > lo && s < hi {
                marks.push(s);
            }
        }
        marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        marks.dedup();
        // subdivide marked segments so panels stay short; zero-curvature
        // outer segments need just one panel
        let target = (support.1 - support.0).max(1e-3) / 256.0;
        let mut brk = Vec::new();
        for w in marks.windows(2) {
            let len = w[1] - w[0];
            let covers_support = w[1] > support.0 && w[0] < support.1;
            let pieces = if covers_support {
                ((len / target).ceil() as usize).clamp(1, 4096)
            } else {
                1
            };
            for i in 0..pieces {
                brk.push(w[0] + len * i as f64 / pieces as f64);
            }
        }
        brk.push(hi);
        let anchor = brk
            .iter()
            .position(|&x| x == 0.0)
            .expect("anchor breakpoint present");

        let m = brk.len();
        let mut theta = vec![0.0; m];
        let mut pos_a = vec![0.0; m];
        let mut pos_b = vec![0.0; m];
        // integrate theta' = -kappa forward and backward from the anchor
        for i in anchor..m - 1 {
            let dth = rule.integrate(brk[i], brk[i + 1], |x| -(kappa)(x));
            theta[i + 1] = theta[i] + dth;
        }
        for i in (0..anchor).rev() {
            let dth = rule.integrate(brk[i], brk[i + 1], |x| -(kappa)(x));
            theta[i] = theta[i + 1] - dth;
        }
        // positions: integrate the tangent, evaluating theta by a nested
        // panel from the nearest breakpoint
        let theta_at = |i0: usize, t0: f64, x: f64| -> f64 {
            t0 + rule.integrate(brk[i0], x, |u| -(kappa)(u))
        };
        for i in anchor..m - 1 {
            let (mut da_, mut db_) = (0.0, 0.0);
            let c = 0.5 * (brk[i] + brk[i + 1]);
            let hw = 0.5 * (brk[i + 1] - brk[i]);
            for (xg, wg) in rule.nodes.iter().zip(&rule.weights) {
                let x = c + hw * xg;
                let th = theta_at(i, theta[i], x);
                da_ += wg * th.cos();
                db_ += wg * th.sin();
            }
            pos_a[i + 1] = pos_a[i] + hw * da_;
            pos_b[i + 1] = pos_b[i] + hw * db_;
        }
        for i in (0..anchor).rev() {
            let (mut da_, mut db_) = (0.0, 0.0);
            let c = 0.5 * (brk[i] + brk[i + 1]);
            let hw = 0.5 * (brk[i + 1] - brk[i]);
            for (xg, wg) in rule.nodes.iter().zip(&rule.weights) {
                let x = c + hw * xg;
                let th = theta_at(i + 1, theta[i + 1], x);
                da_ += wg * th.cos();
                db_ += wg * th.sin();
            }
            pos_a[i] = pos_a[i + 1] - hw * da_;
            pos_b[i] = pos_b[i + 1] - hw * db_;
        }
        CurveEvaluator {
            kappa,
            brk,
            theta,
            pos_a,
            pos_b,
            rule,
        }
    }

    fn eval(&self, x: f64) -> CurvePoint {
        let lo = self.brk[0];
        let hi = *self.brk.last().unwrap();
        let (th, a, b) = if x <= lo {
            let th = self.theta[0];
            (
                th,
                self.pos_a[0] + (x - lo) * th.cos(),
                self.pos_b[0] + (x - lo) * th.sin(),
            )
        } else if x >= hi {
            let th = *self.theta.last().unwrap();
            (
                th,
                self.pos_a.last().unwrap() + (x - hi) * th.cos(),
                self.pos_b.last().unwrap() + (x - hi) * th.sin(),
            )
        } else {
            let i = match self
                .brk
                .binary_search_by(|v| v.partial_cmp(&x).unwrap())
            {
                Ok(i) => i.min(self.brk.len() - 2),
                Err(i) => i - 1,
            };
            let th = self.theta[i] + self.rule.integrate(self.brk[i], x, |u| -(self.kappa)(u));
            let (mut sa, mut sb) = (0.0, 0.0);
            let c = 0.5 * (self.brk[i] + x);
            let hw = 0.5 * (x - self.brk[i]);
            if hw > 0.0 {
                for (xg, wg) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let u = c + hw * xg;
                    let tu =
                        self.theta[i] + self.rule.integrate(self.brk[i], u, |v| -(self.kappa)(v));
                    sa += wg * tu.cos();
                    sb += wg * tu.sin();
                }
            }
            (th, self.pos_a[i] + hw * sa, self.pos_b[i] + hw * sb)
        };
        let k = (self.kappa)(x);
        // theta' = -kappa, so (a'', b'') = theta' (−sin θ, cos θ)
        CurvePoint {
            a,
            b,
            da: th.cos(),
            db: th.sin(),
            dda: k * th.sin(),
            ddb: -k * th.cos(),
        }
    }
}

/// Rebuild the unit-speed curve whose signed curvature is
/// `scale · γ(x)`, sampled on `xs`.
///
/// Normalization: the curve passes through the origin at `x = 0` with
/// tangent `(1, 0)`.  Outside the curvature support the curve continues
/// as an exact straight line.
pub fn reconstruct_curve(gamma: &Profile, scale: f64, xs: &[f64]) -> Result<PlaneCurve> {
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid(format!("{} then {}", w[0], w[1])));
        }
    }
    let g = gamma.clone();
    let kappa = std::sync::Arc::new(move |x: f64| scale * g.eval(x));
    let support = gamma.support();
    Ok(build_curve(kappa, support, xs))
}

/// Same as [`reconstruct_curve`] but for an arbitrary curvature function
/// on a window (no compact-support continuation is assumed beyond the
/// window ends).
pub fn reconstruct_curve_from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(
    kappa: F,
    window: (f64, f64),
    xs: &[f64],
) -> Result<PlaneCurve> {
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid(format!("{} then {}", w[0], w[1])));
        }
    }
    Ok(build_curve(std::sync::Arc::new(kappa), window, xs))
}

fn build_curve(
    kappa: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: (f64, f64),
    xs: &[f64],
) -> PlaneCurve {
    let lo = support.0.min(xs[0]);
    let hi = support.1.max(*xs.last().unwrap());
    let eval = CurveEvaluator::new(kappa.clone(), (lo, hi), support);
    let n = xs.len();
    let mut curve = PlaneCurve {
        xs: xs.to_vec(),
        a: vec![0.0; n],
        b: vec![0.0; n],
        da: vec![0.0; n],
        db: vec![0.0; n],
        dda: vec![0.0; n],
        ddb: vec![0.0; n],
        theta_total: 0.0,
        eval,
    };
    for (i, &x) in xs.iter().enumerate() {
        let p = curve.eval.eval(x);
        curve.a[i] = p.a;
        curve.b[i] = p.b;
        curve.da[i] = p.da;
        curve.db[i] = p.db;
        curve.dda[i] = p.dda;
        curve.ddb[i] = p.ddb;
    }
    // net curvature over the sampled window
    let rule = Rule::gauss(5);
    let mut tot = 0.0;
    let mut brk: Vec<f64> = vec![xs[0]];
    let cells = 4 * (n - 1).max(64);
    for i in 1..=cells {
        brk.push(xs[0] + (xs[n - 1] - xs[0]) * i as f64 / cells as f64);
    }
    for w in brk.windows(2) {
        tot += rule.integrate(w[0], w[1], |x| (kappa)(x));
    }
    curve.theta_total = tot;
    curve
}

// ---------------------------------------------------------------------------
// self-intersection heuristic
// ---------------------------------------------------------------------------

/// Sampling check that the curved strip of the given width does not fold
/// onto itself: both boundary polylines are tested pairwise for
/// non-adjacent segments closer than `margin` (default `1e-3 · width`
/// when `margin` is `None`).
///
/// This is a heuristic detector, not a certificate: it can miss
/// intersections finer than the sampling.
pub fn check_self_intersection(curve: &PlaneCurve, width: f64, margin: Option<f64>) -> bool {
    let margin = margin.unwrap_or(1e-3 * width);
    let n = curve.xs.len();
    if n < 3 {
        return false;
    }
    let inner: Vec<(f64, f64)> = (0..n).map(|i| (curve.a[i], curve.b[i])).collect();
    let outer: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            (
                curve.a[i] - width * curve.db[i],
                curve.b[i] + width * curve.da[i],
            )
        })
        .collect();
    let polylines = [&inner, &outer];
    for (pi, pa) in polylines.iter().enumerate() {
        for (pj, pb) in polylines.iter().enumerate() {
            if pj < pi {
                continue;
            }
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    if pi == pj {
                        if j <= i + 1 {
                            continue;
                        }
                    } else if i.abs_diff(j) <= 1 {
                        // cross-boundary neighbours sit ~width apart; skip
                        // only the trivially close index band
                        continue;
                    }
                    let d = segment_distance(pa[i], pa[i + 1], pb[j], pb[j + 1]);
                    if d < margin {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn segment_distance(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment(p1, q1, q2)
        .min(point_segment(p2, q1, q2))
        .min(point_segment(q1, p1, p2))
        .min(point_segment(q2, p1, p2))
}

fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let l2 = vx * vx + vy * vy;
    let t = if l2 > 0.0 {
        ((wx * vx + wy * vy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (p.0 - (a.0 + t * vx), p.1 - (a.1 + t * vy));
    (dx * dx + dy * dy).sqrt()
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

// ---------------------------------------------------------------------------
// strip maps
// ---------------------------------------------------------------------------

/// Validated map from the straight strip onto a perturbed strip.
#[derive(Debug, Clone)]
pub enum StripMap {
    /// `(x, y) ↦ (x, (1 + λ f(x)) y)`; Jacobian `g(x) = 1 + λ f(x)`.
    Deformed { profile: Profile, lambda: f64 },
    /// `(x, y) ↦ (a − y b', b + y a')` over the curve with curvature
    /// `β γ`; Jacobian `J(x, y) = 1 + y β γ(x)`.
    Curved {
        profile: Profile,
        beta: f64,
        curve: PlaneCurve,
    },
}

impl StripMap {
    /// Build the deformed-strip map, rejecting parameters for which the
    /// Jacobian loses positivity somewhere on the closed strip.
    pub fn deformed(profile: Profile, lambda: f64) -> Result<StripMap> {
        let (lo, hi) = profile.support();
        let n = 4096;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let g = 1.0 + lambda * profile.eval(x);
            if g <= 0.0 {
                return Err(Error::JacobianNonPositive { x, y: 0.0, value: g });
            }
        }
        Ok(StripMap::Deformed { profile, lambda })
    }

    /// Build the curved-strip map for width `π`; fails when
    /// `1 + y β γ` reaches zero on the closed strip (worst case `y = π`
    /// against the negative part of `β γ`).
    pub fn curved(profile: Profile, beta: f64, curve: PlaneCurve) -> Result<StripMap> {
        let (lo, hi) = profile.support();
        let n = 4096;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let k = beta * profile.eval(x);
            let j = 1.0 + std::f64::consts::PI * k.min(0.0);
            if j <= 0.0 {
                return Err(Error::JacobianNonPositive {
                    x,
                    y: std::f64::consts::PI,
                    value: j,
                });
            }
        }
        Ok(StripMap::Curved {
            profile,
            beta,
            curve,
        })
    }

    /// Jacobian of the map at `(x, y)` in straight-strip coordinates.
    pub fn jacobian(&self, x: f64, y: f64) -> f64 {
        match self {
            StripMap::Deformed { profile, lambda } => 1.0 + lambda * profile.eval(x),
            StripMap::Curved { profile, beta, .. } => 1.0 + y * beta * profile.eval(x),
        }
    }

    /// Image of a straight-strip point under the map.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            StripMap::Deformed { profile, lambda } => (x, (1.0 + lambda * profile.eval(x)) * y),
            StripMap::Curved { curve, .. } => {
                let p = curve.eval(x);
                (p.a - y * p.db, p.b + y * p.da)
            }
        }
    }
}
