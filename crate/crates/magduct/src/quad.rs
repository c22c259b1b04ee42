//! Gauss–Legendre quadrature.
//!
//! Nodes and weights are generated at run time by Newton iteration on the
//! Legendre polynomials; at the orders used here (≤ 64) the nodes are
//! accurate to machine precision and generation cost is negligible next to
//! the integrands.

/// Gauss–Legendre rule of order `n` on `[-1, 1]`.
///
/// Returns `(nodes, weights)`, nodes ascending.  Exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_with_deriv(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A reusable rule on `[-1, 1]` with an affine-map integrator.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Rule { nodes, weights }
    }

    /// ∫_a^b f, single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// ∫_a^b f with the panel split into `cells` equal pieces.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        cells: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / cells as f64;
        let mut s = 0.0;
        for i in 0..cells {
            s += self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
        }
        s
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        (
            self.nodes.iter().map(|x| c + h * x).collect(),
            self.weights.iter().map(|w| w * h).collect(),
        )
    }
}

/// Composite integral over a list of breakpoints (one Gauss panel per
/// sub-interval).  Breakpoints let integrands with kinks keep full order.
pub fn integrate_piecewise<F: FnMut(f64) -> f64>(rule: &Rule, breaks: &[f64], mut f: F) -> f64 {
    let mut s = 0.0;
    for w in breaks.windows(2) {
        s += rule.integrate(w[0], w[1], &mut f);
    }
    s
}
