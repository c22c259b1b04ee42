//! Python bindings for the waveguide toolkit.
//!
//! The module mirrors the high-value entry points of the Rust crate:
//! compactly supported profiles, the Hardy-constant chains for bounded
//! fields and point fluxes, certified widening/bending thresholds, the
//! truncated-strip eigensolver, curve reconstruction from curvature,
//! and the closed-form trial-state quotients.  Certificates and
//! reports cross the boundary as plain dicts so the Python side needs
//! nothing beyond the standard library.
//!
//! Build with `cargo build -p magduct-py --release` and import the
//! produced `libmagduct_py.so` as `magduct_py` (see
//! `python/smoke_test.py` for a loader that does the renaming).

use std::f64::consts::PI;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use magduct::config::RunConfig;
use magduct::eigensolve::discrete_spectrum_below_threshold;
use magduct::experiments::{
    assemble_geometry, trial_quotient, GeometryKind, TrialFunctionSpec, TruncationPlan,
};
use magduct::gauge::{ab_potential, transversal_potential, MagneticField, VectorPotential};
use magduct::geometry::{reconstruct_curve, ProfileKind};
use magduct::hardy::{
    ab_certificate, bessel_j0_first_zero, hardy_certificate, threshold_certificate,
    PerturbationScenario,
};

fn perr(e: magduct::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Convert a serde_json value into the matching Python object.
fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, t: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(t).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn build_field(
    kind: &str,
    b0: f64,
    radius: f64,
    center: (f64, f64),
    y0: f64,
    alpha: f64,
) -> PyResult<MagneticField> {
    let field = match kind {
        "constant-patch" => MagneticField::constant_patch(b0, radius, center, y0),
        "bump" => MagneticField::bump(b0, radius, center, y0),
        other => {
            return Err(PyValueError::new_err(format!(
                "field kind: expected \"constant-patch\" or \"bump\", got \"{other}\""
            )))
        }
    };
    Ok(field.with_alpha(alpha))
}

/// Compactly supported C1 profile: a boundary deformation `f >= 0` or a
/// signed curvature, either a quartic bump with closed-form norms or a
/// monotone cubic interpolant of tabulated values.
#[pyclass(module = "magduct_py")]
#[derive(Clone)]
struct Profile {
    inner: magduct::geometry::Profile,
}

#[pymethods]
impl Profile {
    /// Quartic bump deformation `h (1 - ((x-c)/w)^2)^2` on `|x-c| <= w`.
    #[staticmethod]
    #[pyo3(signature = (height, half_width, center = 0.0))]
    fn deformation_bump(height: f64, half_width: f64, center: f64) -> PyResult<Profile> {
        magduct::geometry::Profile::bump(ProfileKind::Deformation, height, half_width, center)
            .map(|inner| Profile { inner })
            .map_err(perr)
    }

    /// Quartic curvature bump; the sign of `height` picks the bending
    /// direction.
    #[staticmethod]
    #[pyo3(signature = (height, half_width, center = 0.0))]
    fn curvature_bump(height: f64, half_width: f64, center: f64) -> PyResult<Profile> {
        magduct::geometry::Profile::bump(ProfileKind::Curvature, height, half_width, center)
            .map(|inner| Profile { inner })
            .map_err(perr)
    }

    /// Deformation interpolated through `(xs, ps)`; clamped to zero
    /// outside the table.
    #[staticmethod]
    fn deformation_table(xs: Vec<f64>, ps: Vec<f64>) -> PyResult<Profile> {
        magduct::geometry::Profile::from_table(ProfileKind::Deformation, &xs, &ps)
            .map(|inner| Profile { inner })
            .map_err(perr)
    }

    /// Signed curvature interpolated through `(xs, ps)`.
    #[staticmethod]
    fn curvature_table(xs: Vec<f64>, ps: Vec<f64>) -> PyResult<Profile> {
        magduct::geometry::Profile::from_table(ProfileKind::Curvature, &xs, &ps)
            .map(|inner| Profile { inner })
            .map_err(perr)
    }

    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    fn deriv(&self, x: f64) -> f64 {
        self.inner.deriv(x)
    }

    fn integral(&self) -> f64 {
        self.inner.integral()
    }

    /// `(lo, hi)` interval outside which the profile vanishes.
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn deriv_sup_norm(&self) -> f64 {
        self.inner.deriv_sup_norm()
    }

    fn __repr__(&self) -> String {
        let kind = match self.inner.kind() {
            ProfileKind::Deformation => "deformation",
            ProfileKind::Curvature => "curvature",
        };
        let (lo, hi) = self.inner.support();
        format!(
            "Profile({kind}, support=[{lo:.3}, {hi:.3}], sup={:.4}, integral={:.4})",
            self.inner.sup_norm(),
            self.inner.integral()
        )
    }
}

/// First positive zero of the Bessel function J0; the constant behind
/// the disc ground-state bound used throughout the certificates.
#[pyfunction]
fn bessel_j0_zero() -> f64 {
    bessel_j0_first_zero()
}

/// Hardy-constant chain of a compactly supported bounded field.
///
/// Returns the full certificate as a dict: the flux profile summary
/// (`mu0`, `r0`), the intermediate constants `c0`..`c6`, and the final
/// weighted lower bound `c_hardy` for the weight `1/(1 + x^2)`.
#[pyfunction]
#[pyo3(signature = (b0 = 0.5, radius = 1.0, center = (0.0, PI / 2.0), kind = "constant-patch",
                    y0 = PI / 2.0, r_ball = 1.0, alpha = 1.0))]
#[allow(clippy::too_many_arguments)]
fn hardy_constants<'py>(
    py: Python<'py>,
    b0: f64,
    radius: f64,
    center: (f64, f64),
    kind: &str,
    y0: f64,
    r_ball: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let field = build_field(kind, b0, radius, center, y0, alpha)?;
    let cert = hardy_certificate(&field, y0, r_ball).map_err(perr)?;
    serialize_to_py(py, &cert)
}

/// Hardy-constant chain of a point flux `phi` at `(0, y0)`; the weight
/// is the inverse squared distance to the flux point.
#[pyfunction]
#[pyo3(signature = (phi = 0.5, y0 = PI / 2.0, r_ball = 1.0))]
fn ab_constants<'py>(
    py: Python<'py>,
    phi: f64,
    y0: f64,
    r_ball: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cert = ab_certificate(phi, y0, r_ball).map_err(perr)?;
    serialize_to_py(py, &cert)
}

/// Certified widening threshold `lambda_0` for a boundary deformation
/// under the given field: below it the deformed strip keeps no discrete
/// spectrum.  Pass `phi` to use a point flux instead of a bounded field.
#[pyfunction]
#[pyo3(signature = (profile, b0 = 0.5, radius = 1.0, center = (0.0, PI / 2.0),
                    kind = "constant-patch", y0 = PI / 2.0, r_ball = 1.0, alpha = 1.0,
                    phi = None))]
#[allow(clippy::too_many_arguments)]
fn widening_threshold<'py>(
    py: Python<'py>,
    profile: PyRef<'py, Profile>,
    b0: f64,
    radius: f64,
    center: (f64, f64),
    kind: &str,
    y0: f64,
    r_ball: f64,
    alpha: f64,
    phi: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cert = match phi {
        Some(phi) => threshold_certificate(&PerturbationScenario::DeformedPointFlux {
            phi,
            y0,
            r_ball,
            profile: &profile.inner,
        }),
        None => {
            let field = build_field(kind, b0, radius, center, y0, alpha)?;
            threshold_certificate(&PerturbationScenario::DeformedBounded {
                field: &field,
                y0,
                r_ball,
                profile: &profile.inner,
            })
        }
    }
    .map_err(perr)?;
    serialize_to_py(py, &cert)
}

/// Certified bending threshold `beta_0` for a curvature profile under
/// the given field; same conventions as `widening_threshold`.
#[pyfunction]
#[pyo3(signature = (curvature, b0 = 0.5, radius = 1.0, center = (0.0, PI / 2.0),
                    kind = "constant-patch", y0 = PI / 2.0, r_ball = 1.0, alpha = 1.0,
                    phi = None))]
#[allow(clippy::too_many_arguments)]
fn bending_threshold<'py>(
    py: Python<'py>,
    curvature: PyRef<'py, Profile>,
    b0: f64,
    radius: f64,
    center: (f64, f64),
    kind: &str,
    y0: f64,
    r_ball: f64,
    alpha: f64,
    phi: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cert = match phi {
        Some(phi) => threshold_certificate(&PerturbationScenario::CurvedPointFlux {
            phi,
            y0,
            r_ball,
            profile: &curvature.inner,
        }),
        None => {
            let field = build_field(kind, b0, radius, center, y0, alpha)?;
            threshold_certificate(&PerturbationScenario::CurvedBounded {
                field: &field,
                y0,
                r_ball,
                profile: &curvature.inner,
            })
        }
    }
    .map_err(perr)?;
    serialize_to_py(py, &cert)
}

/// Discrete spectrum of the truncated strip below `threshold`.
///
/// Geometry: straight by default; pass `profile` with `lam` for a
/// widened boundary, or `curvature` with `beta` for a bent strip.
/// Field: a transversal-gauge bounded field, a point flux
/// (`kind="ab"`), or none (`kind="zero"`).  Returns eigenvalues,
/// residuals, and solver metadata as a dict.
#[pyfunction]
#[pyo3(signature = (length = 20.0, nx = 161, ny = 17, k = 4, threshold = 0.99,
                    kind = "constant-patch", b0 = 0.5, radius = 1.0,
                    center = (0.0, PI / 2.0), y0 = PI / 2.0, alpha = 1.0, phi = 0.5,
                    profile = None, lam = 0.0, curvature = None, beta = 0.0,
                    seed = 0xC0FFEE))]
#[allow(clippy::too_many_arguments)]
fn spectrum_below<'py>(
    py: Python<'py>,
    length: f64,
    nx: usize,
    ny: usize,
    k: usize,
    threshold: f64,
    kind: &str,
    b0: f64,
    radius: f64,
    center: (f64, f64),
    y0: f64,
    alpha: f64,
    phi: f64,
    profile: Option<PyRef<'py, Profile>>,
    lam: f64,
    curvature: Option<PyRef<'py, Profile>>,
    beta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let pot = match kind {
        "zero" => VectorPotential::Zero,
        "ab" => ab_potential(phi, y0).map_err(perr)?,
        _ => transversal_potential(build_field(kind, b0, radius, center, y0, alpha)?),
    };
    let (mut nx, mut ny) = (nx, ny);
    if pot.singularity().is_some() {
        // a point flux must sit mid-cell, away from every node line
        if nx % 2 == 1 {
            nx += 1;
        }
        if ny % 2 == 1 {
            ny += 1;
        }
    }
    let plan = TruncationPlan { length, nx, ny };
    let grid = plan.grid(&pot).map_err(perr)?;
    let geom = match (&profile, &curvature) {
        (Some(f), _) => GeometryKind::Deformed { profile: &f.inner, lambda: lam },
        (_, Some(g)) => GeometryKind::Curved { profile: &g.inner, beta },
        _ => GeometryKind::Straight,
    };
    let sys = assemble_geometry(&geom, &pot, &grid).map_err(perr)?;
    let mut opts = RunConfig::default().solve_options(seed);
    opts.k = k;
    let report = discrete_spectrum_below_threshold(&sys, threshold, &opts).map_err(perr)?;

    let out = serialize_to_py(py, &report)?;
    let dict = out.downcast::<PyDict>().map_err(PyErr::from)?.clone();
    dict.set_item("grid", (plan.nx, plan.ny))?;
    dict.set_item("threshold", threshold)?;
    Ok(dict.into_any())
}

/// Reconstruct the planar curve with signed curvature `beta * gamma`
/// at the sample points `xs` (arc-length parameter).  Returns a dict of
/// equal-length lists: position, unit tangent, and the curvature.
#[pyfunction]
fn curve_points<'py>(
    py: Python<'py>,
    curvature: PyRef<'py, Profile>,
    beta: f64,
    xs: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let curve = reconstruct_curve(&curvature.inner, beta, &xs).map_err(perr)?;
    let kappa: Vec<f64> = xs.iter().map(|&x| beta * curvature.inner.eval(x)).collect();
    let dict = PyDict::new(py);
    dict.set_item("x", &curve.xs)?;
    dict.set_item("a", &curve.a)?;
    dict.set_item("b", &curve.b)?;
    dict.set_item("tangent_a", &curve.da)?;
    dict.set_item("tangent_b", &curve.db)?;
    dict.set_item("curvature", kappa)?;
    dict.set_item("theta_total", curve.theta_total)?;
    Ok(dict.into_any())
}

/// Norms and Rayleigh-quotient pieces of the closed-form trial state
/// with plateau half-length `s`, shape gain `beta`, and coupling `lam`:
/// the quadrature value, the exact norm, and the gradient quotient
/// whose expansion is `1 - (s beta lam)^2 + O(lam^3)`.
#[pyfunction]
#[pyo3(signature = (s = 1.0, beta = 1.0, lam = 0.05))]
fn trial_quotients<'py>(
    py: Python<'py>,
    s: f64,
    beta: f64,
    lam: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = TrialFunctionSpec::new(s, beta, lam).map_err(perr)?;
    let q = trial_quotient(&spec, &VectorPotential::Zero, 0.0).map_err(perr)?;
    serialize_to_py(py, &q)
}

#[pymodule]
fn magduct_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Profile>()?;
    m.add_function(wrap_pyfunction!(bessel_j0_zero, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_constants, m)?)?;
    m.add_function(wrap_pyfunction!(ab_constants, m)?)?;
    m.add_function(wrap_pyfunction!(widening_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(bending_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_below, m)?)?;
    m.add_function(wrap_pyfunction!(curve_points, m)?)?;
    m.add_function(wrap_pyfunction!(trial_quotients, m)?)?;
    Ok(())
}
