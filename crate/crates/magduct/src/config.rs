//! Declarative run configuration.
//!
//! Every driver takes its inputs from a TOML document with four core
//! blocks (`geometry`, `field`, `discretization`, `output`) plus small
//! per-driver sections.  All fields carry defaults that reproduce the
//! reference configuration, so an empty document is a valid run for
//! every command.  Validation happens before dispatch and reports the
//! offending key path, mirroring the preconditions the library modules
//! enforce at their own boundaries.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigensolve::SolveOptions;
use crate::gauge::{ab_potential, transversal_potential, MagneticField, VectorPotential};
use crate::geometry::{Profile, ProfileKind};
use crate::{Error, Result};

fn is_pi_half(x: f64) -> bool {
    (x - PI / 2.0).abs() < 1e-12
}

/// Top-level run configuration.  Unknown keys are rejected so typos
/// surface as parse errors instead of silently falling back to defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub field: FieldConfig,
    pub discretization: DiscretizationConfig,
    pub output: OutputConfig,
    pub spectrum: SpectrumConfig,
    pub scan: ScanSection,
    pub trial: TrialSection,
    pub bgrs: BgrsSection,
    pub probe: ProbeSection,
    pub diamagnetic: DiamagneticSection,
    pub curve: CurveSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// `straight`, `deformed`, or `curved`.
    pub kind: String,
    /// Widening profile `f` (used by `deformed`).
    pub profile: ProfileConfig,
    /// Curvature profile `γ` (used by `curved`).
    pub curvature: ProfileConfig,
    pub lambda: f64,
    pub beta: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            kind: "straight".into(),
            profile: ProfileConfig::reference_deformation(),
            curvature: ProfileConfig::reference_curvature(),
            lambda: 0.0,
            beta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    /// `bump` or `table`.
    pub kind: String,
    pub height: f64,
    pub half_width: f64,
    pub center: f64,
    /// Table abscissas/values (used when `kind = "table"`).
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl ProfileConfig {
    /// The unit-integral quartic bump: `h w 16/15 = 1`.
    pub fn reference_deformation() -> ProfileConfig {
        ProfileConfig {
            kind: "bump".into(),
            height: 0.9375,
            half_width: 1.0,
            center: 0.0,
            xs: vec![],
            ps: vec![],
        }
    }

    pub fn reference_curvature() -> ProfileConfig {
        ProfileConfig {
            kind: "bump".into(),
            height: 2.5,
            half_width: 1.0,
            center: 0.0,
            xs: vec![],
            ps: vec![],
        }
    }

    pub fn build(&self, kind: ProfileKind, key: &str) -> Result<Profile> {
        match self.kind.as_str() {
            "bump" => Profile::bump(kind, self.height, self.half_width, self.center)
                .map_err(|e| Error::Config(format!("{key}: {e}"))),
            "table" => Profile::from_table(kind, &self.xs, &self.ps)
                .map_err(|e| Error::Config(format!("{key}: {e}"))),
            other => Err(Error::Config(format!(
                "{key}.kind: expected \"bump\" or \"table\", got \"{other}\""
            ))),
        }
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::reference_deformation()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// `constant-patch`, `bump`, `ab`, or `zero`.
    pub kind: String,
    /// Field strength inside the patch (before the coupling `alpha`).
    pub b0: f64,
    pub radius: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Coupling constant multiplying the field.
    pub alpha: f64,
    /// Point flux (for `ab`); the circulation is `2πφ`.
    pub phi: f64,
    /// Reference transverse height for the gauge and the certificates.
    pub y0: f64,
    /// Hardy ball radius around `(0, y0)`.
    pub r_ball: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            kind: "constant-patch".into(),
            b0: 0.5,
            radius: 1.0,
            center_x: 0.0,
            center_y: PI / 2.0,
            alpha: 1.0,
            phi: 0.5,
            y0: PI / 2.0,
            r_ball: 1.0,
        }
    }
}

impl FieldConfig {
    /// The bounded field with the coupling applied (`zero` and `ab`
    /// configurations yield the zero field).
    pub fn build_field(&self) -> Result<MagneticField> {
        let center = (self.center_x, self.center_y);
        let f = match self.kind.as_str() {
            "constant-patch" => {
                MagneticField::constant_patch(self.b0, self.radius, center, self.y0)
            }
            "bump" => MagneticField::bump(self.b0, self.radius, center, self.y0),
            "zero" | "ab" => MagneticField::zero(self.y0),
            other => {
                return Err(Error::Config(format!(
                    "field.kind: expected \"constant-patch\", \"bump\", \"ab\" or \"zero\", \
                     got \"{other}\""
                )))
            }
        };
        Ok(f.with_alpha(self.alpha))
    }

    /// The vector potential the assembly consumes.
    pub fn build_potential(&self) -> Result<VectorPotential> {
        match self.kind.as_str() {
            "zero" => Ok(VectorPotential::Zero),
            "ab" => ab_potential(self.phi, self.y0),
            _ => Ok(transversal_potential(self.build_field()?)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    /// Relative residual tolerance of the eigensolver.
    pub tolerance: f64,
    /// Existence margin below the threshold.
    pub margin: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig { length: 40.0, nx: 801, ny: 41, tolerance: 1e-9, margin: 0.005 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    /// Any of `csv`, `json`, `gp`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Report the discrete spectrum below `1 - margin`.
    pub margin: f64,
    pub k: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { margin: 0.01, k: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub alphas: Vec<f64>,
    pub rel_tol: f64,
    pub margin_eta: f64,
    pub hx: f64,
    pub ny: usize,
    pub base_length: f64,
    pub max_length: f64,
    pub trial_s: f64,
    pub trial_beta: f64,
    pub lambda_cap: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            alphas: vec![0.1, 0.14, 0.2, 0.28, 0.4],
            rel_tol: 0.02,
            margin_eta: 0.3,
            hx: 0.125,
            ny: 33,
            base_length: 60.0,
            max_length: 1500.0,
            trial_s: 0.8,
            trial_beta: 0.8,
            lambda_cap: 1.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub s: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl Default for TrialSection {
    fn default() -> Self {
        TrialSection { s: 1.0, beta: 1.0, lambda: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BgrsSection {
    pub lambdas: Vec<f64>,
    pub hx: f64,
    pub ny: usize,
}

impl Default for BgrsSection {
    fn default() -> Self {
        BgrsSection { lambdas: vec![0.02, 0.04, 0.08], hx: 0.1, ny: 41 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub lengths: Vec<f64>,
    pub hx: f64,
    pub ny: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection { lengths: vec![10.0, 20.0, 40.0], hx: 0.1, ny: 41 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiamagneticSection {
    pub trials: usize,
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for DiamagneticSection {
    fn default() -> Self {
        DiamagneticSection { trials: 100, length: 3.0, nx: 121, ny: 61 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    /// Bending strength multiplying the curvature profile.
    pub beta: f64,
    /// Half-length of the arc-length window the curve is reconstructed on.
    pub length: f64,
    pub samples: usize,
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection { beta: 0.2, length: 10.0, samples: 401 }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        RunConfig::from_toml_str(&text)
    }

    pub fn solve_options(&self, seed: u64) -> SolveOptions {
        let mut o = SolveOptions::default();
        o.tol = self.discretization.tolerance;
        o.seed = seed;
        o
    }

    /// Validate every numeric field a command will consume, reporting
    /// the first violation with its TOML key path.
    pub fn validate(&self, command: &str) -> Result<()> {
        let fail = |key: &str, msg: &str| -> Result<()> {
            Err(Error::Config(format!("{key}: {msg}")))
        };

        if !matches!(self.geometry.kind.as_str(), "straight" | "deformed" | "curved") {
            return fail("geometry.kind", "expected \"straight\", \"deformed\" or \"curved\"");
        }
        if !(self.geometry.lambda >= 0.0) || !self.geometry.lambda.is_finite() {
            return fail("geometry.lambda", "must be a finite value >= 0");
        }
        if !self.geometry.beta.is_finite() {
            return fail("geometry.beta", "must be finite");
        }
        if self.geometry.kind == "deformed" {
            self.geometry.profile.build(ProfileKind::Deformation, "geometry.profile")?;
        }
        if self.geometry.kind == "curved" {
            let gamma = self.geometry.curvature.build(ProfileKind::Curvature, "geometry.curvature")?;
            // the transverse Jacobian 1 + y β γ degenerates only where
            // β γ is negative; sample the signed minimum over the support
            let r = gamma.support_radius();
            let mut worst = 0.0f64;
            for i in 0..=1024 {
                let x = -r + 2.0 * r * i as f64 / 1024.0;
                worst = worst.min(self.geometry.beta * gamma.eval(x));
            }
            if 1.0 + PI * worst <= 0.0 {
                return fail(
                    "geometry.beta",
                    "bending too strong: beta*gamma dips to or below -1/pi, \
                     the strip map stops being injective",
                );
            }
        }

        match self.field.kind.as_str() {
            "constant-patch" | "bump" => {
                if !(self.field.radius > 0.0) {
                    return fail("field.radius", "must be > 0");
                }
                if !self.field.b0.is_finite() {
                    return fail("field.b0", "must be finite");
                }
            }
            "ab" => {
                if self.field.phi.fract() == 0.0 {
                    return fail(
                        "field.phi",
                        "integer flux is gauge-trivial; choose a non-integer value",
                    );
                }
            }
            "zero" => {}
            _ => {
                return fail(
                    "field.kind",
                    "expected \"constant-patch\", \"bump\", \"ab\" or \"zero\"",
                )
            }
        }
        if !self.field.alpha.is_finite() {
            return fail("field.alpha", "must be finite");
        }
        if !(self.field.y0 > 0.0 && self.field.y0 < PI) {
            return fail("field.y0", "must lie strictly inside (0, pi)");
        }
        if !(self.field.r_ball > 0.0) {
            return fail("field.r_ball", "must be > 0");
        }

        let d = &self.discretization;
        if !(d.length > 0.0) {
            return fail("discretization.length", "must be > 0");
        }
        if d.nx < 3 || d.ny < 3 {
            return fail("discretization.nx", "nx and ny must both be >= 3");
        }
        if !(d.tolerance > 0.0 && d.tolerance < 1.0) {
            return fail("discretization.tolerance", "must lie in (0, 1)");
        }
        if !(d.margin > 0.0 && d.margin < 1.0) {
            return fail("discretization.margin", "must lie in (0, 1)");
        }

        if !self.output.formats.iter().all(|f| matches!(f.as_str(), "csv" | "json" | "gp")) {
            return fail("output.formats", "entries must be \"csv\", \"json\" or \"gp\"");
        }
        if self.output.formats.is_empty() {
            return fail("output.formats", "at least one format is required");
        }

        match command {
            "spectrum" => {
                if !(self.spectrum.margin > 0.0 && self.spectrum.margin < 1.0) {
                    return fail("spectrum.margin", "must lie in (0, 1)");
                }
                if self.spectrum.k == 0 {
                    return fail("spectrum.k", "must be >= 1");
                }
            }
            "hardy-constant" | "certify" | "threshold-scan" => {
                // the Hardy ball must sit inside the strip
                if self.field.y0 - self.field.r_ball <= 0.0
                    || self.field.y0 + self.field.r_ball >= PI
                {
                    return fail("field.r_ball", "the ball around (0, y0) must fit inside the strip");
                }
                match self.field.kind.as_str() {
                    "zero" => {
                        return fail(
                            "field.kind",
                            "this command needs a field; the zero field has no \
                             flux to build a weight from",
                        )
                    }
                    "ab" if command != "certify" => {
                        return fail(
                            "field.kind",
                            "this command covers bounded fields; use ab-hardy for \
                             the point flux",
                        )
                    }
                    _ => {}
                }
                if command == "threshold-scan" {
                    let s = &self.scan;
                    if s.alphas.is_empty() || s.alphas.iter().any(|&a| !(a > 0.0)) {
                        return fail("scan.alphas", "need a non-empty list of positive couplings");
                    }
                    if !(s.rel_tol > 0.0 && s.rel_tol <= 0.5) {
                        return fail("scan.rel_tol", "must lie in (0, 0.5]");
                    }
                    if !(s.margin_eta > 0.0) {
                        return fail("scan.margin_eta", "must be > 0");
                    }
                    if !(s.hx > 0.0) {
                        return fail("scan.hx", "must be > 0");
                    }
                    if s.ny < 3 {
                        return fail("scan.ny", "must be >= 3");
                    }
                    if !(s.base_length > 0.0 && s.max_length >= s.base_length) {
                        return fail("scan.max_length", "need 0 < base_length <= max_length");
                    }
                    if !(s.trial_s > 0.0 && s.trial_beta > 0.0) {
                        return fail("scan.trial_s", "trial tent parameters must be positive");
                    }
                }
            }
            "ab-hardy" => {
                if self.field.phi.fract() == 0.0 {
                    return fail("field.phi", "integer flux is gauge-trivial");
                }
                if !is_pi_half(self.field.y0) {
                    return fail(
                        "field.y0",
                        "the point-flux chain is certified at y0 = pi/2 only",
                    );
                }
            }
            "trial-function" => {
                if !(self.trial.s > 0.0 && self.trial.beta > 0.0) {
                    return fail("trial.s", "tent parameters must be positive");
                }
                if !(self.trial.lambda > 0.0) {
                    return fail("trial.lambda", "must be > 0 (the state needs tails)");
                }
                if self.field.kind == "ab" && self.field.alpha != 0.0 {
                    return fail(
                        "field.kind",
                        "the trial quotient needs a square-integrable potential; \
                         a point flux is not",
                    );
                }
            }
            "bgrs" => {
                let b = &self.bgrs;
                if b.lambdas.is_empty()
                    || b.lambdas.iter().any(|&l| !(l > 0.0 && l <= 0.1))
                {
                    return fail("bgrs.lambdas", "amplitudes must lie in (0, 0.1]");
                }
                if !(b.hx > 0.0) {
                    return fail("bgrs.hx", "must be > 0");
                }
                if b.ny < 3 {
                    return fail("bgrs.ny", "must be >= 3");
                }
            }
            "ess-probe" => {
                let p = &self.probe;
                if p.lengths.is_empty() || p.lengths.iter().any(|&l| !(l > 0.0)) {
                    return fail("probe.lengths", "need positive truncation lengths");
                }
                if !(p.hx > 0.0) || p.ny < 3 {
                    return fail("probe.hx", "need hx > 0 and ny >= 3");
                }
            }
            "diamagnetic" => {
                let dm = &self.diamagnetic;
                if dm.trials == 0 {
                    return fail("diamagnetic.trials", "must be >= 1");
                }
                if !(dm.length > 0.0) || dm.nx < 3 || dm.ny < 3 {
                    return fail("diamagnetic.nx", "need length > 0 and nx, ny >= 3");
                }
            }
            "curve" => {
                if !(self.curve.length > 0.0) {
                    return fail("curve.length", "must be > 0");
                }
                if self.curve.samples < 2 {
                    return fail("curve.samples", "need at least two samples");
                }
                if !self.curve.beta.is_finite() {
                    return fail("curve.beta", "must be finite");
                }
                let gamma = self
                    .geometry
                    .curvature
                    .build(ProfileKind::Curvature, "geometry.curvature")?;
                let r = gamma.support_radius();
                let mut worst = 0.0f64;
                for i in 0..=1024 {
                    let x = -r + 2.0 * r * i as f64 / 1024.0;
                    worst = worst.min(self.curve.beta * gamma.eval(x));
                }
                if 1.0 + PI * worst <= 0.0 {
                    return fail(
                        "curve.beta",
                        "bending too strong: beta*gamma dips to or below -1/pi",
                    );
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The formats as a set (order-independent).
    pub fn format_set(&self) -> BTreeSet<String> {
        self.output.formats.iter().cloned().collect()
    }
}
