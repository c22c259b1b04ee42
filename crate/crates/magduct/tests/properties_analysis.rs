//! Properties of the certified constants and the numerical experiments:
//! closed forms for the flux profile of simple fields, independent
//! recomputation of the constant chains, scaling laws in the coupling,
//! and existence verdicts in regimes where the analysis settles the
//! answer.

mod common;

use std::f64::consts::PI;

use magduct::eigensolve::SolveOptions;
use magduct::experiments::{
    bgrs_asymptotic, eigenvalue_exists, essential_spectrum_probe, potential_l2_sq,
    trial_quotient, DetectionReference, GeometryKind, TrialFunctionSpec, TruncationPlan,
};
use magduct::gauge::{ab_potential, transversal_potential, MagneticField, VectorPotential};
use magduct::geometry::{Profile, ProfileKind};
use magduct::hardy::{
    ab_certificate, bessel_j0_first_zero, classical_hardy_optimum, hardy_certificate,
    lemma73_check, mu_profile, threshold_certificate, weak_field_asymptotics,
    PerturbationScenario,
};

fn reference_field() -> MagneticField {
    MagneticField::constant_patch(0.5, 1.0, (0.0, PI / 2.0), PI / 2.0)
}

fn small_patch() -> MagneticField {
    MagneticField::constant_patch(0.1, 0.5, (0.0, PI / 2.0), PI / 2.0)
}

fn deformation() -> Profile {
    Profile::bump(ProfileKind::Deformation, 0.9375, 1.0, 0.0).unwrap()
}

fn curvature() -> Profile {
    Profile::bump(ProfileKind::Curvature, 2.5, 1.0, 0.0).unwrap()
}

/// `mu(r)` recovered from the sampled mean flux.
fn mu_of_flux(phi: f64) -> f64 {
    let two = 2.0 * phi;
    0.5 * (two - two.round()).abs()
}

/// For a constant patch the mean flux has the closed form
/// `B0 r^2 / 2` inside the patch and freezes at the rim, which pins
/// every headline number of the flux profile.
#[test]
fn flux_profile_matches_the_closed_form_for_a_constant_patch() {
    for (b0, rad, r_ball) in [(0.5, 1.0, 1.0), (0.1, 0.5, 1.0)] {
        let field = MagneticField::constant_patch(b0, rad, (0.0, PI / 2.0), PI / 2.0);
        let flux = mu_profile(&field, r_ball).unwrap();
        for (&r, &phi) in flux.rs.iter().zip(&flux.phi) {
            let exact = 0.5 * b0 * r.min(rad).powi(2);
            assert!(
                (phi - exact).abs() <= 1e-8 + 1e-8 * exact,
                "B0 = {b0}: mean flux {phi} at r = {r}, expected {exact}"
            );
        }
        let mu0_exact = 2.0 / (b0 * rad);
        assert!(
            (flux.mu0 - mu0_exact).abs() <= 1e-6 * mu0_exact,
            "B0 = {b0}: mu0 = {} vs {mu0_exact}",
            flux.mu0
        );
        assert!(
            (flux.r0 - rad).abs() <= 2.0 * r_ball / flux.rs.len() as f64,
            "B0 = {b0}: r0 = {} vs patch radius {rad}",
            flux.r0
        );
        // |r mu' - mu| / r^2 = B0 / 2 inside the patch and peaks at the
        // same value just outside; the sampled bound may carry a small
        // safety margin but must not be far off
        let c2_exact = 0.5 * b0;
        assert!(
            flux.c2 >= c2_exact - 1e-9 && flux.c2 <= 1.05 * c2_exact,
            "B0 = {b0}: c2 = {} vs {c2_exact}",
            flux.c2
        );
        assert!((flux.k1 - mu0_exact).abs() <= 1e-6 * mu0_exact);
        assert!(flux.kinks.is_empty(), "no corners below half a quantum");
    }
}

/// Scaling the field by `alpha` scales the flux linearly, so `mu0`
/// scales inversely as long as no corner appears.
#[test]
fn flux_normalization_scales_inversely_with_the_coupling() {
    let base = mu_profile(&reference_field(), 1.0).unwrap();
    for alpha in [0.25, 0.5] {
        let scaled = mu_profile(&reference_field().with_alpha(alpha), 1.0).unwrap();
        let rel = (scaled.mu0 * alpha - base.mu0).abs() / base.mu0;
        assert!(
            rel <= 1e-9,
            "alpha = {alpha}: mu0 {} does not scale as mu0/alpha ({rel:.2e})",
            scaled.mu0
        );
        assert!((scaled.k1 * alpha - base.k1).abs() / base.k1 <= 1e-9);
    }
}

/// The lowest zero of the transverse Bessel mode against a power-series
/// plus bisection oracle.
#[test]
fn bessel_zero_agrees_with_a_series_oracle() {
    let v = bessel_j0_first_zero();
    let oracle = common::j0_first_zero_oracle();
    assert!((v - oracle).abs() <= 1e-10, "{v} vs oracle {oracle}");
    assert!(common::j0_series(v).abs() <= 1e-12);
    assert!(v >= 2.0);
}

/// Step-by-step recomputation of the certified constant chain from the
/// certificate's own flux numbers; every stage has to match to roundoff.
#[test]
fn hardy_chain_recomputes_step_by_step() {
    for (field, r_ball) in [(reference_field(), 1.0), (small_patch(), 0.75)] {
        let cert = hardy_certificate(&field, PI / 2.0, r_ball).unwrap();
        let (nu0, mu0, r0, c2) = (cert.nu0, cert.mu0, cert.r0, cert.c2);
        let c0 = 4.0 * (r0 * r0 / (nu0 * nu0)).max(
            (2.0 * r_ball.powi(3) - 3.0 * r_ball * r_ball * r0 + r0.powi(3)) / (6.0 * r0),
        );
        let c1 = (2.0 * mu0 * mu0 + 4.0 * c0 * c2 * c2 * mu0.powi(4)).max(c0);
        let c3 = PI * PI * (1.0 / (cert.y0 * cert.y0)).min(1.0 / (PI - cert.y0).powi(2)) - 1.0;
        let cw = ((cert.y0 - PI / 2.0).abs() + r_ball).cos();
        let c4 =
            (2.0 * r_ball * r_ball * c1 * c3 + 4.0 * c1 + 4.0 * r_ball * r_ball) / (c3 * cw * cw);
        let c5 = (64.0 + 4.0 * r_ball * r_ball) / r_ball.powi(4);
        let c6 = 16.0 + c4 * c5;
        for (name, ours, theirs) in [
            ("c0", c0, cert.c0),
            ("c1", c1, cert.c1),
            ("c3", c3, cert.c3),
            ("c4", c4, cert.c4),
            ("c5", c5, cert.c5),
            ("c6", c6, cert.c6),
            ("c_hardy", 1.0 / c6, cert.c_hardy),
        ] {
            assert!(
                (ours - theirs).abs() <= 1e-12 * theirs.abs(),
                "{name}: recomputed {ours} vs certified {theirs}"
            );
        }
    }
    // headline values of the bounded reference certificate
    let cert = hardy_certificate(&reference_field(), PI / 2.0, 1.0).unwrap();
    assert!((cert.mu0 - 4.0).abs() <= 1e-6);
    assert!((cert.c3 - 3.0).abs() <= 1e-12);
    assert!((cert.c5 - 68.0).abs() <= 1e-12);
    assert!(cert.c_hardy > 1.55e-5 && cert.c_hardy < 1.75e-5);
}

/// Identities of the point-flux certificate: the fractional part, the
/// transverse constant at the symmetric point, and the recomputed c14.
#[test]
fn point_flux_certificate_identities() {
    let cert = ab_certificate(0.5, PI / 2.0, 1.0).unwrap();
    assert!((cert.psi - 0.5).abs() <= 1e-15);
    assert!((cert.c13 - 16.0 / 3.0).abs() <= 1e-12 * cert.c13);
    let (psi, c13, r2) = (cert.psi, cert.c13, cert.r_ball * cert.r_ball);
    let cw = ((cert.y0 - PI / 2.0).abs() + cert.r_ball).cos();
    let c14 = (4.0 * r2 * psi * psi * c13 + 2.0 * r2 + 4.0 * r2 * c13) / (psi * psi * cw * cw);
    assert!((c14 - cert.c14).abs() <= 1e-12 * cert.c14);
    assert!(cert.c_ab > 0.0);
    assert!(cert.c_ab <= cert.one_over_c16 * (1.0 + 1e-12));
    assert!((cert.one_over_c16 * cert.c16 - 1.0).abs() <= 1e-12);

    // only the distance to the integers matters
    let wrapped = ab_certificate(2.5, PI / 2.0, 1.0).unwrap();
    assert!((wrapped.psi - 0.5).abs() <= 1e-15);
    assert!((wrapped.c_ab - cert.c_ab).abs() <= 1e-15);
    let weak = ab_certificate(0.3, PI / 2.0, 1.0).unwrap();
    assert!((weak.psi - 0.3).abs() <= 1e-12);
    assert!(weak.c_ab < cert.c_ab, "smaller fractional flux, weaker bound");
}

/// Every threshold certificate must equal the closed form assembled
/// from its own constant table.
#[test]
fn thresholds_are_the_closed_forms_of_their_constant_tables() {
    let field = reference_field();
    let f = deformation();
    let g = curvature();
    let f_off = Profile::bump(ProfileKind::Deformation, 0.9375, 1.0, 2.5).unwrap();
    let g_off = Profile::bump(ProfileKind::Curvature, 2.5, 1.0, -2.5).unwrap();

    let cert = threshold_certificate(&PerturbationScenario::DeformedBounded {
        field: &field,
        y0: PI / 2.0,
        r_ball: 1.0,
        profile: &f,
    })
    .unwrap();
    let c9 = cert.constants["c9"];
    let want = cert.hardy.as_ref().unwrap().c_hardy / (2.0 * c9 * (1.0 + cert.d * cert.d));
    assert!((cert.threshold - want).abs() <= 1e-12 * want, "widening, bounded field");

    let cert = threshold_certificate(&PerturbationScenario::CurvedBounded {
        field: &field,
        y0: PI / 2.0,
        r_ball: 1.0,
        profile: &g,
    })
    .unwrap();
    let c12 = cert.constants["c12"];
    let want = cert.hardy.as_ref().unwrap().c_hardy / (2.0 * c12 * (1.0 + cert.d * cert.d));
    assert!((cert.threshold - want).abs() <= 1e-12 * want, "bending, bounded field");

    let cert = threshold_certificate(&PerturbationScenario::DeformedPointFlux {
        phi: 0.5,
        y0: PI / 2.0,
        r_ball: 1.0,
        profile: &f_off,
    })
    .unwrap();
    let (c20, c21) = (cert.constants["c20"], cert.constants["c21"]);
    let want =
        cert.ab.as_ref().unwrap().c_ab / (2.0 * (c20 * cert.d * cert.d + c21));
    assert!((cert.threshold - want).abs() <= 1e-12 * want, "widening, point flux");

    let cert = threshold_certificate(&PerturbationScenario::CurvedPointFlux {
        phi: 0.5,
        y0: PI / 2.0,
        r_ball: 1.0,
        profile: &g_off,
    })
    .unwrap();
    let c25 = cert.constants["c25"];
    let want = cert.ab.as_ref().unwrap().c_ab / (2.0 * c25);
    assert!((cert.threshold - want).abs() <= 1e-12 * want, "bending, point flux");
}

/// The weak-field report: closed form of the zero-field widening
/// constant, the raw-flux normalization, and the alpha^2 law of the
/// certified Hardy constant.
#[test]
fn weak_field_coefficients_match_their_closed_forms() {
    let field = reference_field();
    let f = deformation();
    let g = curvature();
    let wf = weak_field_asymptotics(&field, PI / 2.0, 1.0, Some(&f), Some(&g)).unwrap();

    assert!((wf.k1 - 4.0).abs() <= 1e-6, "k1 = {} vs 2/(B0 R)", wf.k1);
    let k4 = (2.0 * wf.r_ball * wf.r_ball * wf.c3 + 4.0)
        * (2.0 * wf.k1 * wf.k1 + 4.0 * wf.c0 * wf.k1.powi(4) * wf.k2 * wf.k2)
        / (wf.c3 * ((wf.y0 - PI / 2.0).abs() + wf.r_ball).cos().powi(2));
    assert!((k4 - wf.k4).abs() <= 1e-12 * wf.k4);
    assert!((wf.hardy_coeff - 1.0 / (wf.k4 * wf.c5)).abs() <= 1e-15);

    let (nf, nfp) = (f.sup_norm(), f.deriv_sup_norm());
    let k9 = nf * nf + 2.0 * nf + 0.25 * nfp * nfp + (1.0 + PI) * nfp;
    assert!((wf.k9.unwrap() - k9).abs() <= 1e-12 * k9);
    let d = f.support_radius();
    let l0 = 1.0 / (2.0 * wf.k4 * k9 * wf.c5 * (1.0 + d * d));
    assert!((wf.lambda0_coeff.unwrap() - l0).abs() <= 1e-12 * l0);
    assert!(wf.k12.unwrap() > 0.0 && wf.beta0_coeff.unwrap() > 0.0);

    // certified constant of the scaled field approaches the alpha^2 law
    for alpha in [0.04, 0.02, 0.01] {
        let cert = hardy_certificate(&field.clone().with_alpha(alpha), PI / 2.0, 1.0).unwrap();
        let ratio = cert.c_hardy / (alpha * alpha) / wf.hardy_coeff;
        assert!(
            (ratio - 1.0).abs() <= 0.10,
            "alpha = {alpha}: c_H / alpha^2 off the limit by {:.3}",
            ratio - 1.0
        );
    }
    let cert = hardy_certificate(&field.with_alpha(0.05), PI / 2.0, 1.0).unwrap();
    let ratio = cert.c_hardy / 0.0025 / wf.hardy_coeff;
    assert!(ratio >= 0.5 && ratio <= 2.0);
}

/// The normalized squared flux `chi = (mu0 mu / r)^2` stays in the unit
/// interval and touches one at the optimizing radius.
#[test]
fn normalized_flux_peaks_at_one() {
    for (field, r_ball) in [(reference_field(), 1.0), (small_patch(), 1.0)] {
        let flux = mu_profile(&field, r_ball).unwrap();
        let mut best = (0.0f64, 0.0f64);
        for (&r, &phi) in flux.rs.iter().zip(&flux.phi) {
            let chi = (flux.mu0 * mu_of_flux(phi) / r).powi(2);
            assert!(chi <= 1.0 + 1e-9, "chi = {chi} above one at r = {r}");
            if chi > best.0 {
                best = (chi, r);
            }
        }
        assert!(best.0 >= 1.0 - 1e-8, "peak {} below one", best.0);
        let spacing = 2.0 * r_ball / flux.rs.len() as f64;
        assert!(
            (best.1 - flux.r0).abs() <= spacing,
            "peak at {} but r0 = {}",
            best.1,
            flux.r0
        );
    }
}

/// Discretized transverse localization bounds: both refinement ladders
/// stay above their certified floors and tighten monotonically.
#[test]
fn transverse_bounds_refine_from_above() {
    let lemma = lemma73_check(PI / 2.0, 4).unwrap();
    assert!((lemma.bound - 3.0 / 16.0).abs() <= 1e-12);
    assert!(lemma.monotone_from_above);
    for w in lemma.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-14, "not tightening: {:?}", lemma.values);
    }
    for &v in &lemma.values {
        assert!(v >= lemma.bound - 1e-12, "value {v} below bound {}", lemma.bound);
    }

    let classical = classical_hardy_optimum(4);
    assert!((classical.bound - 0.25).abs() <= 1e-15);
    assert!(classical.monotone_from_above);
    for &v in &classical.values {
        assert!(v >= 0.25 - 1e-12);
    }
    for w in classical.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-14);
    }
}

/// The explicit bound state of the widened strip: quadrature against
/// the closed-form norm, and the quadratic dip of its Rayleigh
/// quotient in the small-amplitude window.
#[test]
fn trial_state_matches_its_closed_form() {
    for (s, beta, lam) in [(1.0, 1.0, 0.05), (0.7, 1.3, 0.08)] {
        let spec = TrialFunctionSpec::new(s, beta, lam).unwrap();
        let exact = PI * (1.0 / (2.0 * s * beta * lam) + s + 0.5 * beta * lam * s);
        assert!(
            (spec.norm_sq_exact().unwrap() - exact).abs() <= 1e-12 * exact,
            "closed-form norm"
        );
        let q = trial_quotient(&spec, &VectorPotential::Zero, 0.0).unwrap();
        assert!(
            (q.norm_sq - exact).abs() <= 1e-3 * exact,
            "quadrature norm {} vs exact {exact}",
            q.norm_sq
        );
        assert!((q.magnetic_quotient - q.grad_quotient).abs() <= 1e-15);
        assert!(q.potential_term == 0.0);
    }

    // the longitudinal stretching of the transverse mode costs energy
    // of order lambda^2 / s, so the dip only opens for small enough
    // amplitude; outside that window the quotient sits above the band
    let quotient = |s: f64, beta: f64, lam: f64| -> f64 {
        let spec = TrialFunctionSpec::new(s, beta, lam).unwrap();
        trial_quotient(&spec, &VectorPotential::Zero, 0.0)
            .unwrap()
            .grad_quotient
    };
    assert!(quotient(0.7, 1.3, 0.08) > 1.0, "stretch-dominated regime");
    assert!(quotient(1.0, 1.0, 0.05) < 1.0, "tail-dominated regime");

    // inside the window the dip is quadratic: halving lambda divides
    // the deficit by four up to the O(lambda) relative correction
    let (d1, d05) = (1.0 - quotient(1.0, 1.0, 0.01), 1.0 - quotient(1.0, 1.0, 0.005));
    let ratio = d1 / d05;
    assert!(
        ratio >= 3.3 && ratio <= 4.7,
        "deficit halving ratio {ratio:.3} outside the quadratic window"
    );
    assert!(
        (d1 / 1e-4 - 1.0).abs() <= 0.2,
        "deficit {d1:.3e} at lambda = 0.01 off the (s beta lambda)^2 model"
    );
}

/// Above the trial-state sufficiency level the bound state provably
/// exists, and the solver must find it.
#[test]
fn sufficient_widening_binds() {
    let field = reference_field();
    let f = deformation();
    let pot = transversal_potential(field);
    let plan = TruncationPlan::with_spacing(60.0, 0.25, 21);

    // fixed point of lambda = 4 alpha^2 ||A||^2 / (pi s beta) at unit
    // coupling; two passes settle it to well under a percent
    let mut lam = 0.1;
    for _ in 0..3 {
        let nsq = potential_l2_sq(&pot, &f, lam, &plan).unwrap();
        lam = 4.0 * nsq / PI;
    }
    println!("sufficiency fixed point: lambda = {lam:.4}");
    let report = eigenvalue_exists(
        &GeometryKind::Deformed { profile: &f, lambda: lam },
        &pot,
        &plan,
        1e-3,
        DetectionReference::GridBandFloor,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(
        report.exists,
        "no bound state at the sufficiency level lambda = {lam}: {:?}",
        report.samples
    );
}

/// Without a field any widening binds; the verdict may not depend on
/// the amplitude being large.
#[test]
fn any_widening_binds_without_a_field() {
    let f = deformation();
    for lam in [0.05f64, 0.1] {
        let length = (5.5 / lam).clamp(60.0, 400.0);
        let plan = TruncationPlan::with_spacing(length, 0.25, 21);
        let margin = 0.2 * lam * lam;
        let report = eigenvalue_exists(
            &GeometryKind::Deformed { profile: &f, lambda: lam },
            &VectorPotential::Zero,
            &plan,
            margin,
            DetectionReference::GridBandFloor,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(report.exists, "lambda = {lam}: {:?}", report.samples);
    }
}

/// Zero-field bending also binds.  The binding here is much weaker
/// than the naive local-well estimate because the curvature varies on
/// the same scale as the strip width, so the detection needs a long
/// truncation and a margin of a few 1e-6; the truncation tail decays
/// only like 1/L for such a marginal state.
#[test]
fn bending_binds_without_a_field() {
    let g = curvature();
    let plan = TruncationPlan::with_spacing(240.0, 0.25, 21);
    let report = eigenvalue_exists(
        &GeometryKind::Curved { profile: &g, beta: 0.2 },
        &VectorPotential::Zero,
        &plan,
        1e-5,
        DetectionReference::GridBandFloor,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(report.exists, "{:?}", report.samples);
}

/// Doubling the widening profile quadruples the weak-coupling binding
/// coefficient (it is the square of the profile integral).
#[test]
fn doubling_the_profile_quadruples_the_binding() {
    let lambdas = [0.02, 0.04];
    let opts = SolveOptions::default();
    let single = bgrs_asymptotic(&deformation(), &lambdas, 0.25, 21, &opts).unwrap();
    let doubled_profile = Profile::bump(ProfileKind::Deformation, 1.875, 1.0, 0.0).unwrap();
    let doubled = bgrs_asymptotic(&doubled_profile, &lambdas, 0.25, 21, &opts).unwrap();
    let ratio = doubled.coefficient / single.coefficient;
    println!(
        "binding coefficients: {} and {} (ratio {ratio:.3})",
        single.coefficient, doubled.coefficient
    );
    assert!(
        (ratio - 4.0).abs() <= 0.15 * 4.0,
        "coefficient ratio {ratio:.3} not close to 4"
    );
    assert!((single.integral_sq - 1.0).abs() <= 1e-9);
    assert!((doubled.integral_sq - 4.0).abs() <= 1e-9);
}

/// The essential spectrum starts at the band edge for compact and for
/// point fluxes alike: the lowest eigenvalue of the unperturbed strip
/// approaches one from wherever the grid bias puts it.
#[test]
fn unperturbed_strips_probe_the_band_edge() {
    let opts = SolveOptions::default();

    let pot = transversal_potential(reference_field());
    let probe = essential_spectrum_probe(&pot, &[10.0, 20.0], 0.2, 33, &opts).unwrap();
    let last = probe.rows.last().unwrap();
    assert!(
        last.theta_min >= 1.0 - 1e-3,
        "compact field: theta = {} at L = 20",
        last.theta_min
    );
    assert!(probe.rows[0].eps_grid >= last.eps_grid - 1e-9, "not improving with length");

    let ab = ab_potential(0.5, PI / 2.0).unwrap();
    let probe = essential_spectrum_probe(&ab, &[10.0, 20.0], 0.2, 32, &opts).unwrap();
    let last = probe.rows.last().unwrap();
    assert!(
        last.theta_min >= 1.0 - 5e-3,
        "point flux: theta = {} at L = 20",
        last.theta_min
    );
}
