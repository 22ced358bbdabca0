//! Numerical verification of the structural identities the expansion rests
//! on: the weighted contracted Bianchi identities, the auxiliary scalar that
//! is constant along exact solitons, the decay rate of the leftover
//! constraint residual, and the leading-order behaviour of the mixed
//! soliton-tensor component.

use crate::error::{Error, Result};
use crate::expand::{residual_constraint, Assembly, AssemblyFlavor, ExpansionCoefficients};
use crate::link::LinkManifold;
use crate::series::RadialSeries;
use crate::series_calculus::{
    covariant_derivative_01_series, hessian_series, partial_series, ricci_series, series_geometry,
};
use crate::tensor::TensorField;
use crate::tol;

/// Both weighted contracted Bianchi identities, evaluated literally on the
/// link metric `g` with an arbitrary potential `f`:
///
/// ```text
/// ∇^a B_ab − (∇^a f) B_ab − ½ ∇_b (R + 2Δf − |∇f|²)            B = Ric + Hess f
/// ∇^a C_ab − (∇^a f) C_ab − ½ ∇_b (R + 2Δf − |∇f|² − f)        C = B + ½ g
/// ```
///
/// Each expression is an identity for *every* metric and potential, so both
/// returned covectors must vanish to numerical precision. The two variants
/// are assembled independently term by term; nothing is shared or
/// algebraically simplified between them.
pub fn bianchi_residuals(
    link: &LinkManifold,
    f: &TensorField,
) -> Result<(TensorField, TensorField)> {
    let minv = link.metric_inv();
    let df = link.covariant_derivative(f)?;
    let gradf_up = minv.product_contract(&df, &[(1, 0)])?;

    // Plain weighted identity.
    let b = link.ricci().add(&link.hessian(f)?)?;
    let div_b = link.divergence(&b)?;
    let fdot_b = gradf_up.product_contract(&b, &[(0, 0)])?;
    let s = link
        .scalar_curvature()
        .add(&link.laplacian(f)?.scale(2.0))?
        .sub(&link.norm_sq(&df)?)?;
    let first = div_b
        .sub(&fdot_b)?
        .sub(&link.covariant_derivative(&s)?.scale(0.5))?;

    // Shifted variant: the tensor gains ½g, the scalar loses f.
    let c = link
        .ricci()
        .add(&link.hessian(f)?)?
        .add(&link.metric().scale(0.5))?;
    let div_c = link.divergence(&c)?;
    let fdot_c = gradf_up.product_contract(&c, &[(0, 0)])?;
    let s_shift = link
        .scalar_curvature()
        .add(&link.laplacian(f)?.scale(2.0))?
        .sub(&link.norm_sq(&df)?)?
        .sub(f)?;
    let second = div_c
        .sub(&fdot_c)?
        .sub(&link.covariant_derivative(&s_shift)?.scale(0.5))?;

    Ok((first, second))
}

/// The auxiliary scalar `S = R_g + 2Δ_g f − |∇f|²_g − λf` of the cone metric
/// `dr² + H(r)`, expanded as a radial series.
///
/// Along an exact soliton the literal combination is the constant
/// `−λ(n + 1 + f₀)` (computable on the flat model, where `H = r²h`,
/// `f = −λr²/4 + f₀` exactly). Shifting the potential by `−(n+1) − f₀`
/// absorbs that constant, and this function returns S for the shifted
/// potential — so a correct expansion yields the zero series, and every
/// surviving term measures a genuine defect. Only the `−λf` term feels a
/// constant shift, so the adjustment is a single exact `r⁰` addition.
pub fn soliton_scalar_series(coeffs: &ExpansionCoefficients) -> Result<RadialSeries> {
    Ok(soliton_scalar_assembly(coeffs)?.series)
}

/// [`soliton_scalar_series`] together with the size of the largest term
/// summed into it, the reference scale for deciding which coefficients are
/// numerically zero.
pub fn soliton_scalar_assembly(coeffs: &ExpansionCoefficients) -> Result<Assembly> {
    let link = coeffs.link();
    let lambda = coeffs.mode.lambda();
    let h = coeffs.h_series(true);
    let f = coeffs.f_series(true);
    let depth = -2 * coeffs.order as i32 - 6;

    let geom = series_geometry(link, &h, depth)?;
    let k = h.radial_derivative();
    let krr = k.radial_derivative();
    let fr = f.radial_derivative();
    let frr = fr.radial_derivative();

    let ric = ricci_series(link, &h, &geom)?;
    let r_h = geom.hinv.mul(&ric, &[(0, 0), (1, 1)])?;
    let tr_krr = geom.hinv.mul(&krr, &[(0, 0), (1, 1)])?;
    let a = geom.hinv.mul(&k, &[(1, 0)])?;
    let tr_a = geom.hinv.mul(&k, &[(0, 0), (1, 1)])?;
    let tr_a2 = a.mul(&a, &[(0, 1), (1, 0)])?;

    let hess_f = hessian_series(link, &f, &geom)?;
    let lap_f = geom.hinv.mul(&hess_f, &[(0, 0), (1, 1)])?;
    let df = partial_series(link, &f)?;
    let df_up = geom.hinv.mul(&df, &[(1, 0)])?;
    let grad_sq = df_up.mul(&df, &[(0, 0)])?;

    let n = link.dim() as f64;
    let shift = RadialSeries::single(
        0,
        TensorField::scalar_constant(
            link.core().clone(),
            lambda * (n + 1.0 + coeffs.f0_constant),
        ),
    );

    let pieces = [
        r_h,
        tr_krr.scale(-1.0),
        tr_a2.scale(0.75),
        tr_a.mul(&tr_a, &[])?.scale(-0.25),
        frr.scale(2.0),
        tr_a.mul(&fr, &[])?,
        lap_f.scale(2.0),
        fr.mul(&fr, &[])?.scale(-1.0),
        grad_sq.scale(-1.0),
        f.scale(-lambda),
        shift,
    ];
    let scale = pieces.iter().map(|p| p.sup_norm()).fold(0.0, f64::max);
    let mut series = RadialSeries::zero(link.core().clone(), crate::tensor::Rank::SCALAR);
    for piece in &pieces {
        series = series.add(piece)?;
    }
    series.truncate_below(depth);
    Ok(Assembly { series, scale })
}

/// The strictly decaying part of a series (terms with negative exponent).
pub fn decaying_part(s: &RadialSeries) -> RadialSeries {
    let mut out = RadialSeries::zero_with_floor(s.core().clone(), s.rank(), s.floor());
    for (e, c) in s.iter() {
        if e < 0 {
            out.add_term(e, c.clone()).expect("term above floor");
        }
    }
    out
}

/// Result of a log-log least-squares fit of a residual's sup norm against
/// radius.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct DecayFit {
    /// Fitted power: `‖residual(r)‖ ≈ e^intercept · r^slope`.
    pub slope: f64,
    pub intercept: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_samples: usize,
}

/// Fit the decay rate of the constraint residual of a solved expansion over
/// `[r_min, r_max]` (log-spaced samples). Coefficients within relative
/// `1e-9` of zero are dropped first so the fit sees the structural residual,
/// not roundoff; if nothing survives that cut the residual is a numerical
/// zero and there is no rate to fit.
pub fn constraint_decay_slope(
    coeffs: &ExpansionCoefficients,
    r_min: f64,
    r_max: f64,
    samples: usize,
) -> Result<DecayFit> {
    if !(r_min.is_finite() && r_min > 0.0) || !(r_max > r_min) || samples < 2 {
        return Err(Error::Invalid {
            context: "decay fit",
            message: format!(
                "need 0 < r_min < r_max and at least two samples, got [{r_min}, {r_max}] with {samples}"
            ),
        });
    }
    let r_max = r_max.min(tol::DECAY_R_MAX);
    let depth = -2 * coeffs.order as i32 - 14;
    let assembly = residual_constraint(coeffs, AssemblyFlavor::Exact { min_exponent: depth })?;
    let mut residual = assembly.series;
    residual.prune_abs(tol::NUMERICAL_ZERO_REL * assembly.scale);
    if residual.leading_nonzero(0.0).is_none() {
        return Err(Error::AllZeroResidual);
    }

    let (ln_min, ln_max) = (r_min.ln(), r_max.ln());
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let r = (ln_min + t * (ln_max - ln_min)).exp();
        let v = residual.eval(r).sup_norm();
        if v > 0.0 {
            pts.push((r.ln(), v.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::AllZeroResidual);
    }

    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    Ok(DecayFit {
        slope,
        intercept: ybar - slope * xbar,
        r_min,
        r_max,
        n_samples: pts.len(),
    })
}

/// Sup norms of the constraint residual and the auxiliary scalar at
/// log-spaced radii — the rows of the decay table. Rows are emitted even
/// when the residual is a numerical zero (they read 0), so the table always
/// has content; the slope fit is where an all-zero residual is an error.
pub fn decay_samples(
    coeffs: &ExpansionCoefficients,
    r_min: f64,
    r_max: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    if !(r_min.is_finite() && r_min > 0.0) || !(r_max > r_min) || samples < 2 {
        return Err(Error::Invalid {
            context: "decay table",
            message: format!(
                "need 0 < r_min < r_max and at least two samples, got [{r_min}, {r_max}] with {samples}"
            ),
        });
    }
    let r_max = r_max.min(tol::DECAY_R_MAX);
    let depth = -2 * coeffs.order as i32 - 14;
    let assembly = residual_constraint(coeffs, AssemblyFlavor::Exact { min_exponent: depth })?;
    let mut constraint = assembly.series;
    constraint.prune_abs(tol::NUMERICAL_ZERO_REL * assembly.scale);
    let s_assembly = soliton_scalar_assembly(coeffs)?;
    let mut s_series = decaying_part(&s_assembly.series);
    s_series.prune_abs(tol::NUMERICAL_ZERO_REL * s_assembly.scale);

    let (ln_min, ln_max) = (r_min.ln(), r_max.ln());
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let r = (ln_min + t * (ln_max - ln_min)).exp();
        rows.push((r, constraint.eval(r).sup_norm(), s_series.eval(r).sup_norm()));
    }
    Ok(rows)
}

/// A single leading series term.
pub struct LeadingTerm {
    pub exponent: i32,
    pub coefficient: TensorField,
    pub sup_norm: f64,
}

/// Comparison of one assembled identity against its predicted leading term.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct IdentityCheck {
    pub exponent_expected: i32,
    pub exponent_found: Option<i32>,
    pub rel_deviation: f64,
}

/// Leading-order structure of the mixed soliton-tensor component `X` and the
/// auxiliary scalar `S`.
pub struct DiagnosticsReport {
    pub x_series: RadialSeries,
    pub s_series: RadialSeries,
    pub leading_x: Option<LeadingTerm>,
    pub leading_s: Option<LeadingTerm>,
    /// `∂_r X_i − ½(H⁻¹H_r)^j_i X_j − f_r X_i` against `(λ/2) r^{E+1} φ_i`
    /// where `r^E φ` leads `X`.
    pub radial_identity: Option<IdentityCheck>,
    /// `H^{ij}(∇_j X_i − f_{,j} X_i)` against `r^{E−2} h^{ij}∇_j φ_i`.
    pub tangential_identity: Option<IdentityCheck>,
    pub slope_fit: Option<DecayFit>,
}

fn leading_term(s: &RadialSeries) -> Result<Option<LeadingTerm>> {
    match s.leading_nonzero(tol::NUMERICAL_ZERO_REL) {
        None => Ok(None),
        Some((e, sup)) => Ok(Some(LeadingTerm {
            exponent: e,
            coefficient: s.coefficient(e)?,
            sup_norm: sup,
        })),
    }
}

/// Measure how the leading term of `x` propagates through the two components
/// of the weighted Bianchi identity on the cone. `x` is a (0,1)-valued
/// series (the mixed soliton-tensor component, or any injected probe), `s` a
/// scalar series reported alongside it.
pub fn order_diagnostics(
    coeffs: &ExpansionCoefficients,
    x: &RadialSeries,
    s: &RadialSeries,
) -> Result<DiagnosticsReport> {
    let link = coeffs.link();
    let lambda = coeffs.mode.lambda();
    let leading_x = leading_term(x)?;
    let leading_s = leading_term(s)?;

    let (radial, tangential) = match &leading_x {
        None => (None, None),
        Some(lead) => {
            let phi = &lead.coefficient;
            let depth = lead.exponent - 8;
            let h = coeffs.h_series(true);
            let f = coeffs.f_series(true);
            let geom = series_geometry(link, &h, depth)?;
            let k = h.radial_derivative();
            let fr = f.radial_derivative();

            // Radial component: ∂_r X_i − ½ A^j_i X_j − f_r X_i with
            // A = H⁻¹H_r; the leading term must be (λ/2) r^{E+1} φ.
            let a = geom.hinv.mul(&k, &[(1, 0)])?;
            let ax = a.mul(x, &[(0, 0)])?;
            let lhs_radial = x
                .radial_derivative()
                .sub(&ax.scale(0.5))?
                .sub(&x.mul(&fr, &[])?)?;
            let expected = lead.exponent + 1;
            let predicted = phi.scale(lambda / 2.0);
            let got = lhs_radial.coefficient(expected)?;
            let denom = predicted.sup_norm().max(tol::NUMERICAL_ZERO_REL);
            let radial = IdentityCheck {
                exponent_expected: expected,
                exponent_found: lhs_radial
                    .leading_nonzero(tol::NUMERICAL_ZERO_REL)
                    .map(|(e, _)| e),
                rel_deviation: got.max_abs_diff(&predicted) / denom,
            };

            // Tangential component: H^{ij}(∇_j X_i − f_{,j} X_i); the
            // leading term must be r^{E−2} h^{ij}∇_j φ_i.
            let grad_x = covariant_derivative_01_series(link, x, &geom)?;
            let df = partial_series(link, &f)?;
            let dfx = df.mul(x, &[])?;
            let lhs_tang = geom.hinv.mul(&grad_x.sub(&dfx)?, &[(0, 0), (1, 1)])?;
            let expected_t = lead.exponent - 2;
            let predicted_t = link
                .metric_inv()
                .product_contract(&link.covariant_derivative(phi)?, &[(0, 0), (1, 1)])?;
            let got_t = lhs_tang.coefficient(expected_t)?;
            let denom_t = predicted_t
                .sup_norm()
                .max(phi.sup_norm())
                .max(tol::NUMERICAL_ZERO_REL);
            let tangential = IdentityCheck {
                exponent_expected: expected_t,
                exponent_found: lhs_tang
                    .leading_nonzero(tol::NUMERICAL_ZERO_REL)
                    .map(|(e, _)| e),
                rel_deviation: got_t.max_abs_diff(&predicted_t) / denom_t,
            };
            (Some(radial), Some(tangential))
        }
    };

    Ok(DiagnosticsReport {
        x_series: x.clone(),
        s_series: s.clone(),
        leading_x,
        leading_s,
        radial_identity: radial,
        tangential_identity: tangential,
        slope_fit: None,
    })
}

/// Full diagnostics of a solved expansion: `X` is half the constraint
/// residual, `S` the decaying part of the auxiliary scalar, and optionally a
/// decay fit of the constraint residual over `(r_min, r_max, samples)`.
pub fn diagnostics_from_expansion(
    coeffs: &ExpansionCoefficients,
    fit_range: Option<(f64, f64, usize)>,
) -> Result<DiagnosticsReport> {
    let depth = -2 * coeffs.order as i32 - 14;
    let x_assembly = residual_constraint(coeffs, AssemblyFlavor::Exact { min_exponent: depth })?;
    let mut x = x_assembly.series.scale(0.5);
    x.prune_abs(tol::NUMERICAL_ZERO_REL * x_assembly.scale * 0.5);

    let s_assembly = soliton_scalar_assembly(coeffs)?;
    let mut s_full = s_assembly.series;
    s_full.prune_abs(tol::NUMERICAL_ZERO_REL * s_assembly.scale);
    let s = decaying_part(&s_full);

    let mut report = order_diagnostics(coeffs, &x, &s)?;
    if let Some((r_min, r_max, samples)) = fit_range {
        report.slope_fit = match constraint_decay_slope(coeffs, r_min, r_max, samples) {
            Ok(fit) => Some(fit),
            Err(Error::AllZeroResidual) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{expand, SolitonMode};
    use crate::link::build_catalog;
    use crate::sampling::{random_potential, random_torus_link, seeded_rng};
    use crate::series::Floor;
    use crate::tensor::Rank;

    #[test]
    fn weighted_bianchi_identities_hold_on_a_random_torus() {
        let mut rng = seeded_rng(17);
        let link = random_torus_link(&mut rng, 2, &[32, 32], 0.1).unwrap();
        let f = random_potential(&mut rng, &link, 0.3).unwrap();
        let (first, second) = bianchi_residuals(&link, &f).unwrap();
        assert!(first.sup_norm() < 1e-9, "plain identity: {}", first.sup_norm());
        assert!(second.sup_norm() < 1e-9, "shifted identity: {}", second.sup_norm());
    }

    #[test]
    fn bianchi_residuals_cancel_large_individual_pieces() {
        // The vanishing is a massive cancellation, not smallness of the
        // ingredients: the divergence piece alone is orders of magnitude
        // above the assembled residual.
        let mut rng = seeded_rng(18);
        let link = random_torus_link(&mut rng, 2, &[24, 24], 0.1).unwrap();
        let f = random_potential(&mut rng, &link, 0.3).unwrap();
        let b = link.ricci().add(&link.hessian(&f).unwrap()).unwrap();
        let div_b = link.divergence(&b).unwrap();
        assert!(div_b.sup_norm() > 1e-3, "degenerate fixture: {}", div_b.sup_norm());
        let (first, second) = bianchi_residuals(&link, &f).unwrap();
        assert!(first.sup_norm() < 1e-6 * div_b.sup_norm());
        assert!(second.sup_norm() < 1e-6 * div_b.sup_norm());
    }

    #[test]
    fn auxiliary_scalar_vanishes_on_the_unit_sphere() {
        let link = build_catalog("sphere(3)").unwrap();
        let coeffs = expand(&link, 2, SolitonMode::Expander, None).unwrap();
        let s = soliton_scalar_series(&coeffs).unwrap();
        assert!(s.sup_norm() < 1e-13, "sup {}", s.sup_norm());
    }

    #[test]
    fn auxiliary_scalar_vanishes_above_floor_on_solved_expansions() {
        for mode in [SolitonMode::Expander, SolitonMode::Shrinker] {
            let link = build_catalog("sphere(2, 2.0)").unwrap();
            let coeffs = expand(&link, 2, mode, None).unwrap();
            let s = soliton_scalar_series(&coeffs).unwrap();
            let trust = -2 * coeffs.order as i32 - 2;
            for (e, c) in s.iter() {
                if e > trust {
                    assert!(
                        c.sup_norm() < 1e-10,
                        "{mode}: term at exponent {e}: {}",
                        c.sup_norm()
                    );
                }
            }
        }
    }

    #[test]
    fn auxiliary_scalar_does_not_depend_on_the_gauge_constant() {
        // The additive normalization tracks f₀, so the reported series is
        // the same whatever constant the expansion was solved with.
        let link = build_catalog("sphere(3, 1.3)").unwrap();
        let a = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        let b = expand(&link, 1, SolitonMode::Expander, Some(4.75)).unwrap();
        let sa = soliton_scalar_series(&a).unwrap();
        let sb = soliton_scalar_series(&b).unwrap();
        for (e, c) in sa.iter() {
            assert!(c.max_abs_diff(&sb.coefficient(e).unwrap()) < 1e-13, "exponent {e}");
        }
    }

    #[test]
    fn corrupting_a_potential_coefficient_disturbs_the_scalar() {
        let link = build_catalog("sphere(2, 2.0)").unwrap();
        let mut coeffs = expand(&link, 2, SolitonMode::Expander, None).unwrap();
        let bump = TensorField::scalar_constant(link.core().clone(), 0.01);
        coeffs.f_coeffs[1] = coeffs.f_coeffs[1].add(&bump).unwrap();
        let s = soliton_scalar_series(&coeffs).unwrap();
        let decay = decaying_part(&s);
        assert!(
            decay.sup_norm() > 1e-4,
            "corrupted potential invisible: {}",
            decay.sup_norm()
        );
    }

    #[test]
    fn constraint_decay_rate_matches_the_truncation_order() {
        let link = crate::link::build_grid(&crate::sampling::curved_sine_torus_spec()).unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        let fit = constraint_decay_slope(&coeffs, 10.0, 100.0, 20).unwrap();
        assert!(
            fit.slope > -7.5 && fit.slope < -6.5,
            "slope {} outside [-7.5, -6.5]",
            fit.slope
        );
    }

    #[test]
    fn flat_links_in_curvy_coordinates_also_yield_no_residual() {
        // g₁₁ = 1 + 0.1 sin x₁ straightens to the flat torus, so every
        // expansion coefficient is a multiple of the metric and the
        // constraint cancels identically despite the varying components.
        let link = crate::link::build_grid(&crate::sampling::sine_torus_spec()).unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        assert!(matches!(
            constraint_decay_slope(&coeffs, 10.0, 100.0, 10),
            Err(Error::AllZeroResidual)
        ));
    }

    #[test]
    fn exactly_conical_links_have_no_residual_to_fit() {
        let link = build_catalog("sphere(3)").unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        assert!(matches!(
            constraint_decay_slope(&coeffs, 10.0, 100.0, 10),
            Err(Error::AllZeroResidual)
        ));
    }

    #[test]
    fn decay_fit_rejects_bad_ranges() {
        let link = build_catalog("sphere(2, 2.0)").unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        assert!(matches!(
            constraint_decay_slope(&coeffs, -1.0, 100.0, 10),
            Err(Error::Invalid { .. })
        ));
        assert!(matches!(
            constraint_decay_slope(&coeffs, 10.0, 5.0, 10),
            Err(Error::Invalid { .. })
        ));
        assert!(matches!(
            constraint_decay_slope(&coeffs, 10.0, 100.0, 1),
            Err(Error::Invalid { .. })
        ));
    }

    #[test]
    fn injected_leading_term_propagates_through_both_identity_components() {
        let mut rng = seeded_rng(23);
        let link = random_torus_link(&mut rng, 2, &[32, 32], 0.08).unwrap();
        let coeffs = expand(&link, 2, SolitonMode::Expander, None).unwrap();
        // A covector probe with a known divergence: the gradient of a random
        // potential.
        let pot = random_potential(&mut rng, &link, 0.5).unwrap();
        let phi = link.covariant_derivative(&pot).unwrap();
        for n_lead in [2i32, 3] {
            let x = RadialSeries::single(-n_lead, phi.clone());
            let s = RadialSeries::zero(link.core().clone(), Rank::SCALAR);
            let report = order_diagnostics(&coeffs, &x, &s).unwrap();
            let radial = report.radial_identity.unwrap();
            assert_eq!(radial.exponent_expected, -n_lead + 1);
            assert_eq!(radial.exponent_found, Some(-n_lead + 1));
            assert!(radial.rel_deviation < 1e-8, "radial: {}", radial.rel_deviation);
            let tang = report.tangential_identity.unwrap();
            assert_eq!(tang.exponent_expected, -n_lead - 2);
            assert_eq!(tang.exponent_found, Some(-n_lead - 2));
            assert!(tang.rel_deviation < 1e-8, "tangential: {}", tang.rel_deviation);
        }
    }

    #[test]
    fn empty_series_report_no_leading_structure() {
        let link = build_catalog("sphere(2)").unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        let x = RadialSeries::zero_with_floor(link.core().clone(), Rank::COVECTOR, Floor::NegInf);
        let s = RadialSeries::zero(link.core().clone(), Rank::SCALAR);
        let report = order_diagnostics(&coeffs, &x, &s).unwrap();
        assert!(report.leading_x.is_none());
        assert!(report.leading_s.is_none());
        assert!(report.radial_identity.is_none());
        assert!(report.tangential_identity.is_none());
    }

    #[test]
    fn full_diagnostics_locate_the_first_surviving_constraint_order() {
        let link = crate::link::build_grid(&crate::sampling::curved_sine_torus_spec()).unwrap();
        let coeffs = expand(&link, 1, SolitonMode::Expander, None).unwrap();
        let report = diagnostics_from_expansion(&coeffs, Some((10.0, 100.0, 12))).unwrap();
        let lead = report.leading_x.expect("truncated solve must leave a residual");
        assert_eq!(lead.exponent, -7);
        let fit = report.slope_fit.expect("fit range supplied");
        assert!(fit.slope > -7.5 && fit.slope < -6.5);
    }
}
