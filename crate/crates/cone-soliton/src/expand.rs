//! Order-by-order solution of the gradient soliton equations on a cone.
//!
//! On `(0,∞) × Y` with `g = dr² + H(r)` and radial potential `f`, the soliton
//! system splits into a tangential (0,2) evolution equation, its radial trace,
//! and a mixed radial-tangential constraint:
//!
//! ```text
//! −H_{jk,rr} + 2 Ric(H)_{jk} − ½ tr(H⁻¹H_r) H_{jk,r} + (H_r H⁻¹ H_r)_{jk}
//!     + 2 (Hess_H f)_{jk} + H_{jk,r} f_r + λ H_{jk} = 0
//! −tr(H⁻¹H_rr) + ½ tr((H⁻¹H_r)²) + 2 f_rr + λ = 0
//! H^{im}(∇_i H_{ml,r} − ∇_l H_{im,r}) + 2 f_{,rl} − H^{mn} H_{nl,r} f_{,m} = 0
//! ```
//!
//! with `λ = +1` for expanders (`Ric + Hess f = −½g`) and `λ = −1` for
//! shrinkers. Substituting `H = r²h + h₀ + r⁻²h₂ + …` and
//! `f = −λr²/4 + f₀ + r⁻²f₂ + …` and collecting powers of `r` determines
//! `h_{2i}` from the evolution equation at exponent `−2i` and `f_{2i+2}` from
//! the trace at exponent `−2i−4`. The extraction is linear in the new
//! coefficient; the divisor is measured by a unit probe (insert a probe
//! coefficient, difference the response, and confirm the response is a
//! scalar multiple of the probe) and must match `λ(i+1)` resp.
//! `2(2i+2)(2i+3)`.

use crate::error::{Error, Result};
use crate::link::LinkManifold;
use crate::series::{Floor, RadialSeries};
use crate::series_calculus::{
    covariant_derivative_02_series, hessian_series, partial_series, ricci_series, series_geometry,
};
use crate::tensor::{Rank, TensorField};
use crate::tol;

/// Hard cap on the expansion order accepted by [`expand`].
pub const MAX_ORDER: usize = 8;

/// Which soliton sign convention the expansion solves.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolitonMode {
    /// `Ric + Hess f = −½ g`; potential opens downward (`f ~ −r²/4`).
    Expander,
    /// `Ric + Hess f = +½ g`; potential opens upward (`f ~ +r²/4`).
    Shrinker,
}

impl SolitonMode {
    /// Sign `λ` entering the component equations.
    pub fn lambda(self) -> f64 {
        match self {
            SolitonMode::Expander => 1.0,
            SolitonMode::Shrinker => -1.0,
        }
    }

    pub fn parse(s: &str) -> Result<SolitonMode> {
        match s {
            "expander" => Ok(SolitonMode::Expander),
            "shrinker" => Ok(SolitonMode::Shrinker),
            other => Err(Error::Invalid {
                context: "mode",
                message: format!("unknown mode {other:?}; expected \"expander\" or \"shrinker\""),
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolitonMode::Expander => "expander",
            SolitonMode::Shrinker => "shrinker",
        }
    }
}

impl std::fmt::Display for SolitonMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The solved expansion: corrections `h_{2i}` to the cone metric and `f_{2i}`
/// to the potential, together with the measured solve divisors.
pub struct ExpansionCoefficients {
    link: LinkManifold,
    pub mode: SolitonMode,
    /// Number of solved correction orders: `h` runs `h₀..h_{2N}`, `f` runs
    /// `f₀..f_{2N+2}`.
    pub order: usize,
    /// The constant `f₀` (the expansion is unique up to this constant).
    pub f0_constant: f64,
    /// `h_coeffs[i]` is the symmetric (0,2) field `h_{2i}`.
    pub h_coeffs: Vec<TensorField>,
    /// `f_coeffs[i]` is the scalar field `f_{2i}`; `f_coeffs[0]` is constant.
    pub f_coeffs: Vec<TensorField>,
    /// Probe-measured divisor of the `h`-solve at each order (`λ(i+1)` in
    /// exact arithmetic).
    pub h_divisors: Vec<f64>,
    /// Probe-measured divisor of the `f`-solve at each order
    /// (`2(2i+2)(2i+3)`, mode independent).
    pub f_divisors: Vec<f64>,
}

impl ExpansionCoefficients {
    pub fn link(&self) -> &LinkManifold {
        &self.link
    }

    /// Reassemble a coefficient set from stored parts, validating counts,
    /// ranks, and symmetry. This is the deserialization path; solving anew
    /// goes through [`expand`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        link: LinkManifold,
        mode: SolitonMode,
        order: usize,
        f0_constant: f64,
        h_coeffs: Vec<TensorField>,
        f_coeffs: Vec<TensorField>,
        h_divisors: Vec<f64>,
        f_divisors: Vec<f64>,
    ) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Invalid {
                context: "coefficient assembly",
                message: format!("order {order} exceeds the supported maximum {MAX_ORDER}"),
            });
        }
        if h_coeffs.len() != order + 1 || f_coeffs.len() != order + 2 {
            return Err(Error::Invalid {
                context: "coefficient assembly",
                message: format!(
                    "order {order} needs {} h-coefficients and {} f-coefficients, got {} and {}",
                    order + 1,
                    order + 2,
                    h_coeffs.len(),
                    f_coeffs.len()
                ),
            });
        }
        for c in &h_coeffs {
            if c.rank() != Rank::METRIC {
                return Err(Error::RankMismatch {
                    op: "coefficient assembly",
                    expected: Rank::METRIC.to_string(),
                    found: c.rank().to_string(),
                });
            }
            c.require_symmetric("coefficient assembly")?;
        }
        for c in &f_coeffs {
            if c.rank() != Rank::SCALAR {
                return Err(Error::RankMismatch {
                    op: "coefficient assembly",
                    expected: Rank::SCALAR.to_string(),
                    found: c.rank().to_string(),
                });
            }
        }
        let gauge = f_coeffs[0].clone();
        let dev = gauge
            .data()
            .iter()
            .map(|v| (v - f0_constant).abs())
            .fold(0.0f64, f64::max);
        if dev > 1e-12 * f0_constant.abs().max(1.0) {
            return Err(Error::Invalid {
                context: "coefficient assembly",
                message: format!(
                    "order-zero potential coefficient deviates from the stated constant by {dev:.3e}"
                ),
            });
        }
        Ok(ExpansionCoefficients {
            link,
            mode,
            order,
            f0_constant,
            h_coeffs,
            f_coeffs,
            h_divisors,
            f_divisors,
        })
    }

    /// `H(r)` as a series. With `exact` the stored coefficients are treated
    /// as a finite polynomial (floor `−∞`, for pointwise evaluation); without
    /// it the floor records that orders beyond `N` were never solved.
    pub fn h_series(&self, exact: bool) -> RadialSeries {
        let mut s = RadialSeries::single(2, self.link.metric().clone());
        for (i, c) in self.h_coeffs.iter().enumerate() {
            s.add_term(-2 * i as i32, c.clone()).expect("above floor");
        }
        if !exact {
            s = s.with_floor(Floor::At(-2 * self.order as i32));
        }
        s
    }

    /// `f(r)` as a series; see [`Self::h_series`] for the floor convention.
    pub fn f_series(&self, exact: bool) -> RadialSeries {
        let core = self.link.core().clone();
        let lead = TensorField::scalar_constant(core, -self.mode.lambda() / 4.0);
        let mut s = RadialSeries::single(2, lead);
        for (i, c) in self.f_coeffs.iter().enumerate() {
            s.add_term(-2 * i as i32, c.clone()).expect("above floor");
        }
        if !exact {
            s = s.with_floor(Floor::At(-2 * self.order as i32 - 2));
        }
        s
    }
}

/// An assembled equation left-hand side, plus the size of the largest
/// individual term that went into it (the natural scale for calling the sum
/// "zero" in a relative sense).
pub struct Assembly {
    pub series: RadialSeries,
    pub scale: f64,
}

fn track_scale(scale: &mut f64, term: &RadialSeries) {
    *scale = scale.max(term.sup_norm());
}

/// Left-hand side of the tangential evolution equation as a (0,2) series.
pub fn evolution_lhs(
    link: &LinkManifold,
    h: &RadialSeries,
    f: &RadialSeries,
    lambda: f64,
    inv_depth: i32,
) -> Result<Assembly> {
    let geom = series_geometry(link, h, inv_depth)?;
    let k = h.radial_derivative();
    let krr = k.radial_derivative();
    let fr = f.radial_derivative();

    let mut scale = 0.0;
    let neg_krr = krr.scale(-1.0);
    track_scale(&mut scale, &neg_krr);

    let ric2 = ricci_series(link, h, &geom)?.scale(2.0);
    track_scale(&mut scale, &ric2);

    // −½ tr(H⁻¹H_r) · H_{jk,r}
    let tr_a = geom.hinv.mul(&k, &[(0, 0), (1, 1)])?;
    let tr_term = k.mul(&tr_a, &[])?.scale(-0.5);
    track_scale(&mut scale, &tr_term);

    // (H_r H⁻¹ H_r)_{jk} = K_{jl} H^{lm} K_{mk}
    let kh = k.mul(&geom.hinv, &[(1, 0)])?; // [m; j] = K_{jl} H^{lm}
    let khk = kh.mul(&k, &[(0, 0)])?; // [j, k]
    track_scale(&mut scale, &khk);

    let hess2 = hessian_series(link, f, &geom)?.scale(2.0);
    track_scale(&mut scale, &hess2);

    let kfr = k.mul(&fr, &[])?;
    track_scale(&mut scale, &kfr);

    let lh = h.scale(lambda);
    track_scale(&mut scale, &lh);

    let series = neg_krr
        .add(&ric2)?
        .add(&tr_term)?
        .add(&khk)?
        .add(&hess2)?
        .add(&kfr)?
        .add(&lh)?;
    Ok(Assembly { series, scale })
}

/// Left-hand side of the radial trace equation as a scalar series.
pub fn trace_lhs(
    link: &LinkManifold,
    h: &RadialSeries,
    f: &RadialSeries,
    lambda: f64,
    inv_depth: i32,
) -> Result<Assembly> {
    let geom = series_geometry(link, h, inv_depth)?;
    let k = h.radial_derivative();
    let krr = k.radial_derivative();
    let frr = f.radial_derivative().radial_derivative();

    let mut scale = 0.0;
    let t1 = geom.hinv.mul(&krr, &[(0, 0), (1, 1)])?.scale(-1.0);
    track_scale(&mut scale, &t1);

    // ½ tr((H⁻¹H_r)²) with A^a_k = H^{ab} K_{bk}
    let a = geom.hinv.mul(&k, &[(1, 0)])?;
    let t2 = a.mul(&a, &[(0, 1), (1, 0)])?.scale(0.5);
    track_scale(&mut scale, &t2);

    let t3 = frr.scale(2.0);
    track_scale(&mut scale, &t3);

    let t4 = RadialSeries::single(
        0,
        TensorField::scalar_constant(link.core().clone(), lambda),
    );
    track_scale(&mut scale, &t4);

    let series = t1.add(&t2)?.add(&t3)?.add(&t4)?;
    Ok(Assembly { series, scale })
}

/// Left-hand side of the mixed radial-tangential constraint as a (0,1)
/// series; covariant derivatives are those of `H(r)`.
pub fn constraint_lhs(
    link: &LinkManifold,
    h: &RadialSeries,
    f: &RadialSeries,
    inv_depth: i32,
) -> Result<Assembly> {
    let geom = series_geometry(link, h, inv_depth)?;
    let k = h.radial_derivative();
    let fr = f.radial_derivative();

    let mut scale = 0.0;
    // H^{im}(∇_i K_{ml} − ∇_l K_{im})
    let grad_k = covariant_derivative_02_series(link, &k, &geom)?; // [i; m, l]
    let transposed = grad_k.map_terms(grad_k.rank(), |_, c| c.permute_slots(&[1, 2, 0]))?;
    let diff = grad_k.sub(&transposed)?;
    let t1 = geom.hinv.mul(&diff, &[(0, 0), (1, 1)])?;
    track_scale(&mut scale, &t1);

    // 2 ∂_l f_{,r}
    let t2 = partial_series(link, &fr)?.scale(2.0);
    track_scale(&mut scale, &t2);

    // −H^{mn} K_{nl} f_{,m}
    let df = partial_series(link, f)?;
    let hk = geom.hinv.mul(&k, &[(1, 0)])?; // [m; l]
    let t3 = hk.mul(&df, &[(0, 0)])?.scale(-1.0);
    track_scale(&mut scale, &t3);

    // Unlike the evolution and trace assemblies, every constraint term is
    // derivative-like and can collapse to roundoff wholesale (flat links in
    // curvy coordinates do exactly that). Anchor the zero-detection scale to
    // the data that went in, not only to what came out.
    scale = scale.max(h.sup_norm()).max(f.sup_norm());

    let series = t1.add(&t2)?.add(&t3)?;
    Ok(Assembly { series, scale })
}

/// How residual assemblies treat the solved coefficient lists.
#[derive(Clone, Copy, Debug)]
pub enum AssemblyFlavor {
    /// Floors record which orders were actually solved; coefficients below
    /// them are unknowable and queries there fail.
    Tracked,
    /// Treat the truncated expansion as an exact polynomial and keep every
    /// computable term down to `min_exponent` — the right view for evaluating
    /// the residual at concrete radii.
    Exact { min_exponent: i32 },
}

fn flavor_series(coeffs: &ExpansionCoefficients, flavor: AssemblyFlavor) -> (RadialSeries, RadialSeries, i32) {
    match flavor {
        AssemblyFlavor::Tracked => {
            let depth = -2 * coeffs.order as i32 - 10;
            (coeffs.h_series(false), coeffs.f_series(false), depth)
        }
        AssemblyFlavor::Exact { min_exponent } => {
            (coeffs.h_series(true), coeffs.f_series(true), min_exponent)
        }
    }
}

/// Evolution-equation residual of a solved expansion.
pub fn residual_evolution(coeffs: &ExpansionCoefficients, flavor: AssemblyFlavor) -> Result<Assembly> {
    let (h, f, depth) = flavor_series(coeffs, flavor);
    evolution_lhs(coeffs.link(), &h, &f, coeffs.mode.lambda(), depth)
}

/// Trace-equation residual of a solved expansion.
pub fn residual_trace(coeffs: &ExpansionCoefficients, flavor: AssemblyFlavor) -> Result<Assembly> {
    let (h, f, depth) = flavor_series(coeffs, flavor);
    trace_lhs(coeffs.link(), &h, &f, coeffs.mode.lambda(), depth)
}

/// Constraint-equation residual of a solved expansion.
pub fn residual_constraint(coeffs: &ExpansionCoefficients, flavor: AssemblyFlavor) -> Result<Assembly> {
    let (h, f, depth) = flavor_series(coeffs, flavor);
    constraint_lhs(coeffs.link(), &h, &f, depth)
}

/// Measure the linear response of an equation to a unit probe in one
/// coefficient: response difference must be a scalar multiple of the probe.
fn probe_divisor(
    order: usize,
    resp0: &TensorField,
    resp1: &TensorField,
    probe: &TensorField,
) -> Result<f64> {
    let diff = resp1.sub(resp0)?;
    let denom = probe.inner(probe);
    let c = diff.inner(probe) / denom;
    let residual = diff.add_scaled(-c, probe)?.sup_norm();
    let scale = diff.sup_norm().max(c.abs() * probe.sup_norm());
    if scale > 0.0 && residual > tol::PROBE_LINEARITY_REL * scale {
        return Err(Error::NonlinearResponse {
            order,
            deviation: residual / scale,
        });
    }
    Ok(c)
}

fn check_divisor(order: usize, divisor: f64) -> Result<()> {
    if divisor.abs() < tol::DEGENERATE_DIVISOR_ABS {
        return Err(Error::DegenerateDivisor { order, divisor });
    }
    Ok(())
}

/// Solve the expansion through order `N`: `h₀..h_{2N}` and `f₀..f_{2N+2}`.
///
/// `f0` overrides the constant term of the potential; the remaining
/// coefficients do not depend on it. In `Expander` mode the solve divides by
/// the closed-form divisors (still probe-verified); `Shrinker` mode divides
/// by the measured probe response.
pub fn expand(
    link: &LinkManifold,
    order: usize,
    mode: SolitonMode,
    f0: Option<f64>,
) -> Result<ExpansionCoefficients> {
    if order > MAX_ORDER {
        return Err(Error::Invalid {
            context: "expand",
            message: format!("order {order} exceeds the supported maximum {MAX_ORDER}"),
        });
    }
    let core = link.core().clone();
    let n = link.dim() as f64;
    let lambda = mode.lambda();
    let f0c = f0.unwrap_or(-(n - 1.0));

    let mut h_coeffs: Vec<TensorField> = Vec::with_capacity(order + 1);
    let mut f_coeffs: Vec<TensorField> =
        vec![TensorField::scalar_constant(core.clone(), f0c)];
    let mut h_divisors = Vec::with_capacity(order + 1);
    let mut f_divisors = Vec::with_capacity(order + 1);

    let build_h = |solved: &[TensorField], floor: i32| {
        let mut s = RadialSeries::single(2, link.metric().clone());
        for (j, c) in solved.iter().enumerate() {
            s.add_term(-2 * j as i32, c.clone()).expect("above floor");
        }
        s.with_floor(Floor::At(floor))
    };
    let build_f = |solved: &[TensorField], floor: i32| {
        let lead = TensorField::scalar_constant(core.clone(), -lambda / 4.0);
        let mut s = RadialSeries::single(2, lead);
        for (j, c) in solved.iter().enumerate() {
            s.add_term(-2 * j as i32, c.clone()).expect("above floor");
        }
        s.with_floor(Floor::At(floor))
    };

    for i in 0..=order {
        // --- tangential step: h_{2i} from the evolution equation at r^{−2i}.
        let target = -2 * i as i32;
        let h_work = build_h(&h_coeffs, target);
        let f_work = build_f(&f_coeffs, target);
        let depth = target - 8;

        let resp0 = evolution_lhs(link, &h_work, &f_work, lambda, depth)?
            .series
            .coefficient(target)?;
        let probe = link.metric().clone();
        let mut h_probe = h_work.clone();
        h_probe.add_term(target, probe.clone())?;
        let resp1 = evolution_lhs(link, &h_probe, &f_work, lambda, depth)?
            .series
            .coefficient(target)?;
        let measured = probe_divisor(2 * i, &resp0, &resp1, &probe)?;
        h_divisors.push(measured);
        let divisor = match mode {
            SolitonMode::Expander => (i + 1) as f64,
            SolitonMode::Shrinker => measured,
        };
        check_divisor(2 * i, divisor)?;
        let h2i = resp0.scale(-1.0 / divisor).symmetrize_pair(0, 1)?;
        h_coeffs.push(h2i);

        // --- radial step: f_{2i+2} from the trace equation at r^{−2i−4}.
        let f_target = -(2 * i as i32 + 4);
        let h_now = build_h(&h_coeffs, target);
        let f_now = build_f(&f_coeffs, target - 2);
        let depth = f_target - 6;

        let resp0 = trace_lhs(link, &h_now, &f_now, lambda, depth)?
            .series
            .coefficient(f_target)?;
        let probe = TensorField::scalar_constant(core.clone(), 1.0);
        let mut f_probe = f_now.clone();
        f_probe.add_term(target - 2, probe.clone())?;
        let resp1 = trace_lhs(link, &h_now, &f_probe, lambda, depth)?
            .series
            .coefficient(f_target)?;
        let measured = probe_divisor(2 * i + 2, &resp0, &resp1, &probe)?;
        f_divisors.push(measured);
        let divisor = match mode {
            SolitonMode::Expander => 2.0 * ((2 * i + 2) * (2 * i + 3)) as f64,
            SolitonMode::Shrinker => measured,
        };
        check_divisor(2 * i + 2, divisor)?;
        f_coeffs.push(resp0.scale(-1.0 / divisor));
    }

    Ok(ExpansionCoefficients {
        link: link.clone(),
        mode,
        order,
        f0_constant: f0c,
        h_coeffs,
        f_coeffs,
        h_divisors,
        f_divisors,
    })
}

/// The first correction terms evaluated directly from their closed forms in
/// the link geometry (expander convention) — an independent oracle for the
/// generic recursion:
///
/// ```text
/// h₀ = −2[Ric − (n−1)h]
/// h₂ = −Δ_L Ric + ⅓ Hess R + (4/3) R h − 4 Ric − 4(n/3 − 1)(n−1) h
/// f₂ = −⅓ [R − n(n−1)]
/// f₄ = ⅕ [−ΔR − 2|Ric|² + 2(3n−5)R − 4(n−2)(n−1)n]
/// ```
pub struct ClosedFormTerms {
    pub h0: TensorField,
    pub h2: TensorField,
    pub f2: TensorField,
    pub f4: TensorField,
}

pub fn closed_form_first_terms(link: &LinkManifold) -> Result<ClosedFormTerms> {
    let n = link.dim() as f64;
    let core = link.core().clone();
    let h = link.metric();
    let ric = link.ricci();
    let r = link.scalar_curvature();

    let h0 = ric.sub(&h.scale(n - 1.0))?.scale(-2.0);

    let lich = link.lichnerowicz(ric)?;
    let hess_r = link.hessian(r)?;
    let rh = h.mul_scalar_field(r)?;
    let h2 = lich
        .scale(-1.0)
        .add(&hess_r.scale(1.0 / 3.0))?
        .add(&rh.scale(4.0 / 3.0))?
        .sub(&ric.scale(4.0))?
        .sub(&h.scale(4.0 * (n / 3.0 - 1.0) * (n - 1.0)))?;

    let f2 = r
        .sub(&TensorField::scalar_constant(core.clone(), n * (n - 1.0)))?
        .scale(-1.0 / 3.0);

    let lap_r = link.laplacian(r)?;
    let ric_sq = link.norm_sq(ric)?;
    let f4 = lap_r
        .scale(-1.0)
        .sub(&ric_sq.scale(2.0))?
        .add(&r.scale(2.0 * (3.0 * n - 5.0)))?
        .sub(&TensorField::scalar_constant(
            core,
            4.0 * (n - 2.0) * (n - 1.0) * n,
        ))?
        .scale(0.2);

    Ok(ClosedFormTerms { h0, h2, f2, f4 })
}
