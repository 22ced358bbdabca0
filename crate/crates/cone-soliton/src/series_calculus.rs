//! Differential geometry of a radial metric series `H(r)`: the Christoffel
//! and Ricci series, Hessians and Laplacians of scalar series, and covariant
//! derivatives of tensor series, all with respect to the Levi-Civita
//! connection of `H(r)` on the link.
//!
//! Spatial partial derivatives act coefficient-wise (they are linear, so they
//! commute with collecting powers of `r`); everything else is finite series
//! arithmetic. On constant-frame links the connection coefficients vanish
//! identically and the Ricci tensor of every metric in the block family is
//! one and the same constant tensor, which shortcuts the curvature series.

use crate::error::Result;
use crate::link::{cf_family_coefficients, cf_family_ricci, LinkManifold};
use crate::series::RadialSeries;
use crate::tensor::Rank;
use crate::tol;

/// Inverse metric and connection of a radial metric series, the shared
/// ingredients of every equation assembly.
pub struct SeriesGeometry {
    /// `H^{-1}` as a (2,0) series, truncated at the requested depth.
    pub hinv: RadialSeries,
    /// Christoffel symbols `Γ^l_{jk}` of `H(r)` as a (1,2) series.
    pub gamma: RadialSeries,
}

/// Coefficient-wise spatial partial derivative: each term gains a leading
/// covariant slot holding the derivative direction.
pub fn partial_series(link: &LinkManifold, s: &RadialSeries) -> Result<RadialSeries> {
    let r = s.rank();
    let out = Rank::new(r.up, r.down + 1);
    let scheme = link.scheme();
    let mut d = s.map_terms(out, |_, c| c.partial_derivative(scheme))?;
    // Spatially constant coefficients differentiate to zero up to grid
    // roundoff; dropping those terms keeps downstream floor propagation
    // sharp (floors depend on the largest stored exponent of each factor)
    // and independent of the grid's radix.
    let zeros: Vec<i32> = s
        .iter()
        .filter_map(|(e, c)| {
            let dsup = d.term(e).map(|t| t.sup_norm()).unwrap_or(0.0);
            (dsup <= tol::DERIVATIVE_ZERO_REL * c.sup_norm()).then_some(e)
        })
        .collect();
    d.drop_terms(&zeros);
    Ok(d)
}

/// Build the inverse-metric and Christoffel series of `H(r)`, keeping the
/// inverse down to `min_exponent`.
pub fn series_geometry(
    link: &LinkManifold,
    h: &RadialSeries,
    min_exponent: i32,
) -> Result<SeriesGeometry> {
    let hinv = h.metric_inverse(min_exponent, "radial metric series")?;
    let dh = partial_series(link, h)?; // [a; j, k] = ∂_a H_{jk}
    let w1 = dh.map_terms(dh.rank(), |_, c| c.permute_slots(&[1, 0, 2]))?; // ∂_j H_{ak}
    let w2 = dh.map_terms(dh.rank(), |_, c| c.permute_slots(&[2, 1, 0]))?; // ∂_k H_{ja}
    let combo = w1.add(&w2)?.sub(&dh)?;
    let gamma = hinv.mul(&combo, &[(1, 0)])?.scale(0.5);
    Ok(SeriesGeometry { hinv, gamma })
}

/// Ricci tensor of the metric series as a (0,2) series.
///
/// Constant-frame links shortcut through the block family: every positive
/// metric in the family has the same Ricci tensor, so after validating that
/// each coefficient stays inside the family the answer is a single constant
/// term. Grid links go through the curvature formula on the Christoffel
/// series.
pub fn ricci_series(
    link: &LinkManifold,
    h: &RadialSeries,
    geom: &SeriesGeometry,
) -> Result<RadialSeries> {
    if link.is_constant_frame() {
        let core = link.core();
        for (_, c) in h.iter() {
            cf_family_coefficients(core, c)?;
        }
        let ric = RadialSeries::single(0, cf_family_ricci(core));
        return Ok(ric.with_floor(h.floor()));
    }

    let dgamma = partial_series(link, &geom.gamma)?; // [l; a, j, k] = ∂_a Γ^l_{jk}
    let t2 = dgamma.map_terms(dgamma.rank(), |_, c| c.permute_slots(&[0, 2, 1, 3]))?;
    let gg1 = geom.gamma.mul(&geom.gamma, &[(2, 0)])?; // Γ^l_{im} Γ^m_{jk}
    let gg2 = gg1.map_terms(gg1.rank(), |_, c| c.permute_slots(&[0, 2, 1, 3]))?;
    let riem13 = dgamma.sub(&t2)?.add(&gg1)?.sub(&gg2)?; // R^l_{ijk}
    riem13.map_terms(Rank::new(0, 2), |_, c| c.trace_pair(0, 1))
}

/// Ricci and scalar-curvature series of a radial metric series.
pub fn series_curvature(
    link: &LinkManifold,
    h: &RadialSeries,
    min_exponent: i32,
) -> Result<(RadialSeries, RadialSeries)> {
    let geom = series_geometry(link, h, min_exponent)?;
    let ricci = ricci_series(link, h, &geom)?;
    let scalar = geom.hinv.mul(&ricci, &[(0, 0), (1, 1)])?;
    Ok((ricci, scalar))
}

/// Hessian of a scalar series with respect to `H(r)`:
/// `(Hess φ)_{jk} = ∂_j ∂_k φ − Γ^l_{jk} ∂_l φ`.
pub fn hessian_series(
    link: &LinkManifold,
    f: &RadialSeries,
    geom: &SeriesGeometry,
) -> Result<RadialSeries> {
    let df = partial_series(link, f)?;
    let ddf = partial_series(link, &df)?;
    let gdf = geom.gamma.mul(&df, &[(0, 0)])?;
    ddf.sub(&gdf)
}

/// Covariant derivative of a covector series:
/// `∇_a X_i = ∂_a X_i − Γ^m_{ai} X_m`.
pub fn covariant_derivative_01_series(
    link: &LinkManifold,
    x: &RadialSeries,
    geom: &SeriesGeometry,
) -> Result<RadialSeries> {
    let dx = partial_series(link, x)?;
    let gx = geom.gamma.mul(x, &[(0, 0)])?;
    dx.sub(&gx)
}

/// Covariant derivative of a symmetric (0,2) series:
/// `∇_a T_{jk} = ∂_a T_{jk} − Γ^m_{aj} T_{mk} − Γ^m_{ak} T_{jm}`.
pub fn covariant_derivative_02_series(
    link: &LinkManifold,
    t: &RadialSeries,
    geom: &SeriesGeometry,
) -> Result<RadialSeries> {
    let dt = partial_series(link, t)?;
    let c1 = geom.gamma.mul(t, &[(0, 0)])?; // [a, j, k] = Γ^m_{aj} T_{mk}
    let c2 = c1.map_terms(c1.rank(), |_, c| c.permute_slots(&[0, 2, 1]))?;
    dt.sub(&c1)?.sub(&c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{build_catalog, build_grid, GridSpec};
    use crate::series::Floor;
    use crate::tensor::TensorField;

    fn wavy_torus() -> LinkManifold {
        build_grid(&GridSpec {
            dim: 2,
            grid: vec![24, 24],
            metric: vec![
                vec![
                    "1 + 0.1*sin(x1)*cos(x2)".to_string(),
                    "0.05*sin(x1+x2)".to_string(),
                ],
                vec!["0".to_string(), "1 + 0.1*cos(x1)".to_string()],
            ],
        })
        .unwrap()
    }

    #[test]
    fn pure_cone_ricci_is_scale_invariant() {
        let link = wavy_torus();
        let h = RadialSeries::single(2, link.metric().clone());
        let (ric, scal) = series_curvature(&link, &h, -10).unwrap();
        // Ricci of r²g equals Ricci of g, a single exponent-0 term.
        let r0 = ric.term(0).expect("constant Ricci term");
        assert!(r0.max_abs_diff(link.ricci()) < 1e-12);
        for (e, c) in ric.iter() {
            if e != 0 {
                assert!(c.sup_norm() < 1e-12, "junk Ricci term at exponent {e}");
            }
        }
        // Scalar curvature of r²g is R(g)/r².
        let s2 = scal.coefficient(-2).unwrap();
        assert!(s2.max_abs_diff(link.scalar_curvature()) < 1e-12);
    }

    #[test]
    fn constant_rescaling_keeps_ricci_constant() {
        // H = (r² + 1)·g has the same Ricci tensor as g for every r, so the
        // series must reproduce Ric(g) at exponent 0 and cancel everywhere
        // else down to the truncation depth.
        let link = wavy_torus();
        let mut h = RadialSeries::single(2, link.metric().clone());
        h.add_term(0, link.metric().clone()).unwrap();
        let (ric, _) = series_curvature(&link, &h, -12).unwrap();
        let r0 = ric.term(0).expect("constant Ricci term");
        assert!(r0.max_abs_diff(link.ricci()) < 1e-10);
        let scale = link.ricci().sup_norm();
        for (e, c) in ric.iter() {
            // Telescoping cancellation holds strictly above the inverse
            // truncation depth; the deepest retained exponents absorb the
            // cut-off remainder and are not meaningful.
            if e != 0 && e > -8 {
                assert!(
                    c.sup_norm() < 1e-9 * scale,
                    "non-constant Ricci term at exponent {e}: {}",
                    c.sup_norm()
                );
            }
        }
    }

    #[test]
    fn constant_frame_ricci_series_shortcuts_to_family_tensor() {
        let link = build_catalog("sphere_product(2,1.0;3,2.0)").unwrap();
        let mut h = RadialSeries::single(2, link.metric().clone());
        h.add_term(0, link.metric().scale(0.25)).unwrap();
        let (ric, _) = series_curvature(&link, &h, -8).unwrap();
        assert_eq!(ric.exponents(), vec![0]);
        assert!(ric.term(0).unwrap().max_abs_diff(link.ricci()) < 1e-13);
    }

    #[test]
    fn off_family_coefficient_is_rejected_on_constant_frame() {
        let link = build_catalog("sphere_product(2,1.0;2,2.0)").unwrap();
        let n = link.dim();
        // A tensor mixing the two blocks is outside the family.
        let mut bad = vec![0.0; n * n];
        bad[0 * n + 3] = 0.3;
        bad[3 * n + 0] = 0.3;
        let mut h = RadialSeries::single(2, link.metric().clone());
        h.add_term(
            0,
            TensorField::constant(link.core().clone(), Rank::METRIC, &bad),
        )
        .unwrap();
        let geom = series_geometry(&link, &h, -8).unwrap();
        assert!(ricci_series(&link, &h, &geom).is_err());
    }

    #[test]
    fn hessian_series_acts_coefficientwise_on_flat_cone() {
        // On the flat torus with H = r²δ the Christoffel series vanishes, so
        // the Hessian of f = r⁻²ψ is r⁻²·(∂∂ψ).
        let link = build_catalog("torus(2)").unwrap();
        let grid = link.core().grid().unwrap();
        let mut psi = TensorField::zeros(link.core().clone(), Rank::SCALAR);
        for p in 0..link.n_points() {
            let x = grid.coords(p);
            psi.comp_mut(0)[p] = (x[0]).sin() * (2.0 * x[1]).cos();
        }
        let h = RadialSeries::single(2, link.metric().clone());
        let geom = series_geometry(&link, &h, -8).unwrap();
        let mut f = RadialSeries::single(2, TensorField::scalar_constant(link.core().clone(), -0.25));
        f.add_term(-2, psi.clone()).unwrap();
        let hess = hessian_series(&link, &f, &geom).unwrap();
        let expect = link.hessian(&psi).unwrap();
        assert!(hess.coefficient(-2).unwrap().max_abs_diff(&expect) < 1e-10);
        // The constant and r² terms of f are spatially constant: no Hessian.
        assert!(hess.coefficient(2).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn ricci_floor_tracks_input_floor() {
        let link = wavy_torus();
        let h = RadialSeries::single(2, link.metric().clone()).with_floor(Floor::At(-4));
        let (ric, _) = series_curvature(&link, &h, -20).unwrap();
        match ric.floor() {
            Floor::At(f) => assert!(f <= -4, "Ricci floor {f} too shallow"),
            Floor::NegInf => panic!("truncated input cannot give exact Ricci"),
        }
    }
}
