//! Differential geometry of a fixed metric on a link: connection
//! coefficients, curvature, covariant derivatives, Laplacians.
//!
//! Conventions used throughout (and pinned by tests):
//! * `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`,
//!   `R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}`;
//! * fully covariant curvature `R_{ijkl} = g_{lm} R^m_{ijk}` (the upper index
//!   lowers into the last slot), so a round unit sphere has
//!   `R_{ijkl} = g_{il}g_{jk} − g_{ik}g_{jl}`;
//! * `Ric_{jk} = g^{il} R_{ijkl}`, which is positive on spheres;
//! * the Laplacian is the metric trace of the Hessian, so `Δ sin x = −sin x`
//!   on the flat torus;
//! * covariant differentiation prepends its index as the first lower slot.

use crate::error::Result;
use crate::grid::DiffScheme;
use crate::tensor::TensorField;

/// Curvature of one metric, in the forms the identities here consume.
#[derive(Clone)]
pub struct CurvaturePack {
    /// Fully covariant `R_{ijkl}`.
    pub riemann: TensorField,
    /// `Ric_{jk} = g^{il} R_{ijkl}`.
    pub ricci: TensorField,
    /// Scalar curvature `g^{jk} Ric_{jk}`.
    pub scalar: TensorField,
}

/// Levi-Civita connection coefficients `Γ^m_{jk}` of a metric.
pub fn christoffel(
    metric: &TensorField,
    minv: &TensorField,
    scheme: DiffScheme,
) -> Result<TensorField> {
    let dg = metric.partial_derivative(scheme)?; // [a, j, k] = ∂_a g_{jk}
    let w1 = dg.permute_slots(&[1, 0, 2])?; // [l, j, k] = ∂_j g_{lk}
    let w2 = dg.permute_slots(&[2, 1, 0])?; // [l, j, k] = ∂_k g_{jl}
    let w = w1.add(&w2)?.sub(&dg)?;
    Ok(minv.product_contract(&w, &[(1, 0)])?.scale(0.5))
}

/// Riemann, Ricci and scalar curvature of a metric.
pub fn curvature_pack(
    metric: &TensorField,
    minv: &TensorField,
    scheme: DiffScheme,
) -> Result<CurvaturePack> {
    let gamma = christoffel(metric, minv, scheme)?;
    let dgamma = gamma.partial_derivative(scheme)?; // [^l; a, j, k] = ∂_a Γ^l_{jk}
    let t1 = dgamma.clone(); // ∂_i Γ^l_{jk} as [^l, i, j, k]
    let t2 = dgamma.permute_slots(&[0, 2, 1, 3])?; // ∂_j Γ^l_{ik}
    let gg1 = gamma.product_contract(&gamma, &[(2, 0)])?; // Γ^l_{im} Γ^m_{jk}
    let gg2 = gg1.permute_slots(&[0, 2, 1, 3])?; // Γ^l_{jm} Γ^m_{ik}
    let riem13 = t1.sub(&t2)?.add(&gg1)?.sub(&gg2)?;
    let lowered = metric.product_contract(&riem13, &[(1, 0)])?; // [l, i, j, k]
    let riemann = lowered.permute_slots(&[1, 2, 3, 0])?; // [i, j, k, l]
    let ricci = minv.product_contract(&riemann, &[(0, 0), (1, 3)])?;
    let scalar = minv.product_contract(&ricci, &[(0, 0), (1, 1)])?;
    Ok(CurvaturePack {
        riemann,
        ricci,
        scalar,
    })
}

/// Covariant derivative `∇T` of an arbitrary tensor field. The derivative
/// index becomes the first lower slot of the result.
pub fn covariant_derivative(
    t: &TensorField,
    gamma: &TensorField,
    scheme: DiffScheme,
) -> Result<TensorField> {
    let r = t.rank();
    let (pu, pl) = (r.up, r.down);
    let mut out = t.partial_derivative(scheme)?; // [ups..., a, lows...]
    if gamma.sup_norm() == 0.0 {
        return Ok(out);
    }
    for s in 0..pu {
        // +Γ^{u_s}_{a m} T^{... m ...}
        let raw = gamma.product_contract(t, &[(2, s)])?;
        // raw: up [Γ^u, t-ups except s], low [Γ_a, t-lows]
        let mut src = Vec::with_capacity(r.total() + 1);
        for j in 0..pu {
            src.push(if j < s {
                1 + j
            } else if j == s {
                0
            } else {
                j
            });
        }
        for j in 0..=pl {
            src.push(pu + j);
        }
        out = out.add(&raw.permute_slots(&src)?)?;
    }
    for tslot in 0..pl {
        // −Γ^{m}_{a l_t} T_{... m ...}
        let raw = gamma.product_contract(t, &[(0, pu + tslot)])?;
        // raw: up [t-ups], low [Γ_a, Γ_l, t-lows except tslot]
        let mut src = Vec::with_capacity(r.total() + 1);
        for j in 0..pu {
            src.push(j);
        }
        src.push(pu); // derivative slot
        for j in 0..pl {
            src.push(if j < tslot {
                pu + 2 + j
            } else if j == tslot {
                pu + 1
            } else {
                pu + 1 + j
            });
        }
        out = out.sub(&raw.permute_slots(&src)?)?;
    }
    Ok(out)
}

/// Hessian of a scalar field: `(Hess φ)_{ab} = ∇_a ∂_b φ`.
pub fn hessian(
    phi: &TensorField,
    gamma: &TensorField,
    scheme: DiffScheme,
) -> Result<TensorField> {
    let grad = phi.partial_derivative(scheme)?;
    covariant_derivative(&grad, gamma, scheme)
}

/// Connection Laplacian (trace of the second covariant derivative) of an
/// arbitrary tensor field.
pub fn rough_laplacian(
    t: &TensorField,
    gamma: &TensorField,
    minv: &TensorField,
    scheme: DiffScheme,
) -> Result<TensorField> {
    let d1 = covariant_derivative(t, gamma, scheme)?;
    let d2 = covariant_derivative(&d1, gamma, scheme)?;
    let pu = t.rank().up;
    minv.product_contract(&d2, &[(0, pu), (1, pu + 1)])
}

/// Lichnerowicz Laplacian on symmetric (0,2) fields:
/// `Δ_L T = Δ T + 2 R_{ijkl} T^{il} − Ric_j{}^l T_{lk} − Ric_k{}^l T_{jl}`,
/// normalized so that `Δ_L g = 0` for the metric itself.
pub fn lichnerowicz(
    t: &TensorField,
    gamma: &TensorField,
    minv: &TensorField,
    pack: &CurvaturePack,
    scheme: DiffScheme,
) -> Result<TensorField> {
    let lap = rough_laplacian(t, gamma, minv, scheme)?;
    let a = minv.product_contract(t, &[(1, 0)])?; // [^i, _b] = g^{ia} T_{ab}
    let tup = a.product_contract(minv, &[(1, 1)])?; // [^i, ^l] = T^{il}
    let r_term = pack.riemann.product_contract(&tup, &[(0, 0), (3, 1)])?;
    let ric_up = minv.product_contract(&pack.ricci, &[(1, 0)])?; // [^l, _j]
    let rt1 = ric_up.product_contract(t, &[(0, 0)])?; // [j, k] = Ric_j^l T_{lk}
    let rt2 = rt1.permute_slots(&[1, 0])?;
    lap.add(&r_term.scale(2.0))?.sub(&rt1)?.sub(&rt2)
}
