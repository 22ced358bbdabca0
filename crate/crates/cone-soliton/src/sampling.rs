//! Seeded random analytic fields on periodic grids.
//!
//! Test fixtures away from the homogeneous catalog spaces: metrics of the
//! form `δ + ε·(low-frequency trig polynomial)` on flat tori, plus matching
//! random potentials. Everything is generated as an expression string and
//! pushed through the ordinary parsing/evaluation pipeline, so the fixtures
//! exercise exactly the code paths user-supplied grid links do. The
//! perturbation amplitude is kept small enough (Gershgorin bound
//! `1 − dim·ε > 0`) that positive definiteness is automatic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expr::parse_expression;
use crate::link::{build_grid, GridSpec, LinkManifold};
use crate::tensor::{Rank, TensorField};

/// A fixed-seed deterministic generator; every fixture in the test suite is
/// reproducible from its seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random trig polynomial in `dim` periodic coordinates with wave numbers
/// at most 2 per axis and sup-norm bounded by `amplitude`.
pub fn random_trig_expression(rng: &mut ChaCha8Rng, dim: usize, amplitude: f64) -> String {
    let n_modes = 4;
    let mut terms = Vec::with_capacity(n_modes);
    for _ in 0..n_modes {
        // A nonzero integer wave vector with entries in −2..=2.
        let mut wave = vec![0i32; dim];
        while wave.iter().all(|&k| k == 0) {
            for k in wave.iter_mut() {
                *k = rng.gen_range(-2..=2);
            }
        }
        let coeff = rng.gen_range(-1.0..1.0) * amplitude / n_modes as f64;
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let arg = wave
            .iter()
            .enumerate()
            .filter(|(_, &k)| k != 0)
            .map(|(a, &k)| format!("({k})*x{}", a + 1))
            .collect::<Vec<_>>()
            .join(" + ");
        terms.push(format!("({coeff})*sin({arg} + {phase})"));
    }
    terms.join(" + ")
}

/// A random near-flat metric on the `dim`-torus with the given grid shape.
/// Only the upper triangle is populated; the lower triangle is a placeholder
/// that the builder ignores.
pub fn random_torus_spec(
    rng: &mut ChaCha8Rng,
    dim: usize,
    shape: &[usize],
    amplitude: f64,
) -> GridSpec {
    let mut metric = vec![vec!["0".to_string(); dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let p = random_trig_expression(rng, dim, amplitude);
            if i == j {
                metric[i][j] = format!("1 + {p}");
            } else {
                metric[i][j] = p;
            }
        }
    }
    GridSpec {
        dim,
        grid: shape.to_vec(),
        metric,
    }
}

/// Build a random near-flat torus link.
pub fn random_torus_link(
    rng: &mut ChaCha8Rng,
    dim: usize,
    shape: &[usize],
    amplitude: f64,
) -> Result<LinkManifold> {
    build_grid(&random_torus_spec(rng, dim, shape, amplitude))
}

/// Evaluate an expression string as a scalar field on a grid link.
pub fn scalar_field_from_expression(link: &LinkManifold, src: &str) -> Result<TensorField> {
    let expr = parse_expression(src, link.dim())?;
    let core = link.core().clone();
    let grid = core.grid().expect("scalar sampling requires a grid link");
    let mut field = TensorField::zeros(core.clone(), Rank::SCALAR);
    for p in 0..grid.n_points() {
        field.comp_mut(0)[p] = expr.eval(&grid.coords(p))?;
    }
    Ok(field)
}

/// A random low-frequency potential on a grid link.
pub fn random_potential(
    rng: &mut ChaCha8Rng,
    link: &LinkManifold,
    amplitude: f64,
) -> Result<TensorField> {
    let src = random_trig_expression(rng, link.dim(), amplitude);
    scalar_field_from_expression(link, &src)
}

/// The standing mildly anisotropic two-torus fixture:
/// `g₁₁ = 1 + 0.1 sin x₁`, `g₂₂ = 1` on a 32×32 grid.
///
/// Note this metric is flat — `u = ∫√g₁₁ dx₁` straightens it — so it
/// exercises coordinate-dependence without curvature. Tests that need
/// genuine curvature use [`curved_sine_torus_spec`].
pub fn sine_torus_spec() -> GridSpec {
    GridSpec {
        dim: 2,
        grid: vec![32, 32],
        metric: vec![
            vec!["1 + 0.1*sin(x1)".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string()],
        ],
    }
}

/// A sine-perturbed two-torus with nonzero curvature:
/// `g₁₁ = 1 + 0.1 sin(x₂)`, `g₂₂ = 1` on a 24×24 grid. Because `g₁₁` varies
/// along the *other* coordinate this is a warped product, not a
/// reparametrised flat metric, so the scalar curvature is a genuinely
/// varying field — the fixture for anything that needs a nonvanishing
/// constraint residual.
///
/// The metric depends on a single variable on purpose. Each expansion order
/// applies second tangential derivatives to the previous order's solution,
/// so floating-point noise in the coefficients compounds by roughly the
/// squared wavenumber per order; keeping one axis exactly constant halves
/// the derivative chain and keeps the deepest tracked residual coefficient
/// (`r^{-11}` at order 4) a factor of a few hundred above round-off instead
/// of a factor of ten. The modest 24-point resolution serves the same end —
/// the order-4 content only reaches harmonic 5, so Nyquist is not a
/// constraint, while lower wavenumbers amplify round-off less.
pub fn curved_sine_torus_spec() -> GridSpec {
    GridSpec {
        dim: 2,
        grid: vec![24, 24],
        metric: vec![
            vec!["1 + 0.1*sin(x2)".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string()],
        ],
    }
}
