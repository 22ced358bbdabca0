//! Link manifolds: the compact cross-sections the cone is built over.
//!
//! Two backends are supported.
//!
//! * `ConstantFrame` — homogeneous links (round spheres and products of
//!   round spheres) represented in a single parallel orthogonal frame. All
//!   tensors in play are parallel, so spatial derivatives vanish identically
//!   and curvature comes from closed forms; every operation is exact.
//! * `Grid` — flat-torus topology with an arbitrary smooth periodic metric,
//!   sampled on a uniform grid with spectral differentiation.
//!
//! A link is either named in the catalog (`sphere(n,a)`, `torus(n)`,
//! `sphere_product(p,a;q,b)`) or specified by a JSON grid description whose
//! metric entries are expression strings in the coordinates `x1..xd`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{self, CurvaturePack};
use crate::error::{Error, ParseDetail, Result};
use crate::expr::parse_expression;
use crate::grid::{DiffScheme, Grid};
use crate::linalg;
use crate::tensor::{Rank, TensorField};
use crate::tol;

/// Largest supported link dimension for constant-frame links.
pub const MAX_CF_DIM: usize = 8;

/// One irreducible round factor of a constant-frame link.
#[derive(Clone, Copy, Debug)]
pub struct Block {
    /// First frame index of the factor.
    pub offset: usize,
    /// Dimension of the factor.
    pub len: usize,
    /// Metric coefficient on the factor: the block metric is `scale · Id`.
    pub scale: f64,
    /// Sectional curvature of the factor (`1 / scale` for a round sphere of
    /// radius `sqrt(scale)`; meaningless and unused when `len == 1`).
    pub curvature: f64,
}

#[derive(Debug)]
pub enum BackendCore {
    ConstantFrame { blocks: Vec<Block> },
    Grid(Grid),
}

/// Discretization-level description of a link, shared by every tensor field
/// living on it.
#[derive(Debug)]
pub struct LinkCore {
    pub dim: usize,
    pub backend: BackendCore,
}

impl LinkCore {
    pub fn n_points(&self) -> usize {
        match &self.backend {
            BackendCore::ConstantFrame { .. } => 1,
            BackendCore::Grid(g) => g.n_points(),
        }
    }

    pub fn is_constant_frame(&self) -> bool {
        matches!(self.backend, BackendCore::ConstantFrame { .. })
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        match &self.backend {
            BackendCore::ConstantFrame { blocks } => Some(blocks),
            BackendCore::Grid(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.backend {
            BackendCore::ConstantFrame { .. } => None,
            BackendCore::Grid(g) => Some(g),
        }
    }

    pub fn grid_derivative(
        &self,
        field: &[f64],
        axis: usize,
        scheme: DiffScheme,
    ) -> Result<Vec<f64>> {
        match &self.backend {
            BackendCore::ConstantFrame { .. } => Ok(vec![0.0; 1]),
            BackendCore::Grid(g) => g.derivative(field, axis, scheme),
        }
    }

    /// Human-readable location of a grid point, for error reports.
    pub fn point_label(&self, p: usize) -> String {
        match &self.backend {
            BackendCore::ConstantFrame { .. } => "constant frame".to_string(),
            BackendCore::Grid(g) => {
                let coords = g.coords(p);
                let parts: Vec<String> = coords
                    .iter()
                    .enumerate()
                    .map(|(i, x)| format!("x{}={:.6}", i + 1, x))
                    .collect();
                format!("({})", parts.join(", "))
            }
        }
    }

    /// A bare constant-frame core, for low-level unit tests.
    #[doc(hidden)]
    pub fn constant_frame_for_tests(dim: usize) -> Arc<LinkCore> {
        Arc::new(LinkCore {
            dim,
            backend: BackendCore::ConstantFrame {
                blocks: vec![Block {
                    offset: 0,
                    len: dim,
                    scale: 1.0,
                    curvature: 1.0,
                }],
            },
        })
    }
}

/// Serializable description of a link, as it appears in files and on the
/// command line.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LinkDescriptor {
    Catalog { catalog: String },
    Grid(GridSpec),
}

impl LinkDescriptor {
    pub fn catalog(name: &str) -> Self {
        LinkDescriptor::Catalog {
            catalog: name.to_string(),
        }
    }
}

/// JSON grid-link description: dimension, axis resolutions, and a square
/// matrix of metric component expressions in `x1..xd`. Only the upper
/// triangle of `metric` is read; the lower triangle is filled by symmetry.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub grid: Vec<usize>,
    pub metric: Vec<Vec<String>>,
}

/// A fully built link: metric, inverse, connection, curvature.
#[derive(Clone)]
pub struct LinkManifold {
    core: Arc<LinkCore>,
    descriptor: LinkDescriptor,
    scheme: DiffScheme,
    metric: TensorField,
    metric_inv: TensorField,
    sqrt_det: Vec<f64>,
    gamma: TensorField,
    curvature: CurvaturePack,
}

impl std::fmt::Debug for LinkManifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LinkManifold(dim {}, {} points, {:?})",
            self.dim(),
            self.core.n_points(),
            self.descriptor
        )
    }
}

impl LinkManifold {
    pub fn core(&self) -> &Arc<LinkCore> {
        &self.core
    }

    pub fn descriptor(&self) -> &LinkDescriptor {
        &self.descriptor
    }

    pub fn dim(&self) -> usize {
        self.core.dim
    }

    pub fn n_points(&self) -> usize {
        self.core.n_points()
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn metric(&self) -> &TensorField {
        &self.metric
    }

    pub fn metric_inv(&self) -> &TensorField {
        &self.metric_inv
    }

    pub fn gamma(&self) -> &TensorField {
        &self.gamma
    }

    pub fn curvature(&self) -> &CurvaturePack {
        &self.curvature
    }

    pub fn ricci(&self) -> &TensorField {
        &self.curvature.ricci
    }

    pub fn riemann(&self) -> &TensorField {
        &self.curvature.riemann
    }

    pub fn scalar_curvature(&self) -> &TensorField {
        &self.curvature.scalar
    }

    pub fn is_constant_frame(&self) -> bool {
        self.core.is_constant_frame()
    }

    /// Rebuild the derived geometry (connection, curvature) under a
    /// different differentiation scheme. Cross-validation only; constant
    /// frames are unaffected.
    pub fn rebuilt_with_scheme(&self, scheme: DiffScheme) -> Result<LinkManifold> {
        if self.is_constant_frame() {
            let mut out = self.clone_shallow();
            out.scheme = scheme;
            return Ok(out);
        }
        let gamma = calculus::christoffel(&self.metric, &self.metric_inv, scheme)?;
        let curvature = calculus::curvature_pack(&self.metric, &self.metric_inv, scheme)?;
        Ok(LinkManifold {
            core: self.core.clone(),
            descriptor: self.descriptor.clone(),
            scheme,
            metric: self.metric.clone(),
            metric_inv: self.metric_inv.clone(),
            sqrt_det: self.sqrt_det.clone(),
            gamma,
            curvature,
        })
    }

    fn clone_shallow(&self) -> LinkManifold {
        LinkManifold {
            core: self.core.clone(),
            descriptor: self.descriptor.clone(),
            scheme: self.scheme,
            metric: self.metric.clone(),
            metric_inv: self.metric_inv.clone(),
            sqrt_det: self.sqrt_det.clone(),
            gamma: self.gamma.clone(),
            curvature: CurvaturePack {
                riemann: self.curvature.riemann.clone(),
                ricci: self.curvature.ricci.clone(),
                scalar: self.curvature.scalar.clone(),
            },
        }
    }

    // ---- calculus over the link metric -------------------------------

    pub fn covariant_derivative(&self, t: &TensorField) -> Result<TensorField> {
        calculus::covariant_derivative(t, &self.gamma, self.scheme)
    }

    pub fn hessian(&self, phi: &TensorField) -> Result<TensorField> {
        calculus::hessian(phi, &self.gamma, self.scheme)
    }

    pub fn laplacian(&self, phi: &TensorField) -> Result<TensorField> {
        let hess = self.hessian(phi)?;
        self.trace(&hess)
    }

    pub fn rough_laplacian(&self, t: &TensorField) -> Result<TensorField> {
        calculus::rough_laplacian(t, &self.gamma, &self.metric_inv, self.scheme)
    }

    pub fn lichnerowicz(&self, t: &TensorField) -> Result<TensorField> {
        calculus::lichnerowicz(t, &self.gamma, &self.metric_inv, &self.curvature, self.scheme)
    }

    /// Trace of a (0,2) field against the link metric.
    pub fn trace(&self, t: &TensorField) -> Result<TensorField> {
        self.metric_inv.product_contract(t, &[(0, 0), (1, 1)])
    }

    /// Divergence of a symmetric (0,2) field: `(div T)_l = h^{im} ∇_i T_{ml}`.
    pub fn divergence(&self, t: &TensorField) -> Result<TensorField> {
        let grad = self.covariant_derivative(t)?; // slots [a, m, l]
        self.metric_inv.product_contract(&grad, &[(0, 0), (1, 1)])
    }

    /// Pointwise squared norm of a fully covariant tensor, all slots raised
    /// with the link metric.
    pub fn norm_sq(&self, t: &TensorField) -> Result<TensorField> {
        let r = t.rank();
        if r.up != 0 {
            return Err(Error::RankMismatch {
                op: "norm_sq",
                expected: "fully covariant tensor".to_string(),
                found: format!("{r}"),
            });
        }
        if r.down == 0 {
            return t.mul_scalar_field(t);
        }
        // Raise every slot of one copy, then contract slot-by-slot.
        let mut raised = t.clone();
        for _ in 0..r.down {
            // Contract the inverse metric with the first remaining lower
            // slot; the new upper index lands in front, so after q rounds
            // the slots are fully raised in reversed order.
            let lower_pos = raised.rank().up; // first lower slot
            raised = self.metric_inv.product_contract(&raised, &[(1, lower_pos)])?;
        }
        // `raised` slots are t's slots reversed (each raise prepends).
        let q = r.down;
        let pairs: Vec<(usize, usize)> = (0..q).map(|k| (q - 1 - k, k)).collect();
        raised.product_contract(t, &pairs)
    }

    /// Integral of a scalar field over the link with the metric volume
    /// element (trapezoidal == exact spectral quadrature on the torus).
    pub fn volume_integral(&self, phi: &TensorField) -> Result<f64> {
        if phi.rank() != Rank::SCALAR {
            return Err(Error::RankMismatch {
                op: "volume_integral",
                expected: "(0,0)".to_string(),
                found: format!("{}", phi.rank()),
            });
        }
        match &self.core.backend {
            BackendCore::ConstantFrame { .. } => Ok(phi.comp(0)[0] * self.sqrt_det[0]),
            BackendCore::Grid(g) => {
                let cell: f64 = g
                    .shape()
                    .iter()
                    .map(|&n| 2.0 * std::f64::consts::PI / n as f64)
                    .product();
                Ok(phi
                    .comp(0)
                    .iter()
                    .zip(&self.sqrt_det)
                    .map(|(v, s)| v * s)
                    .sum::<f64>()
                    * cell)
            }
        }
    }
}

// ---- constant-frame family helpers ------------------------------------

/// Project a symmetric (0,2) constant-frame tensor onto the block family
/// `⊕_b c_b · h_b`, returning the per-block coefficients. Errors with
/// `OffFamily` when the tensor has components outside the family.
pub fn cf_family_coefficients(core: &LinkCore, t: &TensorField) -> Result<Vec<f64>> {
    let blocks = core.blocks().ok_or(Error::Invalid {
        context: "constant-frame projection",
        message: "link is not constant-frame".to_string(),
    })?;
    let n = core.dim;
    let mut coeffs = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut tr = 0.0;
        for i in b.offset..b.offset + b.len {
            tr += t.get(&[i, i], 0);
        }
        coeffs.push(tr / (b.len as f64 * b.scale));
    }
    // Reconstruct and measure the off-family residual.
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let recon = if i == j {
                let b = blocks
                    .iter()
                    .find(|b| i >= b.offset && i < b.offset + b.len)
                    .expect("block cover");
                coeffs[block_index(blocks, i)] * b.scale
            } else {
                0.0
            };
            dev = dev.max((t.get(&[i, j], 0) - recon).abs());
        }
    }
    let scale = t.sup_norm().max(1.0);
    if dev > tol::FAMILY_REL * scale + tol::FAMILY_ABS {
        return Err(Error::OffFamily { deviation: dev });
    }
    Ok(coeffs)
}

fn block_index(blocks: &[Block], frame_index: usize) -> usize {
    blocks
        .iter()
        .position(|b| frame_index >= b.offset && frame_index < b.offset + b.len)
        .expect("frame index within blocks")
}

/// The Ricci tensor shared by every positive metric in the block family:
/// in frame components, `(len_b - 1) · δ_ij` on each block.
pub fn cf_family_ricci(core: &Arc<LinkCore>) -> TensorField {
    let blocks = core.blocks().expect("constant-frame link");
    let n = core.dim;
    let mut comps = vec![0.0; n * n];
    for b in blocks {
        for i in b.offset..b.offset + b.len {
            comps[i * n + i] = (b.len - 1) as f64;
        }
    }
    TensorField::constant(core.clone(), Rank::METRIC, &comps)
}

/// Closed-form curvature of the constant-frame block metric.
fn cf_curvature(core: &Arc<LinkCore>, minv: &TensorField) -> CurvaturePack {
    let blocks = core.blocks().expect("constant-frame link");
    let mut riemann = TensorField::zeros(core.clone(), Rank::new(0, 4));
    for b in blocks {
        if b.len < 2 {
            continue;
        }
        for i in b.offset..b.offset + b.len {
            for j in b.offset..b.offset + b.len {
                for k in b.offset..b.offset + b.len {
                    for l in b.offset..b.offset + b.len {
                        let hil = if i == l { b.scale } else { 0.0 };
                        let hjk = if j == k { b.scale } else { 0.0 };
                        let hik = if i == k { b.scale } else { 0.0 };
                        let hjl = if j == l { b.scale } else { 0.0 };
                        let v = b.curvature * (hil * hjk - hik * hjl);
                        if v != 0.0 {
                            riemann.set(&[i, j, k, l], 0, v);
                        }
                    }
                }
            }
        }
    }
    let ricci = minv
        .product_contract(&riemann, &[(0, 0), (1, 3)])
        .expect("ricci contraction");
    let scalar = minv
        .product_contract(&ricci, &[(0, 0), (1, 1)])
        .expect("scalar contraction");
    CurvaturePack {
        riemann,
        ricci,
        scalar,
    }
}

// ---- catalog parsing ----------------------------------------------------

/// Cursor-based parser for catalog strings; reports byte offsets on failure.
struct CatParser<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> CatParser<'a> {
    fn new(s: &'a str) -> Self {
        CatParser { s, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.rest().chars().next().unwrap().len_utf8();
        }
    }

    fn err(&self, expected: &[&str]) -> Error {
        let found = if self.pos >= self.s.len() {
            "end of input".to_string()
        } else {
            let tail: String = self.rest().chars().take(12).collect();
            format!("{tail:?}")
        };
        Error::Parse(ParseDetail {
            offset: self.pos,
            expected: expected.iter().map(|e| e.to_string()).collect(),
            found,
        })
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .rest()
            .starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        self.s[start..self.pos].to_string()
    }

    fn expect_char(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&[&c.to_string()]))
        }
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn number_token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self
            .rest()
            .starts_with(|c: char| c.is_ascii_digit() || "+-.eE".contains(c))
        {
            self.pos += 1;
        }
        if self.pos == start {
            self.pos = start;
            Err(self.err(&["number"]))
        } else {
            Ok(&self.s[start..self.pos])
        }
    }

    fn parse_usize(&mut self, what: &str) -> Result<usize> {
        let start_pos = self.pos;
        let tok = self.number_token()?;
        tok.parse::<usize>().map_err(|_| {
            Error::Parse(ParseDetail {
                offset: start_pos,
                expected: vec![format!("positive integer {what}")],
                found: format!("{tok:?}"),
            })
        })
    }

    fn parse_radius(&mut self) -> Result<f64> {
        let start_pos = self.pos;
        let tok = self.number_token()?;
        let v: f64 = tok.parse().map_err(|_| {
            Error::Parse(ParseDetail {
                offset: start_pos,
                expected: vec!["radius".to_string()],
                found: format!("{tok:?}"),
            })
        })?;
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parse(ParseDetail {
                offset: start_pos,
                expected: vec!["positive finite radius".to_string()],
                found: format!("{tok:?}"),
            }));
        }
        Ok(v)
    }

    fn expect_end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.s.len() {
            Ok(())
        } else {
            Err(self.err(&["end of input"]))
        }
    }
}

/// Parsed form of a catalog string.
#[derive(Clone, Debug, PartialEq)]
pub enum CatalogEntry {
    Sphere { dim: usize, radius: f64 },
    Torus { dim: usize },
    SphereProduct { factors: Vec<(usize, f64)> },
}

pub fn parse_catalog(s: &str) -> Result<CatalogEntry> {
    let mut p = CatParser::new(s);
    let head = p.ident();
    match head.as_str() {
        "sphere" => {
            p.expect_char('(')?;
            let dim = p.parse_usize("dimension")?;
            let radius = if p.peek_char() == Some(',') {
                p.expect_char(',')?;
                p.parse_radius()?
            } else {
                1.0
            };
            p.expect_char(')')?;
            p.expect_end()?;
            if dim == 0 || dim > MAX_CF_DIM {
                return Err(Error::BadDimension {
                    dim,
                    reason: format!("sphere dimension must be in 1..={MAX_CF_DIM}"),
                });
            }
            Ok(CatalogEntry::Sphere { dim, radius })
        }
        "torus" => {
            p.expect_char('(')?;
            let dim = p.parse_usize("dimension")?;
            p.expect_char(')')?;
            p.expect_end()?;
            if dim == 0 || dim > 3 {
                return Err(Error::BadDimension {
                    dim,
                    reason: "torus links support dimension 1 to 3".to_string(),
                });
            }
            Ok(CatalogEntry::Torus { dim })
        }
        "sphere_product" => {
            p.expect_char('(')?;
            let mut factors = Vec::new();
            loop {
                let dim = p.parse_usize("factor dimension")?;
                p.expect_char(',')?;
                let radius = p.parse_radius()?;
                factors.push((dim, radius));
                match p.peek_char() {
                    Some(';') => {
                        p.expect_char(';')?;
                    }
                    Some(')') => {
                        p.expect_char(')')?;
                        break;
                    }
                    _ => return Err(p.err(&[";", ")"])),
                }
            }
            p.expect_end()?;
            let total: usize = factors.iter().map(|f| f.0).sum();
            if factors.len() < 2 {
                return Err(Error::Invalid {
                    context: "catalog",
                    message: "sphere_product needs at least two factors".to_string(),
                });
            }
            if total == 0 || total > MAX_CF_DIM {
                return Err(Error::BadDimension {
                    dim: total,
                    reason: format!("product dimension must be in 1..={MAX_CF_DIM}"),
                });
            }
            Ok(CatalogEntry::SphereProduct { factors })
        }
        _ => Err(Error::Parse(ParseDetail {
            offset: 0,
            expected: vec![
                "sphere(n[,radius])".to_string(),
                "torus(n)".to_string(),
                "sphere_product(p,a;q,b)".to_string(),
            ],
            found: if head.is_empty() {
                format!("{:?}", s.chars().take(12).collect::<String>())
            } else {
                format!("{head:?}")
            },
        })),
    }
}

/// Default torus grid resolutions, chosen to keep spectral accuracy high
/// while staying fast: 32 points per axis up to 2-d, 16 per axis in 3-d.
fn torus_default_shape(dim: usize) -> Vec<usize> {
    match dim {
        1 => vec![32],
        2 => vec![32, 32],
        _ => vec![16, 16, 16],
    }
}

// ---- building ------------------------------------------------------------

pub fn build_link(desc: &LinkDescriptor) -> Result<LinkManifold> {
    match desc {
        LinkDescriptor::Catalog { catalog } => build_catalog(catalog),
        LinkDescriptor::Grid(spec) => build_grid(spec),
    }
}

pub fn build_catalog(s: &str) -> Result<LinkManifold> {
    let entry = parse_catalog(s)?;
    let desc = LinkDescriptor::catalog(s);
    match entry {
        CatalogEntry::Sphere { dim, radius } => {
            build_constant_frame(desc, &[(dim, radius)])
        }
        CatalogEntry::SphereProduct { factors } => build_constant_frame(desc, &factors),
        CatalogEntry::Torus { dim } => {
            let shape = torus_default_shape(dim);
            let flat = GridSpec {
                dim,
                grid: shape,
                metric: identity_metric_strings(dim),
            };
            build_grid_with_descriptor(&flat, desc)
        }
    }
}

fn identity_metric_strings(dim: usize) -> Vec<Vec<String>> {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { "1".to_string() } else { "0".to_string() })
                .collect()
        })
        .collect()
}

fn build_constant_frame(desc: LinkDescriptor, factors: &[(usize, f64)]) -> Result<LinkManifold> {
    let mut blocks = Vec::new();
    let mut offset = 0;
    for &(len, radius) in factors {
        let scale = radius * radius;
        blocks.push(Block {
            offset,
            len,
            scale,
            curvature: 1.0 / scale,
        });
        offset += len;
    }
    let dim = offset;
    let core = Arc::new(LinkCore {
        dim,
        backend: BackendCore::ConstantFrame { blocks },
    });
    let blocks = core.blocks().unwrap().to_vec();

    let mut comps = vec![0.0; dim * dim];
    let mut inv_comps = vec![0.0; dim * dim];
    let mut det = 1.0;
    for b in &blocks {
        for i in b.offset..b.offset + b.len {
            comps[i * dim + i] = b.scale;
            inv_comps[i * dim + i] = 1.0 / b.scale;
            det *= b.scale;
        }
    }
    let metric = TensorField::constant(core.clone(), Rank::METRIC, &comps);
    let metric_inv = TensorField::constant(core.clone(), Rank::INV_METRIC, &inv_comps);
    let curvature = cf_curvature(&core, &metric_inv);
    let gamma = TensorField::zeros(core.clone(), Rank::new(1, 2));
    Ok(LinkManifold {
        core,
        descriptor: desc,
        scheme: DiffScheme::Spectral,
        metric,
        metric_inv,
        sqrt_det: vec![det.sqrt()],
        gamma,
        curvature,
    })
}

pub fn build_grid(spec: &GridSpec) -> Result<LinkManifold> {
    build_grid_with_descriptor(spec, LinkDescriptor::Grid(spec.clone()))
}

fn build_grid_with_descriptor(spec: &GridSpec, desc: LinkDescriptor) -> Result<LinkManifold> {
    let dim = spec.grid.len();
    if spec.dim != dim {
        return Err(Error::BadDimension {
            dim: spec.dim,
            reason: format!("`dim` must match the number of grid axes ({dim})"),
        });
    }
    let grid = Grid::new(&spec.grid)?;
    if spec.metric.len() != dim || spec.metric.iter().any(|row| row.len() != dim) {
        return Err(Error::Invalid {
            context: "grid metric",
            message: format!(
                "metric must be a {dim}x{dim} matrix of expressions, got {}x{}",
                spec.metric.len(),
                spec.metric.first().map_or(0, |r| r.len())
            ),
        });
    }
    let core = Arc::new(LinkCore {
        dim,
        backend: BackendCore::Grid(grid),
    });
    let grid = core.grid().unwrap();
    let np = grid.n_points();

    // Only the upper triangle of the expression matrix is read; the lower
    // triangle is filled in by symmetry.
    let mut metric = TensorField::zeros(core.clone(), Rank::METRIC);
    for i in 0..dim {
        for j in i..dim {
            let expr = parse_expression(&spec.metric[i][j], dim)?;
            for p in 0..np {
                let x = grid.coords(p);
                let v = expr.eval(&x)?;
                if !v.is_finite() {
                    return Err(Error::Invalid {
                        context: "grid metric",
                        message: format!(
                            "metric entry ({},{}) is not finite at {}",
                            i + 1,
                            j + 1,
                            core.point_label(p)
                        ),
                    });
                }
                metric.comp_mut(i * dim + j)[p] = v;
                if i != j {
                    metric.comp_mut(j * dim + i)[p] = v;
                }
            }
        }
    }

    let (min_eig, at) = metric.min_eigenvalue();
    if min_eig <= tol::PD_MIN_EIG {
        return Err(Error::NonPositiveDefinite {
            context: "grid metric",
            min_eig,
            location: core.point_label(at),
        });
    }
    let metric_inv = metric.inverse_metric("grid metric inverse")?;

    let mut sqrt_det = vec![0.0; np];
    let mut mat = vec![0.0; dim * dim];
    for p in 0..np {
        for i in 0..dim {
            for j in 0..dim {
                mat[i * dim + j] = metric.get(&[i, j], p);
            }
        }
        sqrt_det[p] = linalg::det(&mat, dim).sqrt();
    }

    let scheme = DiffScheme::Spectral;
    let gamma = calculus::christoffel(&metric, &metric_inv, scheme)?;
    let curvature = calculus::curvature_pack(&metric, &metric_inv, scheme)?;
    Ok(LinkManifold {
        core,
        descriptor: desc,
        scheme,
        metric,
        metric_inv,
        sqrt_det,
        gamma,
        curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_accepts_spheres_with_and_without_radius() {
        assert_eq!(
            parse_catalog("sphere(3, 2.0)").unwrap(),
            CatalogEntry::Sphere {
                dim: 3,
                radius: 2.0
            }
        );
        assert_eq!(
            parse_catalog("sphere(2)").unwrap(),
            CatalogEntry::Sphere {
                dim: 2,
                radius: 1.0
            }
        );
        assert_eq!(
            parse_catalog(" sphere_product( 2 , 1.0 ; 3 , 0.5 ) ").unwrap(),
            CatalogEntry::SphereProduct {
                factors: vec![(2, 1.0), (3, 0.5)]
            }
        );
    }

    #[test]
    fn catalog_rejects_garbage_with_offsets() {
        match parse_catalog("sphere(2,-1)") {
            Err(Error::Parse(d)) => assert_eq!(d.offset, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_catalog("klein_bottle(2)").is_err());
        assert!(parse_catalog("sphere(0)").is_err());
        assert!(parse_catalog("torus(4)").is_err());
        assert!(parse_catalog("sphere(2,1))").is_err());
    }

    #[test]
    fn unit_sphere_ricci_is_n_minus_one_times_metric() {
        for n in 2..=4 {
            let link = build_catalog(&format!("sphere({n})")).unwrap();
            let expected = link.metric().scale((n - 1) as f64);
            assert!(link.ricci().max_abs_diff(&expected) < 1e-14);
            let scalar = link.scalar_curvature().comp(0)[0];
            assert!((scalar - (n * (n - 1)) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_radius_scales_curvature() {
        let link = build_catalog("sphere(2, 2.0)").unwrap();
        // S^2 of radius a: scalar curvature 2/a^2.
        assert!((link.scalar_curvature().comp(0)[0] - 0.5).abs() < 1e-14);
        // Ricci = (1/a^2) * metric for n = 2.
        let expected = link.metric().scale(0.25);
        assert!(link.ricci().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn product_link_has_blockwise_einstein_ricci() {
        let link = build_catalog("sphere_product(2,1.0;3,1.0)").unwrap();
        let ric = link.ricci();
        // Block of S^2: Ric = 1 * h; block of S^3: Ric = 2 * h.
        for i in 0..2 {
            assert!((ric.get(&[i, i], 0) - 1.0).abs() < 1e-14);
        }
        for i in 2..5 {
            assert!((ric.get(&[i, i], 0) - 2.0).abs() < 1e-14);
        }
        let scalar = link.scalar_curvature().comp(0)[0];
        assert!((scalar - (2.0 + 3.0 * 2.0)).abs() < 1e-13);
    }

    #[test]
    fn flat_torus_has_vanishing_curvature() {
        let link = build_catalog("torus(2)").unwrap();
        assert!(link.riemann().sup_norm() < 1e-12);
        assert!(link.ricci().sup_norm() < 1e-12);
        assert!(link.gamma().sup_norm() < 1e-12);
    }

    #[test]
    fn family_projection_recovers_coefficients() {
        let link = build_catalog("sphere_product(2,1.0;2,2.0)").unwrap();
        let t = {
            let a = link.metric().clone();
            // 3 * h on block 0 plus 0.5 * h on block 1, assembled by hand.
            let mut comps = vec![0.0; 16];
            comps[0] = 3.0;
            comps[5] = 3.0;
            comps[10] = 0.5 * 4.0;
            comps[15] = 0.5 * 4.0;
            let _ = a;
            TensorField::constant(link.core().clone(), Rank::METRIC, &comps)
        };
        let c = cf_family_coefficients(link.core(), &t).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-14);
        assert!((c[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn off_family_tensor_is_rejected() {
        let link = build_catalog("sphere(2)").unwrap();
        let mut comps = vec![0.0; 4];
        comps[0] = 1.0;
        comps[3] = 2.0; // unequal diagonal: not a multiple of the metric
        let t = TensorField::constant(link.core().clone(), Rank::METRIC, &comps);
        assert!(matches!(
            cf_family_coefficients(link.core(), &t),
            Err(Error::OffFamily { .. })
        ));
    }

    #[test]
    fn family_ricci_matches_curvature_pack() {
        let link = build_catalog("sphere_product(3,1.5;2,0.7)").unwrap();
        let fam = cf_family_ricci(link.core());
        assert!(fam.max_abs_diff(link.ricci()) < 1e-13);
    }

    #[test]
    fn grid_metric_must_be_positive_definite() {
        let spec = GridSpec {
            dim: 2,
            grid: vec![8, 8],
            metric: vec![
                vec!["sin(x1)".to_string(), "0".to_string()],
                vec!["0".to_string(), "1".to_string()],
            ],
        };
        assert!(matches!(
            build_grid(&spec),
            Err(Error::NonPositiveDefinite { .. })
        ));
    }

    #[test]
    fn perturbed_torus_metric_min_eigenvalue() {
        let spec = GridSpec {
            dim: 2,
            grid: vec![16, 16],
            metric: vec![
                vec!["1 + 0.1*sin(x1)".to_string(), "0".to_string()],
                vec!["0".to_string(), "1".to_string()],
            ],
        };
        let link = build_grid(&spec).unwrap();
        let (min_eig, _) = link.metric().min_eigenvalue();
        assert!((min_eig - 0.9).abs() < 1e-12);
    }

    #[test]
    fn lower_triangle_entries_are_ignored() {
        let spec = GridSpec {
            dim: 2,
            grid: vec![8, 8],
            metric: vec![
                vec!["2".to_string(), "0.1".to_string()],
                vec!["0.9".to_string(), "2".to_string()],
            ],
        };
        let link = build_grid(&spec).unwrap();
        assert_eq!(link.metric().get(&[0, 1], 0), 0.1);
        assert_eq!(link.metric().get(&[1, 0], 0), 0.1);
    }

    #[test]
    fn grid_spec_dim_must_match_axes() {
        let spec = GridSpec {
            dim: 3,
            grid: vec![8, 8],
            metric: identity_metric_strings(2),
        };
        assert!(matches!(build_grid(&spec), Err(Error::BadDimension { .. })));
    }

    #[test]
    fn grid_spec_json_shape_round_trips() {
        let raw = r#"{"dim": 2, "grid": [8,8], "metric": [["1+0.1*sin(x1)","0"],["0","1"]]}"#;
        let desc: LinkDescriptor = serde_json::from_str(raw).unwrap();
        let link = build_link(&desc).unwrap();
        assert_eq!(link.dim(), 2);
        let back = serde_json::to_string(link.descriptor()).unwrap();
        let desc2: LinkDescriptor = serde_json::from_str(&back).unwrap();
        assert_eq!(&desc2, link.descriptor());
    }
}
