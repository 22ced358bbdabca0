//! Dense tensor fields over a link manifold.
//!
//! A `TensorField` stores every component of a (p,q)-tensor at every grid
//! point (constant-frame links have a single point). Components are laid out
//! slot-major — all upper slots first, then all lower slots, each running
//! over `0..dim` row-major — and each component's values across the grid are
//! contiguous, which keeps spectral differentiation cache-friendly.
//!
//! Slot numbering used by every operation here: slots `0..p` are the upper
//! (contravariant) slots, `p..p+q` the lower (covariant) ones, in the order
//! they appear in index notation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::DiffScheme;
use crate::link::LinkCore;
use crate::tol;

/// Largest supported total rank. Rank 6 covers two covariant derivatives of
/// the curvature tensor, the deepest object the identities here need.
pub const MAX_RANK: usize = 6;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Rank {
    pub up: usize,
    pub down: usize,
}

impl Rank {
    pub const SCALAR: Rank = Rank { up: 0, down: 0 };
    pub const COVECTOR: Rank = Rank { up: 0, down: 1 };
    pub const METRIC: Rank = Rank { up: 0, down: 2 };
    pub const INV_METRIC: Rank = Rank { up: 2, down: 0 };

    pub fn new(up: usize, down: usize) -> Rank {
        Rank { up, down }
    }

    pub fn total(&self) -> usize {
        self.up + self.down
    }

    /// True when `slot` indexes an upper (contravariant) position.
    pub fn is_upper(&self, slot: usize) -> bool {
        slot < self.up
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.up, self.down)
    }
}

#[derive(Clone)]
pub struct TensorField {
    core: Arc<LinkCore>,
    rank: Rank,
    /// `data[c * np + p]`: component `c`, grid point `p`.
    data: Vec<f64>,
}

impl std::fmt::Debug for TensorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "TensorField(rank {}, dim {}, {} points, sup {:.6e})",
            self.rank,
            self.dim(),
            self.np(),
            self.sup_norm()
        )
    }
}

impl TensorField {
    pub fn zeros(core: Arc<LinkCore>, rank: Rank) -> TensorField {
        let n = core.dim.pow(rank.total() as u32) * core.n_points();
        TensorField {
            core,
            rank,
            data: vec![0.0; n],
        }
    }

    /// A field whose components are the same at every grid point.
    pub fn constant(core: Arc<LinkCore>, rank: Rank, comps: &[f64]) -> TensorField {
        let ncomp = core.dim.pow(rank.total() as u32);
        assert_eq!(comps.len(), ncomp, "component count mismatch");
        let np = core.n_points();
        let mut data = vec![0.0; ncomp * np];
        for (c, v) in comps.iter().enumerate() {
            data[c * np..(c + 1) * np].fill(*v);
        }
        TensorField { core, rank, data }
    }

    pub fn scalar_constant(core: Arc<LinkCore>, v: f64) -> TensorField {
        TensorField::constant(core, Rank::SCALAR, &[v])
    }

    pub fn from_raw(core: Arc<LinkCore>, rank: Rank, data: Vec<f64>) -> TensorField {
        let n = core.dim.pow(rank.total() as u32) * core.n_points();
        assert_eq!(data.len(), n, "raw data length mismatch");
        TensorField { core, rank, data }
    }

    pub fn core(&self) -> &Arc<LinkCore> {
        &self.core
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.core.dim
    }

    pub fn np(&self) -> usize {
        self.core.n_points()
    }

    pub fn ncomp(&self) -> usize {
        self.dim().pow(self.rank.total() as u32)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Values of one component across the grid.
    pub fn comp(&self, c: usize) -> &[f64] {
        let np = self.np();
        &self.data[c * np..(c + 1) * np]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let np = self.np();
        &mut self.data[c * np..(c + 1) * np]
    }

    /// Linear component index of a multi-index (row-major over slots).
    pub fn comp_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank.total());
        let n = self.dim();
        idx.iter().fold(0, |acc, &i| acc * n + i)
    }

    pub fn get(&self, idx: &[usize], point: usize) -> f64 {
        self.data[self.comp_index(idx) * self.np() + point]
    }

    pub fn set(&mut self, idx: &[usize], point: usize, v: f64) {
        let c = self.comp_index(idx);
        let np = self.np();
        self.data[c * np + point] = v;
    }

    fn same_shape(&self, other: &TensorField, op: &'static str) -> Result<()> {
        if self.rank != other.rank || !Arc::ptr_eq(&self.core, &other.core) {
            return Err(Error::RankMismatch {
                op,
                expected: format!("{} on shared link", self.rank),
                found: format!("{}", other.rank),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.same_shape(other, "add")?;
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += v;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.same_shape(other, "sub")?;
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o -= v;
        }
        Ok(out)
    }

    /// `self + c * other`, in place on a clone.
    pub fn add_scaled(&self, c: f64, other: &TensorField) -> Result<TensorField> {
        self.same_shape(other, "add_scaled")?;
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += c * v;
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> TensorField {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= c;
        }
        out
    }

    pub fn neg(&self) -> TensorField {
        self.scale(-1.0)
    }

    /// Pointwise multiplication by a scalar field.
    pub fn mul_scalar_field(&self, s: &TensorField) -> Result<TensorField> {
        if s.rank.total() != 0 {
            return Err(Error::RankMismatch {
                op: "mul_scalar_field",
                expected: "(0,0)".to_string(),
                found: format!("{}", s.rank),
            });
        }
        let mut out = self.clone();
        for c in 0..self.ncomp() {
            let row = out.comp_mut(c);
            for (r, sv) in row.iter_mut().zip(s.comp(0)) {
                *r *= sv;
            }
        }
        Ok(out)
    }

    /// Tensor product contracted over `pairs` of slots, one from each factor.
    /// Each pair must join an upper slot with a lower slot. Free slots of the
    /// result are ordered: `self`'s free uppers, `other`'s free uppers,
    /// `self`'s free lowers, `other`'s free lowers, preserving the original
    /// order within each group.
    pub fn product_contract(
        &self,
        other: &TensorField,
        pairs: &[(usize, usize)],
    ) -> Result<TensorField> {
        if !Arc::ptr_eq(&self.core, &other.core) {
            return Err(Error::RankMismatch {
                op: "product_contract",
                expected: "factors on the same link".to_string(),
                found: "distinct links".to_string(),
            });
        }
        let (ra, rb) = (self.rank, other.rank);
        let (ta, tb) = (ra.total(), rb.total());
        let mut used_a = vec![false; ta];
        let mut used_b = vec![false; tb];
        for &(sa, sb) in pairs {
            if sa >= ta || sb >= tb {
                return Err(Error::RankMismatch {
                    op: "product_contract",
                    expected: format!("slot pairs within {} x {}", ra, rb),
                    found: format!("pair ({sa},{sb})"),
                });
            }
            if used_a[sa] || used_b[sb] {
                return Err(Error::RankMismatch {
                    op: "product_contract",
                    expected: "each slot contracted at most once".to_string(),
                    found: format!("repeated slot in pair ({sa},{sb})"),
                });
            }
            if ra.is_upper(sa) == rb.is_upper(sb) {
                return Err(Error::RankMismatch {
                    op: "product_contract",
                    expected: "upper-with-lower contraction".to_string(),
                    found: format!("pair ({sa},{sb}) with equal variance"),
                });
            }
            used_a[sa] = true;
            used_b[sb] = true;
        }
        let free_a: Vec<usize> = (0..ta).filter(|s| !used_a[*s]).collect();
        let free_b: Vec<usize> = (0..tb).filter(|s| !used_b[*s]).collect();
        let up_out = free_a.iter().filter(|s| ra.is_upper(**s)).count()
            + free_b.iter().filter(|s| rb.is_upper(**s)).count();
        let down_out = free_a.len() + free_b.len() - up_out;
        let out_rank = Rank::new(up_out, down_out);
        if out_rank.total() > MAX_RANK {
            return Err(Error::RankOverflow {
                op: "product_contract",
                rank: out_rank.total(),
                max: MAX_RANK,
            });
        }

        // Output slot order: free uppers of A, free uppers of B, free lowers
        // of A, free lowers of B.
        let mut out_sources: Vec<(bool, usize)> = Vec::new(); // (from_a, slot)
        for &s in &free_a {
            if ra.is_upper(s) {
                out_sources.push((true, s));
            }
        }
        for &s in &free_b {
            if rb.is_upper(s) {
                out_sources.push((false, s));
            }
        }
        for &s in &free_a {
            if !ra.is_upper(s) {
                out_sources.push((true, s));
            }
        }
        for &s in &free_b {
            if !rb.is_upper(s) {
                out_sources.push((false, s));
            }
        }

        let n = self.dim();
        let np = self.np();
        // Row-major strides of the input component indices.
        let stride = |total: usize, slot: usize| n.pow((total - 1 - slot) as u32);
        let npairs = pairs.len();
        let ncontr = n.pow(npairs as u32);

        // Contraction offset tables: for contraction multi-index c, the
        // contribution to A's and B's linear component index.
        let mut a_contr = vec![0usize; ncontr];
        let mut b_contr = vec![0usize; ncontr];
        for c in 0..ncontr {
            let (mut rem, mut ao, mut bo) = (c, 0usize, 0usize);
            for (k, &(sa, sb)) in pairs.iter().enumerate() {
                let digit = (rem / n.pow((npairs - 1 - k) as u32)) % n;
                rem %= n.pow((npairs - 1 - k) as u32);
                let _ = rem;
                ao += digit * stride(ta, sa);
                bo += digit * stride(tb, sb);
            }
            a_contr[c] = ao;
            b_contr[c] = bo;
        }

        let out_total = out_rank.total();
        let out_ncomp = n.pow(out_total as u32);
        let mut out = TensorField::zeros(self.core.clone(), out_rank);
        let mut out_idx = vec![0usize; out_total];
        for oc in 0..out_ncomp {
            // Decompose the output component index.
            let mut rem = oc;
            for k in 0..out_total {
                out_idx[k] = rem / n.pow((out_total - 1 - k) as u32);
                rem %= n.pow((out_total - 1 - k) as u32);
            }
            let mut a_base = 0usize;
            let mut b_base = 0usize;
            for (k, &(from_a, slot)) in out_sources.iter().enumerate() {
                if from_a {
                    a_base += out_idx[k] * stride(ta, slot);
                } else {
                    b_base += out_idx[k] * stride(tb, slot);
                }
            }
            let row = out.comp_mut(oc);
            for c in 0..ncontr {
                let a_row = self.comp(a_contr[c] + a_base);
                let b_row = other.comp(b_contr[c] + b_base);
                for p in 0..np {
                    row[p] += a_row[p] * b_row[p];
                }
            }
        }
        Ok(out)
    }

    /// Contract one upper slot of `self` against one of its own lower slots.
    pub fn trace_pair(&self, sa: usize, sb: usize) -> Result<TensorField> {
        let r = self.rank;
        let t = r.total();
        if sa >= t || sb >= t || sa == sb || r.is_upper(sa) == r.is_upper(sb) {
            return Err(Error::RankMismatch {
                op: "trace_pair",
                expected: "one upper and one lower slot".to_string(),
                found: format!("slots ({sa},{sb}) of rank {r}"),
            });
        }
        let out_rank = Rank::new(r.up - 1, r.down - 1);
        let n = self.dim();
        let np = self.np();
        let keep: Vec<usize> = (0..t).filter(|s| *s != sa && *s != sb).collect();
        let stride = |slot: usize| n.pow((t - 1 - slot) as u32);
        let out_total = out_rank.total();
        let out_ncomp = n.pow(out_total as u32);
        let mut out = TensorField::zeros(self.core.clone(), out_rank);
        let mut out_idx = vec![0usize; out_total];
        for oc in 0..out_ncomp {
            let mut rem = oc;
            for k in 0..out_total {
                out_idx[k] = rem / n.pow((out_total - 1 - k) as u32);
                rem %= n.pow((out_total - 1 - k) as u32);
            }
            let base: usize = keep
                .iter()
                .enumerate()
                .map(|(k, &slot)| out_idx[k] * stride(slot))
                .sum();
            let row = out.comp_mut(oc);
            for m in 0..n {
                let src = self.comp(base + m * stride(sa) + m * stride(sb));
                for p in 0..np {
                    row[p] += src[p];
                }
            }
        }
        Ok(out)
    }

    /// Reorder slots: output slot `k` carries the values of input slot
    /// `src_of_out[k]`. The permutation must keep uppers upper and lowers
    /// lower.
    pub fn permute_slots(&self, src_of_out: &[usize]) -> Result<TensorField> {
        let r = self.rank;
        let t = r.total();
        if src_of_out.len() != t {
            return Err(Error::RankMismatch {
                op: "permute_slots",
                expected: format!("{t} slots"),
                found: format!("{}", src_of_out.len()),
            });
        }
        let mut seen = vec![false; t];
        for (k, &s) in src_of_out.iter().enumerate() {
            if s >= t || seen[s] || r.is_upper(s) != r.is_upper(k) {
                return Err(Error::RankMismatch {
                    op: "permute_slots",
                    expected: "a variance-preserving permutation".to_string(),
                    found: format!("{src_of_out:?}"),
                });
            }
            seen[s] = true;
        }
        let n = self.dim();
        let ncomp = self.ncomp();
        let stride = |slot: usize| n.pow((t - 1 - slot) as u32);
        let mut out = TensorField::zeros(self.core.clone(), r);
        let mut out_idx = vec![0usize; t];
        for oc in 0..ncomp {
            let mut rem = oc;
            for k in 0..t {
                out_idx[k] = rem / n.pow((t - 1 - k) as u32);
                rem %= n.pow((t - 1 - k) as u32);
            }
            // Input slot src_of_out[k] takes the value out_idx[k].
            let ic: usize = (0..t).map(|k| out_idx[k] * stride(src_of_out[k])).sum();
            let src = self.comp(ic).to_vec();
            out.comp_mut(oc).copy_from_slice(&src);
        }
        Ok(out)
    }

    /// Symmetrize over two slots of equal variance.
    pub fn symmetrize_pair(&self, sa: usize, sb: usize) -> Result<TensorField> {
        let t = self.rank.total();
        if sa >= t || sb >= t || sa == sb || self.rank.is_upper(sa) != self.rank.is_upper(sb) {
            return Err(Error::RankMismatch {
                op: "symmetrize_pair",
                expected: "two distinct slots of equal variance".to_string(),
                found: format!("slots ({sa},{sb})"),
            });
        }
        let mut perm: Vec<usize> = (0..t).collect();
        perm.swap(sa, sb);
        let swapped = self.permute_slots(&perm)?;
        Ok(self.add(&swapped)?.scale(0.5))
    }

    /// Max deviation from symmetry in two slots, for validation.
    pub fn symmetry_deviation(&self, sa: usize, sb: usize) -> Result<f64> {
        let t = self.rank.total();
        let mut perm: Vec<usize> = (0..t).collect();
        perm.swap(sa, sb);
        let swapped = self.permute_slots(&perm)?;
        Ok(self.max_abs_diff(&swapped))
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &TensorField) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Euclidean inner product over all components and points (used to
    /// measure probe responses, not a geometric pairing).
    pub fn inner(&self, other: &TensorField) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Spatial partial derivative of every component. The derivative index
    /// becomes the first lower slot; constant-frame links return zeros.
    pub fn partial_derivative(&self, scheme: DiffScheme) -> Result<TensorField> {
        let r = self.rank;
        let out_rank = Rank::new(r.up, r.down + 1);
        if out_rank.total() > MAX_RANK {
            return Err(Error::RankOverflow {
                op: "partial_derivative",
                rank: out_rank.total(),
                max: MAX_RANK,
            });
        }
        let n = self.dim();
        let mut out = TensorField::zeros(self.core.clone(), out_rank);
        if self.core.is_constant_frame() {
            return Ok(out);
        }
        // Output component layout: [uppers..., axis, lowers...]. For input
        // component c (uppers+lowers row-major) and axis a, the output
        // component index interleaves a at position `up`.
        let nup = n.pow(r.up as u32);
        let ndown = n.pow(r.down as u32);
        for cu in 0..nup {
            for cd in 0..ndown {
                let cin = cu * ndown + cd;
                let src = self.comp(cin);
                for axis in 0..n {
                    let d = self.core.grid_derivative(src, axis, scheme)?;
                    let cout = (cu * n + axis) * ndown + cd;
                    out.comp_mut(cout).copy_from_slice(&d);
                }
            }
        }
        Ok(out)
    }

    /// Pointwise inverse of a symmetric (0,2) field, producing a (2,0) field.
    pub fn inverse_metric(&self, context: &'static str) -> Result<TensorField> {
        if self.rank != Rank::METRIC {
            return Err(Error::RankMismatch {
                op: "inverse_metric",
                expected: "(0,2)".to_string(),
                found: format!("{}", self.rank),
            });
        }
        let n = self.dim();
        let np = self.np();
        let mut out = TensorField::zeros(self.core.clone(), Rank::INV_METRIC);
        let mut mat = vec![0.0; n * n];
        for p in 0..np {
            for i in 0..n {
                for j in 0..n {
                    mat[i * n + j] = self.data[(i * n + j) * np + p];
                }
            }
            let inv = crate::linalg::invert(&mat, n, 1e-140).ok_or_else(|| {
                Error::NonPositiveDefinite {
                    context,
                    min_eig: crate::linalg::sym_min_eigenvalue(&mat, n),
                    location: self.core.point_label(p),
                }
            })?;
            for i in 0..n {
                for j in 0..n {
                    out.data[(i * n + j) * np + p] = inv[i * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Smallest eigenvalue over all points of a symmetric (0,2) field,
    /// together with the point where it is attained.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        debug_assert_eq!(self.rank, Rank::METRIC);
        let n = self.dim();
        let np = self.np();
        let mut best = (f64::INFINITY, 0usize);
        let mut mat = vec![0.0; n * n];
        for p in 0..np {
            for i in 0..n {
                for j in 0..n {
                    mat[i * n + j] = self.data[(i * n + j) * np + p];
                }
            }
            let ev = crate::linalg::sym_min_eigenvalue(&mat, n);
            if ev < best.0 {
                best = (ev, p);
            }
        }
        best
    }

    /// Validate that a (0,2) field is symmetric to the declared tolerance.
    pub fn require_symmetric(&self, context: &'static str) -> Result<()> {
        let dev = self.symmetry_deviation(self.rank.up, self.rank.up + 1)?;
        let scale = self.sup_norm().max(1.0);
        if dev > tol::SYMMETRY_REL * scale {
            return Err(Error::NotSymmetric {
                context,
                deviation: dev,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkCore;

    fn frame(dim: usize) -> Arc<LinkCore> {
        LinkCore::constant_frame_for_tests(dim)
    }

    fn filled(core: &Arc<LinkCore>, rank: Rank, f: impl Fn(&[usize]) -> f64) -> TensorField {
        let mut t = TensorField::zeros(core.clone(), rank);
        let total = rank.total();
        let n = t.dim();
        let ncomp = t.ncomp();
        for c in 0..ncomp {
            let mut idx = vec![0usize; total];
            let mut rem = c;
            for k in 0..total {
                idx[k] = rem / n.pow((total - 1 - k) as u32);
                rem %= n.pow((total - 1 - k) as u32);
            }
            let v = f(&idx);
            t.comp_mut(c)[0] = v;
        }
        t
    }

    #[test]
    fn matrix_product_via_contraction() {
        let core = frame(2);
        // A^i_j = [[1,2],[3,4]] as a (1,1) tensor, B likewise.
        let a = filled(&core, Rank::new(1, 1), |ix| (ix[0] * 2 + ix[1]) as f64 + 1.0);
        let b = filled(&core, Rank::new(1, 1), |ix| {
            [[5.0, 6.0], [7.0, 8.0]][ix[0]][ix[1]]
        });
        // (AB)^i_k = A^i_j B^j_k: contract A slot1 (lower) with B slot0 (upper).
        let ab = a.product_contract(&b, &[(1, 0)]).unwrap();
        let expect = [[19.0, 22.0], [43.0, 50.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(ab.get(&[i, k], 0), expect[i][k]);
            }
        }
    }

    #[test]
    fn trace_of_identity_is_dim() {
        let core = frame(3);
        let id = filled(&core, Rank::new(1, 1), |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 });
        let tr = id.trace_pair(0, 1).unwrap();
        assert_eq!(tr.rank(), Rank::SCALAR);
        assert_eq!(tr.comp(0)[0], 3.0);
    }

    #[test]
    fn permute_transposes() {
        let core = frame(2);
        let t = filled(&core, Rank::new(0, 2), |ix| (ix[0] * 2 + ix[1]) as f64);
        let tt = t.permute_slots(&[1, 0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(tt.get(&[i, j], 0), t.get(&[j, i], 0));
            }
        }
    }

    #[test]
    fn symmetrize_kills_antisymmetric_part() {
        let core = frame(3);
        let anti = filled(&core, Rank::new(0, 2), |ix| {
            (ix[0] as f64) - (ix[1] as f64)
        });
        let s = anti.symmetrize_pair(0, 1).unwrap();
        assert!(s.sup_norm() == 0.0);
    }

    #[test]
    fn contraction_variance_is_checked() {
        let core = frame(2);
        let a = TensorField::zeros(core.clone(), Rank::new(0, 2));
        let b = TensorField::zeros(core, Rank::new(0, 2));
        assert!(matches!(
            a.product_contract(&b, &[(0, 0)]),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn rank_overflow_is_reported() {
        let core = frame(2);
        let a = TensorField::zeros(core.clone(), Rank::new(0, 4));
        let b = TensorField::zeros(core, Rank::new(0, 4));
        assert!(matches!(
            a.product_contract(&b, &[]),
            Err(Error::RankOverflow { .. })
        ));
    }

    #[test]
    fn inverse_of_diagonal_metric() {
        let core = frame(2);
        let g = filled(&core, Rank::METRIC, |ix| {
            if ix == [0, 0] {
                4.0
            } else if ix == [1, 1] {
                0.25
            } else {
                0.0
            }
        });
        let ginv = g.inverse_metric("test").unwrap();
        assert!((ginv.get(&[0, 0], 0) - 0.25).abs() < 1e-15);
        assert!((ginv.get(&[1, 1], 0) - 4.0).abs() < 1e-15);
    }
}
