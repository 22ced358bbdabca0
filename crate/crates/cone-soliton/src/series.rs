//! Formal Laurent series in the radial coordinate with tensor-field
//! coefficients, carrying explicit truncation floors.
//!
//! A `RadialSeries` represents `Σ_e c_e · r^e` plus an *unknown remainder*
//! supported strictly below its `floor`: terms with exponent `< floor` are
//! not tracked, and arithmetic propagates how far down results can be
//! trusted. A floor of `NegInf` means the series is exact (no remainder).
//! Reading a coefficient below the floor is an error — that coefficient was
//! discarded, not zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::link::LinkCore;
use crate::tensor::{Rank, TensorField};

/// Lowest trusted exponent of a series. `NegInf` compares below every
/// finite floor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Floor {
    NegInf,
    At(i32),
}

impl Floor {
    /// Shift by an exponent offset.
    pub fn shifted(self, k: i32) -> Floor {
        match self {
            Floor::NegInf => Floor::NegInf,
            Floor::At(f) => Floor::At(f + k),
        }
    }

    /// Does an exponent lie at or above this floor?
    pub fn admits(self, e: i32) -> bool {
        match self {
            Floor::NegInf => true,
            Floor::At(f) => e >= f,
        }
    }
}

impl std::fmt::Display for Floor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Floor::NegInf => write!(f, "-inf"),
            Floor::At(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone)]
pub struct RadialSeries {
    core: Arc<LinkCore>,
    rank: Rank,
    terms: BTreeMap<i32, TensorField>,
    floor: Floor,
}

impl std::fmt::Debug for RadialSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let exps: Vec<i32> = self.terms.keys().rev().copied().collect();
        write!(
            f,
            "RadialSeries(rank {}, exps {:?}, floor {})",
            self.rank, exps, self.floor
        )
    }
}

impl RadialSeries {
    /// The exact zero series.
    pub fn zero(core: Arc<LinkCore>, rank: Rank) -> RadialSeries {
        RadialSeries {
            core,
            rank,
            terms: BTreeMap::new(),
            floor: Floor::NegInf,
        }
    }

    pub fn zero_with_floor(core: Arc<LinkCore>, rank: Rank, floor: Floor) -> RadialSeries {
        RadialSeries {
            core,
            rank,
            terms: BTreeMap::new(),
            floor,
        }
    }

    /// A single exact term `field · r^e`.
    pub fn single(e: i32, field: TensorField) -> RadialSeries {
        let core = field.core().clone();
        let rank = field.rank();
        let mut terms = BTreeMap::new();
        terms.insert(e, field);
        RadialSeries {
            core,
            rank,
            terms,
            floor: Floor::NegInf,
        }
    }

    pub fn core(&self) -> &Arc<LinkCore> {
        &self.core
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn floor(&self) -> Floor {
        self.floor
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn exponents(&self) -> Vec<i32> {
        self.terms.keys().copied().collect()
    }

    pub fn max_exponent(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &TensorField)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    /// Stored coefficient, if any, without floor checking.
    pub fn term(&self, e: i32) -> Option<&TensorField> {
        self.terms.get(&e)
    }

    /// Coefficient at exponent `e`. Exponents above the floor that carry no
    /// stored term are exactly zero; below the floor they are unknown.
    pub fn coefficient(&self, e: i32) -> Result<TensorField> {
        if !self.floor.admits(e) {
            let floor = match self.floor {
                Floor::At(f) => f,
                Floor::NegInf => unreachable!("NegInf admits everything"),
            };
            return Err(Error::FloorUnderflow {
                requested: e,
                floor,
            });
        }
        Ok(self
            .terms
            .get(&e)
            .cloned()
            .unwrap_or_else(|| TensorField::zeros(self.core.clone(), self.rank)))
    }

    /// Add `field · r^e` into the series (dropped silently below the floor).
    pub fn add_term(&mut self, e: i32, field: TensorField) -> Result<()> {
        debug_assert_eq!(field.rank(), self.rank);
        if !self.floor.admits(e) {
            return Ok(());
        }
        match self.terms.remove(&e) {
            Some(prev) => {
                self.terms.insert(e, prev.add(&field)?);
            }
            None => {
                self.terms.insert(e, field);
            }
        }
        Ok(())
    }

    /// Impose a floor: drop everything below `min_e` and mark the series as
    /// truncated there (an already-higher floor is kept).
    pub fn truncate_below(&mut self, min_e: i32) {
        self.floor = self.floor.max(Floor::At(min_e));
        self.terms.retain(|e, _| *e >= min_e);
    }

    /// Forget precision: lower bound stays, stored terms untouched. Only
    /// floors can move up; use this when an exact series enters a context
    /// that must treat it as a truncation.
    pub fn with_floor(mut self, floor: Floor) -> RadialSeries {
        self.floor = self.floor.max(floor);
        let f = self.floor;
        self.terms.retain(|e, _| f.admits(*e));
        self
    }

    /// Remove stored terms that are numerically negligible relative to the
    /// largest coefficient (and all exact zeros). Floors are unchanged.
    /// Drop terms whose coefficient sup-norm is at or below an absolute
    /// threshold — for separating structural content from roundoff when an
    /// external scale (e.g. the size of the terms that were summed) is
    /// known.
    pub fn prune_abs(&mut self, abs_tol: f64) {
        self.terms.retain(|_, c| c.sup_norm() > abs_tol);
    }

    /// Remove the stored terms at the given exponents. Floors are unchanged:
    /// the caller is asserting these coefficients are exact zeros, not that
    /// they are unknown.
    pub fn drop_terms(&mut self, exponents: &[i32]) {
        for e in exponents {
            self.terms.remove(e);
        }
    }

    pub fn prune(&mut self, rel_tol: f64) {
        let scale = self
            .terms
            .values()
            .map(|c| c.sup_norm())
            .fold(0.0f64, f64::max);
        self.terms
            .retain(|_, c| c.sup_norm() > rel_tol * scale && c.sup_norm() > 0.0);
    }

    pub fn add(&self, other: &RadialSeries) -> Result<RadialSeries> {
        let mut out = self.clone();
        out.floor = self.floor.max(other.floor);
        let f = out.floor;
        out.terms.retain(|e, _| f.admits(*e));
        for (e, c) in &other.terms {
            if f.admits(*e) {
                out.add_term(*e, c.clone())?;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RadialSeries) -> Result<RadialSeries> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> RadialSeries {
        let mut out = self.clone();
        for t in out.terms.values_mut() {
            *t = t.scale(c);
        }
        out
    }

    /// Multiply by `r^k`.
    pub fn shift(&self, k: i32) -> RadialSeries {
        let mut out = RadialSeries {
            core: self.core.clone(),
            rank: self.rank,
            terms: BTreeMap::new(),
            floor: self.floor.shifted(k),
        };
        for (e, c) in &self.terms {
            out.terms.insert(e + k, c.clone());
        }
        out
    }

    /// Termwise tensor product with contractions, as in
    /// `TensorField::product_contract`. The result's floor accounts for
    /// cross terms against each factor's unknown remainder.
    pub fn mul(&self, other: &RadialSeries, pairs: &[(usize, usize)]) -> Result<RadialSeries> {
        let mut floor = Floor::NegInf;
        if let (Some(me), Floor::At(fb)) = (self.max_exponent(), other.floor) {
            floor = floor.max(Floor::At(me + fb));
        }
        if let (Some(me), Floor::At(fa)) = (other.max_exponent(), self.floor) {
            floor = floor.max(Floor::At(me + fa));
        }
        if let (Floor::At(fa), Floor::At(fb)) = (self.floor, other.floor) {
            floor = floor.max(Floor::At(fa + fb));
        }

        // Determine output rank from a probe product, or compute directly.
        let mut out: Option<RadialSeries> = None;
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if !floor.admits(e) {
                    continue;
                }
                let prod = ca.product_contract(cb, pairs)?;
                let out_ref = out.get_or_insert_with(|| RadialSeries {
                    core: self.core.clone(),
                    rank: prod.rank(),
                    terms: BTreeMap::new(),
                    floor,
                });
                out_ref.add_term(e, prod)?;
            }
        }
        Ok(out.unwrap_or_else(|| {
            // No surviving terms; infer the output rank without data.
            let rank = product_rank(self.rank, other.rank, pairs);
            RadialSeries {
                core: self.core.clone(),
                rank,
                terms: BTreeMap::new(),
                floor,
            }
        }))
    }

    /// `d/dr`: each term `c · r^e` maps to `e·c · r^{e−1}`; the constant
    /// term vanishes identically.
    pub fn radial_derivative(&self) -> RadialSeries {
        let mut out = RadialSeries {
            core: self.core.clone(),
            rank: self.rank,
            terms: BTreeMap::new(),
            floor: self.floor.shifted(-1),
        };
        for (e, c) in &self.terms {
            if *e == 0 {
                continue;
            }
            out.terms.insert(e - 1, c.scale(*e as f64));
        }
        out
    }

    /// Apply a tensor operation to every coefficient.
    pub fn map_terms(
        &self,
        rank: Rank,
        mut f: impl FnMut(i32, &TensorField) -> Result<TensorField>,
    ) -> Result<RadialSeries> {
        let mut out = RadialSeries {
            core: self.core.clone(),
            rank,
            terms: BTreeMap::new(),
            floor: self.floor,
        };
        for (e, c) in &self.terms {
            let v = f(*e, c)?;
            debug_assert_eq!(v.rank(), rank);
            out.terms.insert(*e, v);
        }
        Ok(out)
    }

    /// Sum the stored terms at a concrete radius.
    pub fn eval(&self, r: f64) -> TensorField {
        let mut acc = TensorField::zeros(self.core.clone(), self.rank);
        for (e, c) in &self.terms {
            let w = r.powi(*e);
            acc = acc.add_scaled(w, c).expect("shape-compatible term");
        }
        acc
    }

    /// Largest exponent whose coefficient is non-negligible relative to the
    /// largest coefficient overall.
    pub fn leading_nonzero(&self, rel_tol: f64) -> Option<(i32, f64)> {
        let scale = self
            .terms
            .values()
            .map(|c| c.sup_norm())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            return None;
        }
        self.terms
            .iter()
            .rev()
            .find(|(_, c)| c.sup_norm() > rel_tol * scale)
            .map(|(e, c)| (*e, c.sup_norm()))
    }

    /// Sup norm over all stored coefficients.
    pub fn sup_norm(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.sup_norm())
            .fold(0.0f64, f64::max)
    }

    /// Inverse of a metric-valued series whose leading term is `P · r^2`
    /// with `P` pointwise invertible, computed as a Neumann series down to
    /// `min_exponent`. The result is marked truncated at `min_exponent`
    /// (the expansion does not terminate in general) and additionally at
    /// `floor − 4` when the input itself is truncated.
    pub fn metric_inverse(&self, min_exponent: i32, context: &'static str) -> Result<RadialSeries> {
        if self.rank != Rank::METRIC {
            return Err(Error::RankMismatch {
                op: "metric_inverse",
                expected: "(0,2)".to_string(),
                found: format!("{}", self.rank),
            });
        }
        let p = match self.term(2) {
            Some(p) => p.clone(),
            None => {
                return Err(Error::Invalid {
                    context,
                    message: "series has no r^2 leading term to invert around".to_string(),
                })
            }
        };
        if let Some(me) = self.max_exponent() {
            if me > 2 {
                return Err(Error::Invalid {
                    context,
                    message: format!("series has terms above r^2 (max exponent {me})"),
                });
            }
        }
        let pinv = p.inverse_metric(context)?;

        // M = P^{-1} T with T the sub-leading tail, as a (1,1)-valued series
        // carrying the r^{-2} from the leading factor.
        let mut m = RadialSeries::zero(self.core.clone(), Rank::new(1, 1));
        m.floor = self.floor.shifted(-2);
        for (e, c) in &self.terms {
            if *e == 2 {
                continue;
            }
            m.terms.insert(e - 2, pinv.product_contract(c, &[(1, 0)])?);
        }

        // Geometric series sum_k (-M)^k, truncated so the trailing
        // multiplication by P^{-1} r^{-2} reaches min_exponent.
        let id_comps: Vec<f64> = {
            let n = self.core.dim;
            let mut v = vec![0.0; n * n];
            for i in 0..n {
                v[i * n + i] = 1.0;
            }
            v
        };
        let identity = TensorField::constant(self.core.clone(), Rank::new(1, 1), &id_comps);
        let mut sum = RadialSeries::single(0, identity.clone());
        let mut acc = RadialSeries::single(0, identity);
        let inner_min = min_exponent + 2;
        let neg_m = m.scale(-1.0);
        loop {
            acc = acc.mul(&neg_m, &[(1, 0)])?;
            acc.truncate_below(inner_min);
            acc.prune(0.0);
            if acc.is_empty() {
                break;
            }
            sum = sum.add(&acc)?;
        }

        // H^{-1} = (Σ (-M)^k) P^{-1} r^{-2}.
        let pinv_series = RadialSeries::single(-2, pinv);
        let mut out = sum.mul(&pinv_series, &[(1, 0)])?;
        if self.floor == Floor::NegInf && m.is_empty() {
            // Pure cone metric: the Neumann series terminated after the
            // identity term and the inverse is exact.
            out.floor = Floor::NegInf;
        } else {
            out.truncate_below(min_exponent);
            if self.floor != Floor::NegInf {
                out.floor = out.floor.max(self.floor.shifted(-4));
                let f = out.floor;
                out.terms.retain(|e, _| f.admits(*e));
            }
        }
        Ok(out)
    }
}

/// Rank of `a ⊗ b` contracted over `pairs`, mirroring
/// `TensorField::product_contract`.
fn product_rank(a: Rank, b: Rank, pairs: &[(usize, usize)]) -> Rank {
    let up_contracted_a = pairs.iter().filter(|(sa, _)| a.is_upper(*sa)).count();
    let up_contracted_b = pairs.iter().filter(|(_, sb)| b.is_upper(*sb)).count();
    Rank::new(
        a.up + b.up - up_contracted_a - up_contracted_b,
        a.down + b.down - (pairs.len() - up_contracted_a) - (pairs.len() - up_contracted_b),
    )
}
