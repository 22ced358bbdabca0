//! Artifact formats: coefficient documents, verification reports, CSV
//! tables, and resumable integration snapshots.
//!
//! Every JSON artifact has a typed document struct with a fixed field
//! order, and floats are printed as the shortest decimal that parses back
//! to the same bits (the standard library's `Display` and `serde_json`
//! both guarantee this). Parsing a document we emitted and re-serializing
//! it therefore reproduces the bytes exactly — the determinism contract
//! the test suite pins.
//!
//! Tensor layout: on a homogeneous (constant-frame) link a rank-(0,2)
//! coefficient is one row-major `n×n` matrix and a scalar is one number.
//! On a grid link the same data is wrapped in nested arrays over the grid
//! axes, first axis outermost, with the matrix (or number) at each grid
//! point innermost.
//!
//! CSV tables use a header row, `,` separators, `.` decimal points, and LF
//! line endings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expand::{ExpansionCoefficients, SolitonMode};
use crate::link::{build_link, LinkCore, LinkDescriptor, LinkManifold};
use crate::ode::{MonitorSample, RadialState};
use crate::tensor::{Rank, TensorField};

fn finite_number(v: f64, what: &'static str) -> Result<Value> {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .ok_or_else(|| Error::Invalid {
            context: "json export",
            message: format!("{what} is not a finite number: {v}"),
        })
}

fn value_as_f64(v: &Value, what: &'static str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Invalid {
        context: "json import",
        message: format!("expected a number for {what}, found {v}"),
    })
}

fn matrix_at(t: &TensorField, p: usize) -> Result<Value> {
    let n = t.dim();
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            row.push(finite_number(t.get(&[j, k], p), "tensor component")?);
        }
        rows.push(Value::Array(row));
    }
    Ok(Value::Array(rows))
}

fn scalar_at(t: &TensorField, p: usize) -> Result<Value> {
    finite_number(t.get(&[], p), "scalar value")
}

/// Wrap per-point leaves in nested arrays over the grid axes (first axis
/// outermost); on a constant-frame link the single point's leaf stands
/// alone.
fn field_to_value(
    t: &TensorField,
    leaf: &dyn Fn(&TensorField, usize) -> Result<Value>,
) -> Result<Value> {
    match t.core().grid() {
        None => leaf(t, 0),
        Some(grid) => {
            fn build(
                t: &TensorField,
                grid: &crate::grid::Grid,
                leaf: &dyn Fn(&TensorField, usize) -> Result<Value>,
                idx: &mut Vec<usize>,
            ) -> Result<Value> {
                let axis = idx.len();
                if axis == grid.dim() {
                    return leaf(t, grid.index(idx));
                }
                let mut out = Vec::with_capacity(grid.shape()[axis]);
                for i in 0..grid.shape()[axis] {
                    idx.push(i);
                    out.push(build(t, grid, leaf, idx)?);
                    idx.pop();
                }
                Ok(Value::Array(out))
            }
            build(t, grid, leaf, &mut Vec::new())
        }
    }
}

fn tensor_to_value(t: &TensorField) -> Result<Value> {
    field_to_value(t, &matrix_at)
}

fn scalar_to_value(t: &TensorField) -> Result<Value> {
    field_to_value(t, &scalar_at)
}

fn read_matrix(t: &mut TensorField, p: usize, v: &Value) -> Result<()> {
    let n = t.dim();
    let rows = v.as_array().filter(|r| r.len() == n).ok_or_else(|| Error::Invalid {
        context: "json import",
        message: format!("expected a {n}×{n} matrix"),
    })?;
    for (j, row) in rows.iter().enumerate() {
        let cols = row.as_array().filter(|c| c.len() == n).ok_or_else(|| Error::Invalid {
            context: "json import",
            message: format!("expected a {n}×{n} matrix row"),
        })?;
        for (k, cell) in cols.iter().enumerate() {
            t.set(&[j, k], p, value_as_f64(cell, "tensor component")?);
        }
    }
    Ok(())
}

fn read_scalar(t: &mut TensorField, p: usize, v: &Value) -> Result<()> {
    t.set(&[], p, value_as_f64(v, "scalar value")?);
    Ok(())
}

fn value_to_field(
    core: &Arc<LinkCore>,
    rank: Rank,
    v: &Value,
    leaf: &dyn Fn(&mut TensorField, usize, &Value) -> Result<()>,
) -> Result<TensorField> {
    let mut t = TensorField::zeros(core.clone(), rank);
    match core.grid() {
        None => leaf(&mut t, 0, v)?,
        Some(grid) => {
            fn walk(
                t: &mut TensorField,
                grid: &crate::grid::Grid,
                leaf: &dyn Fn(&mut TensorField, usize, &Value) -> Result<()>,
                idx: &mut Vec<usize>,
                v: &Value,
            ) -> Result<()> {
                let axis = idx.len();
                if axis == grid.dim() {
                    return leaf(t, grid.index(idx), v);
                }
                let want = grid.shape()[axis];
                let arr = v.as_array().filter(|a| a.len() == want).ok_or_else(|| {
                    Error::Invalid {
                        context: "json import",
                        message: format!("expected {want} entries along grid axis {}", axis + 1),
                    }
                })?;
                for (i, inner) in arr.iter().enumerate() {
                    idx.push(i);
                    walk(t, grid, leaf, idx, inner)?;
                    idx.pop();
                }
                Ok(())
            }
            walk(&mut t, grid, leaf, &mut Vec::new(), v)?;
        }
    }
    Ok(t)
}

fn value_to_tensor(core: &Arc<LinkCore>, v: &Value) -> Result<TensorField> {
    value_to_field(core, Rank::METRIC, v, &read_matrix)
}

fn value_to_scalar(core: &Arc<LinkCore>, v: &Value) -> Result<TensorField> {
    value_to_field(core, Rank::SCALAR, v, &read_scalar)
}

/// One `h`-series entry: the rank-(0,2) coefficient of `r^{−2i}`.
#[derive(Serialize, Deserialize)]
pub struct TensorEntry {
    pub i: usize,
    pub tensor: Value,
}

/// One `f`-series entry: the scalar coefficient of `r^{−2i}`.
#[derive(Serialize, Deserialize)]
pub struct ScalarEntry {
    pub i: usize,
    pub value: Value,
}

/// The coefficient artifact. The cone-order terms (`r²`·link metric and
/// `−λr²/4`) are implied by `link` and `mode`; entry `i` of `h`/`f` holds
/// the coefficient of `r^{−2i}`, so `f[0]` repeats the gauge constant `f0`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsDoc {
    pub n: usize,
    pub mode: String,
    pub order: usize,
    pub f0: f64,
    pub link: LinkDescriptor,
    pub h: Vec<TensorEntry>,
    pub f: Vec<ScalarEntry>,
}

fn to_pretty_line(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn coefficients_to_json(coeffs: &ExpansionCoefficients) -> Result<String> {
    let link = coeffs.link();
    let mut h = Vec::with_capacity(coeffs.h_coeffs.len());
    for (i, c) in coeffs.h_coeffs.iter().enumerate() {
        h.push(TensorEntry {
            i,
            tensor: tensor_to_value(c)?,
        });
    }
    let mut f = Vec::with_capacity(coeffs.f_coeffs.len());
    for (i, c) in coeffs.f_coeffs.iter().enumerate() {
        f.push(ScalarEntry {
            i,
            value: scalar_to_value(c)?,
        });
    }
    let doc = CoefficientsDoc {
        n: link.dim(),
        mode: coeffs.mode.as_str().to_string(),
        order: coeffs.order,
        f0: coeffs.f0_constant,
        link: link.descriptor().clone(),
        h,
        f,
    };
    to_pretty_line(&doc)
}

pub fn coefficients_from_json(text: &str) -> Result<ExpansionCoefficients> {
    let doc: CoefficientsDoc = serde_json::from_str(text)?;
    let link = build_link(&doc.link)?;
    if doc.n != link.dim() {
        return Err(Error::Invalid {
            context: "coefficient file",
            message: format!(
                "document says n = {}, but the link has dimension {}",
                doc.n,
                link.dim()
            ),
        });
    }
    let mode = SolitonMode::parse(&doc.mode)?;
    let expect = |found: usize, want: usize, what: &str| -> Result<()> {
        if found != want {
            return Err(Error::Invalid {
                context: "coefficient file",
                message: format!("order {} needs {want} {what} entries, found {found}", doc.order),
            });
        }
        Ok(())
    };
    expect(doc.h.len(), doc.order + 1, "h")?;
    expect(doc.f.len(), doc.order + 2, "f")?;
    let core = link.core().clone();
    let mut h_coeffs = Vec::with_capacity(doc.h.len());
    for (i, entry) in doc.h.iter().enumerate() {
        if entry.i != i {
            return Err(Error::Invalid {
                context: "coefficient file",
                message: format!("h entry {i} is labeled i = {}", entry.i),
            });
        }
        h_coeffs.push(value_to_tensor(&core, &entry.tensor)?);
    }
    let mut f_coeffs = Vec::with_capacity(doc.f.len());
    for (i, entry) in doc.f.iter().enumerate() {
        if entry.i != i {
            return Err(Error::Invalid {
                context: "coefficient file",
                message: format!("f entry {i} is labeled i = {}", entry.i),
            });
        }
        f_coeffs.push(value_to_scalar(&core, &entry.value)?);
    }
    // The solve divisors are fixed by mode and order, not free data.
    let lambda = mode.lambda();
    let h_divisors: Vec<f64> = (0..=doc.order).map(|i| lambda * (i as f64 + 1.0)).collect();
    let f_divisors: Vec<f64> = (0..=doc.order)
        .map(|i| 2.0 * (2 * i + 2) as f64 * (2 * i + 3) as f64)
        .collect();
    ExpansionCoefficients::from_parts(
        link, mode, doc.order, doc.f0, h_coeffs, f_coeffs, h_divisors, f_divisors,
    )
}

/// Reduced leading-term record for reports (the full coefficient lives in
/// the coefficient artifact, not the report).
#[derive(Serialize, Deserialize)]
pub struct LeadingTermDoc {
    pub exponent: i32,
    pub sup_norm: f64,
}

/// Report of [`crate::verify::diagnostics_from_expansion`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsDoc {
    pub leading_x: Option<LeadingTermDoc>,
    pub leading_s: Option<LeadingTermDoc>,
    pub radial_identity: Option<crate::verify::IdentityCheck>,
    pub tangential_identity: Option<crate::verify::IdentityCheck>,
    pub slope_fit: Option<crate::verify::DecayFit>,
}

pub fn diagnostics_to_json(report: &crate::verify::DiagnosticsReport) -> Result<String> {
    let reduce = |t: &Option<crate::verify::LeadingTerm>| {
        t.as_ref().map(|l| LeadingTermDoc {
            exponent: l.exponent,
            sup_norm: l.sup_norm,
        })
    };
    to_pretty_line(&DiagnosticsDoc {
        leading_x: reduce(&report.leading_x),
        leading_s: reduce(&report.leading_s),
        radial_identity: report.radial_identity,
        tangential_identity: report.tangential_identity,
        slope_fit: report.slope_fit,
    })
}

/// Report of the two weighted divergence identities on a link: sup norms of
/// both residuals.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BianchiDoc {
    pub residual_first: f64,
    pub residual_second: f64,
}

/// Report of the order-by-order residuals of a solved expansion: the largest
/// surviving coefficient of each equation, relative to the assembly scale.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsDoc {
    pub evolution_rel_sup: f64,
    pub trace_rel_sup: f64,
    pub constraint_rel_sup: f64,
}

pub fn decay_fit_to_json(fit: &crate::verify::DecayFit) -> Result<String> {
    to_pretty_line(fit)
}

/// Resumable integration snapshot.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub r: f64,
    pub mode: String,
    pub f0: f64,
    pub link: LinkDescriptor,
    pub h: Value,
    pub k: Value,
    pub f: Value,
    pub phi: Value,
}

pub fn state_to_json(
    link: &LinkManifold,
    state: &RadialState,
    mode: SolitonMode,
    f0: f64,
) -> Result<String> {
    to_pretty_line(&StateDoc {
        r: state.r,
        mode: mode.as_str().to_string(),
        f0,
        link: link.descriptor().clone(),
        h: tensor_to_value(&state.h)?,
        k: tensor_to_value(&state.k)?,
        f: scalar_to_value(&state.f)?,
        phi: scalar_to_value(&state.phi)?,
    })
}

pub fn state_from_json(text: &str) -> Result<(LinkManifold, RadialState, SolitonMode, f64)> {
    let doc: StateDoc = serde_json::from_str(text)?;
    let link = build_link(&doc.link)?;
    let mode = SolitonMode::parse(&doc.mode)?;
    let core = link.core().clone();
    let state = RadialState {
        r: doc.r,
        h: value_to_tensor(&core, &doc.h)?,
        k: value_to_tensor(&core, &doc.k)?,
        f: value_to_scalar(&core, &doc.f)?,
        phi: value_to_scalar(&core, &doc.phi)?,
    };
    state.validate("state snapshot")?;
    Ok((link, state, mode, doc.f0))
}

/// Trajectory table: `r,constraint_norm,s_norm,deviation`.
pub fn trajectory_csv(samples: &[MonitorSample]) -> String {
    let mut out = String::from("r,constraint_norm,s_norm,deviation\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.r, s.constraint_norm, s.s_value_norm, s.deviation_from_series
        ));
    }
    out
}

/// Decay table: `r,constraint_norm,s_norm`.
pub fn decay_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("r,constraint_norm,s_norm\n");
    for (r, c, s) in rows {
        out.push_str(&format!("{r},{c},{s}\n"));
    }
    out
}
