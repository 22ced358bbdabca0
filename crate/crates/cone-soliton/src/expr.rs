//! Parser and evaluator for metric-entry expressions.
//!
//! Grammar (tightest first): `^` with an integer exponent, unary `-`,
//! `*` `/`, `+` `-`. `^` chains associate to the left, so `2^3^2 = 64`.
//! Atoms are float literals, `pi`, coordinates `x1..x3` (bounded by the
//! link dimension), `sin`/`cos`/`exp` calls and parenthesised expressions.
//!
//! The parser is a plain recursive descent over bytes. It never panics:
//! malformed input yields a `ParseDetail` with the byte offset and the
//! token set that would have been accepted there, and nesting is capped
//! so adversarial input cannot blow the stack.

use crate::error::{Error, ParseDetail, Result};
use crate::tol;

/// Maximum nesting depth of the expression tree.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum UnOp {
    Neg,
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Pi,
    /// Zero-based coordinate index.
    Var(usize),
    Unary(UnOp, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    kind: Kind,
    start: usize,
    end: usize,
}

/// A parsed expression over at most `dim` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dim: usize,
    source: String,
}

impl Expression {
    /// Number of coordinates the expression was parsed against.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Original source text.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate at a point; `point` must supply at least `dim` coordinates.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        debug_assert!(point.len() >= self.dim);
        eval_node(&self.root, point)
    }

    /// True when the expression references no coordinates at all.
    pub fn is_constant(&self) -> bool {
        fn scan(n: &Node) -> bool {
            match &n.kind {
                Kind::Num(_) | Kind::Pi => true,
                Kind::Var(_) => false,
                Kind::Unary(_, a) => scan(a),
                Kind::Bin(_, a, b) => scan(a) && scan(b),
                Kind::Pow(a, _) => scan(a),
            }
        }
        scan(&self.root)
    }
}

fn eval_node(node: &Node, point: &[f64]) -> Result<f64> {
    Ok(match &node.kind {
        Kind::Num(v) => *v,
        Kind::Pi => std::f64::consts::PI,
        Kind::Var(i) => point[*i],
        Kind::Unary(op, a) => {
            let v = eval_node(a, point)?;
            match op {
                UnOp::Neg => -v,
                UnOp::Sin => v.sin(),
                UnOp::Cos => v.cos(),
                UnOp::Exp => v.exp(),
            }
        }
        Kind::Bin(op, a, b) => {
            let x = eval_node(a, point)?;
            let y = eval_node(b, point)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.abs() < tol::EXPR_DIV_EPS {
                        return Err(Error::DivisionByZero {
                            span_start: b.start,
                            span_end: b.end,
                        });
                    }
                    x / y
                }
            }
        }
        Kind::Pow(a, k) => eval_node(a, point)?.powi(*k),
    })
}

/// Parse `src` as an expression over coordinates `x1..x<dim>`.
pub fn parse_expression(src: &str, dim: usize) -> Result<Expression> {
    let mut p = Parser {
        src: src.as_bytes(),
        text: src,
        pos: 0,
        dim,
    };
    let root = p.parse_expr(0)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err(p.pos, &["operator", "end of input"]));
    }
    Ok(Expression {
        root,
        dim,
        source: src.to_string(),
    })
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && matches!(self.src[self.pos], b' ' | b'\t' | b'\n' | b'\r')
        {
            self.pos += 1;
        }
    }

    fn found_at(&self, offset: usize) -> String {
        if offset >= self.text.len() {
            return "end of input".to_string();
        }
        // Render the next full character (the source may contain arbitrary
        // bytes under fuzzing; fall back to a byte escape when not UTF-8
        // aligned).
        match self.text.get(offset..) {
            Some(rest) => match rest.chars().next() {
                Some(c) => format!("'{}'", c.escape_default()),
                None => "end of input".to_string(),
            },
            None => format!("byte 0x{:02x}", self.src[offset]),
        }
    }

    fn err(&self, offset: usize, expected: &[&str]) -> Error {
        Error::Parse(ParseDetail {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found_at(offset),
        })
    }

    fn parse_expr(&mut self, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            return Err(self.err_depth());
        }
        let mut lhs = self.parse_term(depth)?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_term(depth)?;
            let (s, e) = (lhs.start, rhs.end);
            lhs = Node {
                kind: Kind::Bin(op, Box::new(lhs), Box::new(rhs)),
                start: s,
                end: e,
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            return Err(self.err_depth());
        }
        let mut lhs = self.parse_factor(depth)?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_factor(depth)?;
            let (s, e) = (lhs.start, rhs.end);
            lhs = Node {
                kind: Kind::Bin(op, Box::new(lhs), Box::new(rhs)),
                start: s,
                end: e,
            };
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            return Err(self.err_depth());
        }
        self.skip_ws();
        if self.peek() == Some(b'-') {
            let start = self.pos;
            self.pos += 1;
            let inner = self.parse_factor(depth + 1)?;
            let end = inner.end;
            return Ok(Node {
                kind: Kind::Unary(UnOp::Neg, Box::new(inner)),
                start,
                end,
            });
        }
        self.parse_power(depth)
    }

    fn parse_power(&mut self, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            return Err(self.err_depth());
        }
        let mut base = self.parse_atom(depth)?;
        loop {
            self.skip_ws();
            if self.peek() != Some(b'^') {
                break;
            }
            self.pos += 1;
            let k = self.parse_int_exponent()?;
            let (s, e) = (base.start, self.pos);
            base = Node {
                kind: Kind::Pow(Box::new(base), k),
                start: s,
                end: e,
            };
        }
        Ok(base)
    }

    fn parse_int_exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        let negative = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err(self.pos, &["integer exponent"]));
        }
        // Reject "3.5" style exponents explicitly.
        if self.peek() == Some(b'.') {
            return Err(self.err(self.pos, &["integer exponent (no decimal point)"]));
        }
        let text = &self.text[digits_start..self.pos];
        match text.parse::<i32>() {
            Ok(v) => Ok(if negative { -v } else { v }),
            Err(_) => Err(self.err(start, &["integer exponent within i32 range"])),
        }
    }

    fn parse_atom(&mut self, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            return Err(self.err_depth());
        }
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr(depth + 1)?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err(self.pos, &["')'"]));
                }
                self.pos += 1;
                Ok(Node {
                    kind: inner.kind,
                    start,
                    end: self.pos,
                })
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(depth),
            _ => Err(self.err(
                self.pos,
                &["number", "coordinate", "pi", "sin", "cos", "exp", "'('", "'-'"],
            )),
        }
    }

    fn parse_number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            // Only consume as an exponent when digits (with optional sign)
            // follow; otherwise leave the 'e' for identifier handling to
            // reject with a clear message.
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let ds = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == ds {
                self.pos = save;
            }
        }
        let text = &self.text[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) => Ok(Node {
                kind: Kind::Num(v),
                start,
                end: self.pos,
            }),
            Err(_) => Err(self.err(start, &["number"])),
        }
    }

    fn parse_ident(&mut self, depth: usize) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        match name {
            "pi" => Ok(Node {
                kind: Kind::Pi,
                start,
                end: self.pos,
            }),
            "sin" | "cos" | "exp" => {
                let op = match name {
                    "sin" => UnOp::Sin,
                    "cos" => UnOp::Cos,
                    _ => UnOp::Exp,
                };
                self.skip_ws();
                if self.peek() != Some(b'(') {
                    return Err(self.err(self.pos, &["'(' after function name"]));
                }
                self.pos += 1;
                let arg = self.parse_expr(depth + 1)?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err(self.pos, &["')'"]));
                }
                self.pos += 1;
                Ok(Node {
                    kind: Kind::Unary(op, Box::new(arg)),
                    start,
                    end: self.pos,
                })
            }
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(idx) = rest.parse::<usize>() {
                        if idx >= 1 && idx <= self.dim {
                            return Ok(Node {
                                kind: Kind::Var(idx - 1),
                                start,
                                end: self.pos,
                            });
                        }
                        // A syntactically valid coordinate outside the link
                        // dimension is reported at the variable itself.
                        let expected: Vec<String> =
                            (1..=self.dim).map(|i| format!("x{i}")).collect();
                        return Err(Error::Parse(ParseDetail {
                            offset: start,
                            expected,
                            found: format!("'{name}'"),
                        }));
                    }
                }
                Err(Error::Parse(ParseDetail {
                    offset: start,
                    expected: vec![
                        "pi".into(),
                        "sin".into(),
                        "cos".into(),
                        "exp".into(),
                        format!("x1..x{}", self.dim),
                    ],
                    found: format!("'{name}'"),
                }))
            }
        }
    }

    fn err_depth(&self) -> Error {
        Error::Parse(ParseDetail {
            offset: self.pos,
            expected: vec![format!("nesting no deeper than {MAX_DEPTH}")],
            found: "deeper nesting".to_string(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, point: &[f64]) -> f64 {
        parse_expression(src, 3).unwrap().eval(point).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1+2*3", &[0.0; 3]), 7.0);
        assert_eq!(ev("(1+2)*3", &[0.0; 3]), 9.0);
        assert_eq!(ev("2^3^2", &[0.0; 3]), 64.0, "power chains are left-associative");
        assert_eq!(ev("-2^2", &[0.0; 3]), -4.0, "unary minus binds looser than power");
        assert_eq!(ev("2*-3", &[0.0; 3]), -6.0);
        assert_eq!(ev("x1^-1", &[4.0, 0.0, 0.0]), 0.25);
    }

    #[test]
    fn trig_identity_on_samples() {
        let e = parse_expression("sin(x1)^2+cos(x1)^2", 1).unwrap();
        for k in 0..16 {
            let x = k as f64 * 0.39269908169872414;
            let v = e.eval(&[x]).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_and_functions() {
        assert!((ev("sin(pi/2)", &[0.0; 3]) - 1.0).abs() < 1e-15);
        assert!((ev("exp(0)", &[0.0; 3]) - 1.0).abs() < 1e-15);
        assert!((ev("1+0.1*sin(x1)", &[1.3, 0.0, 0.0]) - (1.0 + 0.1 * 1.3f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_coordinate_is_located() {
        let err = parse_expression("sin(x4)", 2).unwrap_err();
        match err {
            Error::Parse(d) => {
                assert_eq!(d.offset, 4);
                assert_eq!(d.expected, vec!["x1".to_string(), "x2".to_string()]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_reports_span() {
        let e = parse_expression("1/(x1-x1)", 1).unwrap();
        match e.eval(&[2.0]).unwrap_err() {
            Error::DivisionByZero {
                span_start,
                span_end,
            } => {
                assert_eq!(span_start, 2);
                assert_eq!(span_end, 9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn junk_rejected_with_offset() {
        for (src, bad_offset) in [("1+", 2usize), ("(1", 2), ("foo", 0), ("1 2", 2), ("2^x1", 2)] {
            match parse_expression(src, 2).unwrap_err() {
                Error::Parse(d) => assert_eq!(d.offset, bad_offset, "source {src:?}"),
                other => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn depth_guard_blocks_deep_nesting() {
        let src = format!("{}1{}", "(".repeat(200), ")".repeat(200));
        assert!(parse_expression(&src, 1).is_err());
        // Just under the cap still parses.
        let src = format!("{}1{}", "(".repeat(15), ")".repeat(15));
        assert!(parse_expression(&src, 1).is_ok());
    }

    #[test]
    fn constant_detection() {
        assert!(parse_expression("2*pi", 2).unwrap().is_constant());
        assert!(!parse_expression("x2", 2).unwrap().is_constant());
    }
}
