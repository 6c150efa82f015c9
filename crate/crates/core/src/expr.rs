//! A fixed catalog of analytic data functions.
//!
//! An expression is a sum of terms joined by `+`. Each term is a spatial
//! form optionally multiplied by a time modifier written after `@`:
//!
//! ```text
//! const(c)                     c
//! affine(c0, a1, a2, a3)       c0 + a·x
//! monomial(k, i, j, l)         k·x1^i·x2^j·x3^l
//! cosprod(A, k1, k2, k3)       A·cos(k1 x1)·cos(k2 x2)·cos(k3 x3)
//! sinprod(A, k1, k2, k3)       A·Π sin(ki xi), factors with ki = 0 omitted
//!
//! @lin(a, b)                   a + b t
//! @sin(w, f)                   sin(w t + f)
//! @exp(l)                      exp(l t)
//! ```
//!
//! A bare number is shorthand for `const(number)`. Numeric arguments accept
//! products and quotients of literals and `pi`, e.g. `2*pi` or `-pi/2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Space {
    Const(f64),
    Affine(f64, [f64; 3]),
    Monomial(f64, [u32; 3]),
    CosProd(f64, [f64; 3]),
    SinProd(f64, [f64; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Time {
    One,
    Lin(f64, f64),
    Sin(f64, f64),
    Exp(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    space: Space,
    time: Time,
}

/// Value, gradient and Hessian of a spatial factor at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        for i in 0..3 {
            self.grad[i] *= s;
            for j in 0..3 {
                self.hess[i][j] *= s;
            }
        }
        self
    }

    fn add(&mut self, o: &Jet) {
        self.value += o.value;
        for i in 0..3 {
            self.grad[i] += o.grad[i];
            for j in 0..3 {
                self.hess[i][j] += o.hess[i][j];
            }
        }
    }

    pub fn laplacian(&self, dim: usize) -> f64 {
        (0..dim).map(|i| self.hess[i][i]).sum()
    }
}

impl Space {
    fn jet(&self, x: &Point) -> Jet {
        let mut j = Jet::default();
        match *self {
            Space::Const(c) => j.value = c,
            Space::Affine(c0, a) => {
                j.value = c0 + a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
                j.grad = a;
            }
            Space::Monomial(k, pw) => {
                let f = |i: usize, d: u32| -> f64 {
                    let p = pw[i];
                    if d > p {
                        return 0.0;
                    }
                    let mut c = 1.0;
                    for m in 0..d {
                        c *= (p - m) as f64;
                    }
                    c * x[i].powi((p - d) as i32)
                };
                let value_of = |d: [u32; 3]| k * f(0, d[0]) * f(1, d[1]) * f(2, d[2]);
                j.value = value_of([0, 0, 0]);
                for a in 0..3 {
                    let mut d = [0; 3];
                    d[a] = 1;
                    j.grad[a] = value_of(d);
                    for b in 0..3 {
                        let mut d = [0; 3];
                        d[a] += 1;
                        d[b] += 1;
                        j.hess[a][b] = value_of(d);
                    }
                }
            }
            Space::CosProd(amp, k) | Space::SinProd(amp, k) => {
                let is_sin = matches!(self, Space::SinProd(..));
                // per-axis factor and its first two derivatives
                let mut fac = [[1.0, 0.0, 0.0]; 3];
                for i in 0..3 {
                    let a = k[i] * x[i];
                    if is_sin {
                        if k[i] != 0.0 {
                            fac[i] = [a.sin(), k[i] * a.cos(), -k[i] * k[i] * a.sin()];
                        }
                    } else {
                        fac[i] = [a.cos(), -k[i] * a.sin(), -k[i] * k[i] * a.cos()];
                    }
                }
                let value_of = |d: [usize; 3]| amp * fac[0][d[0]] * fac[1][d[1]] * fac[2][d[2]];
                j.value = value_of([0, 0, 0]);
                for a in 0..3 {
                    let mut d = [0; 3];
                    d[a] = 1;
                    j.grad[a] = value_of(d);
                    for b in 0..3 {
                        let mut d = [0; 3];
                        d[a] += 1;
                        d[b] += 1;
                        j.hess[a][b] = value_of(d);
                    }
                }
            }
        }
        j
    }
}

impl Time {
    /// `(value, first derivative)` at `t`.
    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Time::One => (1.0, 0.0),
            Time::Lin(a, b) => (a + b * t, b),
            Time::Sin(w, f) => ((w * t + f).sin(), w * (w * t + f).cos()),
            Time::Exp(l) => ((l * t).exp(), l * (l * t).exp()),
        }
    }
}

/// A parsed scalar expression in `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    terms: Vec<Term>,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let fail = |reason: String| Error::Expression {
            expr: src.to_string(),
            reason,
        };
        let mut terms = Vec::new();
        for piece in split_top_level(src, '+').map_err(&fail)? {
            let piece = piece.trim();
            if piece.is_empty() {
                return Err(fail("empty term".into()));
            }
            terms.push(parse_term(piece).map_err(&fail)?);
        }
        Ok(Self {
            source: src.trim().to_string(),
            terms,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            source: format!("{c:?}"),
            terms: vec![Term {
                space: Space::Const(c),
                time: Time::One,
            }],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the expression is the constant zero by construction.
    pub fn is_trivially_zero(&self) -> bool {
        self.terms.iter().all(|t| match t.space {
            Space::Const(c) | Space::Monomial(c, _) | Space::CosProd(c, _) | Space::SinProd(c, _) => c == 0.0,
            Space::Affine(c0, a) => c0 == 0.0 && a == [0.0; 3],
        })
    }

    /// Spatial jet of `f(t, ·)` (`time_derivative = false`) or of `∂t f(t, ·)`.
    pub fn jet(&self, t: f64, x: &Point, time_derivative: bool) -> Jet {
        let mut out = Jet::default();
        for term in &self.terms {
            let (v, dv) = term.time.eval(t);
            let s = if time_derivative { dv } else { v };
            if s != 0.0 {
                out.add(&term.space.jet(x).scaled(s));
            }
        }
        out
    }

    pub fn value(&self, t: f64, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let (v, _) = term.time.eval(t);
                if v == 0.0 {
                    0.0
                } else {
                    v * term.space.jet(x).value
                }
            })
            .sum()
    }

    pub fn grad(&self, t: f64, x: &Point) -> [f64; 3] {
        self.jet(t, x, false).grad
    }

    pub fn time_derivative(&self, t: f64, x: &Point) -> f64 {
        self.jet(t, x, true).value
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn split_top_level(s: &str, sep: char) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced ')'".into());
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced '('".into());
    }
    out.push(&s[start..]);
    Ok(out)
}

fn parse_call(s: &str) -> std::result::Result<(&str, Vec<f64>), String> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| format!("expected a call like name(...), got {s:?}"))?;
    if !s.ends_with(')') {
        return Err(format!("missing ')' in {s:?}"));
    }
    let name = s[..open].trim();
    let inner = &s[open + 1..s.len() - 1];
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(parse_number).collect::<std::result::Result<_, _>>()?
    };
    Ok((name, args))
}

/// A literal, `pi`, or a product/quotient of those, with optional sign.
fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s),
    };
    let mut value = 1.0;
    let mut divide = false;
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        let v = match tok {
            "pi" => std::f64::consts::PI,
            _ => tok.parse::<f64>().map_err(|_| format!("bad number {tok:?}"))?,
        };
        if divide {
            value /= v;
        } else {
            value *= v;
        }
        if end == rest.len() {
            break;
        }
        divide = rest.as_bytes()[end] == b'/';
        rest = &rest[end + 1..];
    }
    Ok(sign * value)
}

fn arity(name: &str, args: &[f64], n: usize) -> std::result::Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!("{name} takes {n} arguments, got {}", args.len()))
    }
}

fn parse_term(s: &str) -> std::result::Result<Term, String> {
    let (space_src, time_src) = match s.split_once('@') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let space = if !space_src.contains('(') {
        Space::Const(parse_number(space_src)?)
    } else {
        let (name, a) = parse_call(space_src)?;
        match name {
            "const" => {
                arity(name, &a, 1)?;
                Space::Const(a[0])
            }
            "affine" => {
                arity(name, &a, 4)?;
                Space::Affine(a[0], [a[1], a[2], a[3]])
            }
            "monomial" => {
                arity(name, &a, 4)?;
                let mut pw = [0u32; 3];
                for (p, &v) in pw.iter_mut().zip(&a[1..]) {
                    if v < 0.0 || v.fract() != 0.0 || v > 16.0 {
                        return Err(format!("monomial powers must be integers in 0..=16, got {v}"));
                    }
                    *p = v as u32;
                }
                Space::Monomial(a[0], pw)
            }
            "cosprod" => {
                arity(name, &a, 4)?;
                Space::CosProd(a[0], [a[1], a[2], a[3]])
            }
            "sinprod" => {
                arity(name, &a, 4)?;
                Space::SinProd(a[0], [a[1], a[2], a[3]])
            }
            other => return Err(format!("unknown spatial form {other:?}")),
        }
    };
    let time = match time_src {
        None => Time::One,
        Some(src) => {
            let (name, a) = parse_call(src)?;
            match name {
                "lin" => {
                    arity(name, &a, 2)?;
                    Time::Lin(a[0], a[1])
                }
                "sin" => {
                    arity(name, &a, 2)?;
                    Time::Sin(a[0], a[1])
                }
                "exp" => {
                    arity(name, &a, 1)?;
                    Time::Exp(a[0])
                }
                other => return Err(format!("unknown time modifier {other:?}")),
            }
        }
    };
    if let Space::Const(c) | Space::Monomial(c, _) | Space::CosProd(c, _) | Space::SinProd(c, _) = space {
        if !c.is_finite() {
            return Err("non-finite coefficient".into());
        }
    }
    Ok(Term { space, time })
}

/// One expression per vector component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorExpr(pub Vec<Expr>);

impl VectorExpr {
    pub fn zero(dim: usize) -> Self {
        Self(vec![Expr::zero(); dim])
    }

    pub fn parse<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        parts.iter().map(|s| Expr::parse(s.as_ref())).collect::<Result<_>>().map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self, t: f64, x: &Point) -> Point {
        let mut out = [0.0; 3];
        for (o, e) in out.iter_mut().zip(&self.0) {
            *o = e.value(t, x);
        }
        out
    }

    pub fn is_trivially_zero(&self) -> bool {
        self.0.iter().all(Expr::is_trivially_zero)
    }
}
