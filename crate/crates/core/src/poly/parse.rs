//! Text format for polynomials and systems.
//!
//! ```text
//! # circle meets line
//! variables: x y
//! x^2 + y^2 - 1
//! 3*x - 2*y
//! ```
//!
//! A term is a product of factors separated by `*`; a factor is a decimal
//! real, a complex literal `(a+bi)`, or a variable with an optional
//! `^k` exponent. Terms are joined with `+` and `-`.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Monomial, PolySystem, Polynomial};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A parsed system file.
#[derive(Debug, Clone)]
pub struct SystemFile {
    pub variables: Vec<String>,
    pub system: PolySystem,
}

pub fn parse_polynomial(text: &str, variables: &[String]) -> Result<Polynomial, ParseError> {
    parse_line(text, variables, 1)
}

pub fn parse_system(text: &str) -> Result<SystemFile, ParseError> {
    let mut variables: Option<Vec<String>> = None;
    let mut polys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match &variables {
            None => {
                let rest = line.strip_prefix("variables:").ok_or_else(|| ParseError {
                    line: line_no,
                    column: 1,
                    message: "expected header `variables: <names>`".into(),
                })?;
                let names: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
                if names.is_empty() {
                    return Err(ParseError {
                        line: line_no,
                        column: 1,
                        message: "no variables declared".into(),
                    });
                }
                for (k, name) in names.iter().enumerate() {
                    if !is_identifier(name) {
                        return Err(ParseError {
                            line: line_no,
                            column: 1,
                            message: format!("invalid variable name `{name}`"),
                        });
                    }
                    if names[..k].contains(name) {
                        return Err(ParseError {
                            line: line_no,
                            column: 1,
                            message: format!("variable `{name}` declared twice"),
                        });
                    }
                }
                variables = Some(names);
            }
            Some(names) => polys.push(parse_line(raw, names, line_no)?),
        }
    }
    let variables = variables.ok_or_else(|| ParseError {
        line: 1,
        column: 1,
        message: "missing `variables:` header".into(),
    })?;
    let system = PolySystem::new(polys).map_err(|e| ParseError {
        line: text.lines().count().max(1),
        column: 1,
        message: e.to_string(),
    })?;
    Ok(SystemFile { variables, system })
}

/// Writes a system in the format read by [`parse_system`].
pub fn write_system(variables: &[String], system: &PolySystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "variables: {}", variables.join(" "));
    for p in system.polys() {
        let _ = writeln!(out, "{}", p.display(variables));
    }
    out
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    variables: &'a [String],
}

fn parse_line(text: &str, variables: &[String], line: usize) -> Result<Polynomial, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, line, variables };
    let poly = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected character `{}`", p.src[p.pos] as char)));
    }
    Ok(poly)
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Polynomial, ParseError> {
        let nvars = self.variables.len();
        let mut terms = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(b'-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            None => return Err(self.error("empty polynomial")),
            _ => {}
        }
        loop {
            let (c, m) = self.term()?;
            terms.push((c * sign, m));
            match self.peek() {
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                _ => break,
            }
            self.pos += 1;
        }
        Ok(Polynomial::new(nvars, terms))
    }

    fn term(&mut self) -> Result<(C64, Monomial), ParseError> {
        let mut coeff = C64::new(1.0, 0.0);
        let mut exps = vec![0u32; self.variables.len()];
        loop {
            match self.peek() {
                Some(b'(') => coeff *= self.complex()?,
                Some(c) if c.is_ascii_digit() || c == b'.' => coeff *= self.real()?,
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    let name = self.identifier();
                    let Some(v) = self.variables.iter().position(|n| *n == name) else {
                        self.pos = start;
                        return Err(self.error(format!("unknown variable `{name}`")));
                    };
                    let mut k = 1;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        k = self.exponent()?;
                    }
                    exps[v] += k;
                }
                Some(c) => return Err(self.error(format!("unexpected character `{}`", c as char))),
                None => return Err(self.error("unexpected end of input")),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((coeff, Monomial::new(exps)))
    }

    fn identifier(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn exponent(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a non-negative integer exponent"));
        }
        let digits = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        digits.parse().map_err(|_| {
            self.pos = start;
            self.error("exponent too large")
        })
    }

    /// Unsigned decimal with optional fraction and exponent.
    fn real(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if before == self.pos {
                self.pos = save;
            }
        }
        let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        text.parse().map_err(|_| {
            self.pos = start;
            self.error(format!("malformed number `{text}`"))
        })
    }

    /// `(a+bi)`, `(a-bi)`, `(bi)` or `(a)`.
    fn complex(&mut self) -> Result<C64, ParseError> {
        self.pos += 1;
        let mut re = 0.0;
        let mut im = 0.0;
        let mut sign = 1.0;
        loop {
            match self.peek() {
                Some(b'-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                _ => {}
            }
            let v = if self.peek() == Some(b'i') { 1.0 } else { self.real()? };
            if self.peek() == Some(b'i') {
                self.pos += 1;
                im += sign * v;
            } else {
                re += sign * v;
            }
            sign = 1.0;
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(b'+' | b'-') => {}
                _ => return Err(self.error("malformed complex literal, expected `(a+bi)`")),
            }
        }
        Ok(C64::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn circle_and_line() {
        let v = names(&["x", "y"]);
        let f = parse_polynomial("x^2 + y^2 - 1", &v).unwrap();
        assert_eq!((f.nterms(), f.degree()), (3, 2));
        let g = parse_polynomial("3*x - 2*y", &v).unwrap();
        assert_eq!((g.nterms(), g.degree()), (2, 1));
    }

    #[test]
    fn cancellation_gives_zero() {
        assert!(parse_polynomial("x - x", &names(&["x"])).unwrap().is_zero());
    }

    #[test]
    fn complex_coefficients_and_exponents() {
        let v = names(&["z"]);
        let p = parse_polynomial("(1.5-2i)*z^2 + (i) - 1e-3*z", &v).unwrap();
        let z = C64::new(2.0, 0.0);
        let expect = C64::new(1.5, -2.0) * 4.0 + C64::new(0.0, 1.0) - 2e-3;
        assert!((p.evaluate(&[z]).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn unknown_variable_reports_column() {
        let err = parse_polynomial("x + w", &names(&["x"])).unwrap_err();
        assert_eq!(err.column, 5);
        assert!(err.message.contains("unknown variable"));
    }

    #[test]
    fn syntax_errors() {
        let v = names(&["x"]);
        assert!(parse_polynomial("x +", &v).is_err());
        assert!(parse_polynomial("x^", &v).is_err());
        assert!(parse_polynomial("2 x", &v).is_err());
        assert!(parse_polynomial("(1+2)", &v).is_ok());
        assert!(parse_polynomial("(1+2", &v).is_err());
    }

    #[test]
    fn system_file_with_comments() {
        let text = "# demo\nvariables: x y\n\nx^2 + y^2 - 1\n# the line\n3*x - 2*y\n";
        let file = parse_system(text).unwrap();
        assert_eq!(file.variables, names(&["x", "y"]));
        assert_eq!(file.system.npolys(), 2);
    }

    #[test]
    fn system_errors_carry_line_numbers() {
        let err = parse_system("variables: x y\nx^2 + y\n3*x - 2*q\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse_system("x + y\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(parse_system("variables: x x\nx\n").is_err());
        assert!(parse_system("variables: x\n").is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let text = "variables: a b\n(0.5+1i)*a^3*b - 2*b^2 + 7\na - b\n";
        let file = parse_system(text).unwrap();
        let again = parse_system(&write_system(&file.variables, &file.system)).unwrap();
        assert_eq!(again.system, file.system);
    }
}
