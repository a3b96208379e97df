//! INI-style problem files.
//!
//! ```text
//! [problem]
//! kind = linear-ode
//! n = 1
//! m = 1
//!
//! [operator]
//! g[2,1] = "1"
//! g[1,1] = "-3"
//! g[0,1] = "2"
//!
//! [Q1]
//! b[1,1] = "1"
//! b[0,1] = "-1"
//!
//! [Q2]
//! b[1,1] = "1"
//! b[0,1] = "-2"
//!
//! [solve]
//! interval = "-1,1"
//! steps = 1024
//! constant = "1"
//! ```
//!
//! System kinds use `f[p,q,k,h]` in `[operator]` and `a[p,q,k,h]` in
//! `[N1]` and `[N2]`. Lines starting with `#` or `;` are comments.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::conditions::{FactorizationCandidate, Operator, Shape, Template};
use crate::expr::{parse_expr, Expr, VarId};
use crate::jet::{slot_count, DerivIndex};
use crate::operator::{DiffOperator, MatrixOperator, OperatorError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("ParseError: line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("ValidationError: {0}")]
    Validation(String),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> ProblemError {
    ProblemError::Parse { line, column, message: message.into() }
}

fn invalid(message: impl Into<String>) -> ProblemError {
    ProblemError::Validation(message.into())
}

/// Coefficient position: entry `(p, q)` of the grid, slot `D(k, h)`.
/// Scalar kinds always have `p = q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub h: usize,
}

pub type Coefficients = BTreeMap<Key, Expr>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveSection {
    pub interval: Option<(f64, f64)>,
    pub steps: Option<usize>,
    pub constant: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub kind: Template,
    pub n: usize,
    pub m: usize,
    pub operator: Coefficients,
    /// Empty, or the two factors `Q1, Q2` (`N1, N2`), leftmost first.
    pub factors: Vec<Coefficients>,
    pub solve: SolveSection,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn unquote(raw: &str, line: usize, col: usize) -> Result<String, ProblemError> {
    let Some(rest) = raw.strip_prefix('"') else {
        return Ok(raw.to_string());
    };
    match rest.find('"') {
        Some(end) if rest[end + 1..].trim().is_empty() => Ok(rest[..end].to_string()),
        Some(end) => Err(parse_err(line, col + end + 2, "text after closing quote")),
        None => Err(parse_err(line, col, "unterminated quote")),
    }
}

fn sections(text: &str) -> Result<Vec<Section>, ProblemError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let indent = raw.len() - raw.trim_start().len();
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, indent + body.len(), "expected ']'"))?
                .trim();
            if name.is_empty() {
                return Err(parse_err(line, indent + 2, "empty section name"));
            }
            if out.iter().any(|s| s.name == name) {
                return Err(parse_err(line, indent + 1, format!("duplicate section [{name}]")));
            }
            out.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(parse_err(line, indent + 1, "expected 'key = value' or '[section]'"));
        };
        let Some(section) = out.last_mut() else {
            return Err(parse_err(line, indent + 1, "key outside of any section"));
        };
        let key = body[..eq].trim();
        if key.is_empty() {
            return Err(parse_err(line, indent + 1, "empty key"));
        }
        let after = &body[eq + 1..];
        let value_col = indent + eq + 2 + (after.len() - after.trim_start().len());
        let value = unquote(after.trim(), line, value_col)?;
        // the column of the first character inside the quotes
        let value_col = if after.trim().starts_with('"') { value_col + 1 } else { value_col };
        section.entries.push(Entry { key: key.to_string(), value, line, key_col: indent + 1, value_col });
    }
    Ok(out)
}

/// `g[2,1]` gives `("g", [2, 1])`.
fn indexed(e: &Entry) -> Result<(&str, Vec<usize>), ProblemError> {
    let bad = || parse_err(e.line, e.key_col, format!("malformed coefficient key '{}'", e.key));
    let open = e.key.find('[').ok_or_else(bad)?;
    let inner = e.key[open + 1..].strip_suffix(']').ok_or_else(bad)?;
    let idx = inner.split(',').map(|s| s.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
    Ok((e.key[..open].trim(), idx))
}

impl ProblemFile {
    pub fn is_matrix(&self) -> bool {
        self.kind.shape == Shape::Matrix
    }

    fn names(&self) -> (&'static str, &'static str, [&'static str; 2]) {
        if self.is_matrix() {
            ("f", "a", ["N1", "N2"])
        } else {
            ("g", "b", ["Q1", "Q2"])
        }
    }

    fn entry_op(&self, coeffs: &Coefficients, p: usize, q: usize) -> Result<DiffOperator, OperatorError> {
        let mut op = DiffOperator::new(self.n, self.m, self.kind.linearity);
        for (key, c) in coeffs.range(Key { p, q, k: 0, h: 0 }..=Key { p, q, k: usize::MAX, h: usize::MAX }) {
            op.add(DerivIndex::new(self.n, key.k, key.h)?, c.clone())?;
        }
        Ok(op)
    }

    fn build(&self, coeffs: &Coefficients) -> Result<Operator, OperatorError> {
        if !self.is_matrix() {
            return Ok(Operator::Scalar(self.entry_op(coeffs, 1, 1)?));
        }
        let rows = (1..=self.m)
            .map(|p| (1..=self.m).map(|q| self.entry_op(coeffs, p, q)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Operator::Matrix(MatrixOperator::new(rows)?))
    }

    pub fn operator(&self) -> Result<Operator, OperatorError> {
        self.build(&self.operator)
    }

    pub fn candidate(&self) -> Result<Option<FactorizationCandidate>, OperatorError> {
        if self.factors.is_empty() {
            return Ok(None);
        }
        let ops = self.factors.iter().map(|f| self.build(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(Some(if self.is_matrix() {
            FactorizationCandidate::Matrix(
                ops.into_iter()
                    .map(|o| match o {
                        Operator::Matrix(m) => m,
                        Operator::Scalar(_) => unreachable!("matrix kind"),
                    })
                    .collect(),
            )
        } else {
            FactorizationCandidate::Scalar(
                ops.into_iter()
                    .map(|o| match o {
                        Operator::Scalar(s) => s,
                        Operator::Matrix(_) => unreachable!("scalar kind"),
                    })
                    .collect(),
            )
        }))
    }

    fn coefficients(&self, sec: &Section, symbol: &str, max_order: usize) -> Result<Coefficients, ProblemError> {
        let mut out = Coefficients::new();
        for e in &sec.entries {
            let (name, idx) = indexed(e)?;
            if name != symbol {
                return Err(invalid(format!(
                    "line {}: key '{}' is not legal in [{}] for kind {}; expected {symbol}[...]",
                    e.line, e.key, sec.name, self.kind
                )));
            }
            let key = match (self.is_matrix(), idx.as_slice()) {
                (false, &[k, h]) => Key { p: 1, q: 1, k, h },
                (true, &[p, q, k, h]) => Key { p, q, k, h },
                _ => {
                    let want = if self.is_matrix() { 4 } else { 2 };
                    return Err(invalid(format!("line {}: '{}' needs {want} indices", e.line, e.key)));
                }
            };
            self.check_key(&key, e, max_order)?;
            let expr = parse_expr(&e.value)
                .map_err(|pe| parse_err(e.line, e.value_col + pe.column.saturating_sub(1), pe.message))?
                .simplify();
            self.check_vars(&expr, e)?;
            if out.insert(key, expr).is_some() {
                return Err(invalid(format!("line {}: duplicate key '{}'", e.line, e.key)));
            }
        }
        Ok(out)
    }

    fn check_key(&self, key: &Key, e: &Entry, max_order: usize) -> Result<(), ProblemError> {
        if key.p == 0 || key.q == 0 || key.p > self.m || key.q > self.m {
            return Err(invalid(format!("line {}: '{}' has an entry outside 1..={}", e.line, e.key, self.m)));
        }
        if key.k > max_order {
            return Err(invalid(format!("line {}: '{}' has order {} above {max_order}", e.line, e.key, key.k)));
        }
        let slots = slot_count(self.n, key.k).map_err(|err| invalid(err.to_string()))?;
        if key.h == 0 || key.h > slots {
            return Err(invalid(format!(
                "line {}: '{}' has slot {} outside 1..={slots} for n = {}, k = {}",
                e.line, e.key, key.h, self.n, key.k
            )));
        }
        Ok(())
    }

    fn check_vars(&self, expr: &Expr, e: &Entry) -> Result<(), ProblemError> {
        for v in expr.variables() {
            let why = match v {
                VarId::Indep(i) if i > self.n => format!("x{i} with n = {}", self.n),
                VarId::Dep(_) if self.kind.is_linear() => format!("dependent variable in a {} coefficient", self.kind),
                VarId::Dep(j) if j > self.m => format!("u{j} with m = {}", self.m),
                VarId::Jet(..) => "a jet variable".to_string(),
                _ => continue,
            };
            return Err(invalid(format!("line {}: '{}' uses {why}", e.line, e.key)));
        }
        Ok(())
    }

    fn check_leading(&self, coeffs: &Coefficients, order: usize, what: &str) -> Result<(), ProblemError> {
        for p in 1..=self.m {
            let present = coeffs.iter().any(|(key, c)| key.p == p && key.q == p && key.k == order && !c.is_zero());
            if !present {
                let sym = if self.is_matrix() { format!("[{p},{p},{order},h]") } else { format!("[{order},h]") };
                return Err(invalid(format!("{what} is missing its leading coefficient {sym}")));
            }
        }
        Ok(())
    }
}

fn header_value<T: std::str::FromStr>(e: &Entry) -> Result<T, ProblemError> {
    e.value.trim().parse().map_err(|_| parse_err(e.line, e.value_col, format!("bad value for '{}'", e.key)))
}

fn parse_solve(sec: &Section) -> Result<SolveSection, ProblemError> {
    let mut solve = SolveSection::default();
    for e in &sec.entries {
        match e.key.as_str() {
            "interval" => solve.interval = Some(parse_interval(&e.value).map_err(|m| parse_err(e.line, e.value_col, m))?),
            "steps" => solve.steps = Some(header_value(e)?),
            "constant" => {
                let c = parse_expr(&e.value)
                    .map_err(|pe| parse_err(e.line, e.value_col + pe.column.saturating_sub(1), pe.message))?
                    .simplify();
                let c = c.as_const().ok_or_else(|| invalid(format!("line {}: constant must be a rational number", e.line)))?;
                solve.constant = Some(c.clone());
            }
            other => return Err(invalid(format!("line {}: unknown key '{other}' in [solve]", e.line))),
        }
    }
    Ok(solve)
}

/// `a,b` with `a < b`.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("interval '{s}' must be 'a,b'"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad interval end '{a}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad interval end '{b}'"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("interval '{s}' needs finite a < b"));
    }
    Ok((a, b))
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    let secs = sections(text)?;
    let header = secs
        .iter()
        .find(|s| s.name == "problem")
        .ok_or_else(|| invalid("missing [problem] section"))?;
    let (mut kind, mut n, mut m) = (None, None, None);
    for e in &header.entries {
        match e.key.as_str() {
            "kind" => {
                kind = Some(Template::from_name(e.value.trim()).ok_or_else(|| {
                    parse_err(e.line, e.value_col, format!("unknown kind '{}'", e.value.trim()))
                })?)
            }
            "n" => n = Some(header_value::<usize>(e)?),
            "m" => m = Some(header_value::<usize>(e)?),
            other => return Err(invalid(format!("line {}: unknown key '{other}' in [problem]", e.line))),
        }
    }
    let kind: Template = kind.ok_or_else(|| invalid(format!("line {}: [problem] needs 'kind'", header.line)))?;
    let n = n.unwrap_or(kind.n());
    if n != kind.n() {
        return Err(invalid(format!("kind {kind} needs n = {}, got {n}", kind.n())));
    }
    let m = match (kind.shape, m) {
        (Shape::Scalar, None | Some(1)) => 1,
        (Shape::Scalar, Some(m)) => return Err(invalid(format!("kind {kind} needs m = 1, got {m}"))),
        (Shape::Matrix, Some(m)) if m >= 1 => m,
        (Shape::Matrix, _) => return Err(invalid(format!("kind {kind} needs m >= 1"))),
    };
    let mut pf = ProblemFile {
        kind,
        n,
        m,
        operator: Coefficients::new(),
        factors: Vec::new(),
        solve: SolveSection::default(),
    };
    let (op_sym, factor_sym, factor_names) = pf.names();
    let mut factor_secs: [Option<&Section>; 2] = [None, None];
    let mut op_sec = None;
    for s in &secs {
        match s.name.as_str() {
            "problem" => {}
            "operator" => op_sec = Some(s),
            "solve" => pf.solve = parse_solve(s)?,
            name => match factor_names.iter().position(|f| *f == name) {
                Some(i) => factor_secs[i] = Some(s),
                None => {
                    return Err(invalid(format!("line {}: section [{name}] is not legal for kind {kind}", s.line)));
                }
            },
        }
    }
    let op_sec = op_sec.ok_or_else(|| invalid("missing [operator] section"))?;
    pf.operator = pf.coefficients(op_sec, op_sym, 2)?;
    pf.check_leading(&pf.operator, 2, "[operator]")?;
    match factor_secs {
        [None, None] => {}
        [Some(a), Some(b)] => {
            for (s, name) in [a, b].into_iter().zip(factor_names) {
                let c = pf.coefficients(s, factor_sym, 1)?;
                pf.check_leading(&c, 1, &format!("[{name}]"))?;
                pf.factors.push(c);
            }
        }
        _ => {
            return Err(invalid(format!(
                "a candidate needs both [{}] and [{}]",
                factor_names[0], factor_names[1]
            )))
        }
    }
    Ok(pf)
}

fn write_coeffs(f: &mut fmt::Formatter<'_>, sym: &str, matrix: bool, coeffs: &Coefficients) -> fmt::Result {
    // highest order first within each entry
    let mut keys: Vec<&Key> = coeffs.keys().collect();
    keys.sort_by_key(|k| (k.p, k.q, std::cmp::Reverse(k.k), k.h));
    for key in keys {
        let c = &coeffs[key];
        if matrix {
            writeln!(f, "{sym}[{},{},{},{}] = \"{c}\"", key.p, key.q, key.k, key.h)?;
        } else {
            writeln!(f, "{sym}[{},{}] = \"{c}\"", key.k, key.h)?;
        }
    }
    Ok(())
}

/// Canonical text; `parse_problem` reads it back to an equal value.
impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op_sym, factor_sym, factor_names) = self.names();
        writeln!(f, "[problem]\nkind = {}\nn = {}\nm = {}", self.kind, self.n, self.m)?;
        writeln!(f, "\n[operator]")?;
        write_coeffs(f, op_sym, self.is_matrix(), &self.operator)?;
        for (c, name) in self.factors.iter().zip(factor_names) {
            writeln!(f, "\n[{name}]")?;
            write_coeffs(f, factor_sym, self.is_matrix(), c)?;
        }
        let s = &self.solve;
        if s.interval.is_some() || s.steps.is_some() || s.constant.is_some() {
            writeln!(f, "\n[solve]")?;
            if let Some((a, b)) = s.interval {
                // `{:?}` prints the shortest text that reads back exactly
                writeln!(f, "interval = \"{a:?},{b:?}\"")?;
            }
            if let Some(n) = s.steps {
                writeln!(f, "steps = {n}")?;
            }
            if let Some(c) = &s.constant {
                writeln!(f, "constant = \"{}\"", Expr::constant(c.clone()))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nkind = linear-ode\nn = 1\nm = 1\n\n[operator]\ng[2,1] = \"1\"\ng[1,1] = \"-3\"\ng[0,1] = \"2\"\n";

    #[test]
    fn minimal_round_trip() {
        let p = parse_problem(MINIMAL).unwrap();
        assert_eq!((p.kind.name().as_str(), p.n, p.m), ("linear-ode", 1, 1));
        assert_eq!(p.operator.len(), 3);
        assert_eq!(p.to_string(), MINIMAL);
        assert_eq!(parse_problem(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn validation_errors() {
        let linear_u = MINIMAL.replace("g[1,1] = \"-3\"", "g[1,1] = \"u\"");
        assert!(matches!(parse_problem(&linear_u), Err(ProblemError::Validation(_))));
        let pde = "[problem]\nkind = linear-pde2\nn = 2\n[operator]\ng[2,1] = \"1\"\ng[2,5] = \"1\"\n";
        let err = parse_problem(pde).unwrap_err();
        assert!(matches!(&err, ProblemError::Validation(m) if m.contains("outside 1..=4")), "{err}");
        let no_lead = MINIMAL.replace("g[2,1] = \"1\"\n", "");
        assert!(matches!(parse_problem(&no_lead), Err(ProblemError::Validation(_))));
        let wrong_symbol = MINIMAL.replace("g[0,1]", "f[1,1,0,1]");
        assert!(matches!(parse_problem(&wrong_symbol), Err(ProblemError::Validation(_))));
        let one_factor = format!("{MINIMAL}[Q1]\nb[1,1] = \"1\"\n");
        assert!(matches!(parse_problem(&one_factor), Err(ProblemError::Validation(_))));
        let x2 = MINIMAL.replace("\"-3\"", "\"x2\"");
        assert!(matches!(parse_problem(&x2), Err(ProblemError::Validation(_))));
    }

    #[test]
    fn parse_error_positions() {
        let bad = MINIMAL.replace("\"-3\"", "\"-3 +\"");
        match parse_problem(&bad).unwrap_err() {
            ProblemError::Parse { line, column, .. } => assert_eq!((line, column), (8, 15)),
            e => panic!("{e}"),
        }
        let unterminated = MINIMAL.replace("\"-3\"", "\"-3");
        assert!(matches!(parse_problem(&unterminated), Err(ProblemError::Parse { line: 8, column: 10, .. })));
        assert!(matches!(parse_problem("g[2,1] = \"1\""), Err(ProblemError::Parse { line: 1, column: 1, .. })));
        assert!(matches!(parse_problem("[problem\n"), Err(ProblemError::Parse { line: 1, .. })));
    }

    #[test]
    fn system_file() {
        let text = "[problem]\nkind = nonlinear-ode-system\nm = 2\n[operator]\nf[1,1,2,1] = \"1\"\nf[2,2,2,1] = \"1\"\nf[1,2,1,1] = \"u1*x1\"\n[solve]\ninterval = 0, 1\nsteps = 64\nconstant = \"3/2\"\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.m, 2);
        assert_eq!(p.solve.interval, Some((0.0, 1.0)));
        assert_eq!(parse_problem(&p.to_string()).unwrap(), p);
        assert!(p.operator().unwrap().is_matrix());
        let bad_entry = text.replace("f[1,2,1,1]", "f[1,3,1,1]");
        assert!(matches!(parse_problem(&bad_entry), Err(ProblemError::Validation(_))));
    }
}
