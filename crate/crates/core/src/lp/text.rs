//! Reader and writer for the CPLEX-style "LP file" text format.
//!
//! The writer always spells every term with an explicit sign and coefficient
//! and lists every variable in `Bounds` with both limits (`-inf`/`+inf` when
//! unbounded), in insertion order. Floats are printed in shortest round-trip
//! form, so `parse_lp_text(&write_lp_text(m))` reproduces `m` exactly.

use std::fmt::Write as _;

use super::{LinExpr, LpBuilder, LpError, LpModel, RowSense, Var};

pub fn write_lp_text(model: &LpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ written by rted-dro\n");
    out.push_str("Minimize\n obj:");
    let mut any = false;
    for (i, v) in model.variables.iter().enumerate() {
        if v.obj != 0.0 {
            push_term(&mut out, v.obj, &model.variables[i].name);
            any = true;
        }
    }
    if model.objective_offset != 0.0 || !any {
        push_signed(&mut out, model.objective_offset);
    }
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}:", row.name);
        if row.coeffs.is_empty() && !model.variables.is_empty() {
            // keep the row; a zero coefficient on the first variable is the only spelling
            push_term(&mut out, 0.0, &model.variables[0].name);
        }
        for &(v, c) in &row.coeffs {
            push_term(&mut out, c, &model.variables[v.0].name);
        }
        let _ = writeln!(out, " {} {}", row.sense, fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
    }
    out.push_str("End\n");
    out
}

fn push_term(out: &mut String, c: f64, name: &str) {
    let sign = if c.is_sign_negative() { '-' } else { '+' };
    let _ = write!(out, " {sign} {} {name}", fmt_num(c.abs()));
}

fn push_signed(out: &mut String, c: f64) {
    let sign = if c.is_sign_negative() { '-' } else { '+' };
    let _ = write!(out, " {sign} {}", fmt_num(c.abs()));
}

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Malformed LP text, with a 1-based position.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(RowSense),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
}

fn tokenize_line(line: &str, lineno: usize, out: &mut Vec<Spanned>) -> Result<(), ParseError> {
    let bytes: Vec<char> = line.chars().collect();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError { line: lineno, column: col + 1, message: msg };
    while i < bytes.len() {
        let c = bytes[i];
        if c == '\\' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '<' | '>' | '=' => {
                i += 1;
                if i < bytes.len() && bytes[i] == '=' {
                    i += 1;
                }
                if c == '=' && i < bytes.len() && (bytes[i] == '<' || bytes[i] == '>') {
                    let d = bytes[i];
                    i += 1;
                    Tok::Rel(if d == '<' { RowSense::Le } else { RowSense::Ge })
                } else {
                    Tok::Rel(match c {
                        '<' => RowSense::Le,
                        '>' => RowSense::Ge,
                        _ => RowSense::Eq,
                    })
                }
            }
            d if d.is_ascii_digit() || d == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = bytes[start..i].iter().collect();
                Tok::Num(s.parse().map_err(|_| err(start, format!("bad number `{s}`")))?)
            }
            n if n.is_ascii_alphabetic() || "_[]".contains(n) => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || "_.[]".contains(bytes[i])) {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                match s.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" => Tok::Num(f64::INFINITY),
                    _ => Tok::Name(s),
                }
            }
            other => return Err(err(start, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, line: lineno, column: start + 1 });
    }
    Ok(())
}

fn section_header(line: &str) -> Option<Option<Section>> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "minimise" | "min" => Some(Some(Section::Objective)),
        "subject to" | "such that" | "st" | "s.t." => Some(Some(Section::Constraints)),
        "bounds" | "bound" => Some(Some(Section::Bounds)),
        "end" => Some(None),
        _ => None,
    }
}

/// Parse LP text produced by [`write_lp_text`] (or any file in the same dialect).
pub fn parse_lp_text(text: &str) -> Result<LpModel, ParseError> {
    let mut section: Option<Section> = None;
    let mut seen_end = false;
    let mut obj: Vec<Spanned> = Vec::new();
    let mut cons: Vec<Spanned> = Vec::new();
    let mut bounds: Vec<Vec<Spanned>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('\\') {
            continue;
        }
        if seen_end {
            return Err(ParseError { line: lineno, column: 1, message: "content after End".into() });
        }
        if let Some(h) = section_header(raw) {
            match h {
                Some(s) => section = Some(s),
                None => seen_end = true,
            }
            continue;
        }
        let lower = raw.trim().to_ascii_lowercase();
        if lower.starts_with("maximize") || lower.starts_with("maximise") || lower == "max" {
            return Err(ParseError { line: lineno, column: 1, message: "maximisation is not supported".into() });
        }
        match section {
            None => return Err(ParseError { line: lineno, column: 1, message: "text before Minimize section".into() }),
            Some(Section::Objective) => tokenize_line(raw, lineno, &mut obj)?,
            Some(Section::Constraints) => tokenize_line(raw, lineno, &mut cons)?,
            Some(Section::Bounds) => {
                let mut line_toks = Vec::new();
                tokenize_line(raw, lineno, &mut line_toks)?;
                if !line_toks.is_empty() {
                    bounds.push(line_toks);
                }
            }
        }
    }
    if !seen_end {
        let line = text.lines().count().max(1);
        return Err(ParseError { line, column: 1, message: "missing End".into() });
    }

    let mut p = Assembler::default();
    // objective
    let obj_terms = {
        let mut s = obj.as_slice();
        if let [Spanned { tok: Tok::Name(_), .. }, Spanned { tok: Tok::Colon, .. }, rest @ ..] = s {
            s = rest;
        }
        parse_expr(s, &mut p, true)?
    };
    // constraints
    let mut rows = Vec::new();
    let mut s = cons.as_slice();
    while !s.is_empty() {
        let (name, rest) = match s {
            [Spanned { tok: Tok::Name(n), .. }, Spanned { tok: Tok::Colon, .. }, rest @ ..] => (n.clone(), rest),
            [first, ..] => return Err(perr(first, "expected `name:` at start of constraint")),
            [] => unreachable!(),
        };
        let rel =
            rest.iter().position(|t| matches!(t.tok, Tok::Rel(_))).ok_or_else(|| perr(&s[0], "constraint without relational operator"))?;
        let sense = match rest[rel].tok {
            Tok::Rel(r) => r,
            _ => unreachable!(),
        };
        let lhs = parse_expr(&rest[..rel], &mut p, false)?;
        let (rhs, consumed) = parse_signed_number(&rest[rel + 1..]).ok_or_else(|| perr(&rest[rel], "expected numeric right-hand side"))?;
        rows.push((name, lhs, sense, rhs, (s[0].line, s[0].column)));
        s = &rest[rel + 1 + consumed..];
    }
    // bounds
    let mut declared: Vec<(String, f64, f64)> = Vec::new();
    for line in &bounds {
        declared.push(parse_bound(line, &mut p)?);
    }

    // variable order: Bounds order first, then anything only referenced elsewhere
    let mut order: Vec<usize> = Vec::new();
    let mut placed = vec![false; p.names.len()];
    let mut lo = vec![0.0; p.names.len()];
    let mut hi = vec![f64::INFINITY; p.names.len()];
    for (name, l, h) in &declared {
        let idx = p.index(name);
        if !placed[idx] {
            placed[idx] = true;
            order.push(idx);
        }
        lo[idx] = *l;
        hi[idx] = *h;
    }
    for idx in 0..p.names.len() {
        if !placed[idx] {
            order.push(idx);
        }
    }
    let mut b = LpBuilder::new();
    let mut map = vec![Var(0); p.names.len()];
    let to_err = |e: LpError| ParseError { line: 0, column: 0, message: e.to_string() };
    for &idx in &order {
        map[idx] = b.add_variable(p.names[idx].clone(), lo[idx], hi[idx], 0.0).map_err(to_err)?;
    }
    let remap = |e: &(Vec<(usize, f64)>, f64)| LinExpr { terms: e.0.iter().map(|&(i, c)| (map[i], c)).collect(), constant: e.1 };
    b.add_objective(&remap(&obj_terms)).map_err(to_err)?;
    for (name, lhs, sense, rhs, (line, column)) in rows {
        let expr = remap(&lhs);
        // keep explicit zero placeholders out of the model
        let expr = LinExpr { terms: expr.terms.into_iter().filter(|t| t.1 != 0.0).collect(), constant: expr.constant };
        b.add_row(name, &expr, sense, rhs).map_err(|e| ParseError { line, column, message: e.to_string() })?;
    }
    Ok(b.finish())
}

#[derive(Default)]
struct Assembler {
    names: Vec<String>,
    lookup: std::collections::HashMap<String, usize>,
}

impl Assembler {
    fn index(&mut self, name: &str) -> usize {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }
}

fn perr(t: &Spanned, msg: &str) -> ParseError {
    ParseError { line: t.line, column: t.column, message: msg.to_string() }
}

fn parse_signed_number(s: &[Spanned]) -> Option<(f64, usize)> {
    match s {
        [Spanned { tok: Tok::Minus, .. }, Spanned { tok: Tok::Num(x), .. }, ..] => Some((-x, 2)),
        [Spanned { tok: Tok::Plus, .. }, Spanned { tok: Tok::Num(x), .. }, ..] => Some((*x, 2)),
        [Spanned { tok: Tok::Num(x), .. }, ..] => Some((*x, 1)),
        _ => None,
    }
}

/// `[sign] [coef] name | [sign] number` repeated.
fn parse_expr(s: &[Spanned], p: &mut Assembler, allow_constant: bool) -> Result<(Vec<(usize, f64)>, f64), ParseError> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while i < s.len() && matches!(s[i].tok, Tok::Plus | Tok::Minus) {
            if s[i].tok == Tok::Minus {
                sign = -sign;
            }
            saw_sign = true;
            i += 1;
        }
        if i >= s.len() {
            return Err(perr(&s[i - 1], "dangling sign"));
        }
        if i > 0 && !saw_sign && !terms.is_empty() {
            return Err(perr(&s[i], "missing operator between terms"));
        }
        match &s[i].tok {
            Tok::Num(x) => {
                let x = *x;
                if let Some(Spanned { tok: Tok::Name(n), .. }) = s.get(i + 1) {
                    terms.push((p.index(n), sign * x));
                    i += 2;
                } else if allow_constant {
                    constant += sign * x;
                    i += 1;
                } else {
                    return Err(perr(&s[i], "constant term not allowed here"));
                }
            }
            Tok::Name(n) => {
                terms.push((p.index(n), sign));
                i += 1;
            }
            _ => return Err(perr(&s[i], "expected coefficient or variable")),
        }
    }
    Ok((terms, constant))
}

fn parse_bound(line: &[Spanned], p: &mut Assembler) -> Result<(String, f64, f64), ParseError> {
    // `lo <= x <= hi` | `x free` | `x >= lo` | `x <= hi` | `x = v` | `lo <= x`
    if let [Spanned { tok: Tok::Name(n), .. }, Spanned { tok: Tok::Name(kw), .. }] = line {
        if kw.eq_ignore_ascii_case("free") {
            p.index(n);
            return Ok((n.clone(), f64::NEG_INFINITY, f64::INFINITY));
        }
    }
    let first = &line[0];
    if let Some((lo, used)) = parse_signed_number(line) {
        let rest = &line[used..];
        match rest {
            [Spanned { tok: Tok::Rel(RowSense::Le), .. }, Spanned { tok: Tok::Name(n), .. }, tail @ ..] => {
                p.index(n);
                if tail.is_empty() {
                    return Ok((n.clone(), lo, f64::INFINITY));
                }
                if let [Spanned { tok: Tok::Rel(RowSense::Le), .. }, hi_toks @ ..] = tail {
                    if let Some((hi, used2)) = parse_signed_number(hi_toks) {
                        if used2 == hi_toks.len() {
                            return Ok((n.clone(), lo, hi));
                        }
                    }
                }
                Err(perr(first, "malformed bound"))
            }
            _ => Err(perr(first, "malformed bound")),
        }
    } else if let [Spanned { tok: Tok::Name(n), .. }, Spanned { tok: Tok::Rel(r), .. }, rest @ ..] = line {
        p.index(n);
        let (v, used) = parse_signed_number(rest).ok_or_else(|| perr(first, "expected number in bound"))?;
        if used != rest.len() {
            return Err(perr(first, "trailing tokens in bound"));
        }
        Ok(match r {
            RowSense::Le => (n.clone(), 0.0, v),
            RowSense::Ge => (n.clone(), v, f64::INFINITY),
            RowSense::Eq => (n.clone(), v, v),
        })
    } else {
        Err(perr(first, "malformed bound"))
    }
}
