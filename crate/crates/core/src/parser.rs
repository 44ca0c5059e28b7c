//! Text format for expressions, and its plain-text and LaTeX renderers.
//!
//! ```text
//! expression := term (('+'|'-') term)* ;
//! term       := [sign] [rational] factor* ;      (at least one of rational / factor)
//! factor     := tensor | operator ;
//! tensor     := 'h[' idx ',' idx ']' | 'V[' idx (',' idx){3} ']' | 'A[' idx (',' idx){3} ']'
//!             | 'd[' idx ',' idx ']' | 't[' idxlist '=>' idxlist ']' ;
//! operator   := 'c(' idx ')' | 'a(' idx ')' ;
//! idx        := letter [digits] [':' ('occ'|'vir'|'gen')] ;
//! ```
//!
//! Whitespace is ignored between tokens and `#` starts a comment running to
//! the end of the line. An index occurring twice in a term is a dummy, once is
//! free.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::model::{
    Binding, Coeff, Expression, FermionOp, Index, Label, ModelError, OpKind, OrbitalSpace, TensorFactor, TensorKind,
    Term,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("cannot infer the space of index letter '{0}'; annotate it with :occ, :vir or :gen")]
    SpaceInference(char),
    #[error("{kind} takes {expected} indices, found {got}")]
    Arity {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("index {0} occurs more than twice in one term")]
    OddOccurrence(Label),
    #[error("index {0} is annotated with two different spaces")]
    ConflictingSpace(Label),
    #[error("amplitude index {0} must be occupied below and virtual above")]
    AmplitudeSpace(Label),
    #[error("coefficient is out of range")]
    CoefficientRange,
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Parse failure with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Loc {
    line: usize,
    column: usize,
}

impl Loc {
    fn err(self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            line: self.line,
            column: self.column,
        }
    }
}

#[derive(Clone)]
struct Cursor<'a> {
    rest: &'a str,
    loc: Loc,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            rest: src,
            loc: Loc { line: 1, column: 1 },
        }
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.loc.line += 1;
            self.loc.column = 1;
        } else {
            self.loc.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Next significant character, after trivia.
    fn next_token_char(&mut self) -> Option<char> {
        self.skip_trivia();
        self.peek()
    }

    fn expect(&mut self, want: &str) -> Result<(), ParseError> {
        self.skip_trivia();
        if self.rest.starts_with(want) {
            for _ in want.chars() {
                self.bump();
            }
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{want}'")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        };
        self.loc.err(ParseErrorKind::Syntax(format!("expected {wanted}, found {found}")))
    }

    fn digits(&mut self) -> Option<&'a str> {
        let len = self.rest.bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return None;
        }
        let s = &self.rest[..len];
        for _ in 0..len {
            self.bump();
        }
        Some(s)
    }
}

#[derive(Debug, Clone, Copy)]
struct RawIndex {
    label: Label,
    annotation: Option<OrbitalSpace>,
    loc: Loc,
}

enum RawFactor {
    Tensor {
        kind: TensorKind,
        indices: Vec<RawIndex>,
        loc: Loc,
    },
    Op {
        kind: OpKind,
        index: RawIndex,
    },
}

/// Parsed source with the start location of every term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceExpr {
    pub text: String,
    pub expr: Expression,
    pub term_starts: Vec<(usize, usize)>,
}

impl SourceExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let (expr, starts) = parse_located(text)?;
        Ok(Self {
            text: text.to_string(),
            expr,
            term_starts: starts.into_iter().map(|l| (l.line, l.column)).collect(),
        })
    }
}

/// Parses an expression; zero-coefficient terms are dropped.
pub fn parse(text: &str) -> Result<Expression, ParseError> {
    parse_located(text).map(|(e, _)| e)
}

fn parse_located(text: &str) -> Result<(Expression, Vec<Loc>), ParseError> {
    let mut cur = Cursor::new(text);
    let mut terms = Vec::new();
    let mut starts = Vec::new();
    if cur.next_token_char().is_none() {
        return Err(cur.unexpected("a term"));
    }
    loop {
        cur.skip_trivia();
        let start = cur.loc;
        let sign = match cur.next_token_char() {
            None if !starts.is_empty() => break,
            Some('+') => {
                cur.bump();
                Coeff::one()
            }
            Some('-') => {
                cur.bump();
                -Coeff::one()
            }
            _ if starts.is_empty() => Coeff::one(),
            _ => return Err(cur.unexpected("'+' or '-' between terms")),
        };
        let term = parse_term(&mut cur, sign)?;
        starts.push(start);
        terms.push(term);
    }
    Ok((Expression::new(terms), starts))
}

fn parse_term(cur: &mut Cursor<'_>, mut coeff: Coeff) -> Result<Term, ParseError> {
    match cur.next_token_char() {
        Some('+') => {
            cur.bump();
        }
        Some('-') => {
            cur.bump();
            coeff = -coeff;
        }
        _ => {}
    }
    let mut has_number = false;
    if matches!(cur.next_token_char(), Some(c) if c.is_ascii_digit()) {
        coeff *= parse_rational(cur)?;
        has_number = true;
    }
    let mut factors = Vec::new();
    while let Some(c) = cur.next_token_char() {
        if c == '+' || c == '-' {
            break;
        }
        factors.push(parse_factor(cur)?);
    }
    if !has_number && factors.is_empty() {
        return Err(cur.unexpected("a coefficient or factor"));
    }
    resolve_term(coeff, factors)
}

fn parse_rational(cur: &mut Cursor<'_>) -> Result<Coeff, ParseError> {
    let loc = cur.loc;
    let int = |s: &str| s.parse::<i64>().map_err(|_| loc.err(ParseErrorKind::CoefficientRange));
    let num = int(cur.digits().expect("caller saw a digit"))?;
    let mut probe = cur.clone();
    if probe.next_token_char() == Some('/') {
        probe.bump();
        probe.skip_trivia();
        let Some(den) = probe.digits() else {
            return Err(probe.unexpected("a denominator"));
        };
        let den = int(den)?;
        if den == 0 {
            return Err(loc.err(ParseErrorKind::ZeroDenominator));
        }
        *cur = probe;
        Ok(Coeff::new(num, den))
    } else {
        Ok(Coeff::from_integer(num))
    }
}

fn parse_factor(cur: &mut Cursor<'_>) -> Result<RawFactor, ParseError> {
    let loc = cur.loc;
    let head = cur.peek().expect("caller saw a character");
    let mut probe = cur.clone();
    probe.bump();
    let bracket = probe.next_token_char();
    let fixed = |kind, n| (kind, n);
    let tensor = match (head, bracket) {
        ('h', Some('[')) => Some(fixed(TensorKind::OneElectron, 2)),
        ('d', Some('[')) => Some(fixed(TensorKind::Delta, 2)),
        ('V', Some('[')) => Some(fixed(TensorKind::TwoElectronBare, 4)),
        ('A', Some('[')) => Some(fixed(TensorKind::TwoElectronAntisym, 4)),
        ('t', Some('[')) => None,
        ('c' | 'a', Some('(')) => {
            *cur = probe;
            cur.expect("(")?;
            let index = parse_index(cur)?;
            cur.expect(")")?;
            let kind = if head == 'c' {
                OpKind::Creation
            } else {
                OpKind::Annihilation
            };
            return Ok(RawFactor::Op { kind, index });
        }
        _ => return Err(cur.unexpected("a tensor or operator")),
    };
    *cur = probe;
    cur.expect("[")?;
    if let Some((kind, arity)) = tensor {
        let indices = parse_index_list(cur, &[']'])?;
        cur.expect("]")?;
        if indices.len() != arity {
            return Err(loc.err(ParseErrorKind::Arity {
                kind: kind.name(),
                expected: if arity == 2 { "2" } else { "4" },
                got: indices.len(),
            }));
        }
        return Ok(RawFactor::Tensor { kind, indices, loc });
    }
    let mut indices = parse_index_list(cur, &['='])?;
    cur.expect("=>")?;
    let lower = indices.len();
    indices.extend(parse_index_list(cur, &[']'])?);
    cur.expect("]")?;
    let upper = indices.len() - lower;
    if lower > 2 || upper > 2 {
        return Err(loc.err(ParseErrorKind::Arity {
            kind: "t",
            expected: "at most 2 lower and 2 upper",
            got: indices.len(),
        }));
    }
    Ok(RawFactor::Tensor {
        kind: TensorKind::Amplitude { lower: lower as u8 },
        indices,
        loc,
    })
}

/// Comma-separated indices; empty if the list is closed immediately by one of `closers`.
fn parse_index_list(cur: &mut Cursor<'_>, closers: &[char]) -> Result<Vec<RawIndex>, ParseError> {
    let mut out = Vec::new();
    if matches!(cur.next_token_char(), Some(c) if closers.contains(&c)) {
        return Ok(out);
    }
    loop {
        out.push(parse_index(cur)?);
        if cur.next_token_char() == Some(',') {
            cur.bump();
        } else {
            return Ok(out);
        }
    }
}

fn parse_index(cur: &mut Cursor<'_>) -> Result<RawIndex, ParseError> {
    let letter = match cur.next_token_char() {
        Some(c) if c.is_ascii_alphabetic() => c,
        _ => return Err(cur.unexpected("an index letter")),
    };
    let loc = cur.loc;
    cur.bump();
    let ordinal = match cur.digits() {
        Some(d) => Some(d.parse::<u32>().map_err(|_| loc.err(ParseErrorKind::Syntax("index ordinal too large".into())))?),
        None => None,
    };
    let mut annotation = None;
    let mut probe = cur.clone();
    if probe.next_token_char() == Some(':') {
        probe.bump();
        probe.skip_trivia();
        let tag_loc = probe.loc;
        let len = probe.rest.bytes().take_while(u8::is_ascii_alphabetic).count();
        let tag = &probe.rest[..len];
        annotation = Some(OrbitalSpace::from_annotation(tag).ok_or_else(|| {
            tag_loc.err(ParseErrorKind::Syntax(format!("unknown space annotation '{tag}'; use occ, vir or gen")))
        })?);
        for _ in 0..len {
            probe.bump();
        }
        *cur = probe;
    }
    Ok(RawIndex {
        label: Label::new(letter, ordinal),
        annotation,
        loc,
    })
}

fn resolve_term(coeff: Coeff, factors: Vec<RawFactor>) -> Result<Term, ParseError> {
    struct Info {
        annotation: Option<OrbitalSpace>,
        first: Loc,
        count: usize,
    }
    let mut info: BTreeMap<Label, Info> = BTreeMap::new();
    let raw_indices = factors.iter().flat_map(|f| match f {
        RawFactor::Tensor { indices, .. } => indices.as_slice(),
        RawFactor::Op { index, .. } => core::slice::from_ref(index),
    });
    for raw in raw_indices {
        let entry = info.entry(raw.label).or_insert(Info {
            annotation: None,
            first: raw.loc,
            count: 0,
        });
        entry.count += 1;
        if entry.count > 2 {
            return Err(raw.loc.err(ParseErrorKind::OddOccurrence(raw.label)));
        }
        match (entry.annotation, raw.annotation) {
            (Some(a), Some(b)) if a != b => return Err(raw.loc.err(ParseErrorKind::ConflictingSpace(raw.label))),
            (None, Some(b)) => entry.annotation = Some(b),
            _ => {}
        }
    }
    let mut resolved: BTreeMap<Label, Index> = BTreeMap::new();
    for (label, i) in &info {
        let space = match i.annotation {
            Some(s) => s,
            None => OrbitalSpace::infer(label.letter())
                .map_err(|_| i.first.err(ParseErrorKind::SpaceInference(label.letter())))?,
        };
        let binding = if i.count == 2 { Binding::Dummy } else { Binding::Free };
        resolved.insert(*label, Index::new(*label, space, binding));
    }

    let mut tensors = Vec::new();
    let mut ops = Vec::new();
    for f in factors {
        match f {
            RawFactor::Tensor { kind, indices, loc } => {
                let idx = indices.iter().map(|r| resolved[&r.label]).collect();
                let t = TensorFactor::new(kind, idx).map_err(|e| match e {
                    ModelError::AmplitudeSpace(l) => loc.err(ParseErrorKind::AmplitudeSpace(l)),
                    ModelError::Arity { kind, expected, got } => loc.err(ParseErrorKind::Arity { kind, expected, got }),
                    other => loc.err(ParseErrorKind::Syntax(other.to_string())),
                })?;
                tensors.push(t);
            }
            RawFactor::Op { kind, index } => ops.push(FermionOp {
                kind,
                index: resolved[&index.label],
            }),
        }
    }
    Ok(Term::new(coeff, tensors, ops))
}

/// Output format for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// The parseable input language.
    #[default]
    Text,
    Latex,
}

pub fn render(expr: &Expression, format: Format) -> String {
    match format {
        Format::Text => {
            let text = format!("{expr}");
            match text.strip_prefix('+') {
                Some(rest) => rest.to_string(),
                None => text,
            }
        }
        Format::Latex => render_latex(expr),
    }
}

fn tex_label(l: Label) -> String {
    match l.ordinal() {
        Some(n) => format!("{}_{{{n}}}", l.letter()),
        None => l.letter().to_string(),
    }
}

fn tex_labels(idx: &[Index]) -> String {
    idx.iter().map(|i| tex_label(i.label)).collect()
}

/// Sub/superscript body, braced unless it is a single character.
fn script(body: String) -> String {
    if body.chars().count() == 1 {
        body
    } else {
        format!("{{{body}}}")
    }
}

fn tex_tensor(t: &TensorFactor) -> String {
    let idx = t.indices();
    match t.kind() {
        TensorKind::Delta => format!("\\delta_{{{}}}", tex_labels(idx)),
        TensorKind::OneElectron => format!("h_{{{}}}", tex_labels(idx)),
        TensorKind::TwoElectronBare => {
            format!("\\langle {}|{}\\rangle", tex_labels(&idx[..2]), tex_labels(&idx[2..]))
        }
        TensorKind::TwoElectronAntisym => {
            format!("\\langle {}||{}\\rangle", tex_labels(&idx[..2]), tex_labels(&idx[2..]))
        }
        TensorKind::Amplitude { .. } => {
            let mut s = String::from("t");
            if !t.lower().is_empty() {
                let _ = write!(s, "_{}", script(tex_labels(t.lower())));
            }
            if !t.upper().is_empty() {
                let _ = write!(s, "^{}", script(tex_labels(t.upper())));
            }
            s
        }
    }
}

fn tex_op(op: &FermionOp) -> String {
    let sub = script(tex_label(op.index.label));
    match op.kind {
        OpKind::Creation => format!("a_{sub}^+"),
        OpKind::Annihilation => format!("a_{sub}"),
    }
}

fn render_latex(expr: &Expression) -> String {
    if expr.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (n, term) in expr.iter().enumerate() {
        if n > 0 {
            out.push(' ');
        }
        let c = term.coeff();
        out.push_str(if c.is_negative() { "- " } else { "+ " });
        let mut parts: Vec<String> = Vec::new();
        let abs = c.abs();
        let bare = term.tensors().is_empty() && term.ops().is_empty();
        if !abs.is_one() || bare {
            parts.push(if abs.is_integer() {
                format!("{}", abs.numer())
            } else {
                format!("\\frac{{{}}}{{{}}}", abs.numer(), abs.denom())
            });
        }
        let (amps, others): (Vec<&TensorFactor>, Vec<&TensorFactor>) = term
            .tensors()
            .iter()
            .partition(|t| matches!(t.kind(), TensorKind::Amplitude { .. }));
        parts.extend(amps.into_iter().chain(others).map(tex_tensor));
        parts.extend(term.ops().iter().map(tex_op));
        out.push_str(&parts.join(" "));
    }
    out
}
