//! HOA v1 ingestion and emission.
//!
//! Supports the slice of the format that omega-automata tools emit for our
//! acceptance conditions: state-based acceptance, explicit `[expr]` or
//! implicit edge labels, Rabin pairs in the `Fin(2i) & Inf(2i+1)` shape (any
//! set numbering), and (generalized) Büchi `Inf(j)` conjunctions. Documents
//! with a single deterministic Büchi set come back as a Rabin automaton with
//! one pair; generalized or nondeterministic Büchi documents come back as an
//! LDBA with the deterministic part inferred.

use super::{
    LimitDetBuchi, Literal, PropositionSet, RabinAutomaton, RabinPair, StateId, SymbolGuard,
};
use crate::{Error, Result};

/// Outcome of [`parse_hoa`]: the acceptance condition decides the type.
#[derive(Debug, Clone)]
pub enum ParsedAutomaton {
    Rabin(RabinAutomaton),
    Ldba(LimitDetBuchi),
}

/// Parses an HOA v1 document.
pub fn parse_hoa(text: &str) -> Result<ParsedAutomaton> {
    Parser::new(text)?.parse()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Header(String), // "ident:"
    Ident(String),
    Int(u64),
    Str(String),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    And,
    Or,
    Not,
    Body,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn lex(text: &str) -> Result<Self> {
        let mut toks = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        let mut line = 1;
        let err = |line: usize, msg: &str| Error::HoaParse { line, msg: msg.into() };
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                '\n' => {
                    line += 1;
                    i += 1;
                }
                ' ' | '\t' | '\r' => i += 1,
                '/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                    i += 2;
                    while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                        if bytes[i] == b'\n' {
                            line += 1;
                        }
                        i += 1;
                    }
                    i = (i + 2).min(bytes.len());
                }
                '[' => {
                    toks.push((Tok::LBracket, line));
                    i += 1;
                }
                ']' => {
                    toks.push((Tok::RBracket, line));
                    i += 1;
                }
                '{' => {
                    toks.push((Tok::LBrace, line));
                    i += 1;
                }
                '}' => {
                    toks.push((Tok::RBrace, line));
                    i += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, line));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, line));
                    i += 1;
                }
                '&' => {
                    toks.push((Tok::And, line));
                    i += 1;
                }
                '|' => {
                    toks.push((Tok::Or, line));
                    i += 1;
                }
                '!' => {
                    toks.push((Tok::Not, line));
                    i += 1;
                }
                '"' => {
                    let start = i + 1;
                    let mut j = start;
                    while j < bytes.len() && bytes[j] != b'"' {
                        j += 1;
                    }
                    if j >= bytes.len() {
                        return Err(err(line, "unterminated string"));
                    }
                    toks.push((Tok::Str(text[start..j].to_string()), line));
                    i = j + 1;
                }
                '-' if text[i..].starts_with("--BODY--") => {
                    toks.push((Tok::Body, line));
                    i += 8;
                }
                '-' if text[i..].starts_with("--END--") => {
                    toks.push((Tok::End, line));
                    i += 7;
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                    let v: u64 = text[start..i]
                        .parse()
                        .map_err(|_| err(line, "integer out of range"))?;
                    toks.push((Tok::Int(v), line));
                }
                c if c.is_ascii_alphabetic() || c == '_' || c == '@' => {
                    let start = i;
                    while i < bytes.len() {
                        let ch = bytes[i] as char;
                        if ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' || ch == '@' {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let word = &text[start..i];
                    if i < bytes.len() && bytes[i] == b':' {
                        toks.push((Tok::Header(word.to_string()), line));
                        i += 1;
                    } else {
                        toks.push((Tok::Ident(word.to_string()), line));
                    }
                }
                _ => return Err(err(line, &format!("unexpected character `{c}`"))),
            }
        }
        Ok(Lexer { toks })
    }
}

/// Acceptance condition AST.
#[derive(Debug, Clone)]
enum AccExpr {
    True,
    False,
    Inf(usize),
    Fin(usize),
    And(Box<AccExpr>, Box<AccExpr>),
    Or(Box<AccExpr>, Box<AccExpr>),
}

/// Edge label AST, lowered to DNF after parsing.
#[derive(Debug, Clone)]
enum LabelExpr {
    True,
    False,
    Ap(usize),
    Not(Box<LabelExpr>),
    And(Box<LabelExpr>, Box<LabelExpr>),
    Or(Box<LabelExpr>, Box<LabelExpr>),
}

impl LabelExpr {
    /// Negation-normal-form then distribution; labels in practice are tiny.
    fn to_guard(&self, n_aps: usize, line: usize) -> Result<SymbolGuard> {
        fn nnf(e: &LabelExpr, neg: bool) -> LabelExpr {
            match e {
                LabelExpr::True => {
                    if neg { LabelExpr::False } else { LabelExpr::True }
                }
                LabelExpr::False => {
                    if neg { LabelExpr::True } else { LabelExpr::False }
                }
                LabelExpr::Ap(i) => {
                    if neg {
                        LabelExpr::Not(Box::new(LabelExpr::Ap(*i)))
                    } else {
                        LabelExpr::Ap(*i)
                    }
                }
                LabelExpr::Not(x) => nnf(x, !neg),
                LabelExpr::And(a, b) => {
                    let (a, b) = (Box::new(nnf(a, neg)), Box::new(nnf(b, neg)));
                    if neg { LabelExpr::Or(a, b) } else { LabelExpr::And(a, b) }
                }
                LabelExpr::Or(a, b) => {
                    let (a, b) = (Box::new(nnf(a, neg)), Box::new(nnf(b, neg)));
                    if neg { LabelExpr::And(a, b) } else { LabelExpr::Or(a, b) }
                }
            }
        }
        fn guard(e: &LabelExpr, n_aps: usize, line: usize) -> Result<SymbolGuard> {
            match e {
                LabelExpr::True => Ok(SymbolGuard::const_true()),
                LabelExpr::False => Ok(SymbolGuard::const_false()),
                LabelExpr::Ap(i) => {
                    if *i >= n_aps {
                        return Err(Error::HoaParse {
                            line,
                            msg: format!("label references AP {i} but only {n_aps} declared"),
                        });
                    }
                    Ok(SymbolGuard::literal(Literal::pos(*i as u16)))
                }
                LabelExpr::Not(x) => match x.as_ref() {
                    LabelExpr::Ap(i) => {
                        if *i >= n_aps {
                            return Err(Error::HoaParse {
                                line,
                                msg: format!("label references AP {i} but only {n_aps} declared"),
                            });
                        }
                        Ok(SymbolGuard::literal(Literal::neg(*i as u16)))
                    }
                    _ => unreachable!("negation pushed to literals by nnf"),
                },
                LabelExpr::And(a, b) => {
                    Ok(guard(a, n_aps, line)?.and(&guard(b, n_aps, line)?))
                }
                LabelExpr::Or(a, b) => Ok(guard(a, n_aps, line)?.or(guard(b, n_aps, line)?)),
            }
        }
        guard(&nnf(self, false), n_aps, line)
    }
}

struct RawEdge {
    guard: SymbolGuard,
    dest: StateId,
}

struct RawState {
    id: StateId,
    acc_sets: Vec<usize>,
    edges: Vec<RawEdge>,
    implicit_count: usize,
    uses_implicit: bool,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser { toks: Lexer::lex(text)?.toks, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or_else(|| self.toks.last()).map(|(_, l)| *l).unwrap_or(0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::HoaParse { line: self.line(), msg: msg.into() })
    }

    fn expect_int(&mut self) -> Result<u64> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(v),
            other => {
                self.pos -= 1;
                self.err(format!("expected integer, found {other:?}"))
            }
        }
    }

    fn parse(mut self) -> Result<ParsedAutomaton> {
        let mut n_states: Option<usize> = None;
        let mut start: Option<StateId> = None;
        let mut ap_names: Vec<String> = Vec::new();
        let mut acceptance: Option<(usize, AccExpr)> = None;
        let mut saw_hoa = false;

        loop {
            match self.bump() {
                Some(Tok::Header(h)) => match h.as_str() {
                    "HOA" => {
                        match self.bump() {
                            Some(Tok::Ident(v)) if v == "v1" => saw_hoa = true,
                            _ => return self.err("expected `v1` after HOA:"),
                        }
                    }
                    "States" => n_states = Some(self.expect_int()? as usize),
                    "Start" => {
                        if start.is_some() {
                            return self.err("multiple Start: headers (one initial state required)");
                        }
                        let s = self.expect_int()? as StateId;
                        if matches!(self.peek(), Some(Tok::And | Tok::Int(_))) {
                            return self.err("conjunctive or multiple initial states unsupported");
                        }
                        start = Some(s);
                    }
                    "AP" => {
                        let k = self.expect_int()? as usize;
                        for _ in 0..k {
                            match self.bump() {
                                Some(Tok::Str(s)) => ap_names.push(s),
                                _ => return self.err("expected quoted AP name"),
                            }
                        }
                    }
                    "Acceptance" => {
                        let n_sets = self.expect_int()? as usize;
                        let expr = self.parse_acc_expr()?;
                        acceptance = Some((n_sets, expr));
                    }
                    "acc-name" | "name" | "tool" | "properties" => {
                        // Informational; skip values until the next header/body.
                        while matches!(
                            self.peek(),
                            Some(Tok::Ident(_) | Tok::Str(_) | Tok::Int(_))
                        ) {
                            self.bump();
                        }
                    }
                    "Alias" => return self.err("aliases are not supported"),
                    other => return self.err(format!("unsupported header `{other}:`")),
                },
                Some(Tok::Body) => break,
                Some(t) => return self.err(format!("unexpected token in header: {t:?}")),
                None => return self.err("missing --BODY--"),
            }
        }
        if !saw_hoa {
            return self.err("missing HOA: v1 header");
        }
        let (n_acc_sets, acc_expr) = match acceptance {
            Some(a) => a,
            None => return self.err("missing Acceptance: header"),
        };

        let aps = PropositionSet::new(ap_names)?;
        let states = self.parse_body(aps.len())?;

        let n_states = match n_states {
            Some(n) => n,
            None => states.iter().map(|s| s.id + 1).max().unwrap_or(0),
        };
        let start = start.ok_or_else(|| Error::HoaParse {
            line: 0,
            msg: "missing Start: header".into(),
        })?;

        let mut edges: Vec<Vec<(SymbolGuard, StateId)>> = vec![Vec::new(); n_states];
        let mut membership: Vec<Vec<usize>> = vec![Vec::new(); n_states];
        let mut seen = vec![false; n_states];
        for st in &states {
            if st.id >= n_states {
                return Err(Error::Semantic(format!("state {} out of declared range", st.id)));
            }
            if seen[st.id] {
                return Err(Error::Semantic(format!("state {} defined twice", st.id)));
            }
            seen[st.id] = true;
            if st.uses_implicit {
                let want = 1usize << aps.len();
                if st.implicit_count != want {
                    return Err(Error::Semantic(format!(
                        "state {} lists {} implicit edges, expected {want}",
                        st.id, st.implicit_count
                    )));
                }
            }
            for set in &st.acc_sets {
                if *set >= n_acc_sets {
                    return Err(Error::Semantic(format!(
                        "state {} in undeclared acceptance set {set}",
                        st.id
                    )));
                }
            }
            membership[st.id] = st.acc_sets.clone();
            for e in &st.edges {
                if e.dest >= n_states {
                    return Err(Error::Semantic(format!(
                        "edge from {} targets undeclared state {}",
                        st.id, e.dest
                    )));
                }
                edges[st.id].push((e.guard.clone(), e.dest));
            }
        }

        let set_states = |idx: usize| -> Vec<StateId> {
            (0..n_states).filter(|q| membership[*q].contains(&idx)).collect()
        };

        if let Some(pairs_idx) = match_rabin_pairs(&acc_expr) {
            let pairs = pairs_idx
                .into_iter()
                .map(|(fin, inf)| RabinPair { inf: set_states(inf), fin: set_states(fin) })
                .collect();
            return Ok(ParsedAutomaton::Rabin(RabinAutomaton::new(
                aps, n_states, start, edges, pairs,
            )?));
        }
        if let Some(sets_idx) = match_generalized_buchi(&acc_expr) {
            if sets_idx.len() != n_acc_sets {
                return Err(Error::Semantic(
                    "generalized-Büchi acceptance must use every declared set once".into(),
                ));
            }
            // A lone deterministic Büchi set is already a Rabin automaton
            // with an empty fin side; prefer the richer type when it fits.
            if sets_idx.len() == 1 {
                let pairs = vec![RabinPair { inf: set_states(sets_idx[0]), fin: Vec::new() }];
                if let Ok(rabin) =
                    RabinAutomaton::new(aps.clone(), n_states, start, edges.clone(), pairs)
                {
                    return Ok(ParsedAutomaton::Rabin(rabin));
                }
            }
            let accepting = sets_idx.into_iter().map(set_states).collect();
            return Ok(ParsedAutomaton::Ldba(LimitDetBuchi::new(
                aps,
                n_states,
                start,
                edges,
                vec![Vec::new(); n_states],
                accepting,
            )?));
        }
        Err(Error::Semantic(
            "unsupported acceptance condition (want Rabin pairs or generalized Büchi)".into(),
        ))
    }

    fn parse_acc_expr(&mut self) -> Result<AccExpr> {
        let mut left = self.parse_acc_conj()?;
        while matches!(self.peek(), Some(Tok::Or)) {
            self.bump();
            let right = self.parse_acc_conj()?;
            left = AccExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_acc_conj(&mut self) -> Result<AccExpr> {
        let mut left = self.parse_acc_atom()?;
        while matches!(self.peek(), Some(Tok::And)) {
            self.bump();
            let right = self.parse_acc_atom()?;
            left = AccExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_acc_atom(&mut self) -> Result<AccExpr> {
        match self.bump() {
            Some(Tok::LParen) => {
                let e = self.parse_acc_expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => self.err("expected `)` in acceptance expression"),
                }
            }
            Some(Tok::Ident(w)) if w == "Inf" || w == "Fin" => {
                match self.bump() {
                    Some(Tok::LParen) => {}
                    _ => return self.err("expected `(` after Inf/Fin"),
                }
                if matches!(self.peek(), Some(Tok::Not)) {
                    return self.err("negated acceptance sets unsupported");
                }
                let idx = self.expect_int()? as usize;
                match self.bump() {
                    Some(Tok::RParen) => {}
                    _ => return self.err("expected `)` after set index"),
                }
                Ok(if w == "Inf" { AccExpr::Inf(idx) } else { AccExpr::Fin(idx) })
            }
            Some(Tok::Ident(w)) if w == "t" => Ok(AccExpr::True),
            Some(Tok::Ident(w)) if w == "f" => Ok(AccExpr::False),
            other => {
                self.pos -= 1;
                self.err(format!("unexpected token in acceptance expression: {other:?}"))
            }
        }
    }

    fn parse_body(&mut self, n_aps: usize) -> Result<Vec<RawState>> {
        let mut states: Vec<RawState> = Vec::new();
        loop {
            match self.bump() {
                Some(Tok::End) => return Ok(states),
                Some(Tok::Header(h)) if h == "State" => {
                    if matches!(self.peek(), Some(Tok::LBracket)) {
                        return self.err("state labels are not supported");
                    }
                    let id = self.expect_int()? as StateId;
                    if matches!(self.peek(), Some(Tok::Str(_))) {
                        self.bump();
                    }
                    let mut acc_sets = Vec::new();
                    if matches!(self.peek(), Some(Tok::LBrace)) {
                        self.bump();
                        loop {
                            match self.bump() {
                                Some(Tok::Int(v)) => acc_sets.push(v as usize),
                                Some(Tok::RBrace) => break,
                                _ => return self.err("expected set index or `}`"),
                            }
                        }
                    }
                    states.push(RawState {
                        id,
                        acc_sets,
                        edges: Vec::new(),
                        implicit_count: 0,
                        uses_implicit: false,
                    });
                }
                Some(Tok::LBracket) => {
                    let st = match states.last_mut() {
                        Some(s) => s,
                        None => return self.err("edge before any State:"),
                    };
                    let line = self.line();
                    let expr = Self::parse_label_expr_static(&mut self.toks, &mut self.pos)?;
                    match self.bump() {
                        Some(Tok::RBracket) => {}
                        _ => return self.err("expected `]` after edge label"),
                    }
                    let dest = self.expect_int()? as StateId;
                    if matches!(self.peek(), Some(Tok::LBrace)) {
                        return self.err("transition-based acceptance unsupported (state-based required)");
                    }
                    st.edges.push(RawEdge { guard: expr.to_guard(n_aps, line)?, dest });
                }
                Some(Tok::Int(dest)) => {
                    // Implicit label: edges enumerate symbols 0..2^k in order.
                    let st = match states.last_mut() {
                        Some(s) => s,
                        None => return self.err("edge before any State:"),
                    };
                    if n_aps > 16 {
                        return self.err("implicit labels need <= 16 APs");
                    }
                    st.uses_implicit = true;
                    let sym_index = st.implicit_count;
                    st.implicit_count += 1;
                    if sym_index >= (1usize << n_aps) {
                        return self.err("more implicit edges than symbols");
                    }
                    let lits = (0..n_aps)
                        .map(|j| {
                            if sym_index & (1 << j) != 0 {
                                Literal::pos(j as u16)
                            } else {
                                Literal::neg(j as u16)
                            }
                        })
                        .collect::<Vec<_>>();
                    if matches!(self.peek(), Some(Tok::LBrace)) {
                        return self.err("transition-based acceptance unsupported (state-based required)");
                    }
                    st.edges.push(RawEdge {
                        guard: SymbolGuard::conjunction(lits),
                        dest: dest as StateId,
                    });
                }
                Some(t) => return self.err(format!("unexpected token in body: {t:?}")),
                None => return self.err("missing --END--"),
            }
        }
    }

    /// Label grammar: `expr := conj ('|' conj)*`, `conj := atom ('&' atom)*`,
    /// `atom := '!' atom | '(' expr ')' | 't' | 'f' | <ap-index>`.
    fn parse_label_expr_static(toks: &mut Vec<(Tok, usize)>, pos: &mut usize) -> Result<LabelExpr> {
        fn peek(toks: &[(Tok, usize)], pos: usize) -> Option<&Tok> {
            toks.get(pos).map(|(t, _)| t)
        }
        fn line(toks: &[(Tok, usize)], pos: usize) -> usize {
            toks.get(pos).map(|(_, l)| *l).unwrap_or(0)
        }
        fn atom(toks: &[(Tok, usize)], pos: &mut usize) -> Result<LabelExpr> {
            let e = Error::HoaParse {
                line: line(toks, *pos),
                msg: "malformed edge label".into(),
            };
            match peek(toks, *pos) {
                Some(Tok::Not) => {
                    *pos += 1;
                    Ok(LabelExpr::Not(Box::new(atom(toks, pos)?)))
                }
                Some(Tok::LParen) => {
                    *pos += 1;
                    let inner = expr(toks, pos)?;
                    match peek(toks, *pos) {
                        Some(Tok::RParen) => {
                            *pos += 1;
                            Ok(inner)
                        }
                        _ => Err(e),
                    }
                }
                Some(Tok::Ident(w)) if w == "t" => {
                    *pos += 1;
                    Ok(LabelExpr::True)
                }
                Some(Tok::Ident(w)) if w == "f" => {
                    *pos += 1;
                    Ok(LabelExpr::False)
                }
                Some(Tok::Int(v)) => {
                    let v = *v as usize;
                    *pos += 1;
                    Ok(LabelExpr::Ap(v))
                }
                _ => Err(e),
            }
        }
        fn conj(toks: &[(Tok, usize)], pos: &mut usize) -> Result<LabelExpr> {
            let mut left = atom(toks, pos)?;
            while matches!(peek(toks, *pos), Some(Tok::And)) {
                *pos += 1;
                let right = atom(toks, pos)?;
                left = LabelExpr::And(Box::new(left), Box::new(right));
            }
            Ok(left)
        }
        fn expr(toks: &[(Tok, usize)], pos: &mut usize) -> Result<LabelExpr> {
            let mut left = conj(toks, pos)?;
            while matches!(peek(toks, *pos), Some(Tok::Or)) {
                *pos += 1;
                let right = conj(toks, pos)?;
                left = LabelExpr::Or(Box::new(left), Box::new(right));
            }
            Ok(left)
        }
        expr(toks, pos)
    }
}

/// Matches `Fin(a) & Inf(b) | Fin(c) & Inf(d) | ...` (order inside each
/// conjunct free). Returns `(fin, inf)` set indices per pair.
fn match_rabin_pairs(expr: &AccExpr) -> Option<Vec<(usize, usize)>> {
    fn disjuncts<'a>(e: &'a AccExpr, out: &mut Vec<&'a AccExpr>) {
        match e {
            AccExpr::Or(a, b) => {
                disjuncts(a, out);
                disjuncts(b, out);
            }
            other => out.push(other),
        }
    }
    let mut ds = Vec::new();
    disjuncts(expr, &mut ds);
    let mut pairs = Vec::new();
    for d in ds {
        match d {
            AccExpr::And(a, b) => match (a.as_ref(), b.as_ref()) {
                (AccExpr::Fin(f), AccExpr::Inf(i)) | (AccExpr::Inf(i), AccExpr::Fin(f)) => {
                    pairs.push((*f, *i));
                }
                _ => return None,
            },
            _ => return None,
        }
    }
    if pairs.is_empty() { None } else { Some(pairs) }
}

/// Matches `Inf(a) & Inf(b) & ...`. Returns the set indices.
fn match_generalized_buchi(expr: &AccExpr) -> Option<Vec<usize>> {
    fn conjuncts<'a>(e: &'a AccExpr, out: &mut Vec<&'a AccExpr>) {
        match e {
            AccExpr::And(a, b) => {
                conjuncts(a, out);
                conjuncts(b, out);
            }
            other => out.push(other),
        }
    }
    let mut cs = Vec::new();
    conjuncts(expr, &mut cs);
    let mut sets = Vec::new();
    for c in cs {
        match c {
            AccExpr::Inf(i) => sets.push(*i),
            _ => return None,
        }
    }
    sets.sort_unstable();
    sets.dedup();
    if sets.is_empty() { None } else { Some(sets) }
}

/// Emits HOA v1 with the `Fin(2i) & Inf(2i+1)` Rabin pair convention.
pub(crate) fn rabin_to_hoa(auto: &RabinAutomaton) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let f = auto.pairs().len();
    writeln!(out, "HOA: v1").unwrap();
    writeln!(out, "States: {}", auto.n_states()).unwrap();
    writeln!(out, "Start: {}", auto.initial()).unwrap();
    let names: Vec<String> =
        auto.aps().iter().map(|n| format!("\"{n}\"")).collect();
    writeln!(out, "AP: {} {}", auto.aps().len(), names.join(" ")).unwrap();
    writeln!(out, "acc-name: Rabin {f}").unwrap();
    let cond = (0..f)
        .map(|i| format!("Fin({}) & Inf({})", 2 * i, 2 * i + 1))
        .collect::<Vec<_>>()
        .join(" | ");
    writeln!(out, "Acceptance: {} {}", 2 * f, cond).unwrap();
    writeln!(out, "properties: state-acc deterministic").unwrap();
    writeln!(out, "--BODY--").unwrap();
    for q in 0..auto.n_states() {
        let mut sets = Vec::new();
        for (i, pair) in auto.pairs().iter().enumerate() {
            if pair.fin.contains(&q) {
                sets.push(2 * i);
            }
            if pair.inf.contains(&q) {
                sets.push(2 * i + 1);
            }
        }
        if sets.is_empty() {
            writeln!(out, "State: {q}").unwrap();
        } else {
            let s = sets.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(out, "State: {q} {{{s}}}").unwrap();
        }
        for (guard, dest) in &auto.edges()[q] {
            if guard.terms().is_empty() {
                continue; // unreachable-by-construction false guard
            }
            writeln!(out, "[{}] {dest}", render_guard_indices(guard)).unwrap();
        }
    }
    writeln!(out, "--END--").unwrap();
    out
}

fn render_guard_indices(g: &SymbolGuard) -> String {
    let term = |t: &Vec<Literal>| -> String {
        if t.is_empty() {
            return "t".into();
        }
        t.iter()
            .map(|l| if l.negated { format!("!{}", l.ap) } else { l.ap.to_string() })
            .collect::<Vec<_>>()
            .join(" & ")
    };
    g.terms()
        .iter()
        .map(|t| {
            if g.terms().len() > 1 && t.len() > 1 {
                format!("({})", term(t))
            } else {
                term(t)
            }
        })
        .collect::<Vec<_>>()
        .join(" | ")
}
