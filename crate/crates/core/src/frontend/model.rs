//! Line-oriented model files.
//!
//! ```text
//! file       := (statement NEWLINE)*        -- indented lines continue a statement
//! statement  := 'vars' IDENT+
//!             | 'metric' 'diag' '(' rational (',' rational)* ')'
//!             | 'params' IDENT+
//!             | 'index' IDENT+ ':' ('spacetime' | int '..' int)
//!             | ('field' | 'ghost') IDENT ('[' slot (',' slot)* ']')? modifier*
//!             | 'def' IDENT ('[' IDENT (',' IDENT)* ']')? '=' expr
//!             | 'lagrangian' '=' expr
//!             | 'gauge' IDENT ('[' index (',' index)* ']')? '=' operator
//!             | 'master' '=' expr
//! slot       := IDENT | int '..' int            -- an index letter stands for its range
//! modifier   := 'even' | 'odd' | 'gh' int
//! operator   := expr linear in 'E(' field ')'   -- or a shorthand such as 'D_t D_x'
//! ```
//!
//! Declarations come before `lagrangian`; `gauge` and `master` come after it.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::expand::{Context, Def, Env, IndexKind, MarkerMap, Scope};
use super::format::{format_expression, Style};
use super::lexer::{tokenize, Spanned, Tok};
use super::parser::{IndexTok, Node, Parser};
use crate::bv::{extend_to_bv, BvExtension, GaugeGenerator};
use crate::error::{Error, ParseError, ParseErrorKind, Result, SourcePos};
use crate::graded::{
    Atom, Expression, GeneratorSpec, Grading, IndexRange, Parity, Rational, Role, Side, Signature,
};
use crate::jet::{ComponentKey, EvolutionaryVF};
use crate::variational::{NoetherOperator, Section, Theory};

/// A parsed model: the theory, its BV extension if ghosts, gauge blocks or a
/// master action are declared, and the index letters and definitions in scope.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub theory: Theory,
    pub bv: Option<BvExtension>,
    pub context: Context,
}

impl ParsedModel {
    /// The BV signature when present, else the theory's.
    pub fn signature(&self) -> &Arc<Signature> {
        match &self.bv {
            Some(b) => b.signature(),
            None => self.theory.signature(),
        }
    }

    /// Parses an expression against this model's generators, letters and definitions.
    pub fn expression(&self, text: &str) -> Result<Expression> {
        parse_expression_in(text, self.signature(), self.theory.metric(), &self.context)
    }

    /// Parses a Noether operator such as `D_t` or `d(E(A[mu]);mu)`.
    pub fn operator(&self, text: &str) -> Result<NoetherOperator> {
        let toks = tokenize(text, 1, 1).map_err(|e| snippet(e, text))?;
        operator_from_tokens(&self.theory, &self.context, &toks, &Env::new()).map_err(|e| match e {
            Error::Parse(p) => Error::Parse(Box::new(snippet(*p, text))),
            other => other,
        })
    }

    pub fn section(&self, text: &str) -> Result<Section> {
        parse_section(text, self)
    }

    pub fn bounds(&self, text: &str) -> Result<Vec<(Rational, Rational)>> {
        parse_box(text, self.signature())
    }

    pub fn characteristics(&self, text: &str) -> Result<EvolutionaryVF> {
        parse_characteristics(text, self)
    }
}

fn snippet(mut e: ParseError, src: &str) -> ParseError {
    if e.snippet.is_none() {
        e.snippet = src.lines().nth(e.pos.line.saturating_sub(1)).map(str::to_string);
    }
    e
}

fn perr(pos: &SourcePos, kind: ParseErrorKind) -> Error {
    Error::Parse(Box::new(ParseError::new(pos.clone(), kind)))
}

fn decl(pos: &SourcePos, msg: impl Into<String>) -> Error {
    perr(pos, ParseErrorKind::Declaration(msg.into()))
}

/// Parses `text` as an expression over `theory` (no index letters or definitions).
pub fn parse_expression(text: &str, theory: &Theory) -> Result<Expression> {
    parse_expression_in(text, theory.signature(), theory.metric(), &Context::default())
}

pub fn parse_expression_in(
    text: &str,
    sig: &Arc<Signature>,
    metric: &[Rational],
    ctx: &Context,
) -> Result<Expression> {
    let run = || -> std::result::Result<Expression, ParseError> {
        let toks = tokenize(text, 1, 1)?;
        let node = Parser::new(&toks, false).parse_all()?;
        Scope { sig, metric, ctx, markers: None }.eval(&node)
    };
    run().map_err(|e| Error::from(snippet(e, text)))
}

struct Statement {
    toks: Vec<Spanned>,
}

fn statements(src: &str) -> std::result::Result<Vec<Statement>, ParseError> {
    let mut out: Vec<Statement> = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut toks = tokenize(line, i + 1, 1)?;
        let continuation = line.starts_with([' ', '\t']);
        match out.last_mut() {
            Some(prev) if continuation => {
                prev.toks.pop();
                prev.toks.append(&mut toks);
            }
            _ => {
                if continuation {
                    return Err(ParseError::new(
                        SourcePos { line: i + 1, column: 1 },
                        ParseErrorKind::Declaration("indented line does not continue a statement".into()),
                    ));
                }
                out.push(Statement { toks });
            }
        }
    }
    Ok(out)
}

const RESERVED: &[&str] = &[
    "d", "E", "eps", "delta", "vars", "metric", "params", "index", "field", "ghost", "def", "lagrangian",
    "gauge", "master", "even", "odd", "gh", "spacetime", "diag",
];

#[derive(Default)]
struct Builder {
    vars: Option<Vec<String>>,
    metric: Option<(Vec<Rational>, SourcePos)>,
    gens: Vec<GeneratorSpec>,
    ghosts: Vec<GeneratorSpec>,
    ctx: Context,
    theory: Option<Theory>,
    gauge: Vec<(String, Vec<IndexTok>, Vec<Spanned>, SourcePos)>,
    master: Option<(Node, SourcePos)>,
}

impl Builder {
    fn taken(&self, name: &str) -> bool {
        RESERVED.contains(&name)
            || self.vars.as_ref().is_some_and(|v| v.iter().any(|x| x == name))
            || self.gens.iter().chain(&self.ghosts).any(|g| g.name == name)
            || self.ctx.letters.contains_key(name)
            || self.ctx.defs.contains_key(name)
    }

    fn fresh(&self, name: &str, pos: &SourcePos) -> Result<()> {
        if self.taken(name) {
            Err(decl(pos, format!("name `{name}` is already in use")))
        } else {
            Ok(())
        }
    }

    fn num_vars(&self, pos: &SourcePos) -> Result<usize> {
        self.vars.as_ref().map(Vec::len).ok_or_else(|| decl(pos, "`vars` must be declared first"))
    }

    fn before_lagrangian(&self, pos: &SourcePos, what: &str) -> Result<()> {
        if self.theory.is_some() {
            return Err(decl(pos, format!("`{what}` must precede `lagrangian`")));
        }
        Ok(())
    }
}

fn int_literal(p: &mut Parser) -> Result<i64> {
    let pos = p.pos();
    let q = p.signed_rational()?;
    if !q.is_integer() {
        return Err(perr(&pos, ParseErrorKind::Semantic("expected an integer".into())));
    }
    super::parser::to_i64(q.numer(), &pos).map_err(Error::from)
}

fn idents(p: &mut Parser) -> Result<Vec<(String, SourcePos)>> {
    let mut out = vec![p.ident()?];
    while let Tok::Ident(_) = p.peek() {
        out.push(p.ident()?);
    }
    Ok(out)
}

fn end(p: &mut Parser) -> Result<()> {
    if p.at_end() {
        Ok(())
    } else {
        Err(p.error(&["end of statement"]).into())
    }
}

/// Parses a model file.
pub fn parse_model(src: &str) -> Result<ParsedModel> {
    parse_model_inner(src).map_err(|e| match e {
        Error::Parse(p) => Error::Parse(Box::new(snippet(*p, src))),
        other => other,
    })
}

fn parse_model_inner(src: &str) -> Result<ParsedModel> {
    let stmts = statements(src)?;
    let mut b = Builder::default();
    let mut eof = SourcePos { line: src.lines().count().max(1), column: 1 };
    for st in &stmts {
        let mut p = Parser::new(&st.toks, false);
        let (kw, kw_pos) = p.ident()?;
        eof = st.toks.last().map(|t| t.pos.clone()).unwrap_or(eof);
        match kw.as_str() {
            "vars" => {
                b.before_lagrangian(&kw_pos, "vars")?;
                if b.vars.is_some() {
                    return Err(decl(&kw_pos, "`vars` declared twice"));
                }
                let names = idents(&mut p)?;
                end(&mut p)?;
                let mut vars: Vec<String> = Vec::new();
                for (n, pos) in names {
                    if RESERVED.contains(&n.as_str()) || vars.contains(&n) {
                        return Err(decl(&pos, format!("name `{n}` is already in use")));
                    }
                    vars.push(n);
                }
                b.vars = Some(vars);
            }
            "metric" => {
                b.before_lagrangian(&kw_pos, "metric")?;
                let n = b.num_vars(&kw_pos)?;
                let (d, dpos) = p.ident()?;
                if d != "diag" {
                    return Err(perr(
                        &dpos,
                        ParseErrorKind::Syntax { expected: vec!["`diag`".into()], found: format!("identifier `{d}`") },
                    ));
                }
                p.expect(Tok::LParen, "`(`")?;
                let mut entries = vec![(p.pos(), p.signed_rational()?)];
                while *p.peek() == Tok::Comma {
                    p.bump();
                    entries.push((p.pos(), p.signed_rational()?));
                }
                p.expect(Tok::RParen, "`)`")?;
                end(&mut p)?;
                if entries.len() != n {
                    return Err(perr(&kw_pos, ParseErrorKind::MetricDimension { vars: n, metric: entries.len() }));
                }
                if let Some((pos, _)) = entries.iter().find(|(_, q)| q.is_zero()) {
                    return Err(perr(pos, ParseErrorKind::Semantic("metric entries must be nonzero".into())));
                }
                b.metric = Some((entries.into_iter().map(|(_, q)| q).collect(), kw_pos));
            }
            "params" => {
                b.before_lagrangian(&kw_pos, "params")?;
                b.num_vars(&kw_pos)?;
                for (n, pos) in idents(&mut p)? {
                    b.fresh(&n, &pos)?;
                    b.gens.push(GeneratorSpec::parameter(n));
                }
                end(&mut p)?;
            }
            "index" => {
                b.before_lagrangian(&kw_pos, "index")?;
                b.num_vars(&kw_pos)?;
                let names = idents(&mut p)?;
                p.expect(Tok::Colon, "`:`")?;
                let kind = if matches!(p.peek(), Tok::Ident(s) if s == "spacetime") {
                    p.bump();
                    IndexKind::Spacetime
                } else {
                    let lo = int_literal(&mut p)?;
                    p.expect(Tok::DotDot, "`..`")?;
                    let hi_pos = p.pos();
                    let hi = int_literal(&mut p)?;
                    if hi < lo {
                        return Err(perr(&hi_pos, ParseErrorKind::Semantic("empty index range".into())));
                    }
                    IndexKind::Range(IndexRange::new(lo, hi))
                };
                end(&mut p)?;
                for (n, pos) in names {
                    b.fresh(&n, &pos)?;
                    b.ctx.letters.insert(n, kind.clone());
                }
            }
            "field" | "ghost" => {
                b.before_lagrangian(&kw_pos, &kw)?;
                let nv = b.num_vars(&kw_pos)?;
                let (name, npos) = p.ident()?;
                b.fresh(&name, &npos)?;
                let mut ranges = Vec::new();
                if *p.peek() == Tok::LBracket {
                    p.bump();
                    loop {
                        ranges.push(slot(&mut p, &b.ctx, nv)?);
                        if *p.peek() == Tok::Comma {
                            p.bump();
                        } else {
                            break;
                        }
                    }
                    p.expect(Tok::RBracket, "`]`")?;
                }
                let ghost = kw == "ghost";
                let mut grading = if ghost { Grading::new(Parity::Odd, 1, 0) } else { Grading::ZERO };
                while let Tok::Ident(m) = p.peek().clone() {
                    p.bump();
                    match m.as_str() {
                        "even" => grading.parity = Parity::Even,
                        "odd" => grading.parity = Parity::Odd,
                        "gh" => grading.ghost = int_literal(&mut p)? as i32,
                        _ => {
                            return Err(p.error(&["`even`", "`odd`", "`gh`"]).into());
                        }
                    }
                }
                end(&mut p)?;
                let spec = if ghost {
                    GeneratorSpec::ghost(name, ranges)
                } else {
                    GeneratorSpec::field(name, ranges)
                }
                .with_grading(grading);
                spec.validate().map_err(|e| decl(&npos, e.to_string()))?;
                if ghost {
                    b.ghosts.push(spec);
                } else {
                    b.gens.push(spec);
                }
            }
            "def" => {
                b.before_lagrangian(&kw_pos, "def")?;
                let (name, npos) = p.ident()?;
                b.fresh(&name, &npos)?;
                let mut params = Vec::new();
                if *p.peek() == Tok::LBracket {
                    for ix in p.index_list()? {
                        match ix {
                            IndexTok::Letter(l, lpos) => {
                                if !b.ctx.letters.contains_key(&l) {
                                    return Err(perr(&lpos, ParseErrorKind::UndeclaredIdentifier(l)));
                                }
                                if params.contains(&l) {
                                    return Err(perr(&lpos, ParseErrorKind::IndexRepeated(l)));
                                }
                                params.push(l);
                            }
                            IndexTok::Value(_, vpos) => {
                                return Err(p_syntax(&vpos, "index letter", "a number"));
                            }
                        }
                    }
                }
                p.expect(Tok::Equals, "`=`")?;
                let body = p.parse_all()?;
                b.ctx.defs.insert(name, Def { params, body, pos: npos });
            }
            "lagrangian" => {
                if b.theory.is_some() {
                    return Err(decl(&kw_pos, "`lagrangian` declared twice"));
                }
                let nv = b.num_vars(&kw_pos)?;
                p.expect(Tok::Equals, "`=`")?;
                let body = p.parse_all()?;
                let vars = b.vars.clone().unwrap_or_default();
                let metric = b.metric.as_ref().map(|m| m.0.clone()).unwrap_or_else(|| vec![Rational::one(); nv]);
                let sig = Signature::new(vars, b.gens.clone()).map_err(|e| decl(&kw_pos, e.to_string()))?;
                let lag = Scope { sig: &sig, metric: &metric, ctx: &b.ctx, markers: None }.eval(&body)?;
                b.theory = Some(Theory::new(sig, metric, lag)?);
            }
            "gauge" => {
                if b.theory.is_none() {
                    return Err(decl(&kw_pos, "`gauge` must follow `lagrangian`"));
                }
                let (name, npos) = p.ident()?;
                let head = if *p.peek() == Tok::LBracket { p.index_list()? } else { Vec::new() };
                p.expect(Tok::Equals, "`=`")?;
                let rest: Vec<Spanned> = st.toks[p_offset(&st.toks, &p)..].to_vec();
                b.gauge.push((name, head, rest, npos));
            }
            "master" => {
                if b.theory.is_none() {
                    return Err(decl(&kw_pos, "`master` must follow `lagrangian`"));
                }
                if b.master.is_some() {
                    return Err(decl(&kw_pos, "`master` declared twice"));
                }
                p.expect(Tok::Equals, "`=`")?;
                b.master = Some((p.parse_all()?, kw_pos));
            }
            _ => {
                return Err(perr(
                    &kw_pos,
                    ParseErrorKind::Syntax {
                        expected: vec![
                            "`vars`".into(),
                            "`metric`".into(),
                            "`params`".into(),
                            "`index`".into(),
                            "`field`".into(),
                            "`ghost`".into(),
                            "`def`".into(),
                            "`lagrangian`".into(),
                            "`gauge`".into(),
                            "`master`".into(),
                        ],
                        found: format!("identifier `{kw}`"),
                    },
                ))
            }
        }
    }
    let theory = b.theory.clone().ok_or_else(|| decl(&eof, "missing `lagrangian`"))?;
    let bv_declared = !b.ghosts.is_empty() || !b.gauge.is_empty() || b.master.is_some();
    if !bv_declared {
        return Ok(ParsedModel { theory, bv: None, context: b.ctx });
    }

    let mut ops: BTreeMap<String, BTreeMap<Vec<i64>, NoetherOperator>> = BTreeMap::new();
    for (name, head, toks, pos) in &b.gauge {
        let Some(ghost) = b.ghosts.iter().find(|g| &g.name == name) else {
            return Err(decl(pos, format!("`{name}` is not a declared ghost")));
        };
        let slot = ops.entry(name.clone()).or_default();
        for (comp, env) in bind_head(name, head, &ghost.index_ranges, &b.ctx, theory.signature().num_vars(), pos)? {
            let op = operator_from_tokens(&theory, &b.ctx, toks, &env)?;
            if slot.insert(comp.clone(), op).is_some() {
                return Err(decl(pos, format!("gauge operator for {} given twice", label(name, &comp))));
            }
        }
    }
    let gauge: Vec<GaugeGenerator> = b
        .ghosts
        .iter()
        .map(|g| GaugeGenerator { ghost: g.clone(), operators: ops.remove(&g.name).unwrap_or_default() })
        .collect();
    let mut bv = extend_to_bv(&theory, gauge)?;
    if let Some((node, _)) = &b.master {
        let s = Scope { sig: bv.signature(), metric: theory.metric(), ctx: &b.ctx, markers: None }.eval(node)?;
        bv = bv.with_master(s)?;
    }
    Ok(ParsedModel { theory, bv: Some(bv), context: b.ctx })
}

fn p_syntax(pos: &SourcePos, expected: &str, found: &str) -> Error {
    perr(pos, ParseErrorKind::Syntax { expected: vec![expected.into()], found: found.into() })
}

/// Index of the parser's current token within `toks`.
fn p_offset(toks: &[Spanned], p: &Parser) -> usize {
    let pos = p.pos();
    toks.iter().position(|t| t.pos == pos).unwrap_or(toks.len() - 1)
}

fn label(name: &str, comp: &[i64]) -> String {
    if comp.is_empty() {
        name.to_string()
    } else {
        let idx: Vec<String> = comp.iter().map(|c| c.to_string()).collect();
        format!("{name}[{}]", idx.join(","))
    }
}

fn letter_range(ctx: &Context, letter: &str, num_vars: usize) -> Option<IndexRange> {
    match ctx.letters.get(letter)? {
        IndexKind::Spacetime => Some(IndexRange::new(0, num_vars as i64 - 1)),
        IndexKind::Range(r) => Some(*r),
    }
}

fn slot(p: &mut Parser, ctx: &Context, num_vars: usize) -> Result<IndexRange> {
    if let Tok::Ident(l) = p.peek().clone() {
        let (_, pos) = p.ident()?;
        return letter_range(ctx, &l, num_vars).ok_or_else(|| perr(&pos, ParseErrorKind::UndeclaredIdentifier(l)));
    }
    let lo = int_literal(p)?;
    p.expect(Tok::DotDot, "`..`")?;
    let pos = p.pos();
    let hi = int_literal(p)?;
    if hi < lo {
        return Err(perr(&pos, ParseErrorKind::Semantic("empty index range".into())));
    }
    Ok(IndexRange::new(lo, hi))
}

/// Enumerates the components selected by an index head such as `C[a]` or
/// `A[1,mu]`, with the environment binding each letter.
fn bind_head(
    name: &str,
    head: &[IndexTok],
    ranges: &[IndexRange],
    ctx: &Context,
    num_vars: usize,
    pos: &SourcePos,
) -> Result<Vec<(Vec<i64>, Env)>> {
    if head.len() != ranges.len() {
        return Err(perr(
            pos,
            ParseErrorKind::IndexArity { name: name.to_string(), expected: ranges.len(), found: head.len() },
        ));
    }
    let mut letters: Vec<(String, IndexRange)> = Vec::new();
    for ix in head {
        if let IndexTok::Letter(l, lpos) = ix {
            let r = letter_range(ctx, l, num_vars)
                .ok_or_else(|| perr(lpos, ParseErrorKind::UndeclaredIdentifier(l.clone())))?;
            if !letters.iter().any(|(x, _)| x == l) {
                letters.push((l.clone(), r));
            }
        }
    }
    let mut envs = vec![Env::new()];
    for (l, r) in &letters {
        envs = envs
            .into_iter()
            .flat_map(|env| {
                (r.lo..=r.hi).map(move |v| {
                    let mut e = env.clone();
                    e.insert(l.clone(), v);
                    e
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for env in envs {
        let mut comp = Vec::new();
        for (slot, (ix, r)) in head.iter().zip(ranges).enumerate() {
            let (v, vpos) = match ix {
                IndexTok::Value(v, vpos) => (*v, vpos),
                IndexTok::Letter(l, lpos) => (env[l], lpos),
            };
            if !r.contains(v) {
                return Err(perr(
                    vpos,
                    ParseErrorKind::IndexRange { name: name.to_string(), slot, value: v, lo: r.lo, hi: r.hi },
                ));
            }
            comp.push(v);
        }
        out.push((comp, env));
    }
    Ok(out)
}

/// Parses an operator body (tokens ending in `Eof`) with `env` binding head letters.
fn operator_from_tokens(theory: &Theory, ctx: &Context, toks: &[Spanned], env: &Env) -> Result<NoetherOperator> {
    let sig = theory.signature();
    if let Some(alpha) = shorthand(toks, sig)? {
        return NoetherOperator::uniform(sig, &theory.field_components(), alpha);
    }
    let markers: Vec<GeneratorSpec> = sig
        .generators()
        .iter()
        .filter(|g| g.role == Role::Field)
        .map(|g| GeneratorSpec { name: format!("E({})", g.name), ..g.clone() })
        .collect();
    let msig = sig.extend(markers)?;
    let map: MarkerMap = sig
        .generators()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.role == Role::Field)
        .map(|(i, g)| (i, msig.lookup_generator(&format!("E({})", g.name)).expect("marker declared")))
        .collect();
    let back: BTreeMap<usize, usize> = map.iter().map(|(k, v)| (*v, *k)).collect();
    let node = Parser::new(toks, true).parse_all()?;
    let e = Scope { sig: &msig, metric: theory.metric(), ctx, markers: Some(&map) }.eval_with(&node, env)?;

    let pos = toks.first().map(|t| t.pos.clone()).unwrap_or(SourcePos { line: 1, column: 1 });
    let mut op = NoetherOperator::new(sig);
    let mut rebuilt = Expression::zero(&msig);
    for c in e.coords() {
        let Some(&field) = back.get(&c.gen) else { continue };
        let atom = Atom::Coord(c.clone());
        let coef = e.partial_derivative(&atom, Side::Right);
        if coef.coords().iter().any(|x| back.contains_key(&x.gen)) {
            return Err(perr(&pos, ParseErrorKind::Semantic("operator must be linear in `E(...)`".into())));
        }
        rebuilt = &rebuilt + &(&coef * &Expression::coord(&msig, c.clone()));
        op.add((field, c.comp.clone()), c.derivs().to_vec(), coef.reinterpret(sig)?)?;
    }
    if rebuilt != e {
        return Err(perr(&pos, ParseErrorKind::Semantic("every operator term must contain one `E(...)` factor".into())));
    }
    Ok(op)
}

/// Recognises `D_t D_x ...`, returning the multi-index.
fn shorthand(toks: &[Spanned], sig: &Signature) -> Result<Option<Vec<u32>>> {
    let body = &toks[..toks.len().saturating_sub(1)];
    if body.is_empty() || !body.iter().all(|t| matches!(&t.tok, Tok::Ident(s) if s.starts_with("D_"))) {
        return Ok(None);
    }
    let mut alpha = vec![0u32; sig.num_vars()];
    for t in body {
        let Tok::Ident(s) = &t.tok else { unreachable!() };
        let v = sig
            .var_index(&s[2..])
            .ok_or_else(|| perr(&t.pos, ParseErrorKind::UndeclaredIdentifier(s[2..].to_string())))?;
        alpha[v] += 1;
    }
    Ok(Some(alpha))
}

/// Splits `text` at top-level `;`, returning each piece with its starting column.
fn pieces(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ';' if depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out.into_iter()
        .filter(|(_, s)| !s.trim().is_empty())
        .map(|(i, s)| (text[..i].chars().count() + 1, s))
        .collect()
}

struct Assignment {
    name: String,
    star: bool,
    indices: Vec<IndexTok>,
    pos: SourcePos,
    rhs: Node,
}

fn assignments(text: &str) -> std::result::Result<Vec<Assignment>, ParseError> {
    let mut out = Vec::new();
    for (col, piece) in pieces(text) {
        let toks = tokenize(piece, 1, col)?;
        let mut p = Parser::new(&toks, false);
        let (name, pos) = p.ident()?;
        let star = if *p.peek() == Tok::AntiStar {
            p.bump();
            true
        } else {
            false
        };
        let indices = if *p.peek() == Tok::LBracket { p.index_list()? } else { Vec::new() };
        p.expect(Tok::Equals, "`=`")?;
        let rhs = p.parse_all()?;
        out.push(Assignment { name, star, indices, pos, rhs });
    }
    Ok(out)
}

/// Component assignments `u[1] = t^2; m = 2` resolved against the model.
fn resolve(
    text: &str,
    model: &ParsedModel,
) -> Result<(BTreeMap<ComponentKey, Expression>, BTreeMap<usize, Rational>)> {
    let sig = model.signature();
    let mut fields = BTreeMap::new();
    let mut params = BTreeMap::new();
    let wrap = |e: Error| match e {
        Error::Parse(p) => Error::Parse(Box::new(snippet(*p, text))),
        other => other,
    };
    let list = assignments(text).map_err(|e| wrap(e.into()))?;
    for a in list {
        let full = if a.star { format!("{}*", a.name) } else { a.name.clone() };
        let gen = sig
            .generator_index(&full)
            .ok_or_else(|| wrap(perr(&a.pos, ParseErrorKind::UndeclaredIdentifier(full.clone()))))?;
        let spec = sig.generator(gen);
        let scope = Scope { sig, metric: model.theory.metric(), ctx: &model.context, markers: None };
        for (comp, env) in bind_head(&full, &a.indices, &spec.index_ranges, &model.context, sig.num_vars(), &a.pos)
            .map_err(wrap)?
        {
            let value = scope.eval_with(&a.rhs, &env).map_err(|e| wrap(e.into()))?;
            if spec.is_parameter() {
                let q = value.as_constant().ok_or_else(|| {
                    wrap(perr(&a.pos, ParseErrorKind::Semantic(format!("parameter `{full}` needs a numeric value"))))
                })?;
                params.insert(gen, q);
            } else if fields.insert((gen, comp.clone()), value).is_some() {
                return Err(wrap(perr(
                    &a.pos,
                    ParseErrorKind::Semantic(format!("{} assigned twice", label(&full, &comp))),
                )));
            }
        }
    }
    Ok((fields, params))
}

/// Section such as `u = t^2 + 1; m = 2` (parameter values are optional).
pub fn parse_section(text: &str, model: &ParsedModel) -> Result<Section> {
    let (fields, params) = resolve(text, model)?;
    let mut s = Section::new(model.signature(), fields)?;
    for (p, v) in params {
        s = s.with_param(p, v);
    }
    Ok(s)
}

/// Characteristics such as `A[mu] = d(C;mu)`.
pub fn parse_characteristics(text: &str, model: &ParsedModel) -> Result<EvolutionaryVF> {
    let (fields, params) = resolve(text, model)?;
    if let Some(p) = params.keys().next() {
        return Err(Error::InvalidTheory(format!(
            "`{}` is a parameter and has no characteristic",
            model.signature().generator(*p).name
        )));
    }
    EvolutionaryVF::new(model.signature(), fields)
}

/// Box such as `t=0..1; x=-1..1/2`; every variable needs an interval.
pub fn parse_box(text: &str, sig: &Signature) -> Result<Vec<(Rational, Rational)>> {
    let run = || -> Result<Vec<(Rational, Rational)>> {
        let mut bounds: Vec<Option<(Rational, Rational)>> = vec![None; sig.num_vars()];
        for (col, piece) in pieces(text) {
            let toks = tokenize(piece, 1, col)?;
            let mut p = Parser::new(&toks, false);
            let (name, pos) = p.ident()?;
            let v = sig.var_index(&name).ok_or_else(|| perr(&pos, ParseErrorKind::UndeclaredIdentifier(name.clone())))?;
            p.expect(Tok::Equals, "`=`")?;
            let lo = p.signed_rational()?;
            p.expect(Tok::DotDot, "`..`")?;
            let hi = p.signed_rational()?;
            end(&mut p)?;
            if bounds[v].replace((lo, hi)).is_some() {
                return Err(perr(&pos, ParseErrorKind::Semantic(format!("interval for `{name}` given twice"))));
            }
        }
        bounds
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                b.ok_or_else(|| {
                    perr(
                        &SourcePos { line: 1, column: text.chars().count() + 1 },
                        ParseErrorKind::Semantic(format!("missing interval for `{}`", sig.vars()[i])),
                    )
                })
            })
            .collect()
    };
    run().map_err(|e| match e {
        Error::Parse(p) => Error::Parse(Box::new(snippet(*p, text))),
        other => other,
    })
}

fn format_operator(op: &NoetherOperator) -> String {
    let sig = op.signature();
    let mut parts = Vec::new();
    for ((gen, comp), per) in op.coefficients() {
        for (alpha, coef) in per {
            let mut m = format!("E({})", label(&sig.generator(*gen).name, comp));
            for (v, &n) in alpha.iter().enumerate() {
                for _ in 0..n {
                    m = format!("d({m};{})", sig.vars()[v]);
                }
            }
            let c = format_expression(coef, Style::Plain);
            parts.push(if coef.as_constant().is_some_and(|q| q.is_one()) { m } else { format!("({c}) * {m}") });
        }
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn format_decl(spec: &GeneratorSpec) -> String {
    let kw = if spec.role == Role::Ghost { "ghost" } else { "field" };
    let mut s = format!("{kw} {}", spec.name);
    if !spec.index_ranges.is_empty() {
        let r: Vec<String> = spec.index_ranges.iter().map(|r| format!("{}..{}", r.lo, r.hi)).collect();
        s.push_str(&format!("[{}]", r.join(",")));
    }
    let parity = if spec.grading.parity.is_odd() { "odd" } else { "even" };
    s.push_str(&format!(" {parity} gh {}", spec.grading.ghost));
    s
}

/// Fully expanded model text (numeric indices, no definitions) that parses
/// back to the same theory and BV data.
pub fn format_model(model: &ParsedModel) -> String {
    let t = &model.theory;
    let sig = t.signature();
    let mut out = String::new();
    if sig.num_vars() > 0 {
        out.push_str(&format!("vars {}\n", sig.vars().join(" ")));
        let m: Vec<String> = t.metric().iter().map(|q| q.to_string()).collect();
        out.push_str(&format!("metric diag({})\n", m.join(", ")));
    }
    for g in sig.generators() {
        if g.is_parameter() {
            out.push_str(&format!("params {}\n", g.name));
        } else {
            out.push_str(&format_decl(g));
            out.push('\n');
        }
    }
    if let Some(bv) = &model.bv {
        for g in bv.signature().generators() {
            if g.role == Role::Ghost && sig.generator_index(&g.name).is_none() {
                out.push_str(&format_decl(g));
                out.push('\n');
            }
        }
    }
    out.push_str(&format!("lagrangian = {}\n", format_expression(t.lagrangian(), Style::Plain)));
    if let Some(bv) = &model.bv {
        for (ghost, ops) in bv.gauge() {
            let name = &bv.signature().generator(*ghost).name;
            for (comp, op) in ops {
                out.push_str(&format!("gauge {} = {}\n", label(name, comp), format_operator(op)));
            }
        }
        out.push_str(&format!("master = {}\n", format_expression(bv.master_action().density(), Style::Plain)));
    }
    out
}
