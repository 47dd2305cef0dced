//! Evaluation of parsed expressions with Einstein summation.
//!
//! Index letters are written lowered. A letter occurring twice in one term
//! is summed over its range; for spacetime letters each such pair carries the
//! inverse metric entry, except that indices of antifields and of `E(...)`
//! markers count as raised (pairing a raised with a lowered index inserts
//! nothing, two raised indices insert the metric entry itself).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::parser::{IndexTok, Node};
use crate::error::{ParseError, ParseErrorKind, SourcePos};
use crate::graded::{Expression, IndexRange, JetCoord, Rational, Signature};
use crate::jet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexKind {
    /// Runs over the independent variables (`0..n-1`), contracted with the metric.
    Spacetime,
    /// Internal range, contracted with the identity.
    Range(IndexRange),
}

#[derive(Debug, Clone)]
pub struct Def {
    pub params: Vec<String>,
    pub body: Node,
    pub pos: SourcePos,
}

/// Index letters and named sub-expressions available while expanding.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub letters: BTreeMap<String, IndexKind>,
    pub defs: BTreeMap<String, Def>,
}

/// Maps a generator (by index) to the marker generator standing for its
/// Euler–Lagrange expression inside operator specifications.
pub type MarkerMap = BTreeMap<usize, usize>;

pub struct Scope<'a> {
    pub sig: &'a Arc<Signature>,
    pub metric: &'a [Rational],
    pub ctx: &'a Context,
    pub markers: Option<&'a MarkerMap>,
}

pub type Env = BTreeMap<String, i64>;

#[derive(Debug, Clone)]
struct Occ {
    total: u32,
    dual: u32,
    pos: SourcePos,
}

type Counts = BTreeMap<String, Occ>;

fn err(pos: &SourcePos, kind: ParseErrorKind) -> ParseError {
    ParseError::new(pos.clone(), kind)
}

fn merge(into: &mut Counts, from: Counts) {
    for (k, o) in from {
        into.entry(k)
            .and_modify(|e| {
                e.total += o.total;
                e.dual += o.dual;
            })
            .or_insert(o);
    }
}

impl<'a> Scope<'a> {
    /// Expands a whole expression: free letters must all be contracted.
    pub fn eval(&self, node: &Node) -> Result<Expression, ParseError> {
        self.contract(node, &Env::new())
    }

    /// Expands with some letters already fixed.
    pub fn eval_with(&self, node: &Node, env: &Env) -> Result<Expression, ParseError> {
        self.contract(node, env)
    }

    fn is_letter(&self, s: &str) -> bool {
        self.ctx.letters.contains_key(s)
    }

    fn range_of(&self, letter: &str) -> (i64, i64, bool) {
        match &self.ctx.letters[letter] {
            IndexKind::Spacetime => (0, self.sig.num_vars() as i64 - 1, true),
            IndexKind::Range(r) => (r.lo, r.hi, false),
        }
    }

    fn sym_counts(&self, indices: &[IndexTok], dual: bool, env: &Env) -> Counts {
        let mut c = Counts::new();
        for ix in indices {
            if let IndexTok::Letter(l, pos) = ix {
                if self.is_letter(l) && !env.contains_key(l) {
                    merge(
                        &mut c,
                        Counts::from([(l.clone(), Occ { total: 1, dual: dual as u32, pos: pos.clone() })]),
                    );
                }
            }
        }
        c
    }

    /// Letter occurrences visible from outside `node`.
    fn counts(&self, node: &Node, env: &Env) -> Result<Counts, ParseError> {
        Ok(match node {
            Node::Num(_) => Counts::new(),
            Node::Sym { star, indices, .. } => self.sym_counts(indices, *star, env),
            Node::Deriv { inner, var, pos } => {
                let mut c = self.free(inner, env)?;
                if self.is_letter(var) && !env.contains_key(var) {
                    merge(&mut c, Counts::from([(var.clone(), Occ { total: 1, dual: 0, pos: pos.clone() })]));
                }
                c
            }
            Node::Marker { inner, .. } => {
                let mut c = self.free(inner, env)?;
                for o in c.values_mut() {
                    o.dual = o.total;
                }
                c
            }
            Node::Neg(inner) => self.counts(inner, env)?,
            Node::Sum(parts) => {
                let mut c = Counts::new();
                for p in parts {
                    for (k, o) in self.free(p, env)? {
                        c.entry(k).or_insert(o);
                    }
                }
                c
            }
            Node::Product(fs) => {
                let mut c = Counts::new();
                for f in fs {
                    merge(&mut c, self.counts(f, env)?);
                }
                c
            }
            Node::Pow { base, exp, .. } => {
                let mut c = self.free(base, env)?;
                let k = exp.unsigned_abs();
                for o in c.values_mut() {
                    o.total *= k;
                    o.dual *= k;
                }
                c
            }
        })
    }

    /// Counts left over after contracting the pairs inside `node`.
    fn free(&self, node: &Node, env: &Env) -> Result<Counts, ParseError> {
        let mut c = self.counts(node, env)?;
        for (l, o) in &c {
            if o.total > 2 {
                return Err(err(&o.pos, ParseErrorKind::IndexRepeated(l.clone())));
            }
        }
        c.retain(|_, o| o.total == 1);
        Ok(c)
    }

    fn contract(&self, node: &Node, env: &Env) -> Result<Expression, ParseError> {
        let counts = self.counts(node, env)?;
        let mut summed = Vec::new();
        for (l, o) in &counts {
            match o.total {
                1 => return Err(err(&o.pos, ParseErrorKind::UnboundIndex(l.clone()))),
                2 => summed.push((l.clone(), o.dual)),
                _ => return Err(err(&o.pos, ParseErrorKind::IndexRepeated(l.clone()))),
            }
        }
        let mut out = Expression::zero(self.sig);
        let mut env = env.clone();
        self.sum_over(node, &summed, 0, &mut env, Rational::one(), &mut out)?;
        Ok(out)
    }

    fn sum_over(
        &self,
        node: &Node,
        summed: &[(String, u32)],
        at: usize,
        env: &mut Env,
        weight: Rational,
        out: &mut Expression,
    ) -> Result<(), ParseError> {
        if at == summed.len() {
            let v = self.expand(node, env)?;
            *out = &*out + &v.scale(&weight);
            return Ok(());
        }
        let (letter, dual) = &summed[at];
        let (lo, hi, spacetime) = self.range_of(letter);
        for v in lo..=hi {
            let w = if spacetime {
                let g = &self.metric[v as usize];
                match dual {
                    0 => g.recip(),
                    1 => Rational::one(),
                    _ => g.clone(),
                }
            } else {
                Rational::one()
            };
            env.insert(letter.clone(), v);
            self.sum_over(node, summed, at + 1, env, &weight * w, out)?;
        }
        env.remove(letter);
        Ok(())
    }

    fn expand(&self, node: &Node, env: &Env) -> Result<Expression, ParseError> {
        match node {
            Node::Num(q) => Ok(Expression::constant(self.sig, q.clone())),
            Node::Sym { name, star, indices, pos } => self.symbol(name, *star, indices, pos, env),
            Node::Deriv { inner, var, pos } => {
                let v = self.deriv_var(var, pos, env)?;
                let e = self.contract(inner, env)?;
                Ok(jet::total_derivative(&e, v))
            }
            Node::Marker { inner, pos } => self.marker(inner, pos, env),
            Node::Neg(inner) => Ok(-self.expand(inner, env)?),
            Node::Sum(parts) => {
                let mut out = Expression::zero(self.sig);
                for p in parts {
                    out = out + self.contract(p, env)?;
                }
                Ok(out)
            }
            Node::Product(fs) => {
                let mut out = Expression::one(self.sig);
                for f in fs {
                    if out.is_zero() {
                        break;
                    }
                    out = out * self.expand(f, env)?;
                }
                Ok(out)
            }
            Node::Pow { base, exp, pos } => {
                let b = self.contract(base, env)?;
                if *exp >= 0 {
                    return Ok(b.pow(*exp as u32));
                }
                let inv = b.invert_monomial().ok_or_else(|| {
                    err(
                        pos,
                        ParseErrorKind::Semantic(
                            "negative exponents apply only to parameter monomials".into(),
                        ),
                    )
                })?;
                Ok(inv.pow(exp.unsigned_abs()))
            }
        }
    }

    fn deriv_var(&self, var: &str, pos: &SourcePos, env: &Env) -> Result<usize, ParseError> {
        if let Some(i) = self.sig.var_index(var) {
            if !self.is_letter(var) {
                return Ok(i);
            }
        }
        if let Some(IndexKind::Spacetime) = self.ctx.letters.get(var) {
            if let Some(&v) = env.get(var) {
                return Ok(v as usize);
            }
        }
        if self.is_letter(var) {
            return Err(err(
                pos,
                ParseErrorKind::Semantic(format!("index `{var}` is not a spacetime index")),
            ));
        }
        Err(err(pos, ParseErrorKind::UndeclaredIdentifier(var.to_string())))
    }

    fn index_values(&self, indices: &[IndexTok], env: &Env) -> Result<Vec<(i64, SourcePos)>, ParseError> {
        indices
            .iter()
            .map(|ix| match ix {
                IndexTok::Value(v, pos) => Ok((*v, pos.clone())),
                IndexTok::Letter(l, pos) => {
                    if let Some(v) = env.get(l) {
                        Ok((*v, pos.clone()))
                    } else if let Some(i) = self.sig.var_index(l) {
                        Ok((i as i64, pos.clone()))
                    } else if self.is_letter(l) {
                        Err(err(pos, ParseErrorKind::UnboundIndex(l.clone())))
                    } else {
                        Err(err(pos, ParseErrorKind::UndeclaredIdentifier(l.clone())))
                    }
                }
            })
            .collect()
    }

    /// Generator index and checked component tuple of a symbol.
    fn generator_component(
        &self,
        name: &str,
        star: bool,
        indices: &[IndexTok],
        pos: &SourcePos,
        env: &Env,
    ) -> Result<(usize, Vec<i64>), ParseError> {
        let full = if star { format!("{name}*") } else { name.to_string() };
        let gen = match self.sig.generator_index(&full) {
            Some(g) => g,
            None if star && self.sig.generator_index(name).is_some() => {
                return Err(err(
                    pos,
                    ParseErrorKind::Semantic(format!("`{name}` has no antifield in this context")),
                ))
            }
            None => return Err(err(pos, ParseErrorKind::UndeclaredIdentifier(full))),
        };
        let spec = self.sig.generator(gen);
        if spec.is_parameter() && !indices.is_empty() {
            return Err(err(
                pos,
                ParseErrorKind::IndexArity { name: full, expected: 0, found: indices.len() },
            ));
        }
        let values = self.index_values(indices, env)?;
        if values.len() != spec.index_ranges.len() {
            return Err(err(
                pos,
                ParseErrorKind::IndexArity {
                    name: full,
                    expected: spec.index_ranges.len(),
                    found: values.len(),
                },
            ));
        }
        for (slot, ((v, vpos), r)) in values.iter().zip(&spec.index_ranges).enumerate() {
            if !r.contains(*v) {
                return Err(err(
                    vpos,
                    ParseErrorKind::IndexRange { name: full, slot, value: *v, lo: r.lo, hi: r.hi },
                ));
            }
        }
        Ok((gen, values.into_iter().map(|(v, _)| v).collect()))
    }

    fn symbol(
        &self,
        name: &str,
        star: bool,
        indices: &[IndexTok],
        pos: &SourcePos,
        env: &Env,
    ) -> Result<Expression, ParseError> {
        if self.is_letter(name) {
            return Err(err(
                pos,
                ParseErrorKind::Semantic(format!("index letter `{name}` used as a symbol")),
            ));
        }
        if !star && self.sig.generator_index(name).is_none() {
            if let Some(def) = self.ctx.defs.get(name) {
                return self.call_def(name, def, indices, pos, env);
            }
            if let Some(v) = self.builtin(name, indices, pos, env)? {
                return Ok(Expression::constant(self.sig, v));
            }
            if let Some(i) = self.sig.var_index(name) {
                if !indices.is_empty() {
                    return Err(err(
                        pos,
                        ParseErrorKind::IndexArity { name: name.into(), expected: 0, found: indices.len() },
                    ));
                }
                return Ok(Expression::var(self.sig, i));
            }
        }
        let (gen, comp) = self.generator_component(name, star, indices, pos, env)?;
        Ok(Expression::coord(self.sig, JetCoord::base(gen, comp, self.sig.num_vars())))
    }

    fn call_def(
        &self,
        name: &str,
        def: &Def,
        indices: &[IndexTok],
        pos: &SourcePos,
        env: &Env,
    ) -> Result<Expression, ParseError> {
        if indices.len() != def.params.len() {
            return Err(err(
                pos,
                ParseErrorKind::IndexArity { name: name.into(), expected: def.params.len(), found: indices.len() },
            ));
        }
        let values = self.index_values(indices, env)?;
        let mut inner = Env::new();
        for (p, (v, vpos)) in def.params.iter().zip(values) {
            let (lo, hi, _) = self.range_of(p);
            if v < lo || v > hi {
                return Err(err(
                    &vpos,
                    ParseErrorKind::IndexRange { name: name.into(), slot: inner.len(), value: v, lo, hi },
                ));
            }
            inner.insert(p.clone(), v);
        }
        self.contract(&def.body, &inner)
    }

    fn builtin(
        &self,
        name: &str,
        indices: &[IndexTok],
        pos: &SourcePos,
        env: &Env,
    ) -> Result<Option<Rational>, ParseError> {
        match name {
            "eps" => {
                let vals: Vec<i64> = self.index_values(indices, env)?.into_iter().map(|(v, _)| v).collect();
                Ok(Some(Rational::from_integer(levi_civita(&vals).into())))
            }
            "delta" => {
                if indices.len() != 2 {
                    return Err(err(
                        pos,
                        ParseErrorKind::IndexArity { name: "delta".into(), expected: 2, found: indices.len() },
                    ));
                }
                let vals = self.index_values(indices, env)?;
                Ok(Some(if vals[0].0 == vals[1].0 { Rational::one() } else { Rational::zero() }))
            }
            _ => Ok(None),
        }
    }

    fn marker(&self, inner: &Node, pos: &SourcePos, env: &Env) -> Result<Expression, ParseError> {
        let Some(markers) = self.markers else {
            return Err(err(pos, ParseErrorKind::Semantic("`E(...)` is only valid in operators".into())));
        };
        let Node::Sym { name, star, indices, pos: spos } = inner else {
            return Err(err(pos, ParseErrorKind::Semantic("`E(...)` takes a field component".into())));
        };
        let (gen, comp) = self.generator_component(name, *star, indices, spos, env)?;
        let marker = markers.get(&gen).ok_or_else(|| {
            err(spos, ParseErrorKind::Semantic(format!("`{name}` is not a field")))
        })?;
        Ok(Expression::coord(self.sig, JetCoord::base(*marker, comp, self.sig.num_vars())))
    }
}

/// Sign of the permutation sorting `vals`, or 0 when a value repeats.
pub fn levi_civita(vals: &[i64]) -> i64 {
    let mut sign = 1;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            match vals[i].cmp(&vals[j]) {
                std::cmp::Ordering::Equal => return 0,
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}
