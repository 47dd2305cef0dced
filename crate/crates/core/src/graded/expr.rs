use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Grading, Parity, Signature};
use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formal derivative `∂^α u^a_c` of one generator component.
///
/// Ordering is lexicographic on (generator, component, total order,
/// derivative counts), which fixes the canonical order of factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetCoord {
    pub gen: usize,
    pub comp: Vec<i64>,
    order: u32,
    deriv: Vec<u32>,
}

impl JetCoord {
    pub fn new(gen: usize, comp: Vec<i64>, deriv: Vec<u32>) -> Self {
        let order = deriv.iter().sum();
        JetCoord { gen, comp, order, deriv }
    }

    /// The undifferentiated coordinate.
    pub fn base(gen: usize, comp: Vec<i64>, num_vars: usize) -> Self {
        JetCoord { gen, comp, order: 0, deriv: vec![0; num_vars] }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn derivs(&self) -> &[u32] {
        &self.deriv
    }

    pub fn differentiate(&self, var: usize) -> JetCoord {
        let mut c = self.clone();
        c.deriv[var] += 1;
        c.order += 1;
        c
    }

    /// Coordinate with the same generator component and derivative counts `deriv`.
    pub fn with_derivs(&self, deriv: Vec<u32>) -> JetCoord {
        JetCoord::new(self.gen, self.comp.clone(), deriv)
    }

    pub fn is_component(&self, gen: usize, comp: &[i64]) -> bool {
        self.gen == gen && self.comp == comp
    }
}

/// A single commuting-or-anticommuting factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Independent variable, by declaration index.
    Var(usize),
    /// Jet coordinate of a field, ghost or antifield, or a parameter (order 0).
    Coord(JetCoord),
}

impl Atom {
    pub fn as_coord(&self) -> Option<&JetCoord> {
        match self {
            Atom::Coord(c) => Some(c),
            Atom::Var(_) => None,
        }
    }

    pub fn grading(&self, sig: &Signature) -> Grading {
        match self {
            Atom::Var(_) => Grading::ZERO,
            Atom::Coord(c) => sig.generator(c.gen).grading,
        }
    }
}

/// Factor part of a monomial: sorted even factors with nonzero exponents
/// followed by strictly sorted odd factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Term {
    even: Vec<(Atom, i32)>,
    odd: Vec<JetCoord>,
}

impl Term {
    pub fn one() -> Term {
        Term::default()
    }

    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty()
    }

    pub fn even_factors(&self) -> &[(Atom, i32)] {
        &self.even
    }

    pub fn odd_factors(&self) -> &[JetCoord] {
        &self.odd
    }

    pub fn grading(&self, sig: &Signature) -> Grading {
        let mut g = Grading::ZERO;
        for (a, k) in &self.even {
            g = g + a.grading(sig).pow(*k);
        }
        for c in &self.odd {
            g = g + sig.generator(c.gen).grading;
        }
        g
    }

    pub fn parity(&self) -> Parity {
        Parity::from_odd(self.odd.len() % 2 == 1)
    }

    /// Exponent of `atom` (0 if absent).
    pub fn exponent(&self, atom: &Atom) -> i32 {
        if let Atom::Coord(c) = atom {
            if self.odd.binary_search(c).is_ok() {
                return 1;
            }
        }
        self.even
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.even[i].1)
            .unwrap_or(0)
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.even
            .iter()
            .map(|(a, _)| a.clone())
            .chain(self.odd.iter().cloned().map(Atom::Coord))
    }

    /// Graded product; `None` when an odd factor repeats. The sign is the
    /// Koszul sign of sorting the concatenated odd factors.
    pub fn mul(&self, other: &Term) -> Option<(Term, bool)> {
        let mut even = Vec::with_capacity(self.even.len() + other.even.len());
        let (mut i, mut j) = (0, 0);
        while i < self.even.len() && j < other.even.len() {
            let (a, ka) = &self.even[i];
            let (b, kb) = &other.even[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    even.push((a.clone(), *ka));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    even.push((b.clone(), *kb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if ka + kb != 0 {
                        even.push((a.clone(), ka + kb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        even.extend_from_slice(&self.even[i..]);
        even.extend_from_slice(&other.even[j..]);

        let (odd, negative) = merge_odd(&self.odd, &other.odd)?;
        Some((Term { even, odd }, negative))
    }

    fn without_even(&self, idx: usize) -> Term {
        let mut t = self.clone();
        if t.even[idx].1 == 1 {
            t.even.remove(idx);
        } else {
            t.even[idx].1 -= 1;
        }
        t
    }

    fn split_odd(&self, p: usize) -> (Term, Term) {
        let left = Term { even: self.even.clone(), odd: self.odd[..p].to_vec() };
        let right = Term { even: Vec::new(), odd: self.odd[p + 1..].to_vec() };
        (left, right)
    }
}

/// Merges two strictly sorted odd lists, returning the sign parity of the shuffle.
fn merge_odd(a: &[JetCoord], b: &[JetCoord]) -> Option<(Vec<JetCoord>, bool)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                // b[j] jumps over every remaining element of a
                inversions += a.len() - i;
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, inversions % 2 == 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Graded differential polynomial in canonical normal form.
#[derive(Clone)]
pub struct Expression {
    sig: Arc<Signature>,
    terms: BTreeMap<Term, Rational>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        (self.sig.extends(&other.sig) || other.sig.extends(&self.sig)) && self.terms == other.terms
    }
}

impl Eq for Expression {}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({})", self)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::format_expression(self, crate::frontend::Style::Plain))
    }
}

impl Expression {
    pub fn zero(sig: &Arc<Signature>) -> Self {
        Expression { sig: sig.clone(), terms: BTreeMap::new() }
    }

    pub fn one(sig: &Arc<Signature>) -> Self {
        Self::constant(sig, Rational::one())
    }

    pub fn constant(sig: &Arc<Signature>, c: Rational) -> Self {
        Self::from_term(sig, Term::one(), c)
    }

    pub fn from_term(sig: &Arc<Signature>, term: Term, coef: Rational) -> Self {
        let mut e = Self::zero(sig);
        e.add_term(term, coef);
        e
    }

    /// The single atom as an expression, placed by its parity.
    pub fn atom(sig: &Arc<Signature>, atom: Atom) -> Self {
        let term = match &atom {
            Atom::Coord(c) if sig.generator(c.gen).grading.parity.is_odd() => {
                Term { even: Vec::new(), odd: vec![c.clone()] }
            }
            _ => Term { even: vec![(atom, 1)], odd: Vec::new() },
        };
        Self::from_term(sig, term, Rational::one())
    }

    pub fn var(sig: &Arc<Signature>, var: usize) -> Self {
        Self::atom(sig, Atom::Var(var))
    }

    pub fn coord(sig: &Arc<Signature>, c: JetCoord) -> Self {
        Self::atom(sig, Atom::Coord(c))
    }

    /// Undifferentiated component `gen[comp]` (or the parameter `gen`).
    pub fn generator(sig: &Arc<Signature>, gen: usize, comp: &[i64]) -> Result<Self> {
        sig.check_component(gen, comp)?;
        Ok(Self::coord(sig, JetCoord::base(gen, comp.to_vec(), sig.num_vars())))
    }

    /// Normalizes the written product `coef * f1 * f2 * ...` (factors in order).
    pub fn product_of_atoms(sig: &Arc<Signature>, coef: Rational, factors: &[Atom]) -> Self {
        let mut acc = Self::constant(sig, coef);
        for a in factors {
            acc = &acc * &Self::atom(sig, a.clone());
        }
        acc
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Term, &Rational)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn coefficient(&self, term: &Term) -> Rational {
        self.terms.get(term).cloned().unwrap_or_else(Rational::zero)
    }

    /// Rational value if the expression is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (t, c) = self.terms.iter().next().unwrap();
                t.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, term: Term, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(term) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn merge_from(&mut self, other: BTreeMap<Term, Rational>) {
        for (t, c) in other {
            self.add_term(t, c);
        }
    }

    /// Common signature of two operands: the more extended one, if related.
    fn joint_sig(&self, other: &Expression) -> Result<Arc<Signature>> {
        if self.sig.extends(&other.sig) {
            Ok(self.sig.clone())
        } else if other.sig.extends(&self.sig) {
            Ok(other.sig.clone())
        } else {
            Err(Error::GeneratorMismatch)
        }
    }

    pub fn try_add(&self, other: &Expression) -> Result<Expression> {
        let sig = self.joint_sig(other)?;
        let (mut big, small) =
            if self.len() >= other.len() { (self.clone(), other) } else { (other.clone(), self) };
        big.sig = sig;
        for (t, c) in &small.terms {
            big.add_term(t.clone(), c.clone());
        }
        Ok(big)
    }

    pub fn try_sub(&self, other: &Expression) -> Result<Expression> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Expression) -> Result<Expression> {
        self.mul_with(other, exec::default_policy())
    }

    pub fn mul_with(&self, other: &Expression, policy: ExecPolicy) -> Result<Expression> {
        let sig = self.joint_sig(other)?;
        let mut out = Expression::zero(&sig);
        if self.is_zero() || other.is_zero() {
            return Ok(out);
        }
        let lhs: Vec<(&Term, &Rational)> = self.terms.iter().collect();
        let partial = |chunk: &[(&Term, &Rational)]| {
            let mut acc: BTreeMap<Term, Rational> = BTreeMap::new();
            for (ta, ca) in chunk {
                for (tb, cb) in &other.terms {
                    if let Some((t, neg)) = ta.mul(tb) {
                        let c = *ca * cb;
                        let c = if neg { -c } else { c };
                        let slot = acc.entry(t).or_insert_with(Rational::zero);
                        *slot += c;
                    }
                }
            }
            acc.retain(|_, c| !c.is_zero());
            acc
        };
        let work = self.len() * other.len();
        for part in exec::map_chunks(policy, &lhs, work, partial) {
            out.merge_from(part);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Expression {
        if c.is_zero() {
            return Expression::zero(&self.sig);
        }
        Expression {
            sig: self.sig.clone(),
            terms: self.terms.iter().map(|(t, k)| (t.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Expression {
        let mut acc = Expression::one(&self.sig);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Re-tags the expression with a related signature (an extension or ancestor)
    /// after checking every referenced generator exists there unchanged.
    pub fn lift(&self, sig: &Arc<Signature>) -> Result<Expression> {
        if !(sig.extends(&self.sig) || self.sig.extends(sig)) {
            return Err(Error::GeneratorMismatch);
        }
        self.reinterpret(sig)
    }

    /// Re-tags the expression with any signature that declares the referenced
    /// generators at the same indices under the same names.
    pub fn reinterpret(&self, sig: &Arc<Signature>) -> Result<Expression> {
        if sig.num_vars() != self.sig.num_vars() {
            return Err(Error::GeneratorMismatch);
        }
        for t in self.terms.keys() {
            for a in t.atoms() {
                if let Atom::Coord(c) = a {
                    let ok = c.gen < sig.generators().len()
                        && sig.generator(c.gen) == self.sig.generator(c.gen);
                    if !ok {
                        return Err(Error::GeneratorMismatch);
                    }
                }
            }
        }
        Ok(Expression { sig: sig.clone(), terms: self.terms.clone() })
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms.keys().flat_map(|t| t.atoms()).collect()
    }

    pub fn coords(&self) -> BTreeSet<JetCoord> {
        self.atoms().into_iter().filter_map(|a| a.as_coord().cloned()).collect()
    }

    /// Highest derivative order among dynamical jet coordinates (0 if none).
    pub fn max_order(&self) -> u32 {
        self.coords().iter().map(|c| c.order()).max().unwrap_or(0)
    }

    /// True if any jet coordinate of a field, ghost or antifield occurs.
    pub fn has_dynamical(&self) -> bool {
        self.coords().iter().any(|c| !self.sig.generator(c.gen).is_parameter())
    }

    pub fn grading_of(&self) -> Result<Grading> {
        let mut seen: BTreeSet<Grading> = BTreeSet::new();
        for t in self.terms.keys() {
            seen.insert(t.grading(&self.sig));
        }
        match seen.len() {
            0 => Err(Error::ZeroExpression),
            1 => Ok(*seen.iter().next().unwrap()),
            _ => Err(Error::Inhomogeneous(seen.into_iter().collect())),
        }
    }

    /// Grading if homogeneous; zero counts as homogeneous of any grading.
    pub fn grading_or_zero(&self) -> Result<Option<Grading>> {
        match self.grading_of() {
            Ok(g) => Ok(Some(g)),
            Err(Error::ZeroExpression) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn homogeneous_components(&self) -> BTreeMap<Grading, Expression> {
        let mut out: BTreeMap<Grading, Expression> = BTreeMap::new();
        for (t, c) in &self.terms {
            out.entry(t.grading(&self.sig))
                .or_insert_with(|| Expression::zero(&self.sig))
                .add_term(t.clone(), c.clone());
        }
        out
    }

    /// Keeps the terms satisfying `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Term) -> bool) -> Expression {
        Expression {
            sig: self.sig.clone(),
            terms: self.terms.iter().filter(|(t, _)| keep(t)).map(|(t, c)| (t.clone(), c.clone())).collect(),
        }
    }

    /// Graded partial derivative with respect to `atom`.
    ///
    /// The left derivative picks up `(-1)` for every odd factor standing to the
    /// left of an odd `atom`; the right derivative counts those to its right.
    pub fn partial_derivative(&self, atom: &Atom, side: Side) -> Expression {
        let mut out = Expression::zero(&self.sig);
        for (t, c) in &self.terms {
            if let Atom::Coord(jc) = atom {
                if let Ok(p) = t.odd.binary_search(jc) {
                    let mut rest = t.clone();
                    rest.odd.remove(p);
                    let moves = match side {
                        Side::Left => p,
                        Side::Right => t.odd.len() - 1 - p,
                    };
                    out.add_term(rest, if moves % 2 == 1 { -c.clone() } else { c.clone() });
                    continue;
                }
            }
            if let Ok(i) = t.even.binary_search_by(|(a, _)| a.cmp(atom)) {
                let k = t.even[i].1;
                out.add_term(t.without_even(i), c * int(k as i64));
            }
        }
        out
    }

    /// Extends a map on atoms to a graded derivation of the given parity.
    ///
    /// `image(atom)` returns the value on the atom, `None` meaning zero.
    pub fn apply_derivation(
        &self,
        parity: Parity,
        mut image: impl FnMut(&Atom) -> Option<Expression>,
    ) -> Result<Expression> {
        let mut cache: BTreeMap<Atom, Option<Expression>> = BTreeMap::new();
        let mut lookup = |a: &Atom| -> Option<Expression> {
            cache.entry(a.clone()).or_insert_with(|| image(a)).clone()
        };
        let mut out = Expression::zero(&self.sig);
        for (t, c) in &self.terms {
            for (i, (a, k)) in t.even.iter().enumerate() {
                let Some(img) = lookup(a) else { continue };
                let rest = t.without_even(i);
                let (left, right) = (
                    Term { even: rest.even, odd: Vec::new() },
                    Term { even: Vec::new(), odd: rest.odd },
                );
                let coef = c * int(*k as i64);
                let piece = Expression::from_term(&self.sig, left, coef)
                    .try_mul(&img)?
                    .try_mul(&Expression::from_term(&self.sig, right, Rational::one()))?;
                out = out.try_add(&piece)?;
            }
            for p in 0..t.odd.len() {
                let Some(img) = lookup(&Atom::Coord(t.odd[p].clone())) else { continue };
                let (left, right) = t.split_odd(p);
                let coef = if parity.is_odd() && p % 2 == 1 { -c.clone() } else { c.clone() };
                let piece = Expression::from_term(&self.sig, left, coef)
                    .try_mul(&img)?
                    .try_mul(&Expression::from_term(&self.sig, right, Rational::one()))?;
                out = out.try_add(&piece)?;
            }
        }
        Ok(out)
    }

    /// Simultaneous substitution of atoms; each replacement must carry the
    /// grading of the atom it replaces (zero is always allowed).
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expression>) -> Result<Expression> {
        for (a, e) in bindings {
            if e.sig.id() != self.sig.id() && !self.sig.extends(&e.sig) {
                return Err(Error::GeneratorMismatch);
            }
            if let Some(g) = e.grading_or_zero()? {
                let expected = a.grading(&self.sig);
                if g != expected {
                    return Err(Error::GradingViolation {
                        context: "substitution".into(),
                        expected,
                        found: g,
                    });
                }
            }
        }
        let mut out = Expression::zero(&self.sig);
        for (t, c) in &self.terms {
            let mut acc = Expression::constant(&self.sig, c.clone());
            let mut untouched = Term::one();
            for (a, k) in &t.even {
                match bindings.get(a) {
                    None => {
                        let single = Term { even: vec![(a.clone(), *k)], odd: Vec::new() };
                        untouched = untouched.mul(&single).expect("even factors").0;
                    }
                    Some(e) if *k >= 0 => acc = acc.try_mul(&e.pow(*k as u32))?,
                    Some(e) => {
                        let inv = e
                            .as_constant()
                            .filter(|q| !q.is_zero())
                            .map(|q| q.recip())
                            .ok_or_else(|| {
                                Error::InvalidSection(
                                    "negative powers may only be bound to nonzero constants".into(),
                                )
                            })?;
                        acc = acc.scale(&num_traits::pow(inv, k.unsigned_abs() as usize));
                    }
                }
            }
            acc = acc.try_mul(&Expression::from_term(&self.sig, untouched, Rational::one()))?;
            for o in &t.odd {
                let factor = bindings
                    .get(&Atom::Coord(o.clone()))
                    .cloned()
                    .unwrap_or_else(|| Expression::coord(&self.sig, o.clone()));
                acc = acc.try_mul(&factor)?;
            }
            out = out.try_add(&acc)?;
        }
        Ok(out)
    }

    /// Inverse of a nonzero constant times a monomial in parameters.
    pub fn invert_monomial(&self) -> Option<Expression> {
        if self.terms.len() != 1 {
            return None;
        }
        let (t, c) = self.terms.iter().next().unwrap();
        if !t.odd.is_empty() {
            return None;
        }
        let mut even = Vec::with_capacity(t.even.len());
        for (a, k) in &t.even {
            match a {
                Atom::Coord(jc) if self.sig.generator(jc.gen).is_parameter() => even.push((a.clone(), -k)),
                _ => return None,
            }
        }
        Some(Expression::from_term(&self.sig, Term { even, odd: Vec::new() }, c.recip()))
    }

    /// Largest absolute numerator or denominator, as a rough size measure.
    pub fn height(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.numer().abs().max(c.denom().abs()).to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            sig: self.sig.clone(),
            terms: self.terms.iter().map(|(t, c)| (t.clone(), -c.clone())).collect(),
        }
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

// Operator forms panic on unrelated signatures; use the `try_` methods to handle that case.
macro_rules! binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl $tr<&Expression> for &Expression {
            type Output = Expression;
            fn $m(self, rhs: &Expression) -> Expression {
                self.$try(rhs).expect("expressions over unrelated signatures")
            }
        }
        impl $tr<Expression> for Expression {
            type Output = Expression;
            fn $m(self, rhs: Expression) -> Expression {
                (&self).$try(&rhs).expect("expressions over unrelated signatures")
            }
        }
        impl $tr<&Expression> for Expression {
            type Output = Expression;
            fn $m(self, rhs: &Expression) -> Expression {
                (&self).$try(rhs).expect("expressions over unrelated signatures")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{GeneratorSpec, IndexRange};

    // t | u (even), theta[1..2] (odd field), C (ghost), m (parameter)
    fn sig() -> Arc<Signature> {
        Signature::new(
            vec!["t".into()],
            vec![
                GeneratorSpec::field("u", vec![]),
                GeneratorSpec::field("theta", vec![IndexRange::new(1, 2)])
                    .with_grading(Grading::new(Parity::Odd, 0, 0)),
                GeneratorSpec::ghost("C", vec![]),
                GeneratorSpec::parameter("m"),
            ],
        )
        .unwrap()
    }

    fn u(s: &Arc<Signature>, d: u32) -> Expression {
        Expression::coord(s, JetCoord::new(0, vec![], vec![d]))
    }

    fn th(s: &Arc<Signature>, i: i64) -> Expression {
        Expression::generator(s, 1, &[i]).unwrap()
    }

    #[test]
    fn add_identity_and_merge() {
        let s = sig();
        let a = u(&s, 0);
        assert_eq!(&a + &Expression::zero(&s), a);
        let ut = u(&s, 1);
        let sum = ut.scale(&rat(2, 3)) + ut.scale(&rat(1, 3));
        assert_eq!(sum, ut);
    }

    #[test]
    fn odd_products_anticommute() {
        let s = sig();
        let (t1, t2) = (th(&s, 1), th(&s, 2));
        let a = &t1 * &t2;
        let b = &t2 * &t1;
        assert_eq!(b, -&a);
        assert!((&a + &b).is_zero());
        assert!((&t1 * &t1).is_zero());
    }

    #[test]
    fn distributes_over_even() {
        let s = sig();
        let (u0, u1) = (u(&s, 0), u(&s, 1));
        let lhs = (&u0 + &u1) * u0.clone();
        let rhs = &u0 * &u0 + &u0 * &u1;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn left_and_right_partials() {
        let s = sig();
        let (t1, t2) = (th(&s, 1), th(&s, 2));
        let prod = &t1 * &t2;
        let c2 = Atom::Coord(JetCoord::new(1, vec![2], vec![0]));
        assert_eq!(prod.partial_derivative(&c2, Side::Left), -&t1);
        assert_eq!(prod.partial_derivative(&c2, Side::Right), t1);
        let (u0, u1) = (u(&s, 0), u(&s, 1));
        let e = &u0 * &u1;
        let d1 = Atom::Coord(JetCoord::new(0, vec![], vec![1]));
        assert_eq!(e.partial_derivative(&d1, Side::Left), u0.clone());
        assert!((&u0 * &u0).partial_derivative(&d1, Side::Left).is_zero());
    }

    #[test]
    fn gradings() {
        let s = sig();
        let c = Expression::generator(&s, 2, &[]).unwrap();
        let cc = &c * &c.clone();
        // C is odd, so C*C vanishes; use two different jet coordinates
        assert!(cc.is_zero());
        let ct = Expression::coord(&s, JetCoord::new(2, vec![], vec![1]));
        assert_eq!((&c * &ct).grading_of().unwrap(), Grading::new(Parity::Even, 2, 0));
        assert!(matches!((&u(&s, 0) + &c).grading_of(), Err(Error::Inhomogeneous(_))));
        assert!(matches!(Expression::zero(&s).grading_of(), Err(Error::ZeroExpression)));
    }

    #[test]
    fn substitution() {
        let s = sig();
        let ut = u(&s, 1);
        let a_ut = Atom::Coord(JetCoord::new(0, vec![], vec![1]));
        let a_u = Atom::Coord(JetCoord::new(0, vec![], vec![0]));
        let one = Expression::one(&s);
        assert_eq!((&ut * &ut).substitute(&[(a_ut.clone(), one.clone())].into()).unwrap(), one);
        assert_eq!(
            (&u(&s, 0) * &ut).substitute(&[(a_u, ut.clone())].into()).unwrap(),
            &ut * &ut
        );
        let t1 = Atom::Coord(JetCoord::new(1, vec![1], vec![0]));
        let prod = &th(&s, 1) * &th(&s, 2);
        assert!(prod.substitute(&[(t1.clone(), th(&s, 2))].into()).unwrap().is_zero());
        assert!(matches!(
            prod.substitute(&[(t1, ut)].into()),
            Err(Error::GradingViolation { .. })
        ));
    }

    #[test]
    fn mismatched_signatures() {
        let a = u(&sig(), 0);
        let b = u(&sig(), 0);
        assert!(matches!(a.try_add(&b), Err(Error::GeneratorMismatch)));
        assert!(matches!(a.try_mul(&b), Err(Error::GeneratorMismatch)));
    }
}
