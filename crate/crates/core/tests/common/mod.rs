//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use jetbv::graded::{int, rat};
use jetbv::{Atom, Expression, GeneratorSpec, Grading, IndexRange, JetCoord, Parity, Rational, Signature};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Variables `t, x, y` (first `n`), even fields `u`, `v[1..2]`, odd field `psi`,
/// ghost `C` and parameter `m`.
pub fn mixed_signature(n: usize) -> Arc<Signature> {
    let vars = ["t", "x", "y"][..n].iter().map(|s| s.to_string()).collect();
    Signature::new(
        vars,
        vec![
            GeneratorSpec::field("u", vec![]),
            GeneratorSpec::field("v", vec![IndexRange::new(1, 2)]),
            GeneratorSpec::field("psi", vec![]).with_grading(Grading::new(Parity::Odd, 0, 0)),
            GeneratorSpec::ghost("C", vec![]),
            GeneratorSpec::parameter("m"),
        ],
    )
    .unwrap()
}

/// Only even fields `u`, `v[1..2]` in one variable `t`, and parameter `m`.
pub fn even_signature() -> Arc<Signature> {
    Signature::new(
        vec!["t".into()],
        vec![
            GeneratorSpec::field("u", vec![]),
            GeneratorSpec::field("v", vec![IndexRange::new(1, 2)]),
            GeneratorSpec::parameter("m"),
        ],
    )
    .unwrap()
}

pub fn coefficient(r: &mut impl Rng) -> Rational {
    let n = loop {
        let n: i64 = r.gen_range(-6..=6);
        if n != 0 {
            break n;
        }
    };
    rat(n, r.gen_range(1..=4))
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_terms: usize,
    pub max_factors: usize,
    pub max_order: u32,
    /// Allow independent variables as factors.
    pub vars: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_terms: 6, max_factors: 3, max_order: 4, vars: true }
    }
}

pub fn random_derivs(r: &mut impl Rng, n: usize, max_order: u32) -> Vec<u32> {
    let mut d = vec![0u32; n];
    if n == 0 {
        return d;
    }
    let order = r.gen_range(0..=max_order);
    for _ in 0..order {
        d[r.gen_range(0..n)] += 1;
    }
    d
}

/// A random jet coordinate of one of `gens`.
pub fn random_coord(r: &mut impl Rng, sig: &Signature, gens: &[usize], max_order: u32) -> JetCoord {
    let gen = *gens.choose(r).unwrap();
    let spec = sig.generator(gen);
    let comps = spec.components();
    let comp = comps.choose(r).unwrap().clone();
    let derivs = if spec.is_parameter() { vec![0; sig.num_vars()] } else { random_derivs(r, sig.num_vars(), max_order) };
    JetCoord::new(gen, comp, derivs)
}

/// Random expression over `gens` (generator indices), possibly inhomogeneous.
pub fn random_expr(r: &mut impl Rng, sig: &Arc<Signature>, gens: &[usize], shape: Shape) -> Expression {
    let mut out = Expression::zero(sig);
    for _ in 0..r.gen_range(1..=shape.max_terms) {
        let mut atoms = Vec::new();
        for _ in 0..r.gen_range(0..=shape.max_factors) {
            if shape.vars && sig.num_vars() > 0 && r.gen_bool(0.2) {
                atoms.push(Atom::Var(r.gen_range(0..sig.num_vars())));
            } else {
                atoms.push(Atom::Coord(random_coord(r, sig, gens, shape.max_order)));
            }
        }
        out = out + Expression::product_of_atoms(sig, coefficient(r), &atoms);
    }
    out
}

/// Random homogeneous expression: every term is a product of coordinates of
/// the generators listed in `pattern` (repetitions allowed), so all terms share
/// one grading. May vanish when odd factors collide.
pub fn random_homogeneous(
    r: &mut impl Rng,
    sig: &Arc<Signature>,
    pattern: &[usize],
    terms: usize,
    max_order: u32,
    vars: bool,
) -> Expression {
    let mut out = Expression::zero(sig);
    for _ in 0..terms {
        let mut atoms: Vec<Atom> =
            pattern.iter().map(|g| Atom::Coord(random_coord(r, sig, &[*g], max_order))).collect();
        if vars && sig.num_vars() > 0 && r.gen_bool(0.3) {
            atoms.push(Atom::Var(r.gen_range(0..sig.num_vars())));
        }
        atoms.shuffle(r);
        out = out + Expression::product_of_atoms(sig, coefficient(r), &atoms);
    }
    out
}

/// Random polynomial in the independent variables only.
pub fn random_base_poly(r: &mut impl Rng, sig: &Arc<Signature>, max_degree: u32, terms: usize) -> Expression {
    let mut out = Expression::zero(sig);
    for _ in 0..terms {
        let mut e = Expression::constant(sig, coefficient(r));
        for v in 0..sig.num_vars() {
            e = e * Expression::var(sig, v).pow(r.gen_range(0..=max_degree));
        }
        out = out + e;
    }
    out
}

pub fn one() -> Rational {
    int(1)
}
pub mod oracles;
