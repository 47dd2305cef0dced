//! Total derivatives, Euler–Lagrange operators and the decision procedure
//! for total divergences.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};
use crate::graded::{int, Atom, Expression, Grading, JetCoord, Parity, Rational, Side, Signature};

/// A generator component `(generator index, component tuple)`.
pub type ComponentKey = (usize, Vec<i64>);

/// Total derivative `D_i` along the independent variable with index `var`.
pub fn total_derivative(e: &Expression, var: usize) -> Expression {
    let sig = e.signature().clone();
    e.apply_derivation(Parity::Even, |atom| match atom {
        Atom::Var(j) if *j == var => Some(Expression::one(&sig)),
        Atom::Var(_) => None,
        Atom::Coord(c) if sig.generator(c.gen).is_parameter() => None,
        Atom::Coord(c) => Some(Expression::coord(&sig, c.differentiate(var))),
    })
    .expect("total derivative stays within one signature")
}

/// Total derivative along a variable given by name.
pub fn total_derivative_named(e: &Expression, var: &str) -> Result<Expression> {
    let i = e.signature().lookup_var(var)?;
    Ok(total_derivative(e, i))
}

/// `D_α e` for a multi-index given as derivative counts per variable.
pub fn total_derivative_multi(e: &Expression, counts: &[u32]) -> Expression {
    let mut out = e.clone();
    for (var, &k) in counts.iter().enumerate() {
        for _ in 0..k {
            if out.is_zero() {
                return out;
            }
            out = total_derivative(&out, var);
        }
    }
    out
}

fn check_dynamical(sig: &Signature, gen: usize, comp: &[i64]) -> Result<()> {
    if gen >= sig.generators().len() || sig.generator(gen).is_parameter() {
        return Err(Error::UnknownGenerator(format!("#{gen}")));
    }
    sig.check_component(gen, comp)
}

/// Left (or right) variational derivative `Σ_α (-D)_α ∂e/∂u^a_α`.
pub fn variational_derivative_side(
    e: &Expression,
    gen: usize,
    comp: &[i64],
    side: Side,
) -> Result<Expression> {
    let sig = e.signature();
    check_dynamical(sig, gen, comp)?;
    let mut out = Expression::zero(sig);
    for c in e.coords().into_iter().filter(|c| c.is_component(gen, comp)) {
        let partial = e.partial_derivative(&Atom::Coord(c.clone()), side);
        let mut term = total_derivative_multi(&partial, c.derivs());
        if c.order() % 2 == 1 {
            term = -term;
        }
        out = out + term;
    }
    Ok(out)
}

/// Left variational derivative with respect to `gen[comp]`.
pub fn variational_derivative(e: &Expression, gen: usize, comp: &[i64]) -> Result<Expression> {
    variational_derivative_side(e, gen, comp, Side::Left)
}

/// Variational derivative with respect to a generator component given by name.
pub fn variational_derivative_named(e: &Expression, name: &str, comp: &[i64]) -> Result<Expression> {
    let gen = e.signature().lookup_generator(name)?;
    variational_derivative(e, gen, comp)
}

/// Dynamical generator components that actually occur in `e`.
pub fn occurring_components(e: &Expression) -> Vec<ComponentKey> {
    let sig = e.signature();
    let mut keys: Vec<ComponentKey> = e
        .coords()
        .into_iter()
        .filter(|c| !sig.generator(c.gen).is_parameter())
        .map(|c| (c.gen, c.comp))
        .collect();
    keys.dedup();
    keys
}

/// All nonzero Euler–Lagrange expressions of `e`, keyed by component.
pub fn euler_lagrange_all(e: &Expression, policy: ExecPolicy) -> BTreeMap<ComponentKey, Expression> {
    let keys = occurring_components(e);
    let values = exec::map_each(policy, &keys, |(g, c)| {
        variational_derivative(e, *g, c).expect("occurring components are valid")
    });
    keys.into_iter().zip(values).filter(|(_, v)| !v.is_zero()).collect()
}

/// Grading offset between a characteristic and its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GradingShift {
    pub parity: Parity,
    pub ghost: i32,
    pub antifield: i32,
}

impl GradingShift {
    pub fn between(from: Grading, to: Grading) -> GradingShift {
        GradingShift {
            parity: from.parity + to.parity,
            ghost: to.ghost - from.ghost,
            antifield: to.antifield as i32 - from.antifield as i32,
        }
    }
}

/// Evolutionary vector field `Σ Q^a ∂/∂u^a`, prolonged to all jet coordinates.
#[derive(Debug, Clone)]
pub struct EvolutionaryVF {
    sig: Arc<Signature>,
    characteristics: BTreeMap<ComponentKey, Expression>,
    shift: GradingShift,
}

impl EvolutionaryVF {
    /// Checks that every characteristic is homogeneous and that all of them
    /// differ from their field's grading by one common shift.
    pub fn new(
        sig: &Arc<Signature>,
        characteristics: BTreeMap<ComponentKey, Expression>,
    ) -> Result<Self> {
        let mut shift: Option<GradingShift> = None;
        let mut lifted = BTreeMap::new();
        for ((gen, comp), q) in characteristics {
            check_dynamical(sig, gen, &comp)?;
            let q = q.lift(sig)?;
            let field_grading = sig.generator(gen).grading;
            if let Some(g) = q.grading_or_zero()? {
                let s = GradingShift::between(field_grading, g);
                match shift {
                    None => shift = Some(s),
                    Some(prev) if prev != s => {
                        return Err(Error::GradingViolation {
                            context: format!("characteristic of {}", sig.component_label(gen, &comp)),
                            expected: shifted(field_grading, prev),
                            found: g,
                        })
                    }
                    Some(_) => {}
                }
            }
            lifted.insert((gen, comp), q);
        }
        Ok(EvolutionaryVF { sig: sig.clone(), characteristics: lifted, shift: shift.unwrap_or_default() })
    }

    pub fn shift(&self) -> GradingShift {
        self.shift
    }

    pub fn characteristic(&self, gen: usize, comp: &[i64]) -> Option<&Expression> {
        self.characteristics.get(&(gen, comp.to_vec()))
    }

    pub fn characteristics(&self) -> &BTreeMap<ComponentKey, Expression> {
        &self.characteristics
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }
}

fn shifted(g: Grading, s: GradingShift) -> Grading {
    Grading {
        parity: g.parity + s.parity,
        ghost: g.ghost + s.ghost,
        antifield: (g.antifield as i32 + s.antifield).max(0) as u32,
    }
}

/// `pr X(e) = Σ_{a,α} D_α(Q^a) · ∂_left e/∂u^a_α`.
pub fn prolong_apply(x: &EvolutionaryVF, e: &Expression) -> Result<Expression> {
    let e = if e.signature().extends(&x.sig) { e.clone() } else { e.lift(&x.sig)? };
    let sig = e.signature().clone();
    let mut out = Expression::zero(&sig);
    for c in e.coords() {
        if sig.generator(c.gen).is_parameter() {
            continue;
        }
        let q = x
            .characteristic(c.gen, &c.comp)
            .ok_or_else(|| Error::MissingCharacteristic(sig.component_label(c.gen, &c.comp)))?;
        let dq = total_derivative_multi(q, c.derivs());
        if dq.is_zero() {
            continue;
        }
        let partial = e.partial_derivative(&Atom::Coord(c.clone()), Side::Left);
        out = out.try_add(&dq.try_mul(&partial)?)?;
    }
    Ok(out)
}

/// True iff `e` is a total divergence, i.e. every variational derivative vanishes.
pub fn is_total_divergence(e: &Expression) -> Result<bool> {
    is_total_divergence_with(e, exec::default_policy())
}

pub fn is_total_divergence_with(e: &Expression, policy: ExecPolicy) -> Result<bool> {
    if e.signature().num_vars() == 0 {
        return Err(Error::ZeroVariables);
    }
    let keys = occurring_components(e);
    let zero = exec::map_each(policy, &keys, |(g, c)| {
        variational_derivative(e, *g, c).map(|v| v.is_zero())
    });
    for z in zero {
        if !z? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Equality of local functionals: the densities differ by a total divergence.
pub fn ibp_equal(a: &Expression, b: &Expression) -> Result<bool> {
    is_total_divergence(&a.try_sub(b)?)
}

/// Constructs `F` with `D_t F = e` in a theory with one independent variable.
///
/// Peels the highest-order jet coordinates: the part of `e` linear in them
/// is integrated against the coordinates one order lower (radially, which
/// handles odd coordinates too), subtracted, and the remainder recursed on.
pub fn divergence_witness(e: &Expression) -> Result<BTreeMap<usize, Expression>> {
    let sig = e.signature().clone();
    match sig.num_vars() {
        0 => return Err(Error::ZeroVariables),
        1 => {}
        n => return Err(Error::UnsupportedDimension(n)),
    }
    if !is_total_divergence(e)? {
        return Err(Error::NotADivergence);
    }
    let mut rest = e.clone();
    let mut potential = Expression::zero(&sig);
    loop {
        let dynamic: Vec<JetCoord> = rest
            .coords()
            .into_iter()
            .filter(|c| !sig.generator(c.gen).is_parameter())
            .collect();
        let Some(k) = dynamic.iter().map(|c| c.order()).max() else {
            potential = potential + integrate_base(&rest);
            break;
        };
        if k == 0 {
            return Err(Error::NotADivergence);
        }
        let top: Vec<JetCoord> = dynamic.into_iter().filter(|c| c.order() == k).collect();
        let lower: Vec<JetCoord> = top.iter().map(|c| c.with_derivs(vec![k - 1])).collect();
        let lower_atoms: Vec<Atom> = lower.iter().cloned().map(Atom::Coord).collect();
        let mut g = Expression::zero(&sig);
        for (c, v) in top.iter().zip(&lower) {
            let coeff = rest.partial_derivative(&Atom::Coord(c.clone()), Side::Left);
            let mut radial = Expression::zero(&sig);
            for (t, q) in coeff.terms() {
                let degree: i32 = lower_atoms.iter().map(|a| t.exponent(a)).sum();
                let scaled = q / int(degree as i64 + 1);
                radial.add_term(t.clone(), scaled);
            }
            g = g + Expression::coord(&sig, v.clone()) * radial;
        }
        let next = &rest - &total_derivative(&g, 0);
        let still_top = next.coords().iter().any(|c| {
            !sig.generator(c.gen).is_parameter() && c.order() >= k
        });
        if still_top {
            return Err(Error::NotADivergence);
        }
        potential = potential + g;
        rest = next;
    }
    debug_assert_eq!(total_derivative(&potential, 0), *e);
    Ok(BTreeMap::from([(0, potential)]))
}

/// Antiderivative in the single independent variable of a field-free polynomial.
fn integrate_base(e: &Expression) -> Expression {
    let sig = e.signature();
    let t = Expression::var(sig, 0);
    let mut out = Expression::zero(sig);
    for (term, c) in e.terms() {
        let k = term.exponent(&Atom::Var(0));
        let piece = Expression::from_term(sig, term.clone(), c / int(k as i64 + 1)) * t.clone();
        out = out + piece;
    }
    out
}

/// Exact antiderivative `∫ e d(var)` of a polynomial in `var` (jet coordinates treated as constants).
pub fn antiderivative(e: &Expression, var: usize) -> Expression {
    let sig = e.signature();
    let x = Expression::var(sig, var);
    let mut out = Expression::zero(sig);
    for (term, c) in e.terms() {
        let k = term.exponent(&Atom::Var(var));
        out = out + Expression::from_term(sig, term.clone(), c / int(k as i64 + 1)) * x.clone();
    }
    out
}

/// Sets the independent variable `var` to `value`.
pub fn evaluate_at(e: &Expression, var: usize, value: &Rational) -> Expression {
    let sig = e.signature();
    let binding = BTreeMap::from([(Atom::Var(var), Expression::constant(sig, value.clone()))]);
    e.substitute(&binding).expect("constants carry the grading of a variable")
}
