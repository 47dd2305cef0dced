//! Theories, local functionals, symmetry and Noether-identity checks,
//! on-shell reduction and exact evaluation on polynomial sections.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};
use crate::graded::{Atom, Expression, Grading, JetCoord, Rational, Role, Side, Signature};
use crate::jet::{self, ComponentKey, EvolutionaryVF};

/// A lagrangian field theory over a flat base with constant diagonal metric.
#[derive(Debug, Clone)]
pub struct Theory {
    sig: Arc<Signature>,
    metric: Vec<Rational>,
    lagrangian: Expression,
}

impl Theory {
    pub fn new(sig: Arc<Signature>, metric: Vec<Rational>, lagrangian: Expression) -> Result<Self> {
        if metric.len() != sig.num_vars() {
            return Err(Error::InvalidTheory(format!(
                "metric has {} entries for {} variables",
                metric.len(),
                sig.num_vars()
            )));
        }
        if metric.iter().any(|g| g.is_zero()) {
            return Err(Error::InvalidTheory("metric entries must be nonzero".into()));
        }
        let lagrangian = lagrangian.lift(&sig)?;
        if let Some(g) = lagrangian.grading_or_zero()? {
            if g != Grading::ZERO {
                return Err(Error::GradingViolation {
                    context: "lagrangian".into(),
                    expected: Grading::ZERO,
                    found: g,
                });
            }
        }
        Ok(Theory { sig, metric, lagrangian })
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn metric(&self) -> &[Rational] {
        &self.metric
    }

    pub fn lagrangian(&self) -> &Expression {
        &self.lagrangian
    }

    /// Every component of every generator with the field role.
    pub fn field_components(&self) -> Vec<ComponentKey> {
        self.sig
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.role == Role::Field)
            .flat_map(|(i, g)| g.components().into_iter().map(move |c| (i, c)))
            .collect()
    }

    /// Same theory with a different lagrangian.
    pub fn with_lagrangian(&self, lagrangian: Expression) -> Result<Theory> {
        Theory::new(self.sig.clone(), self.metric.clone(), lagrangian)
    }
}

/// A density regarded modulo total divergences.
#[derive(Debug, Clone)]
pub struct LocalFunctional {
    density: Expression,
}

impl LocalFunctional {
    pub fn new(density: Expression) -> Self {
        LocalFunctional { density }
    }

    pub fn density(&self) -> &Expression {
        &self.density
    }

    pub fn into_density(self) -> Expression {
        self.density
    }

    /// Equality in the space of local functionals.
    pub fn equals(&self, other: &LocalFunctional) -> Result<bool> {
        jet::ibp_equal(&self.density, &other.density)
    }

    pub fn is_trivial(&self) -> Result<bool> {
        jet::is_total_divergence(&self.density)
    }
}

/// Linear differential operator acting on a family of per-component expressions:
/// `N(X) = Σ_a Σ_α N^{a,α} · D_α X_a`.
#[derive(Debug, Clone)]
pub struct NoetherOperator {
    sig: Arc<Signature>,
    coefficients: BTreeMap<ComponentKey, BTreeMap<Vec<u32>, Expression>>,
}

impl NoetherOperator {
    pub fn new(sig: &Arc<Signature>) -> Self {
        NoetherOperator { sig: sig.clone(), coefficients: BTreeMap::new() }
    }

    /// Adds `coef · D_α` acting on component `key`.
    pub fn add(&mut self, key: ComponentKey, multi_index: Vec<u32>, coef: Expression) -> Result<()> {
        if multi_index.len() != self.sig.num_vars() {
            return Err(Error::InvalidTheory("multi-index length differs from the number of variables".into()));
        }
        self.sig.check_component(key.0, &key.1)?;
        let coef = coef.lift(&self.sig)?;
        let slot = self.coefficients.entry(key.clone()).or_default();
        let sum = match slot.remove(&multi_index) {
            Some(prev) => prev.try_add(&coef)?,
            None => coef,
        };
        if !sum.is_zero() {
            slot.insert(multi_index, sum);
        }
        if slot.is_empty() {
            self.coefficients.remove(&key);
        }
        Ok(())
    }

    /// The same `D_α` with unit coefficient on each of `keys`.
    pub fn uniform(sig: &Arc<Signature>, keys: &[ComponentKey], multi_index: Vec<u32>) -> Result<Self> {
        let mut op = NoetherOperator::new(sig);
        for k in keys {
            op.add(k.clone(), multi_index.clone(), Expression::one(sig))?;
        }
        Ok(op)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn coefficients(&self) -> &BTreeMap<ComponentKey, BTreeMap<Vec<u32>, Expression>> {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Re-tags all coefficients with an extended signature.
    pub fn lift(&self, sig: &Arc<Signature>) -> Result<NoetherOperator> {
        let mut coefficients = BTreeMap::new();
        for (k, per) in &self.coefficients {
            let mut m = BTreeMap::new();
            for (a, c) in per {
                m.insert(a.clone(), c.lift(sig)?);
            }
            coefficients.insert(k.clone(), m);
        }
        Ok(NoetherOperator { sig: sig.clone(), coefficients })
    }

    /// `Σ_a Σ_α N^{a,α} · D_α(targets[a])`; absent targets count as zero.
    pub fn apply(&self, targets: &BTreeMap<ComponentKey, Expression>) -> Result<Expression> {
        let mut out = Expression::zero(&self.sig);
        for (key, per) in &self.coefficients {
            let Some(x) = targets.get(key) else { continue };
            for (alpha, coef) in per {
                let dx = jet::total_derivative_multi(x, alpha);
                out = out.try_add(&coef.try_mul(&dx)?)?;
            }
        }
        Ok(out)
    }

    /// Gauge characteristic `Q^a = -Σ_α (-D)_α(N^{a,α} · param)` generated by the
    /// formal adjoint, so that `N = D_ν` yields `Q = D_ν param`.
    pub fn adjoint_characteristic(&self, param: &Expression) -> Result<BTreeMap<ComponentKey, Expression>> {
        let mut out = BTreeMap::new();
        for (key, per) in &self.coefficients {
            let mut q = Expression::zero(&self.sig);
            for (alpha, coef) in per {
                let order: u32 = alpha.iter().sum();
                let piece = jet::total_derivative_multi(&coef.try_mul(param)?, alpha);
                q = if order % 2 == 1 { q.try_add(&piece)? } else { q.try_sub(&piece)? };
            }
            out.insert(key.clone(), q);
        }
        Ok(out)
    }
}

/// Euler–Lagrange expressions of the lagrangian for every field component.
pub fn euler_lagrange_system(theory: &Theory) -> Result<BTreeMap<ComponentKey, Expression>> {
    euler_lagrange_system_with(theory, exec::default_policy())
}

pub fn euler_lagrange_system_with(
    theory: &Theory,
    policy: ExecPolicy,
) -> Result<BTreeMap<ComponentKey, Expression>> {
    let keys = theory.field_components();
    let values = exec::map_each(policy, &keys, |(g, c)| {
        jet::variational_derivative(&theory.lagrangian, *g, c)
    });
    keys.into_iter().zip(values).map(|(k, v)| v.map(|v| (k, v))).collect()
}

/// True iff the prolonged field preserves the action up to a total divergence.
pub fn is_symmetry(theory: &Theory, x: &EvolutionaryVF) -> Result<bool> {
    let image = jet::prolong_apply(x, &theory.lagrangian)?;
    jet::is_total_divergence(&image)
}

/// `Σ_a Σ_α N^{a,α} D_α(EL_a)`.
pub fn noether_residual(theory: &Theory, op: &NoetherOperator) -> Result<Expression> {
    if !op.sig.extends(&theory.sig) && !theory.sig.extends(&op.sig) {
        return Err(Error::GeneratorMismatch);
    }
    let mut targets = BTreeMap::new();
    for key in op.coefficients().keys() {
        let known = key.0 < theory.sig.generators().len();
        if !known || theory.sig.generator(key.0).role != Role::Field {
            return Err(Error::UnknownGenerator(op.sig.component_label(key.0, &key.1)));
        }
        let el = jet::variational_derivative(&theory.lagrangian, key.0, &key.1)?;
        targets.insert(key.clone(), el);
    }
    op.apply(&targets)
}

pub fn is_noether_identity(theory: &Theory, op: &NoetherOperator) -> Result<bool> {
    Ok(noether_residual(theory, op)?.is_zero())
}

/// Rewrite budget (rounds of simultaneous replacement) for [`on_shell_reduce`].
pub const DEFAULT_REWRITE_BUDGET: usize = 256;

#[derive(Debug, Clone)]
struct Rule {
    lead: JetCoord,
    rhs: Expression,
}

fn leading_rule(sig: &Arc<Signature>, key: &ComponentKey, el: &Expression) -> Result<Rule> {
    let label = || sig.component_label(key.0, &key.1);
    let lead = el
        .coords()
        .into_iter()
        .filter(|c| !sig.generator(c.gen).is_parameter())
        .max_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.cmp(b)))
        .ok_or_else(|| Error::NotSolvable(label()))?;
    let atom = Atom::Coord(lead.clone());
    if el.terms().any(|(t, _)| t.exponent(&atom) > 1) {
        return Err(Error::NotSolvable(label()));
    }
    let coeff = el.partial_derivative(&atom, Side::Left);
    let inverse = coeff.invert_monomial().ok_or_else(|| Error::NotSolvable(label()))?;
    let remainder = el.filter_terms(|t| t.exponent(&atom) == 0);
    // el = lead·coeff + remainder with coeff an even scalar
    let rhs = -(inverse * remainder);
    Ok(Rule { lead, rhs })
}

/// Reduces `e` modulo the Euler–Lagrange equations and their prolongations
/// up to jet order `max_order`.
pub fn on_shell_reduce(e: &Expression, theory: &Theory, max_order: u32) -> Result<Expression> {
    on_shell_reduce_with_budget(e, theory, max_order, DEFAULT_REWRITE_BUDGET)
}

pub fn on_shell_reduce_with_budget(
    e: &Expression,
    theory: &Theory,
    max_order: u32,
    budget: usize,
) -> Result<Expression> {
    let sig = e.signature().clone();
    let mut rules: Vec<Rule> = Vec::new();
    for (key, el) in euler_lagrange_system(theory)? {
        if el.is_zero() {
            continue;
        }
        let rule = leading_rule(&theory.sig, &key, &el)?;
        if rules.iter().any(|r| r.lead == rule.lead) {
            return Err(Error::NotSolvable(theory.sig.component_label(key.0, &key.1)));
        }
        rules.push(Rule { lead: rule.lead, rhs: rule.rhs.lift(&sig)? });
    }

    let mut current = e.clone();
    for _ in 0..budget {
        let mut bindings: BTreeMap<Atom, Expression> = BTreeMap::new();
        for c in current.coords() {
            if c.order() > max_order {
                continue;
            }
            for r in &rules {
                if !c.is_component(r.lead.gen, &r.lead.comp) {
                    continue;
                }
                let extra: Option<Vec<u32>> = c
                    .derivs()
                    .iter()
                    .zip(r.lead.derivs())
                    .map(|(a, b)| a.checked_sub(*b))
                    .collect();
                if let Some(extra) = extra {
                    bindings.insert(Atom::Coord(c.clone()), jet::total_derivative_multi(&r.rhs, &extra));
                    break;
                }
            }
        }
        if bindings.is_empty() {
            return Ok(current);
        }
        current = current.substitute(&bindings)?;
    }
    Err(Error::RewriteBudget(budget))
}

/// Polynomial values of the fields (in the independent variables) plus
/// numeric values for the parameters.
#[derive(Debug, Clone)]
pub struct Section {
    fields: BTreeMap<ComponentKey, Expression>,
    params: BTreeMap<usize, Rational>,
}

impl Section {
    pub fn new(sig: &Arc<Signature>, fields: BTreeMap<ComponentKey, Expression>) -> Result<Self> {
        let mut checked = BTreeMap::new();
        for ((gen, comp), poly) in fields {
            sig.check_component(gen, &comp)?;
            let spec = sig.generator(gen);
            if spec.is_parameter() {
                return Err(Error::InvalidSection(format!("`{}` is a parameter", spec.name)));
            }
            let poly = poly.lift(sig)?;
            if poly.coords().iter().any(|c| !sig.generator(c.gen).is_parameter()) {
                return Err(Error::InvalidSection(format!(
                    "value of {} must not contain jet coordinates",
                    sig.component_label(gen, &comp)
                )));
            }
            if !poly.is_zero() && spec.grading != Grading::ZERO {
                return Err(Error::InvalidSection(format!(
                    "only the zero section is supported for `{}` of grading {}",
                    spec.name, spec.grading
                )));
            }
            checked.insert((gen, comp), poly);
        }
        Ok(Section { fields: checked, params: BTreeMap::new() })
    }

    pub fn with_param(mut self, param: usize, value: Rational) -> Self {
        self.params.insert(param, value);
        self
    }

    pub fn field(&self, key: &ComponentKey) -> Option<&Expression> {
        self.fields.get(key)
    }

    pub fn params(&self) -> &BTreeMap<usize, Rational> {
        &self.params
    }

    /// Pulls `e` back along the jet prolongation of the section.
    pub fn pull_back(&self, e: &Expression) -> Result<Expression> {
        let sig = e.signature().clone();
        let mut bindings = BTreeMap::new();
        for atom in e.atoms() {
            let Atom::Coord(c) = &atom else { continue };
            let spec = sig.generator(c.gen);
            let value = if spec.is_parameter() {
                match self.params.get(&c.gen) {
                    Some(v) => Expression::constant(&sig, v.clone()),
                    None => continue,
                }
            } else {
                let poly = match self.fields.get(&(c.gen, c.comp.clone())) {
                    Some(p) => p.lift(&sig)?,
                    None if spec.grading != Grading::ZERO => Expression::zero(&sig),
                    None => {
                        return Err(Error::InvalidSection(format!(
                            "no value for {}",
                            sig.component_label(c.gen, &c.comp)
                        )))
                    }
                };
                let mut d = poly;
                for (var, &k) in c.derivs().iter().enumerate() {
                    for _ in 0..k {
                        d = d.partial_derivative(&Atom::Var(var), Side::Left);
                    }
                }
                d
            };
            bindings.insert(atom, value);
        }
        e.substitute(&bindings)
    }
}

/// Exact value of `∫_box density(j∞ s)`; `bounds[i]` is the interval of variable `i`.
pub fn integrate_on_box(f: &LocalFunctional, section: &Section, bounds: &[(Rational, Rational)]) -> Result<Rational> {
    let value = integrate_symbolic(f.density(), section, bounds)?;
    let sig = value.signature().clone();
    value.as_constant().ok_or_else(|| {
        let name = value
            .coords()
            .into_iter()
            .next()
            .map(|c| sig.generator(c.gen).name.clone())
            .unwrap_or_default();
        Error::UnboundParameter(name)
    })
}

/// Like [`integrate_on_box`] but leaves unbound parameters symbolic.
pub fn integrate_symbolic(density: &Expression, section: &Section, bounds: &[(Rational, Rational)]) -> Result<Expression> {
    let sig = density.signature();
    if bounds.len() != sig.num_vars() {
        return Err(Error::InvalidSection(format!(
            "box has {} intervals for {} variables",
            bounds.len(),
            sig.num_vars()
        )));
    }
    if let Some(g) = density.grading_or_zero()? {
        if g.parity.is_odd() {
            return Err(Error::OddDensity);
        }
        if g.ghost != 0 || g.antifield != 0 {
            return Err(Error::NonzeroGhostNumber(g));
        }
    }
    let mut value = section.pull_back(density)?;
    for (var, (lo, hi)) in bounds.iter().enumerate() {
        let anti = jet::antiderivative(&value, var);
        value = jet::evaluate_at(&anti, var, hi) - jet::evaluate_at(&anti, var, lo);
    }
    Ok(value)
}
