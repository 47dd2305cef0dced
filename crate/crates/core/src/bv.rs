//! Field–antifield extension, antibracket, Koszul–Tate differential and the
//! classical master equation.
//!
//! Conventions: the antifield of a generator of grading `(p, g, 0)` has
//! grading `(p+1, -g-1, afn)` with `afn = 1` for fields and `g+1` for ghosts.
//! The antibracket of densities is
//!
//! ```text
//! (F, G) = Σ_Φ  δ_R F/δΦ · δ_L G/δΦ*  -  δ_R F/δΦ* · δ_L G/δΦ
//! ```
//!
//! and a gauge generator with Noether operator `N` contributes the
//! characteristic `Q = -N†(C)` (so `N = D_ν` gives `Q = D_ν C`).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};
use crate::graded::{Atom, Expression, GeneratorSpec, Grading, Parity, Role, Side, Signature};
use crate::jet::{self, ComponentKey};
use crate::variational::{self, LocalFunctional, NoetherOperator, Theory};

/// One ghost together with the Noether operators (one per ghost component)
/// generating the corresponding identities.
#[derive(Debug, Clone)]
pub struct GaugeGenerator {
    pub ghost: GeneratorSpec,
    pub operators: BTreeMap<Vec<i64>, NoetherOperator>,
}

impl GaugeGenerator {
    /// Scalar ghost with a single operator.
    pub fn scalar(ghost: GeneratorSpec, op: NoetherOperator) -> Self {
        GaugeGenerator { ghost, operators: BTreeMap::from([(Vec::new(), op)]) }
    }
}

#[derive(Debug, Clone)]
pub struct BvExtension {
    base: Theory,
    sig: Arc<Signature>,
    /// (ghost generator index, per-component operators lifted to the BV signature)
    gauge: Vec<(usize, BTreeMap<Vec<i64>, NoetherOperator>)>,
    master: LocalFunctional,
}

/// Field–antifield extension of `theory` by the given gauge generators.
///
/// Every operator must be an exact Noether identity of the theory. The
/// master action is initialised with the minimal proposal
/// `S + Σ Φ*·Q`; use [`BvExtension::with_master`] to complete it.
pub fn extend_to_bv(theory: &Theory, gauge: Vec<GaugeGenerator>) -> Result<BvExtension> {
    let base_sig = theory.signature();
    let mut new_ghosts: Vec<GeneratorSpec> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for g in &gauge {
        if !seen.insert(g.ghost.name.clone()) {
            return Err(Error::DuplicateGhost(g.ghost.name.clone()));
        }
        match base_sig.generator_index(&g.ghost.name) {
            Some(i) if *base_sig.generator(i) == g.ghost && g.ghost.role == Role::Ghost => {}
            Some(_) => return Err(Error::DuplicateGhost(g.ghost.name.clone())),
            None if base_sig.var_index(&g.ghost.name).is_some() => {
                return Err(Error::DuplicateGhost(g.ghost.name.clone()))
            }
            None => new_ghosts.push(g.ghost.clone()),
        }
        for (comp, op) in &g.operators {
            if !g.ghost.contains_component(comp) {
                return Err(Error::ComponentOutOfRange { name: g.ghost.name.clone(), component: comp.clone() });
            }
            let residual = variational::noether_residual(theory, op)?;
            if !residual.is_zero() {
                return Err(Error::NotAnIdentity(residual.to_string()));
            }
        }
    }

    let mut all: Vec<GeneratorSpec> = base_sig.generators().to_vec();
    all.extend(new_ghosts.iter().cloned());
    let mut extra = new_ghosts;
    for (i, g) in all.iter().enumerate() {
        if matches!(g.role, Role::Field | Role::Ghost) {
            extra.push(GeneratorSpec {
                name: format!("{}*", g.name),
                role: Role::Antifield { of: i },
                index_ranges: g.index_ranges.clone(),
                grading: g.grading.antifield_of(),
            });
        }
    }
    let sig = base_sig.extend(extra)?;

    let mut lifted = Vec::new();
    for g in gauge {
        let idx = sig.lookup_generator(&g.ghost.name)?;
        let mut ops = BTreeMap::new();
        for (comp, op) in g.operators {
            ops.insert(comp, op.lift(&sig)?);
        }
        lifted.push((idx, ops));
    }
    let mut ext = BvExtension {
        base: theory.clone(),
        sig: sig.clone(),
        gauge: lifted,
        master: LocalFunctional::new(Expression::zero(&sig)),
    };
    ext.master = LocalFunctional::new(ext.proposal()?);
    Ok(ext)
}

impl BvExtension {
    pub fn base(&self) -> &Theory {
        &self.base
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn master_action(&self) -> &LocalFunctional {
        &self.master
    }

    pub fn gauge(&self) -> &[(usize, BTreeMap<Vec<i64>, NoetherOperator>)] {
        &self.gauge
    }

    /// Base lagrangian in the BV signature.
    pub fn lagrangian(&self) -> Expression {
        self.base.lagrangian().lift(&self.sig).expect("BV signature extends the base")
    }

    /// Gauge characteristics `Q^a` of each ghost component.
    pub fn gauge_characteristics(&self) -> Result<Vec<(ComponentKey, BTreeMap<ComponentKey, Expression>)>> {
        let mut out = Vec::new();
        for (ghost, ops) in &self.gauge {
            for (comp, op) in ops {
                let c = Expression::generator(&self.sig, *ghost, comp)?;
                out.push(((*ghost, comp.clone()), op.adjoint_characteristic(&c)?));
            }
        }
        Ok(out)
    }

    /// `S + Σ_{ghosts} Σ_a u*_a · Q^a`.
    pub fn proposal(&self) -> Result<Expression> {
        let mut s = self.lagrangian();
        for (_, chars) in self.gauge_characteristics()? {
            for ((gen, comp), q) in chars {
                let star = self.antifield_generator(gen)?;
                let ustar = Expression::generator(&self.sig, star, &comp)?;
                s = s.try_add(&ustar.try_mul(&q)?)?;
            }
        }
        Ok(s)
    }

    /// Replaces the master action after checking its grading and that its
    /// antifield-number-0 part agrees with the lagrangian as a functional.
    pub fn with_master(mut self, master: Expression) -> Result<BvExtension> {
        let master = master.lift(&self.sig)?;
        for g in master.homogeneous_components().keys() {
            if g.parity.is_odd() || g.ghost != 0 {
                return Err(Error::GradingViolation {
                    context: "master action".into(),
                    expected: Grading::ZERO,
                    found: *g,
                });
            }
        }
        let afn0 = master.filter_terms(|t| t.grading(&self.sig).antifield == 0);
        if !jet::ibp_equal(&afn0, &self.lagrangian())? {
            return Err(Error::MasterActionMismatch);
        }
        self.master = LocalFunctional::new(master);
        Ok(self)
    }

    pub fn antifield_generator(&self, gen: usize) -> Result<usize> {
        self.sig
            .antifield_of(gen)
            .ok_or_else(|| Error::UnknownGenerator(self.sig.generator(gen).name.clone()))
    }

    /// Lifts an expression of the base theory (or this extension) into the BV signature.
    pub fn lift(&self, e: &Expression) -> Result<Expression> {
        e.lift(&self.sig)
    }
}

/// Common (parity, ghost number) of a BV density; the antifield number may vary.
pub fn bv_degree(e: &Expression) -> Result<Option<(Parity, i32)>> {
    let comps = e.homogeneous_components();
    let degrees: BTreeSet<(Parity, i32)> = comps.keys().map(|g| (g.parity, g.ghost)).collect();
    if degrees.len() > 1 {
        return Err(Error::Inhomogeneous(comps.into_keys().collect()));
    }
    Ok(degrees.into_iter().next())
}

/// Pairs `(Φ component, Φ* generator)` relevant for two densities.
fn bracket_pairs(sig: &Signature, f: &Expression, g: &Expression) -> Vec<(ComponentKey, usize)> {
    let mut comps: BTreeSet<ComponentKey> = BTreeSet::new();
    for e in [f, g] {
        for (gen, comp) in jet::occurring_components(e) {
            match sig.generator(gen).role {
                Role::Antifield { of } => {
                    comps.insert((of, comp));
                }
                Role::Field | Role::Ghost => {
                    comps.insert((gen, comp));
                }
                Role::Parameter => {}
            }
        }
    }
    comps
        .into_iter()
        .filter_map(|(gen, comp)| sig.antifield_of(gen).map(|star| ((gen, comp), star)))
        .collect()
}

/// Antibracket of two local functionals.
pub fn antibracket(f: &LocalFunctional, g: &LocalFunctional) -> Result<LocalFunctional> {
    antibracket_with(f, g, exec::default_policy())
}

pub fn antibracket_with(f: &LocalFunctional, g: &LocalFunctional, policy: ExecPolicy) -> Result<LocalFunctional> {
    let (fd, gd) = (f.density(), g.density());
    let sig = if fd.signature().extends(gd.signature()) {
        fd.signature().clone()
    } else if gd.signature().extends(fd.signature()) {
        gd.signature().clone()
    } else {
        return Err(Error::MismatchedExtension);
    };
    bv_degree(fd)?;
    bv_degree(gd)?;
    let (fd, gd) = (fd.lift(&sig)?, gd.lift(&sig)?);
    let pairs = bracket_pairs(&sig, &fd, &gd);
    let pieces = exec::map_each(policy, &pairs, |((gen, comp), star)| -> Result<Expression> {
        let df_phi = jet::variational_derivative_side(&fd, *gen, comp, Side::Right)?;
        let dg_star = jet::variational_derivative_side(&gd, *star, comp, Side::Left)?;
        let df_star = jet::variational_derivative_side(&fd, *star, comp, Side::Right)?;
        let dg_phi = jet::variational_derivative_side(&gd, *gen, comp, Side::Left)?;
        df_phi.try_mul(&dg_star)?.try_sub(&df_star.try_mul(&dg_phi)?)
    });
    let mut out = Expression::zero(&sig);
    for p in pieces {
        out = out.try_add(&p?)?;
    }
    Ok(LocalFunctional::new(out))
}

/// Koszul–Tate differential: the odd derivation commuting with total
/// derivatives that sends field antifields to Euler–Lagrange expressions and
/// ghost antifields to `-Σ_a N^{a,α} D_α u*_a`.
pub fn koszul_tate_apply(ext: &BvExtension, e: &Expression) -> Result<Expression> {
    let sig = ext.sig.clone();
    let e = e.lift(&sig)?;
    let lag = ext.lagrangian();
    let mut el_cache: BTreeMap<ComponentKey, Expression> = BTreeMap::new();
    let mut failure: Option<Error> = None;
    let mut image_of_base = |gen: usize, comp: &[i64]| -> Result<Expression> {
        let key = (gen, comp.to_vec());
        if let Some(v) = el_cache.get(&key) {
            return Ok(v.clone());
        }
        let target = sig.generator(gen);
        let value = match target.role {
            Role::Field => jet::variational_derivative(&lag, gen, comp)?,
            Role::Ghost => {
                let mut acc = Expression::zero(&sig);
                for (ghost, ops) in &ext.gauge {
                    if *ghost != gen {
                        continue;
                    }
                    if let Some(op) = ops.get(comp) {
                        let mut targets = BTreeMap::new();
                        for key in op.coefficients().keys() {
                            let star = ext.antifield_generator(key.0)?;
                            targets.insert(key.clone(), Expression::generator(&sig, star, &key.1)?);
                        }
                        acc = acc.try_sub(&op.apply(&targets)?)?;
                    }
                }
                acc
            }
            _ => Expression::zero(&sig),
        };
        el_cache.insert(key, value.clone());
        Ok(value)
    };
    let out = e.apply_derivation(Parity::Odd, |atom| {
        let Atom::Coord(c) = atom else { return None };
        let Role::Antifield { of } = sig.generator(c.gen).role else { return None };
        match image_of_base(of, &c.comp) {
            Ok(v) => {
                let d = jet::total_derivative_multi(&v, c.derivs());
                (!d.is_zero()).then_some(d)
            }
            Err(err) => {
                failure.get_or_insert(err);
                None
            }
        }
    })?;
    match failure {
        Some(err) => Err(err),
        None => Ok(out),
    }
}

/// `{S_cm, e}` as a density.
pub fn brst_apply(ext: &BvExtension, e: &Expression) -> Result<Expression> {
    let e = e.lift(&ext.sig)?;
    Ok(antibracket(&ext.master, &LocalFunctional::new(e))?.into_density())
}

#[derive(Debug, Clone)]
pub struct MasterReport {
    pub holds: bool,
    pub residual: LocalFunctional,
}

/// Computes `(S_cm, S_cm)` and decides whether it vanishes modulo total divergences.
pub fn check_master_equation(ext: &BvExtension) -> Result<MasterReport> {
    check_master_equation_with(ext, exec::default_policy())
}

pub fn check_master_equation_with(ext: &BvExtension, policy: ExecPolicy) -> Result<MasterReport> {
    let s = &ext.master;
    if let Some((parity, ghost)) = bv_degree(s.density())? {
        if parity.is_odd() || ghost != 0 {
            let found = Grading { parity, ghost, antifield: 0 };
            return Err(Error::GradingViolation { context: "master action".into(), expected: Grading::ZERO, found });
        }
    }
    let residual = antibracket_with(s, s, policy)?;
    let holds = jet::is_total_divergence_with(residual.density(), policy)?;
    Ok(MasterReport { holds, residual })
}
