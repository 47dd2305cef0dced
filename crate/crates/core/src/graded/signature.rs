use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{Grading, Parity};
use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Field,
    Ghost,
    /// Antifield of the generator at the given declaration index.
    Antifield { of: usize },
    Parameter,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Field => f.write_str("field"),
            Role::Ghost => f.write_str("ghost"),
            Role::Antifield { .. } => f.write_str("antifield"),
            Role::Parameter => f.write_str("parameter"),
        }
    }
}

/// Inclusive integer range of one component slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexRange {
    pub lo: i64,
    pub hi: i64,
}

impl IndexRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        IndexRange { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub role: Role,
    pub index_ranges: Vec<IndexRange>,
    pub grading: Grading,
}

impl GeneratorSpec {
    pub fn field(name: impl Into<String>, index_ranges: Vec<IndexRange>) -> Self {
        GeneratorSpec { name: name.into(), role: Role::Field, index_ranges, grading: Grading::ZERO }
    }

    pub fn ghost(name: impl Into<String>, index_ranges: Vec<IndexRange>) -> Self {
        GeneratorSpec {
            name: name.into(),
            role: Role::Ghost,
            index_ranges,
            grading: Grading::new(Parity::Odd, 1, 0),
        }
    }

    pub fn parameter(name: impl Into<String>) -> Self {
        GeneratorSpec {
            name: name.into(),
            role: Role::Parameter,
            index_ranges: Vec::new(),
            grading: Grading::ZERO,
        }
    }

    pub fn with_grading(mut self, grading: Grading) -> Self {
        self.grading = grading;
        self
    }

    pub fn is_parameter(&self) -> bool {
        self.role == Role::Parameter
    }

    pub fn is_antifield(&self) -> bool {
        matches!(self.role, Role::Antifield { .. })
    }

    pub fn contains_component(&self, comp: &[i64]) -> bool {
        comp.len() == self.index_ranges.len()
            && comp.iter().zip(&self.index_ranges).all(|(v, r)| r.contains(*v))
    }

    /// All component tuples in lexicographic order.
    pub fn components(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for r in &self.index_ranges {
            let mut next = Vec::with_capacity(out.len() * r.len());
            for prefix in &out {
                for v in r.lo..=r.hi {
                    let mut c = prefix.clone();
                    c.push(v);
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidTheory(format!("generator `{}`: {msg}", self.name)));
        if self.index_ranges.iter().any(|r| r.is_empty()) {
            return bad("empty index range");
        }
        match self.role {
            Role::Parameter => {
                if self.grading != Grading::ZERO {
                    return bad("parameters must be even with ghost number 0");
                }
            }
            Role::Field => {
                if self.grading.antifield != 0 {
                    return bad("fields have antifield number 0");
                }
            }
            Role::Ghost => {
                if self.grading.ghost < 1 || self.grading.antifield != 0 {
                    return bad("ghosts need ghost number >= 1 and antifield number 0");
                }
            }
            Role::Antifield { .. } => {
                if self.grading.ghost > -1 {
                    return bad("antifields need ghost number <= -1");
                }
            }
        }
        Ok(())
    }
}

/// The independent variables and graded generators an expression may reference.
///
/// Signatures are shared behind `Arc`; an extension keeps the generator
/// indices of its parent so expressions lift without rewriting.
#[derive(Debug)]
pub struct Signature {
    id: u64,
    parent: Option<Arc<Signature>>,
    vars: Vec<String>,
    generators: Vec<GeneratorSpec>,
    by_name: HashMap<String, usize>,
}

impl Signature {
    pub fn new(vars: Vec<String>, generators: Vec<GeneratorSpec>) -> Result<Arc<Signature>> {
        Self::build(None, vars, generators)
    }

    fn build(
        parent: Option<Arc<Signature>>,
        vars: Vec<String>,
        generators: Vec<GeneratorSpec>,
    ) -> Result<Arc<Signature>> {
        let mut by_name = HashMap::new();
        for v in &vars {
            if by_name.insert(v.clone(), usize::MAX).is_some() {
                return Err(Error::InvalidTheory(format!("duplicate name `{v}`")));
            }
        }
        for (i, g) in generators.iter().enumerate() {
            g.validate()?;
            if let Role::Antifield { of } = g.role {
                if of >= generators.len() || generators[of].is_parameter() {
                    return Err(Error::InvalidTheory(format!(
                        "antifield `{}` has no valid partner",
                        g.name
                    )));
                }
            }
            if by_name.insert(g.name.clone(), i).is_some() {
                return Err(Error::InvalidTheory(format!("duplicate name `{}`", g.name)));
            }
        }
        let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
        Ok(Arc::new(Signature { id, parent, vars, generators, by_name }))
    }

    /// New signature with `extra` generators appended after the existing ones.
    pub fn extend(self: &Arc<Self>, extra: Vec<GeneratorSpec>) -> Result<Arc<Signature>> {
        let mut gens = self.generators.clone();
        gens.extend(extra);
        Self::build(Some(self.clone()), self.vars.clone(), gens)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// True if `self` is `other` or was obtained from it by (repeated) extension.
    pub fn extends(&self, other: &Signature) -> bool {
        if self.id == other.id {
            return true;
        }
        let mut cur = self.parent.as_deref();
        while let Some(s) = cur {
            if s.id == other.id {
                return true;
            }
            cur = s.parent.as_deref();
        }
        false
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    pub fn generator(&self, index: usize) -> &GeneratorSpec {
        &self.generators[index]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied().filter(|&i| i != usize::MAX)
    }

    pub fn lookup_var(&self, name: &str) -> Result<usize> {
        self.var_index(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn lookup_generator(&self, name: &str) -> Result<usize> {
        self.generator_index(name).ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Antifield generator paired with `gen`, if this signature has one.
    pub fn antifield_of(&self, gen: usize) -> Option<usize> {
        self.generators.iter().position(|g| g.role == Role::Antifield { of: gen })
    }

    /// Fields, ghosts and antifields: every generator that carries jet coordinates.
    pub fn dynamical(&self) -> impl Iterator<Item = usize> + '_ {
        self.generators.iter().enumerate().filter(|(_, g)| !g.is_parameter()).map(|(i, _)| i)
    }

    pub fn check_component(&self, gen: usize, comp: &[i64]) -> Result<()> {
        let g = &self.generators[gen];
        if g.contains_component(comp) {
            Ok(())
        } else {
            Err(Error::ComponentOutOfRange { name: g.name.clone(), component: comp.to_vec() })
        }
    }

    /// Human-readable `name[c1,c2]` label of a generator component.
    pub fn component_label(&self, gen: usize, comp: &[i64]) -> String {
        let name = &self.generators[gen].name;
        if comp.is_empty() {
            name.clone()
        } else {
            let idx: Vec<String> = comp.iter().map(|c| c.to_string()).collect();
            format!("{name}[{}]", idx.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Arc<Signature> {
        Signature::new(
            vec!["t".into(), "x".into()],
            vec![
                GeneratorSpec::field("A", vec![IndexRange::new(0, 1)]),
                GeneratorSpec::ghost("C", vec![]),
                GeneratorSpec::parameter("m"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_duplicates_and_bad_gradings() {
        let dup = Signature::new(
            vec!["t".into()],
            vec![GeneratorSpec::field("t", vec![])],
        );
        assert!(dup.is_err());
        let bad_ghost = GeneratorSpec::ghost("C", vec![]).with_grading(Grading::new(Parity::Odd, 0, 0));
        assert!(Signature::new(vec![], vec![bad_ghost]).is_err());
        let odd_param =
            GeneratorSpec::parameter("g").with_grading(Grading::new(Parity::Odd, 0, 0));
        assert!(Signature::new(vec![], vec![odd_param]).is_err());
    }

    #[test]
    fn extension_keeps_indices() {
        let base = sig();
        let ext = base
            .extend(vec![GeneratorSpec {
                name: "A*".into(),
                role: Role::Antifield { of: 0 },
                index_ranges: vec![IndexRange::new(0, 1)],
                grading: Grading::ZERO.antifield_of(),
            }])
            .unwrap();
        assert!(ext.extends(&base));
        assert!(!base.extends(&ext));
        assert_eq!(ext.generator_index("C"), Some(1));
        assert_eq!(ext.antifield_of(0), Some(3));
        assert_eq!(ext.generator(0).components(), vec![vec![0], vec![1]]);
    }
}
