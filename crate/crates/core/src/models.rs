//! Built-in example theories, generated as model-file text and parsed by the
//! front end so that every builtin is also a valid model file.

use std::collections::BTreeMap;

use crate::bv::{self, BvExtension};
use crate::error::{Error, Result};
use crate::frontend::{parse_model, ParsedModel};
use crate::graded::Role;
use crate::variational::{self, Theory};

pub const MODEL_NAMES: [&str; 4] = ["free_particle", "scalar_phi4", "maxwell", "yang_mills_su2"];

pub fn list_models() -> Vec<&'static str> {
    MODEL_NAMES.to_vec()
}

/// Construction parameters for builtins.
#[derive(Debug, Clone)]
pub struct ModelOptions {
    /// Base dimension of field theories (2, 3 or 4); the particle always has one.
    pub dim: usize,
    /// Potential `V` of the free particle as an expression in `u[1..3]` and `m`.
    pub potential: Option<String>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { dim: 2, potential: None }
    }
}

/// Checks every builtin is expected to pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    /// Every declared gauge operator is an exact Noether identity.
    GaugeIdentities,
    /// The master action satisfies the classical master equation.
    MasterEquation,
    /// `d_KT² = 0` on every generator.
    KoszulTateNilpotent,
    /// The lagrangian is not a total divergence.
    NontrivialAction,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::GaugeIdentities => "gauge_identities",
            Check::MasterEquation => "master_equation",
            Check::KoszulTateNilpotent => "koszul_tate_nilpotent",
            Check::NontrivialAction => "nontrivial_action",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelDescriptor {
    pub name: String,
    pub source: String,
    pub model: ParsedModel,
    pub expected: BTreeMap<Check, bool>,
}

impl ModelDescriptor {
    pub fn theory(&self) -> &Theory {
        &self.model.theory
    }

    pub fn bv(&self) -> Option<&BvExtension> {
        self.model.bv.as_ref()
    }

    /// Runs one check through the full pipeline.
    pub fn run(&self, check: Check) -> Result<bool> {
        match check {
            Check::GaugeIdentities => {
                let Some(b) = self.bv() else { return Ok(true) };
                for (_, ops) in b.gauge() {
                    for op in ops.values() {
                        if !variational::is_noether_identity(self.theory(), op)? {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            Check::MasterEquation => match self.bv() {
                Some(b) => Ok(bv::check_master_equation(b)?.holds),
                None => Ok(true),
            },
            Check::KoszulTateNilpotent => {
                let Some(b) = self.bv() else { return Ok(true) };
                koszul_tate_nilpotent(b)
            }
            Check::NontrivialAction => Ok(!crate::jet::is_total_divergence(self.theory().lagrangian())?),
        }
    }

    /// Runs every expected check and returns the observed outcomes.
    pub fn verify(&self) -> Result<BTreeMap<Check, bool>> {
        self.expected.keys().map(|&c| self.run(c).map(|v| (c, v))).collect()
    }
}

/// True iff `d_KT(d_KT(Φ)) = 0` for every component of every generator.
pub fn koszul_tate_nilpotent(b: &BvExtension) -> Result<bool> {
    let sig = b.signature().clone();
    for (gen, spec) in sig.generators().iter().enumerate() {
        if spec.role == Role::Parameter {
            continue;
        }
        for comp in spec.components() {
            let x = crate::graded::Expression::generator(&sig, gen, &comp)?;
            let once = bv::koszul_tate_apply(b, &x)?;
            if !bv::koszul_tate_apply(b, &once)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

const VAR_NAMES: [&str; 4] = ["t", "x", "y", "z"];

fn base_header(dim: usize) -> String {
    let vars = VAR_NAMES[..dim].join(" ");
    let metric: Vec<&str> = (0..dim).map(|i| if i == 0 { "1" } else { "-1" }).collect();
    format!("vars {vars}\nmetric diag({})\nindex mu nu : spacetime\n", metric.join(", "))
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=4).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidTheory(format!("base dimension must be 2, 3 or 4 (got {dim})")))
    }
}

/// Model-file text of a builtin.
pub fn emit(name: &str, opts: &ModelOptions) -> Result<String> {
    Ok(match name {
        "free_particle" => {
            let v = opts.potential.as_deref().unwrap_or("0");
            format!(
                "# Newtonian particle in three dimensions with potential V\n\
                 vars t\n\
                 params m\n\
                 index i : 1..3\n\
                 field u[i]\n\
                 def V = {v}\n\
                 lagrangian = 1/2 * m * d(u[i];t) * d(u[i];t) - V\n"
            )
        }
        "scalar_phi4" => {
            check_dim(opts.dim)?;
            format!(
                "# Real scalar with quartic self-interaction\n\
                 {}params m lambda\n\
                 field phi\n\
                 lagrangian = 1/2 * d(phi;mu) * d(phi;mu) - 1/2 * m^2 * phi^2 - 1/24 * lambda * phi^4\n",
                base_header(opts.dim)
            )
        }
        "maxwell" => {
            check_dim(opts.dim)?;
            format!(
                "# Free electromagnetism with its abelian gauge symmetry\n\
                 {}field A[mu]\n\
                 ghost C\n\
                 def F[mu,nu] = d(A[nu];mu) - d(A[mu];nu)\n\
                 lagrangian = -1/4 * F[mu,nu] * F[mu,nu]\n\
                 gauge C = d(E(A[mu]);mu)\n\
                 master = -1/4 * F[mu,nu] * F[mu,nu] + A*[mu] * d(C;mu)\n",
                base_header(opts.dim)
            )
        }
        "yang_mills_su2" => {
            check_dim(opts.dim)?;
            format!(
                "# Pure su(2) Yang-Mills theory, structure constants f[a,b,c] = eps[a,b,c]\n\
                 {}index a b c e : 1..3\n\
                 field A[a,mu]\n\
                 ghost C[a]\n\
                 def f[a,b,c] = eps[a,b,c]\n\
                 def F[a,mu,nu] = d(A[a,nu];mu) - d(A[a,mu];nu) + f[a,b,c] * A[b,mu] * A[c,nu]\n\
                 lagrangian = -1/4 * F[a,mu,nu] * F[a,mu,nu]\n\
                 gauge C[a] = d(E(A[a,mu]);mu) - f[b,e,a] * A[e,mu] * E(A[b,mu])\n\
                 master = -1/4 * F[a,mu,nu] * F[a,mu,nu]\n\
                 \x20   + A*[a,mu] * (d(C[a];mu) + f[a,b,c] * A[b,mu] * C[c])\n\
                 \x20   + 1/2 * f[a,b,c] * C*[a] * C[b] * C[c]\n",
                base_header(opts.dim)
            )
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

fn expected(name: &str) -> BTreeMap<Check, bool> {
    let mut m = BTreeMap::from([(Check::NontrivialAction, true)]);
    if name == "maxwell" || name == "yang_mills_su2" {
        m.insert(Check::GaugeIdentities, true);
        m.insert(Check::MasterEquation, true);
        m.insert(Check::KoszulTateNilpotent, true);
    }
    m
}

pub fn builtin(name: &str) -> Result<ModelDescriptor> {
    builtin_with(name, &ModelOptions::default())
}

pub fn builtin_with(name: &str, opts: &ModelOptions) -> Result<ModelDescriptor> {
    let source = emit(name, opts)?;
    let model = parse_model(&source)?;
    Ok(ModelDescriptor { name: name.to_string(), source, model, expected: expected(name) })
}
