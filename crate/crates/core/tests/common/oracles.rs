//! Seeded checks shared by the property suites and the acceptance runner.
//! Each returns `Err` with a description of the first discrepancy.

use std::collections::BTreeMap;
use std::sync::Arc;

use jetbv::bv::{self, BvExtension};
use jetbv::frontend::{format_expression, format_model, parse_expression_in, parse_model, Context, Style};
use jetbv::graded::{int, rat};
use jetbv::models::{self, ModelOptions};
use jetbv::variational::{self, LocalFunctional, Section};
use jetbv::{jet, Atom, Expression, GeneratorSpec, IndexRange, JetCoord, Rational, Role, Side, Signature};
use rand::Rng;

use super::{mixed_signature, random_base_poly, random_expr, random_homogeneous, rng, Shape};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random polynomial potential in `u[1..3]`: (coefficient, exponents).
pub fn random_potential(r: &mut impl Rng) -> Vec<(Rational, [u32; 3])> {
    (0..r.gen_range(1..=4))
        .map(|_| {
            let c = rat(r.gen_range(-9..=9), r.gen_range(1..=5));
            let mut e = [0u32; 3];
            for _ in 0..r.gen_range(1..=4) {
                e[r.gen_range(0..3)] += 1;
            }
            (c, e)
        })
        .filter(|(c, _)| *c != int(0))
        .collect()
}

pub fn potential_text(v: &[(Rational, [u32; 3])]) -> String {
    if v.is_empty() {
        return "0".into();
    }
    let terms: Vec<String> = v
        .iter()
        .map(|(c, e)| {
            let mut s = format!("({c})");
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    s.push_str(&format!(" * u[{}]^{k}", i + 1));
                }
            }
            s
        })
        .collect();
    terms.join(" + ")
}

/// The particle's EL system equals `−m·ü_i − ∂V/∂u_i`, differentiated monomial by monomial.
pub fn free_particle_case(seed: u64) -> Check {
    let mut r = rng(seed);
    let v = random_potential(&mut r);
    let opts = ModelOptions { potential: Some(potential_text(&v)), ..ModelOptions::default() };
    let model = models::builtin_with("free_particle", &opts).map_err(|e| e.to_string())?;
    let theory = model.theory();
    let sig = theory.signature().clone();
    let u_gen = sig.lookup_generator("u").unwrap();
    let m = Expression::generator(&sig, sig.lookup_generator("m").unwrap(), &[]).unwrap();
    let u: Vec<Expression> = (1..=3).map(|i| Expression::generator(&sig, u_gen, &[i]).unwrap()).collect();
    let el = variational::euler_lagrange_system(theory).map_err(|e| e.to_string())?;
    ensure(el.len() == 3, || format!("{} equations", el.len()))?;
    for i in 0..3 {
        let mut expected = -(&m * &jet::total_derivative_multi(&u[i], &[2]));
        for (c, e) in &v {
            if e[i] == 0 {
                continue;
            }
            let mut mono = Expression::constant(&sig, c * int(e[i] as i64));
            for j in 0..3 {
                let k = if j == i { e[j] - 1 } else { e[j] };
                mono = mono * u[j].pow(k);
            }
            expected = expected - mono;
        }
        let got = &el[&(u_gen, vec![i as i64 + 1])];
        ensure(*got == expected, || format!("seed {seed}, u[{}]: {got} != {expected}", i + 1))?;
    }
    Ok(())
}

pub fn commuting_case(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(1..=3);
    let sig = mixed_signature(n);
    let e = random_expr(&mut r, &sig, &[0, 1, 2, 3, 4], Shape::default());
    let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
    let ij = jet::total_derivative(&jet::total_derivative(&e, i), j);
    let ji = jet::total_derivative(&jet::total_derivative(&e, j), i);
    ensure(ij == ji, || format!("seed {seed}: D{i}D{j} != D{j}D{i} on {e}"))
}

pub fn el_divergence_case(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(1..=3);
    let sig = mixed_signature(n);
    let shape = Shape { max_terms: 4, max_factors: 3, max_order: 2, vars: true };
    let d = random_expr(&mut r, &sig, &[0, 1, 2, 3, 4], shape);
    let g = random_expr(&mut r, &sig, &[0, 1, 2, 3, 4], shape);
    let i = r.gen_range(0..n);
    let dg = jet::total_derivative(&g, i);
    let shifted = &d + &dg;
    for gen in 0..4 {
        for comp in sig.generator(gen).components() {
            let e = |x: &Expression| jet::variational_derivative(x, gen, &comp).map_err(|e| e.to_string());
            ensure(e(&dg)?.is_zero(), || format!("seed {seed}: EL of D{i}({g}) is nonzero"))?;
            ensure(e(&shifted)? == e(&d)?, || format!("seed {seed}: EL changed by adding D{i}({g})"))?;
        }
    }
    Ok(())
}

/// `u`, `v[1..2]`, parameter `m` and the bookkeeping parameter `eps`, in `t`.
fn gateaux_signature() -> Arc<Signature> {
    Signature::new(
        vec!["t".into()],
        vec![
            GeneratorSpec::field("u", vec![]),
            GeneratorSpec::field("v", vec![IndexRange::new(1, 2)]),
            GeneratorSpec::parameter("m"),
            GeneratorSpec::parameter("eps"),
        ],
    )
    .unwrap()
}

/// d/dε|₀ ∫₀¹ L(s + εh) = ∫₀¹ Σ_a EL_a(s)·h_a with h = t³(1−t)³·p(t).
pub fn gateaux_case(seed: u64) -> Check {
    let sig = gateaux_signature();
    let mut r = rng(seed);
    let mut lag = Expression::zero(&sig);
    for _ in 0..r.gen_range(1..=3) {
        let len = r.gen_range(1..=3);
        let pattern: Vec<usize> = (0..len).map(|_| [0, 1, 2][r.gen_range(0..3)]).collect();
        lag = lag + random_homogeneous(&mut r, &sig, &pattern, 2, 2, true);
    }
    let keys: Vec<(usize, Vec<i64>)> = vec![(0, vec![]), (1, vec![1]), (1, vec![2])];
    let t = Expression::var(&sig, 0);
    let bump = (&t * &(Expression::one(&sig) - t.clone())).pow(3);
    let eps = Expression::generator(&sig, 3, &[]).unwrap();
    let m_value = rat(r.gen_range(1..=5), r.gen_range(1..=3));

    let mut base = BTreeMap::new();
    let mut moved = BTreeMap::new();
    let mut h = BTreeMap::new();
    for k in &keys {
        let s = random_base_poly(&mut r, &sig, 2, 2);
        let hk = &bump * &random_base_poly(&mut r, &sig, 1, 2);
        moved.insert(k.clone(), &s + &(&eps * &hk));
        base.insert(k.clone(), s);
        h.insert(k.clone(), hk);
    }
    let bounds = [(int(0), int(1))];
    let fail = |e: jetbv::Error| format!("seed {seed}: {e}");
    let section = Section::new(&sig, base).map_err(fail)?.with_param(2, m_value.clone());
    let moved = Section::new(&sig, moved).map_err(fail)?.with_param(2, m_value);

    let action = variational::integrate_symbolic(&lag, &moved, &bounds).map_err(fail)?;
    let eps_atom = Atom::Coord(JetCoord::base(3, vec![], 1));
    let slope = action.partial_derivative(&eps_atom, Side::Left);
    let slope = slope.substitute(&BTreeMap::from([(eps_atom, Expression::zero(&sig))])).map_err(fail)?;
    let lhs = slope.as_constant().ok_or_else(|| format!("seed {seed}: slope {slope} is not numeric"))?;

    let mut pairing = Expression::zero(&sig);
    for k in &keys {
        let el = jet::variational_derivative(&lag, k.0, &k.1).map_err(fail)?;
        pairing = pairing + &el * &h[k];
    }
    let rhs = variational::integrate_on_box(&LocalFunctional::new(pairing), &section, &bounds).map_err(fail)?;
    ensure(lhs == rhs, || format!("seed {seed}: directional derivative {lhs} != pairing {rhs}"))
}

/// `Σ_ν D_ν(g^{μμ} g^{νν} D_μ F_{μν})` assembled by hand, and the library's Noether residual.
pub fn maxwell_identity(dim: usize) -> Check {
    let model = models::builtin_with("maxwell", &ModelOptions { dim, potential: None }).map_err(|e| e.to_string())?;
    let theory = model.theory();
    let sig = theory.signature().clone();
    let a_gen = sig.lookup_generator("A").unwrap();
    let a: Vec<Expression> = (0..dim).map(|i| Expression::generator(&sig, a_gen, &[i as i64]).unwrap()).collect();
    let inv: Vec<Rational> = theory.metric().iter().map(|g| int(1) / g).collect();
    let f = |mu: usize, nu: usize| &jet::total_derivative(&a[nu], mu) - &jet::total_derivative(&a[mu], nu);
    let mut total = Expression::zero(&sig);
    for nu in 0..dim {
        for mu in 0..dim {
            let term = jet::total_derivative(&f(mu, nu), mu).scale(&(&inv[mu] * &inv[nu]));
            total = total + jet::total_derivative(&term, nu);
        }
    }
    ensure(total.is_zero(), || format!("dim {dim}: hand-built identity leaves {total}"))?;
    let op = model.model.operator("d(E(A[mu]);mu)").map_err(|e| e.to_string())?;
    let residual = variational::noether_residual(theory, &op).map_err(|e| e.to_string())?;
    ensure(residual.is_zero(), || format!("dim {dim}: residual {residual}"))
}

/// The su(2) action without the ghost self-coupling.
pub fn mutated_yang_mills() -> BvExtension {
    let src = models::emit("yang_mills_su2", &ModelOptions::default()).unwrap();
    let kept: Vec<&str> = src.lines().filter(|l| !l.contains("C*[a] * C[b] * C[c]")).collect();
    assert_eq!(kept.len() + 1, src.lines().count());
    parse_model(&kept.join("\n")).unwrap().bv.unwrap()
}

pub fn master_equations() -> std::result::Result<String, String> {
    for dim in 2..=4 {
        let m = models::builtin_with("maxwell", &ModelOptions { dim, potential: None }).map_err(|e| e.to_string())?;
        let report = bv::check_master_equation(m.bv().unwrap()).map_err(|e| e.to_string())?;
        ensure(report.holds, || format!("maxwell dim {dim} fails"))?;
    }
    let ym = models::builtin("yang_mills_su2").map_err(|e| e.to_string())?;
    let report = bv::check_master_equation(ym.bv().unwrap()).map_err(|e| e.to_string())?;
    ensure(report.holds, || "yang-mills fails".into())?;
    let report = bv::check_master_equation(&mutated_yang_mills()).map_err(|e| e.to_string())?;
    let residual = report.residual.density();
    ensure(!report.holds && !residual.is_zero(), || "mutated yang-mills passes".into())?;
    Ok(format_expression(residual, Style::Plain))
}

/// Dynamical generators (fields, ghosts, antifields) of a BV signature.
pub fn dynamical(sig: &Signature) -> Vec<usize> {
    sig.generators().iter().enumerate().filter(|(_, g)| g.role != Role::Parameter).map(|(i, _)| i).collect()
}

/// Random density of a single (parity, ghost number) degree, or `None` when it cancels.
pub fn random_functional(r: &mut impl Rng, sig: &Arc<Signature>, max_len: usize, terms: usize) -> Option<Expression> {
    let gens = dynamical(sig);
    let len = r.gen_range(1..=max_len);
    let pattern: Vec<usize> = (0..len).map(|_| gens[r.gen_range(0..gens.len())]).collect();
    let e = random_homogeneous(r, sig, &pattern, terms, 1, false);
    (!e.is_zero()).then_some(e)
}

/// `(-1)^{(|F|+1)(|G|+1)}`
pub fn shifted_sign(f: &Expression, g: &Expression) -> i64 {
    let odd = |e: &Expression| bv::bv_degree(e).unwrap().expect("nonzero density").0.is_odd();
    if odd(f) || odd(g) {
        1
    } else {
        -1
    }
}

pub fn bracket(f: &Expression, g: &Expression) -> Expression {
    bv::antibracket(&LocalFunctional::new(f.clone()), &LocalFunctional::new(g.clone())).unwrap().into_density()
}

pub fn antisymmetry_case(sig: &Arc<Signature>, seed: u64) -> Check {
    let mut r = rng(seed);
    let (Some(f), Some(g)) = (random_functional(&mut r, sig, 3, 3), random_functional(&mut r, sig, 3, 3)) else {
        return Ok(());
    };
    let expected = bracket(&g, &f).scale(&int(-shifted_sign(&f, &g)));
    ensure(jet::ibp_equal(&bracket(&f, &g), &expected).unwrap(), || format!("seed {seed}: ({f}, {g})"))
}

pub fn jacobi_case(sig: &Arc<Signature>, seed: u64) -> Check {
    let mut r = rng(seed);
    let (Some(f), Some(g), Some(h)) =
        (random_functional(&mut r, sig, 2, 2), random_functional(&mut r, sig, 2, 2), random_functional(&mut r, sig, 2, 2))
    else {
        return Ok(());
    };
    let lhs = bracket(&f, &bracket(&g, &h));
    let rhs = &bracket(&bracket(&f, &g), &h) + &bracket(&g, &bracket(&f, &h)).scale(&int(shifted_sign(&f, &g)));
    ensure(jet::ibp_equal(&lhs, &rhs).unwrap(), || format!("seed {seed}: ({f}, {g}, {h})"))
}

pub fn koszul_tate_builtins() -> Check {
    for name in models::MODEL_NAMES {
        let model = models::builtin(name).map_err(|e| e.to_string())?;
        let ext = match model.bv() {
            Some(b) => b.clone(),
            None => bv::extend_to_bv(model.theory(), Vec::new()).map_err(|e| e.to_string())?,
        };
        ensure(models::koszul_tate_nilpotent(&ext).map_err(|e| e.to_string())?, || name.to_string())?;
    }
    Ok(())
}

/// Multiplies some terms by negative powers of the parameter `m`.
pub fn with_laurent_parameter(r: &mut impl Rng, e: &Expression, m: usize) -> Expression {
    let sig = e.signature().clone();
    let m_inv = Expression::generator(&sig, m, &[]).unwrap().invert_monomial().unwrap();
    let mut out = Expression::zero(&sig);
    for (t, c) in e.terms() {
        let mut term = Expression::from_term(&sig, t.clone(), c.clone());
        if r.gen_bool(0.3) {
            term = term * m_inv.pow(r.gen_range(1..=2));
        }
        out = out + term;
    }
    out
}

pub fn round_trip(e: &Expression) -> Check {
    let sig = e.signature();
    let metric = vec![int(1); sig.num_vars()];
    let text = format_expression(e, Style::Plain);
    let back = parse_expression_in(&text, sig, &metric, &Context::default()).map_err(|err| format!("{text}: {err}"))?;
    ensure(back == *e, || format!("{text} reparses as {back}"))
}

pub fn round_trip_case(seed: u64) -> Check {
    let mut r = rng(seed);
    let sig = mixed_signature(r.gen_range(1..=3));
    let e = random_expr(&mut r, &sig, &[0, 1, 2, 3, 4], Shape::default());
    round_trip(&with_laurent_parameter(&mut r, &e, 4))
}

pub const SHIPPED: [(&str, &str); 4] = [
    ("free_particle", include_str!("../../../../models/free_particle.jv")),
    ("scalar_phi4", include_str!("../../../../models/scalar_phi4.jv")),
    ("maxwell", include_str!("../../../../models/maxwell.jv")),
    ("yang_mills_su2", include_str!("../../../../models/yang_mills_su2.jv")),
];

/// Parse, format, parse again: same signature, lagrangian and master action,
/// and a stable formatted text.
pub fn shipped_round_trip(name: &str, src: &str) -> Check {
    let model = parse_model(src).map_err(|e| format!("{name}: {e}"))?;
    let text = format_model(&model);
    let again = parse_model(&text).map_err(|e| format!("{name}: {e}"))?;
    ensure(model.signature().generators() == again.signature().generators(), || format!("{name}: generators"))?;
    let back = |e: &Expression| e.reinterpret(model.signature()).unwrap();
    let lag = model.theory.lagrangian().reinterpret(model.signature()).unwrap();
    ensure(back(again.theory.lagrangian()) == lag, || format!("{name}: lagrangian"))?;
    if let (Some(x), Some(y)) = (&model.bv, &again.bv) {
        ensure(back(y.master_action().density()) == *x.master_action().density(), || format!("{name}: master"))?;
    }
    ensure(model.bv.is_some() == again.bv.is_some(), || format!("{name}: BV data"))?;
    ensure(format_model(&again) == text, || format!("{name}: formatting is not stable"))
}
