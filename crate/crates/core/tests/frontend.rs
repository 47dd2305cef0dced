mod common;

use std::sync::{Arc, OnceLock};

use common::oracles::{self, SHIPPED};
use common::{mixed_signature, random_expr, rng, Shape};
use jetbv::frontend::{
    format_expression, format_model, parse_expression_in, parse_model, Context, ParsedModel, Style,
};
use jetbv::graded::int;
use jetbv::models::{self, ModelOptions};
use jetbv::{jet, Atom, Error, Expression, JetCoord, ParseErrorKind, Signature};
use proptest::prelude::*;
use rand::Rng;


fn reparse(e: &Expression, sig: &Arc<Signature>) -> Expression {
    let metric = vec![int(1); sig.num_vars()];
    let text = format_expression(e, Style::Plain);
    parse_expression_in(&text, sig, &metric, &Context::default()).unwrap_or_else(|err| panic!("{text}: {err}"))
}

fn bv_signature() -> &'static Arc<Signature> {
    static SIG: OnceLock<Arc<Signature>> = OnceLock::new();
    SIG.get_or_init(|| models::builtin("yang_mills_su2").unwrap().model.signature().clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_inverts_format(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = mixed_signature(r.gen_range(1..=3));
        let e = random_expr(&mut r, &sig, &[0, 1, 2, 3, 4], Shape::default());
        let e = oracles::with_laurent_parameter(&mut r, &e, 4);
        prop_assert_eq!(reparse(&e, &sig), e);
    }

    #[test]
    fn parse_inverts_format_with_antifields(seed in any::<u64>()) {
        let sig = bv_signature().clone();
        let gens: Vec<usize> = (0..sig.generators().len()).collect();
        let mut r = rng(seed);
        let shape = Shape { max_terms: 4, max_factors: 3, max_order: 3, vars: true };
        let e = random_expr(&mut r, &sig, &gens, shape);
        prop_assert_eq!(reparse(&e, &sig), e);
    }
}

fn same_model(a: &ParsedModel, b: &ParsedModel) {
    let (sa, sb) = (a.signature(), b.signature());
    assert_eq!(sa.vars(), sb.vars());
    assert_eq!(sa.generators(), sb.generators());
    assert_eq!(a.theory.metric(), b.theory.metric());
    let back = |e: &Expression| e.reinterpret(a.signature()).unwrap();
    let la = a.theory.lagrangian().reinterpret(sa).unwrap();
    assert_eq!(back(b.theory.lagrangian()), la);
    match (&a.bv, &b.bv) {
        (None, None) => {}
        (Some(x), Some(y)) => {
            assert_eq!(back(y.master_action().density()), x.master_action().density().clone());
            assert_eq!(x.gauge().len(), y.gauge().len());
            for ((ga, oa), (gb, ob)) in x.gauge().iter().zip(y.gauge()) {
                assert_eq!(ga, gb);
                assert_eq!(oa.len(), ob.len());
                for ((ca, na), (cb, nb)) in oa.iter().zip(ob) {
                    assert_eq!(ca, cb);
                    assert_eq!(na.coefficients().len(), nb.coefficients().len());
                    for ((ka, ma), (kb, mb)) in na.coefficients().iter().zip(nb.coefficients()) {
                        assert_eq!(ka, kb);
                        for ((aa, ea), (ab, eb)) in ma.iter().zip(mb) {
                            assert_eq!(aa, ab);
                            assert_eq!(&back(eb), ea);
                        }
                    }
                }
            }
        }
        _ => panic!("BV data present on one side only"),
    }
}

#[test]
fn shipped_models_round_trip() {
    for (name, src) in SHIPPED {
        let model = parse_model(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = format_model(&model);
        let again = parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        same_model(&model, &again);
        oracles::shipped_round_trip(name, src).unwrap();
        assert_eq!(format_model(&again), text, "{name}");
        assert_eq!(models::emit(name, &ModelOptions::default()).unwrap(), src, "{name}");
    }
}

#[test]
fn shipped_expressions_round_trip() {
    for (name, src) in SHIPPED {
        let model = parse_model(src).unwrap();
        let sig = model.signature().clone();
        let mut exprs = vec![model.theory.lagrangian().lift(&sig).unwrap()];
        if let Some(b) = &model.bv {
            exprs.push(b.master_action().density().clone());
        }
        for (_, el) in jetbv::variational::euler_lagrange_system(&model.theory).unwrap() {
            exprs.push(el.lift(&sig).unwrap());
        }
        for e in exprs {
            let text = format_expression(&e, Style::Plain);
            assert_eq!(model.expression(&text).unwrap(), e, "{name}: {text}");
        }
    }
}

fn parse_error(src: &str) -> jetbv::ParseError {
    match parse_model(src) {
        Err(Error::Parse(p)) => *p,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn error_positions() {
    let p = parse_error("vars t\nparams m\nfield u\nlagrangian = 1/2 * m * d(u;t\n");
    assert_eq!((p.pos.line, p.pos.column), (4, 29));
    assert!(p.caret().unwrap().ends_with('^'));
    let p = parse_error("vars t\nfield u\nlagrangian = w * u\n");
    assert_eq!((p.pos.line, p.pos.column), (3, 14));
    assert!(matches!(p.kind, ParseErrorKind::UndeclaredIdentifier(ref n) if n == "w"));
    let p = parse_error("vars t x\nmetric diag(1)\nfield u\nlagrangian = u\n");
    assert_eq!(p.pos.line, 2);
    let p = parse_error("vars t\nfield u\nlagrangian = u * * u\n");
    assert_eq!((p.pos.line, p.pos.column), (3, 18));
    let p = parse_error("vars t\nindex i : 1..2\nfield u[i]\nlagrangian = u[i]\n");
    assert!(matches!(p.kind, ParseErrorKind::UnboundIndex(_)));
    let p = parse_error("vars t\nfield u\nlagrangian = u\nfield v\n");
    assert_eq!(p.pos.line, 4);
}

#[test]
fn expression_errors_carry_positions() {
    let model = parse_model(SHIPPED[0].1).unwrap();
    match model.expression("m * d(u[4];t)") {
        Err(Error::Parse(p)) => assert_eq!((p.pos.line, p.pos.column), (1, 9)),
        other => panic!("{other:?}"),
    }
    match model.expression("d(u[1];q)") {
        Err(Error::Parse(p)) => assert_eq!(p.pos.column, 8),
        other => panic!("{other:?}"),
    }
}

#[test]
fn einstein_sums_are_order_independent() {
    let model = parse_model(SHIPPED[3].1).unwrap();
    let pairs = [
        ("F[a,mu,nu] * F[a,mu,nu]", "F[a,nu,mu] * F[a,nu,mu]"),
        ("A[a,mu] * A[a,mu]", "A[b,nu] * A[b,nu]"),
        ("f[a,b,c] * A[a,t] * A[b,x] * C[c]", "C[c] * A[b,x] * f[a,b,c] * A[a,t]"),
        ("d(A[a,mu];mu) * C[a]", "C[b] * d(A[b,nu];nu)"),
    ];
    for (l, r) in pairs {
        assert_eq!(model.expression(l).unwrap(), model.expression(r).unwrap(), "{l} vs {r}");
    }
    // the metric enters once per lowered pair: A_t A_t − A_x A_x
    let sig = model.signature().clone();
    let a = sig.lookup_generator("A").unwrap();
    let expected = Expression::generator(&sig, a, &[1, 0]).unwrap().pow(2)
        - Expression::generator(&sig, a, &[1, 1]).unwrap().pow(2);
    assert_eq!(model.expression("A[1,mu] * A[1,mu]").unwrap(), expected);
}

#[test]
fn latex_rendering() {
    let model = parse_model(SHIPPED[2].1).unwrap();
    let el = jetbv::variational::euler_lagrange_system(&model.theory).unwrap();
    let first = el.values().next().unwrap();
    assert_eq!(format_expression(first, Style::Latex), "-A^{0}_{xx} + A^{1}_{tx}");
    let sig = model.signature().clone();
    let star = sig.lookup_generator("A*").unwrap();
    let x = Expression::coord(&sig, JetCoord::new(star, vec![1], vec![1, 0]));
    assert_eq!(format_expression(&x, Style::Latex), "A^{*\\,1}_{t}");
    let t = Expression::atom(&sig, Atom::Var(0));
    assert_eq!(format_expression(&(&t * &jet::total_derivative(&t, 0)), Style::Latex), "t");
}
