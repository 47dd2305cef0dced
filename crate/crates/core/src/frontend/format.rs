//! Deterministic rendering of expressions.
//!
//! The plain style is valid input for the expression parser: jet coordinates
//! are written as nested `d(...; var)` applications (innermost variable first
//! in declaration order), antifields as `X*`, and monomials as `coef * f1 * f2`.

use num_traits::{One, Signed};

use crate::graded::{Atom, Expression, JetCoord, Rational, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    #[default]
    Plain,
    Latex,
}

pub fn format_expression(e: &Expression, style: Style) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let sig = e.signature();
    let mut out = String::new();
    for (i, (term, coef)) in e.terms().enumerate() {
        let negative = coef.is_negative();
        match (i, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&format_term(sig, term, &coef.abs(), style));
    }
    out
}

fn format_term(sig: &Signature, term: &Term, coef: &Rational, style: Style) -> String {
    let mut factors: Vec<String> = Vec::new();
    // parameters and variables lead, as in `m * d(d(u;t);t)`
    let leading = |a: &Atom| match a {
        Atom::Var(_) => true,
        Atom::Coord(c) => sig.generator(c.gen).is_parameter(),
    };
    let (front, back): (Vec<_>, Vec<_>) = term.even_factors().iter().partition(|(a, _)| leading(a));
    for (atom, k) in front.into_iter().chain(back) {
        factors.push(power(sig, atom, *k, style));
    }
    for c in term.odd_factors() {
        factors.push(coord(sig, c, style));
    }
    let unit = coef.is_one();
    match style {
        Style::Plain => {
            if !unit || factors.is_empty() {
                factors.insert(0, plain_rational(coef));
            }
            factors.join(" * ")
        }
        Style::Latex => {
            if !unit || factors.is_empty() {
                factors.insert(0, latex_rational(coef));
            }
            factors.join("\\,")
        }
    }
}

fn plain_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn latex_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", q.numer(), q.denom())
    }
}

fn power(sig: &Signature, atom: &Atom, k: i32, style: Style) -> String {
    let base = match atom {
        Atom::Var(v) => sig.vars()[*v].clone(),
        Atom::Coord(c) => coord(sig, c, style),
    };
    if k == 1 {
        return base;
    }
    match style {
        Style::Plain => format!("{base}^{k}"),
        Style::Latex => {
            let simple = !base.contains(['_', '^']);
            if simple {
                format!("{base}^{{{k}}}")
            } else {
                format!("{{{base}}}^{{{k}}}")
            }
        }
    }
}

fn coord(sig: &Signature, c: &JetCoord, style: Style) -> String {
    let spec = sig.generator(c.gen);
    match style {
        Style::Plain => {
            let mut s = spec.name.clone();
            if !c.comp.is_empty() {
                let idx: Vec<String> = c.comp.iter().map(|v| v.to_string()).collect();
                s = format!("{s}[{}]", idx.join(","));
            }
            for (v, &n) in c.derivs().iter().enumerate() {
                for _ in 0..n {
                    s = format!("d({s};{})", sig.vars()[v]);
                }
            }
            s
        }
        Style::Latex => {
            let (base, star) = match spec.name.strip_suffix('*') {
                Some(b) => (b, true),
                None => (spec.name.as_str(), false),
            };
            let mut sup = String::new();
            if star {
                sup.push('*');
            }
            if !c.comp.is_empty() {
                if star {
                    sup.push_str("\\,");
                }
                let idx: Vec<String> = c.comp.iter().map(|v| v.to_string()).collect();
                sup.push_str(&idx.join(","));
            }
            let letters: Vec<&str> = c
                .derivs()
                .iter()
                .enumerate()
                .flat_map(|(v, &n)| std::iter::repeat_n(sig.vars()[v].as_str(), n as usize))
                .collect();
            let sep = if letters.iter().all(|l| l.chars().count() == 1) { "" } else { "," };
            let mut s = base.to_string();
            if !sup.is_empty() {
                s.push_str(&format!("^{{{sup}}}"));
            }
            if !letters.is_empty() {
                s.push_str(&format!("_{{{}}}", letters.join(sep)));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{rat, GeneratorSpec, IndexRange};
    use std::sync::Arc;

    fn sig() -> Arc<Signature> {
        Signature::new(
            vec!["t".into(), "x".into()],
            vec![
                GeneratorSpec::field("u", vec![]),
                GeneratorSpec::field("A", vec![IndexRange::new(0, 1)]),
                GeneratorSpec::parameter("m"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn plain_and_latex() {
        let s = sig();
        let u = Expression::generator(&s, 0, &[]).unwrap();
        let m = Expression::generator(&s, 2, &[]).unwrap();
        let utt = crate::jet::total_derivative_multi(&u, &[2, 0]);
        let e = -(&m * &utt);
        assert_eq!(format_expression(&e, Style::Plain), "-m * d(d(u;t);t)");
        assert_eq!(format_expression(&e, Style::Latex), "-m\\,u_{tt}");
        assert_eq!(format_expression(&Expression::zero(&s), Style::Plain), "0");
        let ut = crate::jet::total_derivative(&u, 0);
        let half = (&ut * &ut).scale(&rat(1, 2));
        assert_eq!(format_expression(&half, Style::Plain), "1/2 * d(u;t)^2");
        assert_eq!(format_expression(&half, Style::Latex), "\\frac{1}{2}\\,{u_{t}}^{2}");
        let a = Expression::generator(&s, 1, &[1]).unwrap();
        let atx = crate::jet::total_derivative_multi(&a, &[1, 1]);
        assert_eq!(format_expression(&atx, Style::Plain), "d(d(A[1];t);x)");
        assert_eq!(format_expression(&atx, Style::Latex), "A^{1}_{tx}");
    }
}
