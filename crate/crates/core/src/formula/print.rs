//! Canonical printer. Output re-parses to the same formula.

use std::fmt;

use super::{Atom, Base, Formula, Sign, Term};

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Var(v) | Base::Const(v) => write!(f, "{v}"),
            Base::Elem(e) => write!(f, "@{e}"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.steps.iter().rev() {
            match s.sign {
                Sign::Forward => write!(f, "{}(", s.func)?,
                Sign::Inverse => write!(f, "{}^-1(", s.func)?,
            }
        }
        write!(f, "{}", self.base)?;
        for _ in &self.steps {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Top,
    Or,
    And,
    Neg,
}

fn is_binder(fm: &Formula) -> bool {
    matches!(
        fm,
        Formula::Exists(..) | Formula::Forall(..) | Formula::Atom(Atom::Card { .. })
    )
}

fn write_formula(fm: &Formula, ctx: Ctx, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if is_binder(fm) && ctx != Ctx::Top {
        write!(f, "(")?;
        write_formula(fm, Ctx::Top, f)?;
        return write!(f, ")");
    }
    match fm {
        Formula::Atom(a) => write_atom(a, f),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(Atom::Eq(s, t)) => write!(f, "{s} != {t}"),
            other => {
                write!(f, "!")?;
                write_formula(other, Ctx::Neg, f)
            }
        },
        Formula::And(parts) => {
            let paren = ctx == Ctx::Neg;
            if paren {
                write!(f, "(")?;
            }
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write_formula(p, Ctx::And, f)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::Or(parts) => {
            let paren = matches!(ctx, Ctx::Neg | Ctx::And);
            if paren {
                write!(f, "(")?;
            }
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_formula(p, Ctx::Or, f)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::Exists(v, body) => {
            write!(f, "E {v}. ")?;
            write_formula(body, Ctx::Top, f)
        }
        Formula::Forall(v, body) => {
            write!(f, "A {v}. ")?;
            write_formula(body, Ctx::Top, f)
        }
    }
}

fn write_atom(a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        Atom::Eq(s, t) => write!(f, "{s} = {t}"),
        Atom::Pred(p, t) => write!(f, "{p}({t})"),
        Atom::Card { k, var, body } => {
            write!(f, "#>= {k} {var}. ")?;
            write_formula(body, Ctx::Top, f)
        }
        Atom::Rel(r, args) => write!(f, "{r}({})", args.join(", ")),
        Atom::True => write!(f, "true"),
        Atom::False => write!(f, "false"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, Ctx::Top, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(&Formula::Atom(self.clone()), Ctx::Top, f)
    }
}

#[cfg(test)]
mod tests {
    use crate::formula::{parse_formula, Signature};

    #[test]
    fn prints_canonically() {
        let sig = Signature::bijective(&["f", "g"], &["U"], &[]).unwrap();
        let cases = [
            ("E y. f(y) = x", "E v0. f(v0) = x"),
            (
                "!(U(x) | x = y) & g^-1(x) != y",
                "!(U(x) | x = y) & g^-1(x) != y",
            ),
            ("(E y. U(y)) & U(x)", "(E v0. U(v0)) & U(x)"),
            ("#>= 3 z. !U(f(z))", "#>= 3 v0. !U(f(v0))"),
        ];
        for (src, want) in cases {
            let q = parse_formula(src, &sig).unwrap();
            assert_eq!(q.formula.to_string(), want);
        }
    }
}
