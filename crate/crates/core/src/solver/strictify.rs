use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::ir::{Constraint, LinearExpr, ProblemIR, Sense};
use crate::rational::{format_rational, Rational};

/// A problem with every strict inequality replaced by a non-strict one, and
/// a note for each replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Strictified {
    pub problem: ProblemIR,
    pub relaxations: Vec<String>,
}

/// Rewrites `<` and `>` constraints into solver-acceptable form.
///
/// Over integer variables with rational coefficients the rewrite is exact:
/// the row is scaled to integer coefficients and `a.x < b` becomes
/// `a.x <= ceil(b) - 1` (`>` symmetrically). Any other strict row is
/// tightened by `eps`.
pub fn strictify(p: &ProblemIR, eps: &Rational) -> Strictified {
    let mut problem = p.clone();
    let mut relaxations = Vec::new();
    for (i, c) in problem.constraints.iter_mut().enumerate() {
        if !c.sense.is_strict() {
            continue;
        }
        let label = c.name.clone().unwrap_or_else(|| format!("#{}", i + 1));
        let before = c.to_string();
        let Some(terms) = c.lhs.numeric_terms() else {
            continue;
        };
        let all_integral = terms.iter().all(|(name, _)| {
            p.variable(name).is_some_and(|v| v.domain.is_integral())
        });
        let rhs = &c.rhs - c.lhs.constant();

        let replacement = if all_integral {
            let scale = terms
                .iter()
                .fold(BigInt::one(), |acc, (_, coef)| acc.lcm(coef.denom()));
            let scale = Rational::from_integer(scale);
            let mut lhs = LinearExpr::new();
            for (name, coef) in &terms {
                lhs.add_term(name.to_string(), *coef * &scale);
            }
            let scaled_rhs = rhs * &scale;
            let (sense, bound) = match c.sense {
                Sense::Lt => (Sense::Le, scaled_rhs.ceil() - Rational::one()),
                _ => (Sense::Ge, scaled_rhs.floor() + Rational::one()),
            };
            let new = Constraint {
                name: c.name.clone(),
                lhs,
                sense,
                rhs: bound,
            };
            relaxations.push(format!(
                "strict {label} ({before}) replaced by exact integer form {new}"
            ));
            new
        } else {
            let mut lhs = c.lhs.clone();
            lhs.set_constant(Rational::zero());
            let (sense, bound) = match c.sense {
                Sense::Lt => (Sense::Le, rhs - eps),
                _ => (Sense::Ge, rhs + eps),
            };
            let new = Constraint {
                name: c.name.clone(),
                lhs,
                sense,
                rhs: bound,
            };
            relaxations.push(format!(
                "strict {label} ({before}) relaxed by eps={} to {new}",
                format_rational(eps)
            ));
            new
        };
        *c = replacement;
    }
    Strictified {
        problem,
        relaxations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::*;
    use crate::rational::{int, ratio};

    fn single(vars: Vec<VariableDecl>, c: Constraint) -> ProblemIR {
        ProblemIR::new(vars, Objective::minimize(LinearExpr::new())).constraint(c)
    }

    #[test]
    fn integer_gap_of_one() {
        let p = single(
            vec![VariableDecl::integer("A"), VariableDecl::integer("B")],
            Constraint::new(LinearExpr::new().term("A", int(1)).term("B", int(-1)), Sense::Gt, int(0))
                .named("c1"),
        );
        let s = strictify(&p, &ratio(1, 1_000_000));
        let c = &s.problem.constraints[0];
        assert_eq!(c.sense, Sense::Ge);
        assert_eq!(c.rhs, int(1));
        assert_eq!(c.lhs, LinearExpr::new().term("A", int(1)).term("B", int(-1)));
        assert_eq!(s.relaxations.len(), 1);
        assert!(s.relaxations[0].contains("A - B >= 1"), "{}", s.relaxations[0]);
    }

    #[test]
    fn continuous_strict_is_tightened_by_eps() {
        let p = single(
            vec![VariableDecl::continuous("x")],
            Constraint::new(LinearExpr::new().term("x", int(1)), Sense::Lt, int(5)),
        );
        let eps = ratio(1, 1_000_000);
        let s = strictify(&p, &eps);
        let c = &s.problem.constraints[0];
        assert_eq!(c.sense, Sense::Le);
        assert_eq!(c.rhs, int(5) - eps);
        assert!(s.relaxations[0].contains("relaxed by eps=0.000001"));
    }

    #[test]
    fn fractional_integer_rows_are_scaled() {
        // x/2 < 3/4 over integers: x < 3/2 -> x <= 1.
        let p = single(
            vec![VariableDecl::integer("x")],
            Constraint::new(LinearExpr::new().term("x", ratio(1, 2)), Sense::Lt, ratio(3, 4)),
        );
        let c = &strictify(&p, &ratio(1, 1000)).problem.constraints[0];
        assert_eq!(c.lhs, LinearExpr::new().term("x", int(1)));
        assert_eq!(c.rhs, int(1));
    }

    #[test]
    fn non_strict_problems_are_untouched() {
        let p = single(
            vec![VariableDecl::continuous("x")],
            Constraint::new(LinearExpr::new().term("x", int(1)), Sense::Le, int(5)),
        );
        let s = strictify(&p, &ratio(1, 10));
        assert_eq!(s.problem, p);
        assert!(s.relaxations.is_empty());
    }
}
