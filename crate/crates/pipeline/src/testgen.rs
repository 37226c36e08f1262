//! Generators for metric tests: pairs of formulations that solve to the
//! same optimum but are written differently.

use lpchat_core::ir::{Constraint, LinearExpr, ProblemIR, Sense};
use lpchat_core::rational::int;
use lpchat_core::testgen::random_milp;
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divergence {
    /// A looser copy of an existing row.
    RedundantCopy,
    /// An existing row multiplied by 2.
    ScaledRow,
    /// An existing row repeated.
    DuplicatedRow,
    /// An equality written as two inequalities.
    SplitEquality,
    /// A constraint implied by a variable bound.
    BoundAsConstraint,
}

pub const ALL_DIVERGENCES: [Divergence; 5] = [
    Divergence::RedundantCopy,
    Divergence::ScaledRow,
    Divergence::DuplicatedRow,
    Divergence::SplitEquality,
    Divergence::BoundAsConstraint,
];

/// Applies `kind` to `gold`; `None` when `gold` has nothing to apply it to.
pub fn diverge<R: Rng>(rng: &mut R, gold: &ProblemIR, kind: Divergence) -> Option<ProblemIR> {
    let mut pred = gold.clone();
    match kind {
        Divergence::RedundantCopy => {
            let c = gold.constraints.choose(rng)?;
            let slack = int(rng.random_range(1..=5));
            let looser = match c.sense {
                Sense::Le | Sense::Lt | Sense::Eq => Constraint::new(c.lhs.clone(), Sense::Le, c.rhs.clone() + slack),
                Sense::Ge | Sense::Gt => Constraint::new(c.lhs.clone(), Sense::Ge, c.rhs.clone() - slack),
            };
            pred.constraints.push(looser);
        }
        Divergence::ScaledRow => {
            let i = rng.random_range(0..gold.constraints.len().max(1));
            let c = pred.constraints.get_mut(i)?;
            let k = int(rng.random_range(2..=4));
            c.lhs = c.lhs.scaled(&k);
            c.rhs = c.rhs.clone() * k;
        }
        Divergence::DuplicatedRow => {
            let c = gold.constraints.choose(rng)?.clone();
            pred.constraints.push(c);
        }
        Divergence::SplitEquality => {
            let i = gold.constraints.iter().position(|c| c.sense == Sense::Eq)?;
            let c = pred.constraints.remove(i);
            pred.constraints.push(Constraint::new(c.lhs.clone(), Sense::Le, c.rhs.clone()));
            pred.constraints.push(Constraint::new(c.lhs, Sense::Ge, c.rhs));
        }
        Divergence::BoundAsConstraint => {
            let v = gold.variables.choose(rng)?;
            let upper = v.upper.finite()?.clone();
            pred.constraints.push(Constraint::new(
                LinearExpr::new().term(v.name.clone(), int(1)),
                Sense::Le,
                upper + int(rng.random_range(0..=3)),
            ));
        }
    }
    Some(pred)
}

/// A random bounded integer program and a differently written copy of it.
pub fn divergent_pair<R: Rng>(rng: &mut R) -> (ProblemIR, ProblemIR, Divergence) {
    loop {
        let gold = random_milp(rng);
        let kind = *ALL_DIVERGENCES.choose(rng).expect("nonempty");
        if let Some(pred) = diverge(rng, &gold, kind) {
            return (gold, pred, kind);
        }
    }
}
