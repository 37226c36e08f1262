use lpchat_core::ir::{validate, Constraint, Domain, EquivalenceMode, LinearExpr, ProblemIR, Sense};
use lpchat_core::lang::{parse, SourceFile};
use lpchat_core::rational::int;
use lpchat_core::solver::{solve, SolveStatus, SolverOptions};
use lpchat_core::testgen::{grid_search, random_ir, GridOutcome};
use lpchat_pipeline::eval::{alpha_match, exact_match};
use lpchat_pipeline::testgen::{divergent_pair, Divergence, ALL_DIVERGENCES};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ir(src: &str) -> ProblemIR {
    parse(&SourceFile::generated(src)).unwrap()
}

fn strict(a: &ProblemIR, b: &ProblemIR) -> bool {
    exact_match(a, b, EquivalenceMode::Strict).unwrap().matched
}

#[test]
fn redundant_constraint_pair() {
    let gold = ir("var x; minimize obj: x; s.t. c1: x >= 20;");
    let pred = ir("var x; minimize obj: x; s.t. c1: x >= 20; s.t. c2: x >= 10;");
    let opts = SolverOptions::default();
    let (g, p) = (solve(&gold, &opts).unwrap(), solve(&pred, &opts).unwrap());
    assert_eq!(g.objective_value, Some(20.0));
    assert_eq!(p.objective_value, Some(20.0));
    assert!(!strict(&pred, &gold));
    assert!(!exact_match(&pred, &gold, EquivalenceMode::Scaled).unwrap().matched);
}

#[test]
fn strictness_difference_is_a_mismatch() {
    let gold = ir("var A integer; var B integer; maximize obj: A + B; s.t. c: A > B; s.t. cap: A + B <= 9;");
    let pred = ir("var A integer; var B integer; maximize obj: A + B; s.t. c: A >= B; s.t. cap: A + B <= 9;");
    assert!(!strict(&pred, &gold));
}

/// Objective value from the exhaustive oracle.
fn oracle(p: &ProblemIR) -> Option<i64> {
    match grid_search(p) {
        GridOutcome::Optimal { objective, .. } => Some(objective),
        GridOutcome::Infeasible => None,
    }
}

#[test]
fn hundred_solution_equivalent_pairs_all_mismatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolverOptions::default();
    let mut optimal = 0;
    let mut kinds = std::collections::BTreeSet::new();
    for i in 0..100 {
        let (gold, pred, kind) = divergent_pair(&mut rng);
        kinds.insert(format!("{kind:?}"));
        // The oracle confirms the two formulations describe the same optimum.
        let expected = oracle(&gold);
        assert_eq!(expected, oracle(&pred), "pair {i} ({kind:?}) is not solution-equivalent");
        let (g, p) = (solve(&gold, &opts).unwrap(), solve(&pred, &opts).unwrap());
        assert_eq!(g.status, p.status, "pair {i}");
        if let Some(v) = expected {
            optimal += 1;
            assert_eq!(g.status, SolveStatus::Optimal);
            assert!((g.objective_value.unwrap() - v as f64).abs() < 1e-6);
            assert!((p.objective_value.unwrap() - v as f64).abs() < 1e-6);
        }
        let m = exact_match(&pred, &gold, EquivalenceMode::Strict).unwrap();
        assert!(!m.matched, "pair {i} ({kind:?}) scored as a match");
        assert!(m.mismatch.is_some());
        if kind != Divergence::ScaledRow {
            assert!(!exact_match(&pred, &gold, EquivalenceMode::Scaled).unwrap().matched);
        }
    }
    assert!(optimal > 30, "only {optimal} optimal pairs");
    assert!(kinds.len() >= ALL_DIVERGENCES.len() - 1, "{kinds:?}");
}

/// One random edit that changes the model.
fn perturb(rng: &mut ChaCha8Rng, p: &ProblemIR) -> Option<ProblemIR> {
    let mut q = p.clone();
    match rng.random_range(0..5) {
        0 => {
            let c = q.constraints.first_mut()?;
            let (name, coef) = c.lhs.numeric_terms()?.first().map(|(n, k)| (n.to_string(), (*k).clone()))?;
            // Never lands on zero, which would drop the term instead.
            c.lhs.add_term(name, if coef == int(-1) { int(2) } else { int(1) });
        }
        1 => {
            let name = q.variables.first()?.name.clone();
            q.constraints.push(Constraint::new(LinearExpr::new().term(name, int(1)), Sense::Le, int(7)));
        }
        2 => {
            q.constraints.pop()?;
        }
        3 => {
            let c = q.constraints.first_mut()?;
            c.sense = match c.sense {
                Sense::Le => Sense::Lt,
                Sense::Lt => Sense::Le,
                Sense::Ge => Sense::Gt,
                Sense::Gt => Sense::Ge,
                Sense::Eq => Sense::Le,
            };
        }
        _ => {
            let v = q.variables.iter_mut().find(|v| v.domain != Domain::Binary)?;
            v.domain = if v.domain == Domain::Integer { Domain::Continuous } else { Domain::Integer };
        }
    }
    validate(&q).is_empty().then_some(q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn match_is_symmetric(seed_a in any::<u64>(), seed_b in any::<u64>(), same in any::<bool>()) {
        let a = random_ir(&mut ChaCha8Rng::seed_from_u64(seed_a));
        let b = if same { a.clone() } else { random_ir(&mut ChaCha8Rng::seed_from_u64(seed_b)) };
        for mode in [EquivalenceMode::Strict, EquivalenceMode::Scaled] {
            let ab = exact_match(&a, &b, mode).unwrap().matched;
            let ba = exact_match(&b, &a, mode).unwrap().matched;
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(alpha_match(&a, &b, mode).unwrap(), alpha_match(&b, &a, mode).unwrap());
        }
        prop_assert!(exact_match(&a, &a, EquivalenceMode::Strict).unwrap().matched);
    }

    #[test]
    fn any_single_edit_breaks_a_match(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = random_ir(&mut rng);
        prop_assume!(validate(&gold).is_empty());
        if let Some(pred) = perturb(&mut rng, &gold) {
            prop_assume!(pred != gold);
            prop_assert!(!exact_match(&pred, &gold, EquivalenceMode::Strict).unwrap().matched);
        }
    }
}
