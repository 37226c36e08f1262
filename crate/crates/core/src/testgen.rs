//! Seeded random problem generators for property tests and the acceptance
//! suite. Enabled with the `testgen` feature.

use num_traits::Signed;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::ir::{Constraint, Domain, LinearExpr, Objective, ProblemIR, Sense, VariableDecl};
use crate::rational::{int, ratio, ExtRational, Rational};

const NAMES: &[&str] = &[
    "x", "y", "z", "a", "b", "n", "qty", "x_1", "x2", "Profit", "_t", "cost_A", "w9",
];

pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = rng.random_range(-40i64..=40);
    match rng.random_range(0..4) {
        0 => ratio(num, *[2i64, 3, 4, 7, 10, 100].choose(rng).unwrap()),
        _ => int(num),
    }
}

pub fn random_nonzero<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let r = random_rational(rng);
        if !num_traits::Zero::is_zero(&r) {
            return r;
        }
    }
}

fn random_expr<R: Rng>(rng: &mut R, names: &[String], min_terms: usize) -> LinearExpr {
    let mut pool: Vec<&String> = names.iter().collect();
    pool.shuffle(rng);
    let k = rng.random_range(min_terms.min(pool.len())..=pool.len());
    let mut e = LinearExpr::new();
    for name in &pool[..k] {
        e.add_term(name.as_str(), random_nonzero(rng));
    }
    e
}

fn random_domain<R: Rng>(rng: &mut R) -> Domain {
    match rng.random_range(0..5) {
        0 | 1 => Domain::Continuous,
        2 | 3 => Domain::Integer,
        _ => Domain::Binary,
    }
}

/// A valid, fully numeric problem exercising every domain, bound shape,
/// sense (strict included), fractional coefficients, constants on both
/// sides, and optional names.
pub fn random_ir<R: Rng>(rng: &mut R) -> ProblemIR {
    let mut pool: Vec<&str> = NAMES.to_vec();
    pool.shuffle(rng);
    let n = rng.random_range(1..=6);
    let names: Vec<String> = pool[..n].iter().map(|s| s.to_string()).collect();

    let variables = names
        .iter()
        .map(|name| {
            let domain = random_domain(rng);
            let v = VariableDecl::with_domain(name.clone(), domain);
            if domain == Domain::Binary {
                return v;
            }
            let lower = match rng.random_range(0..4) {
                0 => ExtRational::NegInf,
                1 => ExtRational::Finite(-random_rational(rng).abs()),
                _ => ExtRational::zero(),
            };
            let upper = match rng.random_range(0..3) {
                0 => {
                    let base = lower.finite().cloned().unwrap_or_else(|| int(0));
                    ExtRational::Finite(base + random_rational(rng).abs())
                }
                _ => ExtRational::PosInf,
            };
            v.bounds(lower, upper)
        })
        .collect();

    let mut objective_expr = random_expr(rng, &names, 0);
    if rng.random_bool(0.3) {
        objective_expr.set_constant(random_rational(rng));
    }
    let objective = Objective {
        sense: if rng.random_bool(0.5) {
            crate::ir::ObjectiveSense::Maximize
        } else {
            crate::ir::ObjectiveSense::Minimize
        },
        name: rng.random_bool(0.5).then(|| "profit".to_string()),
        expr: objective_expr,
    };
    let mut p = ProblemIR::new(variables, objective);

    let senses = [Sense::Le, Sense::Ge, Sense::Eq, Sense::Lt, Sense::Gt];
    let m = rng.random_range(0..=6);
    for i in 0..m {
        let mut lhs = random_expr(rng, &names, 1);
        if rng.random_bool(0.2) {
            lhs.set_constant(random_rational(rng));
        }
        let mut c = Constraint::new(lhs, *senses.choose(rng).unwrap(), random_rational(rng));
        if rng.random_bool(0.6) {
            c = c.named(format!("r{i}"));
        }
        p = p.constraint(c);
    }
    p
}

/// A pure integer program: 1..=6 integer variables in [0, 10], up to six
/// rows with small integer data. Always bounded.
pub fn random_milp<R: Rng>(rng: &mut R) -> ProblemIR {
    let n = rng.random_range(1..=6);
    let names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let variables = names
        .iter()
        .map(|name| VariableDecl::integer(name.clone()).bounds(ExtRational::zero(), int(10).into()))
        .collect();
    let mut objective = LinearExpr::new();
    for name in &names {
        let c = rng.random_range(-6i64..=9);
        if c != 0 {
            objective.add_term(name.as_str(), int(c));
        }
    }
    let objective = if rng.random_bool(0.5) {
        Objective::maximize(objective)
    } else {
        Objective::minimize(objective)
    };
    let mut p = ProblemIR::new(variables, objective);
    let m = rng.random_range(0..=6);
    for _ in 0..m {
        let mut lhs = LinearExpr::new();
        for name in &names {
            if rng.random_bool(0.7) {
                let c = rng.random_range(-5i64..=7);
                if c != 0 {
                    lhs.add_term(name.as_str(), int(c));
                }
            }
        }
        if lhs.is_empty() {
            lhs.add_term(names[0].as_str(), int(1));
        }
        let sense = match rng.random_range(0..10) {
            0 => Sense::Eq,
            1..=3 => Sense::Ge,
            _ => Sense::Le,
        };
        let rhs = match sense {
            Sense::Eq => rng.random_range(-5i64..=20),
            _ => rng.random_range(-10i64..=45),
        };
        p = p.constraint(Constraint::new(lhs, sense, int(rhs)));
    }
    p
}

/// Grid-search result for a problem produced by [`random_milp`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridOutcome {
    Optimal { objective: i64, point: Vec<i64> },
    Infeasible,
}

/// Exhaustive enumeration of `{0..=10}^n` with exact integer arithmetic.
/// Partial assignments whose rows can no longer be satisfied by any
/// completion are skipped, which never discards a feasible point.
pub fn grid_search(p: &ProblemIR) -> GridOutcome {
    let names: Vec<&str> = p.variables.iter().map(|v| v.name.as_str()).collect();
    let n = names.len();
    let to_i64 = |r: &Rational| -> i64 {
        assert!(r.is_integer(), "grid search needs integer data");
        r.to_integer().try_into().expect("small")
    };
    let coef_row = |e: &LinearExpr| -> Vec<i64> {
        names
            .iter()
            .map(|name| e.coef(name).map(|c| to_i64(c.as_num().unwrap())).unwrap_or(0))
            .collect()
    };
    let objective = coef_row(&p.objective.expr);
    let maximize = p.objective.sense == crate::ir::ObjectiveSense::Maximize;
    let rows: Vec<(Vec<i64>, Sense, i64)> = p
        .constraints
        .iter()
        .map(|c| (coef_row(&c.lhs), c.sense, to_i64(&(&c.rhs - c.lhs.constant()))))
        .collect();
    // suffix_min[k][r] / suffix_max[k][r]: range of row r over variables k.. .
    let mut suffix_min = vec![vec![0i64; rows.len()]; n + 1];
    let mut suffix_max = vec![vec![0i64; rows.len()]; n + 1];
    for k in (0..n).rev() {
        for (r, (a, _, _)) in rows.iter().enumerate() {
            let lo = (a[k] * 10).min(0);
            let hi = (a[k] * 10).max(0);
            suffix_min[k][r] = suffix_min[k + 1][r] + lo;
            suffix_max[k][r] = suffix_max[k + 1][r] + hi;
        }
    }

    struct Search<'a> {
        n: usize,
        rows: &'a [(Vec<i64>, Sense, i64)],
        objective: &'a [i64],
        maximize: bool,
        suffix_min: &'a [Vec<i64>],
        suffix_max: &'a [Vec<i64>],
        point: Vec<i64>,
        activity: Vec<i64>,
        best: Option<(i64, Vec<i64>)>,
    }

    impl Search<'_> {
        fn viable(&self, k: usize) -> bool {
            self.rows.iter().enumerate().all(|(r, (_, sense, rhs))| {
                let lo = self.activity[r] + self.suffix_min[k][r];
                let hi = self.activity[r] + self.suffix_max[k][r];
                match sense {
                    Sense::Le => lo <= *rhs,
                    Sense::Ge => hi >= *rhs,
                    Sense::Eq => lo <= *rhs && hi >= *rhs,
                    Sense::Lt => lo < *rhs,
                    Sense::Gt => hi > *rhs,
                }
            })
        }

        fn run(&mut self, k: usize) {
            if !self.viable(k) {
                return;
            }
            if k == self.n {
                let value: i64 = self.point.iter().zip(self.objective).map(|(x, c)| x * c).sum();
                let better = match &self.best {
                    None => true,
                    Some((b, _)) => {
                        if self.maximize {
                            value > *b
                        } else {
                            value < *b
                        }
                    }
                };
                if better {
                    self.best = Some((value, self.point.clone()));
                }
                return;
            }
            for v in 0..=10 {
                self.point[k] = v;
                for (r, (a, _, _)) in self.rows.iter().enumerate() {
                    self.activity[r] += a[k] * v;
                }
                self.run(k + 1);
                for (r, (a, _, _)) in self.rows.iter().enumerate() {
                    self.activity[r] -= a[k] * v;
                }
            }
            self.point[k] = 0;
        }
    }

    let mut search = Search {
        n,
        rows: &rows,
        objective: &objective,
        maximize,
        suffix_min: &suffix_min,
        suffix_max: &suffix_max,
        point: vec![0; n],
        activity: vec![0; rows.len()],
        best: None,
    };
    search.run(0);
    match search.best {
        Some((objective, point)) => GridOutcome::Optimal { objective, point },
        None => GridOutcome::Infeasible,
    }
}
