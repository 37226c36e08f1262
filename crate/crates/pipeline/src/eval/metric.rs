//! Exact-match formulation accuracy: a prediction counts only when its
//! variables, objective and full constraint multiset equal the gold ones
//! after canonicalization.

use std::collections::BTreeMap;
use std::fmt;

use lpchat_core::ir::{
    canonicalize, CanonConstraint, CanonSense, CanonVariable, CanonicalForm, Constraint, EquivalenceMode, IrError,
    LinearExpr, ProblemIR, Sense, Terms,
};
use lpchat_core::rational::format_rational;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Variables,
    Objective,
    Constraints,
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementClass::Variables => "variables",
            ElementClass::Objective => "objective",
            ElementClass::Constraints => "constraints",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub class: ElementClass,
    pub item: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.item)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matched: bool,
    /// First difference, checked in the order variables, objective,
    /// constraints. `None` exactly when matched.
    pub mismatch: Option<Mismatch>,
}

fn render_terms(terms: &Terms) -> LinearExpr {
    let mut e = LinearExpr::new();
    for (n, c) in terms {
        e.add_term(n.clone(), c.clone());
    }
    e
}

fn render_constraint(c: &CanonConstraint) -> String {
    let sense = match c.sense {
        CanonSense::Le => Sense::Le,
        CanonSense::Lt => Sense::Lt,
        CanonSense::Eq => Sense::Eq,
    };
    Constraint::new(render_terms(&c.terms), sense, c.rhs.clone()).to_string()
}

fn render_variable(v: &CanonVariable) -> String {
    let bound = |b: &lpchat_core::rational::ExtRational| match b.finite() {
        Some(r) => format_rational(r),
        None if b.to_f64() > 0.0 => "inf".to_string(),
        None => "-inf".to_string(),
    };
    format!("{} {} [{}, {}]", v.name, v.domain.as_str(), bound(&v.lower), bound(&v.upper))
}

fn first_variable_difference(pred: &[CanonVariable], gold: &[CanonVariable]) -> Option<String> {
    let p: BTreeMap<&str, &CanonVariable> = pred.iter().map(|v| (v.name.as_str(), v)).collect();
    let g: BTreeMap<&str, &CanonVariable> = gold.iter().map(|v| (v.name.as_str(), v)).collect();
    let names: std::collections::BTreeSet<&str> = p.keys().chain(g.keys()).copied().collect();
    for n in names {
        match (p.get(n), g.get(n)) {
            (Some(_), None) => return Some(format!("extra variable {n}")),
            (None, Some(_)) => return Some(format!("missing variable {n}")),
            (Some(a), Some(b)) if a != b => {
                return Some(format!("{} (gold: {})", render_variable(a), render_variable(b)))
            }
            _ => {}
        }
    }
    None
}

/// Multiset difference of two sorted constraint lists; reports the
/// smallest item present on one side only.
fn first_constraint_difference(pred: &[CanonConstraint], gold: &[CanonConstraint]) -> Option<String> {
    let (mut i, mut j) = (0, 0);
    while i < pred.len() || j < gold.len() {
        match (pred.get(i), gold.get(j)) {
            (Some(a), Some(b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => return Some(format!("extra constraint {}", render_constraint(a))),
            (Some(_), Some(b)) | (None, Some(b)) => {
                return Some(format!("missing constraint {}", render_constraint(b)))
            }
            (Some(a), None) => return Some(format!("extra constraint {}", render_constraint(a))),
            (None, None) => unreachable!(),
        }
    }
    None
}

/// Compares two canonical forms and names the first difference.
pub fn compare_canonical(pred: &CanonicalForm, gold: &CanonicalForm) -> MatchOutcome {
    let mismatch = if let Some(item) = first_variable_difference(&pred.variables, &gold.variables) {
        Some(Mismatch {
            class: ElementClass::Variables,
            item,
        })
    } else if pred.objective.sense != gold.objective.sense {
        Some(Mismatch {
            class: ElementClass::Objective,
            item: format!(
                "sense {} (gold: {})",
                pred.objective.sense.as_str(),
                gold.objective.sense.as_str()
            ),
        })
    } else if pred.objective != gold.objective {
        let show = |o: &lpchat_core::ir::CanonObjective| {
            render_terms(&o.terms).with_constant(o.constant.clone()).to_string()
        };
        Some(Mismatch {
            class: ElementClass::Objective,
            item: format!("{} (gold: {})", show(&pred.objective), show(&gold.objective)),
        })
    } else {
        first_constraint_difference(&pred.constraints, &gold.constraints).map(|item| Mismatch {
            class: ElementClass::Constraints,
            item,
        })
    };
    MatchOutcome {
        matched: mismatch.is_none(),
        mismatch,
    }
}

/// Both inputs must pass validation; otherwise the error names the first
/// invalid one.
pub fn exact_match(pred: &ProblemIR, gold: &ProblemIR, mode: EquivalenceMode) -> Result<MatchOutcome, IrError> {
    let p = canonicalize(pred, mode)?;
    let g = canonicalize(gold, mode)?;
    Ok(compare_canonical(&p, &g))
}

/// Upper bound on complete renamings tried by [`alpha_match`].
pub const ALPHA_LEAF_CAP: usize = 100_000;

/// Like [`exact_match`] but ignores variable names: true when some
/// bijection of variable names makes the canonical forms equal. Returns
/// `Ok(None)` when the search hit [`ALPHA_LEAF_CAP`] without a verdict.
pub fn alpha_match(pred: &ProblemIR, gold: &ProblemIR, mode: EquivalenceMode) -> Result<Option<bool>, IrError> {
    let p = canonicalize(pred, mode)?;
    let g = canonicalize(gold, mode)?;
    if p.variables.len() != g.variables.len() || p.constraints.len() != g.constraints.len() {
        return Ok(Some(false));
    }
    if compare_canonical(&p, &g).matched {
        return Ok(Some(true));
    }
    let ps = signatures(&p);
    let gs = signatures(&g);
    let mut pn: Vec<&str> = p.variables.iter().map(|v| v.name.as_str()).collect();
    // Most constrained first: variables whose signature is rare.
    pn.sort_by_key(|n| gs.values().filter(|s| **s == ps[*n]).count());
    let mut search = AlphaSearch {
        pred: &p,
        gold: &g,
        ps: &ps,
        gs: &gs,
        order: pn,
        leaves: 0,
    };
    let mut map = BTreeMap::new();
    let mut used = std::collections::BTreeSet::new();
    Ok(search.run(0, &mut map, &mut used))
}

/// Name-free summary of how a variable appears.
type Signature = (String, String, Vec<(CanonSense, String, String)>);

fn signatures(c: &CanonicalForm) -> BTreeMap<String, Signature> {
    let mut out = BTreeMap::new();
    for v in &c.variables {
        let obj = c
            .objective
            .terms
            .iter()
            .find(|(n, _)| *n == v.name)
            .map(|(_, k)| format_rational(k))
            .unwrap_or_default();
        let mut rows: Vec<_> = c
            .constraints
            .iter()
            .filter_map(|r| {
                r.terms
                    .iter()
                    .find(|(n, _)| *n == v.name)
                    .map(|(_, k)| (r.sense, format_rational(k), format_rational(&r.rhs)))
            })
            .collect();
        rows.sort();
        out.insert(v.name.clone(), (render_variable(&CanonVariable { name: String::new(), ..v.clone() }), obj, rows));
    }
    out
}

struct AlphaSearch<'a> {
    pred: &'a CanonicalForm,
    gold: &'a CanonicalForm,
    ps: &'a BTreeMap<String, Signature>,
    gs: &'a BTreeMap<String, Signature>,
    order: Vec<&'a str>,
    leaves: usize,
}

impl AlphaSearch<'_> {
    fn run(
        &mut self,
        depth: usize,
        map: &mut BTreeMap<String, String>,
        used: &mut std::collections::BTreeSet<String>,
    ) -> Option<bool> {
        if depth == self.order.len() {
            self.leaves += 1;
            let renamed = self.pred.renamed(&|n: &str| map[n].clone());
            return Some(compare_canonical(&renamed, self.gold).matched);
        }
        let name = self.order[depth];
        let candidates: Vec<String> = self
            .gs
            .iter()
            .filter(|(g, s)| !used.contains(*g) && **s == self.ps[name])
            .map(|(g, _)| g.clone())
            .collect();
        for g in candidates {
            if self.leaves >= ALPHA_LEAF_CAP {
                return None;
            }
            map.insert(name.to_string(), g.clone());
            used.insert(g.clone());
            let found = self.run(depth + 1, map, used);
            used.remove(&g);
            map.remove(name);
            match found {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        Some(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpchat_core::lang::{parse, SourceFile};

    fn ir(src: &str) -> ProblemIR {
        parse(&SourceFile::generated(src)).unwrap()
    }

    fn matches(a: &str, b: &str) -> MatchOutcome {
        exact_match(&ir(a), &ir(b), EquivalenceMode::Strict).unwrap()
    }

    #[test]
    fn identity_and_term_order() {
        let a = "var x; var y; maximize obj: x + y; s.t. c: x + y <= 10;";
        assert!(matches(a, a).matched);
        assert!(matches(a, "var y; var x; maximize obj: y + x; s.t. d: y + x <= 10;").matched);
    }

    #[test]
    fn redundant_constraint_is_a_mismatch() {
        let m = matches(
            "var x; minimize obj: x; s.t. c1: x >= 20; s.t. c2: x >= 10;",
            "var x; minimize obj: x; s.t. c1: x >= 20;",
        );
        assert!(!m.matched);
        let mm = m.mismatch.unwrap();
        assert_eq!(mm.class, ElementClass::Constraints);
        assert!(mm.item.starts_with("extra constraint"), "{}", mm.item);
    }

    #[test]
    fn strictness_matters() {
        let m = matches(
            "var A; var B; maximize obj: A; s.t. c: A >= B;",
            "var A; var B; maximize obj: A; s.t. c: A > B;",
        );
        assert_eq!(m.mismatch.unwrap().class, ElementClass::Constraints);
    }

    #[test]
    fn first_difference_order() {
        let m = matches("var x integer; minimize obj: 2*x;", "var x; minimize obj: x;");
        assert_eq!(m.mismatch.unwrap().class, ElementClass::Variables);
        let m = matches("var x; maximize obj: x;", "var x; minimize obj: x;");
        assert_eq!(m.mismatch.unwrap().class, ElementClass::Objective);
    }

    #[test]
    fn alpha_mode_ignores_names() {
        let a = ir("var x; var y; maximize obj: 3*x + 2*y; s.t. c: x + y <= 4; s.t. d: x <= 2;");
        let b = ir("var p; var q; maximize obj: 2*q + 3*p; s.t. c: p + q <= 4; s.t. d: p <= 2;");
        assert!(!exact_match(&a, &b, EquivalenceMode::Strict).unwrap().matched);
        assert_eq!(alpha_match(&a, &b, EquivalenceMode::Strict).unwrap(), Some(true));
        let c = ir("var p; var q; maximize obj: 2*q + 3*p; s.t. c: p + q <= 4; s.t. d: q <= 2;");
        assert_eq!(alpha_match(&a, &c, EquivalenceMode::Strict).unwrap(), Some(false));
    }
}
