use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, SourceFile, Span};
use crate::ir::{
    validate, BindingSource, Constraint, DataBinding, Domain, LinearExpr, Objective,
    ObjectiveSense, ParamRef, ProblemIR, Sense, VariableDecl, RESERVED_WORDS,
};
use crate::rational::{ExtRational, Rational};

const STATEMENT_KEYWORDS: &[&str] = &["var", "param", "maximize", "minimize", "s.t."];
const DOMAIN_KEYWORDS: &[&str] = &["integer", "binary"];

#[derive(Debug)]
struct Name {
    text: String,
    span: Span,
}

#[derive(Debug)]
struct Bound {
    upper: bool,
    value: ExtRational,
    span: Span,
}

#[derive(Debug)]
struct Term {
    coef: Rational,
    ident: Option<Name>,
}

#[derive(Debug)]
enum Stmt {
    Var {
        name: Name,
        domain: Domain,
        bounds: Vec<Bound>,
    },
    Param {
        name: Name,
        value: Option<Rational>,
    },
    Objective {
        keyword: Span,
        sense: ObjectiveSense,
        name: Name,
        expr: Vec<Term>,
    },
    Constraint {
        name: Name,
        lhs: Vec<Term>,
        sense: Sense,
        rhs: Vec<Term>,
    },
}

/// Parses MiniAPL source into a validated formulation, or reports every
/// error found. Never panics, whatever the input.
pub fn parse(src: &SourceFile) -> Result<ProblemIR, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(&src.text);
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        diags: Vec::new(),
    };
    let stmts = parser.program();
    diags.extend(parser.diags);
    if !diags.is_empty() {
        return Err(diags);
    }
    lower(stmts)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> Span {
        if self.pos == 0 {
            Span::new(1, 1, 0)
        } else {
            self.tokens[self.pos - 1].span.end()
        }
    }

    fn at_statement_start(&self) -> bool {
        match &self.peek().tok {
            Tok::SubjectTo => true,
            Tok::Ident(s) => matches!(s.as_str(), "var" | "param" | "maximize" | "minimize"),
            _ => false,
        }
    }

    fn program(&mut self) -> Vec<Stmt> {
        let mut stmts = Vec::new();
        while self.peek().tok != Tok::Eof {
            let start = self.pos;
            match self.statement() {
                Ok(s) => stmts.push(s),
                Err(d) => {
                    self.diags.push(d);
                    self.recover(start);
                }
            }
        }
        stmts
    }

    fn recover(&mut self, start: usize) {
        if self.pos == start {
            self.bump();
        }
        loop {
            match self.peek().tok {
                Tok::Eof => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ if self.at_statement_start() => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let t = self.peek();
        match &t.tok {
            Tok::SubjectTo => {
                self.bump();
                self.constraint()
            }
            Tok::Ident(word) => match word.as_str() {
                "var" => {
                    self.bump();
                    self.var_decl()
                }
                "param" => {
                    self.bump();
                    self.param_decl()
                }
                "maximize" | "minimize" => {
                    self.bump();
                    let sense = if word == "maximize" {
                        ObjectiveSense::Maximize
                    } else {
                        ObjectiveSense::Minimize
                    };
                    self.objective(t.span, sense)
                }
                other => {
                    let mut d = Diagnostic::error(
                        format!("unknown statement keyword `{other}`"),
                        t.span,
                    );
                    if let Some(s) = suggest(other, STATEMENT_KEYWORDS) {
                        d.message = format!("unknown statement keyword `{other}`; did you mean `{s}`?");
                        d = d.with_suggestion(s);
                    }
                    Err(d)
                }
            },
            other => Err(Diagnostic::error(
                format!(
                    "expected a statement (`var`, `param`, `maximize`, `minimize` or `s.t.`), found {}",
                    other.describe()
                ),
                t.span,
            )),
        }
    }

    fn name(&mut self, what: &str) -> PResult<Name> {
        let t = self.peek();
        match &t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok(Name {
                    text: s.clone(),
                    span: t.span,
                })
            }
            other => Err(Diagnostic::error(
                format!("expected {what}, found {}", other.describe()),
                t.span,
            )),
        }
    }

    fn declared_name(&mut self, what: &str) -> PResult<Name> {
        let name = self.name(what)?;
        if RESERVED_WORDS.contains(&name.text.as_str()) {
            return Err(Diagnostic::error(
                format!("`{}` is a reserved word and cannot be used as a name", name.text),
                name.span,
            ));
        }
        Ok(name)
    }

    fn expect(&mut self, tok: Tok, context: &str) -> PResult<()> {
        if self.peek().tok == tok {
            self.bump();
            return Ok(());
        }
        Err(self.expected(tok, context))
    }

    fn expected(&self, tok: Tok, context: &str) -> Diagnostic {
        let found = self.peek().tok.describe();
        let span = if tok == Tok::Semi {
            self.prev_end()
        } else {
            self.peek().span
        };
        Diagnostic::error(
            format!("expected {} {context}, found {found}", tok.describe()),
            span,
        )
    }

    fn var_decl(&mut self) -> PResult<Stmt> {
        let name = self.declared_name("a variable name")?;
        let mut domain = Domain::Continuous;
        let mut bounds = Vec::new();
        loop {
            let t = self.peek();
            match &t.tok {
                Tok::Semi => {
                    self.bump();
                    break;
                }
                Tok::Ident(w) if DOMAIN_KEYWORDS.contains(&w.as_str()) => {
                    if domain != Domain::Continuous || !bounds.is_empty() {
                        return Err(Diagnostic::error(
                            format!("`{w}` must directly follow the variable name"),
                            t.span,
                        ));
                    }
                    self.bump();
                    domain = if w == "integer" {
                        Domain::Integer
                    } else {
                        Domain::Binary
                    };
                }
                Tok::Ge | Tok::Le => {
                    self.bump();
                    let upper = t.tok == Tok::Le;
                    let (value, vspan) = self.bound_value()?;
                    // Operator through value when both sit on one line.
                    let length = if vspan.line == t.span.line {
                        vspan.column + vspan.length - t.span.column
                    } else {
                        t.span.length
                    };
                    bounds.push(Bound {
                        upper,
                        value,
                        span: Span::new(t.span.line, t.span.column, length),
                    });
                }
                Tok::Ident(_) if self.at_statement_start() => {
                    return Err(self.expected(Tok::Semi, "to end the variable declaration"))
                }
                Tok::Ident(w) => {
                    let mut d = Diagnostic::error(
                        format!("unexpected `{w}` in variable declaration"),
                        t.span,
                    );
                    if let Some(s) = suggest(w, DOMAIN_KEYWORDS) {
                        d.message = format!("unexpected `{w}` in variable declaration; did you mean `{s}`?");
                        d = d.with_suggestion(s);
                    }
                    return Err(d);
                }
                _ => return Err(self.expected(Tok::Semi, "to end the variable declaration")),
            }
        }
        Ok(Stmt::Var {
            name,
            domain,
            bounds,
        })
    }

    fn signed_number(&mut self) -> Option<(Rational, Span, bool)> {
        let start = self.pos;
        let negative = match self.peek().tok {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        let t = self.peek();
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                let v = if negative { -v.clone() } else { v.clone() };
                Some((v, t.span, negative))
            }
            _ => {
                self.pos = start;
                None
            }
        }
    }

    fn bound_value(&mut self) -> PResult<(ExtRational, Span)> {
        if let Some((v, span, _)) = self.signed_number() {
            return Ok((ExtRational::Finite(v), span));
        }
        let negative = match self.peek().tok {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        let t = self.peek();
        match &t.tok {
            Tok::Ident(w) if w == "inf" => {
                self.bump();
                let v = if negative {
                    ExtRational::NegInf
                } else {
                    ExtRational::PosInf
                };
                Ok((v, t.span))
            }
            other => Err(Diagnostic::error(
                format!("expected a bound value, found {}", other.describe()),
                t.span,
            )),
        }
    }

    fn param_decl(&mut self) -> PResult<Stmt> {
        let name = self.declared_name("a parameter name")?;
        let mut value = None;
        if self.peek().tok == Tok::Eq {
            self.bump();
            let t = self.peek();
            match self.signed_number() {
                Some((v, _, _)) => value = Some(v),
                None => {
                    return Err(Diagnostic::error(
                        format!("expected a number, found {}", t.tok.describe()),
                        t.span,
                    ))
                }
            }
        }
        self.expect(Tok::Semi, "to end the parameter declaration")?;
        Ok(Stmt::Param { name, value })
    }

    fn objective(&mut self, keyword: Span, sense: ObjectiveSense) -> PResult<Stmt> {
        let name = self.name("an objective name")?;
        self.expect(Tok::Colon, "after the objective name")?;
        let expr = self.expr()?;
        self.expect(Tok::Semi, "to end the objective")?;
        Ok(Stmt::Objective {
            keyword,
            sense,
            name,
            expr,
        })
    }

    fn constraint(&mut self) -> PResult<Stmt> {
        let name = self.name("a constraint name")?;
        self.expect(Tok::Colon, "after the constraint name")?;
        let lhs = self.expr()?;
        let t = self.peek();
        let sense = match t.tok {
            Tok::Le => Sense::Le,
            Tok::Ge => Sense::Ge,
            Tok::Eq => Sense::Eq,
            Tok::Lt => Sense::Lt,
            Tok::Gt => Sense::Gt,
            ref other => {
                return Err(Diagnostic::error(
                    format!(
                        "expected a comparison (`<=`, `>=`, `=`, `<`, `>`), found {}",
                        other.describe()
                    ),
                    t.span,
                ))
            }
        };
        self.bump();
        let rhs = self.expr()?;
        self.expect(Tok::Semi, "to end the constraint")?;
        Ok(Stmt::Constraint {
            name,
            lhs,
            sense,
            rhs,
        })
    }

    fn expr(&mut self) -> PResult<Vec<Term>> {
        let mut terms = Vec::new();
        let mut sign = Rational::one();
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                sign = -sign;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let mut term = self.term()?;
            term.coef *= &sign;
            terms.push(term);
            match self.peek().tok {
                Tok::Plus => sign = Rational::one(),
                Tok::Minus => sign = -Rational::one(),
                _ => break,
            }
            self.bump();
        }
        Ok(terms)
    }

    fn term(&mut self) -> PResult<Term> {
        let t = self.peek();
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                if self.peek().tok == Tok::Star {
                    self.bump();
                    let ident = self.name("a variable or parameter name after `*`")?;
                    Ok(Term {
                        coef: v.clone(),
                        ident: Some(ident),
                    })
                } else {
                    Ok(Term {
                        coef: v.clone(),
                        ident: None,
                    })
                }
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Term {
                    coef: Rational::one(),
                    ident: Some(Name {
                        text: s.clone(),
                        span: t.span,
                    }),
                })
            }
            other => Err(Diagnostic::error(
                format!("expected a term, found {}", other.describe()),
                t.span,
            )),
        }
    }
}

fn suggest(word: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .find(|c| strsim::levenshtein(word, c) <= 1)
        .map(|c| c.to_string())
}

enum Symbol {
    Variable,
    Parameter,
}

/// Semantic pass: declarations, name resolution and bound checks.
fn lower(stmts: Vec<Stmt>) -> Result<ProblemIR, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut symbols: BTreeMap<String, Symbol> = BTreeMap::new();
    let mut variables = Vec::new();
    let mut bindings = Vec::new();

    for stmt in &stmts {
        match stmt {
            Stmt::Var {
                name,
                domain,
                bounds,
            } => {
                if symbols.contains_key(&name.text) {
                    diags.push(Diagnostic::error(
                        format!("`{}` is declared twice", name.text),
                        name.span,
                    ));
                    continue;
                }
                symbols.insert(name.text.clone(), Symbol::Variable);
                match declare_variable(name, *domain, bounds) {
                    Ok(v) => variables.push(v),
                    Err(d) => diags.push(d),
                }
            }
            Stmt::Param { name, value } => {
                if symbols.contains_key(&name.text) {
                    diags.push(Diagnostic::error(
                        format!("`{}` is declared twice", name.text),
                        name.span,
                    ));
                    continue;
                }
                symbols.insert(name.text.clone(), Symbol::Parameter);
                if let Some(v) = value {
                    bindings.push(DataBinding {
                        parameter: name.text.clone(),
                        source: BindingSource::Scalar(v.clone()),
                    });
                }
            }
            _ => {}
        }
    }
    if variables.is_empty() && diags.is_empty() {
        diags.push(Diagnostic::error("no variables declared", Span::new(1, 1, 0)));
    }

    let build = |terms: &[Term], factor: &Rational, expr: &mut LinearExpr, diags: &mut Vec<Diagnostic>| {
        for t in terms {
            let coef = &t.coef * factor;
            match &t.ident {
                None => expr.add_constant(&coef),
                Some(n) => match symbols.get(&n.text) {
                    Some(Symbol::Variable) => expr.add_term(n.text.clone(), coef),
                    Some(Symbol::Parameter) => expr.add_param(ParamRef::scalar(n.text.clone()), coef),
                    None => diags.push(Diagnostic::error(
                        format!("undeclared variable {}", n.text),
                        n.span,
                    )),
                },
            }
        }
    };

    let mut objective: Option<Objective> = None;
    let mut constraints = Vec::new();
    let mut constraint_names = BTreeSet::new();
    for stmt in &stmts {
        match stmt {
            Stmt::Objective {
                keyword,
                sense,
                name,
                expr,
            } => {
                if objective.is_some() {
                    diags.push(Diagnostic::error(
                        "a model has exactly one objective; this is the second",
                        *keyword,
                    ));
                    continue;
                }
                let mut e = LinearExpr::new();
                build(expr, &Rational::one(), &mut e, &mut diags);
                objective = Some(Objective {
                    sense: *sense,
                    name: Some(name.text.clone()),
                    expr: e,
                });
            }
            Stmt::Constraint {
                name,
                lhs,
                sense,
                rhs,
            } => {
                if !constraint_names.insert(name.text.as_str()) {
                    diags.push(Diagnostic::error(
                        format!("constraint name `{}` is used twice", name.text),
                        name.span,
                    ));
                }
                let mut e = LinearExpr::new();
                build(lhs, &Rational::one(), &mut e, &mut diags);
                build(rhs, &-Rational::one(), &mut e, &mut diags);
                let rhs_value = -e.constant().clone();
                e.set_constant(Rational::zero());
                constraints.push(Constraint {
                    name: Some(name.text.clone()),
                    lhs: e,
                    sense: *sense,
                    rhs: rhs_value,
                });
            }
            _ => {}
        }
    }
    let Some(objective) = objective else {
        diags.push(Diagnostic::error(
            "missing objective (`maximize` or `minimize` statement)",
            Span::new(1, 1, 0),
        ));
        return Err(diags);
    };
    if !diags.is_empty() {
        return Err(diags);
    }

    let problem = ProblemIR {
        variables,
        objective,
        constraints,
        bindings,
        metadata: BTreeMap::new(),
    };
    let violations = validate(&problem);
    if violations.is_empty() {
        Ok(problem)
    } else {
        Err(violations
            .iter()
            .map(|v| Diagnostic::error(v.to_string(), Span::new(1, 1, 0)))
            .collect())
    }
}

fn declare_variable(name: &Name, domain: Domain, bounds: &[Bound]) -> Result<VariableDecl, Diagnostic> {
    let mut decl = VariableDecl::with_domain(name.text.clone(), domain);
    let (mut seen_lower, mut seen_upper) = (false, false);
    for b in bounds {
        let seen = if b.upper { &mut seen_upper } else { &mut seen_lower };
        if *seen {
            let which = if b.upper { "upper" } else { "lower" };
            return Err(Diagnostic::error(
                format!("duplicate {which} bound for `{}`", name.text),
                b.span,
            ));
        }
        *seen = true;
        match (b.upper, &b.value) {
            (true, ExtRational::NegInf) | (false, ExtRational::PosInf) => {
                return Err(Diagnostic::error(
                    format!("bound of `{}` is infinite on the wrong side", name.text),
                    b.span,
                ));
            }
            (true, v) => decl.upper = v.clone(),
            (false, v) => decl.lower = v.clone(),
        }
    }
    if domain == Domain::Binary
        && (decl.lower != ExtRational::zero() || decl.upper != ExtRational::Finite(Rational::one()))
    {
        return Err(Diagnostic::error(
            format!("binary variable `{}` must have bounds [0, 1]", name.text),
            name.span,
        ));
    }
    if decl.lower > decl.upper {
        return Err(Diagnostic::error(
            format!("lower bound of `{}` exceeds its upper bound", name.text),
            name.span,
        ));
    }
    Ok(decl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{canonicalize, Coef, EquivalenceMode};
    use crate::lang::{grammar_check, Severity};
    use crate::rational::int;

    fn ok(text: &str) -> ProblemIR {
        parse(&SourceFile::generated(text)).unwrap_or_else(|d| panic!("{d:?}"))
    }

    fn errs(text: &str) -> Vec<Diagnostic> {
        let d = parse(&SourceFile::user_edited(text)).unwrap_err();
        for x in &d {
            assert!(x.span.is_within(text), "{x:?} outside {text:?}");
        }
        d
    }

    #[test]
    fn parses_the_basic_example() {
        let p = ok("var x >= 0; maximize obj: 3*x; s.t. c1: x <= 5;");
        let expected = ProblemIR::new(
            vec![VariableDecl::continuous("x")],
            Objective::maximize(LinearExpr::new().term("x", int(3))),
        )
        .constraint(Constraint::new(LinearExpr::new().term("x", int(1)), Sense::Le, int(5)));
        assert_eq!(
            canonicalize(&p, EquivalenceMode::Strict).unwrap(),
            canonicalize(&expected, EquivalenceMode::Strict).unwrap()
        );
        assert_eq!(p.objective.name.as_deref(), Some("obj"));
        assert_eq!(p.constraints[0].name.as_deref(), Some("c1"));
    }

    #[test]
    fn missing_semicolon_reports_line_two() {
        let d = errs("var x integer;\nmaximize obj: x");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].span.line, 2);
        assert_eq!(d[0].span.column, 16);
    }

    #[test]
    fn undeclared_variable_has_a_span() {
        let text = "var y;\nminimize o: y;\ns.t. c1: x <= 5;";
        let d = grammar_check(&SourceFile::user_edited(text));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "undeclared variable x");
        assert_eq!(d[0].span, Span::new(3, 10, 1));
    }

    #[test]
    fn keyword_typo_gets_a_suggestion() {
        let d = errs("var x;\nmaximise obj: x;");
        assert_eq!(d[0].suggestion.as_deref(), Some("maximize"));
        assert_eq!(d[0].span, Span::new(2, 1, 8));
        let d = errs("var x integr;\nmaximize obj: x;");
        assert_eq!(d[0].suggestion.as_deref(), Some("integer"));
        let d = errs("var x;\nfoo obj: x;");
        assert_eq!(d[0].suggestion, None);
    }

    #[test]
    fn constants_and_params_land_on_the_right_sides() {
        let p = ok("param C = 40; var x; var y; maximize z: x + 2; s.t. cap: x + 3 <= C - y + 1;");
        let c = &p.constraints[0];
        assert_eq!(c.lhs.coef("x"), Some(&Coef::Num(int(1))));
        assert_eq!(c.lhs.coef("y"), Some(&Coef::Num(int(1))));
        assert_eq!(c.rhs, int(-2));
        let params: Vec<_> = c.lhs.params().collect();
        assert_eq!(params, vec![(&ParamRef::scalar("C"), &int(-1))]);
        assert_eq!(p.objective.expr.constant(), &int(2));
        assert_eq!(p.bindings.len(), 1);
    }

    #[test]
    fn bounds_domains_and_signs() {
        let p = ok("var a integer >= -3 <= 7; var b binary; var f >= -inf; minimize o: -a + b - 1/2*f;");
        assert_eq!(p.variables[0].lower, ExtRational::Finite(int(-3)));
        assert_eq!(p.variables[0].upper, ExtRational::Finite(int(7)));
        assert_eq!(p.variables[1].domain, Domain::Binary);
        assert_eq!(p.variables[2].lower, ExtRational::NegInf);
        assert_eq!(p.objective.expr.coef("a"), Some(&Coef::Num(int(-1))));
    }

    #[test]
    fn semantic_errors() {
        assert!(errs("var x; var x; minimize o: x;")[0].message.contains("declared twice"));
        assert!(errs("var x; minimize o: x; maximize p: x;")[0].message.contains("exactly one objective"));
        assert!(errs("var x;")[0].message.contains("missing objective"));
        assert!(errs("minimize o: 1;")[0].message.contains("no variables"));
        assert!(errs("var b binary <= 2; minimize o: b;")[0].message.contains("binary"));
        assert!(errs("var x >= 3 <= 1; minimize o: x;")[0].message.contains("exceeds"));
        assert!(errs("var x >= 1 >= 2; minimize o: x;")[0].message.contains("duplicate lower"));
        assert!(errs("var integer; minimize o: 1;")[0].message.contains("reserved"));
        assert!(errs("var x; minimize o: x; s.t. c: x <= 1; s.t. c: x >= 0;")[0]
            .message
            .contains("used twice"));
    }

    #[test]
    fn several_syntax_errors_are_collected() {
        let d = errs("var x\nvar y;\nminimize o: x + ;\ns.t. c1 x <= 1;");
        assert_eq!(d.len(), 3, "{d:?}");
        assert_eq!(d[0].span.line, 1);
        assert_eq!(d[1].span.line, 3);
        assert_eq!(d[2].span.line, 4);
    }

    #[test]
    fn strict_senses_survive() {
        let p = ok("var A integer; var B integer; maximize o: A; s.t. c1: A - B > 0;");
        assert_eq!(p.constraints[0].sense, Sense::Gt);
    }

    #[test]
    fn bound_value_on_the_next_line() {
        let p = ok("var a <=\n 7;\nmaximize obj: a;");
        assert_eq!(p.variables[0].upper.to_string(), "7");
        let d = errs("maximize var var a <=\n0");
        assert!(!d.is_empty());
    }
}
