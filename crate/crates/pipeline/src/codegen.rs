use lpchat_core::ir::{validate, ProblemIR, Violation};
use lpchat_core::lang::{grammar_check, parse, print, Diagnostic, PrintError, SourceFile};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("invalid formulation: {0:?}")]
    InvalidIR(Vec<Violation>),
    #[error("cannot express formulation in MiniAPL: {0}")]
    Inexpressible(String),
    #[error("generated code failed its own grammar check: {0:?}")]
    SelfCheck(Vec<Diagnostic>),
}

/// Prints `p` as MiniAPL and runs the grammar check on the result.
pub fn generate_and_check_code(p: &ProblemIR) -> Result<SourceFile, CodegenError> {
    let violations = validate(p);
    if !violations.is_empty() {
        return Err(CodegenError::InvalidIR(violations));
    }
    let src = print(p).map_err(|e| match e {
        PrintError::InvalidIR(v) => CodegenError::InvalidIR(v),
        PrintError::Inexpressible(msg) => CodegenError::Inexpressible(msg),
    })?;
    let diags = grammar_check(&src);
    if diags.is_empty() {
        Ok(src)
    } else {
        Err(CodegenError::SelfCheck(diags))
    }
}

/// Grammar gate for code about to be solved, generated or edited.
pub fn check_code(src: &SourceFile) -> Result<ProblemIR, Vec<Diagnostic>> {
    parse(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpchat_core::ir::Sense;

    #[test]
    fn generated_code_is_clean() {
        let ir = parse(&SourceFile::generated(
            "var x >= 0; var y; maximize obj: 3*x + 2*y; s.t. c1: x + y <= 4; s.t. c2: x <= 2;",
        ))
        .unwrap();
        let code = generate_and_check_code(&ir).unwrap();
        assert!(grammar_check(&code).is_empty());
    }

    #[test]
    fn edited_code_goes_through_the_gate() {
        let broken = SourceFile::user_edited("var x integer;\nmaximize obj: x");
        let diags = check_code(&broken).unwrap_err();
        assert_eq!(diags[0].span.line, 2);

        let strict = SourceFile::user_edited("var x;\nmaximize obj: x;\ns.t. c1: x < 5;\n");
        assert_eq!(check_code(&strict).unwrap().constraints[0].sense, Sense::Lt);
    }
}
