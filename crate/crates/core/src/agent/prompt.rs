//! Prompt templates and rendering.
//!
//! Templates are plain text with `{{name}}` placeholders. A block between
//! `{{#refine}}` and `{{/refine}}` is kept only when there is a previous best
//! candidate; `{{^refine}}` ... `{{/refine}}` only when there is none.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::Best;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unresolved placeholder {{{{{0}}}}} in the {1} template")]
    Unresolved(String, &'static str),
    #[error("unbalanced {{{{#refine}}}} block in the {0} template")]
    Unbalanced(&'static str),
    #[error("reading template {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    /// Iteration instructions; carries the best-so-far sections.
    pub general: String,
    /// Problem statement.
    pub problem: String,
    /// Role and metaheuristic family, with a `{{method}}` placeholder.
    pub role: String,
    /// Program interface and reply format.
    pub io: String,
    /// Metaheuristic the role template asks for.
    pub method: String,
}

impl PromptBundle {
    /// Templates shipped with the crate.
    pub fn builtin(method: &str) -> Self {
        Self {
            general: include_str!("../../prompts/general.txt").to_string(),
            problem: include_str!("../../prompts/problem.txt").to_string(),
            role: include_str!("../../prompts/role.txt").to_string(),
            io: include_str!("../../prompts/io.txt").to_string(),
            method: method.to_string(),
        }
    }

    /// Reads `general.txt`, `problem.txt`, `role.txt` and `io.txt` from a
    /// directory.
    pub fn load_dir(dir: &Path, method: &str) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| TemplateError::Read { path: path.display().to_string(), source })
        };
        Ok(Self {
            general: read("general.txt")?,
            problem: read("problem.txt")?,
            role: read("role.txt")?,
            io: read("io.txt")?,
            method: method.to_string(),
        })
    }
}

fn blocks(text: &str, refine: bool, which: &'static str) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let open_keep = rest.find("{{#refine}}");
        let open_drop = rest.find("{{^refine}}");
        let (pos, inverted) = match (open_keep, open_drop) {
            (None, None) => break,
            (Some(a), None) => (a, false),
            (None, Some(b)) => (b, true),
            (Some(a), Some(b)) => (a.min(b), b < a),
        };
        out.push_str(&rest[..pos]);
        let body_start = pos + "{{#refine}}".len();
        let close = rest[body_start..].find("{{/refine}}").ok_or(TemplateError::Unbalanced(which))?;
        let body = &rest[body_start..body_start + close];
        if body.contains("{{#refine}}") || body.contains("{{^refine}}") {
            return Err(TemplateError::Unbalanced(which));
        }
        if refine != inverted {
            out.push_str(body.strip_prefix('\n').unwrap_or(body));
        }
        rest = &rest[body_start + close + "{{/refine}}".len()..];
        rest = rest.strip_prefix('\n').unwrap_or(rest);
    }
    if rest.contains("{{/refine}}") {
        return Err(TemplateError::Unbalanced(which));
    }
    out.push_str(rest);
    Ok(out)
}

fn fill(text: &str, vars: &[(&str, &str)], which: &'static str) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| TemplateError::Unresolved(after.chars().take(20).collect(), which))?;
        let name = after[..end].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::Unresolved(name.to_string(), which))?;
        // substituted text is never rescanned
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// The instantiation prompt when `best` is `None`, the refinement prompt
/// otherwise.
pub fn render_prompt(b: &PromptBundle, best: Option<&Best>) -> Result<String, TemplateError> {
    let score = best.map(|x| x.score.to_string()).unwrap_or_default();
    let mut vars: Vec<(&str, &str)> = vec![("method", &b.method)];
    if let Some(x) = best {
        vars.push(("best_algorithm", &x.source));
        vars.push(("feedback", &x.feedback));
        vars.push(("score", &score));
    }
    let refine = best.is_some();
    let mut parts = Vec::with_capacity(4);
    for (text, which) in [(&b.problem, "problem"), (&b.role, "role"), (&b.io, "io"), (&b.general, "general")] {
        let t = fill(&blocks(text, refine, which)?, &vars, which)?;
        parts.push(t.trim().to_string());
    }
    Ok(parts.join("\n\n") + "\n")
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Score;

    fn best(score: f64) -> Best {
        Best { source: "print(1)".into(), feedback: "3 of 3 feasible".into(), score: Score(score), t: 0 }
    }

    #[test]
    fn instantiation_has_no_feedback() {
        let b = PromptBundle::builtin("Hill Climbing");
        let p = render_prompt(&b, None).unwrap();
        assert!(p.contains("cardinality-constrained"));
        assert!(p.contains("Hill Climbing"));
        assert!(p.contains("fenced code block"));
        assert!(!p.contains("Feedback:"));
        assert!(!p.contains("Best algorithm so far"));
        assert!(!p.contains("{{"));
    }

    #[test]
    fn refinement_injects_best() {
        let b = PromptBundle::builtin("GRASP");
        let p = render_prompt(&b, Some(&best(0.00123))).unwrap();
        assert!(p.contains("0.00123"));
        assert!(p.contains("print(1)"));
        assert!(p.contains("3 of 3 feasible"));
        assert!(!p.contains("first version"));
        let p = render_prompt(&b, Some(&best(f64::INFINITY))).unwrap();
        assert!(p.contains("Score: INFEASIBLE"));
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        let mut b = PromptBundle::builtin("HC");
        b.io.push_str("{{budget}}");
        assert!(matches!(render_prompt(&b, None), Err(TemplateError::Unresolved(n, "io")) if n == "budget"));
        let mut b = PromptBundle::builtin("HC");
        b.general = "{{#refine}} open".into();
        assert!(matches!(render_prompt(&b, None), Err(TemplateError::Unbalanced("general"))));
    }

    #[test]
    fn refine_placeholders_outside_block_need_state() {
        let mut b = PromptBundle::builtin("HC");
        b.general = "score {{score}}".into();
        assert!(render_prompt(&b, None).is_err());
        assert!(render_prompt(&b, Some(&best(0.5))).unwrap().contains("score 0.5"));
    }

    #[test]
    fn injected_text_is_not_rescanned() {
        let b = PromptBundle::builtin("HC");
        let mut x = best(1.0);
        x.source = "s = '{{feedback}}'".into();
        assert!(render_prompt(&b, Some(&x)).unwrap().contains("s = '{{feedback}}'"));
    }
}
