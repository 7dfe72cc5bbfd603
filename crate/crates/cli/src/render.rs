//! Human-readable rendering. Machine output always goes through
//! `isabel_core::render_json`.

use std::fmt::Write;

use isabel_core::{Assembly, PipelineResult, ValidationReport};

pub fn render_text(result: &PipelineResult) -> String {
    let mut out = String::new();
    let tokens: Vec<&str> = result.tokens.iter().map(|t| t.normalized.as_str()).collect();
    let _ = writeln!(out, "input:    {}", result.input_text);
    let _ = writeln!(out, "tokens:   {}", tokens.join(" | "));

    if !result.oov_rejections.is_empty() {
        let words: Vec<&str> = result.oov_rejections.iter().map(|r| r.rejected_word.as_str()).collect();
        let _ = writeln!(out, "oov:      {}", words.join(", "));
    }

    for (i, sub) in result.subsentences.iter().enumerate() {
        let link = result
            .linked_entities
            .iter()
            .find(|l| l.subsentence_index == i)
            .map(|l| format!("{} ({:.3})", l.entity_id, l.score))
            .unwrap_or_else(|| "unlinked".to_string());
        let _ = writeln!(out, "mention:  [{}] {:?} -> {link}", sub.anchor.entity_type, sub.rendered);
    }

    match &result.assembly {
        Assembly::EmptyLinkSet => {
            let _ = writeln!(out, "packages: none (nothing in the request could be linked)");
        }
        Assembly::Assembled(a) if a.matched_packages.is_empty() => {
            let _ = writeln!(out, "packages: none cover {{{}}}", a.required.join(", "));
            for row in &a.diagnostics {
                let _ = writeln!(
                    out,
                    "  {:<20} matched {}, missing {{{}}}",
                    row.package_id,
                    row.matched,
                    row.missing.join(", ")
                );
            }
        }
        Assembly::Assembled(a) => {
            let _ = writeln!(out, "packages:");
            for p in &a.matched_packages {
                let _ = writeln!(out, "  {} = {{{}}}", p.name, p.members.join(", "));
            }
        }
    }

    for d in &result.diagnostics {
        let _ = writeln!(out, "note:     {d}");
    }
    out
}

pub fn render_report(report: &ValidationReport) -> String {
    if report.is_empty() {
        return "ok: no findings\n".to_string();
    }
    let mut out = String::new();
    for f in &report.findings {
        let _ = writeln!(out, "{f}");
    }
    let _ = writeln!(out, "{} finding(s)", report.findings.len());
    out
}
