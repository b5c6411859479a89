use super::{Diagnostic, DiagnosticCode, Severity};

pub const CONFIRMATION: &str = "No syntax issues with your CPD pathway!";
pub const MISSING_INTRO: &str = "You might consider adding the following components.";

/// Renders diagnostics as user-facing text.
///
/// With no error-severity findings the first line is the positive
/// confirmation; warnings never suppress it. Missing components are grouped
/// under one suggestion line, every other finding takes one line.
pub fn report(diagnostics: &[Diagnostic]) -> String {
    let mut lines: Vec<String> = Vec::new();
    let errors: Vec<&Diagnostic> = diagnostics.iter().filter(|d| d.severity == Severity::Error).collect();

    if errors.is_empty() {
        lines.push(CONFIRMATION.to_string());
    } else {
        let missing: Vec<&str> = errors
            .iter()
            .filter(|d| d.code == DiagnosticCode::MissingRequiredElement)
            .filter_map(|d| d.kind.map(|k| k.display_name()))
            .collect();
        if !missing.is_empty() {
            lines.push(MISSING_INTRO.to_string());
            lines.extend(missing.iter().map(|k| format!("  - {k}")));
        }
        lines.extend(
            errors
                .iter()
                .filter(|d| d.code != DiagnosticCode::MissingRequiredElement)
                .map(|d| d.message.clone()),
        );
    }
    lines.extend(
        diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
            .map(|d| format!("warning: {}", d.message)),
    );
    lines.join("\n")
}
