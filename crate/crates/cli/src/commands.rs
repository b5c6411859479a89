//! `check`, `export`, `wizard` and `brainstorm`. Each returns an exit code
//! and writes to the streams it is given.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use cpd_core::glossary::Glossary;
use cpd_core::layout::{to_dot, to_svg};
use cpd_core::llm::Gateway;
use cpd_core::model::{self, Diagram};
use cpd_core::recommend::{self, RecommendError, SuggestionRequest, WizardSession};
use cpd_core::validator::has_errors;
use cpd_core::{check, report, ElementKind, Point};

use crate::exit;

fn read_diagram(path: &Path, err: &mut dyn Write) -> Result<Diagram, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "cpd: cannot read {}: {e}", path.display());
        exit::USAGE
    })?;
    model::deserialize(&text).map_err(|e| {
        let _ = writeln!(err, "cpd: {}: {e}", path.display());
        exit::USAGE
    })
}

/// Prints the report (or the diagnostics as JSON). Exit 0 when there are no
/// Error diagnostics, 1 when there are, 2 when the file cannot be read.
pub fn check_file(path: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let diagram = match read_diagram(path, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let diagnostics = check(&diagram);
    let written = if json {
        serde_json::to_writer_pretty(&mut *out, &diagnostics)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        writeln!(out, "{}", report(&diagnostics))
    };
    if let Err(e) = written {
        let _ = writeln!(err, "cpd: {e}");
        return exit::FOUND_ERRORS;
    }
    if has_errors(&diagnostics) {
        exit::FOUND_ERRORS
    } else {
        exit::OK
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Dot,
    Svg,
}

pub fn export_file(
    path: &Path,
    format: ExportFormat,
    target: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let diagram = match read_diagram(path, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let text = match format {
        ExportFormat::Dot => to_dot(&diagram),
        ExportFormat::Svg => to_svg(&diagram),
    };
    let written = match target {
        Some(t) => fs::write(t, text),
        None => out.write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "cpd: cannot write output: {e}");
            exit::FOUND_ERRORS
        }
    }
}

/// Parses `kind:label`, e.g. `strategy:Run ad campaign`.
pub fn parse_neighbour(s: &str) -> Result<(ElementKind, String), String> {
    let (kind, label) = s
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:LABEL, got {s:?}"))?;
    let kind = kind.trim().parse::<ElementKind>().map_err(|e| e.to_string())?;
    let label = label.trim();
    if label.is_empty() {
        return Err("label must not be empty".into());
    }
    Ok((kind, label.to_string()))
}

fn recommend_exit(e: &RecommendError) -> i32 {
    match e {
        RecommendError::Gateway(_) | RecommendError::UnparsableOutput { .. } => exit::GATEWAY,
        _ => exit::USAGE,
    }
}

/// Prints one candidate per line.
pub fn brainstorm(
    glossary: &Glossary,
    gateway: &dyn Gateway,
    target: ElementKind,
    before: Option<(ElementKind, String)>,
    after: Option<(ElementKind, String)>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let request = SuggestionRequest::brainstorm(target, before, after);
    match recommend::suggest_with(glossary, &request, gateway) {
        Ok(result) => {
            for c in &result.candidates {
                if writeln!(out, "{c}").is_err() {
                    return exit::FOUND_ERRORS;
                }
            }
            exit::OK
        }
        Err(e) => {
            let _ = writeln!(err, "cpd: {e}");
            recommend_exit(&e)
        }
    }
}

/// Interactive backward mapping. Prompts go to `prompts`; the finished
/// diagram is written to `target` or, without one, to `out`.
pub fn wizard(
    glossary: &Glossary,
    gateway: &dyn Gateway,
    hint: Option<String>,
    input: &mut dyn BufRead,
    prompts: &mut dyn Write,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> i32 {
    let mut session = recommend::start_session(hint);
    let mut suggestions_ok = true;
    let total = 5;
    while let Some(kind) = session.step().kind() {
        let step_no = session.entries().len() + 1;
        let entry = glossary.define(kind);
        let _ = writeln!(prompts, "\nStep {step_no} of {total}: {kind}");
        if let Some(g) = &entry.guidance {
            let _ = writeln!(prompts, "{g}");
        }

        let candidates = if suggestions_ok {
            match fetch(glossary, gateway, &session) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(prompts, "(suggestions unavailable: {e})");
                    if matches!(e, RecommendError::Gateway(_)) {
                        suggestions_ok = false;
                    }
                    Vec::new()
                }
            }
        } else {
            Vec::new()
        };
        if step_no == 1 {
            if let Some(h) = session.distal_hint() {
                let _ = writeln!(prompts, "Press enter to keep: {h}");
            }
        }
        for (i, c) in candidates.iter().enumerate() {
            let _ = writeln!(prompts, "  {}. {c}", i + 1);
        }

        let label = loop {
            let _ = write!(prompts, "> ");
            let _ = prompts.flush();
            let mut line = String::new();
            match input.read_line(&mut line) {
                Ok(0) | Err(_) => {
                    let _ = writeln!(prompts, "\ncpd: input ended before the wizard finished");
                    return exit::FOUND_ERRORS;
                }
                Ok(_) => {}
            }
            let line = line.trim();
            if line.is_empty() {
                if let (1, Some(h)) = (step_no, session.distal_hint()) {
                    break h.to_string();
                }
                continue;
            }
            match line.parse::<usize>() {
                Ok(n) if (1..=candidates.len()).contains(&n) => break candidates[n - 1].clone(),
                _ => break line.to_string(),
            }
        };
        session = match session.accept_entry(&label) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(prompts, "cpd: {e}");
                return exit::FOUND_ERRORS;
            }
        };
    }

    let diagram = match recommend::materialize(&session, Point::default()) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(prompts, "cpd: {e}");
            return exit::FOUND_ERRORS;
        }
    };
    let text = model::serialize(&diagram);
    let written = match target {
        Some(t) => fs::write(t, &text).map(|_| {
            let _ = writeln!(prompts, "\nWrote {}", t.display());
        }),
        None => out.write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(prompts, "cpd: cannot write output: {e}");
            exit::FOUND_ERRORS
        }
    }
}

fn fetch(glossary: &Glossary, gateway: &dyn Gateway, session: &WizardSession) -> Result<Vec<String>, RecommendError> {
    let request = session.suggestion_request()?;
    Ok(recommend::suggest_with(glossary, &request, gateway)?.candidates)
}
