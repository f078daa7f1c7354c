use std::fmt::Display;
use std::process::ExitCode;

use serde_json::Value;

use crate::Global;

/// Input or usage problem; always exit code 2.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError { message: m.into() }
    }
}

impl<E: Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError { message: e.to_string() }
    }
}

pub enum Body {
    /// One JSON document; text is the human form.
    Doc { json: Value, text: String },
    /// Pre-rendered lines, the same in both modes except the last.
    Stream { lines: String, json_tail: Value, text_tail: String },
}

pub struct Report {
    pub body: Body,
    /// False means a counterexample or failed claim (exit 1).
    pub ok: bool,
}

impl Report {
    pub fn doc(json: Value, text: String, ok: bool) -> Self {
        Report { body: Body::Doc { json, text }, ok }
    }

    pub fn emit(self, g: &Global) -> Result<ExitCode, CliError> {
        let mut out = match self.body {
            Body::Doc { json, text } => {
                if g.json {
                    serde_json::to_string_pretty(&json)?
                } else {
                    text.trim_end().to_string()
                }
            }
            Body::Stream { lines, json_tail, text_tail } => {
                let tail = if g.json { serde_json::to_string(&json_tail)? } else { text_tail };
                format!("{lines}{tail}")
            }
        };
        out.push('\n');
        match &g.output {
            Some(path) => std::fs::write(path, out)
                .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?,
            None => print!("{out}"),
        }
        Ok(if self.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
    }
}

pub fn verdict_word(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}
