//! Rendering of run results. Every document starts with the tool version
//! and the resolved [`RunConfig`].

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Produced {
    /// Aggregate numbers; goes into the header of JSON Lines output.
    pub summary: Value,
    /// One entry per check or instance.
    pub items: Vec<Value>,
    /// Header line and rows for CSV output.
    pub csv: Option<(String, Vec<String>)>,
    /// Asserted checks that did not hold.
    pub failures: Vec<Value>,
}

pub fn header(cfg: &RunConfig) -> Value {
    json!({ "tool": "gausslayer", "version": VERSION, "config": cfg })
}

pub fn render(cfg: &RunConfig, p: &Produced) -> String {
    let mut head = header(cfg);
    head["status"] = json!(if p.failures.is_empty() { "pass" } else { "fail" });
    match cfg.format {
        Format::Csv => {
            let (cols, rows) = p.csv.as_ref().expect("csv output checked at configuration");
            let mut s = format!("# {}\n{cols}\n", serde_json::to_string(&head).expect("header"));
            for r in rows {
                s.push_str(r);
                s.push('\n');
            }
            s
        }
        Format::Json => {
            head["summary"] = p.summary.clone();
            head["items"] = Value::Array(p.items.clone());
            let mut s = serde_json::to_string_pretty(&head).expect("json");
            s.push('\n');
            s
        }
        Format::Jsonl => {
            head["summary"] = p.summary.clone();
            let mut s = serde_json::to_string(&head).expect("json");
            s.push('\n');
            for item in &p.items {
                s.push_str(&serde_json::to_string(item).expect("json"));
                s.push('\n');
            }
            s
        }
    }
}

/// Machine-readable failure summary for standard error.
pub fn failure_summary(cfg: &RunConfig, failures: &[Value]) -> String {
    let shown: Vec<&Value> = failures.iter().take(20).collect();
    json!({
        "status": "fail",
        "subcommand": cfg.subcommand,
        "failed": failures.len(),
        "failures": shown,
    })
    .to_string()
}
