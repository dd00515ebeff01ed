use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::format::{fmt_g, fmt_g9};

use super::{CausalTree, DisplayNode, DisplayTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Json,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "dot" => Ok(Self::Dot),
            _ => Err(format!("unknown export format `{s}`")),
        }
    }
}

pub fn to_json(tree: &CausalTree) -> String {
    tree.to_json()
}

/// Graphviz rendering; significant nodes (at `display.alpha`) are filled.
pub fn to_dot(display: &DisplayTree) -> String {
    let mut out = String::from("digraph causal_tree {\n");
    out.push_str("  node [shape=box, style=\"rounded\", fontname=\"Helvetica\"];\n");
    let mut next_id = 0usize;
    write_node(&display.root, &mut next_id, &mut out);
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn write_node(node: &DisplayNode, next_id: &mut usize, out: &mut String) -> usize {
    let id = *next_id;
    *next_id += 1;
    let mut label = String::new();
    if let Some(split) = &node.split {
        let _ = write!(
            label,
            "{} >= {}\\n",
            escape(&split.feature),
            fmt_g9(split.threshold)
        );
    }
    let e = &node.effect;
    let _ = write!(
        label,
        "tau = {}\\np = {}\\nsamples = {}",
        fmt_g(e.tau, 4),
        fmt_g(e.p_value, 3),
        node.samples
    );
    if node.collapsed {
        label.push_str("\\n(trimmed)");
    }
    let style = if node.significant {
        ", style=\"rounded,filled\", fillcolor=\"#d8b4fe\""
    } else {
        ""
    };
    let _ = writeln!(out, "  n{id} [label=\"{label}\"{style}];");
    if let (Some(split), Some(left), Some(right)) = (&node.split, &node.left, &node.right) {
        let t = fmt_g9(split.threshold);
        let l = write_node(left, next_id, out);
        let _ = writeln!(out, "  n{id} -> n{l} [label=\">= {t}\"];");
        let r = write_node(right, next_id, out);
        let _ = writeln!(out, "  n{id} -> n{r} [label=\"< {t}\"];");
    }
    id
}

/// JSON (the full fitted tree) or DOT (every node, significance at the
/// tree's `alpha`).
pub fn export(tree: &CausalTree, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => to_json(tree),
        ExportFormat::Dot => to_dot(&DisplayTree::full(tree, tree.config.alpha)),
    }
}
