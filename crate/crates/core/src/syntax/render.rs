//! Deterministic pretty-printer. `parse(render(p))` is structurally equal to `p`.

use super::ast::*;
use crate::num::rational_to_string;

const INDENT: &str = "  ";

pub fn render(program: &Program) -> String {
    let mut out = String::new();
    for (i, obj) in program.objects.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_object_binding(&mut out, &obj.name, &obj.body, 0);
    }
    out
}

/// Renders one top-level object as it would appear in a program listing.
pub fn render_top_object(name: &str, body: &ObjectTerm) -> String {
    let mut out = String::new();
    render_object_binding(&mut out, name, body, 0);
    out
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

fn object_header(obj: &ObjectTerm) -> String {
    format!("[{}]", obj.voids.join(" "))
}

fn render_object_binding(out: &mut String, name: &str, obj: &ObjectTerm, level: usize) {
    push_indent(out, level);
    out.push_str(&object_header(obj));
    out.push_str(" > ");
    out.push_str(name);
    out.push('\n');
    render_attrs(out, obj, level + 1);
}

fn render_attrs(out: &mut String, obj: &ObjectTerm, level: usize) {
    for b in &obj.attrs {
        match &b.value.kind {
            TermKind::Object(inner) => render_object_binding(out, &b.name, inner, level),
            _ => render_line(out, &b.value, Some(&b.name), level),
        }
    }
}

fn needs_multiline(term: &Term) -> bool {
    match &term.kind {
        TermKind::Application { args, .. } => args.iter().any(|a| a.as_object().is_some()),
        _ => false,
    }
}

/// Renders `term` as a line (plus nested lines when it has object arguments).
fn render_line(out: &mut String, term: &Term, name: Option<&str>, level: usize) {
    push_indent(out, level);
    match &term.kind {
        TermKind::Object(obj) => {
            out.push_str(&object_header(obj));
            if let Some(name) = name {
                out.push_str(" > ");
                out.push_str(name);
            }
            out.push('\n');
            render_attrs(out, obj, level + 1);
        }
        TermKind::Application { head, args } if needs_multiline(term) => {
            out.push_str(&render_operand(head));
            if let Some(name) = name {
                out.push_str(" > ");
                out.push_str(name);
            }
            out.push('\n');
            for arg in args {
                // Argument lines have no name; a leading object literal is an argument too.
                let mut line = String::new();
                render_line(&mut line, arg, None, level + 1);
                out.push_str(&line);
            }
        }
        _ => {
            out.push_str(&render_term(term));
            if let Some(name) = name {
                out.push_str(" > ");
                out.push_str(name);
            }
            out.push('\n');
        }
    }
}

fn render_path(out: &mut String, path: &[Ident]) {
    for p in path {
        out.push('.');
        out.push_str(p);
    }
}

/// Single-line rendering of a term.
pub fn render_term(term: &Term) -> String {
    match &term.kind {
        TermKind::Application { head, args } => {
            let mut s = render_operand(head);
            for a in args {
                s.push(' ');
                s.push_str(&render_operand(a));
            }
            s
        }
        _ => render_operand(term),
    }
}

fn render_operand(term: &Term) -> String {
    let mut s = String::new();
    match &term.kind {
        TermKind::Locator { depth, path } => {
            if *depth == 0 {
                s.push('$');
            } else {
                s.push_str(&vec!["^"; *depth as usize].join("."));
            }
            render_path(&mut s, path);
        }
        TermKind::Name(path) | TermKind::Global(path) => s.push_str(&path.join(".")),
        TermKind::Application { .. } => {
            s.push('(');
            s.push_str(&render_term(term));
            s.push(')');
        }
        TermKind::Access { base, path } => {
            s.push_str(&render_operand(base));
            render_path(&mut s, path);
        }
        TermKind::Num(v) => s.push_str(&rational_to_string(v)),
        TermKind::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        TermKind::Str(text) => {
            s.push('"');
            s.push_str(text);
            s.push('"');
        }
        TermKind::Object(obj) => {
            // Not expressible inline; only reachable for hand-built terms.
            s.push_str(&object_header(obj));
        }
    }
    s
}
