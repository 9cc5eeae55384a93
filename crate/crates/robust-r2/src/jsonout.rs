//! A small deterministic JSON writer.
//!
//! Output ordering is exactly the insertion order of object keys, and every
//! float is formatted with 17 significant digits (`{:.16e}`), so a given
//! value tree always serializes to the same bytes — the property the
//! byte-identical-output guarantees of the CLI and the Monte Carlo reports
//! rest on. Non-finite numbers serialize as `null` (JSON has no infinity);
//! table renderers may show them as `inf` instead.

use std::fmt::Write as _;

/// A JSON value with ordered object keys.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    /// Integers are emitted without an exponent.
    Int(i64),
    /// Floats are emitted as `{:.16e}`; non-finite values become `null`.
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    /// Key-value pairs serialized in insertion order.
    Object(Vec<(String, Json)>),
}

impl Json {
    /// Convenience constructor for an object.
    pub fn object(pairs: Vec<(&str, Json)>) -> Json {
        Json::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    /// Convenience constructor for an array of floats.
    pub fn floats(values: &[f64]) -> Json {
        Json::Array(values.iter().map(|v| Json::Float(*v)).collect())
    }

    /// Convenience constructor for an array of integers.
    pub fn ints<I: IntoIterator<Item = usize>>(values: I) -> Json {
        Json::Array(values.into_iter().map(|v| Json::Int(v as i64)).collect())
    }

    /// Serializes to a compact string.
    pub fn to_string(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{}", i);
            }
            Json::Float(v) => {
                if v.is_finite() {
                    let _ = write!(out, "{:.16e}", v);
                } else {
                    out.push_str("null");
                }
            }
            Json::Str(s) => write_escaped(out, s),
            Json::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Object(pairs) => {
                out.push('{');
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_escaped(out, k);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
