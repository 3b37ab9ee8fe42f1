//! Deterministic JSON and CSV rendering.

use serde_json::Value;

/// Compact JSON with sorted keys and floats in 17 significant digits.
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(v, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_value(v, out);
            }
            out.push('}');
        }
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV cell for a JSON scalar.
pub fn csv_cell(value: &Value) -> String {
    let raw = match value {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap()),
        Value::Null => String::new(),
        other => render_json(other),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Header plus one line per row.
pub fn csv_table(columns: &[&str], rows: &[Vec<Value>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// `key,value` lines for the scalar fields of an object, nested keys joined by dots.
pub fn flatten_csv(value: &Value) -> String {
    fn go(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    go(&key, v, rows);
                }
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    go(&format!("{prefix}.{i}"), v, rows);
                }
            }
            other => rows.push((prefix.to_string(), csv_cell(other))),
        }
    }
    let mut rows = Vec::new();
    go("", value, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.25), "2.5000000000000000e-1");
        let text = render_json(&json!({"b": 1, "a": [0.5, "x"]}));
        assert_eq!(text, r#"{"a":[5.0000000000000000e-1,"x"],"b":1}"#);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"][0], json!(0.5));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(
            csv_table(&["a", "b"], &[vec![json!("1,2"), json!(3)]]),
            "a,b\n\"1,2\",3\n"
        );
        assert_eq!(
            flatten_csv(&json!({"x": {"y": "1/2"}})),
            "key,value\nx.y,1/2\n"
        );
    }
}
