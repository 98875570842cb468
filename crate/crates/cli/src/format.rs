//! Report rendering: JSON, CSV and aligned text.

use serde_json::Value;

/// `printf("%.12g")`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Rows of a CSV table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> csv::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(self.header.clone());
        for row in &self.rows {
            out += &line(row.iter().map(String::as_str).collect());
        }
        out
    }
}

pub fn cell_f(x: f64) -> String {
    fmt_g(x)
}

pub fn cell_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Flattens a JSON value into `(dotted.key, leaf)` pairs in document order.
/// Arrays of scalars are leaves.
pub fn flatten(value: &Value) -> Vec<(String, Value)> {
    let mut out = Vec::new();
    walk(String::new(), value, &mut out);
    out
}

fn walk(prefix: String, value: &Value, out: &mut Vec<(String, Value)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                walk(join(k), v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            out.push((prefix, value.clone()));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(join(&i.to_string()), v, out);
            }
        }
        scalar => out.push((prefix, scalar.clone())),
    }
}

/// Scalar as a CSV cell; floats get 12 significant digits.
pub fn scalar_csv(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => fmt_g(n.as_f64().expect("f64 number")),
        Value::Array(items) => items.iter().map(scalar_csv).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// Scalar for text output, at full precision.
pub fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn key_value_csv(value: &Value) -> csv::Result<String> {
    let mut t = Table::new(vec!["key", "value"]);
    for (k, v) in flatten(value) {
        t.push(vec![k, scalar_csv(&v)]);
    }
    t.to_csv()
}

pub fn key_value_text(value: &Value) -> String {
    let pairs = flatten(value);
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {}\n", scalar_text(v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_g(0.8535533905932737), "0.853553390593");
        assert_eq!(fmt_g(0.75), "0.75");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(123456789012.0), "123456789012");
        assert_eq!(fmt_g(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_g(1e-5), "1e-05");
        assert_eq!(fmt_g(0.0001234), "0.0001234");
        assert_eq!(fmt_g(0.9999999999999), "1");
        assert_eq!(fmt_g(1.4238281250000002), "1.423828125");
        assert_eq!(fmt_g(0.0), "0");
    }

    #[test]
    fn flattening_is_ordered() {
        let v = json!({"a": 1, "b": {"c": [0.5, null], "e": [{"f": 2}]}, "d": "x"});
        let keys: Vec<String> = flatten(&v).into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, ["a", "b.c", "b.e.0.f", "d"]);
        assert_eq!(scalar_csv(&json!([0.5, 1, null])), "0.5 1 ");
    }

    #[test]
    fn csv_table() {
        let mut t = Table::new(vec!["x", "y"]);
        t.push(vec!["1".into(), "a,b".into()]);
        assert_eq!(t.to_csv().unwrap(), "x,y\n1,\"a,b\"\n");
        assert_eq!(t.to_text(), "x    y\n1  a,b\n");
    }
}
