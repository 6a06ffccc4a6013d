// SPDX-License-Identifier: Apache-2.0
//! Experiment reports: parameters, sorted rows, checks carrying both sides.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub lhs: Value,
    pub rhs: Value,
    pub tolerance: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub rows: Vec<Value>,
    pub checks: Vec<Check>,
    pub fitted_constants: BTreeMap<String, Value>,
    pub runtime_ms: u64,
    #[serde(skip)]
    primary_key: Vec<String>,
}

impl ExperimentReport {
    pub fn new(command: impl Into<String>) -> ExperimentReport {
        ExperimentReport {
            schema: SCHEMA_VERSION,
            command: command.into(),
            params: BTreeMap::new(),
            rows: Vec::new(),
            checks: Vec::new(),
            fitted_constants: BTreeMap::new(),
            runtime_ms: 0,
            primary_key: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), to_value(v));
        self
    }

    /// Row fields used for ordering, in priority order.
    pub fn key(&mut self, fields: &[&str]) -> &mut Self {
        self.primary_key = fields.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn row(&mut self, r: impl Serialize) -> &mut Self {
        self.rows.push(to_value(r));
        self
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, lhs: impl Serialize, rhs: impl Serialize, tolerance: impl Serialize) -> &mut Self {
        self.checks.push(Check {
            name: name.into(),
            pass,
            lhs: to_value(lhs),
            rhs: to_value(rhs),
            tolerance: to_value(tolerance),
        });
        self
    }

    /// |lhs - rhs| <= tol.
    pub fn check_close(&mut self, name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> &mut Self {
        let pass = (lhs - rhs).abs() <= tol;
        self.check(name, pass, lhs, rhs, tol)
    }

    /// lhs <= rhs.
    pub fn check_le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) -> &mut Self {
        self.check(name, lhs <= rhs, lhs, rhs, "lhs <= rhs")
    }

    pub fn fit(&mut self, key: &str, v: f64) -> &mut Self {
        self.fitted_constants.insert(key.to_string(), to_value(v));
        self
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Appends another report's rows and checks, prefixing check names.
    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
        for r in other.rows {
            let mut r = r;
            if let Value::Object(m) = &mut r {
                m.insert("part".into(), json!(prefix));
            }
            self.rows.push(r);
        }
        for (k, v) in other.fitted_constants {
            self.fitted_constants.insert(format!("{prefix}/{k}"), v);
        }
        for (k, v) in other.params {
            self.params.insert(format!("{prefix}/{k}"), v);
        }
        if self.primary_key.is_empty() {
            self.primary_key = std::iter::once("part".to_string()).chain(other.primary_key).collect();
        }
    }

    /// Stable sort of rows by the primary key.
    pub fn sort_rows(&mut self) {
        let key = self.primary_key.clone();
        self.rows.sort_by(|a, b| {
            for k in &key {
                let o = cmp_values(a.get(k).unwrap_or(&Value::Null), b.get(k).unwrap_or(&Value::Null));
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Null => 0,
        Value::Bool(_) => 1,
        Value::Number(_) => 2,
        Value::String(_) => 3,
        Value::Array(_) => 4,
        Value::Object(_) => 5,
    }
}

/// Total order on JSON values: numbers numerically, strings and arrays lexicographically.
pub fn cmp_values(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(0.0), y.as_f64().unwrap_or(0.0));
            x.total_cmp(&y)
        }
        (Value::String(x), Value::String(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Array(x), Value::Array(y)) => {
            for (u, v) in x.iter().zip(y) {
                let o = cmp_values(u, v);
                if o != Ordering::Equal {
                    return o;
                }
            }
            x.len().cmp(&y.len())
        }
        _ => rank(a).cmp(&rank(b)).then_with(|| a.to_string().cmp(&b.to_string())),
    }
}

/// Flattens nested objects into dotted keys; arrays become JSON text.
pub fn flatten_row(v: &Value) -> BTreeMap<String, String> {
    fn go(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    go(&key, x, out);
                }
            }
            Value::String(s) => {
                out.insert(prefix.to_string(), s.clone());
            }
            Value::Null => {
                out.insert(prefix.to_string(), String::new());
            }
            other => {
                out.insert(prefix.to_string(), other.to_string());
            }
        }
    }
    let mut out = BTreeMap::new();
    go("", v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sort_by_key() {
        let mut r = ExperimentReport::new("t");
        r.key(&["q", "x"]);
        r.row(json!({"q": 10, "x": 2})).row(json!({"q": 2, "x": 5})).row(json!({"q": 10, "x": 1}));
        r.sort_rows();
        let qs: Vec<(i64, i64)> = r.rows.iter().map(|v| (v["q"].as_i64().unwrap(), v["x"].as_i64().unwrap())).collect();
        assert_eq!(qs, vec![(2, 5), (10, 1), (10, 2)]);
    }

    #[test]
    fn flatten_nested() {
        let f = flatten_row(&json!({"a": {"b": 1, "c": "x"}, "d": [1, 2]}));
        assert_eq!(f["a.b"], "1");
        assert_eq!(f["a.c"], "x");
        assert_eq!(f["d"], "[1,2]");
    }

    #[test]
    fn schema_field_present() {
        let r = ExperimentReport::new("t");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
    }
}
