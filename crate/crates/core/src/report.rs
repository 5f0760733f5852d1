//! Machine-readable results of a command: named checks with measured value,
//! tolerance and verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// JSON has no NaN or infinities; those are written as the strings
/// "NaN", "inf" and "-inf" so that every float survives a round trip.
mod float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }

    pub mod map {
        use std::collections::BTreeMap;

        use serde::ser::SerializeMap;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize)]
        struct W(#[serde(with = "super")] f64);

        #[derive(serde::Deserialize)]
        struct R(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let mut out = s.serialize_map(Some(m.len()))?;
            for (k, v) in m {
                out.serialize_entry(k, &W(*v))?;
            }
            out.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let raw = BTreeMap::<String, R>::deserialize(d)?;
            Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
    #[serde(with = "float")]
    pub tolerance: f64,
    pub passed: bool,
    /// not applicable at these parameters; counts as passed
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when value ≤ tolerance (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            skipped: false,
            detail: None,
        }
    }

    /// Passes when |value − target| ≤ tolerance; records the deviation.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let dev = (value - target).abs();
        Check {
            detail: Some(format!("measured {value:e}, expected {target:e}")),
            ..Check::at_most(name, dev, tolerance)
        }
    }

    /// A yes/no property; value is 1 for pass, 0 for fail.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            passed: ok,
            skipped: false,
            detail: None,
        }
    }

    pub fn failed(name: impl Into<String>, why: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            tolerance: 0.0,
            passed: false,
            skipped: false,
            detail: Some(why.into()),
        }
    }

    pub fn skipped(name: impl Into<String>, why: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            tolerance: f64::NAN,
            passed: true,
            skipped: true,
            detail: Some(why.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// One row of a numeric table, keyed by column name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Row(#[serde(with = "float::map")] pub BTreeMap<String, f64>);

impl Row {
    pub fn set(&mut self, key: &str, v: f64) -> &mut Self {
        self.0.insert(key.to_string(), v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    /// every input and default that shaped the run
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "float::map")]
    pub summary: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<Row>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            schema: SCHEMA,
            command: command.into(),
            params: BTreeMap::new(),
            seed: None,
            checks: Vec::new(),
            summary: BTreeMap::new(),
            table: Vec::new(),
            passed: true,
            wall_time_s: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, v) in &self.params {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("  seed = {seed}\n"));
        }
        if let Some(first) = self.table.first() {
            let cols: Vec<&String> = first.0.keys().collect();
            for c in &cols {
                out.push_str(&format!("{c:>14}"));
            }
            out.push('\n');
            for r in &self.table {
                for c in &cols {
                    out.push_str(&format!("{:>14.9}", r.0.get(*c).copied().unwrap_or(f64::NAN)));
                }
                out.push('\n');
            }
        }
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<48} {:>12.4e}  (tol {:.1e})",
                if c.skipped {
                    "SKIP"
                } else if c.passed {
                    "PASS"
                } else {
                    "FAIL"
                },
                c.name,
                c.value,
                c.tolerance
            ));
            if let Some(d) = &c.detail {
                out.push_str(&format!("  {d}"));
            }
            out.push('\n');
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("  {k}: {v:e}\n"));
        }
        out.push_str(&format!(
            "{} checks, {} failed, {} skipped, {:.2} s\n",
            self.checks.len(),
            self.failures().count(),
            self.checks.iter().filter(|c| c.skipped).count(),
            self.wall_time_s
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(Check::at_most("a", 1e-10, 1e-9).passed);
        assert!(!Check::at_most("a", f64::NAN, 1e-9).passed);
        assert!(Check::near("b", 1.0 + 1e-12, 1.0, 1e-10).passed);
        let mut r = Report::new("x");
        r.push(Check::flag("ok", true));
        assert_eq!(r.exit_code(), 0);
        r.push(Check::flag("bad", false));
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.failures().count(), 1);
        assert!(r.to_text().contains("FAIL bad"));
    }
}
