//! Suite reports: one case per check, with a JSON witness.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Case {
    pub check: String,
    pub status: Status,
    pub witness: Value,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: Vec<Case>,
    pub summary: Summary,
}

impl SuiteReport {
    /// Sorts the cases by check id and tallies them.
    pub fn new(suite: &str, mut cases: Vec<Case>) -> Self {
        cases.sort_by(|a, b| a.check.cmp(&b.check));
        let pass = cases.iter().filter(|c| c.status == Status::Pass).count();
        let summary = Summary { total: cases.len(), pass, fail: cases.len() - pass };
        SuiteReport { suite: suite.to_string(), cases, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn case(&self, check: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.check == check)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self.cases.iter().map(|c| c.check.len()).max().unwrap_or(0);
        for c in &self.cases {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            };
            let _ = writeln!(out, "{tag}  {:width$}  {}", c.check, brief(&c.witness));
        }
        let s = self.summary;
        let _ = writeln!(out, "suite {}: {} checks, {} passed, {} failed", self.suite, s.total, s.pass, s.fail);
        out
    }
}

/// A one-line rendering of a witness.
fn brief(w: &Value) -> String {
    match w {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect::<Vec<_>>()
            .join(" "),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn summary_counts_match_cases() {
        let cases = vec![
            Case { check: "b".into(), status: Status::Fail, witness: json!({"n": 1}) },
            Case { check: "a".into(), status: Status::Pass, witness: json!("ok") },
        ];
        let r = SuiteReport::new("s", cases);
        assert_eq!(r.cases[0].check, "a");
        assert_eq!(r.summary, Summary { total: 2, pass: 1, fail: 1 });
        assert!(!r.passed());
        let j: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(j["cases"][1]["status"], "fail");
        assert!(r.to_text().contains("FAIL  b  n=1"));
    }
}
