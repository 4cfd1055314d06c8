//! Independent runs of one scenario over a list of values for one config
//! field, addressed by a JSON pointer such as `/geometry/domain/1`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use crate::config::{merged_value, ExperimentConfig};
use crate::error::{field, CliResult};
use crate::scenarios::{run_scenario, ScenarioReport};

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: Value,
    pub report: ScenarioReport,
}

/// Splits `1.0,1.5,2` into JSON values; cells that are not JSON become strings.
pub fn parse_values(list: &str) -> Vec<Value> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
        .collect()
}

/// Expands `a..b` (inclusive integer range) or a comma list.
pub fn parse_value_spec(spec: &str) -> Vec<Value> {
    if let Some((a, b)) = spec.split_once("..") {
        if let (Ok(a), Ok(b)) = (a.trim().parse::<i64>(), b.trim().parse::<i64>()) {
            return (a..=b).map(Value::from).collect();
        }
    }
    parse_values(spec)
}

/// One run per value, in parallel; row `i` is written under `out_root/i`.
pub fn run_sweep(base: &Value, pointer: &str, values: &[Value], out_root: Option<&Path>) -> CliResult<Vec<SweepRow>> {
    let merged = merged_value(base)?;
    if merged.pointer(pointer).is_none() {
        return Err(field(pointer, "does not resolve in the config"));
    }
    values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = merged.clone();
            *cfg.pointer_mut(pointer).expect("checked above") = v.clone();
            let cfg = ExperimentConfig::from_value(&cfg)?;
            let dir = out_root.map(|r| r.join(format!("{i:03}")));
            Ok(SweepRow {
                value: v.clone(),
                report: run_scenario(&cfg, dir.as_deref())?,
            })
        })
        .collect()
}

/// One line per run: the swept value, pass flags, then every margin seen.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let criteria: Vec<String> = rows
        .first()
        .map(|r| r.report.criteria.iter().map(|c| c.name.clone()).collect())
        .unwrap_or_default();
    let keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.report.margins.keys()).collect();
    let mut s = String::from("value,all_pass");
    for c in &criteria {
        let _ = write!(s, ",{c}");
    }
    for k in &keys {
        let _ = write!(s, ",{k}");
    }
    s.push('\n');
    for r in rows {
        let value = match &r.value {
            Value::String(v) => v.clone(),
            other => other.to_string(),
        };
        let _ = write!(s, "{value},{}", r.report.all_pass);
        for c in &criteria {
            let pass = r.report.criteria.iter().find(|x| &x.name == c).is_some_and(|x| x.pass);
            let _ = write!(s, ",{pass}");
        }
        for k in &keys {
            match r.report.margins.get(*k) {
                Some(v) => {
                    let _ = write!(s, ",{v}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("1.0, 1.5,2"), vec![json!(1.0), json!(1.5), json!(2)]);
        assert_eq!(parse_values("pm"), vec![json!("pm")]);
        assert_eq!(parse_value_spec("1..3"), vec![json!(1), json!(2), json!(3)]);
        assert!(parse_values("").is_empty());
    }

    #[test]
    fn unresolvable_pointer() {
        let base = json!({"scenario": "counterexample"});
        let e = run_sweep(&base, "/geometry/nowhere", &[json!(1)], None).unwrap_err();
        assert!(e.to_string().contains("/geometry/nowhere"));
    }

    #[test]
    fn empty_sweep() {
        let rows = run_sweep(&json!({"scenario": "counterexample"}), "/counterexample/n", &[], None).unwrap();
        assert!(rows.is_empty());
        assert_eq!(sweep_csv(&rows), "value,all_pass\n");
    }
}
