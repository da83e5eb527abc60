use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvaluateError, MetricsTable};

/// Rounds to two decimals, halves away from zero. Negative zero becomes 0.
pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub n: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// Two systems side by side with the per-column change from the first to
/// the second. All values are rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub columns: Vec<ReportColumn>,
    pub base: ReportRow,
    pub reform: ReportRow,
    pub delta: Vec<f64>,
}

pub fn compare_report(
    base: &MetricsTable,
    reform: &MetricsTable,
    labels: (&str, &str),
) -> Result<CompareReport, EvaluateError> {
    if base.layout() != reform.layout() {
        return Err(EvaluateError::SpecMismatch);
    }
    let columns = base.cells.iter().map(|c| ReportColumn { n: c.n, iou: c.iou }).collect();
    let row = |label: &str, t: &MetricsTable| ReportRow {
        label: label.to_string(),
        values: t.cells.iter().map(|c| round2(c.recall_pct)).collect(),
    };
    let base_row = row(labels.0, base);
    let reform_row = row(labels.1, reform);
    let delta = base_row.values.iter().zip(&reform_row.values).map(|(b, r)| round2(r - b)).collect();
    Ok(CompareReport { columns, base: base_row, reform: reform_row, delta })
}

fn signed(x: f64) -> String {
    if x > 0.0 {
        format!("+{x:.2}")
    } else {
        format!("{x:.2}")
    }
}

impl CompareReport {
    /// Plain-text table: an IoU header line, a rank header line, both
    /// systems and the signed change.
    pub fn to_text(&self) -> String {
        let label_w = [self.base.label.len(), self.reform.label.len(), "delta".len(), "method".len()]
            .into_iter()
            .max()
            .unwrap_or(0)
            + 2;
        let col_w = 9;
        let mut out = String::new();
        let _ = write!(out, "{:label_w$}", "");
        let mut i = 0;
        while i < self.columns.len() {
            let m = self.columns[i].iou;
            let span = self.columns[i..].iter().take_while(|c| c.iou == m).count();
            let _ = write!(out, "{:<w$}", format!("IoU={m}"), w = col_w * span);
            i += span;
        }
        out = out.trim_end().to_string();
        out.push('\n');
        let _ = write!(out, "{:label_w$}", "method");
        for c in &self.columns {
            let _ = write!(out, "{:<col_w$}", format!("R@{}", c.n));
        }
        out = out.trim_end().to_string();
        out.push('\n');
        for row in [&self.base, &self.reform] {
            let cells: Vec<String> = row.values.iter().map(|v| format!("{v:.2}")).collect();
            push_row(&mut out, &row.label, &cells, label_w, col_w);
        }
        let cells: Vec<String> = self.delta.iter().map(|&d| signed(d)).collect();
        push_row(&mut out, "delta", &cells, label_w, col_w);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn push_row(out: &mut String, label: &str, cells: &[String], label_w: usize, col_w: usize) {
    let mut line = format!("{label:label_w$}");
    for c in cells {
        let _ = write!(line, "{c:<col_w$}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::MetricSpec;
    use proptest::prelude::*;

    fn table(label: &str, v: [f64; 4]) -> MetricsTable {
        MetricsTable::from_values(label, 100, &MetricSpec::default(), &v).unwrap()
    }

    #[test]
    fn table_one_deltas() {
        let base = table("2D-TAN", [4.57, 12.88, 2.86, 8.11]);
        let reform = table("2D-TAN-R", [4.26, 12.90, 2.51, 7.67]);
        let r = compare_report(&base, &reform, ("2D-TAN", "2D-TAN-R")).unwrap();
        assert_eq!(r.delta, vec![-0.31, 0.02, -0.35, -0.44]);
        let text = r.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].trim_start().starts_with("IoU=0.3"));
        assert!(lines[0].find("IoU=0.3") < lines[0].find("IoU=0.5"));
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["method", "R@1", "R@5", "R@1", "R@5"]);
        assert_eq!(lines[4].split_whitespace().collect::<Vec<_>>(), ["delta", "-0.31", "+0.02", "-0.35", "-0.44"]);
    }

    #[test]
    fn identical_tables_zero_deltas() {
        let t = table("a", [1.0, 2.0, 0.5, 1.5]);
        let r = compare_report(&t, &t, ("a", "b")).unwrap();
        assert!(r.delta.iter().all(|d| *d == 0.0 && d.is_sign_positive()));
        assert!(r.to_text().lines().last().unwrap().contains("0.00"));
        assert!(!r.to_text().contains("-0.00"));
    }

    #[test]
    fn layout_mismatch() {
        let a = table("a", [1.0, 2.0, 0.5, 1.5]);
        let b = MetricsTable::from_values("b", 1, &MetricSpec::new(vec![1], vec![0.5]).unwrap(), &[1.0]).unwrap();
        assert!(matches!(compare_report(&a, &b, ("a", "b")), Err(EvaluateError::SpecMismatch)));
    }

    #[test]
    fn rounding_halves_away_from_zero() {
        assert_eq!(round2(0.125), 0.13);
        assert_eq!(round2(-0.125), -0.13);
        assert_eq!(round2(-0.001), 0.0);
        assert!(round2(-0.001).is_sign_positive());
    }

    proptest! {
        #[test]
        fn deltas_antisymmetric(a in proptest::array::uniform4(0.0f64..100.0), b in proptest::array::uniform4(0.0f64..100.0)) {
            let (ta, tb) = (table("a", a), table("b", b));
            let ab = compare_report(&ta, &tb, ("a", "b")).unwrap();
            let ba = compare_report(&tb, &ta, ("b", "a")).unwrap();
            for (x, y) in ab.delta.iter().zip(&ba.delta) {
                prop_assert_eq!(*x, round2(-y));
                let (sx, sy) = (signed(*x), signed(*y));
                prop_assert_eq!(sx.trim_start_matches(['+', '-']), sy.trim_start_matches(['+', '-']));
            }
        }
    }
}
