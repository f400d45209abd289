//! Text rendering of metric reports.

use crate::util::round_half_even;

use super::MetricReport;

/// Renders labeled reports as an aligned text table with accuracies as
/// percentages at one decimal (ties round half to even). An undefined
/// consistency prints as `-`.
pub fn render_text_table(rows: &[(String, MetricReport)]) -> String {
    let name_width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("configuration".len()))
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}\n",
        "configuration", "A_target", "A_sub", "A_cons"
    );
    for (name, report) in rows {
        let cons = match report.a_cons {
            Some(v) => format!("{:.1}", round_half_even(v * 100.0, 1)),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<name_width$}  {:>8.1}  {:>8.1}  {:>8}\n",
            name,
            round_half_even(report.a_target * 100.0, 1),
            round_half_even(report.a_sub * 100.0, 1),
            cons,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_fixtures::*;
    use super::super::*;
    use super::*;

    #[test]
    fn table_renders_percentages() {
        let items = vec![item("a", 1), item("b", 4), item("c", 2), item("d", 3)];
        let preds = vec![
            pred("a", true, 1, 1),
            pred("b", true, 4, 3),
            pred("c", true, 2, 1),
            pred("d", false, 3, 3),
        ];
        let report = compute_report(&items, &preds).unwrap();
        let table = render_text_table(&[("base".to_string(), report)]);
        assert!(table.contains("A_target"));
        assert!(table.contains("75.0"));
        assert!(table.contains("80.0"));
        let again = render_text_table(&[(
            "base".to_string(),
            compute_report(&items, &preds).unwrap(),
        )]);
        assert_eq!(table, again);
    }

    #[test]
    fn undefined_consistency_prints_dash() {
        let items = vec![item("a", 1)];
        let preds = vec![pred("a", false, 1, 1)];
        let report = compute_report(&items, &preds).unwrap();
        let table = render_text_table(&[("x".to_string(), report)]);
        assert!(table.lines().nth(1).unwrap().trim_end().ends_with('-'));
    }
}
