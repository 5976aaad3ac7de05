use fieldlab::oracle::suite::{case_ids, render_reports, report_table};
use fieldlab::oracle::{run_oracle_suite, Status, SuiteOptions};

#[test]
fn full_suite_passes() {
    let reports = run_oracle_suite(&SuiteOptions::default()).unwrap();
    println!("{}", render_reports(&reports));
    assert_eq!(reports.len(), case_ids().len());
    for r in &reports {
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }
    let ids: Vec<&str> = reports.iter().map(|r| r.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn report_csv_has_one_row_per_case() {
    let reports = run_oracle_suite(&SuiteOptions {
        patterns: vec!["bell.*".into(), "missing".into()],
        tolerance_override: None,
    })
    .unwrap();
    let t = report_table(&reports);
    assert_eq!(t.rows().len(), 3);
    assert!(reports.iter().any(|r| r.status == Status::Skipped && r.id == "missing"));
}
