use spirosnap::pipeline::{analyze, analyze_artifacts, read_trace, summary_line, trace_label, write_analysis, write_trace, TRUSS_LABEL};

#[test]
fn trace_round_trips_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = trace_label("fixed-pinned(pin)", |_| {}).unwrap();
    assert!(run.is_complete());
    write_trace(dir.path(), &run).unwrap();
    let (art, path) = read_trace(dir.path(), "fixed-pinned(pin)").unwrap();
    assert_eq!(art.label, "fixed-pinned(pin)");
    assert_eq!(path.points.len(), run.path.points.len());
    for (a, b) in path.points.iter().zip(&run.path.points) {
        assert!((a.control - b.control).abs() < 1e-9 && (a.reaction - b.reaction).abs() < 1e-9);
    }

    let from_disk = analyze_artifacts(dir.path(), "fixed-pinned(pin)").unwrap();
    let stroke = from_disk.curve.stroke;
    let direct = analyze(&run.label, &run.path, &run.free, stroke, run.config.clone()).unwrap();
    assert!((from_disk.summary.critical_force - direct.summary.critical_force).abs() < 1e-9);
    assert_eq!(from_disk.summary.stability, direct.summary.stability);

    let line = summary_line(&from_disk.summary);
    assert!(line.contains("monostable") && line.contains("reciprocating"));

    let written = write_analysis(dir.path(), &from_disk).unwrap();
    assert_eq!(written.len(), 5);
    assert!(written.iter().all(|p| p.exists()));
}

#[test]
fn missing_artifacts_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let err = analyze_artifacts(dir.path(), "fixed-fixed").unwrap_err().to_string();
    assert!(err.contains("fixed-fixed.path.csv"), "{err}");
}

#[test]
fn truss_trace_is_not_analyzable() {
    let dir = tempfile::tempdir().unwrap();
    let run = trace_label(TRUSS_LABEL, |_| {}).unwrap();
    assert_eq!(run.path.folds.len(), 2);
    write_trace(dir.path(), &run).unwrap();
    assert!(analyze_artifacts(dir.path(), TRUSS_LABEL).is_err());
}

#[test]
fn unknown_labels_are_rejected() {
    assert!(trace_label("clamped-sideways", |_| {}).is_err());
}
