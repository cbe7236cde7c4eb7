use std::fs;
use std::path::Path;

use lamec::harness::{
    inspect, meta_path, run_evaluate, run_generate, BenchmarkReport, DatasetMeta, EvaluateConfig, GenerateConfig,
    SolverKind,
};
use lamec::instance::{deserialize_record, Labeler, Scale};
use lamec::solve::{check_constraints, evaluate_objective, solve_bruteforce, ObjectiveMode, DEFAULT_ENUMERATION_CAP};
use lamec::{Error, Record};

const DESK: Scale = Scale::new(2, 4, 2);

fn records(path: &Path) -> Vec<Record> {
    fs::read(path)
        .unwrap()
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| deserialize_record(l).unwrap())
        .collect()
}

fn leftovers(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn empty_dataset_has_file_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    let meta = run_generate(&GenerateConfig::new(DESK, 0, 1, Labeler::Oracle), &out).unwrap();
    assert_eq!(meta.count, 0);
    assert!(fs::read(&out).unwrap().is_empty());
    assert_eq!(DatasetMeta::read(&meta_path(&out)).unwrap(), meta);
    let stats = inspect(&out).unwrap();
    assert_eq!(stats.records, 0);
    assert_eq!(stats.mean_label_cost, None);
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let cfg = GenerateConfig::new(DESK, 20, 9, Labeler::Mcmf);
    run_generate(&cfg, &a).unwrap();
    run_generate(&cfg, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(meta_path(&a)).unwrap(), fs::read(meta_path(&b)).unwrap());
    run_generate(&GenerateConfig::new(DESK, 20, 10, Labeler::Mcmf), &c).unwrap();
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn oracle_labels_are_optimal_and_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 25, 3, Labeler::Oracle), &out).unwrap();
    let recs = records(&out);
    assert_eq!(recs.len(), 25);
    for (i, r) in recs.iter().enumerate() {
        let inst = r.instance();
        assert_eq!(r.meta().index, i as u64);
        assert!(check_constraints(inst, r.label()).unwrap().passed());
        let stored = r.label_cost();
        assert_eq!(
            stored,
            evaluate_objective(inst, r.label(), ObjectiveMode::PerUser).unwrap()
        );
        let again = solve_bruteforce(inst, DEFAULT_ENUMERATION_CAP).unwrap();
        let best = evaluate_objective(inst, &again, ObjectiveMode::PerUser).unwrap();
        assert!((best - stored).abs() <= 1e-9 * stored);
    }
}

#[test]
fn oversized_oracle_run_is_refused_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.jsonl");
    let err = run_generate(&GenerateConfig::new(Scale::new(9, 19, 12), 5, 0, Labeler::Oracle), &out).unwrap_err();
    assert!(matches!(err, Error::SizeCap { .. }), "{err}");
    assert!(err.is_config_error());
    assert!(leftovers(dir.path()).is_empty());
}

#[test]
fn failed_generation_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("doomed.jsonl");
    let mut cfg = GenerateConfig::new(DESK, 10, 0, Labeler::Oracle);
    cfg.scenario.deadline = 1e-6;
    cfg.scenario.max_attempts = 2;
    assert!(run_generate(&cfg, &out).is_err());
    assert!(leftovers(dir.path()).is_empty(), "{:?}", leftovers(dir.path()));
}

#[test]
fn failed_generation_keeps_an_older_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 3, 0, Labeler::Oracle), &out).unwrap();
    let before = fs::read(&out).unwrap();
    let mut cfg = GenerateConfig::new(DESK, 3, 1, Labeler::Oracle);
    cfg.scenario.deadline = 1e-6;
    cfg.scenario.max_attempts = 2;
    assert!(run_generate(&cfg, &out).is_err());
    assert_eq!(fs::read(&out).unwrap(), before);
}

#[test]
fn oracle_against_its_own_labels_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 30, 5, Labeler::Oracle), &data).unwrap();
    let report = run_evaluate(&EvaluateConfig::new(
        &data,
        SolverKind::Oracle,
        dir.path().join("r.jsonl"),
    ))
    .unwrap();
    let s = &report.summary;
    assert_eq!((s.instances, s.evaluated, s.skipped, s.infeasible), (30, 30, 0, 0));
    assert!((s.average_cost_ratio.unwrap() - 1.0).abs() <= 1e-9);
    assert_eq!(s.cost_accuracy_rate, Some(1.0));
    assert_eq!(report.dataset_tag.as_deref(), Some("gs2_gu4_au2"));
}

#[test]
fn unreadable_lines_are_skipped_with_their_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 4, 5, Labeler::Oracle), &data).unwrap();
    let mut text = fs::read_to_string(&data).unwrap();
    let second = text.find('\n').unwrap() + 1;
    text.insert_str(second, "{not json\n\n");
    fs::write(&data, &text).unwrap();

    let report = run_evaluate(&EvaluateConfig::new(&data, SolverKind::Ao, dir.path().join("r.jsonl"))).unwrap();
    assert_eq!(report.summary.evaluated, 4);
    assert_eq!(report.skips.len(), 1);
    assert_eq!(report.skips[0].line, 2);
    let lines: Vec<usize> = report.records.iter().map(|r| r.line).collect();
    assert_eq!(lines, [1, 4, 5, 6]);
    assert!(report.to_table().contains("skipped line 2"));
    assert_eq!(inspect(&data).unwrap().skips.len(), 1);
}

#[test]
fn evaluation_is_reproducible_and_read_only() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 15, 8, Labeler::Oracle), &data).unwrap();
    let before = fs::read(&data).unwrap();
    let run = |name: &str| {
        let mut cfg = EvaluateConfig::new(&data, SolverKind::Re, dir.path().join(name));
        cfg.settings.seed = 77;
        run_evaluate(&cfg).unwrap()
    };
    let (mut a, mut b) = (run("a.jsonl"), run("b.jsonl"));
    assert_eq!(fs::read(&data).unwrap(), before);
    b.timing = a.timing.clone();
    a.dataset.clear();
    b.dataset.clear();
    assert_eq!(a, b);
}

#[test]
fn report_round_trips_through_its_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let out = dir.path().join("r.jsonl");
    run_generate(&GenerateConfig::new(DESK, 6, 2, Labeler::Mcmf), &data).unwrap();
    let report = run_evaluate(&EvaluateConfig::new(&data, SolverKind::Mcmf, &out)).unwrap();
    assert_eq!(BenchmarkReport::read(&out).unwrap(), report);
    assert_eq!(report.provenance.as_ref().map(|m| m.labeler), Some(Labeler::Mcmf));

    let text = fs::read_to_string(&out).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.contains("\"kind\":\"timing\""), "{last}");
    assert!(fs::read_to_string(dir.path().join("r.jsonl.txt"))
        .unwrap()
        .contains("mcmf"));
}

#[test]
fn non_per_user_objective_rescores_the_label() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    run_generate(&GenerateConfig::new(DESK, 5, 4, Labeler::Oracle), &data).unwrap();
    let mut cfg = EvaluateConfig::new(&data, SolverKind::Oracle, dir.path().join("r.jsonl"));
    cfg.settings.objective = ObjectiveMode::LiteralEdgeSum;
    let report = run_evaluate(&cfg).unwrap();
    for (r, rec) in report.records.iter().zip(records(&data)) {
        let expected = evaluate_objective(rec.instance(), rec.label(), ObjectiveMode::LiteralEdgeSum).unwrap();
        assert_eq!(r.reference, expected);
    }
}
