mod common;

use qentangle::entanglement::{ConfigDescriptor, Origin, SamplingMode, TopologyKind};
use qentangle::experiment::{
    ensemble_vote, read_records, report, run_baseline, run_search, run_seed, run_single,
    top_r_count, top_r_select, vote_probabilities, write_records, CellSpec, EnsembleSummary,
    RunKind, RunRecord, RunStatus, SearchConfig,
};
use qentangle::nnet::{init_rng, predict_all, Classifier, DressedNet, TrainConfig};
use rand::Rng;

fn record(id: &str, val: f64, test: f64) -> RunRecord {
    RunRecord {
        run_id: id.into(),
        cell: "c".into(),
        kind: RunKind::Dressed,
        entanglement: None,
        mu: None,
        seed: 0,
        status: RunStatus::Ok,
        error: None,
        train_accuracy: 0.0,
        val_accuracy: val,
        test_accuracy: test,
        best_epoch: 0,
        epochs: 1,
        accuracy_history: None,
        theta_history: None,
        wall_time: 0.0,
    }
}

fn quick() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        learning_rate: 0.01,
        ..TrainConfig::default()
    }
}

fn small_search(master_seed: u64) -> SearchConfig {
    SearchConfig {
        n_q: 3,
        cells: vec![
            CellSpec::new(SamplingMode::Constrained { k: 1 }, 3),
            CellSpec::new(SamplingMode::Unconstrained { e: 2 }, 2),
        ],
        conventional: vec![TopologyKind::Ring, TopologyKind::NoEntanglement],
        master_seed,
        train: quick(),
    }
}

fn strip_wall_time(records: &[RunRecord]) -> Vec<RunRecord> {
    records
        .iter()
        .map(|r| RunRecord {
            wall_time: 0.0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn seeds_are_distinct_and_stable() {
    let mut seen = std::collections::HashSet::new();
    for cell in 0..20 {
        for run in 0..50 {
            assert!(seen.insert(run_seed(7, cell, run)));
        }
    }
    assert_eq!(run_seed(7, 3, 4), run_seed(7, 3, 4));
    assert_ne!(run_seed(7, 3, 4), run_seed(8, 3, 4));
}

#[test]
fn run_single_is_reproducible() {
    let data = common::synthetic(30, 3.0, 1);
    let beta = common::constrained(4, 2, 5);
    let a = run_single("a", "cell", &beta, 11, &data, &quick());
    let b = run_single("a", "cell", &beta, 11, &data, &quick());
    assert!(a.record.is_ok());
    assert_eq!(
        strip_wall_time(std::slice::from_ref(&a.record)),
        strip_wall_time(&[b.record])
    );
    assert_eq!(a.record.mu, Some(200.0 / 3.0));
    assert_eq!(a.record.theta_history.as_ref().map(Vec::len), Some(3));
    let c = run_single("a", "cell", &beta, 12, &data, &quick());
    assert_ne!(a.history.unwrap().train_loss, c.history.unwrap().train_loss);
}

#[test]
fn ring_run_reports_its_density() {
    let data = common::synthetic(30, 3.0, 2);
    let ring = TopologyKind::Ring.build(8).unwrap();
    let d = ConfigDescriptor::new(
        &ring,
        Origin::Topology {
            kind: TopologyKind::Ring,
        },
        None,
    );
    let cfg = TrainConfig {
        epochs: 1,
        ..quick()
    };
    let out = run_single("topo-ring", "ring", &d, 0, &data, &cfg);
    assert_eq!(out.record.mu, Some(100.0 / 7.0));
}

#[test]
fn divergence_is_recorded_not_raised() {
    let data = common::synthetic(30, 3.0, 3);
    let cfg = TrainConfig {
        learning_rate: 1e308,
        ..quick()
    };
    let out = run_single("x", "c", &common::constrained(3, 1, 0), 0, &data, &cfg);
    assert_eq!(out.record.status, RunStatus::Failed);
    assert!(out.record.error.as_deref().unwrap().contains("diverged"));
    assert!(out.model.is_none());
    assert_eq!(out.record.test_accuracy, 0.0);
}

#[test]
fn search_order_and_results_do_not_depend_on_threads() {
    let data = common::synthetic(30, 3.0, 4);
    let cfg = small_search(5);
    let one = run_search(&cfg, &data, 1).unwrap();
    let three = run_search(&cfg, &data, 3).unwrap();
    let ids: Vec<&str> = one.iter().map(|o| o.record.run_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "c00-r000",
            "c00-r001",
            "c00-r002",
            "c01-r000",
            "c01-r001",
            "topo-ring",
            "topo-no_entanglement"
        ]
    );
    let a: Vec<RunRecord> = one.into_iter().map(|o| o.record).collect();
    let b: Vec<RunRecord> = three.into_iter().map(|o| o.record).collect();
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
    assert_eq!(a[0].cell, "Constrained μ = 50%, k = 1");
    assert_eq!(a[3].cell, "Unconstrained μ = 33%");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    write_records(&path, &a).unwrap();
    assert_eq!(read_records(&path).unwrap(), a);
}

#[test]
fn top_r_counts() {
    assert_eq!(top_r_count(50, 5.0), 2);
    assert_eq!(top_r_count(50, 1.0), 1);
    assert_eq!(top_r_count(400, 10.0), 40);
    assert_eq!(top_r_count(3, 10.0), 1);
    assert_eq!(top_r_count(7, 100.0), 7);
    let recs: Vec<RunRecord> = (0..10)
        .map(|i| record(&format!("r{i}"), (i % 4) as f64, 0.0))
        .collect();
    let ids: Vec<&str> = top_r_select(&recs, 30.0)
        .unwrap()
        .iter()
        .map(|r| r.run_id.as_str())
        .collect();
    assert_eq!(ids, ["r3", "r7", "r2"]);
    assert!(top_r_select(&recs, 0.0).is_err());
    assert!(top_r_select(&[], 10.0).is_err());
}

#[test]
fn vote_matches_brute_force() {
    let mut rng = common::rng(30);
    for _ in 0..50 {
        let members = rng.random_range(1..6);
        let samples = rng.random_range(1..20);
        let classes = rng.random_range(2..5);
        let probs: Vec<Vec<Vec<f64>>> = (0..members)
            .map(|_| {
                (0..samples)
                    .map(|_| {
                        // Quantized so exact ties actually occur.
                        let raw: Vec<f64> = (0..classes)
                            .map(|_| rng.random_range(0..4) as f64)
                            .collect();
                        let s: f64 = raw.iter().sum::<f64>().max(1.0);
                        raw.iter().map(|v| v / s).collect()
                    })
                    .collect()
            })
            .collect();
        let labels: Vec<usize> = (0..samples).map(|_| rng.random_range(0..classes)).collect();
        let ids = (0..members).map(|m| m.to_string()).collect();
        let got = vote_probabilities(ids, &probs, &labels).unwrap();
        let want = common::brute_force_vote(&probs);
        assert_eq!(got.predictions, want);
        let correct = want.iter().zip(&labels).filter(|(p, y)| p == y).count();
        assert_eq!(got.accuracy, correct as f64 / samples as f64);
    }
}

#[test]
fn ensemble_of_models_uses_their_probabilities() {
    let data = common::synthetic(30, 3.0, 6);
    let nets: Vec<DressedNet> = (0..3)
        .map(|i| DressedNet::random(20, 2, common::constrained(3, 1, i), &mut init_rng(i)).unwrap())
        .collect();
    let members: Vec<(&str, &DressedNet)> = vec![("a", &nets[0]), ("b", &nets[1]), ("c", &nets[2])];
    let result = ensemble_vote(&members, &data.test).unwrap();
    let probs: Vec<Vec<Vec<f64>>> = nets
        .iter()
        .map(|n| {
            predict_all(n, &data.test)
                .unwrap()
                .into_iter()
                .map(|p| p.probs)
                .collect()
        })
        .collect();
    assert_eq!(result.predictions, common::brute_force_vote(&probs));
    assert_eq!(result.members, ["a", "b", "c"]);
}

#[test]
fn report_is_stable_and_complete() {
    let data = common::synthetic(30, 3.0, 7);
    let cfg = small_search(9);
    let records: Vec<RunRecord> = run_search(&cfg, &data, 2)
        .unwrap()
        .into_iter()
        .map(|o| o.record)
        .collect();
    let baseline = run_baseline(3, 1, &data, &quick()).record;
    let ens = vec![EnsembleSummary {
        cell: records[0].cell.clone(),
        r: 100.0,
        members: vec!["c00-r000".into()],
        test_accuracy: 0.5,
    }];
    let a = report(&records, Some(&baseline), &ens);
    let b = report(&records, Some(&baseline), &ens);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.cells.len(), 2);
    assert_eq!(a.cells[0].runs, 3);
    assert_eq!(a.conventional.len(), 2);
    let constructive = a.constructive.as_ref().unwrap();
    assert_eq!(constructive.total, 5);
    let expected = records[..5]
        .iter()
        .filter(|r| r.test_accuracy > baseline.test_accuracy)
        .count();
    assert_eq!(constructive.count, expected);
    assert_eq!(a.scatter_csv().lines().count(), 1 + 7);
    assert_eq!(a.topr_csv().lines().count(), 2);
    assert!(a.table.iter().any(|s| s.title == "Classical Baseline"));

    let none = report(&records, None, &[]);
    assert!(none.constructive.is_none());
    assert!(!none.to_json().unwrap().contains("\"ensembles\""));
}

#[test]
fn report_lists_conventional_topologies_in_table_order() {
    let records: Vec<RunRecord> = TopologyKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let m = kind.build(8).unwrap();
            let mut r = record(&format!("topo-{i}"), 0.8, 0.7 + i as f64 / 100.0);
            r.cell = qentangle::experiment::topology_label(kind, 8).unwrap();
            r.entanglement = Some(ConfigDescriptor::new(&m, Origin::Topology { kind }, None));
            r.mu = Some(m.density().unwrap());
            r
        })
        .collect();
    let rep = report(&records, Some(&record("baseline", 0.8, 0.72)), &[]);
    let labels: Vec<&str> = rep.conventional.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(
        labels,
        [
            "Ring topology μ = 14%, k = 1",
            "Nearest-neighbor topology μ = 12%",
            "No entanglement μ = 0%",
            "Fully entangled μ = 100%",
        ]
    );
    let titles: Vec<&str> = rep.table.iter().map(|s| s.title.as_str()).collect();
    assert_eq!(
        titles,
        [
            "Test Accuracies using Conventional Entanglement Configurations",
            "Classical Baseline"
        ]
    );
    assert!(rep.cells.is_empty());
}

#[test]
fn checkpoint_round_trip_is_exact() {
    use qentangle::experiment::Checkpoint;
    let data = common::synthetic(30, 3.0, 8);
    let out = run_single("x", "c", &common::constrained(4, 2, 2), 3, &data, &quick());
    let ck = Checkpoint {
        run_id: "x".into(),
        model: out.model.unwrap(),
        train_config: quick(),
        history: out.history.unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.model.parameters(), ck.model.parameters());
    assert_eq!(back.history, ck.history);
    assert_eq!(back.train_config, ck.train_config);
}
