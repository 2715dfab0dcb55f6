mod common;

use qentangle::entanglement::TopologyKind;
use qentangle::nnet::{
    evaluate, init_rng, train, ClassicalBaseline, Classifier, DressedNet, Model, TrainConfig,
};
use rand::Rng;

fn check_gradient<M: Classifier>(model: &M, x: &[f64], label: usize) {
    let (loss, grad) = model.loss_and_gradient(x, label).unwrap();
    let p0 = model.parameters();
    assert_eq!(grad.len(), p0.len());
    let mut probe = model.clone();
    let fd = common::central_diff(&p0, 1e-5, |p| {
        probe.set_parameters(p).unwrap();
        probe.loss_and_gradient(x, label).unwrap().0
    });
    assert!(loss.is_finite());
    for (i, (g, f)) in grad.iter().zip(&fd).enumerate() {
        assert!(
            common::rel_err(*g, *f) < 1e-5,
            "param {i}: analytic {g} vs numeric {f}"
        );
    }
}

#[test]
fn dressed_gradient_matches_finite_differences() {
    let mut rng = common::rng(8);
    for trial in 0..20 {
        let n_q = 2 + trial % 4;
        let beta = common::constrained(n_q, 1 + trial % (n_q - 1), trial as u64);
        let net = DressedNet::random(6, 3, beta, &mut rng).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        check_gradient(&net, &x, trial % 3);
    }
}

#[test]
fn baseline_gradient_matches_finite_differences() {
    let mut rng = common::rng(9);
    for trial in 0..20 {
        let net = ClassicalBaseline::random(5, 4, 2, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        check_gradient(&net, &x, trial % 2);
    }
}

#[test]
fn parameter_layout_round_trips() {
    let net = DressedNet::random(4, 2, common::constrained(3, 1, 0), &mut init_rng(1)).unwrap();
    let p = net.parameters();
    assert_eq!(p.len(), 4 * 3 + 3 + 3 + 3 * 2 + 2);
    assert_eq!(&p[15..18], net.theta().unwrap());
    let mut other =
        DressedNet::random(4, 2, common::constrained(3, 1, 0), &mut init_rng(2)).unwrap();
    other.set_parameters(&p).unwrap();
    assert_eq!(other.parameters(), p);
    assert!(other.set_parameters(&p[1..]).is_err());
}

#[test]
fn model_json_round_trip_keeps_predictions() {
    let data = common::synthetic(30, 3.0, 4);
    let net = DressedNet::random(20, 2, common::constrained(4, 2, 1), &mut init_rng(3)).unwrap();
    let model = Model::Dressed(net);
    let back: Model = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    for x in &data.test.x {
        assert_eq!(
            model.predict(x).unwrap().probs,
            back.predict(x).unwrap().probs
        );
    }
}

#[test]
fn training_is_deterministic() {
    let data = common::synthetic(30, 3.0, 1);
    let cfg = TrainConfig {
        epochs: 5,
        learning_rate: 0.01,
        seed: 17,
        ..TrainConfig::default()
    };
    let run = || {
        let net = DressedNet::random(20, 2, common::constrained(4, 2, 3), &mut init_rng(cfg.seed))
            .unwrap();
        train(net, &data.train, &data.validation, &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.model.parameters(), b.model.parameters());
    assert_eq!(a.history, b.history);
    assert_eq!(a.history.theta.len(), 5);
    assert_eq!(a.history.learning_rate, vec![0.01; 5]);
}

#[test]
fn best_epoch_weights_are_restored() {
    let data = common::synthetic(30, 2.0, 2);
    let cfg = TrainConfig {
        epochs: 12,
        learning_rate: 0.05,
        seed: 5,
        ..TrainConfig::default()
    };
    let net = ClassicalBaseline::random(20, 4, 2, &mut init_rng(5));
    let t = train(net, &data.train, &data.validation, &cfg).unwrap();
    let best = t.history.val_accuracy[t.history.best_epoch];
    assert!(t.history.val_accuracy.iter().all(|&v| v <= best));
    assert!(t.history.val_accuracy[..t.history.best_epoch]
        .iter()
        .all(|&v| v < best));
    assert_eq!(evaluate(&t.model, &data.validation).unwrap(), best);
}

#[test]
fn learns_separable_data() {
    let data = common::synthetic(60, 6.0, 3);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs: 40,
        seed: 2,
        ..TrainConfig::default()
    };
    let baseline = ClassicalBaseline::random(20, 8, 2, &mut init_rng(cfg.seed));
    let b = train(baseline, &data.train, &data.validation, &cfg).unwrap();
    assert_eq!(evaluate(&b.model, &data.train).unwrap(), 1.0);

    let net =
        DressedNet::random(20, 2, common::constrained(8, 2, 7), &mut init_rng(cfg.seed)).unwrap();
    let d = train(net, &data.train, &data.validation, &cfg).unwrap();
    assert!(evaluate(&d.model, &data.train).unwrap() >= 0.95);
    assert!(d.history.train_loss.last().unwrap() < &d.history.train_loss[0]);
}

#[test]
fn unentangled_net_trains() {
    let data = common::synthetic(30, 6.0, 5);
    let beta = common::explicit(&TopologyKind::NoEntanglement.build(4).unwrap());
    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs: 20,
        seed: 1,
        ..TrainConfig::default()
    };
    let net = DressedNet::random(20, 2, beta, &mut init_rng(1)).unwrap();
    let t = train(net, &data.train, &data.validation, &cfg).unwrap();
    assert!(evaluate(&t.model, &data.validation).unwrap() > 0.8);
}
