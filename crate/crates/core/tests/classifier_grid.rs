use pixaug_core::classifier::{
    evaluate, grid_search, select_best, ClassifierConfig, Example, GridCell,
};
use pixaug_core::data::Label;
use pixaug_core::nn::{Activation, LayerSpec, Mlp, TrainConfig};
use pixaug_core::rng::rng_from_seed;
use pixaug_core::stats::ConfusionMatrix;
use rand::Rng;

/// BuiltUp when B1 and B2 differ by a wide margin in either direction; the
/// other bands are noise. One hidden unit gives a single half-plane, two
/// give the parallel pair the classes need.
fn xor_data(count: usize, seed: u64) -> Vec<Example> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let (b1, b2): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let gap = (b1 - b2).abs();
        if (0.2..0.45).contains(&gap) {
            continue;
        }
        let mut x = vec![b1, b2];
        x.extend((0..4).map(|_| rng.gen_range(0.0..1.0)));
        out.push((x, if gap >= 0.45 { Label::BuiltUp } else { Label::NonBuiltUp }));
    }
    out
}

#[test]
fn xor_interaction_needs_two_hidden_units() {
    let data = xor_data(150, 4);
    let config = ClassifierConfig {
        hidden_units_grid: vec![1, 2, 3],
        lambda_grid: vec![1e-4],
        folds: 5,
        train: TrainConfig {
            learning_rate: 2.0,
            batch_size: 4096,
            epochs: 3000,
            weight_decay_lambda: 0.0,
            seed: 9,
        },
    };
    let fit = grid_search(&data, &config).unwrap();
    let h1 = fit.cells.iter().find(|c| c.hidden_units == 1).unwrap();
    assert!(h1.cv_accuracy < 0.85, "{:?}", fit.cells);
    assert_eq!(fit.chosen_hidden_units, 2, "{:?}", fit.cells);
    assert!(fit.cv_accuracy > 0.95);
}

#[test]
fn selection_prefers_small_networks_then_strong_decay() {
    let cell = |h, l, a| GridCell { hidden_units: h, lambda: l, cv_accuracy: a };
    let best = select_best(&[cell(3, 0.1, 0.9), cell(2, 0.1, 0.9), cell(2, 0.4, 0.9), cell(5, 0.2, 0.8)]).unwrap();
    assert_eq!((best.hidden_units, best.lambda), (2, 0.4));
}

#[test]
fn constant_classifier_has_zero_kappa() {
    // zero weights and a large negative output bias: always NonBuiltUp
    let specs = [
        LayerSpec::new(6, 1, Activation::Sigmoid),
        LayerSpec::new(1, 1, Activation::Sigmoid),
    ];
    let model = Mlp::from_parts(&specs, vec![vec![0.0; 6], vec![0.0]], vec![vec![0.0], vec![-10.0]]).unwrap();
    let mut test: Vec<Example> = (0..2000).map(|_| (vec![0.5; 6], Label::BuiltUp)).collect();
    test.extend((0..5000).map(|_| (vec![0.5; 6], Label::NonBuiltUp)));
    let report = evaluate(&model, &test, 0.5, Label::NonBuiltUp).unwrap();
    assert_eq!(report.confusion, ConfusionMatrix::new(5000, 0, 2000, 0, Label::NonBuiltUp));
    assert!((report.metrics.accuracy - 5000.0 / 7000.0).abs() < 1e-12);
    assert_eq!(report.kappa, 0.0);
}
