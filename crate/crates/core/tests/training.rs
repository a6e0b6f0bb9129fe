use lcp_core::loss::{soft_lcp_surrogate, LossConfig};
use lcp_core::trainer::{
    generate_synthetic, objective, train, ClassifierModel, LossMode, SyntheticDatasetSpec, TrainConfig,
};
use lcp_core::{fh37k_default, parse_schema, AttributeSchema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `|a - n| / max(|a|, |n|)` over entries where either side is above
/// `floor` in magnitude.
fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, n)| a.abs().max(n.abs()) > floor)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
        .fold(0.0, f64::max)
}

#[test]
fn surrogate_gradient_matches_central_differences() {
    let schema = fh37k_default();
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let probs: Vec<f64> = (0..8 * 22).map(|_| rng.random_range(0.05..0.95)).collect();
    let analytic = soft_lcp_surrogate(&schema, &probs, &cfg).unwrap().grad;
    let h = 1e-5;
    let numeric: Vec<f64> = (0..probs.len())
        .map(|i| {
            let mut p = probs.clone();
            p[i] += h;
            let up = soft_lcp_surrogate(&schema, &p, &cfg).unwrap().value;
            p[i] -= 2.0 * h;
            let down = soft_lcp_surrogate(&schema, &p, &cfg).unwrap().value;
            (up - down) / (2.0 * h)
        })
        .collect();
    let err = max_relative_error(&analytic, &numeric, 1e-6);
    assert!(err <= 1e-4, "max relative error {err}");
}

fn tiny_schema() -> AttributeSchema {
    parse_schema("schema tiny\nattrs a b c d\ngroup g exclusive exhaustive : a b c\nrequire d : a b\n").unwrap()
}

fn network_gradient_error(mode: LossMode) -> (f64, usize) {
    let schema = tiny_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let dims = [5, 7, 6, 4];
    let model = ClassifierModel::random(&dims, &mut rng).unwrap();
    let n = 6;
    let x: Vec<f64> = (0..n * 5).map(|_| rng.random_range(-1.5..1.5)).collect();
    let y: Vec<u8> = (0..n * 4).map(|_| u8::from(rng.random_bool(0.4))).collect();
    let cfg = TrainConfig { mode, ..TrainConfig::default() };
    let loss_at = |m: &ClassifierModel| {
        let pass = m.forward(&x, n).unwrap();
        objective(&schema, &cfg, &pass.probs, &y).unwrap().total
    };
    let pass = model.forward(&x, n).unwrap();
    let obj = objective(&schema, &cfg, &pass.probs, &y).unwrap();
    let analytic = model.backward(&x, n, &pass, &obj.dlogits);
    let h = 1e-5;
    let numeric: Vec<f64> = (0..model.params().len())
        .map(|i| {
            let mut m = model.clone();
            m.params_mut()[i] += h;
            let up = loss_at(&m);
            m.params_mut()[i] -= 2.0 * h;
            let down = loss_at(&m);
            (up - down) / (2.0 * h)
        })
        .collect();
    (max_relative_error(&analytic, &numeric, 1e-6), model.params().len())
}

#[test]
fn network_gradient_matches_central_differences_with_bce() {
    let (err, n_params) = network_gradient_error(LossMode::Bce);
    assert!(n_params <= 200);
    assert!(err <= 1e-4, "max relative error {err}");
}

#[test]
fn network_gradient_matches_central_differences_with_lcp() {
    let (err, n_params) = network_gradient_error(LossMode::BceLcp);
    assert!(n_params <= 200);
    assert!(err <= 1e-4, "max relative error {err}");
}

fn separable() -> lcp_core::trainer::SyntheticData {
    let spec = SyntheticDatasetSpec {
        n_train: 1000,
        n_val: 300,
        n_test: 10,
        feature_dim: 22,
        noise_sigma: 0.0,
        distractor_dims: 0,
        seed: 5,
    };
    generate_synthetic(&fh37k_default(), &spec).unwrap()
}

#[test]
fn noiseless_data_is_learned() {
    let data = separable();
    let cfg = TrainConfig {
        mode: LossMode::Bce,
        epochs: 50,
        batch_size: 64,
        learning_rate: 0.2,
        hidden: vec![32],
        ..TrainConfig::default()
    };
    let out = train(&fh37k_default(), &cfg, &data.train, Some(&data.val)).unwrap();
    let best = out.log.iter().filter_map(|e| e.val_acc_avg).fold(0.0, f64::max);
    assert!(best >= 0.99, "best validation accuracy {best}");
    let first: Vec<f64> = out.log[..10].iter().map(|e| e.loss).collect();
    for w in first.windows(2) {
        assert!(w[1] < w[0], "loss went up: {first:?}");
    }
}

#[test]
fn zero_lambda_matches_plain_bce() {
    let data = separable();
    let base = TrainConfig { epochs: 3, batch_size: 128, hidden: vec![16], ..TrainConfig::default() };
    let bce = train(&fh37k_default(), &TrainConfig { mode: LossMode::Bce, ..base.clone() }, &data.train, None).unwrap();
    let mut zero = TrainConfig { mode: LossMode::BceLcp, ..base };
    zero.loss.lambda = 0.0;
    let lcp = train(&fh37k_default(), &zero, &data.train, None).unwrap();
    assert_eq!(bce.model.params(), lcp.model.params());
}

#[test]
fn same_seed_same_weights() {
    let data = separable();
    let cfg = TrainConfig { epochs: 2, hidden: vec![8, 8], ..TrainConfig::default() };
    let a = train(&fh37k_default(), &cfg, &data.train, None).unwrap();
    let b = train(&fh37k_default(), &cfg, &data.train, None).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log, b.log);
    let c = train(&fh37k_default(), &TrainConfig { seed: 2, ..cfg }, &data.train, None).unwrap();
    assert_ne!(a.model, c.model);
}
