use pdpsgd_core::model::Workspace;
use pdpsgd_core::{Architecture, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Five-point central difference of the loss along coordinate `k`.
fn numeric_partial(m: &ModelParams, x: &[f64], y: usize, k: usize, h: f64) -> f64 {
    let at = |shift: f64| {
        let mut p = m.clone();
        p.as_mut_slice()[k] += shift;
        p.loss(x, y).unwrap()
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn random_model(arch: Architecture, rng: &mut ChaCha8Rng) -> ModelParams {
    let theta = (0..arch.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ModelParams::from_vec(arch, theta).unwrap()
}

fn max_relative_error(arch: Architecture, seed: u64, probes: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let m = random_model(arch.clone(), &mut rng);
        let x: Vec<f64> = (0..arch.input_dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = rng.random_range(0..arch.classes);
        let mut ws = Workspace::new(&arch);
        let mut g = vec![0.0; m.len()];
        m.example_gradient(&x, y, &mut ws, &mut g).unwrap();
        let k = rng.random_range(0..m.len());
        let fd = numeric_partial(&m, &x, y, k, 1e-4);
        // dead rectifier units give exact zeros against ~1e-12 of roundoff
        let scale = g[k].abs().max(fd.abs()).max(1e-6);
        worst = worst.max((g[k] - fd).abs() / scale);
    }
    worst
}

#[test]
fn logistic_gradients_match_finite_differences() {
    let err = max_relative_error(Architecture::logistic(12, 4), 1, 100);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let err = max_relative_error(Architecture::mlp(8, 16, 3), 2, 100);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn deep_mlp_gradients_match_finite_differences() {
    let arch = Architecture {
        input_dim: 6,
        hidden: vec![10, 7],
        classes: 4,
    };
    let err = max_relative_error(arch, 3, 100);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn batch_gradients_agree_with_single_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let arch = Architecture::mlp(5, 6, 3);
    let m = random_model(arch.clone(), &mut rng);
    let feats: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..1.0)).collect();
    let labels = [0, 2, 1];
    let batch = m.per_example_gradients(&feats, &labels).unwrap();
    let mut ws = Workspace::new(&arch);
    for (i, g) in batch.iter().enumerate() {
        let mut single = vec![0.0; m.len()];
        m.example_gradient(&feats[i * 5..(i + 1) * 5], labels[i], &mut ws, &mut single).unwrap();
        assert_eq!(&single, g);
    }
}
