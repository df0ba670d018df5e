mod common;

use common::random_flow;
use learned_harmonic::training::{grad_nll, nll_loss};
use learned_harmonic::{FlowPreset, RealNvpFlow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

/// Central differences with step 1e-5; the comparison scale is floored so
/// that components that are zero up to rounding are judged absolutely.
fn assert_matches_finite_differences(flow: &RealNvpFlow, batch: &[Vec<f64>]) {
    let h = 1e-5;
    let grad = grad_nll(flow, batch).unwrap();
    let base = flow.parameters();
    let mut probe = flow.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_parameters(&p).unwrap();
        let up = nll_loss(&probe, batch).unwrap();
        p[i] = base[i] - h;
        probe.set_parameters(&p).unwrap();
        let down = nll_loss(&probe, batch).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-3);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn two_layer_flow_gradient() {
    let flow = random_flow(2, 2, 1);
    assert_matches_finite_differences(&flow, &batch(2, 16, 2));
}

#[test]
fn random_flows_gradients() {
    for (dim, layers, seed) in [(2, 6, 3), (3, 4, 4), (5, 3, 5)] {
        let mut flow = random_flow(dim, layers, seed);
        let shift = (0..dim).map(|k| 0.1 * k as f64).collect();
        let scale = (0..dim).map(|k| 1.0 + 0.5 * k as f64).collect();
        flow.set_standardization(shift, scale).unwrap();
        assert_matches_finite_differences(&flow, &batch(dim, 12, seed + 10));
    }
}

#[test]
fn default_preset_gradient() {
    let flow = RealNvpFlow::new(4, &FlowPreset::pima(), 6).unwrap();
    assert_matches_finite_differences(&flow, &batch(4, 10, 7));
}

#[test]
fn symmetric_batch_cancels_translation_bias_gradients() {
    let flow = RealNvpFlow::zeros(2, &FlowPreset { standardize: false, ..FlowPreset::default() }).unwrap();
    let half = batch(2, 20, 8);
    let full: Vec<Vec<f64>> = half.iter().cloned().chain(half.iter().map(|x| x.iter().map(|v| -v).collect())).collect();
    let grad = grad_nll(&flow, &full).unwrap();
    // Parameters are laid out per layer as [translate | scale]; each net is
    // [W1 | b1 | W2 | b2], so the translation output bias ends the translate block.
    let mut offset = 0;
    for layer in flow.layers() {
        let t = layer.translate_net();
        offset += t.n_params();
        let bias_grad = grad[offset - t.output()..offset].to_vec();
        assert!(bias_grad.iter().all(|g| g.abs() < 1e-12), "{bias_grad:?}");
        offset += layer.scale_net().map_or(0, |s| s.n_params());
    }
    assert_eq!(offset, flow.n_params());
}

#[test]
fn duplicated_batch_has_the_same_gradient() {
    let flow = random_flow(3, 4, 9);
    let b = batch(3, 30, 10);
    let doubled: Vec<Vec<f64>> = b.iter().chain(&b).cloned().collect();
    let g1 = grad_nll(&flow, &b).unwrap();
    let g2 = grad_nll(&flow, &doubled).unwrap();
    for (a, c) in g1.iter().zip(&g2) {
        assert!((a - c).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn loss_ignores_batch_order() {
    let flow = random_flow(2, 4, 12);
    let b = batch(2, 200, 13);
    let mut r = b.clone();
    r.reverse();
    let (l1, l2) = (nll_loss(&flow, &b).unwrap(), nll_loss(&flow, &r).unwrap());
    assert!((l1 - l2).abs() < 1e-12);
}
