mod common;

use common::{finite_difference_stable, worst_mismatch, ALL_FAMILIES};
use tngeo::engine::{dloss_dfidelity, evaluate, loss_and_grad};
use tngeo::geometry::build;
use tngeo::optimizer::initial_network;
use tngeo::tensor::inner;
use tngeo::{GeometrySpec, TargetState};

#[test]
fn exact_state_has_unit_slope_and_zero_gradient() {
    assert_eq!(dloss_dfidelity(1.0), -2.0);
    for family in ALL_FAMILIES {
        let net = build(&GeometrySpec::new(family, 5, 2), 11).unwrap();
        let target = TargetState::from_network(&net).unwrap();
        let r = loss_and_grad(&target, &net).unwrap();
        assert!((r.fidelity - 1.0).abs() <= 1e-14);
        // F is maximal, so no direction changes it to first order.
        let fd = finite_difference_stable(&target, &net, 1e-6);
        assert!(fd.iter().all(|g| g.abs() <= 1e-9), "{family}");
        let g: Vec<f64> = r.grads.values().flat_map(|t| t.data().to_vec()).collect();
        assert!(g.iter().all(|g| g.abs() <= 1e-9), "{family}");
    }
}

#[test]
fn gradients_match_differences_on_small_networks() {
    for family in ALL_FAMILIES {
        for seed in 0..3 {
            let spec = GeometrySpec::new(family, 4, 3);
            let target = TargetState::full_random(4, 2, 50 + seed).unwrap();
            let net = initial_network(&target, &spec, family.is_tree(), seed).unwrap();
            let g: Vec<f64> = loss_and_grad(&target, &net).unwrap().grads.values().flat_map(|t| t.data().to_vec()).collect();
            let fd = finite_difference_stable(&target, &net, 1e-6);
            assert!(worst_mismatch(&g, &fd, 1e-6, 1e-10) <= 1.0, "{family} seed {seed}");
        }
    }
}

#[test]
fn loss_is_invariant_to_rescaling_one_tensor() {
    let target = TargetState::full_random(6, 2, 1).unwrap();
    for family in ALL_FAMILIES {
        let spec = GeometrySpec::new(family, 6, 2);
        let mut net = initial_network(&target, &spec, false, 4).unwrap();
        let before = evaluate(&target, &net).unwrap().loss;
        let r = loss_and_grad(&target, &net).unwrap();
        for (v, g) in &r.grads {
            assert!(inner(g, &net.nodes()[v]).unwrap().abs() <= 1e-10, "{family} node {v}");
        }
        let first = net.node_ids()[0];
        net.scale_node(first, 3.5).unwrap();
        assert!((evaluate(&target, &net).unwrap().loss - before).abs() <= 1e-12);
    }
}
