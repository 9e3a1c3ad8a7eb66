mod common;

use common::{close, fd4};
use nneig::network::{
    sigmoid, sigmoid_derivative, Mlp, MultiIndex, MAX_GRADIENT_ORDER, MAX_INPUT_ORDER,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn net(seed: u64, dim: usize, hidden: usize) -> Mlp {
    Mlp::random(dim, hidden, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn index(dim: usize, orders: &[u8]) -> MultiIndex {
    MultiIndex::new(&orders[..dim])
}

#[test]
fn sigmoid_third_derivative_matches_difference_quotient() {
    let fd = fd4(|z| sigmoid_derivative(z, 2).unwrap(), 1.3, 1e-3);
    let exact = sigmoid_derivative(1.3, 3).unwrap();
    assert!(close(exact, fd, 1e-7, 0.0), "{exact} vs {fd}");
}

#[test]
fn sigmoid_is_stable_for_large_arguments() {
    assert_eq!(sigmoid(800.0), 1.0);
    assert_eq!(sigmoid(-800.0), 0.0);
    for k in 1..=MAX_INPUT_ORDER {
        assert!(sigmoid_derivative(-800.0, k).unwrap().is_finite());
    }
    assert!(sigmoid_derivative(0.0, MAX_INPUT_ORDER + 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Each order-k partial equals a difference quotient of the order-(k−1)
    /// partial along one axis.
    #[test]
    fn input_derivatives_match_differences(
        seed in any::<u64>(),
        dim in 1usize..=3,
        hidden in 1usize..=8,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        lower in prop::collection::vec(0u8..=1, 3),
        axis in 0usize..3,
    ) {
        let n = net(seed, dim, hidden);
        let axis = axis % dim;
        let x = &x[..dim];
        let base = index(dim, &lower);
        let mut upper: Vec<u8> = base.orders().to_vec();
        upper[axis] += 1;
        let upper = MultiIndex::new(&upper);
        let exact = n.input_derivative(x, &upper).unwrap();
        let fd = fd4(
            |t| {
                let mut y = x.to_vec();
                y[axis] = t;
                n.input_derivative(&y, &base).unwrap()
            },
            x[axis],
            1e-3,
        );
        prop_assert!(close(exact, fd, 1e-6, 1e-9), "{exact} vs {fd}");
    }

    /// `∂/∂θ_k` of a derivative of the network, against differences in
    /// each parameter.
    #[test]
    fn parameter_gradients_match_differences(
        seed in any::<u64>(),
        dim in 1usize..=3,
        hidden in 1usize..=6,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        orders in prop::collection::vec(0u8..=1, 3),
    ) {
        let n = net(seed, dim, hidden);
        let x = &x[..dim];
        let mi = index(dim, &orders);
        prop_assume!(mi.total() <= MAX_GRADIENT_ORDER);
        let grad = n.parameter_gradient_of_derivative(x, &mi).unwrap();
        let theta = n.params();
        prop_assert_eq!(grad.len(), dim * hidden + 2 * hidden);
        for k in 0..theta.len() {
            let h = 1e-3 * theta[k].abs().max(1.0);
            let fd = fd4(
                |t| {
                    let mut p = theta.clone();
                    p[k] = t;
                    Mlp::from_params(dim, hidden, &p).unwrap().input_derivative(x, &mi).unwrap()
                },
                theta[k],
                h,
            );
            if grad[k].abs() > 1e-8 {
                prop_assert!(close(grad[k], fd, 1e-5, 0.0), "component {k}: {} vs {fd}", grad[k]);
            } else {
                prop_assert!((grad[k] - fd).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parameter_vector_round_trips(seed in any::<u64>(), dim in 1usize..=3, hidden in 1usize..=8) {
        let n = net(seed, dim, hidden);
        let back = Mlp::from_params(dim, hidden, &n.params()).unwrap();
        prop_assert_eq!(&back, &n);
        let x = vec![0.3; dim];
        prop_assert_eq!(back.forward(&x).unwrap(), n.forward(&x).unwrap());
        prop_assert!(Mlp::from_params(dim, hidden, &n.params()[1..]).is_err());
    }
}
