mod common;

use common::{close, fd4};
use nneig::network::MultiIndex;
use nneig::quadrature::{QuadratureRule, TensorGrid};
use nneig::trial::{
    deflate, inner_product, Ansatz, DeflationBasis, Envelope, EnvelopeKind, ShapeParam, State,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind_for(dim: usize, radial: bool) -> EnvelopeKind {
    match (dim, radial) {
        (1, true) => EnvelopeKind::RadialExp,
        (1, false) => EnvelopeKind::Gaussian1d,
        _ => EnvelopeKind::GaussianNd,
    }
}

fn ansatz(seed: u64, kind: EnvelopeKind, dim: usize, components: usize, shape: f64) -> Ansatz {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ansatz::random(
        Envelope::new(kind, shape).unwrap(),
        components,
        dim,
        5,
        true,
        ShapeParam::Log,
        &mut rng,
    )
    .unwrap()
}

fn grid(dim: usize) -> TensorGrid {
    let n = if dim == 1 { 40 } else { 12 };
    TensorGrid::cube(QuadratureRule::gauss_legendre(n, -3.0, 3.0).unwrap(), dim).unwrap()
}

/// Orthonormal basis built from `k` random states.
fn basis(seed: u64, kind: EnvelopeKind, dim: usize, components: usize, k: usize) -> DeflationBasis {
    let quad = grid(dim);
    let mut b = DeflationBasis::new();
    for j in 0..k {
        let raw = ansatz(seed.wrapping_add(j as u64 * 31), kind, dim, components, 0.5);
        let d = deflate(&raw, &b, &quad).unwrap();
        let norm = inner_product(&d, &d, &quad).unwrap().sqrt();
        let overlaps = d.overlaps().to_vec();
        b.push(raw, &overlaps, norm, j as f64).unwrap();
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trial_derivatives_match_differences(
        seed in any::<u64>(),
        dim in 1usize..=3,
        radial in any::<bool>(),
        x in prop::collection::vec(-1.5f64..1.5, 3),
        axis in 0usize..3,
        shape in 0.2f64..2.0,
    ) {
        let kind = kind_for(dim, radial);
        let a = ansatz(seed, kind, dim, 1, shape);
        let axis = axis % dim;
        let mut x = x[..dim].to_vec();
        if kind == EnvelopeKind::RadialExp {
            x[0] = x[0].abs() + 0.1;
        }
        let zero = MultiIndex::zeros(dim);
        let first = MultiIndex::axis(dim, axis, 1);
        let second = MultiIndex::axis(dim, axis, 2);
        let along = |mi: &MultiIndex, t: f64| {
            let mut y = x.clone();
            y[axis] = t;
            a.derivative(&y, 0, mi).unwrap()
        };
        let d1 = a.derivative(&x, 0, &first).unwrap();
        let d2 = a.derivative(&x, 0, &second).unwrap();
        let fd1 = fd4(|t| along(&zero, t), x[axis], 1e-3);
        let fd2 = fd4(|t| along(&first, t), x[axis], 1e-3);
        prop_assert!(close(d1, fd1, 1e-6, 1e-10), "{d1} vs {fd1}");
        prop_assert!(close(d2, fd2, 1e-6, 1e-10), "{d2} vs {fd2}");
    }

    /// The radial envelope pins `ψ(0) = 0` for every parameter vector.
    #[test]
    fn radial_trial_vanishes_at_origin(seed in any::<u64>(), shape in 0.01f64..50.0, components in 1usize..=2) {
        let a = ansatz(seed, EnvelopeKind::RadialExp, 1, components, shape);
        for c in 0..components {
            prop_assert_eq!(a.value(&[0.0], c).unwrap(), 0.0);
        }
    }

    #[test]
    fn basis_is_orthonormal(seed in any::<u64>(), dim in 1usize..=2, components in 1usize..=2, k in 1usize..=4) {
        let kind = kind_for(dim, false);
        let b = basis(seed, kind, dim, components, k);
        let quad = grid(dim);
        for i in 0..k {
            for j in 0..=i {
                let ip = inner_product(&b.state(i), &b.state(j), &quad).unwrap();
                if i == j {
                    prop_assert!((ip - 1.0).abs() <= 1e-10, "⟨{i}|{i}⟩ = {ip}");
                } else {
                    prop_assert!(ip.abs() <= 1e-8, "⟨{i}|{j}⟩ = {ip}");
                }
            }
        }
    }

    #[test]
    fn deflated_states_are_orthogonal_to_the_basis(
        seed in any::<u64>(),
        other in any::<u64>(),
        dim in 1usize..=2,
        components in 1usize..=2,
        k in 1usize..=4,
    ) {
        let kind = kind_for(dim, false);
        let b = basis(seed, kind, dim, components, k);
        let quad = grid(dim);
        let raw = ansatz(other, kind, dim, components, 0.8);
        let d = deflate(&raw, &b, &quad).unwrap();
        let scale = inner_product(&raw, &raw, &quad).unwrap().sqrt();
        for a in 0..k {
            let ip = inner_product(&b.state(a), &d, &quad).unwrap();
            prop_assert!(ip.abs() <= 1e-8 * scale.max(1.0), "⟨{a}|ψ⟩ = {ip}");
        }
    }
}

#[test]
fn self_projection_annihilates() {
    let quad = grid(1);
    let b = basis(3, EnvelopeKind::Gaussian1d, 1, 1, 2);
    let raw = b.raw_states()[0].clone();
    let d = deflate(&raw, &b, &quad).unwrap();
    let n = inner_product(&d, &d, &quad).unwrap().sqrt();
    assert!(n <= 1e-8, "{n}");
}

#[test]
fn empty_basis_is_identity() {
    let quad = grid(1);
    let raw = ansatz(9, EnvelopeKind::Gaussian1d, 1, 1, 0.4);
    let empty = DeflationBasis::new();
    let d = deflate(&raw, &empty, &quad).unwrap();
    for x in [-1.0, 0.0, 0.7] {
        assert_eq!(d.value(&[x], 0).unwrap(), raw.value(&[x], 0).unwrap());
    }
}

#[test]
fn shape_parameter_round_trips_in_both_parametrizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sp in [ShapeParam::Log, ShapeParam::Direct] {
        let env = Envelope::new(EnvelopeKind::Gaussian1d, 0.37).unwrap();
        let mut a = Ansatz::random(env, 1, 1, 4, true, sp, &mut rng).unwrap();
        let p = a.params();
        assert_eq!(p.len(), 3 * 4 + 1);
        a.set_params(&p).unwrap();
        assert!((a.envelope().shape() - 0.37).abs() < 1e-15);
        assert_eq!(a.params(), p);
    }
    assert!(Envelope::new(EnvelopeKind::RadialExp, 0.0).is_err());
}
