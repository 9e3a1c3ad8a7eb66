use nalgebra::{DMatrix, SymmetricEigen};
use nneig::femref::{
    assemble, assemble_free, henon_heiles_system, shift_invert_eigs, table1, EigenOptions, Mesh2D,
    TABLE_MESHES,
};
use nneig::problems::henon_heiles_potential;
use nneig::Error;
use proptest::prelude::*;

/// Lowest eigenvalues of `Kψ = εMψ` restricted to interior nodes, by a
/// dense Cholesky reduction.
fn dense_interior(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    interior: &[usize],
    count: usize,
) -> Vec<f64> {
    let n = interior.len();
    let ki = DMatrix::from_fn(n, n, |i, j| k[(interior[i], interior[j])]);
    let mi = DMatrix::from_fn(n, n, |i, j| m[(interior[i], interior[j])]);
    let l = mi
        .cholesky()
        .expect("interior mass is positive definite")
        .l();
    let linv = l.clone().try_inverse().unwrap();
    let c = &linv * ki * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    ev
}

fn quadratic_form(a: &DMatrix<f64>, u: &[f64]) -> f64 {
    let u = nalgebra::DVector::from_column_slice(u);
    (u.transpose() * a * &u)[(0, 0)]
}

#[test]
fn sparse_solver_matches_dense_oracle() {
    for n in [2, 3, 4, 6] {
        let mesh = Mesh2D::square(n, -6.0, 6.0).unwrap();
        let (k, m) = assemble_free(&mesh, &henon_heiles_potential).unwrap();
        let interior: Vec<usize> = (0..mesh.n_nodes())
            .filter(|&i| !mesh.is_boundary(i))
            .collect();
        let count = 6.min(interior.len());
        let want = dense_interior(&k.to_dense(), &m.to_dense(), &interior, count);
        let sys = assemble(&mesh, &henon_heiles_potential).unwrap();
        let opts = EigenOptions {
            count,
            ..EigenOptions::default()
        };
        let got = shift_invert_eigs(&sys, &opts).unwrap();
        assert_eq!(got.pairs.len(), count, "mesh {n}");
        for (g, w) in got.values().iter().zip(&want) {
            assert!(
                (g - w).abs() <= 1e-9 * w.abs().max(1.0),
                "mesh {n}: {g} vs {w}"
            );
        }
    }
}

#[test]
fn element_energies_of_polynomials_are_exact() {
    let mesh = Mesh2D::rectangle(1, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let (k, m) = assemble_free(&mesh, &|_, _| 0.0).unwrap();
    let (k, m) = (k.to_dense(), m.to_dense());
    let nodes = mesh.coords();
    let sample =
        |f: &dyn Fn(f64, f64) -> f64| nodes.iter().map(|p| f(p[0], p[1])).collect::<Vec<_>>();
    let one = sample(&|_, _| 1.0);
    let x = sample(&|x, _| x);
    let lin = sample(&|x, y| x + 2.0 * y);
    let xx = sample(&|x, _| x * x);
    let xy = sample(&|x, y| x * y);
    // stiffness is ½∫|∇u|²
    assert!(quadratic_form(&k, &one).abs() < 1e-14);
    assert!((quadratic_form(&k, &x) - 0.5).abs() < 1e-14);
    assert!((quadratic_form(&k, &lin) - 2.5).abs() < 1e-13);
    assert!((quadratic_form(&k, &xx) - 2.0 / 3.0).abs() < 1e-13);
    assert!((quadratic_form(&k, &xy) - 1.0 / 3.0).abs() < 1e-13);
    // mass is ∫u²
    assert!((quadratic_form(&m, &one) - 1.0).abs() < 1e-14);
    assert!((quadratic_form(&m, &x) - 1.0 / 3.0).abs() < 1e-14);
    assert!((quadratic_form(&m, &xx) - 0.2).abs() < 1e-14);
}

#[test]
fn potential_term_integrates_exactly_for_quadratic_potentials() {
    // ∫_{[0,1]²} (x² + y²) · 1 = 2/3 and 3×3 Gauss is exact for this integrand
    let mesh = Mesh2D::rectangle(2, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let (kv, _) = assemble_free(&mesh, &|x, y| x * x + y * y).unwrap();
    let (k0, _) = assemble_free(&mesh, &|_, _| 0.0).unwrap();
    let one = vec![1.0; mesh.n_nodes()];
    let diff = quadratic_form(&kv.to_dense(), &one) - quadratic_form(&k0.to_dense(), &one);
    assert!((diff - 2.0 / 3.0).abs() < 1e-13, "{diff}");
}

#[test]
fn harmonic_spectrum_converges_from_above() {
    let exact = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
    let worst = |n: usize| {
        let mesh = Mesh2D::square(n, -7.0, 7.0).unwrap();
        let sys = assemble(&mesh, &|x, y| 0.5 * (x * x + y * y)).unwrap();
        let opts = EigenOptions {
            count: 6,
            ..EigenOptions::default()
        };
        let v = shift_invert_eigs(&sys, &opts).unwrap().values();
        v.iter().zip(exact).fold(0.0f64, |m, (got, want)| {
            assert!(*got > want - 1e-6, "{v:?}");
            m.max(got - want)
        })
    };
    let (coarse, fine) = (worst(20), worst(30));
    assert!(coarse < 1e-2 && fine < coarse / 3.0, "{coarse} {fine}");
}

#[test]
fn reference_pencil_properties() {
    let (mesh, sys) = henon_heiles_system(29).unwrap();
    assert_eq!(mesh.n_nodes(), 3481);
    assert_eq!(sys.dim(), 3481);
    assert!(sys.stiffness.is_symmetric());
    assert!(sys.mass.is_symmetric());
    let (k, m) = assemble_free(&mesh, &henon_heiles_potential).unwrap();
    assert!(k.is_symmetric() && m.is_symmetric());
    for b in mesh.boundary_nodes() {
        assert_eq!(sys.mass.get(b, b), 0.0);
        assert_eq!(sys.stiffness.get(b, b), 1.0);
        assert!(sys.mass.row(b).all(|(_, v)| v == 0.0));
    }
}

#[test]
fn refinement_table_residuals_and_trend() {
    let opts = EigenOptions {
        count: 8,
        ..EigenOptions::default()
    };
    let cols = table1(&TABLE_MESHES, &opts).unwrap();
    for c in &cols {
        assert_eq!(c.eigenvalues.len(), 8);
        assert!(c.max_residual <= 1e-8, "{}: {}", c.mesh, c.max_residual);
        assert!(c.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
    // ε₁ decreases monotonically from 11×11 on; 7×7 lies below 11×11
    let e1: Vec<f64> = cols.iter().map(|c| c.eigenvalues[0]).collect();
    assert!(e1[2..].windows(2).all(|w| w[1] < w[0]), "{e1:?}");
    assert!(e1[1] < e1[2], "{e1:?}");
}

#[test]
fn eigenvalues_are_real_on_the_reference_pencil() {
    let (_, sys) = henon_heiles_system(11).unwrap();
    let r = shift_invert_eigs(&sys, &EigenOptions::default()).unwrap();
    assert!(r.max_imaginary <= 1e-8, "{}", r.max_imaginary);
}

#[test]
fn shift_on_an_eigenvalue_is_reported() {
    let (_, sys) = henon_heiles_system(5).unwrap();
    let exact = shift_invert_eigs(&sys, &EigenOptions::default())
        .unwrap()
        .values()[0];
    let opts = EigenOptions {
        shift: exact,
        count: 1,
        ..EigenOptions::default()
    };
    match shift_invert_eigs(&sys, &opts) {
        Err(Error::Factorization { .. }) => {}
        // a shift within rounding of an eigenvalue may still factor; the
        // result must then reproduce it
        Ok(r) => assert!((r.values()[0] - exact).abs() < 1e-8),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn folded_elements_are_rejected() {
    let mesh = Mesh2D::square(2, 0.0, 1.0)
        .unwrap()
        .mapped(|x, y| ((x - 0.5).powi(2), y));
    assert!(matches!(
        assemble(&mesh, &|_, _| 0.0),
        Err(Error::SingularElement(_))
    ));
    assert!(Mesh2D::square(0, 0.0, 1.0).is_err());
    assert!(Mesh2D::square(3, 1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// `Σ_ij M_ij = ∫ 1 = area` on affine images of rectangular meshes.
    #[test]
    fn mass_sums_to_area(
        nx in 1usize..6, ny in 1usize..6,
        a in 0.5f64..3.0, b in -1.0f64..1.0, d in 0.5f64..3.0,
        w in 0.5f64..4.0, h in 0.5f64..4.0,
    ) {
        let mesh = Mesh2D::rectangle(nx, ny, (0.0, w), (0.0, h)).unwrap().mapped(|x, y| (a * x + b * y, d * y));
        let (k, m) = assemble_free(&mesh, &|_, _| 0.0).unwrap();
        let dense = m.to_dense();
        let area = w * h * a * d;
        prop_assert!((dense.sum() - area).abs() < 1e-12 * area);
        prop_assert!(m.is_symmetric());
        let one = vec![1.0; mesh.n_nodes()];
        let mut ko = vec![0.0; mesh.n_nodes()];
        k.mul_vec(&one, &mut ko);
        prop_assert!(ko.iter().all(|v| v.abs() < 1e-12));
    }
}
