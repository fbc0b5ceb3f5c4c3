mod common;

use common::{dense, fd_jacobian, integrate_unit_square, zero_problem, Poly};
use mavem::forms::{
    assemble_jacobian, assemble_linearized, assemble_residual, assemble_rhs, frozen_coefficient,
    restrict_to_free, CoefficientField, StabilizationSpec,
};
use mavem::mesh::{build_uniform_quad_mesh, build_voronoi_mesh, Mesh};
use mavem::problems::{manufactured, ProblemId};
use mavem::space::{interpolate, VemSpace};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meshes() -> Vec<Mesh> {
    vec![
        build_uniform_quad_mesh(3),
        build_voronoi_mesh(12, 5, 20).unwrap(),
    ]
}

fn interp(space: &VemSpace, p: &Poly) -> DVector<f64> {
    interpolate(&space.mesh, &space.layout, |x| p.value(x), |x| p.grad(x)).unwrap()
}

fn hessian_inner(p: &Poly, q: &Poly) -> f64 {
    integrate_unit_square(|x| {
        let (a, b) = (p.hessian(x), q.hessian(x));
        a.component_mul(&b).sum()
    })
}

#[test]
fn zero_data_gives_zero_rhs() {
    let space = VemSpace::new(build_voronoi_mesh(10, 1, 10).unwrap(), 3).unwrap();
    let rhs = assemble_rhs(&space, &zero_problem(0.3));
    assert_eq!(rhs.amax(), 0.0);
}

#[test]
fn residual_at_zero_is_minus_rhs() {
    let space = VemSpace::new(build_uniform_quad_mesh(3), 2).unwrap();
    let problem = manufactured(ProblemId::P1Quartic, 0.1).unwrap();
    let rhs = assemble_rhs(&space, &problem);
    let zero = DVector::zeros(space.n_dofs());
    for stab in [StabilizationSpec::default(), StabilizationSpec::scaled()] {
        let r = assemble_residual(&space, &zero, &problem, &stab, &rhs);
        assert!((r + &rhs).amax() < 1e-14);
    }
}

// For w = I(p) with p ∈ P_ℓ, the load pairs to ∫ f p and the boundary term to
// ε(2 - ε)∫_∂Ω ∂_n p = ε(2 - ε)∫_Ω Δp.
#[test]
fn limit_rhs_pairs_with_polynomials() {
    for mesh in meshes() {
        for l in 2..=3 {
            let space = VemSpace::new(mesh.clone(), l).unwrap();
            for eps in [1.0, 0.05] {
                let problem = manufactured(ProblemId::Limit, eps).unwrap();
                let rhs = assemble_rhs(&space, &problem);
                for p in [
                    Poly::new(&[(1.0, 2, 0), (1.0, 0, 2)]),
                    Poly::new(&[(1.0, 1, 1), (-2.0, 0, 2), (0.5, 1, 0)]),
                    Poly::new(&[(1.0, l as i32, 0), (0.3, 1, l as i32 - 1)]),
                ] {
                    let got = rhs.dot(&interp(&space, &p));
                    let want = integrate_unit_square(|x| 4.0 * p.value(x))
                        + eps * (2.0 - eps) * integrate_unit_square(|x| p.laplacian(x));
                    assert!(
                        (got - want).abs() < 1e-11,
                        "l={l} eps={eps}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

// Σ_K of the local forms at polynomial arguments equals the continuous
// pairing: ∫ det(D²p) q - ε ∫ D²p : D²q.
#[test]
fn nonlinear_form_is_polynomially_consistent() {
    let zero_rhs = |space: &VemSpace| DVector::zeros(space.n_dofs());
    for mesh in meshes() {
        for l in 2..=3 {
            let space = VemSpace::new(mesh.clone(), l).unwrap();
            let p = if l == 2 {
                Poly::new(&[(1.5, 2, 0), (0.5, 1, 1), (1.0, 0, 2), (0.2, 1, 0)])
            } else {
                Poly::new(&[(1.0, 3, 0), (0.5, 1, 2), (2.0, 0, 2), (3.0, 2, 0)])
            };
            let q = Poly::new(&[(1.0, l as i32, 0), (-0.7, 1, 1), (0.4, 0, l as i32)]);
            let (up, uq) = (interp(&space, &p), interp(&space, &q));
            for eps in [1.0, 0.01] {
                let problem = zero_problem(eps);
                for stab in [StabilizationSpec::default(), StabilizationSpec::scaled()] {
                    let r = assemble_residual(&space, &up, &problem, &stab, &zero_rhs(&space));
                    let got = r.dot(&uq);
                    let want = integrate_unit_square(|x| p.hessian(x).determinant() * q.value(x))
                        - eps * hessian_inner(&p, &q);
                    assert!(
                        (got - want).abs() < 1e-10 * want.abs().max(1.0),
                        "{got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn det_of_constant_hessian_tests_projection() {
    let space = VemSpace::new(build_voronoi_mesh(15, 3, 10).unwrap(), 2).unwrap();
    let u = interp(&space, &Poly::new(&[(1.0, 2, 0), (1.0, 0, 2)]));
    let r = assemble_residual(
        &space,
        &u,
        &zero_problem(1e-3),
        &StabilizationSpec::default(),
        &DVector::zeros(space.n_dofs()),
    );
    let q = Poly::new(&[(1.0, 1, 0), (1.0, 0, 0)]);
    let got = r.dot(&interp(&space, &q));
    assert!((got - 4.0 * 1.5).abs() < 1e-12);
}

fn bubble() -> Poly {
    // x(1 - x)y(1 - y)
    Poly::new(&[(1.0, 1, 1), (-1.0, 2, 1), (-1.0, 1, 2), (1.0, 2, 2)])
}

#[test]
fn linearized_form_is_symmetric_and_consistent() {
    for mesh in meshes() {
        let space = VemSpace::new(mesh, 4).unwrap();
        let zero = DVector::zeros(space.n_dofs());
        let eps = 0.05;
        for stab in [StabilizationSpec::default(), StabilizationSpec::scaled()] {
            let sys = assemble_linearized(&space, &CoefficientField::Identity, eps, &stab, &zero);
            let a = dense(&sys.matrix);
            assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
            let b = bubble();
            let v = restrict_to_free(&space, &interp(&space, &b));
            let got = v.dot(&(&a * &v));
            let want =
                eps * hessian_inner(&b, &b) + integrate_unit_square(|x| b.grad(x).norm_squared());
            assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn linearized_form_is_coercive() {
    let space = VemSpace::new(build_uniform_quad_mesh(4), 2).unwrap();
    let zero = DVector::zeros(space.n_dofs());
    let sys = assemble_linearized(
        &space,
        &CoefficientField::Identity,
        1e-2,
        &StabilizationSpec::default(),
        &zero,
    );
    let eig = dense(&sys.matrix).symmetric_eigenvalues();
    assert!(eig.min() > 0.0, "min eigenvalue {}", eig.min());
}

// With the lift carrying I(p) on the boundary, pairing the reduced system
// with the bubble gives the continuous form A_L(p, b).
#[test]
fn lift_is_eliminated() {
    let eps = 0.5;
    for mesh in meshes() {
        let space = VemSpace::new(mesh, 4).unwrap();
        let p = Poly::new(&[(1.0, 2, 0), (1.0, 0, 2), (0.5, 3, 1), (-1.0, 0, 4)]);
        let full = interp(&space, &p);
        let lift = mavem::space::boundary_values(&space.mesh, &space.layout, |x| p.value(x));
        let stab = StabilizationSpec::default();
        let sys = assemble_linearized(&space, &CoefficientField::Identity, eps, &stab, &lift);
        let a = dense(&sys.matrix);
        let action = &a * restrict_to_free(&space, &full) - &sys.rhs;
        let b = bubble();
        let got = restrict_to_free(&space, &interp(&space, &b)).dot(&action);
        let want =
            eps * hessian_inner(&p, &b) + integrate_unit_square(|x| p.grad(x).dot(&b.grad(x)));
        assert!(
            (got - want).abs() < 1e-10 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

/// The Hessian part plus the `-εh⁻²` stabilisation equals `F'(0)` when
/// `C = 0`, which must be negative semidefinite and the negative of `A_L`
/// with `Φ = 0`.
#[test]
fn hessian_block_sign_convention() {
    let space = VemSpace::new(build_voronoi_mesh(12, 2, 10).unwrap(), 2).unwrap();
    let zero = DVector::zeros(space.n_dofs());
    for c in [0.0, 1.0] {
        let stab = StabilizationSpec {
            constant: c,
            ..StabilizationSpec::default()
        };
        let problem = zero_problem(0.02);
        let j = dense(&assemble_jacobian(&space, &zero, &problem, &stab));
        assert!((&j - j.transpose()).amax() < 1e-12 * j.amax());
        let eig = j.clone().symmetric_eigenvalues();
        assert!(
            eig.max() <= 1e-12 * j.amax(),
            "max eigenvalue {}",
            eig.max()
        );
        let phi = frozen_coefficient(&space, &zero);
        let a = dense(&assemble_linearized(&space, &phi, 0.02, &stab, &zero).matrix);
        assert!((&a + &j).amax() < 1e-12 * a.amax());
    }
}

fn random_iterate(space: &VemSpace, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let p = manufactured(ProblemId::P1Quartic, 1e-2).unwrap();
    let ex = p.exact.unwrap();
    let base = interpolate(&space.mesh, &space.layout, |x| (ex.u)(x), |x| (ex.grad)(x)).unwrap();
    let mut u = base.clone();
    for &d in &space.layout.free_dofs {
        u[d] += 0.1 * rng.random_range(-1.0..1.0);
    }
    u
}

#[test]
fn jacobian_matches_central_differences() {
    let space = VemSpace::new(build_uniform_quad_mesh(4), 2).unwrap();
    let problem = manufactured(ProblemId::P1Quartic, 1e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for stab in [StabilizationSpec::default(), StabilizationSpec::scaled()] {
        for _ in 0..3 {
            let u = random_iterate(&space, &mut rng);
            let j = dense(&assemble_jacobian(&space, &u, &problem, &stab));
            let fd = fd_jacobian(&space, &u, &problem, &stab, 1e-6);
            let err = (&j - &fd).norm() / j.norm();
            assert!(err < 1e-5, "relative error {err:.3e}");
        }
    }
}

#[test]
fn jacobian_is_nonsymmetric_off_polynomials() {
    let space = VemSpace::new(build_uniform_quad_mesh(4), 2).unwrap();
    let problem = manufactured(ProblemId::P1Quartic, 1e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = random_iterate(&space, &mut rng);
    let j = dense(&assemble_jacobian(
        &space,
        &u,
        &problem,
        &StabilizationSpec::default(),
    ));
    assert!((&j - j.transpose()).amax() > 1e-6 * j.amax());
}
