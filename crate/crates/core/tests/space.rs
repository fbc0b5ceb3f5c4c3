mod common;

use common::Poly;
use mavem::mesh::{build_voronoi_mesh, Point};
use mavem::poly::poly_dim;
use mavem::space::{dof_evaluate, interpolate, VemSpace};
use nalgebra::DVector;
use proptest::prelude::*;

fn random_poly(degree: usize, coeffs: &[f64]) -> Poly {
    let mut terms = Vec::new();
    let mut i = 0;
    for d in 0..=degree as i32 {
        for b in 0..=d {
            terms.push((coeffs[i % coeffs.len()], d - b, b));
            i += 1;
        }
    }
    Poly::new(&terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projections_reproduce_polynomials(
        order in 2usize..=4,
        cells in 3usize..20,
        seed in any::<u64>(),
        coeffs in prop::collection::vec(-2.0f64..2.0, 15),
    ) {
        let space = VemSpace::new(build_voronoi_mesh(cells, seed, 5).unwrap(), order).unwrap();
        let p = random_poly(order, &coeffs);
        let u = interpolate(&space.mesh, &space.layout, |x| p.value(x), |x| p.grad(x)).unwrap();
        let n1 = poly_dim(order as isize - 1);
        let n2 = poly_dim(order as isize - 2);
        for (k, op) in space.operators.iter().enumerate() {
            let v = DVector::from_vec(space.layout.gather(k, u.as_slice()));
            let c0 = &op.p0 * &v;
            let c1 = [&op.p1[0] * &v, &op.p1[1] * &v];
            let c2: Vec<_> = op.p2.iter().map(|m| m * &v).collect();
            for x in space.mesh.element_points(k).iter().chain([&space.mesh.elements[k].centroid]) {
                let m = op.basis.eval(x);
                prop_assert!((c0.dot(&m) - p.value(x)).abs() < 1e-9);
                let g = p.grad(x);
                prop_assert!((c1[0].dot(&m.rows(0, n1)) - g.x).abs() < 1e-8);
                prop_assert!((c1[1].dot(&m.rows(0, n1)) - g.y).abs() < 1e-8);
                let h = p.hessian(x);
                for (c, coef) in c2.iter().enumerate() {
                    prop_assert!((coef.dot(&m.rows(0, n2)) - h[(c / 2, c % 2)]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn global_and_local_dofs_agree(
        order in 2usize..=4,
        cells in 3usize..20,
        seed in any::<u64>(),
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
    ) {
        let space = VemSpace::new(build_voronoi_mesh(cells, seed, 5).unwrap(), order).unwrap();
        let u = move |x: &Point| (a * x.x + 1.3 * x.y).sin() + b * x.x * x.x * x.y;
        let grad = move |x: &Point| {
            let c = (a * x.x + 1.3 * x.y).cos();
            Point::new(a * c + 2.0 * b * x.x * x.y, 1.3 * c + b * x.x * x.x)
        };
        let global = interpolate(&space.mesh, &space.layout, u, grad).unwrap();
        for k in 0..space.mesh.n_elements() {
            let local = dof_evaluate(&space.mesh, k, order, u, grad).unwrap();
            let gathered = DVector::from_vec(space.layout.gather(k, global.as_slice()));
            prop_assert!((local - gathered).amax() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_linear(
        cells in 3usize..12,
        seed in any::<u64>(),
        s in -3.0f64..3.0,
    ) {
        let space = VemSpace::new(build_voronoi_mesh(cells, seed, 5).unwrap(), 3).unwrap();
        let p = Poly::new(&[(1.0, 3, 0), (0.5, 1, 1)]);
        let q = Poly::new(&[(2.0, 0, 2), (-1.0, 1, 0)]);
        let r = Poly::new(&[(1.0, 3, 0), (0.5, 1, 1), (2.0 * s, 0, 2), (-s, 1, 0)]);
        let i = |p: &Poly| interpolate(&space.mesh, &space.layout, |x| p.value(x), |x| p.grad(x)).unwrap();
        prop_assert!((i(&p) + i(&q) * s - i(&r)).amax() < 1e-12);
    }
}

#[test]
fn stabilization_kernel_is_polynomials() {
    let space = VemSpace::new(build_voronoi_mesh(20, 3, 20).unwrap(), 3).unwrap();
    let p = random_poly(3, &[0.3, -1.0, 0.7, 1.1]);
    let u = interpolate(&space.mesh, &space.layout, |x| p.value(x), |x| p.grad(x)).unwrap();
    for (k, op) in space.operators.iter().enumerate() {
        let v = DVector::from_vec(space.layout.gather(k, u.as_slice()));
        assert!((&op.stab * &v).amax() < 1e-10 * op.stab.amax() * v.amax());
    }
}
