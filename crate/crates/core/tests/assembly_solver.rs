use friction_stokes::analysis::{fitted_slope, h1_distance, DiscreteField};
use friction_stokes::assembly::{assemble_a, assemble_b, assemble_load, interpolate_velocity, ManufacturedCase};
use friction_stokes::discretization::Discretization;
use friction_stokes::exec::Execution;
use friction_stokes::friction::FrictionModulus;
use friction_stokes::mesh::build_friedrichs_keller;
use friction_stokes::quadrature::triangle_rule;
use friction_stokes::element::AffineMap;
use friction_stokes::spaces::{build_dof_map, BcKind};
use friction_stokes::sparse::SparseOperator;
use friction_stokes::uzawa::{run_uzawa, UzawaParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(op: &SparseOperator) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(op.nrows(), op.ncols());
    for (r, c, v) in op.triplets() {
        m[(r, c)] += v;
    }
    m
}

#[test]
fn sbcf_velocity_block_admits_cholesky() {
    for n in [2, 4, 8] {
        let d = Discretization::new(n, BcKind::Sbcf, 1.0, Execution::Sequential).unwrap();
        assert!(d.a().max_asymmetry() <= 1e-13);
        assert!(dense(d.a()).cholesky().is_some(), "N={n}");
    }
}

#[test]
fn velocity_block_is_positive_on_random_vectors() {
    let d = Discretization::new(4, BcKind::Sbcf, 1.0, Execution::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x: Vec<f64> = (0..d.a().nrows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(d.a().bilinear(&x, &x) > 0.0);
    }
}

#[test]
fn lbcf_divergence_sees_constants() {
    let d = Discretization::new(4, BcKind::Lbcf, 1.0, Execution::Sequential).unwrap();
    let ones = vec![1.0; d.b().nrows()];
    let row = d.b().mul_transpose_vec(&ones);
    assert!(row.iter().any(|v| v.abs() > 1e-3));
}

/// Generalized eigenvalues of `B G⁻¹ Bᵀ q = μ M q`, ascending, with `G` the
/// H¹ Gram matrix on free velocities and `M` the P1 mass matrix.
fn inf_sup_spectrum(n: usize, bc: BcKind) -> Vec<f64> {
    let d = Discretization::new(n, bc, 1.0, Execution::Sequential).unwrap();
    let g = dense(d.h1_gram()).cholesky().unwrap();
    let b = dense(d.b());
    let s = &b * g.solve(&b.transpose());
    let m = dense(&friction_stokes::assembly::assemble_pressure_mass(d.mesh(), Execution::Sequential));
    let l = m.cholesky().unwrap();
    let li = l.l().try_inverse().unwrap();
    let c = &li * s * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn discrete_inf_sup_is_mesh_stable() {
    for bc in [BcKind::Sbcf, BcKind::Lbcf] {
        let beta: Vec<f64> = [4, 8]
            .iter()
            .map(|&n| {
                let ev = inf_sup_spectrum(n, bc);
                let smallest = match bc {
                    // Constants are in the kernel; the mean-zero part starts at the second.
                    BcKind::Sbcf => {
                        assert!(ev[0].abs() < 1e-10, "{}", ev[0]);
                        ev[1]
                    }
                    BcKind::Lbcf => ev[0],
                };
                smallest.max(0.0).sqrt()
            })
            .collect();
        assert!(beta[0] >= 1e-3 && beta[1] >= 1e-3, "{bc}: {beta:?}");
        assert!(beta[1] >= 0.8 * beta[0], "{bc}: {beta:?}");
    }
}

/// `2ν ∫ e(u):e(u)` of the manufactured velocity by the degree-8 rule on a
/// 64×64 mesh.
fn exact_energy() -> f64 {
    let case = ManufacturedCase::default();
    let mesh = build_friedrichs_keller(64).unwrap();
    let rule = triangle_rule();
    let mut s = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = AffineMap::new(mesh.triangle_coords(t));
        for q in &rule {
            let g = case.velocity_gradient(map.to_physical(q.bary));
            let e12 = 0.5 * (g[0][1] + g[1][0]);
            s += q.weight * map.area() * 2.0 * (g[0][0].powi(2) + 2.0 * e12 * e12 + g[1][1].powi(2));
        }
    }
    s
}

#[test]
fn interpolant_energy_converges() {
    let exact = exact_energy();
    let case = ManufacturedCase::default();
    let levels = [4, 8, 16, 32];
    let errors: Vec<f64> = levels
        .iter()
        .map(|&n| {
            let mesh = build_friedrichs_keller(n).unwrap();
            let dofs = build_dof_map(&mesh, BcKind::Sbcf);
            let a = assemble_a(&mesh, &dofs, 1.0, Execution::Sequential);
            let raw = interpolate_velocity(&mesh, |p| case.velocity(p));
            let free = dofs.restrict_to_free(&raw).unwrap();
            (a.bilinear(&free, &free) - exact).abs()
        })
        .collect();
    let slope = fitted_slope(&levels, &errors).unwrap();
    assert!(slope >= 2.0, "slope {slope}, errors {errors:?}");
}

#[test]
fn stick_regime_converges_to_manufactured_solution() {
    let case = ManufacturedCase::default();
    let levels = [4, 8, 16];
    let errors: Vec<f64> = levels
        .iter()
        .map(|&n| {
            let d = Discretization::new(n, BcKind::Sbcf, 1.0, Execution::default()).unwrap();
            let params = UzawaParams::new(3.0).unwrap().with_tol(1e-10);
            let sol = run_uzawa(&d, &case, &FrictionModulus::Constant(2.0), &params).unwrap();
            let field = DiscreteField::from_solution(&sol).unwrap();
            h1_distance(field.mesh(), &field, &case)
        })
        .collect();
    let slope = fitted_slope(&levels, &errors).unwrap();
    assert!((1.8..2.4).contains(&slope), "slope {slope}, errors {errors:?}");
}

#[test]
fn assembly_is_identical_under_both_policies() {
    let case = ManufacturedCase::default();
    for bc in [BcKind::Sbcf, BcKind::Lbcf] {
        let mesh = build_friedrichs_keller(12).unwrap();
        let dofs = build_dof_map(&mesh, bc);
        let both = [Execution::Sequential, Execution::Parallel].map(|e| {
            let a: Vec<_> = assemble_a(&mesh, &dofs, 1.0, e).triplets().map(|(r, c, v)| (r, c, v.to_bits())).collect();
            let b: Vec<_> = assemble_b(&mesh, &dofs, e).triplets().map(|(r, c, v)| (r, c, v.to_bits())).collect();
            let f: Vec<u64> = assemble_load(&mesh, &dofs, &case, e).iter().map(|v| v.to_bits()).collect();
            (a, b, f)
        });
        assert!(both[0] == both[1], "{bc}");
    }
}
