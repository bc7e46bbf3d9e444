//! Assembled operators for one mesh level and boundary condition, with a
//! lazily built saddle-point factorization and a process-wide cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::assembly::{
    assemble_a, assemble_b, assemble_h1_gram, assemble_load, pressure_weights, BodyForce,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::friction::{BoundaryTrace, FrictionModulus, LambdaSpace};
use crate::mesh::{build_friedrichs_keller, extract_gamma1_trace, Gamma1Trace, Mesh};
use crate::saddle::{Factorization, PressureGauge, SaddleSystem};
use crate::sparse::SparseOperator;
use crate::spaces::{build_dof_map, BcKind, DofMap};

#[derive(Debug)]
pub struct Discretization {
    mesh: Mesh,
    dofmap: DofMap,
    trace: Gamma1Trace,
    nu: f64,
    system: SaddleSystem,
    h1_gram: SparseOperator,
    factorization: OnceLock<Arc<Factorization>>,
}

impl Discretization {
    /// Operators on the `n × n` mesh with the gauge matching `bc`.
    pub fn new(n: usize, bc: BcKind, nu: f64, exec: Execution) -> Result<Self> {
        Self::with_gauge(n, bc, nu, PressureGauge::for_bc(bc), exec)
    }

    pub fn with_gauge(
        n: usize,
        bc: BcKind,
        nu: f64,
        gauge: PressureGauge,
        exec: Execution,
    ) -> Result<Self> {
        let mesh = build_friedrichs_keller(n)?;
        let dofmap = build_dof_map(&mesh, bc);
        let trace = extract_gamma1_trace(&mesh);
        let system = SaddleSystem::new(
            assemble_a(&mesh, &dofmap, nu, exec),
            assemble_b(&mesh, &dofmap, exec),
            gauge,
            pressure_weights(&mesh),
            nu,
        )?;
        let h1_gram = assemble_h1_gram(&mesh, &dofmap, exec);
        Ok(Self {
            mesh,
            dofmap,
            trace,
            nu,
            system,
            h1_gram,
            factorization: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn trace(&self) -> &Gamma1Trace {
        &self.trace
    }

    pub fn bc(&self) -> BcKind {
        self.dofmap.bc()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gauge(&self) -> PressureGauge {
        self.system.gauge()
    }

    pub fn system(&self) -> &SaddleSystem {
        &self.system
    }

    pub fn a(&self) -> &SparseOperator {
        self.system.a()
    }

    pub fn b(&self) -> &SparseOperator {
        self.system.b()
    }

    pub fn h1_gram(&self) -> &SparseOperator {
        &self.h1_gram
    }

    pub fn factorization(&self) -> Result<Arc<Factorization>> {
        if let Some(f) = self.factorization.get() {
            return Ok(f.clone());
        }
        let f = Arc::new(self.system.factorize()?);
        Ok(self.factorization.get_or_init(|| f).clone())
    }

    pub fn load(&self, force: &dyn BodyForce, exec: Execution) -> Vec<f64> {
        assemble_load(&self.mesh, &self.dofmap, force, exec)
    }

    /// H¹ norm of a free velocity vector.
    pub fn h1_norm(&self, free: &[f64]) -> f64 {
        self.h1_gram.bilinear(free, free).max(0.0).sqrt()
    }

    /// Frictional trace of a free velocity vector on the whole Γ1 chain.
    pub fn trace_of_free(&self, free: &[f64]) -> BoundaryTrace {
        let mut chain = vec![0.0; self.trace.len()];
        for (j, &k) in self.dofmap.trace_free_dofs().iter().enumerate() {
            chain[j + 1] = free[k];
        }
        BoundaryTrace::from_chain(chain)
    }

    /// One Stokes solve with the multiplier held fixed:
    /// `a(u, v) + b(v, p) = (f, v) - (v_trace, λ)_Λ`, `b(u, q) = 0`.
    /// Returns the free velocity and the pressure.
    pub fn solve_with_multiplier(
        &self,
        load: &[f64],
        space: &LambdaSpace,
        lambda: &BoundaryTrace,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if lambda.len() != self.trace.len() {
            return Err(Error::LengthMismatch {
                expected: self.trace.len(),
                actual: lambda.len(),
            });
        }
        let mut rhs = load.to_vec();
        let weights = space.interior_weights();
        for (j, &k) in self.dofmap.trace_free_dofs().iter().enumerate() {
            rhs[k] -= weights[j] * lambda.interior()[j];
        }
        self.factorization()?
            .solve(&rhs, &vec![0.0; self.dofmap.pressure_count()])
    }

    pub fn lambda_space(&self, g: &FrictionModulus) -> Result<LambdaSpace> {
        LambdaSpace::new(&self.trace, g)
    }
}

type CacheKey = (usize, BcKind, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Discretization>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Discretization>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared discretization for `(n, bc, ν)` with the matching gauge; built on
/// first use and kept for the life of the process.
pub fn shared(n: usize, bc: BcKind, nu: f64, exec: Execution) -> Result<Arc<Discretization>> {
    let key = (n, bc, nu.to_bits());
    if let Some(d) = cache().lock().expect("cache poisoned").get(&key) {
        return Ok(d.clone());
    }
    let d = Arc::new(Discretization::new(n, bc, nu, exec)?);
    Ok(cache()
        .lock()
        .expect("cache poisoned")
        .entry(key)
        .or_insert(d)
        .clone())
}

/// Drop every cached discretization.
pub fn clear_cache() {
    cache().lock().expect("cache poisoned").clear();
}
