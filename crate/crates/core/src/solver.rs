//! Mode-by-mode solution of the reduced optimality system.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{Coefficient, FemMatrices};
use crate::error::{Error, Result};
use crate::fourier::{mode_weight, ModalField};
use crate::mesh::{extend_by_zero, Mesh};
use crate::minres::{minres, MinresStatus, Preconditioner};
use crate::problems::{ExampleDefinition, SpatialProfile};
use crate::sparse::{dense_solve, Csr, EnvelopeCholesky};

/// Separable desired state: Σ_k (c_k cos kωt + s_k sin kωt) · profile(x).
#[derive(Debug, Clone)]
pub struct DesiredState {
    pub profile: SpatialProfile,
    /// Coefficients for modes 0..=N.
    pub coeffs: Vec<(f64, f64)>,
    /// E_N, the energy of the desired state beyond mode N.
    pub remainder: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub sigma: Coefficient,
    pub nu: Coefficient,
    pub lambda: f64,
    pub period: f64,
    pub omega: f64,
    pub friedrichs: f64,
    pub desired: DesiredState,
}

impl ProblemSpec {
    pub fn for_example(def: &ExampleDefinition, n_modes: usize) -> Result<ProblemSpec> {
        let coeffs = def.desired_coefficients(n_modes)?;
        let remainder = def.remainder(n_modes)?;
        let spec = ProblemSpec {
            sigma: Coefficient::constant(1.0),
            nu: Coefficient::constant(1.0),
            lambda: def.lambda,
            period: def.period,
            omega: def.omega(),
            friedrichs: 1.0 / (2f64.sqrt() * std::f64::consts::PI),
            desired: DesiredState { profile: def.profile, coeffs, remainder },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.period > 0.0) {
            return Err(Error::InvalidInput("λ and T must be positive".into()));
        }
        if (self.omega * self.period - 2.0 * std::f64::consts::PI).abs() > 1e-14 {
            return Err(Error::InvalidInput("ωT must equal 2π".into()));
        }
        if !(self.sigma.lower > 0.0 && self.nu.lower > 0.0) {
            return Err(Error::InvalidInput("coefficient bounds must be positive".into()));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.desired.coeffs.len() - 1
    }
}

/// The assembled saddle point system of one mode.
#[derive(Debug, Clone)]
pub struct ModeSystem {
    pub k: usize,
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub block_size: usize,
}

/// Block layout for k ≥ 1 with unknowns (y_c, y_s, p_c, p_s):
///
/// ```text
/// [  M     0    -K    kωM_σ ]
/// [  0     M  -kωM_σ  -K    ]
/// [ -K  -kωM_σ -M/λ    0    ]
/// [ kωM_σ -K    0    -M/λ   ]
/// ```
///
/// and for k = 0 the 2×2 layout [[M, -K], [-K, -M/λ]].
pub fn build_mode_system(spec: &ProblemSpec, mats: &FemMatrices, load: &[f64], k: usize) -> Result<ModeSystem> {
    let (c, s) = *spec
        .desired
        .coeffs
        .get(k)
        .ok_or_else(|| Error::InvalidInput(format!("no desired-state coefficient for mode {k}")))?;
    let m = mats.mass.nrows;
    if load.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: load.len() });
    }
    let il = 1.0 / spec.lambda;
    let (mm, ms, kk) = (&mats.mass, &mats.mass_sigma, &mats.stiffness);
    if k == 0 {
        let matrix = Csr::block(&[vec![Some((1.0, mm)), Some((-1.0, kk))], vec![Some((-1.0, kk)), Some((-il, mm))]], m)?;
        let mut rhs = vec![0.0; 2 * m];
        for i in 0..m {
            rhs[i] = c * load[i];
        }
        return Ok(ModeSystem { k, matrix, rhs, block_size: m });
    }
    let kw = k as f64 * spec.omega;
    let matrix = Csr::block(
        &[
            vec![Some((1.0, mm)), None, Some((-1.0, kk)), Some((kw, ms))],
            vec![None, Some((1.0, mm)), Some((-kw, ms)), Some((-1.0, kk))],
            vec![Some((-1.0, kk)), Some((-kw, ms)), Some((-il, mm)), None],
            vec![Some((kw, ms)), Some((-1.0, kk)), None, Some((-il, mm))],
        ],
        m,
    )?;
    let mut rhs = vec![0.0; 4 * m];
    for i in 0..m {
        rhs[i] = c * load[i];
        rhs[m + i] = s * load[i];
    }
    Ok(ModeSystem { k, matrix, rhs, block_size: m })
}

/// Block-diagonal preconditioner diag(D, D, D/λ, D/λ) (or diag(D, D/λ) for k = 0) with
/// D = √λ K + kω√λ M_σ + M, realized by an exact Cholesky factorization of D.
pub struct BlockPreconditioner {
    chol: EnvelopeCholesky,
    scales: Vec<f64>,
    block: usize,
}

impl BlockPreconditioner {
    pub fn new(spec: &ProblemSpec, mats: &FemMatrices, k: usize) -> Result<BlockPreconditioner> {
        let sl = spec.lambda.sqrt();
        let kw = k as f64 * spec.omega;
        let d = if k == 0 {
            Csr::linear_combination(&[(1.0, &mats.mass), (sl, &mats.stiffness)])?
        } else {
            Csr::linear_combination(&[(1.0, &mats.mass), (sl, &mats.stiffness), (kw * sl, &mats.mass_sigma)])?
        };
        let chol = EnvelopeCholesky::factor(&d)?;
        let scales = if k == 0 { vec![1.0, spec.lambda] } else { vec![1.0, 1.0, spec.lambda, spec.lambda] };
        Ok(BlockPreconditioner { chol, scales, block: mats.mass.nrows })
    }

    pub fn num_blocks(&self) -> usize {
        self.scales.len()
    }
}

impl Preconditioner for BlockPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = self.block;
        for (b, s) in self.scales.iter().enumerate() {
            let zb = &mut z[b * m..(b + 1) * m];
            zb.copy_from_slice(&r[b * m..(b + 1) * m]);
            self.chol.solve_in_place(zb);
            if *s != 1.0 {
                zb.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub workers: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iter: 1000, workers: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub k: usize,
    /// State coefficients as full nodal vectors (zero on the boundary).
    pub y: ModalField,
    /// Adjoint coefficients as full nodal vectors.
    pub p: ModalField,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
    pub seconds: f64,
}

impl ModeSolution {
    /// u_k = -p_k / λ.
    pub fn control(&self, lambda: f64) -> ModalField {
        self.p.scaled(-1.0 / lambda)
    }
}

fn split_solution(mesh: &Mesh, k: usize, x: &[f64], m: usize) -> Result<(ModalField, ModalField)> {
    let part = |b: usize| extend_by_zero(mesh, &x[b * m..(b + 1) * m]);
    if k == 0 {
        Ok((ModalField::new(0, part(0), vec![])?, ModalField::new(0, part(1), vec![])?))
    } else {
        Ok((ModalField::new(k, part(0), part(1))?, ModalField::new(k, part(2), part(3))?))
    }
}

/// Solves one mode by preconditioned MINRES. Non-convergence is reported in the result.
pub fn solve_mode(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, load: &[f64], k: usize, opts: &SolveOptions) -> Result<ModeSolution> {
    let start = Instant::now();
    let sys = build_mode_system(spec, mats, load, k)?;
    let pre = BlockPreconditioner::new(spec, mats, k)?;
    let out = minres(&sys.matrix, &pre, &sys.rhs, opts.tol, opts.max_iter)?;
    let (y, p) = split_solution(mesh, k, &out.x, sys.block_size)?;
    Ok(ModeSolution {
        k,
        y,
        p,
        iterations: out.iterations,
        converged: out.status == MinresStatus::Converged,
        relative_residual: out.relative_residual(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves one mode with the dense LU oracle.
pub fn solve_mode_dense(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, load: &[f64], k: usize) -> Result<ModeSolution> {
    let start = Instant::now();
    let sys = build_mode_system(spec, mats, load, k)?;
    let x = dense_solve(&sys.matrix, &sys.rhs)?;
    let (y, p) = split_solution(mesh, k, &x, sys.block_size)?;
    Ok(ModeSolution { k, y, p, iterations: 0, converged: true, relative_residual: 0.0, seconds: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone)]
pub struct MhSolution {
    pub grid: usize,
    pub modes: Vec<ModeSolution>,
}

/// Solves the requested modes on a pool of `opts.workers` threads; results keep mode order.
pub fn solve_modes(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, modes: &[usize], opts: &SolveOptions) -> Vec<Result<ModeSolution>> {
    let load = spec.desired.profile.load(mesh);
    let run = |k: &usize| solve_mode(spec, mesh, mats, &load, *k, opts);
    if opts.workers <= 1 {
        return modes.iter().map(run).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build() {
        Ok(pool) => pool.install(|| modes.par_iter().map(run).collect()),
        Err(e) => modes.iter().map(|_| Err(Error::InvalidInput(format!("thread pool: {e}")))).collect(),
    }
}

/// Solves modes 0..=N; any unconverged mode is an error naming the mode and grid.
pub fn solve_all_modes(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, opts: &SolveOptions) -> Result<MhSolution> {
    let modes: Vec<usize> = (0..=spec.n_modes()).collect();
    let mut out = Vec::with_capacity(modes.len());
    for r in solve_modes(spec, mesh, mats, &modes, opts) {
        let m = r?;
        if !m.converged {
            return Err(Error::Solver {
                mode: m.k,
                grid: mesh.n,
                reason: format!("MINRES stopped at relative residual {:.3e}", m.relative_residual),
            });
        }
        out.push(m);
    }
    Ok(MhSolution { grid: mesh.n, modes: out })
}

/// J_k = ½‖y_k - y_{d,k}‖² + (λ/2)‖u_k‖² for one mode.
pub fn mode_cost(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, sol: &ModeSolution) -> f64 {
    let (c, s) = spec.desired.coeffs[sol.k];
    let prof = spec.desired.profile;
    let mut mis = prof.misfit_sq(mesh, &sol.y.cos, c);
    if sol.k > 0 {
        mis += prof.misfit_sq(mesh, &sol.y.sin, s);
    }
    let u = sol.control(spec.lambda);
    let uu: f64 = u.parts().iter().map(|v| mats.full_mass.quad_form(v)).sum();
    0.5 * mis + 0.5 * spec.lambda * uu
}

/// J = T·J₀ + (T/2)Σ J_k + ½E_N.
pub fn evaluate_cost(spec: &ProblemSpec, mesh: &Mesh, mats: &FemMatrices, sol: &MhSolution) -> f64 {
    let modal: f64 = sol.modes.iter().map(|m| mode_weight(m.k, spec.period) * mode_cost(spec, mesh, mats, m)).sum();
    modal + 0.5 * spec.desired.remainder
}
