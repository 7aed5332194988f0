//! Preconditioned MINRES for symmetric (indefinite) systems with an SPD preconditioner.

use crate::error::{Error, Result};
use crate::sparse::{dot, Csr};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for Csr {
    fn dim(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y).expect("operator dimensions checked by caller");
    }
}

/// Applies z = P⁻¹ r for a symmetric positive definite P.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MinresStatus {
    Converged,
    MaxIterations,
    /// Zero curvature encountered; the current iterate is returned.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: MinresStatus,
    /// Preconditioned residual norm relative to the initial one, per iteration.
    pub history: Vec<f64>,
}

impl MinresOutcome {
    pub fn converged(&self) -> bool {
        self.status == MinresStatus::Converged
    }
    pub fn relative_residual(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }
}

fn precond_norm_sq(r: &[f64], z: &[f64]) -> Result<f64> {
    let b = dot(r, z);
    let scale = dot(r, r).sqrt() * dot(z, z).sqrt();
    if b < -1e-14 * scale {
        return Err(Error::IndefinitePreconditioner(b));
    }
    Ok(b.max(0.0))
}

/// Solves A x = b starting from x = 0.
///
/// Stops when the preconditioned residual norm falls below `tol` times its initial value.
pub fn minres(
    a: &dyn LinearOperator,
    p: &dyn Preconditioner,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<MinresOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    p.apply(&r1, &mut y);
    let beta1 = precond_norm_sq(&r1, &y)?.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresOutcome { x, iterations: 0, status: MinresStatus::Converged, history: vec![0.0] });
    }
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut history = Vec::new();

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        p.apply(&r2, &mut y);
        oldb = beta;
        beta = precond_norm_sq(&r2, &y)?.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta);
        if gamma == 0.0 {
            history.push(phibar / beta1);
            return Ok(MinresOutcome { x, iterations: itn, status: MinresStatus::Breakdown, history });
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        history.push(rel);
        if rel <= tol || beta == 0.0 {
            return Ok(MinresOutcome { x, iterations: itn, status: MinresStatus::Converged, history });
        }
    }
    Ok(MinresOutcome { x, iterations: max_iter, status: MinresStatus::MaxIterations, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_one_iteration() {
        let a = Csr::identity(5);
        let b = vec![1.0, -2.0, 0.5, 3.0, 4.0];
        let out = minres(&a, &IdentityPreconditioner, &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged());
        for (x, b) in out.x.iter().zip(&b) {
            assert!((x - b).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_diagonal() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, -1.0), (2, 2, 5.0)]).unwrap();
        let out = minres(&a, &IdentityPreconditioner, &[2.0, 3.0, 5.0], 1e-14, 10).unwrap();
        assert!(out.converged());
        let expect = [1.0, -3.0, 1.0];
        for (x, e) in out.x.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = minres(&Csr::identity(3), &IdentityPreconditioner, &[0.0; 3], 1e-10, 5).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0; 3]);
    }

    #[test]
    fn indefinite_preconditioner_detected() {
        struct Neg;
        impl Preconditioner for Neg {
            fn apply(&self, r: &[f64], z: &mut [f64]) {
                for (z, r) in z.iter_mut().zip(r) {
                    *z = -r;
                }
            }
        }
        let res = minres(&Csr::identity(2), &Neg, &[1.0, 1.0], 1e-10, 5);
        assert!(matches!(res, Err(Error::IndefinitePreconditioner(_))));
    }

    #[test]
    fn zero_curvature_breakdown_flagged() {
        // [[0,1],[1,0]] with b = e1: the first Lanczos step has alpha = 0 and
        // gbar = 0 but beta = 1, so no breakdown; use the zero matrix instead.
        let a = Csr::zeros(2, 2);
        let out = minres(&a, &IdentityPreconditioner, &[1.0, 0.0], 1e-10, 5).unwrap();
        assert_eq!(out.status, MinresStatus::Breakdown);
        assert_eq!(out.x, vec![0.0, 0.0]);
    }
}
