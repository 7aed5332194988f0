//! Functional a posteriori majorants for the state/adjoint error and for the cost.

use serde::Serialize;

use crate::assembly::FemMatrices;
use crate::error::{Error, Result};
use crate::flux::{reconstruct_rt0, scaled_gradients, Rt0Field};
use crate::fourier::{mode_weight, ModalField};
use crate::mesh::Mesh;
use crate::quadrature::{DEGREE5, MIDEDGE};
use crate::solver::{ModeSolution, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub mu1_tilde: f64,
    pub mu2_tilde: f64,
    pub mu1_under: f64,
    pub friedrichs: f64,
}

impl StabilityConstants {
    pub fn new(lambda: f64, sigma: (f64, f64), nu: (f64, f64), friedrichs: f64) -> StabilityConstants {
        let lower = nu.0.min(sigma.0);
        let s2 = 2f64.sqrt();
        let sl = lambda.sqrt();
        let mu1 = (1.0 / sl).min(nu.0).min(sigma.0) * sl.min(1.0 / sl) / (1.0 + 2.0 * lambda.max(1.0 / lambda)).sqrt();
        let mu2 = 1f64.max(1.0 / lambda).max(nu.1).max(sigma.1);
        StabilityConstants {
            mu1,
            mu2,
            mu1_tilde: lower * lambda.min(1.0 / lambda) / s2,
            mu2_tilde: mu2 * 1f64.max(friedrichs * friedrichs + 1.0),
            mu1_under: lower / s2,
            friedrichs,
        }
    }

    pub fn for_spec(spec: &ProblemSpec) -> StabilityConstants {
        StabilityConstants::new(
            spec.lambda,
            (spec.sigma.lower, spec.sigma.upper),
            (spec.nu.lower, spec.nu.upper),
            spec.friedrichs,
        )
    }
}

/// Squared Ω-norms of the four residuals of one mode, summed over cosine and sine parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ModeResiduals {
    pub k: usize,
    pub r1_sq: f64,
    pub r2_sq: f64,
    pub r3_sq: f64,
    pub r4_sq: f64,
}

impl ModeResiduals {
    pub fn norms(&self) -> [f64; 4] {
        [self.r1_sq.sqrt(), self.r2_sq.sqrt(), self.r3_sq.sqrt(), self.r4_sq.sqrt()]
    }
}

/// Fluxes τ ≈ ν∇η and ρ ≈ -ν∇ζ for every component of a mode.
pub fn reconstruct_mode_fluxes(mesh: &Mesh, mats: &FemMatrices, eta: &ModalField, zeta: &ModalField) -> (Vec<Rt0Field>, Vec<Rt0Field>) {
    let tau = eta.parts().iter().map(|v| reconstruct_rt0(mesh, v, &mats.nu, 1.0)).collect();
    let rho = zeta.parts().iter().map(|v| reconstruct_rt0(mesh, v, &mats.nu, -1.0)).collect();
    (tau, rho)
}

/// Component `c` (0 cosine, 1 sine) of the rotated field (cos, sin) -> (sin, -cos).
fn rotated(f: &ModalField, c: usize) -> Vec<f64> {
    if c == 0 {
        f.sin.clone()
    } else {
        f.cos.iter().map(|v| -v).collect()
    }
}

fn p1_at(mesh: &Mesh, t: usize, v: &[f64], l: [f64; 3]) -> f64 {
    let tri = mesh.triangles[t];
    l[0] * v[tri[0]] + l[1] * v[tri[1]] + l[2] * v[tri[2]]
}

/// Residual norms for an approximation (η, ζ) with fluxes (τ, ρ):
///
/// R1 = σ∂_tη + ζ/λ - div τ,  R2 = τ - ν∇η,
/// R3 = σ∂_tζ + η - div ρ - y_d,  R4 = ρ + ν∇ζ,
///
/// where the time derivative of mode k is kω times the rotated field.
pub fn modal_residuals(
    mesh: &Mesh,
    spec: &ProblemSpec,
    mats: &FemMatrices,
    eta: &ModalField,
    zeta: &ModalField,
    tau: &[Rt0Field],
    rho: &[Rt0Field],
) -> Result<ModeResiduals> {
    let k = eta.k;
    let ncomp = if k == 0 { 1 } else { 2 };
    if zeta.k != k || tau.len() != ncomp || rho.len() != ncomp {
        return Err(Error::InvalidInput(format!("mode {k}: components of η, ζ, τ, ρ do not match")));
    }
    if eta.cos.len() != mesh.num_nodes() || tau.iter().chain(rho).any(|f| f.fluxes.len() != mesh.edges.len()) {
        return Err(Error::InvalidInput("fields do not belong to this mesh".into()));
    }
    let kw = k as f64 * spec.omega;
    let (c_d, s_d) = spec.desired.coeffs[k];
    let profile = spec.desired.profile;
    let il = 1.0 / spec.lambda;
    let mut res = ModeResiduals { k, ..Default::default() };
    for c in 0..ncomp {
        let (ev, zv) = (eta.parts()[c], zeta.parts()[c]);
        let (ep, zp) = if k == 0 { (vec![0.0; ev.len()], vec![0.0; zv.len()]) } else { (rotated(eta, c), rotated(zeta, c)) };
        let yd = if c == 0 { c_d } else { s_d };
        let div_tau = tau[c].divergence(mesh);
        let div_rho = rho[c].divergence(mesh);
        let g_eta = scaled_gradients(mesh, ev, &mats.nu, 1.0);
        let g_zeta = scaled_gradients(mesh, zv, &mats.nu, -1.0);
        res.r2_sq += tau[c].distance_sq_to_piecewise_constant(mesh, &g_eta);
        res.r4_sq += rho[c].distance_sq_to_piecewise_constant(mesh, &g_zeta);
        for t in 0..mesh.num_triangles() {
            let area = mesh.signed_area(t);
            let sig = mats.sigma[t];
            for (l, w) in MIDEDGE.iter() {
                let r1 = kw * sig * p1_at(mesh, t, &ep, *l) + il * p1_at(mesh, t, zv, *l) - div_tau[t];
                res.r1_sq += w * area * r1 * r1;
            }
            for (l, w) in DEGREE5.iter() {
                let x = mesh.point(t, *l);
                let r3 = kw * sig * p1_at(mesh, t, &zp, *l) + p1_at(mesh, t, ev, *l) - div_rho[t] - yd * profile.eval_on(mesh, t, x);
                res.r3_sq += w * area * r3 * r3;
            }
        }
    }
    Ok(res)
}

/// Squared norm of the state-equation residual σ∂_t y - div τ - u used by the cost majorant.
pub fn cost_residual_sq(mesh: &Mesh, spec: &ProblemSpec, mats: &FemMatrices, y: &ModalField, u: &ModalField, tau: &[Rt0Field]) -> f64 {
    let kw = y.k as f64 * spec.omega;
    let mut s = 0.0;
    for (c, tau_c) in tau.iter().enumerate() {
        let dy = if y.k == 0 { vec![0.0; y.cos.len()] } else { rotated(y, c) };
        let uv = u.parts()[c];
        let div = tau_c.divergence(mesh);
        for t in 0..mesh.num_triangles() {
            let area = mesh.signed_area(t);
            for (l, w) in MIDEDGE.iter() {
                let r = kw * mats.sigma[t] * p1_at(mesh, t, &dy, *l) - div[t] - p1_at(mesh, t, uv, *l);
                s += w * area * r * r;
            }
        }
    }
    s
}

/// Per-mode majorant used for the tables: √2 (C_F(‖R1‖+‖R3‖) + ‖R2‖ + ‖R4‖).
pub fn mode_majorant(res: &ModeResiduals, friedrichs: f64) -> f64 {
    let [r1, r2, r3, r4] = res.norms();
    2f64.sqrt() * (friedrichs * (r1 + r3) + r2 + r4)
}

/// Single-mode bound with the general constant: (1/μ̃₁)(C_F(‖R1‖+‖R3‖) + ‖R2‖ + ‖R4‖).
pub fn mode_majorant_theorem(res: &ModeResiduals, consts: &StabilityConstants) -> f64 {
    let [r1, r2, r3, r4] = res.norms();
    (consts.friedrichs * (r1 + r3) + r2 + r4) / consts.mu1_tilde
}

/// Time-weighted residual norms A_1..A_4 over all modes; E_N enters A_3.
pub fn weighted_residuals(res: &[ModeResiduals], period: f64, remainder: f64) -> [f64; 4] {
    let mut a = [0.0; 4];
    for r in res {
        let w = mode_weight(r.k, period);
        a[0] += w * r.r1_sq;
        a[1] += w * r.r2_sq;
        a[2] += w * r.r3_sq;
        a[3] += w * r.r4_sq;
    }
    a[2] += remainder;
    a.map(f64::sqrt)
}

/// Guaranteed bound for the space-time seminorm error of (y, p):
/// (1/μ̃₁)(C_F A_1 + A_2 + C_F A_3 + A_4).
pub fn majorant_seminorm(res: &[ModeResiduals], consts: &StabilityConstants, period: f64, remainder: f64) -> f64 {
    let a = weighted_residuals(res, period, remainder);
    (consts.friedrichs * (a[0] + a[2]) + a[1] + a[3]) / consts.mu1_tilde
}

/// Overall majorant with the per-mode table factor √2 in place of 1/μ̃₁.
pub fn majorant_seminorm_table(res: &[ModeResiduals], friedrichs: f64, period: f64, remainder: f64) -> f64 {
    let a = weighted_residuals(res, period, remainder);
    2f64.sqrt() * (friedrichs * (a[0] + a[2]) + a[1] + a[3])
}

/// Guaranteed bound for the full space-time norm error: (1/μ₁)(Σ‖R_j‖² + E_N)^{1/2}.
pub fn majorant_full_norm(res: &[ModeResiduals], consts: &StabilityConstants, period: f64, remainder: f64) -> f64 {
    let a = weighted_residuals(res, period, remainder);
    a.iter().map(|v| v * v).sum::<f64>().sqrt() / consts.mu1
}

/// Squared seminorm majorant written as a quadratic form with Young parameters α, β, γ.
pub fn quadratic_form_majorant(r: [f64; 4], friedrichs: f64, mu1_tilde: f64, alpha: f64, beta: f64, gamma: f64) -> f64 {
    let cf2 = friedrichs * friedrichs;
    let (a, b, g) = (alpha, beta, gamma);
    (cf2 * (1.0 + a) * (1.0 + b) * r[0].powi(2)
        + (1.0 + a) * (1.0 + b) / b * r[1].powi(2)
        + cf2 * (1.0 + a) * (1.0 + g) / a * r[2].powi(2)
        + (1.0 + a) * (1.0 + g) / (a * g) * r[3].powi(2))
        / (mu1_tilde * mu1_tilde)
}

/// Minimizing (α, β, γ) of the quadratic form (all residuals positive).
pub fn quadratic_form_parameters(r: [f64; 4], friedrichs: f64) -> (f64, f64, f64) {
    let beta = r[1] / (friedrichs * r[0]);
    let gamma = r[3] / (friedrichs * r[2]);
    let alpha = (friedrichs * r[2] + r[3]) / (friedrichs * r[0] + r[1]);
    (alpha, beta, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YoungOptimum {
    /// May be 0 or +∞ in degenerate limits.
    pub alpha: f64,
    pub beta: f64,
    /// Minimum of (1+α)A + (1+α)(1+β)X/α + (1+α)(1+β)Y/(αβ).
    pub value: f64,
}

/// (1+α)A + (1+α)(1+β)X/α + (1+α)(1+β)Y/(αβ).
pub fn young_value(a: f64, x: f64, y: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 + alpha) * a + (1.0 + alpha) * (1.0 + beta) * x / alpha + (1.0 + alpha) * (1.0 + beta) * y / (alpha * beta)
}

/// Closed-form minimizer over α, β > 0, value (√A + √X + √Y)².
pub fn optimize_young(a: f64, x: f64, y: f64) -> YoungOptimum {
    let (beta, s) = match (x > 0.0, y > 0.0) {
        (true, true) => ((y / x).sqrt(), (x.sqrt() + y.sqrt()).powi(2)),
        (false, true) => (f64::INFINITY, y),
        (true, false) => (0.0, x),
        (false, false) => (1.0, 0.0),
    };
    let alpha = match (a > 0.0, s > 0.0) {
        (true, true) => (s / a).sqrt(),
        (false, true) => f64::INFINITY,
        _ => 0.0,
    };
    YoungOptimum { alpha, beta, value: a + s + 2.0 * (a * s).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCostMajorant {
    pub k: usize,
    /// ½‖y_k - y_{d,k}‖².
    pub misfit: f64,
    /// (λ/2)‖u_k‖².
    pub control: f64,
    pub residual_flux_sq: f64,
    pub residual_equation_sq: f64,
    pub young: YoungOptimum,
    /// J⊕_k at the optimal parameters.
    pub value: f64,
}

/// J⊕_k for one solved mode, with τ reconstructed from ν∇y_k.
pub fn mode_cost_majorant(mesh: &Mesh, spec: &ProblemSpec, mats: &FemMatrices, consts: &StabilityConstants, sol: &ModeSolution, tau: &[Rt0Field]) -> ModeCostMajorant {
    let (c_d, s_d) = spec.desired.coeffs[sol.k];
    let profile = spec.desired.profile;
    let mut mis = profile.misfit_sq(mesh, &sol.y.cos, c_d);
    if sol.k > 0 {
        mis += profile.misfit_sq(mesh, &sol.y.sin, s_d);
    }
    let u = sol.control(spec.lambda);
    let uu: f64 = u.parts().iter().map(|v| mats.full_mass.quad_form(v)).sum();
    let r2: f64 = tau
        .iter()
        .zip(sol.y.parts())
        .map(|(f, v)| f.distance_sq_to_piecewise_constant(mesh, &scaled_gradients(mesh, v, &mats.nu, 1.0)))
        .sum();
    let r1 = cost_residual_sq(mesh, spec, mats, &sol.y, &u, tau);
    let cf2 = consts.friedrichs * consts.friedrichs;
    let m2 = 2.0 * consts.mu1_under * consts.mu1_under;
    let a = 0.5 * mis;
    let young = optimize_young(a, cf2 * r2 / m2, cf2 * cf2 * r1 / m2);
    let control = 0.5 * spec.lambda * uu;
    ModeCostMajorant { k: sol.k, misfit: a, control, residual_flux_sq: r2, residual_equation_sq: r1, young, value: young.value + control }
}

/// J⊕ = T·J⊕₀ + (T/2)Σ J⊕_k + ½E_N (tail Young parameter sent to 0).
pub fn cost_majorant_total(parts: &[ModeCostMajorant], period: f64, remainder: f64) -> f64 {
    parts.iter().map(|p| mode_weight(p.k, period) * p.value).sum::<f64>() + 0.5 * remainder
}

/// Ratio majorant / reference, undefined for a vanishing or non-finite reference.
pub fn efficiency(majorant: f64, reference: f64) -> Option<f64> {
    if reference > 0.0 && reference.is_finite() && majorant.is_finite() {
        Some(majorant / reference)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_unit_coefficients() {
        let c = StabilityConstants::new(0.1, (1.0, 1.0), (1.0, 1.0), 0.225);
        assert!((c.mu1_tilde - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.mu1_under - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.mu2 - 10.0).abs() < 1e-15);
        let expect = 1.0 * 0.1f64.sqrt() / 21f64.sqrt();
        assert!((c.mu1 - expect).abs() < 1e-15);
    }

    #[test]
    fn young_unit_case() {
        let o = optimize_young(1.0, 1.0, 1.0);
        assert!((o.beta - 1.0).abs() < 1e-15);
        assert!((o.alpha - 2.0).abs() < 1e-15);
        assert!((o.value - 9.0).abs() < 1e-13);
        assert!((young_value(1.0, 1.0, 1.0, o.alpha, o.beta) - 9.0).abs() < 1e-13);
    }

    #[test]
    fn young_degenerate_limits() {
        let o = optimize_young(2.5, 0.0, 0.0);
        assert_eq!((o.alpha, o.value), (0.0, 2.5));
        assert_eq!(optimize_young(0.0, 0.0, 4.0).value, 4.0);
        assert_eq!(optimize_young(0.0, 0.0, 0.0).value, 0.0);
        let o = optimize_young(1.0, 0.0, 4.0);
        assert!(o.beta.is_infinite() && (o.value - 9.0).abs() < 1e-14);
        let o = optimize_young(1.0, 4.0, 0.0);
        assert!(o.beta == 0.0 && (o.value - 9.0).abs() < 1e-14);
    }

    #[test]
    fn zero_residuals_give_zero_majorants() {
        let c = StabilityConstants::new(0.1, (1.0, 1.0), (1.0, 1.0), 0.225);
        let r = vec![ModeResiduals { k: 0, ..Default::default() }, ModeResiduals { k: 1, ..Default::default() }];
        assert_eq!(majorant_seminorm(&r, &c, 1.0, 0.0), 0.0);
        assert_eq!(majorant_full_norm(&r, &c, 1.0, 0.0), 0.0);
        assert_eq!(mode_majorant(&r[1], 0.225), 0.0);
    }

    #[test]
    fn efficiency_undefined_for_zero_reference() {
        assert_eq!(efficiency(1.0, 0.0), None);
        assert_eq!(efficiency(3.0, 2.0), Some(1.5));
    }
}
