//! The three benchmark problems: desired states, manufactured exact solutions
//! and the error denominators used for efficiency indices.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::assembly::{assemble_load, assemble_load_piecewise, FemMatrices};
use crate::error::{Error, Result};
use crate::fourier::{modal_coefficients, remainder_term, ModalField};
use crate::mesh::Mesh;
use crate::quadrature::{integrate, DEGREE5};

/// Spatial shape of a separable desired state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpatialProfile {
    /// sin(πx₁) sin(πx₂), a Dirichlet eigenfunction with eigenvalue 2π².
    SineBump,
    /// Indicator of the upper-right quarter [1/2, 1]².
    CornerIndicator,
}

impl SpatialProfile {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            SpatialProfile::SineBump => (PI * x[0]).sin() * (PI * x[1]).sin(),
            SpatialProfile::CornerIndicator => {
                if x[0] >= 0.5 && x[1] >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Value at a point of triangle `t`; the indicator is taken constant per triangle,
    /// which is exact on meshes with an even number of cells per side.
    pub fn eval_on(&self, mesh: &Mesh, t: usize, x: [f64; 2]) -> f64 {
        match self {
            SpatialProfile::SineBump => self.eval(x),
            SpatialProfile::CornerIndicator => self.eval(mesh.centroid(t)),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        match self {
            SpatialProfile::SineBump => {
                Some([PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()])
            }
            SpatialProfile::CornerIndicator => None,
        }
    }

    /// ‖profile‖²_Ω (both profiles give 1/4).
    pub fn norm_sq(&self) -> f64 {
        0.25
    }

    /// Eigenvalue of -Δ when the profile is a Dirichlet eigenfunction.
    pub fn laplace_eigenvalue(&self) -> Option<f64> {
        match self {
            SpatialProfile::SineBump => Some(2.0 * PI * PI),
            SpatialProfile::CornerIndicator => None,
        }
    }

    /// Load vector ∫ profile φ_j over interior dofs.
    pub fn load(&self, mesh: &Mesh) -> Vec<f64> {
        match self {
            SpatialProfile::SineBump => assemble_load(mesh, &|x| self.eval(x)),
            SpatialProfile::CornerIndicator => {
                let vals: Vec<f64> = (0..mesh.num_triangles()).map(|t| self.eval(mesh.centroid(t))).collect();
                assemble_load_piecewise(mesh, &vals)
            }
        }
    }

    /// ∫_Ω (v - c·profile)² for a nodal P1 field `v`.
    pub fn misfit_sq(&self, mesh: &Mesh, v: &[f64], c: f64) -> f64 {
        let mut s = 0.0;
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles[t];
            let area = mesh.signed_area(t);
            for (l, w) in DEGREE5.iter() {
                let x = mesh.point(t, *l);
                let vh = l[0] * v[tri[0]] + l[1] * v[tri[1]] + l[2] * v[tri[2]];
                s += w * area * (vh - c * self.eval_on(mesh, t, x)).powi(2);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExampleId {
    One,
    Two,
    Three,
}

impl ExampleId {
    pub fn from_number(n: u8) -> Result<ExampleId> {
        match n {
            1 => Ok(ExampleId::One),
            2 => Ok(ExampleId::Two),
            3 => Ok(ExampleId::Three),
            _ => Err(Error::InvalidInput(format!("unknown example {n}"))),
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            ExampleId::One => 1,
            ExampleId::Two => 2,
            ExampleId::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExampleDefinition {
    pub id: ExampleId,
    pub lambda: f64,
    pub period: f64,
    pub profile: SpatialProfile,
}

/// Exact modal coefficients of state and adjoint for a separable problem
/// (amplitudes multiplying the spatial profile).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMode {
    pub k: usize,
    pub y: (f64, f64),
    pub p: (f64, f64),
}

impl ExampleDefinition {
    pub fn new(id: ExampleId) -> ExampleDefinition {
        match id {
            ExampleId::One | ExampleId::Two => {
                ExampleDefinition { id, lambda: 0.1, period: 2.0 * PI, profile: SpatialProfile::SineBump }
            }
            ExampleId::Three => ExampleDefinition { id, lambda: 0.01, period: 1.0, profile: SpatialProfile::CornerIndicator },
        }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Temporal factor of the desired state.
    pub fn desired_signal(&self, t: f64) -> f64 {
        match self.id {
            ExampleId::One => {
                let (s, c) = t.sin_cos();
                t.exp() * s / 10.0 * ((12.0 + 4.0 * PI.powi(4)) * s * s - 6.0 * c * c - 6.0 * s * c)
            }
            ExampleId::Two => {
                let (s, c) = t.sin_cos();
                t.exp() / 10.0 * (-2.0 * c + (10.0 + 4.0 * PI.powi(4)) * s)
            }
            ExampleId::Three => {
                let r = t.rem_euclid(1.0);
                if (0.25..=0.75).contains(&r) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Desired-state coefficients (c_k, s_k) for k = 0..=kmax.
    pub fn desired_coefficients(&self, kmax: usize) -> Result<Vec<(f64, f64)>> {
        match self.id {
            ExampleId::Three => Ok((0..=kmax)
                .map(|k| {
                    if k == 0 {
                        (0.5, 0.0)
                    } else if k % 2 == 0 {
                        (0.0, 0.0)
                    } else {
                        let kf = k as f64;
                        (((1.5 * kf * PI).sin() - (0.5 * kf * PI).sin()) / (kf * PI), 0.0)
                    }
                })
                .collect()),
            _ => modal_coefficients(&|t| self.desired_signal(t), kmax, self.period, 1e-13),
        }
    }

    /// ∫₀ᵀ g_d(t)² dt for the temporal factor of the desired state.
    pub fn desired_energy(&self) -> Result<f64> {
        match self.id {
            ExampleId::Three => Ok(0.5),
            _ => integrate(&|t| self.desired_signal(t).powi(2), 0.0, self.period, 64, 1e-13, 0.0),
        }
    }

    pub fn remainder(&self, n: usize) -> Result<f64> {
        let c = self.desired_coefficients(n)?;
        remainder_term(self.desired_energy()?, &c, n, self.period, self.profile.norm_sq())
    }

    /// Temporal factor of the exact state and its derivative (Examples 1 and 2).
    pub fn state_signal(&self, t: f64) -> Result<(f64, f64)> {
        let (s, c) = t.sin_cos();
        let e = t.exp();
        match self.id {
            ExampleId::One => Ok((e * s.powi(3), e * (s.powi(3) + 3.0 * s * s * c))),
            ExampleId::Two => Ok((e * s, e * (s + c))),
            ExampleId::Three => Err(Error::InvalidInput("example 3 has no closed-form state".into())),
        }
    }

    pub fn exact_state(&self, x: [f64; 2], t: f64) -> Result<f64> {
        Ok(self.state_signal(t)?.0 * self.profile.eval(x))
    }

    /// u = σ∂_t y - div(ν∇y) with σ = ν = 1.
    pub fn exact_control(&self, x: [f64; 2], t: f64) -> Result<f64> {
        let (g, dg) = self.state_signal(t)?;
        Ok((dg + 2.0 * PI * PI * g) * self.profile.eval(x))
    }

    /// p = -λu.
    pub fn exact_adjoint(&self, x: [f64; 2], t: f64) -> Result<f64> {
        Ok(-self.lambda * self.exact_control(x, t)?)
    }

    /// Exact periodic modal solution for a desired-state coefficient pair,
    /// available when the profile is a Laplace eigenfunction (σ = ν = 1).
    pub fn exact_mode(&self, k: usize, yd: (f64, f64)) -> Result<ExactMode> {
        let mu = self
            .profile
            .laplace_eigenvalue()
            .ok_or_else(|| Error::InvalidInput("no closed-form modal solution for this profile".into()))?;
        let kw = k as f64 * self.omega();
        let il = 1.0 / self.lambda;
        #[rustfmt::skip]
        let a = Matrix4::new(
            1.0, 0.0, -mu, kw,
            0.0, 1.0, -kw, -mu,
            -mu, -kw, -il, 0.0,
            kw, -mu, 0.0, -il,
        );
        let rhs = Vector4::new(yd.0, if k == 0 { 0.0 } else { yd.1 }, 0.0, 0.0);
        let x = a.lu().solve(&rhs).ok_or(Error::Singular)?;
        if k == 0 {
            Ok(ExactMode { k, y: (x[0], 0.0), p: (x[2], 0.0) })
        } else {
            Ok(ExactMode { k, y: (x[0], x[1]), p: (x[2], x[3]) })
        }
    }

    /// Exact modal cost ½‖y_k - y_{d,k}‖² + (λ/2)‖u_k‖².
    pub fn exact_mode_cost(&self, m: &ExactMode, yd: (f64, f64)) -> f64 {
        let ns = self.profile.norm_sq();
        let mis = (m.y.0 - yd.0).powi(2) + (m.y.1 - yd.1).powi(2);
        let u = (m.p.0.powi(2) + m.p.1.powi(2)) / (self.lambda * self.lambda);
        ns * (0.5 * mis + 0.5 * self.lambda * u)
    }
}

/// Squared error parts of one mode, summed over cosine and sine components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ModeError {
    /// ‖∇(y - η)‖² + ‖∇(p - ζ)‖².
    pub grad_sq: f64,
    /// ‖y - η‖² + ‖p - ζ‖².
    pub l2_sq: f64,
}

impl ModeError {
    /// Gradient seminorm of the pair.
    pub fn h1semi(&self) -> f64 {
        self.grad_sq.sqrt()
    }

    /// Adds the kω-weighted L² term of the half-time seminorm.
    pub fn weighted(&self, k: usize, omega: f64) -> f64 {
        (self.grad_sq + k as f64 * omega * self.l2_sq).sqrt()
    }
}

const SUBDIVISIONS: usize = 4;

/// Error of P1 fields against amplitude·profile, integrated on a 4×4 subdivision
/// of every triangle with the degree-5 rule.
pub fn exact_mode_error(mesh: &Mesh, profile: SpatialProfile, eta: &ModalField, zeta: &ModalField, exact: &ExactMode) -> Result<ModeError> {
    if profile.gradient([0.5, 0.5]).is_none() {
        return Err(Error::InvalidInput("exact errors need a smooth profile".into()));
    }
    let pairs: Vec<(&[f64], f64)> = if eta.k == 0 {
        vec![(&eta.cos, exact.y.0), (&zeta.cos, exact.p.0)]
    } else {
        vec![(&eta.cos, exact.y.0), (&eta.sin, exact.y.1), (&zeta.cos, exact.p.0), (&zeta.sin, exact.p.1)]
    };
    let m = SUBDIVISIONS as f64;
    let mut out = ModeError::default();
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.signed_area(t) / (m * m);
        let grads: Vec<[f64; 2]> = pairs.iter().map(|(v, _)| mesh.gradient(t, v)).collect();
        for sub in sub_triangles(SUBDIVISIONS) {
            for (l, w) in DEGREE5.iter() {
                // barycentric coordinates of the quadrature point in the parent
                let mut b = [0.0; 3];
                for c in 0..3 {
                    for v in 0..3 {
                        b[c] += l[v] * sub[v][c];
                    }
                }
                let x = mesh.point(t, b);
                let phi = profile.eval(x);
                let gphi = profile.gradient(x).expect("smooth profile");
                for ((v, amp), g) in pairs.iter().zip(&grads) {
                    let vh = b[0] * v[tri[0]] + b[1] * v[tri[1]] + b[2] * v[tri[2]];
                    out.l2_sq += w * area * (amp * phi - vh).powi(2);
                    out.grad_sq += w * area * ((amp * gphi[0] - g[0]).powi(2) + (amp * gphi[1] - g[1]).powi(2));
                }
            }
        }
    }
    Ok(out)
}

/// Barycentric vertices of the m² congruent sub-triangles of the parent.
fn sub_triangles(m: usize) -> Vec<[[f64; 3]; 3]> {
    let mf = m as f64;
    let bary = |i: usize, j: usize| -> [f64; 3] {
        let (a, b) = (i as f64 / mf, j as f64 / mf);
        [1.0 - a - b, a, b]
    };
    let mut out = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..(m - j) {
            out.push([bary(i, j), bary(i + 1, j), bary(i, j + 1)]);
            if i + j + 1 < m {
                out.push([bary(i + 1, j), bary(i + 1, j + 1), bary(i, j + 1)]);
            }
        }
    }
    out
}

/// Error of coarse fields against a reference solution on a nested finer mesh.
/// The coarse P1 functions are represented exactly on the fine mesh.
pub fn reference_mode_error(
    coarse: &Mesh,
    fine: &Mesh,
    fine_mats: &FemMatrices,
    eta: &ModalField,
    zeta: &ModalField,
    y_ref: &ModalField,
    p_ref: &ModalField,
) -> Result<ModeError> {
    if fine.n % coarse.n != 0 {
        return Err(Error::InvalidInput(format!("mesh {} is not nested in {}", coarse.n, fine.n)));
    }
    let mut out = ModeError::default();
    let pairs: Vec<(&[f64], &[f64])> = eta
        .parts()
        .into_iter()
        .zip(y_ref.parts())
        .chain(zeta.parts().into_iter().zip(p_ref.parts()))
        .collect();
    for (c, r) in pairs {
        let diff: Vec<f64> = fine.nodes.iter().zip(r).map(|(x, rv)| rv - coarse.interpolate(c, *x)).collect();
        out.grad_sq += fine_mats.full_stiffness.quad_form(&diff);
        out.l2_sq += fine_mats.full_mass.quad_form(&diff);
    }
    Ok(out)
}
