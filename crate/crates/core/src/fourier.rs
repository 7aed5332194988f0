//! Modal fields in time: cosine/sine coefficient pairs per frequency, the
//! rotation between them, modal norms and the truncation remainder.

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::sparse::Csr;

/// Spatial coefficients of one temporal mode, stored as full nodal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField {
    pub k: usize,
    pub cos: Vec<f64>,
    /// Empty for the mean mode.
    pub sin: Vec<f64>,
}

impl ModalField {
    pub fn new(k: usize, cos: Vec<f64>, sin: Vec<f64>) -> Result<ModalField> {
        if k == 0 && sin.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidInput("mean mode has no sine part".into()));
        }
        if k > 0 && sin.len() != cos.len() {
            return Err(Error::DimensionMismatch { expected: cos.len(), got: sin.len() });
        }
        let sin = if k == 0 { Vec::new() } else { sin };
        Ok(ModalField { k, cos, sin })
    }

    pub fn zeros(k: usize, len: usize) -> ModalField {
        ModalField { k, cos: vec![0.0; len], sin: if k == 0 { Vec::new() } else { vec![0.0; len] } }
    }

    /// Cosine and (for k ≥ 1) sine component vectors.
    pub fn parts(&self) -> Vec<&[f64]> {
        if self.k == 0 {
            vec![&self.cos]
        } else {
            vec![&self.cos, &self.sin]
        }
    }

    pub fn scaled(&self, s: f64) -> ModalField {
        ModalField {
            k: self.k,
            cos: self.cos.iter().map(|v| s * v).collect(),
            sin: self.sin.iter().map(|v| s * v).collect(),
        }
    }

    /// The rotated field (cos, sin) -> (sin, -cos).
    ///
    /// With this convention the time derivative of the mode is kω times its rotation.
    pub fn perp(&self) -> Result<ModalField> {
        if self.k == 0 {
            return Err(Error::InvalidInput("rotation undefined for the mean mode".into()));
        }
        Ok(ModalField { k: self.k, cos: self.sin.clone(), sin: self.cos.iter().map(|v| -v).collect() })
    }
}

/// Time weight of a mode in L²(0,T): T for the mean, T/2 otherwise.
pub fn mode_weight(k: usize, period: f64) -> f64 {
    if k == 0 {
        period
    } else {
        period / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralNorms {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub half_time_sq: f64,
}

/// Time-weighted squared norms of one mode.
pub fn modal_norms(f: &ModalField, mass: &Csr, stiffness: &Csr, period: f64) -> Result<SpectralNorms> {
    if f.cos.len() != mass.nrows {
        return Err(Error::DimensionMismatch { expected: mass.nrows, got: f.cos.len() });
    }
    let w = mode_weight(f.k, period);
    let omega = 2.0 * std::f64::consts::PI / period;
    let m: f64 = f.parts().iter().map(|v| mass.quad_form(v)).sum();
    let a: f64 = f.parts().iter().map(|v| stiffness.quad_form(v)).sum();
    Ok(SpectralNorms { l2_sq: w * m, grad_sq: w * a, half_time_sq: if f.k == 0 { 0.0 } else { w * f.k as f64 * omega * m } })
}

/// ⟨σ∂_t^{1/2} y, ∂_t^{1/2} v⟩ restricted to one mode, with `mass_sigma` the σ-weighted mass.
pub fn half_derivative_product(y: &ModalField, v: &ModalField, mass_sigma: &Csr, period: f64) -> f64 {
    if y.k == 0 {
        return 0.0;
    }
    let omega = 2.0 * std::f64::consts::PI / period;
    period / 2.0 * y.k as f64 * omega * (mass_sigma.bilinear(&y.cos, &v.cos) + mass_sigma.bilinear(&y.sin, &v.sin))
}

/// ⟨σ∂_t y, v⟩ over (0,T) restricted to one mode.
pub fn time_derivative_product(y: &ModalField, v: &ModalField, mass_sigma: &Csr, period: f64) -> f64 {
    if y.k == 0 {
        return 0.0;
    }
    let omega = 2.0 * std::f64::consts::PI / period;
    let kw = y.k as f64 * omega;
    // ∂_t y has cosine part kω y_s and sine part -kω y_c
    period / 2.0 * kw * (mass_sigma.bilinear(&y.sin, &v.cos) - mass_sigma.bilinear(&y.cos, &v.sin))
}

/// Cosine/sine coefficients of a scalar T-periodic signal for modes 0..=kmax.
pub fn modal_coefficients(signal: &dyn Fn(f64) -> f64, kmax: usize, period: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    let omega = 2.0 * std::f64::consts::PI / period;
    let scale = integrate(&|t| signal(t).abs(), 0.0, period, 16, 1e-6, 0.0)?.max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let panels = 16 + 2 * k;
        let kw = k as f64 * omega;
        let c = integrate(&|t| signal(t) * (kw * t).cos(), 0.0, period, panels, tol, scale)?;
        if k == 0 {
            out.push((c / period, 0.0));
        } else {
            let s = integrate(&|t| signal(t) * (kw * t).sin(), 0.0, period, panels, tol, scale)?;
            out.push((2.0 * c / period, 2.0 * s / period));
        }
    }
    Ok(out)
}

/// ∫₀ᵀ g² dt restricted to the listed modes (Parseval).
pub fn parseval_sum(coeffs: &[(f64, f64)], period: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, (c, s))| mode_weight(k, period) * (c * c + s * s)).sum()
}

/// Tail energy of a separable desired state beyond mode N:
/// ‖profile‖² (∫₀ᵀ g² dt − Σ_{k≤N} weighted coefficient energy).
pub fn remainder_term(total_sq: f64, coeffs: &[(f64, f64)], n: usize, period: f64, profile_norm_sq: f64) -> Result<f64> {
    if coeffs.len() < n + 1 {
        return Err(Error::InvalidInput(format!("need {} coefficients, have {}", n + 1, coeffs.len())));
    }
    let head = parseval_sum(&coeffs[..=n], period);
    let tail = total_sq - head;
    if tail < -1e-9 * total_sq.abs() {
        return Err(Error::InvalidInput(format!("coefficient energy {head} exceeds signal energy {total_sq}")));
    }
    Ok(profile_norm_sq * tail.max(0.0))
}
