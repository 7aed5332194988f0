//! P1 mass and stiffness matrices and load vectors on interior dofs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::MIDEDGE;
use crate::sparse::Csr;

/// A positive, bounded spatial coefficient with known bounds.
#[derive(Clone)]
pub struct Coefficient {
    f: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    pub lower: f64,
    pub upper: f64,
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Coefficient[{}, {}]", self.lower, self.upper)
    }
}

impl Coefficient {
    pub fn constant(v: f64) -> Coefficient {
        Coefficient { f: Arc::new(move |_| v), lower: v, upper: v }
    }

    pub fn new(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static, lower: f64, upper: f64) -> Coefficient {
        Coefficient { f: Arc::new(f), lower, upper }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        (self.f)(x)
    }

    /// Centroid samples, one per triangle.
    pub fn per_triangle(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        (0..mesh.num_triangles())
            .map(|t| {
                let v = self.eval(mesh.centroid(t));
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidInput(format!("coefficient sample {v} on triangle {t} is not positive")))
                }
            })
            .collect()
    }
}

/// Matrices over all nodes (before the Dirichlet restriction) and over interior dofs.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub mass: Csr,
    pub mass_sigma: Csr,
    pub stiffness: Csr,
    pub full_mass: Csr,
    pub full_mass_sigma: Csr,
    pub full_stiffness: Csr,
    pub sigma: Vec<f64>,
    pub nu: Vec<f64>,
}

fn element_mass(area: f64, c: f64) -> [[f64; 3]; 3] {
    let mut m = [[c * area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c * area / 6.0;
    }
    m
}

pub fn assemble(mesh: &Mesh, sigma: &Coefficient, nu: &Coefficient) -> Result<FemMatrices> {
    let sig = sigma.per_triangle(mesh)?;
    let nut = nu.per_triangle(mesh)?;
    let nn = mesh.num_nodes();
    let cap = 9 * mesh.num_triangles();
    let (mut tm, mut ts, mut tk) = (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.signed_area(t);
        let g = mesh.basis_gradients(t);
        let me = element_mass(area, 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let k = nut[t] * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                tm.push((tri[i], tri[j], me[i][j]));
                ts.push((tri[i], tri[j], sig[t] * me[i][j]));
                tk.push((tri[i], tri[j], k));
            }
        }
    }
    let full_mass = symmetrize(Csr::from_triplets(nn, nn, &tm)?);
    let full_mass_sigma = symmetrize(Csr::from_triplets(nn, nn, &ts)?);
    let full_stiffness = symmetrize(Csr::from_triplets(nn, nn, &tk)?);
    let interior = mesh.interior_nodes();
    Ok(FemMatrices {
        mass: full_mass.restrict(&interior),
        mass_sigma: full_mass_sigma.restrict(&interior),
        stiffness: full_stiffness.restrict(&interior),
        full_mass,
        full_mass_sigma,
        full_stiffness,
        sigma: sig,
        nu: nut,
    })
}

fn symmetrize(a: Csr) -> Csr {
    let at = a.transpose();
    let mut out = a;
    for (v, w) in out.values.iter_mut().zip(&at.values) {
        *v = 0.5 * (*v + *w);
    }
    out
}

/// Load vector ∫ g φ_j over interior dofs, mid-edge rule per triangle.
pub fn assemble_load(mesh: &Mesh, g: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut full = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.signed_area(t);
        for (l, w) in MIDEDGE.iter() {
            let v = g(mesh.point(t, *l));
            for i in 0..3 {
                full[tri[i]] += w * area * v * l[i];
            }
        }
    }
    crate::mesh::restrict_to_interior(mesh, &full)
}

/// Load vector for data that is constant on each triangle (exact integration).
pub fn assemble_load_piecewise(mesh: &Mesh, values: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.num_triangles() {
        let share = values[t] * mesh.signed_area(t) / 3.0;
        for &i in &mesh.triangles[t] {
            full[i] += share;
        }
    }
    crate::mesh::restrict_to_interior(mesh, &full)
}
