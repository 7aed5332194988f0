//! Lowest-order Raviart-Thomas reconstruction of P1 fluxes by edge averaging.

use crate::mesh::Mesh;
use crate::quadrature::MIDEDGE;

/// RT0 field given by its total normal flux across every edge, measured along
/// the global edge normal of the mesh it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct Rt0Field {
    pub fluxes: Vec<f64>,
}

impl Rt0Field {
    pub fn zeros(mesh: &Mesh) -> Rt0Field {
        Rt0Field { fluxes: vec![0.0; mesh.edges.len()] }
    }

    /// Value at a point `x` of triangle `t`.
    pub fn eval(&self, mesh: &Mesh, t: usize, x: [f64; 2]) -> [f64; 2] {
        let verts = mesh.vertices(t);
        let twice = 2.0 * mesh.signed_area(t);
        let mut out = [0.0; 2];
        for i in 0..3 {
            let f = mesh.triangle_edge_signs[t][i] * self.fluxes[mesh.triangle_edges[t][i]] / twice;
            out[0] += f * (x[0] - verts[i][0]);
            out[1] += f * (x[1] - verts[i][1]);
        }
        out
    }

    /// Piecewise constant divergence, one value per triangle.
    pub fn divergence(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.num_triangles())
            .map(|t| {
                let out: f64 = (0..3).map(|i| mesh.triangle_edge_signs[t][i] * self.fluxes[mesh.triangle_edges[t][i]]).sum();
                out / mesh.signed_area(t)
            })
            .collect()
    }

    /// Jumps of the normal component across interior edges, evaluated from each
    /// side's local representation at the edge midpoint.
    pub fn normal_jumps(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = Vec::new();
        for (e, edge) in mesh.edges.iter().enumerate() {
            if let [Some(a), Some(b)] = edge.triangles {
                let [p, q] = edge.nodes;
                let mid = [(mesh.nodes[p][0] + mesh.nodes[q][0]) / 2.0, (mesh.nodes[p][1] + mesh.nodes[q][1]) / 2.0];
                let n = mesh.edge_normal(e);
                let ta = self.eval(mesh, a, mid);
                let tb = self.eval(mesh, b, mid);
                out.push((ta[0] - tb[0]) * n[0] + (ta[1] - tb[1]) * n[1]);
            }
        }
        out
    }

    /// ‖τ - g‖² with g constant per triangle.
    pub fn distance_sq_to_piecewise_constant(&self, mesh: &Mesh, g: &[[f64; 2]]) -> f64 {
        let mut s = 0.0;
        for t in 0..mesh.num_triangles() {
            let area = mesh.signed_area(t);
            for (l, w) in MIDEDGE.iter() {
                let v = self.eval(mesh, t, mesh.point(t, *l));
                s += w * area * ((v[0] - g[t][0]).powi(2) + (v[1] - g[t][1]).powi(2));
            }
        }
        s
    }
}

/// Reconstructs an RT0 approximation of `scale`·ν∇v from a nodal P1 field `v`.
///
/// Interior edge fluxes are the arithmetic mean of the two adjacent triangles'
/// normal fluxes; boundary edges take the single adjacent value.
pub fn reconstruct_rt0(mesh: &Mesh, v: &[f64], nu: &[f64], scale: f64) -> Rt0Field {
    let grads: Vec<[f64; 2]> = (0..mesh.num_triangles()).map(|t| mesh.gradient(t, v)).collect();
    let fluxes = mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let n = mesh.edge_normal(e);
            let len = mesh.edge_length(e);
            let side = |t: usize| scale * nu[t] * (grads[t][0] * n[0] + grads[t][1] * n[1]) * len;
            match edge.triangles {
                [Some(a), Some(b)] => 0.5 * (side(a) + side(b)),
                [Some(a), None] => side(a),
                _ => 0.0,
            }
        })
        .collect();
    Rt0Field { fluxes }
}

/// Piecewise constant scale·ν∇v, one vector per triangle.
pub fn scaled_gradients(mesh: &Mesh, v: &[f64], nu: &[f64], scale: f64) -> Vec<[f64; 2]> {
    (0..mesh.num_triangles())
        .map(|t| {
            let g = mesh.gradient(t, v);
            [scale * nu[t] * g[0], scale * nu[t] * g[1]]
        })
        .collect()
}
