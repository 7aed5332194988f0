//! Uniform right-triangle meshes of the unit square.
//!
//! Every square cell is split by its lower-left to upper-right diagonal.
//! Nodes are numbered lexicographically with x running fastest.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// An edge with a global orientation from `nodes[0]` to `nodes[1]` (lower index first).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub nodes: [usize; 2],
    /// Adjacent triangles; boundary edges have `None` in the second slot.
    pub triangles: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// For each triangle, the edge opposite to local vertex `i`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// +1 when the global edge normal points out of the triangle, -1 otherwise.
    pub triangle_edge_signs: Vec<[f64; 3]>,
    pub boundary: Vec<bool>,
}

impl Mesh {
    pub fn uniform(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidInput("mesh needs at least one cell per side".into()));
        }
        let h = 1.0 / n as f64;
        let np = n + 1;
        let mut nodes = Vec::with_capacity(np * np);
        let mut boundary = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                nodes.push([i as f64 * h, j as f64 * h]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * np + i;
                let b = a + 1;
                let c = a + np + 1;
                let d = a + np;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * n * n + 2 * n);
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * n * n + 2 * n);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut triangle_edge_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            let mut ts = [0.0f64; 3];
            for i in 0..3 {
                let p = tri[(i + 1) % 3];
                let q = tri[(i + 2) % 3];
                let key = (p.min(q), p.max(q));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge { nodes: [key.0, key.1], triangles: [None, None] });
                    edges.len() - 1
                });
                let slot = &mut edges[e].triangles;
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    slot[1] = Some(t);
                }
                te[i] = e;
                // the CCW traversal p -> q has the outward normal on its right;
                // the global normal of a -> b is also the right-hand normal
                ts[i] = if p < q { 1.0 } else { -1.0 };
            }
            triangle_edges.push(te);
            triangle_edge_signs.push(ts);
        }

        Ok(Mesh { n, h, nodes, triangles, edges, triangle_edges, triangle_edge_signs, boundary })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p0, p1, p2] = self.vertices(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.vertices(t);
        let twice = 2.0 * self.signed_area(t);
        [
            [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
            [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
            [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
        ]
    }

    /// Constant gradient of a nodal P1 field on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> [f64; 2] {
        let g = self.basis_gradients(t);
        let tri = self.triangles[t];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] += g[i][0] * values[tri[i]];
            out[1] += g[i][1] * values[tri[i]];
        }
        out
    }

    /// Point in triangle `t` with barycentric coordinates `l`.
    pub fn point(&self, t: usize, l: [f64; 3]) -> [f64; 2] {
        let v = self.vertices(t);
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].nodes;
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Unit normal of edge `e`: the tangent a -> b rotated clockwise.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].nodes;
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let len = self.edge_length(e);
        [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len]
    }

    /// Maps node index to interior dof index (boundary nodes map to `None`).
    pub fn interior_index_map(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.boundary
            .iter()
            .map(|&b| {
                if b {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn num_interior(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Evaluates a nodal P1 field at an arbitrary point of the unit square.
    pub fn interpolate(&self, values: &[f64], x: [f64; 2]) -> f64 {
        let n = self.n;
        let s = x[0] * n as f64;
        let r = x[1] * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let j = (r.floor() as usize).min(n - 1);
        let xi = s - i as f64;
        let eta = r - j as f64;
        let np = n + 1;
        let a = j * np + i;
        let (va, vb, vc, vd) = (values[a], values[a + 1], values[a + np + 1], values[a + np]);
        if xi >= eta {
            va + xi * (vb - va) + eta * (vc - vb)
        } else {
            va + eta * (vd - va) + xi * (vc - vd)
        }
    }
}

/// Scatters interior dof values into a full nodal vector with zero boundary values.
pub fn extend_by_zero(mesh: &Mesh, interior: &[f64]) -> Vec<f64> {
    let map = mesh.interior_index_map();
    map.iter().map(|m| m.map_or(0.0, |i| interior[i])).collect()
}

/// Restricts a full nodal vector to interior dofs.
pub fn restrict_to_interior(mesh: &Mesh, full: &[f64]) -> Vec<f64> {
    mesh.interior_nodes().iter().map(|&i| full[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_meshes() {
        let m = Mesh::uniform(1).unwrap();
        assert_eq!((m.num_nodes(), m.num_triangles(), m.edges.len(), m.num_interior()), (4, 2, 5, 0));
        let m = Mesh::uniform(2).unwrap();
        assert_eq!((m.num_nodes(), m.num_triangles(), m.edges.len(), m.num_interior()), (9, 8, 16, 1));
        assert_eq!(m.interior_index_map()[4], Some(0));
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(Mesh::uniform(0).is_err());
    }

    #[test]
    fn areas_and_counts() {
        let m = Mesh::uniform(16).unwrap();
        assert_eq!(m.num_nodes(), 289);
        assert_eq!(m.num_triangles(), 512);
        let total: f64 = (0..m.num_triangles()).map(|t| m.signed_area(t)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for t in 0..m.num_triangles() {
            assert!((m.signed_area(t) - m.h * m.h / 2.0).abs() < 1e-15);
        }
        assert_eq!(m.num_interior(), 225);
    }

    #[test]
    fn interior_map_is_bijective() {
        let m = Mesh::uniform(3).unwrap();
        let mut seen: Vec<usize> = m.interior_index_map().into_iter().flatten().collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn edge_adjacency_consistent() {
        let m = Mesh::uniform(5).unwrap();
        for (t, te) in m.triangle_edges.iter().enumerate() {
            for &e in te {
                assert!(m.edges[e].triangles.contains(&Some(t)));
            }
        }
        for (e, edge) in m.edges.iter().enumerate() {
            for t in edge.triangles.iter().flatten() {
                assert!(m.triangle_edges[*t].contains(&e));
            }
            let on_boundary = m.boundary[edge.nodes[0]] && m.boundary[edge.nodes[1]] && {
                let (a, b) = (m.nodes[edge.nodes[0]], m.nodes[edge.nodes[1]]);
                (a[0] == b[0] && (a[0] == 0.0 || a[0] == 1.0)) || (a[1] == b[1] && (a[1] == 0.0 || a[1] == 1.0))
            };
            assert_eq!(edge.is_boundary(), on_boundary);
        }
    }

    #[test]
    fn edge_signs_point_outward() {
        let m = Mesh::uniform(4).unwrap();
        for t in 0..m.num_triangles() {
            let c = m.centroid(t);
            for i in 0..3 {
                let e = m.triangle_edges[t][i];
                let [a, b] = m.edges[e].nodes;
                let mid = [(m.nodes[a][0] + m.nodes[b][0]) / 2.0, (m.nodes[a][1] + m.nodes[b][1]) / 2.0];
                let nrm = m.edge_normal(e);
                let dot = nrm[0] * (mid[0] - c[0]) + nrm[1] * (mid[1] - c[1]);
                assert_eq!(dot > 0.0, m.triangle_edge_signs[t][i] > 0.0);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let m = Mesh::uniform(3).unwrap();
        let v: Vec<f64> = m.nodes.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 0.5).collect();
        for &x in &[[0.1, 0.7], [0.99, 0.01], [1.0, 1.0], [0.5, 0.5]] {
            assert!((m.interpolate(&v, x) - (2.0 * x[0] - 3.0 * x[1] + 0.5)).abs() < 1e-13);
        }
    }
}
