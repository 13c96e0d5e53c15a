use super::{GeomError, Vector3};
use crate::Scalar;

/// Indexed triangle mesh in model coordinates (millimeters).
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<S> {
    vertices: Vec<Vector3<S>>,
    triangles: Vec<[u32; 3]>,
}

impl<S: Scalar> TriMesh<S> {
    pub fn new(vertices: Vec<Vector3<S>>, triangles: Vec<[u32; 3]>) -> Result<Self, GeomError> {
        if vertices.is_empty() {
            return Err(GeomError::EmptyMesh);
        }
        if let Some(bad) = vertices.iter().position(|v| !v.is_finite()) {
            let _ = bad;
            return Err(GeomError::NonFinite { what: "vertex" });
        }
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(GeomError::TriangleIndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: n,
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[Vector3<S>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Maximum pairwise vertex distance.
    ///
    /// The models_info file carries the authoritative object diameter;
    /// this recomputation is used to sanity-check fixture meshes.
    pub fn diameter(&self) -> S {
        let mut best = S::zero();
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm_squared());
            }
        }
        best.sqrt()
    }
}
