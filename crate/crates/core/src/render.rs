//! Software depth rasterizer and visibility masks.
//!
//! Rendering is deterministic: triangles are processed in mesh order,
//! pixels are sampled at their centers with a top-left fill rule (no
//! gaps or double coverage between adjacent triangles), z-buffer ties
//! keep the smaller depth, and the whole pass is pure f64 arithmetic.

use thiserror::Error;

use crate::geom::{CameraIntrinsics, RigidPose, TriMesh, Vector3};
use crate::Scalar;

/// Near-plane distance in millimeters; triangles are clipped here.
/// There is no far plane.
pub const Z_NEAR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("depth map needs {expected} values, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("depth values must be finite and non-negative")]
    BadValue,
}

/// Row-major depth image in millimeters; 0 means "no surface".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<S> {
    width: u32,
    height: u32,
    values: Vec<S>,
}

impl<S: Scalar> DepthMap<S> {
    pub fn new(width: u32, height: u32, values: Vec<S>) -> Result<Self, RenderError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(RenderError::BadLength {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < S::zero()) {
            return Err(RenderError::BadValue);
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![S::zero(); width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> S {
        self.values[y as usize * self.width as usize + x as usize]
    }

    fn same_dims_as(&self, other: &Self) -> Result<(), RenderError> {
        if self.width != other.width || self.height != other.height {
            return Err(RenderError::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            });
        }
        Ok(())
    }
}

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl VisibilityMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, RenderError> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(RenderError::BadLength {
                expected,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

#[inline]
fn edge<S: Scalar>(a: [S; 2], b: [S; 2], p: [S; 2]) -> S {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Top-left ownership: horizontal edges pointing +x own their pixels
/// (interior lies below in y-down coordinates), as do edges pointing −y.
#[inline]
fn is_top_left<S: Scalar>(a: [S; 2], b: [S; 2]) -> bool {
    (a[1] == b[1] && b[0] > a[0]) || b[1] < a[1]
}

struct Raster<'a, S> {
    k: &'a CameraIntrinsics<S>,
    depth: Vec<S>,
}

impl<S: Scalar> Raster<'_, S> {
    fn draw_triangle(&mut self, cam: [Vector3<S>; 3]) {
        let (w, h) = (self.k.width as usize, self.k.height as usize);
        let mut scr = [[S::zero(); 2]; 3];
        for (s, c) in scr.iter_mut().zip(cam.iter()) {
            *s = self.k.project_unchecked(*c);
        }
        let mut z = [cam[0].z, cam[1].z, cam[2].z];

        let mut area2 = edge(scr[0], scr[1], scr[2]);
        if area2 == S::zero() {
            return;
        }
        if area2 < S::zero() {
            scr.swap(1, 2);
            z.swap(1, 2);
            area2 = -area2;
        }

        let half = S::from_f64(0.5);
        let min_x = scr[0][0].min(scr[1][0]).min(scr[2][0]);
        let max_x = scr[0][0].max(scr[1][0]).max(scr[2][0]);
        let min_y = scr[0][1].min(scr[1][1]).min(scr[2][1]);
        let max_y = scr[0][1].max(scr[1][1]).max(scr[2][1]);
        let x_lo = (min_x - half).floor().to_i64().unwrap_or(0).max(0) as usize;
        let y_lo = (min_y - half).floor().to_i64().unwrap_or(0).max(0) as usize;
        let x_hi = (max_x - half)
            .ceil()
            .to_i64()
            .unwrap_or(w as i64)
            .clamp(-1, w as i64 - 1) as isize;
        let y_hi = (max_y - half)
            .ceil()
            .to_i64()
            .unwrap_or(h as i64)
            .clamp(-1, h as i64 - 1) as isize;
        if x_hi < x_lo as isize || y_hi < y_lo as isize {
            return;
        }

        let uniform_z = z[0] == z[1] && z[0] == z[2];
        let inv_z = [S::one() / z[0], S::one() / z[1], S::one() / z[2]];
        let own = [
            is_top_left(scr[1], scr[2]),
            is_top_left(scr[2], scr[0]),
            is_top_left(scr[0], scr[1]),
        ];

        for py in y_lo..=(y_hi as usize) {
            for px in x_lo..=(x_hi as usize) {
                let p = [
                    S::from_f64(px as f64) + half,
                    S::from_f64(py as f64) + half,
                ];
                // e[i] is the edge opposite vertex i, so e[i]/area2 is
                // the barycentric weight of vertex i.
                let e = [
                    edge(scr[1], scr[2], p),
                    edge(scr[2], scr[0], p),
                    edge(scr[0], scr[1], p),
                ];
                let covered = (0..3).all(|i| {
                    e[i] > S::zero() || (e[i] == S::zero() && own[i])
                });
                if !covered {
                    continue;
                }
                let d = if uniform_z {
                    z[0]
                } else {
                    let w_sum = (e[0] * inv_z[0] + e[1] * inv_z[1] + e[2] * inv_z[2]) / area2;
                    S::one() / w_sum
                };
                let cell = &mut self.depth[py * w + px];
                if *cell == S::zero() || d < *cell {
                    *cell = d;
                }
            }
        }
    }
}

/// Clips a camera-space triangle to z ≥ [`Z_NEAR`]; returns 0–4 vertices.
fn clip_near<S: Scalar>(tri: [Vector3<S>; 3]) -> Vec<Vector3<S>> {
    let znear = S::from_f64(Z_NEAR);
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.z >= znear;
        let b_in = b.z >= znear;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let s = (znear - a.z) / (b.z - a.z);
            let mut p = a + (b - a).scale(s);
            p.z = znear; // pin to the plane against rounding drift
            out.push(p);
        }
    }
    out
}

/// Renders a z-buffered depth image of `mesh` under `pose`.
///
/// Per-pixel depth is the perspective-correct interpolated camera-space
/// z at the pixel center; uncovered pixels hold 0. Back faces are kept:
/// meshes are not guaranteed watertight or consistently wound.
pub fn rasterize_depth<S: Scalar>(
    mesh: &TriMesh<S>,
    pose: &RigidPose<S>,
    k: &CameraIntrinsics<S>,
) -> DepthMap<S> {
    let cam: Vec<Vector3<S>> = mesh
        .vertices()
        .iter()
        .map(|&v| pose.transform_point(v))
        .collect();

    let mut raster = Raster {
        k,
        depth: vec![S::zero(); k.width as usize * k.height as usize],
    };

    for tri in mesh.triangles() {
        let corners = [
            cam[tri[0] as usize],
            cam[tri[1] as usize],
            cam[tri[2] as usize],
        ];
        let poly = clip_near(corners);
        for i in 1..poly.len().saturating_sub(1) {
            raster.draw_triangle([poly[0], poly[i], poly[i + 1]]);
        }
    }

    DepthMap {
        width: k.width,
        height: k.height,
        values: raster.depth,
    }
}

/// Per-pixel visibility of a rendered object against the scene depth:
/// visible iff the render has a surface and the scene either has no
/// depth there or does not occlude it by more than `delta`.
pub fn visibility_mask<S: Scalar>(
    rendered: &DepthMap<S>,
    scene: &DepthMap<S>,
    delta: S,
) -> Result<VisibilityMask, RenderError> {
    rendered.same_dims_as(scene)?;
    let bits = rendered
        .values
        .iter()
        .zip(scene.values.iter())
        .map(|(&r, &s)| r > S::zero() && (s == S::zero() || r <= s + delta))
        .collect();
    Ok(VisibilityMask {
        width: rendered.width,
        height: rendered.height,
        bits,
    })
}
