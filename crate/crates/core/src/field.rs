//! Grid fields. All storage is node-major and row-major over the mesh.

use serde::{Deserialize, Serialize};

use crate::error::{GrfError, Result};
use crate::forms::n_components;
use crate::linalg::{min_eigenvalue, Mat3, Vec3, ZERO3};
use crate::mesh::MeshSpec;
use crate::par;

/// Minimum admissible metric eigenvalue.
pub const EPS_SPD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    mesh: MeshSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(mesh: MeshSpec) -> Self {
        ScalarField { data: vec![0.0; mesh.len()], mesh }
    }

    pub fn constant(mesh: MeshSpec, c: f64) -> Self {
        ScalarField { data: vec![c; mesh.len()], mesh }
    }

    pub fn from_vec(mesh: MeshSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != mesh.len() {
            return Err(GrfError::ShapeMismatch(format!("{} values for {} nodes", data.len(), mesh.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(GrfError::NonFinite("scalar field".into()));
        }
        Ok(ScalarField { mesh, data })
    }

    /// Samples `f(x)` at node positions.
    pub fn from_fn<F>(mesh: MeshSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let data = par::map_collect(mesh.len(), |i| f(mesh.position(i)));
        ScalarField { mesh, data }
    }

    /// Node-wise map; `f` receives the node index.
    pub fn from_index_fn<F>(mesh: MeshSpec, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        ScalarField { data: par::map_collect(mesh.len(), f), mesh }
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn map<F>(&self, f: F) -> ScalarField
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        ScalarField { mesh: self.mesh, data: par::map_collect(self.data.len(), |i| f(self.data[i])) }
    }

    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Result<ScalarField>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.mesh.check_same(&other.mesh)?;
        Ok(ScalarField {
            mesh: self.mesh,
            data: par::map_collect(self.data.len(), |i| f(self.data[i], other.data[i])),
        })
    }

    pub fn add_scaled(&self, other: &ScalarField, s: f64) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|a| a * s)
    }

    pub fn max_abs(&self) -> f64 {
        par::max_abs(&self.data)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Coordinate integral `sum(values) * cell volume` (no metric weight).
    pub fn coordinate_integral(&self) -> f64 {
        par::pairwise_sum(&self.data) * self.mesh.cell_volume()
    }
}

/// Symmetric `dim x dim` matrix per node, not necessarily definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensorField {
    mesh: MeshSpec,
    data: Vec<Mat3>,
}

impl SymTensorField {
    pub fn zeros(mesh: MeshSpec) -> Self {
        SymTensorField { data: vec![ZERO3; mesh.len()], mesh }
    }

    /// Builds from per-node matrices; the lower triangle is mirrored from
    /// the upper one so symmetry is exact.
    pub fn from_nodes(mesh: MeshSpec, mut data: Vec<Mat3>) -> Result<Self> {
        if data.len() != mesh.len() {
            return Err(GrfError::ShapeMismatch(format!("{} tensors for {} nodes", data.len(), mesh.len())));
        }
        let d = mesh.dim();
        for m in data.iter_mut() {
            for a in 0..3 {
                for b in 0..3 {
                    if a >= d || b >= d {
                        m[a][b] = 0.0;
                    } else if b < a {
                        m[a][b] = m[b][a];
                    }
                    if !m[a][b].is_finite() {
                        return Err(GrfError::NonFinite("tensor field".into()));
                    }
                }
            }
        }
        Ok(SymTensorField { mesh, data })
    }

    pub fn from_index_fn<F>(mesh: MeshSpec, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Mat3 + Sync + Send,
    {
        Self::from_nodes(mesh, par::map_collect(mesh.len(), f))
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    #[inline]
    pub fn at(&self, i: usize) -> &Mat3 {
        &self.data[i]
    }

    pub fn nodes(&self) -> &[Mat3] {
        &self.data
    }

    pub fn component(&self, a: usize, b: usize) -> ScalarField {
        ScalarField { mesh: self.mesh, data: self.data.iter().map(|m| m[a][b]).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.mesh.dim();
        self.data
            .iter()
            .map(|m| {
                let mut s: f64 = 0.0;
                for row in m.iter().take(d) {
                    for v in row.iter().take(d) {
                        s = s.max(v.abs());
                    }
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn add_scaled(&self, other: &SymTensorField, s: f64) -> Result<SymTensorField> {
        self.mesh.check_same(&other.mesh)?;
        let data = par::map_collect(self.data.len(), |i| {
            let mut m = self.data[i];
            for (a, row) in m.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v += s * other.data[i][a][b];
                }
            }
            m
        });
        Ok(SymTensorField { mesh: self.mesh, data })
    }
}

/// Riemannian metric: symmetric positive definite at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricField(SymTensorField);

impl MetricField {
    pub fn new(t: SymTensorField) -> Result<Self> {
        let d = t.mesh.dim();
        for (i, m) in t.data.iter().enumerate() {
            let ev = min_eigenvalue(m, d);
            if !(ev > EPS_SPD) {
                return Err(GrfError::NotSpd { node: i, min_eig: ev });
            }
        }
        Ok(MetricField(t))
    }

    /// Flat metric `δ`.
    pub fn flat(mesh: MeshSpec) -> Self {
        let d = mesh.dim();
        MetricField(SymTensorField { data: vec![crate::linalg::identity(d); mesh.len()], mesh })
    }

    /// `e^{2u} δ`.
    pub fn conformal(u: &ScalarField) -> Self {
        let d = u.mesh.dim();
        let data = u
            .values()
            .iter()
            .map(|&v| {
                let mut m = crate::linalg::identity(d);
                for (a, row) in m.iter_mut().enumerate().take(d) {
                    row[a] = (2.0 * v).exp();
                }
                m
            })
            .collect();
        MetricField(SymTensorField { data, mesh: u.mesh })
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.0
    }

    pub fn into_tensor(self) -> SymTensorField {
        self.0
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.0.mesh
    }

    #[inline]
    pub fn at(&self, i: usize) -> &Mat3 {
        &self.0.data[i]
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.mesh().dim();
        self.0.data.iter().map(|m| min_eigenvalue(m, d)).fold(f64::INFINITY, f64::min)
    }
}

/// Node-based vector (or covector) field; which one is stated by the
/// producing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    mesh: MeshSpec,
    data: Vec<Vec3>,
}

impl VectorField {
    pub fn zeros(mesh: MeshSpec) -> Self {
        VectorField { data: vec![[0.0; 3]; mesh.len()], mesh }
    }

    pub fn from_nodes(mesh: MeshSpec, data: Vec<Vec3>) -> Result<Self> {
        if data.len() != mesh.len() {
            return Err(GrfError::ShapeMismatch(format!("{} vectors for {} nodes", data.len(), mesh.len())));
        }
        Ok(VectorField { mesh, data })
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    #[inline]
    pub fn at(&self, i: usize) -> &Vec3 {
        &self.data[i]
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|v| v.iter()).fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Face-staggered vector field: component `a` lives on the face between node
/// `k` and its `+a` neighbour, stored at index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVector {
    mesh: MeshSpec,
    comps: Vec<Vec<f64>>,
}

impl FaceVector {
    pub fn zeros(mesh: MeshSpec) -> Self {
        FaceVector { comps: vec![vec![0.0; mesh.len()]; mesh.dim()], mesh }
    }

    pub fn from_components(mesh: MeshSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != mesh.dim() || comps.iter().any(|c| c.len() != mesh.len()) {
            return Err(GrfError::ShapeMismatch("face vector components".into()));
        }
        Ok(FaceVector { mesh, comps })
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    #[inline]
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| par::max_abs(c)).fold(0.0, f64::max)
    }
}

/// Mixed-degree differential form. Degree `k` stores the `C(dim, k)`
/// components on increasing multi-indices, so antisymmetry is structural.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyformField {
    mesh: MeshSpec,
    degrees: [Option<Vec<Vec3>>; 4],
}

impl PolyformField {
    pub fn zeros(mesh: MeshSpec) -> Self {
        PolyformField { mesh, degrees: [None, None, None, None] }
    }

    #[inline]
    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.mesh.dim() {
            Err(GrfError::DegreeOutOfRange { degree: k, dim: self.mesh.dim() })
        } else {
            Ok(())
        }
    }

    /// Sets degree `k` from per-node component arrays.
    pub fn set_degree(&mut self, k: usize, data: Vec<Vec3>) -> Result<()> {
        self.check_degree(k)?;
        if data.len() != self.mesh.len() {
            return Err(GrfError::ShapeMismatch(format!("degree {k}: {} nodes", data.len())));
        }
        let nc = n_components(self.mesh.dim(), k);
        let mut data = data;
        for c in data.iter_mut() {
            for v in c.iter_mut().skip(nc) {
                *v = 0.0;
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(GrfError::NonFinite(format!("polyform degree {k}")));
            }
        }
        self.degrees[k] = Some(data);
        Ok(())
    }

    pub fn with_degree(mut self, k: usize, data: Vec<Vec3>) -> Result<Self> {
        self.set_degree(k, data)?;
        Ok(self)
    }

    /// Present degrees in increasing order.
    pub fn degrees(&self) -> Vec<usize> {
        (0..4).filter(|&k| self.degrees[k].is_some()).collect()
    }

    pub fn degree(&self, k: usize) -> Option<&[Vec3]> {
        self.degrees.get(k).and_then(|d| d.as_deref())
    }

    /// Component `c` of degree `k` at node `i`; absent degrees read as zero.
    #[inline]
    pub fn get(&self, k: usize, i: usize) -> Vec3 {
        match &self.degrees[k] {
            Some(d) => d[i],
            None => [0.0; 3],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.degrees.iter().flatten().all(|d| d.iter().all(|c| c.iter().all(|&v| v == 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.degrees
            .iter()
            .flatten()
            .flat_map(|d| d.iter().flat_map(|c| c.iter()))
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `self + s * other` degree by degree.
    pub fn add_scaled(&self, other: &PolyformField, s: f64) -> Result<PolyformField> {
        self.mesh.check_same(&other.mesh)?;
        let mut out = PolyformField::zeros(self.mesh);
        for k in 0..4 {
            match (&self.degrees[k], &other.degrees[k]) {
                (None, None) => {}
                _ => {
                    let data = par::map_collect(self.mesh.len(), |i| {
                        let a = self.get(k, i);
                        let b = other.get(k, i);
                        [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
                    });
                    out.degrees[k] = Some(data);
                }
            }
        }
        Ok(out)
    }

    /// Homogeneous component as a standalone polyform.
    pub fn only(&self, k: usize) -> PolyformField {
        let mut out = PolyformField::zeros(self.mesh);
        if let Some(d) = &self.degrees[k] {
            out.degrees[k] = Some(d.clone());
        }
        out
    }
}
