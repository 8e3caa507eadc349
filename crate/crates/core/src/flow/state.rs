use crate::error::{GrfError, Result};
use crate::field::{MetricField, PolyformField, ScalarField, SymTensorField};
use crate::forms::Convention;
use crate::geometry::{closedness_residual, scalar_hf_geo, Curvature, Geometry, WeightedOperator, TOL_CLOSED};
use crate::mesh::MeshSpec;

/// `(g, H, f)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomState {
    pub t: f64,
    pub g: MetricField,
    pub h: PolyformField,
    pub f: ScalarField,
}

impl GeomState {
    /// Checks mesh agreement, supported degrees and closedness of `H`.
    pub fn new(t: f64, g: MetricField, h: PolyformField, f: ScalarField) -> Result<Self> {
        g.mesh().check_same(h.mesh())?;
        g.mesh().check_same(f.mesh())?;
        for k in h.degrees() {
            if k == 0 {
                return Err(GrfError::DegreeOutOfRange { degree: 0, dim: g.mesh().dim() });
            }
        }
        let residual = closedness_residual(&h);
        if residual > TOL_CLOSED {
            return Err(GrfError::NotClosed { residual });
        }
        Ok(GeomState { t, g, h, f })
    }

    /// `(δ, 0, 0)`.
    pub fn flat(mesh: MeshSpec) -> Self {
        GeomState {
            t: 0.0,
            g: MetricField::flat(mesh),
            h: PolyformField::zeros(mesh),
            f: ScalarField::zeros(mesh),
        }
    }

    pub fn mesh(&self) -> &MeshSpec {
        self.g.mesh()
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(&self.g)
    }

    /// Per-slice quantities needed by transport solvers.
    pub fn slice(&self, conv: Convention) -> Result<Slice> {
        Slice::new(self, conv)
    }

    /// `self + s * (dg, dh, df)` without admissibility checks on the metric
    /// beyond positivity; used for Runge–Kutta stages.
    pub(crate) fn offset(&self, dg: &SymTensorField, dh: &PolyformField, df: &ScalarField, s: f64) -> Result<GeomState> {
        Ok(GeomState {
            t: self.t,
            g: MetricField::new(self.g.tensor().add_scaled(dg, s)?)?,
            h: self.h.add_scaled(dh, s)?,
            f: self.f.add_scaled(df, s)?,
        })
    }
}

/// Cached geometry of one time slice: weight, `R^{H,f}` and the weighted
/// Laplacian.
#[derive(Debug, Clone)]
pub struct Slice {
    pub t: f64,
    pub conv: Convention,
    pub geo: Geometry,
    pub h: PolyformField,
    pub f: ScalarField,
    /// `e^{-f} sqrt(det g)`.
    pub w: Vec<f64>,
    pub r_hf: Vec<f64>,
    pub op: WeightedOperator,
}

impl Slice {
    pub fn new(s: &GeomState, conv: Convention) -> Result<Self> {
        let geo = s.geometry();
        let curv = Curvature::of(&geo);
        let r_hf = scalar_hf_geo(conv, &geo, &curv, &s.h, s.f.values());
        let op = WeightedOperator::new(&geo, &s.f, None)?;
        let w = op.weight().to_vec();
        Ok(Slice { t: s.t, conv, geo, h: s.h.clone(), f: s.f.clone(), w, r_hf, op })
    }

    pub fn mesh(&self) -> &MeshSpec {
        self.geo.mesh()
    }

    /// `∫ e^{-f} dV`.
    pub fn weighted_volume(&self) -> f64 {
        crate::par::pairwise_sum(&self.w) * self.mesh().cell_volume()
    }
}
