use serde::Serialize;

use crate::error::{GrfError, Result};
use crate::field::ScalarField;
use crate::flow::Slice;
use crate::par;

/// Lower bound on densities; violations are rejected, never clipped.
pub const RHO_FLOOR: f64 = 1e-8;

/// Tolerance on the unit-mass invariant.
pub const MASS_TOL: f64 = 1e-12;

/// Probability density relative to `e^{-f} dV` of one time slice.
///
/// Node masses `m_x = ρ_x w_x ΔV` (with `w = e^{-f} sqrt(det g)`) are the
/// only conversion between densities and measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Density {
    rho: ScalarField,
}

impl Density {
    /// Checks the floor and unit mass under `slice`.
    pub fn new(rho: ScalarField, slice: &Slice) -> Result<Self> {
        slice.mesh().check_same(rho.mesh())?;
        check_floor(rho.values(), slice.t)?;
        let d = Density { rho };
        let mass = d.mass(slice);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(GrfError::InvalidArgument(format!("density mass {mass} is not 1")));
        }
        Ok(d)
    }

    /// Scales a positive field to unit mass.
    pub fn normalized(raw: ScalarField, slice: &Slice) -> Result<Self> {
        slice.mesh().check_same(raw.mesh())?;
        let mass = par::dot(raw.values(), &slice.w) * slice.mesh().cell_volume();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(GrfError::InvalidArgument(format!("cannot normalize density of mass {mass}")));
        }
        let rho = raw.scale(1.0 / mass);
        check_floor(rho.values(), slice.t)?;
        Ok(Density { rho })
    }

    /// Inverse of [`Density::masses`]; no normalization is applied.
    pub fn from_masses(m: &[f64], slice: &Slice) -> Result<Self> {
        let rho = masses_to_rho(m, &slice.w, slice.mesh().cell_volume());
        check_floor(&rho, slice.t)?;
        Ok(Density { rho: ScalarField::from_vec(*slice.mesh(), rho)? })
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn values(&self) -> &[f64] {
        self.rho.values()
    }

    /// `m_x = ρ_x w_x ΔV`.
    pub fn masses(&self, slice: &Slice) -> Vec<f64> {
        rho_to_masses(self.rho.values(), &slice.w, slice.mesh().cell_volume())
    }

    /// `∫ ρ e^{-f} dV`.
    pub fn mass(&self, slice: &Slice) -> f64 {
        par::dot(self.rho.values(), &slice.w) * slice.mesh().cell_volume()
    }
}

pub(crate) fn rho_to_masses(rho: &[f64], w: &[f64], dv: f64) -> Vec<f64> {
    par::map_collect(rho.len(), |i| rho[i] * w[i] * dv)
}

pub(crate) fn masses_to_rho(m: &[f64], w: &[f64], dv: f64) -> Vec<f64> {
    par::map_collect(m.len(), |i| m[i] / (w[i] * dv))
}

pub(crate) fn check_floor(rho: &[f64], t: f64) -> Result<()> {
    match rho.iter().position(|v| !(*v >= RHO_FLOOR)) {
        Some(node) => Err(GrfError::BelowFloor { node, value: rho[node], t }),
        None => Ok(()),
    }
}
