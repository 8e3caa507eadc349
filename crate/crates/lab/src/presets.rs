//! Initial data and endpoint densities built from a scenario's preset.

use grf_core::flow::{GeomState, HomogeneousState, Slice};
use grf_core::transport::Density;
use grf_core::{MeshSpec, MetricField, PolyformField, ScalarField};

use crate::error::Result;
use crate::scenario::{Mode, PresetName, Scenario};

pub const HOMOGENEOUS_DEFAULT: (f64, f64, f64) = (1.0, 0.8, 0.1);

fn axis_mode(dim: usize, axis: usize, cos: f64, sin: f64) -> Mode {
    let mut k = vec![0; dim];
    k[axis] = 1;
    Mode { k, cos, sin }
}

fn series(mesh: MeshSpec, base: f64, modes: &[Mode]) -> ScalarField {
    let lengths = mesh.lengths().to_vec();
    ScalarField::from_fn(mesh, |x| base + modes.iter().map(|m| m.eval(&x, &lengths)).sum::<f64>())
}

/// Preset base modes followed by the scenario's own modes.
fn with_base(base: Vec<Mode>, extra: &[Mode]) -> Vec<Mode> {
    base.into_iter().chain(extra.iter().cloned()).collect()
}

pub fn homogeneous(sc: &Scenario) -> Result<HomogeneousState> {
    let (a, c, f) = HOMOGENEOUS_DEFAULT;
    let p = &sc.preset;
    Ok(HomogeneousState::new(p.a.unwrap_or(a), p.c.unwrap_or(c), p.f0.unwrap_or(f))?)
}

/// `(g, H, f)` at `t = 0`.
pub fn initial_state(sc: &Scenario) -> Result<GeomState> {
    let mesh = sc.mesh_spec()?;
    let d = mesh.dim();
    let p = &sc.preset;
    if p.name == PresetName::HomogeneousT3 {
        return Ok(homogeneous(sc)?.to_grid(mesh)?);
    }
    let (u_base, f_base, h_const, h_base) = match p.name {
        PresetName::FlatFixedPoint => (vec![], vec![], 0.0, vec![]),
        PresetName::DilatonBump => (vec![], vec![axis_mode(d, 0, 0.3, 0.0)], 0.0, vec![]),
        PresetName::HWave2Form => (vec![], vec![], 0.4, vec![axis_mode(d, 0, 0.0, 0.1)]),
        PresetName::ConformalBumpyMetric => (bumpy_modes(d), vec![], 0.0, vec![]),
        PresetName::HomogeneousT3 => unreachable!(),
    };
    build(sc, mesh, u_base, f_base, h_const, h_base)
}

/// `0.1 sin x₀`, or `0.1 sin x₀ cos x₁ = 0.05 sin(x₀ + x₁) + 0.05 sin(x₀ − x₁)`.
fn bumpy_modes(d: usize) -> Vec<Mode> {
    if d == 1 {
        return vec![axis_mode(d, 0, 0.0, 0.1)];
    }
    let mut k1 = vec![0; d];
    k1[0] = 1;
    k1[1] = 1;
    let mut k2 = k1.clone();
    k2[1] = -1;
    vec![Mode { k: k1, cos: 0.0, sin: 0.05 }, Mode { k: k2, cos: 0.0, sin: 0.05 }]
}

fn build(
    sc: &Scenario,
    mesh: MeshSpec,
    u_base: Vec<Mode>,
    f_base: Vec<Mode>,
    h_const: f64,
    h_base: Vec<Mode>,
) -> Result<GeomState> {
    let p = &sc.preset;
    let u = series(mesh, 0.0, &with_base(u_base, &p.u));
    let f = series(mesh, 0.0, &with_base(f_base, &p.f));
    let h_modes = with_base(h_base, &p.h);
    let mut h = PolyformField::zeros(mesh);
    if h_const != 0.0 || !h_modes.is_empty() {
        let c = series(mesh, h_const, &h_modes);
        let k = if mesh.dim() == 1 { 1 } else { 2 };
        h.set_degree(k, c.values().iter().map(|v| [*v, 0.0, 0.0]).collect())?;
    }
    Ok(GeomState::new(0.0, MetricField::conformal(&u), h, f)?)
}

/// Unnormalized endpoint profiles `1 + Σ modes`; the flat fixed point
/// defaults to uniform endpoints, every other preset to two displaced
/// bumps along the first axis.
pub fn endpoint_profiles(sc: &Scenario) -> Result<(ScalarField, ScalarField)> {
    let mesh = sc.mesh_spec()?;
    let d = mesh.dim();
    let p = &sc.preset;
    let default = |phase: f64| {
        if p.name == PresetName::FlatFixedPoint {
            vec![]
        } else {
            vec![axis_mode(d, 0, 0.5 * phase.cos(), 0.5 * phase.sin())]
        }
    };
    let r1 = if p.rho1.is_empty() { default(2.0) } else { p.rho1.clone() };
    let r2 = if p.rho2.is_empty() { default(2.8) } else { p.rho2.clone() };
    Ok((series(mesh, 1.0, &r1), series(mesh, 1.0, &r2)))
}

/// Endpoint densities normalized to unit mass on `slice`.
pub fn endpoints(sc: &Scenario, slice: &Slice) -> Result<(Density, Density)> {
    let (a, b) = endpoint_profiles(sc)?;
    Ok((Density::normalized(a, slice)?, Density::normalized(b, slice)?))
}
