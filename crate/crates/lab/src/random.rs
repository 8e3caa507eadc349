//! Seeded random scenarios with band-limited Fourier data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{
    ExperimentConfig, FlowConfig, Kind, MeshConfig, Mode, PresetConfig, PresetName, Scenario, Tolerances,
};

pub const MAX_AMPLITUDE: f64 = 0.2;
/// `Σ(|cos| + |sin|)` cap for the random part of the conformal factor. With
/// the preset's own `0.1` amplitude, `|u| ≤ ½ ln 2` keeps the eigenvalues of
/// `e^{2u}δ` at or above `0.5`.
pub const U_BUDGET: f64 = 0.5 * std::f64::consts::LN_2 - 0.1;
/// Cap on the density perturbation, so `1 + Σ ≥ 0.5`.
pub const RHO_BUDGET: f64 = 0.5;

/// The four lowest wave vectors of a 2D torus; the two-form coefficient
/// uses the same set, which never depends on a third axis.
const MODES: [[i32; 2]; 4] = [[1, 0], [0, 1], [1, 1], [1, -1]];

fn draw(rng: &mut ChaCha8Rng, budget: f64) -> Vec<Mode> {
    let mut modes: Vec<Mode> = MODES
        .iter()
        .map(|k| Mode {
            k: k.to_vec(),
            cos: rng.random_range(-MAX_AMPLITUDE..=MAX_AMPLITUDE),
            sin: rng.random_range(-MAX_AMPLITUDE..=MAX_AMPLITUDE),
        })
        .collect();
    let total: f64 = modes.iter().map(Mode::amplitude).sum();
    if total > budget {
        let s = budget / total;
        for m in modes.iter_mut() {
            m.cos *= s;
            m.sin *= s;
        }
    }
    modes
}

/// A 2D scenario (16², horizon 0.05) with random metric, dilaton, two-form
/// and endpoint data; identical for identical `(seed, kind)`.
pub fn generate_random_scenario(seed: u64, kind: Kind) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = draw(&mut rng, U_BUDGET);
    let f = draw(&mut rng, f64::INFINITY);
    let h = draw(&mut rng, f64::INFINITY);
    let rho1 = draw(&mut rng, RHO_BUDGET);
    let rho2 = draw(&mut rng, RHO_BUDGET);
    let mut preset = PresetConfig::named(PresetName::ConformalBumpyMetric);
    preset.u = u;
    preset.f = f;
    preset.h = h;
    preset.rho1 = rho1;
    preset.rho2 = rho2;
    Scenario {
        mesh: MeshConfig { dim: 2, n: 16, lengths: None },
        preset,
        flow: FlowConfig { horizon: 0.05, dt: None, convention: "full-sum".into() },
        experiment: ExperimentConfig { kind, seed, intervals: 8 },
        tolerances: Tolerances::default(),
    }
}
