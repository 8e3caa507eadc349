//! Scenario execution: one function per check, assembled per experiment kind.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grf_core::adapted::{
    default_window, entropy_report, geodesic_solve, run_cost_monotonicity, run_f_monotonicity, shooting_check,
    verify_cost_variation, CostSchedule, EndpointFamily, GeodesicOutcome, ENDPOINT_STEPS,
};
use grf_core::container::{Block, Container};
use grf_core::flow::{
    dt_max, evolve, integrate_reduced, verify_scalar_evolution, verify_volume_identity, FlowCheck, FlowTrajectory,
    GeomState, HomogeneousState, Slice,
};
use grf_core::geometry::{
    bianchi_residuals, div_f, face_pairing, h_squared_field, node_pairing, norm_sq_field, Geometry,
};
use grf_core::transport::{
    bb_minimize, heat_family, verify_energy_derivative, verify_static_derivative, wasserstein_monotonicity,
    wasserstein_oracle, DescentOptions, Density, MonotoneSeries, TrajectorySlices,
};
use grf_core::{Convention, FaceVector, GrfError, MeshSpec, PolyformField};

use crate::error::{LabError, Result};
use crate::presets::{endpoints, homogeneous, initial_state};
use crate::report::{Check, Outcome, Report, Series};
use crate::scenario::{Kind, PresetName, Scenario};

/// Every check of `verify-all`, in report order.
pub const VERIFY_ALL: [&str; 12] = [
    "duality",
    "trace-identity",
    "bianchi",
    "volume-identity",
    "scalar-evolution",
    "energy-derivative",
    "W-monotonicity",
    "geodesic-residual",
    "entropy-convexity",
    "cost-variation",
    "cost-monotonicity",
    "F-monotonicity",
];

/// Steps used for each level of a flow refinement check.
const REFINE_STEPS: usize = 4;
/// Tolerance on drops of the second difference of the entropy.
const CONVEXITY_FLOOR: f64 = grf_core::adapted::CONVEXITY_FLOOR;

struct Ctx<'a> {
    sc: &'a Scenario,
    conv: Convention,
    mesh: MeshSpec,
    traj: FlowTrajectory,
    opts: DescentOptions,
}

impl Ctx<'_> {
    fn slices(&self) -> TrajectorySlices<'_> {
        TrajectorySlices::new(&self.traj)
    }

    fn last(&self) -> usize {
        self.traj.len() - 1
    }

    /// Adapted window `[0, τ]`: the default length, at most half the horizon.
    fn window(&self) -> f64 {
        default_window(&self.mesh).min(0.5 * self.traj.t_end())
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.sc.experiment.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// Step size: the configured one, or the largest divisor of the horizon
/// at or below half the stability bound.
pub fn flow_dt(sc: &Scenario, s0: &GeomState) -> f64 {
    match sc.flow.dt {
        Some(dt) => dt,
        None => {
            let steps = (sc.flow.horizon / (0.5 * dt_max(s0))).ceil().max(1.0);
            sc.flow.horizon / steps
        }
    }
}

pub fn simulate(sc: &Scenario) -> Result<FlowTrajectory> {
    let s0 = initial_state(sc)?;
    let dt = flow_dt(sc, &s0);
    Ok(evolve(sc.convention()?, &s0, sc.flow.horizon, dt)?)
}

/// Runs the scenario's experiment. Configuration and flow errors are
/// returned; solver failures inside a check become `not-converged`.
pub fn run(sc: &Scenario) -> Result<Outcome> {
    match sc.experiment.kind {
        Kind::Simulate if sc.preset.name == PresetName::HomogeneousT3 => {
            run_checks(sc, &["volume-identity", "scalar-evolution", "homogeneous-oracle"])
        }
        Kind::Simulate => run_checks(sc, &["volume-identity", "scalar-evolution"]),
        Kind::Transport => run_checks(sc, &["bb"]),
        Kind::Geodesic => run_checks(sc, &["geodesic-residual", "shooting", "entropy-convexity"]),
        Kind::CostMono => run_checks(sc, &["cost-monotonicity"]),
        Kind::FMono => run_checks(sc, &["F-monotonicity"]),
        Kind::VerifyAll => run_checks(sc, &VERIFY_ALL),
    }
}

/// Runs the named checks (any of [`VERIFY_ALL`], `shooting`,
/// `homogeneous-oracle`, or `bb` for the pair `bb-residual`, `bb-oracle`)
/// on the scenario's trajectory, in the given order.
pub fn run_checks(sc: &Scenario, names: &[&str]) -> Result<Outcome> {
    sc.validate()?;
    let traj = simulate(sc)?;
    let ctx = Ctx {
        sc,
        conv: sc.convention()?,
        mesh: sc.mesh_spec()?,
        traj,
        opts: DescentOptions { tol: sc.tolerances.geo, ..DescentOptions::default() },
    };
    let mut container = Container::from_trajectory(&ctx.traj);
    let mut checks = vec![];
    let mut series = vec![];
    let mut geodesic_out: Option<std::result::Result<GeodesicOutcome, String>> = None;
    let tol = sc.tolerances;
    for &name in names {
        let r = match name {
            "duality" => duality(&ctx),
            "trace-identity" => trace_identity(&ctx),
            "bianchi" => bianchi(&ctx),
            "volume-identity" => volume_identity(&ctx),
            "scalar-evolution" => scalar_evolution(&ctx),
            "homogeneous-oracle" => homogeneous_oracle(&ctx),
            "energy-derivative" => energy_derivative(&ctx),
            "W-monotonicity" => w_monotonicity(&ctx),
            "cost-variation" => cost_variation(&ctx),
            "cost-monotonicity" => cost_monotonicity(&ctx),
            "F-monotonicity" => f_monotonicity(&ctx),
            "bb" => {
                match transport(&ctx, &mut container) {
                    Ok((cs, s)) => {
                        checks.extend(cs);
                        series.extend(s);
                    }
                    Err(e) => checks.push(not_converged_from(&e, "bb-residual", tol.geo)),
                }
                continue;
            }
            "geodesic-residual" | "shooting" | "entropy-convexity" => {
                let out = geodesic_out.get_or_insert_with(|| {
                    let r = geodesic(&ctx).map_err(|e| e.to_string());
                    if let Ok(out) = &r {
                        // Recording can only fail on a mesh mismatch, which the solver rules out.
                        let _ = record_path(out, &mut container);
                    }
                    r
                });
                let out = match out {
                    Ok(out) => out,
                    Err(e) => {
                        checks.push(Check::not_converged(name, f64::NAN, tol.geo, e.clone()));
                        continue;
                    }
                };
                match name {
                    "geodesic-residual" => Ok((residual_check(&ctx, out), vec![])),
                    "shooting" => shooting(&ctx, out),
                    _ => convexity(&ctx, out),
                }
            }
            other => return Err(LabError::Config(format!("unknown check '{other}'"))),
        };
        match r {
            Ok((c, s)) => {
                checks.push(c);
                series.extend(s);
            }
            Err(e) => checks.push(not_converged_from(&e, name, f64::NAN)),
        }
    }
    let report = Report { scenario: sc.clone(), convention: ctx.conv.tag().into(), checks };
    Ok(Outcome { report, series, container: Some(container) })
}

fn not_converged_from(e: &crate::error::LabError, name: &str, tol: f64) -> Check {
    let residual = match e {
        crate::error::LabError::Core(GrfError::NotConverged { residual, .. }) => *residual,
        _ => f64::NAN,
    };
    Check::not_converged(name, residual, tol, e.to_string())
}

/// Largest drop between consecutive samples (zero when nondecreasing).
fn max_drop(s: &MonotoneSeries) -> f64 {
    s.values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn monotone_check(name: &str, s: &MonotoneSeries, pass: bool) -> Check {
    let tol = s.tolerance.iter().copied().fold(0.0, f64::max);
    Check::with_verdict(name, max_drop(s), tol, pass)
}

fn finite_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

fn duality(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let s0 = ctx.traj.snapshot(0);
    let geo = Geometry::new(&s0.g);
    let mut rng = ctx.rng(1);
    let n = ctx.mesh.len();
    let comps = (0..ctx.mesh.dim()).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x = FaceVector::from_components(ctx.mesh, comps)?;
    let psi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lhs = node_pairing(&geo, &s0.f, div_f(&geo, &s0.f, &x)?.values(), &psi);
    let rhs = face_pairing(&geo, &s0.f, &x, &psi);
    let residual = (lhs + rhs).abs() / rhs.abs().max(1.0);
    Ok((Check::bound("duality", residual, ctx.sc.tolerances.exact), vec![]))
}

fn trace_identity(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let s0 = ctx.traj.snapshot(0);
    let geo = Geometry::new(&s0.g);
    let mut rng = ctx.rng(2);
    let d = ctx.mesh.dim();
    let n = ctx.mesh.len();
    let mut worst: f64 = 0.0;
    for k in 1..=d {
        let random: Vec<[f64; 3]> =
            (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let forms = [PolyformField::zeros(ctx.mesh).with_degree(k, random)?, s0.h.only(k)];
        for h in &forms {
            let h2 = h_squared_field(ctx.conv, &geo, h);
            let nsq = norm_sq_field(ctx.conv, &geo, h, k);
            for i in 0..n {
                let gi = geo.ginv(i);
                let mut tr = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        tr += gi[a][b] * h2.at(i)[a][b];
                    }
                }
                let want = ctx.conv.trace_ratio(k) * nsq[i];
                worst = worst.max((tr - want).abs() / want.abs().max(1.0));
            }
        }
    }
    Ok((Check::bound("trace-identity", worst, ctx.sc.tolerances.exact), vec![]))
}

fn refined(sc: &Scenario) -> Scenario {
    let mut fine = sc.clone();
    fine.mesh.n *= 2;
    fine
}

fn bianchi(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let level = |sc: &Scenario| -> Result<f64> {
        let s = initial_state(sc)?;
        let b = bianchi_residuals(ctx.conv, &s.g, &s.h)?;
        Ok(b.r1_max().max(b.r2_max()))
    };
    let coarse = level(ctx.sc)?;
    let fine = level(&refined(ctx.sc))?;
    let t = &ctx.sc.tolerances;
    Ok((Check::refinement("bianchi", fine, finite_order(coarse, fine, 2.0), t.exact, t.min_order), vec![]))
}

/// Residual of `check` over `REFINE_STEPS` steps at half the stability bound.
fn flow_level(sc: &Scenario, conv: Convention, check: fn(&FlowTrajectory) -> grf_core::Result<FlowCheck>) -> Result<(f64, f64)> {
    let s0 = initial_state(sc)?;
    let dt = 0.5 * dt_max(&s0);
    let traj = evolve(conv, &s0, REFINE_STEPS as f64 * dt, dt)?;
    Ok((check(&traj)?.max(), dt))
}

fn flow_identity(
    ctx: &Ctx,
    name: &str,
    check: fn(&FlowTrajectory) -> grf_core::Result<FlowCheck>,
) -> Result<(Check, Vec<Series>)> {
    let (coarse, dt_c) = flow_level(ctx.sc, ctx.conv, check)?;
    let (fine, dt_f) = flow_level(&refined(ctx.sc), ctx.conv, check)?;
    let t = &ctx.sc.tolerances;
    let c = Check::refinement(name, fine, finite_order(coarse, fine, dt_c / dt_f), t.exact, t.min_dt_order);
    let mut s = Series::new(name, "t");
    if ctx.traj.len() >= 3 {
        let fc = check(&ctx.traj)?;
        for k in 0..fc.times.len() {
            s.push(fc.times[k], fc.scales[k], fc.residuals[k]);
        }
    }
    Ok((c.series(name), vec![s]))
}

fn volume_identity(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    flow_identity(ctx, "volume-identity", verify_volume_identity)
}

fn scalar_evolution(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    flow_identity(ctx, "scalar-evolution", verify_scalar_evolution)
}

fn homogeneous_oracle(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let init = homogeneous(ctx.sc)?;
    let times = ctx.traj.times();
    let oracle = integrate_reduced(ctx.conv, init, &times[1..], 1e-12)?;
    let mut a = Series::new("reduced-ode-a", "t");
    let mut f = Series::new("reduced-ode-f", "t");
    a.push(times[0], init.a, 0.0);
    f.push(times[0], init.f, 0.0);
    let mut worst: f64 = 0.0;
    for (k, want) in oracle.iter().enumerate() {
        let got = HomogeneousState::from_grid(ctx.traj.snapshot(k + 1));
        let ea = ((got.a - want.a) / want.a).abs();
        let ef = ((got.f - want.f) / want.f.abs().max(1e-300)).abs();
        a.push(times[k + 1], want.a, ea);
        f.push(times[k + 1], want.f, ef);
        worst = worst.max(ea).max(ef);
    }
    let c = Check::bound("homogeneous-oracle", worst, ctx.sc.tolerances.oracle).series("reduced-ode-a");
    Ok((c, vec![a, f]))
}

fn endpoints_at(ctx: &Ctx, slice: Arc<Slice>) -> Result<(Density, Density)> {
    endpoints(ctx.sc, &slice)
}

fn energy_derivative(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let slices = ctx.slices();
    let j_end = ctx.last();
    let s = slices.snapshot(j_end)?;
    let (a, b) = endpoints_at(ctx, s.clone())?;
    let out = bb_minimize(&a, &b, s, ctx.sc.experiment.intervals, ctx.opts)?;
    if !out.converged {
        return Err(GrfError::NotConverged { what: "BB path".into(), iterations: out.iterations, residual: out.residual }.into());
    }
    let fam = heat_family(&slices, &out.path, j_end, j_end.saturating_sub(REFINE_STEPS))?;
    let rep = verify_energy_derivative(&slices, &fam)?;
    let mut s = Series::new("energy-derivative", "t");
    for r in &rep.rows {
        s.push(r.t, r.lhs, r.residual);
    }
    let c = Check::bound("energy-derivative", rep.max_boundary(), ctx.sc.tolerances.boundary).series("energy-derivative");
    Ok((c, vec![s]))
}

fn w_monotonicity(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let slices = ctx.slices();
    let j_end = ctx.last();
    let (a, b) = endpoints_at(ctx, slices.snapshot(j_end)?)?;
    let every = (j_end / 4).max(1);
    let m = wasserstein_monotonicity(&slices, &a, &b, ctx.traj.t_end(), ctx.traj.t_start(), every)?;
    let mut s = Series::new("W-monotonicity", "t");
    for k in 0..m.x.len() {
        s.push(m.x[k], m.values[k], m.tolerance[k]);
    }
    Ok((monotone_check("W-monotonicity", &m, m.nondecreasing).series("W-monotonicity"), vec![s]))
}

fn geodesic(ctx: &Ctx) -> Result<GeodesicOutcome> {
    let slices = ctx.slices();
    let (t0, t1) = (ctx.traj.t_start(), ctx.traj.t_start() + ctx.window());
    let (a, _) = endpoints_at(ctx, slices.at(t0)?)?;
    let (_, b) = endpoints_at(ctx, slices.at(t1)?)?;
    Ok(geodesic_solve(&a, &b, &slices, t0, t1, ctx.sc.experiment.intervals, ctx.opts)?)
}

fn residual_check(ctx: &Ctx, out: &GeodesicOutcome) -> Check {
    let tol = ctx.sc.tolerances.geo;
    if out.converged {
        Check::bound("geodesic-residual", out.residual, tol)
    } else {
        Check::not_converged("geodesic-residual", out.residual, tol, format!("{} iterations", out.iterations))
    }
}

fn record_path(out: &GeodesicOutcome, container: &mut Container) -> Result<()> {
    let p = &out.path;
    for (j, t) in p.t_grid().into_iter().enumerate() {
        container.push(Block::Density { t, rho: p.density(j)?.rho().clone() })?;
    }
    for (k, t) in p.mid_times().into_iter().enumerate() {
        let values = grf_core::ScalarField::from_vec(*p.node_slice(0).mesh(), p.phi_mid(k).to_vec())?;
        container.push(Block::Scalar { t, name: "phi".into(), values })?;
    }
    Ok(())
}

fn shooting(ctx: &Ctx, out: &GeodesicOutcome) -> Result<(Check, Vec<Series>)> {
    let chk = shooting_check(&out.path)?;
    let gap = (chk.energy_shooting - chk.energy_descent).abs() / chk.energy_descent.abs().max(1e-300);
    Ok((Check::bound("shooting", gap, ctx.sc.tolerances.shooting), vec![]))
}

fn convexity(ctx: &Ctx, out: &GeodesicOutcome) -> Result<(Check, Vec<Series>)> {
    let rep = entropy_report(out)?;
    let mut s = Series::new("entropy", "t");
    for r in &rep.series {
        s.push(r.t, r.entropy(), r.ricci);
    }
    let mut d = Series::new("entropy-convexity", "t");
    for r in &rep.convexity {
        d.push(r.t, r.second_difference, r.defect);
    }
    let tol = ctx.sc.tolerances.convexity;
    let pass = rep.min_second_difference >= -CONVEXITY_FLOOR && rep.max_convexity_defect <= tol;
    let c = Check::with_verdict("entropy-convexity", rep.max_convexity_defect, tol, pass)
        .series("entropy-convexity")
        .note(format!("min second difference {:e}", rep.min_second_difference));
    Ok((c, vec![s, d]))
}

fn heat_endpoints(ctx: &Ctx) -> Result<EndpointFamily> {
    let slices = ctx.slices();
    let j_end = ctx.last();
    let (a, b) = endpoints_at(ctx, slices.snapshot(j_end)?)?;
    Ok(EndpointFamily::heat(&slices, &a, &b, j_end, 0, ENDPOINT_STEPS)?)
}

fn cost_variation(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let fam = heat_endpoints(ctx)?;
    let window = fam.steps_for(ctx.window());
    let last = fam.times.len() - 1;
    // Three shifts around the middle of the remaining range.
    let start = (last.saturating_sub(window + 2)) / 2;
    let sched = CostSchedule { start, window, stride: 1, points: 3, intervals: ctx.sc.experiment.intervals };
    let rep = verify_cost_variation(&ctx.slices(), &fam, &sched, ctx.opts)?;
    let mut s = Series::new("cost-variation", "u");
    for r in &rep.rows {
        s.push(r.u, r.lhs, r.residual);
    }
    let tol = ctx.sc.tolerances.boundary;
    let c = if rep.converged {
        Check::bound("cost-variation", rep.max_boundary(), tol)
    } else {
        Check::not_converged("cost-variation", rep.max_boundary(), tol, "window geodesic did not converge".into())
    };
    Ok((c.series("cost-variation"), vec![s]))
}

fn cost_monotonicity(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let fam = heat_endpoints(ctx)?;
    let window = fam.steps_for(ctx.window());
    let last = fam.times.len() - 1;
    let stride = ((last - window) / 5).max(1);
    let sched = CostSchedule { start: 0, window, stride, points: 5, intervals: ctx.sc.experiment.intervals };
    let mono = run_cost_monotonicity(&ctx.slices(), &fam, &sched, ctx.opts)?;
    let mut s = Series::new("cost-monotonicity", "u");
    for k in 0..mono.series.x.len() {
        s.push(mono.series.x[k], mono.series.values[k], mono.residuals[k]);
    }
    let c = if mono.converged {
        monotone_check("cost-monotonicity", &mono.series, mono.pass())
    } else {
        let tol = mono.series.tolerance.iter().copied().fold(0.0, f64::max);
        Check::not_converged("cost-monotonicity", max_drop(&mono.series), tol, "window geodesic did not converge".into())
    };
    Ok((c.series("cost-monotonicity"), vec![s]))
}

fn f_monotonicity(ctx: &Ctx) -> Result<(Check, Vec<Series>)> {
    let slices = ctx.slices();
    let (a, _) = endpoints_at(ctx, slices.snapshot(ctx.last())?)?;
    let rep = run_f_monotonicity(&slices, &a, ctx.traj.t_end(), ctx.traj.t_start())?;
    let mut s = Series::new("F-monotonicity", "t");
    for k in 0..rep.series.x.len() {
        s.push(rep.series.x[k], rep.series.values[k], rep.identity_residual[k]);
    }
    let c = monotone_check("F-monotonicity", &rep.series, rep.series.nondecreasing).series("F-monotonicity");
    Ok((c, vec![s]))
}

fn transport(ctx: &Ctx, container: &mut Container) -> Result<(Vec<Check>, Vec<Series>)> {
    let slice: Arc<Slice> = ctx.slices().snapshot(0)?;
    let (a, b) = endpoints_at(ctx, slice.clone())?;
    let out = bb_minimize(&a, &b, slice.clone(), ctx.sc.experiment.intervals, ctx.opts)?;
    let tol = ctx.sc.tolerances;
    let mut checks = vec![if out.converged {
        Check::bound("bb-residual", out.residual, tol.geo)
    } else {
        Check::not_converged("bb-residual", out.residual, tol.geo, format!("{} iterations", out.iterations))
    }];
    let half_w2 = 0.5 * wasserstein_oracle(&a, &b, &slice)?.powi(2);
    let gap = (out.energy - half_w2).abs() / half_w2.max(1e-300);
    checks.push(Check::bound("bb-oracle", gap, tol.bb_oracle).note(format!("E = {:e}, W²/2 = {half_w2:e}", out.energy)));
    let mut s = Series::new("static-derivative", "s");
    for r in verify_static_derivative(&out.path)? {
        s.push(r.s, r.lhs, r.residual);
    }
    for (j, t) in out.path.s_grid().into_iter().enumerate() {
        container.push(Block::Density { t, rho: out.path.density(j)?.rho().clone() })?;
    }
    Ok((checks, vec![s]))
}
