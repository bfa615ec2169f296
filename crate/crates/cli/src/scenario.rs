//! The scenario runners. Each one fills a [`RunSummary`] with its fits,
//! metrics and declared checks.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use hartree_core::bootstrap::{self, BootstrapSummary, Verdict};
use hartree_core::corpus;
use hartree_core::diagnostics::{self, ChainInputs, ConstantsLedger, TrajectoryDiagnostics};
use hartree_core::grid::{self, AnalyticSpec, ComplexField};
use hartree_core::physics::{self, InteractionSpec, Model, ModelSpec, Nonlinearity, PotentialSpec};
use hartree_core::propagator::{self, Propagator, StepPlan, Trajectory};
use rand::Rng;
use serde::Serialize;

use crate::config::{InitialFamily, ScenarioConfig, ScenarioKind};
use crate::error::RunError;
use crate::summary::{Check, FitReport, RunSummary};

type Field = ComplexField<f64>;

/// Where a run writes its files.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub csv: bool,
    pub snapshots: bool,
}

pub(crate) fn run(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    match cfg.scenario {
        ScenarioKind::FreeDecay => free_decay(cfg, sink, s),
        ScenarioKind::LinearDispersive => linear_dispersive(cfg, sink, s),
        ScenarioKind::SmallDataHartree => small_data_hartree(cfg, sink, s),
        ScenarioKind::SmallDataCubic => small_data_cubic(cfg, sink, s),
        ScenarioKind::DerivativeDecay => derivative_decay(cfg, sink, s),
        ScenarioKind::CubicLimit => cubic_limit(cfg, sink, s),
        ScenarioKind::BootstrapSweep => bootstrap_sweep(cfg, s),
        ScenarioKind::InequalitySuite => inequality_suite(cfg, s),
        ScenarioKind::LargeDataGronwall => large_data_gronwall(cfg, sink, s),
    }
}

struct Simulation {
    diag: TrajectoryDiagnostics<f64>,
    guard_trip: Option<f64>,
    /// State at the first record with `t >= 1`.
    u1: Option<Field>,
    /// Recorded states with `t <= keep_until`.
    kept: Vec<(f64, Field)>,
    final_state: Field,
}

impl Simulation {
    /// Largest relative change of `||u||_2^2` over the records.
    fn mass_drift(&self) -> f64 {
        let r = self.diag.records();
        let m0 = r[0].mass * r[0].mass;
        r.iter().map(|x| (x.mass * x.mass / m0 - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn simulate(
    model: &Model<f64>,
    u0: &Field,
    plan: &StepPlan<f64>,
    sink: Option<&Sink>,
    keep_until: Option<f64>,
) -> Result<Simulation, RunError> {
    let mut diag = TrajectoryDiagnostics::new(model.dimension());
    let mut u1 = None;
    let mut kept = Vec::new();
    let snapshot_dir = match sink {
        Some(k) if k.snapshots => {
            let dir = k.dir.join("snapshots");
            fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
            Some(dir)
        }
        _ => None,
    };
    let mut index = 0usize;
    let mut io_error = None;
    let result = propagator::evolve_observed(u0, model, plan, |t, u| {
        diag.push(diagnostics::record(t, u, model)?)?;
        if u1.is_none() && t >= 1.0 {
            u1 = Some(u.clone());
        }
        if keep_until.is_some_and(|end| t <= end + 1e-12) {
            kept.push((t, u.clone()));
        }
        if let Some(dir) = &snapshot_dir {
            let path = dir.join(format!("state_{index:06}.hprop1"));
            match File::create(&path) {
                Ok(f) => propagator::write_snapshot(BufWriter::new(f), u, t)?,
                Err(e) => {
                    io_error.get_or_insert(RunError::io(&path, e));
                }
            }
        }
        index += 1;
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let (final_state, guard_trip) = result?;
    if let Some(k) = sink.filter(|k| k.csv) {
        let path = k.dir.join("diagnostics.csv");
        let f = File::create(&path).map_err(|e| RunError::io(&path, e))?;
        diag.write_csv(BufWriter::new(f))?;
    }
    Ok(Simulation {
        diag,
        guard_trip,
        u1,
        kept,
        final_state,
    })
}

fn initial_state(cfg: &ScenarioConfig, model: &Model<f64>) -> Result<Field, RunError> {
    Ok(grid::sample(model.grid(), &cfg.initial_spec()?)?)
}

/// The configured fit window, defaulting to `[2, 0.8 T_wrap]`.
fn fit_window(cfg: &ScenarioConfig, t_end: f64, trip: Option<f64>) -> (f64, f64) {
    let (lo, hi) = diagnostics::default_fit_window(t_end, trip);
    (cfg.tolerances.fit_start.unwrap_or(lo), cfg.tolerances.fit_end.unwrap_or(hi))
}

/// Fits `quantity`, records the fit and checks its exponent lies in `[lo, hi]`.
fn exponent_check(
    s: &mut RunSummary,
    check: &str,
    quantity: &str,
    fit: hartree_core::Result<diagnostics::DecayFit>,
    window: (f64, f64),
    range: (f64, f64),
) -> Option<f64> {
    match fit {
        Ok(f) => {
            s.fits.push(FitReport::new(quantity, &f, window));
            s.check(Check::within(check, f.exponent, range.0, range.1));
            Some(f.r_squared)
        }
        Err(e) => {
            s.check(Check::new(check, false, format!("fit failed: {e}")));
            None
        }
    }
}

fn mass_check(s: &mut RunSummary, sim: &Simulation) {
    let drift = sim.mass_drift();
    s.metric("mass_drift", drift);
    s.check(Check::at_most("mass_drift", drift, 1e-11));
}

fn free_bound(d: usize) -> f64 {
    (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
}

fn free_decay(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let d = model.dimension();
    let half_d = d as f64 / 2.0;
    let u0 = initial_state(cfg, &model)?;
    let plan = cfg.plan()?;
    let sim = simulate(&model, &u0, &plan, sink, None)?;
    s.guard_trip = sim.guard_trip;
    let t_wrap = sim.guard_trip.unwrap_or(plan.t_end);

    let l1 = grid::l1_norm(&u0);
    let ratios: Vec<f64> = sim
        .diag
        .records()
        .iter()
        .filter(|r| r.t >= 1.0 && r.t <= 0.8 * t_wrap)
        .map(|r| r.t.powf(half_d) * r.sup_norm / l1)
        .collect();
    let bound = 1.05 * free_bound(d);
    if ratios.is_empty() {
        s.check(Check::new("dispersive_law", false, format!("no records in [1, {}]", 0.8 * t_wrap)));
    } else {
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        s.metric("dispersive_ratio", worst);
        s.check(Check::at_most("dispersive_law", worst, bound));
    }

    let window = fit_window(cfg, plan.t_end, sim.guard_trip);
    let fit = diagnostics::decay_fit(sim.diag.records(), window);
    let r2 = exponent_check(s, "decay_exponent", "sup_norm", fit, window, (half_d - 0.1, half_d + 0.1));
    s.check(match r2 {
        Some(r2) => Check::new("decay_r_squared", r2 >= 0.999, format!("{r2:.6} >= 0.999")),
        None => Check::new("decay_r_squared", false, "no fit"),
    });
    mass_check(s, &sim);

    // Closed-form comparison at the last recorded time.
    let t_last = sim.diag.records().last().expect("at least one record").t;
    let i = &cfg.initial;
    let shift = match i.family {
        InitialFamily::Gaussian => 0.0,
        InitialFamily::ChirpedGaussian => i.chirp_time.unwrap_or(0.0),
    };
    let exact = grid::sample(
        model.grid(),
        &AnalyticSpec::FreeGaussian {
            amplitude: i.amplitude,
            sigma: i.width,
            time: shift + t_last,
            images: 1,
        },
    )?;
    let err = grid::sup_norm(&exact.sub(&sim.final_state)?) / grid::sup_norm(&exact);
    s.metric("closed_form_relative_error", err);
    Ok(())
}

/// Forward `steps` steps then back again; relative 2-norm distance to `u0`.
fn reversibility_error(model: &Model<f64>, u0: &Field, dt: f64, steps: usize) -> Result<f64, RunError> {
    let mut values = u0.values().to_vec();
    Propagator::new(model, dt, false)?.advance(&mut values, steps);
    Propagator::new(model, -dt, false)?.advance(&mut values, steps);
    let back = Field::from_values(u0.grid().clone(), values)?;
    Ok(grid::l2_norm(&back.sub(u0)?) / grid::l2_norm(u0))
}

fn reversibility_check(s: &mut RunSummary, model: &Model<f64>, u0: &Field, plan: &StepPlan<f64>) -> Result<(), RunError> {
    let err = reversibility_error(model, u0, plan.dt, plan.steps())?;
    s.metric("reversibility_error", err);
    s.check(Check::at_most("reversibility", err, 1e-9));
    Ok(())
}

fn linear_times(horizon: f64) -> Vec<f64> {
    let count = (horizon / 0.5).floor().max(1.0) as usize;
    (1..=count).map(|j| 0.5 * j as f64).collect()
}

fn linear_dispersive(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let d = model.dimension();
    let half_d = d as f64 / 2.0;
    let u0 = initial_state(cfg, &model)?;
    let plan = cfg.plan()?;
    let sim = simulate(&model, &u0, &plan, sink, None)?;
    s.guard_trip = sim.guard_trip;

    let window = fit_window(cfg, plan.t_end, sim.guard_trip);
    let fit = diagnostics::decay_fit(sim.diag.records(), window);
    let r2 = exponent_check(s, "decay_exponent", "sup_norm", fit, window, (half_d - 0.1, half_d + 0.1));
    s.check(match r2 {
        Some(r2) => Check::new("decay_r_squared", r2 >= 0.99, format!("{r2:.6} >= 0.99")),
        None => Check::new("decay_r_squared", false, "no fit"),
    });

    let packets = corpus::wave_packets(model.grid(), cfg.corpus.size, cfg.seed)?;
    let times = linear_times(cfg.corpus.linear_horizon);
    let c_v = diagnostics::dispersive_constant(&model, &packets, &times, plan.dt)?;
    let c_ds = diagnostics::hk_propagation_constant(&model, &packets, &times, plan.dt)?;
    s.metric("dispersive_constant_raw", c_v.raw);
    s.metric("dispersive_constant_over_free", c_v.raw / free_bound(d));
    s.metric("hk_propagation_raw", c_ds.raw);
    s.check(Check::new(
        "dispersive_constant_finite",
        c_v.raw.is_finite() && c_v.raw > 0.0,
        format!("raw C_V = {:.6e}", c_v.raw),
    ));
    let mut ledger = ConstantsLedger::empty(d, model.sobolev_index());
    ledger.dispersive = Some(c_v);
    ledger.hk_propagation = Some(c_ds);
    s.ledger = Some(ledger);

    mass_check(s, &sim);
    reversibility_check(s, &model, &u0, &plan)
}

/// Measures every ledger constant from seeded corpora, on the `[corpus]`
/// grid when one is configured.
pub fn measure_ledger(cfg: &ScenarioConfig, model: &Model<f64>, max_dt: f64) -> Result<ConstantsLedger, RunError> {
    let c = &cfg.corpus;
    let d = model.dimension();
    let aux = match (c.points, c.half_length) {
        (Some(n), Some(l)) => {
            let g = grid::make_grid(d, n, l).map_err(|e| RunError::Invalid {
                module: "grid",
                message: format!("[corpus] grid: {e}"),
            })?;
            Model::new(ModelSpec::new(g, model.spec().potential, Nonlinearity::None))?
        }
        (None, None) => model.without_interaction(),
        _ => {
            return Err(RunError::Invalid {
                module: "config",
                message: "[corpus] needs both points and half_length, or neither".into(),
            })
        }
    };
    let g = aux.grid();
    let k = model.sobolev_index();
    let packets = corpus::wave_packets(g, c.size, cfg.seed)?;
    let band = corpus::band_limited_fields(g, c.size, c.bandwidth, cfg.seed ^ 1)?;
    let mixed: Vec<Field> = packets.iter().chain(&band).cloned().collect();
    let times = linear_times(c.linear_horizon);
    let pair_fields = corpus::band_limited_fields(g, 2 * c.pairs, c.bandwidth, cfg.seed ^ 2)?;
    let pairs: Vec<(Field, Field)> = pair_fields.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect();
    let mut ledger = ConstantsLedger::empty(d, k);
    ledger.dispersive = Some(diagnostics::dispersive_constant(&aux, &packets, &times, max_dt)?);
    ledger.hk_propagation = Some(diagnostics::hk_propagation_constant(&aux, &packets, &times, max_dt)?);
    ledger.norm_equivalence = Some(diagnostics::norm_equivalence_constant(&mixed, k)?);
    ledger.sobolev_embedding = Some(diagnostics::sobolev_embedding_constant(&mixed, k)?);
    ledger.kato_ponce = Some(diagnostics::kato_ponce_constant(&pairs, k)?);
    Ok(ledger)
}

fn bootstrap_error(e: hartree_core::Error) -> RunError {
    RunError::Invalid {
        module: "bootstrap",
        message: e.to_string(),
    }
}

fn small_data_hartree(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let d = model.dimension();
    let half_d = d as f64 / 2.0;
    let k = model.sobolev_index();
    let w_l1 = model.interaction_l1();
    let plan = cfg.plan()?;

    let ledger = measure_ledger(cfg, &model, plan.dt)?;
    s.ledger = Some(ledger);
    let analysis = bootstrap::ledger_analysis(&ledger, w_l1, cfg.bootstrap.epsilon).map_err(bootstrap_error)?;
    let budget = bootstrap::smallness_budget(&analysis, &ledger).map_err(bootstrap_error)?;
    s.smallness = Some(budget);

    let u0 = initial_state(cfg, &model)?;
    let sim = simulate(&model, &u0, &plan, sink, None)?;
    s.guard_trip = sim.guard_trip;

    match &sim.u1 {
        Some(u1) => {
            let linear_l1 = diagnostics::backward_linear_l1(u1, &model, plan.dt)?;
            let hk = grid::sobolev_norm(u1, k as f64)?;
            s.metric("linear_l1_at_one", linear_l1);
            s.metric("hk_norm_at_one", hk);
            s.check(Check::new(
                "smallness",
                budget.admits(linear_l1, hk),
                format!("||e^(iH)u_1||_1 = {linear_l1:.3e}, ||u_1||_Hk = {hk:.3e}, epsilon0 = {:.3e}", budget.epsilon0),
            ));
            let chain = diagnostics::estimate_chain_check(
                &sim.diag,
                &ledger,
                ChainInputs {
                    w_l1,
                    linear_l1,
                    initial_hk: hk,
                    m_scale: 1.0,
                },
            )?;
            s.metric("estimate_chain_min_margin", chain.min_margin);
            s.table("estimate_chain", &chain.rows);
        }
        None => s.check(Check::new("smallness", false, "run ended before t = 1")),
    }

    let window = fit_window(cfg, plan.t_end, sim.guard_trip);
    let records = sim.diag.records();
    exponent_check(
        s,
        "sup_exponent",
        "sup_norm",
        diagnostics::decay_fit(records, window),
        window,
        (half_d - 0.15, half_d + 0.15),
    );
    exponent_check(
        s,
        "dt_exponent",
        "dt_sup_norm",
        diagnostics::derivative_decay_fit(records, window),
        window,
        (half_d - 0.2, half_d + 0.2),
    );

    let m_series: Vec<f64> = sim.diag.m_series();
    let monotone = m_series.windows(2).all(|w| w[1] >= w[0]);
    s.check(Check::new("running_m_monotone", monotone && !m_series.is_empty(), format!("{} samples", m_series.len())));
    let c0 = budget.c0;
    let m_max = m_series.iter().copied().fold(0.0, f64::max);
    s.metric("running_m", m_max);
    s.check(Check::at_most("running_m_below_c0", m_max, c0));
    match bootstrap::continuity_trap(&m_series, &analysis) {
        Ok(trap) => {
            s.check(Check::new(
                "continuity_trap",
                trap.verdict == Verdict::Pass,
                format!("{:?}, margin {:.6e}", trap.verdict, trap.margin),
            ));
            s.bootstrap = Some(BootstrapSummary::new(&analysis, Some(&trap)));
        }
        Err(e) => {
            s.check(Check::new("continuity_trap", false, e.to_string()));
            s.bootstrap = Some(BootstrapSummary::new(&analysis, None));
        }
    }
    mass_check(s, &sim);
    Ok(())
}

/// Largest relative energy change along a run at step `dt`.
fn energy_drift(model: &Model<f64>, u0: &Field, dt: f64, t_end: f64, stride: usize) -> Result<f64, RunError> {
    let plan = StepPlan::new(dt, 0.0, t_end, stride)?;
    let e0 = physics::energy(u0, model)?;
    let mut worst = 0.0f64;
    propagator::evolve_observed(u0, model, &plan, |_, u| {
        worst = worst.max(((physics::energy(u, model)? - e0) / e0).abs());
        Ok(())
    })?;
    Ok(worst)
}

fn state_at(model: &Model<f64>, u0: &Field, dt: f64, steps: usize) -> Result<Field, RunError> {
    let mut values = u0.values().to_vec();
    Propagator::new(model, dt, false)?.advance(&mut values, steps);
    Ok(Field::from_values(u0.grid().clone(), values)?)
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Serialize)]
struct ConvergenceRow {
    dt: f64,
    error: f64,
}

fn small_data_cubic(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let u0 = initial_state(cfg, &model)?;
    let plan = cfg.plan()?;
    let sim = simulate(&model, &u0, &plan, sink, None)?;
    s.guard_trip = sim.guard_trip;
    mass_check(s, &sim);

    let coarse = energy_drift(&model, &u0, plan.dt, plan.t_end, plan.snapshot_stride)?;
    let fine = energy_drift(&model, &u0, plan.dt / 2.0, plan.t_end, 2 * plan.snapshot_stride)?;
    s.metric("energy_drift", coarse);
    s.metric("energy_drift_half_dt", fine);
    s.check(Check::within("energy_drift_ratio", coarse / fine, 4.0 * 0.7, 4.0 * 1.3));

    let steps = plan.steps();
    let reference = state_at(&model, &u0, plan.dt / 64.0, steps * 64)?;
    let norm = grid::l2_norm(&reference);
    let mut rows = Vec::new();
    for m in [1usize, 2, 4] {
        let u = state_at(&model, &u0, plan.dt / m as f64, steps * m)?;
        rows.push(ConvergenceRow {
            dt: plan.dt / m as f64,
            error: grid::l2_norm(&u.sub(&reference)?) / norm,
        });
    }
    let slope = log_slope(&rows.iter().map(|r| (r.dt, r.error)).collect::<Vec<_>>());
    s.metric("convergence_slope", slope);
    s.table("self_convergence", &rows);
    s.check(Check::within("convergence_slope", slope, 1.8, 2.2));
    reversibility_check(s, &model, &u0, &plan)
}

#[derive(Debug, Serialize)]
struct DuhamelRow {
    spacing: f64,
    snapshots: usize,
    residual: f64,
}

fn derivative_decay(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let half_d = model.dimension() as f64 / 2.0;
    let u0 = initial_state(cfg, &model)?;
    let plan = cfg.plan()?;
    let horizon = cfg.duhamel.t_end;
    let sim = simulate(&model, &u0, &plan, sink, Some(horizon))?;
    s.guard_trip = sim.guard_trip;

    let window = fit_window(cfg, plan.t_end, sim.guard_trip);
    let records = sim.diag.records();
    exponent_check(
        s,
        "dt_exponent",
        "dt_sup_norm",
        diagnostics::derivative_decay_fit(records, window),
        window,
        (half_d - 0.2, half_d + 0.2),
    );
    if let Ok(f) = diagnostics::decay_fit(records, window) {
        s.fits.push(FitReport::new("sup_norm", &f, window));
    }
    mass_check(s, &sim);

    // Duhamel residual at the horizon under snapshot refinement.
    let mut rows = Vec::new();
    for &every in &cfg.duhamel.spacings {
        let (times, snapshots): (Vec<f64>, Vec<Field>) = sim
            .kept
            .iter()
            .enumerate()
            .filter(|(j, _)| j % every == 0)
            .map(|(_, (t, u))| (*t, u.clone()))
            .unzip();
        let last = times.len().saturating_sub(1);
        let trajectory = Trajectory {
            times,
            snapshots,
            model: model.clone(),
            plan,
            guard_trip: None,
        };
        let residual = propagator::duhamel_residual(&trajectory, last)?;
        rows.push(DuhamelRow {
            spacing: every as f64 * plan.dt * plan.snapshot_stride as f64,
            snapshots: trajectory.len(),
            residual,
        });
    }
    let orders: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[0].residual / w[1].residual).ln() / (w[0].spacing / w[1].spacing).ln())
        .collect();
    let order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    s.metric("duhamel_order", order);
    s.table("duhamel", &rows);
    s.check(Check::new("duhamel_order", order >= 2.0, format!("orders {orders:.4?} >= 2")));
    let finest = rows.last().expect("spacings validated non-empty").residual;
    s.metric("duhamel_residual", finest);
    s.check(Check::at_most("duhamel_residual", finest, 1e-4));
    Ok(())
}

#[derive(Debug, Serialize)]
struct CubicLimitRow {
    index: u32,
    w_l1: f64,
    sup_error: f64,
    epsilon_n: f64,
    growth_constant: f64,
    /// `max_t ||u - u_n||_2^2 / (eps_n(t) e^{Ct})`.
    worst_bound_ratio: f64,
}

fn cubic_limit(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let sign = match model.spec().nonlinearity {
        Nonlinearity::Cubic(sign) => sign.factor::<f64>(),
        _ => unreachable!("validated as cubic"),
    };
    let u0 = initial_state(cfg, &model)?;
    let plan = cfg.plan()?;
    let sim = simulate(&model, &u0, &plan, sink, Some(plan.t_end))?;
    s.guard_trip = sim.guard_trip;
    mass_check(s, &sim);
    let mass0 = grid::l2_norm(&u0).powi(2);
    let cubic: Vec<&(f64, Field)> = sim.kept.iter().collect();

    let mut rows = Vec::new();
    for &n in &cfg.cubic_limit.indices {
        let spec = InteractionSpec::mollified(sign, cfg.cubic_limit.width, n);
        let model_n = Model::new(ModelSpec::new(
            model.grid().clone(),
            model.spec().potential,
            Nonlinearity::Hartree(spec),
        ))?;
        // per record: (t, ||u - u_n||_2^2, || |u|^2 - w_n * |u|^2 ||_inf, ||u||_inf, ||u_n||_inf)
        let mut samples: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
        let mut j = 0;
        propagator::evolve_observed(&u0, &model_n, &plan, |t, un| {
            if let Some((tc, u)) = cubic.get(j) {
                debug_assert!((tc - t).abs() < 1e-9);
                let err = grid::l2_norm(&u.sub(un)?).powi(2);
                let local = physics::hartree_term(u, &model)?;
                let smeared = physics::hartree_term(u, &model_n)?;
                let gap = grid::sup_norm(&local.sub(&smeared)?);
                samples.push((t, err, gap, grid::sup_norm(u), grid::sup_norm(un)));
            }
            j += 1;
            Ok(())
        })?;
        let sup_u = samples.iter().map(|x| x.3).fold(0.0, f64::max);
        let sup_sum = samples.iter().map(|x| x.3 + x.4).fold(0.0, f64::max);
        let growth = 2.0 * sup_sum * sup_u;
        let mut integral = 0.0;
        let mut worst = 0.0f64;
        for w in samples.windows(2) {
            integral += 0.5 * (w[1].0 - w[0].0) * (w[0].2 + w[1].2);
            let eps_t = 2.0 * mass0 * integral;
            worst = worst.max(w[1].1 / (eps_t * (growth * w[1].0).exp()));
        }
        rows.push(CubicLimitRow {
            index: n,
            w_l1: spec.l1_norm().abs(),
            sup_error: samples.iter().map(|x| x.1.sqrt()).fold(0.0, f64::max),
            epsilon_n: 2.0 * mass0 * integral,
            growth_constant: growth,
            worst_bound_ratio: worst,
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    s.check(Check::new(
        "errors_decreasing",
        errors.windows(2).all(|w| w[1] < w[0]),
        format!("sup_t ||u - u_n||_2 = {errors:?}"),
    ));
    for r in &rows {
        s.check(Check::at_most(&format!("bound_n{}", r.index), r.worst_bound_ratio, 1.0));
    }
    let spread = rows.iter().map(|r| (r.w_l1 - rows[0].w_l1).abs()).fold(0.0, f64::max);
    s.metric("w_l1_spread", spread);
    s.check(Check::at_most("w_l1_constant", spread, 1e-12));
    s.table("cubic_limit", &rows);
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    components: usize,
}

fn bootstrap_sweep(cfg: &ScenarioConfig, s: &mut RunSummary) -> Result<(), RunError> {
    let b = &cfg.bootstrap;
    let c = b.c_coeff.expect("validated");
    let eps = b.epsilon.unwrap_or_else(|| bootstrap::default_epsilon(c));
    let a = bootstrap::analyze(eps, c).map_err(bootstrap_error)?;
    let gap = a.gap().unwrap_or(0.0);
    s.check(Check::new(
        "two_components",
        a.two_components() && gap > 0.0,
        format!("{} components, gap {gap:.6e}", a.intervals.len()),
    ));
    let c0 = a.c0.unwrap_or(f64::NAN);
    s.check(Check::at_most("c0_is_root", a.f(c0).abs(), 1e-12));
    s.check(Check::at_most("root_agreement", a.root_disagreement(), 1e-12));
    s.bootstrap = Some(BootstrapSummary::new(&a, None));

    // Random (eps, C): the stationary value against the displayed identity,
    // its exact value, and the inequality the argument needs.
    let mut rng = corpus::rng(cfg.seed);
    let (mut literal, mut exact, mut slack, mut agree) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for _ in 0..b.samples {
        let c = 10f64.powf(rng.gen_range(-1.0..2.0));
        let eps = rng.gen_range(1e-3..1.0) * bootstrap::fold_epsilon(c) * 1.5;
        let a = bootstrap::analyze(eps, c).map_err(bootstrap_error)?;
        let fx = a.stationary_value();
        let r = (6.0 * c).sqrt();
        literal = literal.max((fx - (eps - 1.0 / (2.0 * r))).abs());
        exact = exact.max((fx - (eps - 5.0 / (6.0 * r))).abs());
        slack = slack.min(eps - 1.0 / (2.0 * r) - fx);
        agree = agree.max(a.root_disagreement());
    }
    s.check(Check::at_most("stationary_identity_displayed", literal, 1e-14));
    s.check(Check::at_most("stationary_identity_exact", exact, 1e-14));
    s.check(Check::new("stationary_inequality", slack >= 0.0, format!("min slack {slack:.6e} >= 0")));
    s.check(Check::at_most("random_root_agreement", agree, 1e-12));

    // Sweep across the fold: two components below it, one above.
    let fold = bootstrap::fold_epsilon(c);
    let mut rows = Vec::new();
    for j in 0..b.sweep_points {
        let e = fold * (0.5 + j as f64 / (b.sweep_points - 1) as f64);
        rows.push(SweepRow {
            epsilon: e,
            components: bootstrap::analyze(e, c).map_err(bootstrap_error)?.intervals.len(),
        });
    }
    let consistent = rows
        .iter()
        .filter(|r| (r.epsilon - fold).abs() > 1e-9 * fold)
        .all(|r| r.components == if r.epsilon < fold { 2 } else { 1 });
    s.check(Check::new("fold_transition", consistent, format!("fold at epsilon = {fold:.12}")));
    s.metric("fold_epsilon", fold);
    s.metric("threshold", a.threshold);
    s.table("fold_sweep", &rows);
    Ok(())
}

fn inequality_suite(cfg: &ScenarioConfig, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let k = model.sobolev_index();
    let g = model.grid();
    let c = &cfg.corpus;

    // Kernel integral in d = 3.
    let values: Vec<f64> = (2..=100)
        .map(|t| diagnostics::kernel_integral(t as f64, 3))
        .collect::<hartree_core::Result<_>>()?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    s.metric("kernel_integral_max", max);
    s.metric("kernel_integral_min", min);
    s.check(Check::new("kernel_bounded", max.is_finite(), format!("max {max:.6}")));
    s.check(Check::at_most("kernel_ratio", max / min, 2.0));
    let d2 = diagnostics::kernel_integral(10.0, 2);
    s.check(Check::new(
        "kernel_d2_rejected",
        matches!(d2, Err(hartree_core::Error::Dimension { d: 2, .. })),
        format!("{d2:?}"),
    ));

    // Kato-Ponce over seeded pairs, and again under a second seed.
    let pairs_for = |seed: u64| -> Result<Vec<(Field, Field)>, RunError> {
        let fields = corpus::band_limited_fields(g, 2 * c.pairs, c.bandwidth, seed)?;
        Ok(fields.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect())
    };
    let pairs = pairs_for(cfg.seed)?;
    let kp = diagnostics::kato_ponce_constant(&pairs, k)?;
    let worst = pairs
        .iter()
        .map(|(f, h)| diagnostics::kato_ponce_ratio(f, h, k))
        .collect::<hartree_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    s.check(Check::at_most("kato_ponce_bounded", worst, kp.value));
    let kp2 = diagnostics::kato_ponce_constant(&pairs_for(cfg.seed.wrapping_add(1))?, k)?;
    let change = (kp2.raw - kp.raw).abs() / kp.raw;
    s.metric("kato_ponce_raw", kp.raw);
    s.metric("kato_ponce_raw_reseeded", kp2.raw);
    s.check(Check::at_most("kato_ponce_reseed_stability", change, 0.1));
    let mut scale_err = 0.0f64;
    for (f, h) in pairs.iter().take(10) {
        let base = diagnostics::kato_ponce_ratio(f, h, k)?;
        for (a, b) in [(3.0, 0.25), (1e-3, 7.0), (-2.0, 1e4)] {
            let r = diagnostics::kato_ponce_ratio(&f.scale(a.into()), &h.scale(b.into()), k)?;
            scale_err = scale_err.max((r - base).abs() / base);
        }
    }
    s.check(Check::at_most("kato_ponce_scale_invariance", scale_err, 1e-12));

    // Equivalent norm with the configured potential, and the free bound.
    let packets = corpus::wave_packets(g, c.size, cfg.seed ^ 3)?;
    let band = corpus::band_limited_fields(g, c.size, c.bandwidth, cfg.seed ^ 4)?;
    let fields: Vec<Field> = packets.into_iter().chain(band).collect();
    let mut hi = (0.0f64, 0.0f64);
    for f in &fields {
        let (a, b) = diagnostics::equivalent_norm_ratio(f, &model, k)?;
        hi = (hi.0.max(a), hi.1.max(b));
    }
    s.metric("equivalent_norm_upper", hi.0);
    s.metric("equivalent_norm_lower", hi.1);
    s.check(Check::new(
        "equivalent_norm_ratios",
        hi.0.is_finite() && hi.1.is_finite() && hi.0 * hi.1 >= 1.0,
        format!("max ratios {:.6} and {:.6}, product {:.6} >= 1", hi.0, hi.1, hi.0 * hi.1),
    ));
    let free = Model::new(ModelSpec::new(g.clone(), PotentialSpec::Zero, Nonlinearity::None))?;
    let (bound_a, bound_b) = diagnostics::free_equivalence_bounds(g, k);
    let mut excess = f64::NEG_INFINITY;
    for f in &fields {
        let (a, b) = diagnostics::equivalent_norm_ratio(f, &free, k)?;
        excess = excess.max(a - bound_a).max(b - bound_b);
    }
    s.check(Check::new("free_equivalence_bound", excess <= 0.0, format!("largest excess {excess:.3e} <= 0")));

    let mut ledger = ConstantsLedger::empty(model.dimension(), k);
    ledger.kato_ponce = Some(kp);
    ledger.norm_equivalence = Some(diagnostics::norm_equivalence_constant(&fields, k)?);
    ledger.sobolev_embedding = Some(diagnostics::sobolev_embedding_constant(&fields, k)?);
    s.ledger = Some(ledger);
    Ok(())
}

fn large_data_gronwall(cfg: &ScenarioConfig, sink: Option<&Sink>, s: &mut RunSummary) -> Result<(), RunError> {
    let model = cfg.model()?;
    let d = model.dimension();
    let w_l1 = model.interaction_l1();
    let plan = cfg.plan()?;
    let t0 = cfg.gronwall.t0;
    let ledger = measure_ledger(cfg, &model, plan.dt)?;
    s.ledger = Some(ledger);

    let u0 = initial_state(cfg, &model)?;
    let sim = simulate(&model, &u0, &plan, sink, None)?;
    s.guard_trip = sim.guard_trip;
    mass_check(s, &sim);
    let u1 = sim.u1.as_ref().ok_or_else(|| RunError::Invalid {
        module: "config",
        message: "large_data_gronwall needs t_end >= 1".into(),
    })?;
    let records = sim.diag.records();
    let running = sim.diag.running();
    let last_before = records.iter().rposition(|r| r.t <= t0 + 1e-12).expect("t = 0 is recorded");
    let n_t0 = running[last_before].n;
    let n_t = sim.diag.running_n();
    let linear_l1 = diagnostics::backward_linear_l1(u1, &model, plan.dt)?;
    let l2 = grid::l2_norm(u1);
    let sup_dk = records.iter().filter(|r| r.t >= 1.0).map(|r| r.dk_l2).fold(0.0, f64::max);
    let c1 = bootstrap::large_data_c1(&ledger, w_l1, l2, sup_dk)?;
    let alpha = bootstrap::gronwall_alpha(d, c1, n_t0, ledger.c_v()?, linear_l1)?;
    let beta = bootstrap::beta_l1(d, c1, t0)?;
    let beta_q = bootstrap::beta_l1_quadrature(d, c1, t0)?;
    let reference = bootstrap::beta_l1(3, 1.0, 4.0)?;
    let reference_q = bootstrap::beta_l1_quadrature(3, 1.0, 4.0)?;
    let bound = bootstrap::gronwall_bound(alpha, beta)?;
    let tail_sup = records
        .iter()
        .filter(|r| r.t >= t0 / 2.0)
        .map(|r| r.sup_norm.powf(0.25) + r.sup_norm)
        .fold(0.0, f64::max);
    for (name, v) in [
        ("c1", c1),
        ("alpha", alpha),
        ("beta_l1", beta),
        ("beta_l1_quadrature", beta_q),
        ("gronwall_bound", bound),
        ("running_n_at_t0", n_t0),
        ("running_n", n_t),
        ("t0_condition", bootstrap::t0_condition(d, c1, tail_sup)?),
    ] {
        s.metric(name, v);
    }
    s.check(Check::at_most("beta_quadrature", (beta - beta_q).abs() / beta.abs().max(1e-300), 1e-10));
    s.check(Check::at_most("beta_quadrature_reference", (reference - reference_q).abs() / reference, 1e-10));
    s.check(Check::at_most("n_below_gronwall_bound", n_t, bound));
    Ok(())
}
