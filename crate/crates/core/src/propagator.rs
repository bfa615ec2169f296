//! Strang split-step time integration, the linear flow `e^{-itH}`, the time
//! derivative along a trajectory and a Duhamel-formula residual.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, GridSpec, Symbol};
use crate::physics::{self, Model, ModelSpec};
use crate::scalar::Real;

/// What `evolve` does when the boundary-mass guard trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardAction {
    /// Return [`Error::BoundaryMass`].
    #[default]
    Abort,
    /// Keep the snapshots recorded so far and report the trip time.
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan<T> {
    pub dt: T,
    pub t_start: T,
    pub t_end: T,
    pub snapshot_stride: usize,
    /// Two-thirds dealiasing in the kinetic substep.
    pub spectral_filter: bool,
    /// Largest tolerated fraction of mass in the boundary shell `|x_a| >= 0.9 L`.
    pub boundary_limit: Option<T>,
    pub on_boundary: GuardAction,
}

impl<T: Real> StepPlan<T> {
    pub fn new(dt: T, t_start: T, t_end: T, snapshot_stride: usize) -> Result<Self> {
        let plan = Self {
            dt,
            t_start,
            t_end,
            snapshot_stride,
            spectral_filter: false,
            boundary_limit: None,
            on_boundary: GuardAction::Abort,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_filter(mut self, on: bool) -> Self {
        self.spectral_filter = on;
        self
    }

    pub fn with_boundary_guard(mut self, limit: T, action: GuardAction) -> Self {
        self.boundary_limit = Some(limit);
        self.on_boundary = action;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= T::zero() {
            return Err(Error::InvalidPlan(format!("dt = {} must be positive", self.dt)));
        }
        if !self.t_start.is_finite() || !self.t_end.is_finite() || self.t_end <= self.t_start {
            return Err(Error::InvalidPlan(format!(
                "need t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidPlan("snapshot_stride must be positive".into()));
        }
        let ratio = ((self.t_end - self.t_start) / self.dt).to_f64_lossy();
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidPlan(format!(
                "(t_end - t_start)/dt = {ratio} is not an integer"
            )));
        }
        if let Some(limit) = self.boundary_limit {
            if !limit.is_finite() || limit < T::zero() {
                return Err(Error::InvalidPlan(format!("boundary limit {limit} invalid")));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).to_f64_lossy().round() as usize
    }

    /// Time of step `j`, computed without accumulating roundoff.
    pub fn time_at(&self, step: usize) -> T {
        self.t_start + T::from_usize_exact(step) * self.dt
    }

    pub fn snapshot_count(&self) -> usize {
        self.steps() / self.snapshot_stride + 1
    }
}

/// A recorded solution curve.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub snapshots: Vec<ComplexField<T>>,
    pub model: Model<T>,
    pub plan: StepPlan<T>,
    /// Time at which the boundary guard stopped the run, if it did.
    pub guard_trip: Option<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn model_spec(&self) -> &ModelSpec<T> {
        self.model.spec()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<(T, &ComplexField<T>)> {
        self.times.last().copied().zip(self.snapshots.last())
    }
}

/// Split-step integrator with reusable buffers.
///
/// Consecutive half kicks share one evaluation of `w * |u|^2`, since the kick
/// only changes the phase of `u`. A step therefore costs four transforms for a
/// Hartree model and two otherwise.
pub struct Propagator<T: Real> {
    model: Model<T>,
    dt: T,
    /// `e^{-i dt |xi|^2} / n^d`, zero outside the two-thirds region when filtering.
    drift: Vec<Complex<T>>,
    /// `V + N(u)` for the current state.
    kick_potential: Vec<T>,
    nonlinear: Vec<T>,
    fresh: bool,
}

impl<T: Real> Propagator<T> {
    /// `dt` may be negative for backward stepping.
    pub fn new(model: &Model<T>, dt: T, filter: bool) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::NonFiniteParameter("dt"));
        }
        let grid = model.grid();
        let inv_n = T::one() / T::from_usize_exact(grid.len());
        let drift = grid
            .xi_squared()
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                if filter && !grid.in_two_thirds(i) {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::from_polar(inv_n, -(dt * q))
                }
            })
            .collect();
        Ok(Self {
            model: model.clone(),
            dt,
            drift,
            kick_potential: Vec::with_capacity(grid.len()),
            nonlinear: Vec::with_capacity(grid.len()),
            fresh: false,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn refresh(&mut self, u: &[Complex<T>]) {
        self.model.nonlinear_potential_into(u, &mut self.nonlinear);
        self.kick_potential.clear();
        self.kick_potential.extend(
            self.model
                .potential()
                .iter()
                .zip(&self.nonlinear)
                .map(|(&v, &n)| v + n),
        );
        self.fresh = true;
    }

    fn kick(&self, u: &mut [Complex<T>], tau: T) {
        for (z, &p) in u.iter_mut().zip(&self.kick_potential) {
            *z = *z * Complex::from_polar(T::one(), -(tau * p));
        }
    }

    fn drift(&self, u: &mut [Complex<T>]) {
        let grid = self.model.grid();
        grid.raw_forward(u);
        for (z, &m) in u.iter_mut().zip(&self.drift) {
            *z = *z * m;
        }
        grid.raw_inverse(u);
    }

    /// One Strang step `B(dt/2) A(dt) B(dt/2)` in place.
    pub fn step(&mut self, u: &mut [Complex<T>]) {
        let half = self.dt * T::lit(0.5);
        if !self.fresh {
            self.refresh(u);
        }
        self.kick(u, half);
        self.drift(u);
        self.refresh(u);
        self.kick(u, half);
    }

    /// `count` steps with the inner half kicks fused into full kicks.
    pub fn advance(&mut self, u: &mut [Complex<T>], count: usize) {
        if count == 0 {
            return;
        }
        let half = self.dt * T::lit(0.5);
        if !self.fresh {
            self.refresh(u);
        }
        self.kick(u, half);
        for j in 0..count {
            self.drift(u);
            self.refresh(u);
            let tau = if j + 1 == count { half } else { self.dt };
            self.kick(u, tau);
        }
    }

    /// Marks the cached potential stale after `u` was modified externally.
    pub fn invalidate(&mut self) {
        self.fresh = false;
    }
}

/// One Strang step of size `dt`.
pub fn strang_step<T: Real>(u: &ComplexField<T>, dt: T, model: &Model<T>) -> Result<ComplexField<T>> {
    check_grid(u, model)?;
    if !u.is_finite() {
        return Err(Error::NumericalBlowUp { t: f64::NAN });
    }
    let mut p = Propagator::new(model, dt, false)?;
    let mut values = u.values().to_vec();
    p.step(&mut values);
    let out = ComplexField::from_values_unchecked(u.grid().clone(), values);
    if !out.is_finite() {
        return Err(Error::NumericalBlowUp { t: dt.to_f64_lossy() });
    }
    Ok(out)
}

fn check_grid<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<()> {
    if **u.grid() != **model.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Runs the plan, handing each stride-point state to `observe` instead of
/// storing it. Returns the final state and the guard trip time, if any.
pub fn evolve_observed<T: Real, F>(
    u0: &ComplexField<T>,
    model: &Model<T>,
    plan: &StepPlan<T>,
    mut observe: F,
) -> Result<(ComplexField<T>, Option<T>)>
where
    F: FnMut(T, &ComplexField<T>) -> Result<()>,
{
    plan.validate()?;
    check_grid(u0, model)?;
    if !u0.is_finite() {
        return Err(Error::NumericalBlowUp { t: plan.t_start.to_f64_lossy() });
    }
    let steps = plan.steps();
    let mut p = Propagator::new(model, plan.dt, plan.spectral_filter)?;
    let mut u = u0.clone();
    let mut done = 0;
    loop {
        let t = plan.time_at(done);
        if let Some(limit) = plan.boundary_limit {
            let fraction = u.boundary_mass_fraction();
            if fraction > limit {
                match plan.on_boundary {
                    GuardAction::Abort => {
                        return Err(Error::BoundaryMass {
                            t: t.to_f64_lossy(),
                            fraction: fraction.to_f64_lossy(),
                            limit: limit.to_f64_lossy(),
                        })
                    }
                    GuardAction::Stop => return Ok((u, Some(t))),
                }
            }
        }
        observe(t, &u)?;
        if done == steps {
            break;
        }
        let count = plan.snapshot_stride.min(steps - done);
        p.advance(u.values_mut(), count);
        done += count;
        if !u.is_finite() {
            return Err(Error::NumericalBlowUp { t: plan.time_at(done).to_f64_lossy() });
        }
    }
    Ok((u, None))
}

/// Runs the plan and records snapshots every `snapshot_stride` steps.
///
/// When the final step is not a stride multiple, the end state is recorded too.
pub fn evolve<T: Real>(
    u0: &ComplexField<T>,
    model: &Model<T>,
    plan: &StepPlan<T>,
) -> Result<Trajectory<T>> {
    let mut times = Vec::with_capacity(plan.snapshot_count() + 1);
    let mut snapshots = Vec::with_capacity(plan.snapshot_count() + 1);
    let (_, guard_trip) = evolve_observed(u0, model, plan, |t, u| {
        times.push(t);
        snapshots.push(u.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        snapshots,
        model: model.clone(),
        plan: *plan,
        guard_trip,
    })
}

/// `e^{-itH} f` with `H = -Laplace + V`.
///
/// Exact single multiplier when `V = 0`; otherwise Strang steps of at most
/// `max_dt` with the interaction removed.
pub fn linear_propagate<T: Real>(
    f: &ComplexField<T>,
    t: T,
    model: &Model<T>,
    max_dt: T,
) -> Result<ComplexField<T>> {
    check_grid(f, model)?;
    if !t.is_finite() {
        return Err(Error::NonFiniteParameter("time"));
    }
    if t == T::zero() {
        return Ok(f.clone());
    }
    if !model.has_potential() {
        return Ok(grid::apply_operator(f, Symbol::FreeFlow(t))?);
    }
    if !max_dt.is_finite() || max_dt <= T::zero() {
        return Err(Error::InvalidPlan(format!("max_dt = {max_dt} must be positive")));
    }
    let steps = (t.abs() / max_dt).ceil().to_f64_lossy().max(1.0) as usize;
    let dt = t / T::from_usize_exact(steps);
    let linear = model.without_interaction();
    let mut p = Propagator::new(&linear, dt, false)?;
    let mut values = f.values().to_vec();
    p.advance(&mut values, steps);
    let out = ComplexField::from_values_unchecked(f.grid().clone(), values);
    if !out.is_finite() {
        return Err(Error::NumericalBlowUp { t: t.to_f64_lossy() });
    }
    Ok(out)
}

/// `u_t` from the equation itself.
pub fn time_derivative<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<ComplexField<T>> {
    physics::rhs(u, model)
}

/// Relative residual of Duhamel's formula between the first snapshot and
/// snapshot `t_index`, with the integral discretized by the composite
/// trapezoid rule on the snapshot times.
///
/// Propagators act linearly, so the sum
/// `e^{-i(t-t0)H} u0 - i sum_j w_j e^{-i(t-s_j)H} g_j` is accumulated by
/// propagating a running total between consecutive snapshot times.
pub fn duhamel_residual<T: Real>(trajectory: &Trajectory<T>, t_index: usize) -> Result<T> {
    let len = trajectory.len();
    if len < 3 {
        return Err(Error::TooFewSnapshots(len));
    }
    if t_index >= len {
        return Err(Error::SnapshotIndex { index: t_index, len });
    }
    let model = &trajectory.model;
    let max_dt = trajectory.plan.dt;
    let target = &trajectory.snapshots[t_index];
    let times = &trajectory.times;
    let source = |j: usize| -> Result<ComplexField<T>> {
        let u = &trajectory.snapshots[j];
        let n = physics::hartree_term(u, model)?;
        u.zip_map(&n, |a, b| a * b.re)
    };
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut acc = trajectory.snapshots[0].clone();
    if t_index > 0 {
        let w0 = (times[1] - times[0]) * T::lit(0.5);
        acc = acc.add(&source(0)?.scale(minus_i * w0))?;
        for j in 1..=t_index {
            let step = times[j] - times[j - 1];
            acc = linear_propagate(&acc, step, model, max_dt)?;
            let w = if j == t_index {
                step * T::lit(0.5)
            } else {
                (times[j + 1] - times[j - 1]) * T::lit(0.5)
            };
            acc = acc.add(&source(j)?.scale(minus_i * w))?;
        }
    }
    let norm = grid::l2_norm(target);
    let diff = grid::l2_norm(&target.sub(&acc)?);
    if norm == T::zero() {
        return Ok(diff);
    }
    Ok(diff / norm)
}

const SNAPSHOT_MAGIC: &[u8; 6] = b"HPROP1";

/// Writes `field` at time `t` in the `HPROP1` binary layout.
pub fn write_snapshot<T: Real, W: Write>(mut out: W, field: &ComplexField<T>, t: T) -> Result<()> {
    let grid = field.grid();
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&[grid.dimension() as u8])?;
    out.write_all(&(grid.points_per_axis() as u32).to_le_bytes())?;
    out.write_all(&grid.half_length().to_f64_lossy().to_le_bytes())?;
    out.write_all(&t.to_f64_lossy().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_f64_lossy().to_le_bytes());
        buf.extend_from_slice(&z.im.to_f64_lossy().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads an `HPROP1` snapshot, rebuilding its grid.
pub fn read_snapshot<T: Real, R: Read>(mut input: R) -> Result<(ComplexField<T>, T)> {
    let mut magic = [0u8; 6];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut d = [0u8; 1];
    input.read_exact(&mut d)?;
    let mut n = [0u8; 4];
    input.read_exact(&mut n)?;
    let mut f = [0u8; 8];
    input.read_exact(&mut f)?;
    let half_length = f64::from_le_bytes(f);
    input.read_exact(&mut f)?;
    let t = f64::from_le_bytes(f);
    let grid: Arc<GridSpec<T>> =
        grid::make_grid(d[0] as usize, u32::from_le_bytes(n) as usize, T::lit(half_length))?;
    let mut raw = vec![0u8; 16 * grid.len()];
    input.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    Ok((ComplexField::from_values(grid, values)?, T::lit(t)))
}
