//! Measurements along trajectories: per-time norms, running sup quantities,
//! decay fits, and numerical witnesses for the inequalities behind the decay
//! estimates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, GridSpec};
use crate::physics::{self, Model};
use crate::propagator;
use crate::scalar::Real;

/// Norms of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    /// `||u||_2`.
    pub mass: T,
    pub energy: T,
    pub sup_norm: T,
    pub l1_norm: T,
    pub hk_norm: T,
    /// `||D^k u||_2`.
    pub dk_l2: T,
    /// `||u_t||_inf`.
    pub dt_sup_norm: T,
    /// `||D^k u_t||_2`.
    pub dt_dk_l2: T,
    /// `||u_t||_2`.
    pub dt_l2: T,
    pub boundary_mass_fraction: T,
}

pub fn record<T: Real>(t: T, u: &ComplexField<T>, model: &Model<T>) -> Result<DiagnosticsRecord<T>> {
    if !u.is_finite() {
        return Err(Error::NumericalBlowUp { t: t.to_f64_lossy() });
    }
    let k = T::from_usize_exact(model.sobolev_index() as usize);
    let spectral = grid::forward_transform(u);
    let du = propagator::time_derivative(u, model)?;
    let du_spectral = grid::forward_transform(&du);
    Ok(DiagnosticsRecord {
        t,
        mass: grid::l2_norm(u),
        energy: physics::energy(u, model)?,
        sup_norm: grid::sup_norm(u),
        l1_norm: grid::l1_norm(u),
        hk_norm: grid::spectral_sobolev_norm(&spectral, k)?,
        dk_l2: grid::spectral_dk_norm(&spectral, k)?,
        dt_sup_norm: grid::sup_norm(&du),
        dt_dk_l2: grid::spectral_dk_norm(&du_spectral, k)?,
        dt_l2: grid::l2_norm(&du),
        boundary_mass_fraction: u.boundary_mass_fraction(),
    })
}

/// Running sup quantities after each record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunningValues<T> {
    /// `sup_{0<=t<=T} (1+t)^{d/2} ||u||_inf`.
    pub n_from_zero: T,
    /// `sup_{1<=t<=T} t^{d/2} ||u||_inf`.
    pub n: T,
    pub m: T,
    pub m_tilde: T,
}

/// Time-ordered records with the running `N`, `M` and `M~` of the decay proof.
///
/// Quantities with a `t >= 1` window stay zero until the first record at or
/// after `t = 1`, whose mass is taken as `||u_1||_2`.
#[derive(Debug, Clone)]
pub struct TrajectoryDiagnostics<T> {
    dimension: usize,
    records: Vec<DiagnosticsRecord<T>>,
    running: Vec<RunningValues<T>>,
    start_mass: Option<T>,
    sup_weighted: T,
    sup_dk: T,
    sup_dt_weighted: T,
    sup_dt_dk: T,
    sup_dt_l2: T,
    n_from_zero: T,
}

impl<T: Real> TrajectoryDiagnostics<T> {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            records: Vec::new(),
            running: Vec::new(),
            start_mass: None,
            sup_weighted: T::zero(),
            sup_dk: T::zero(),
            sup_dt_weighted: T::zero(),
            sup_dt_dk: T::zero(),
            sup_dt_l2: T::zero(),
            n_from_zero: T::zero(),
        }
    }

    pub fn from_records(dimension: usize, records: impl IntoIterator<Item = DiagnosticsRecord<T>>) -> Result<Self> {
        let mut d = Self::new(dimension);
        for r in records {
            d.push(r)?;
        }
        Ok(d)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn push(&mut self, r: DiagnosticsRecord<T>) -> Result<()> {
        if let Some(last) = self.records.last() {
            if r.t <= last.t {
                return Err(Error::InvalidArgument(format!(
                    "record time {} does not follow {}",
                    r.t, last.t
                )));
            }
        }
        let half_d = T::from_usize_exact(self.dimension) * T::lit(0.5);
        self.n_from_zero = self
            .n_from_zero
            .max((T::one() + r.t).powf(half_d) * r.sup_norm);
        if r.t >= T::one() {
            let w = r.t.powf(half_d);
            self.start_mass.get_or_insert(r.mass);
            self.sup_weighted = self.sup_weighted.max(w * r.sup_norm);
            self.sup_dk = self.sup_dk.max(r.dk_l2);
            self.sup_dt_weighted = self.sup_dt_weighted.max(w * r.dt_sup_norm);
            self.sup_dt_dk = self.sup_dt_dk.max(r.dt_dk_l2);
            self.sup_dt_l2 = self.sup_dt_l2.max(r.dt_l2);
        }
        let m = self.sup_weighted + self.sup_dk + self.start_mass.unwrap_or(T::zero());
        self.running.push(RunningValues {
            n_from_zero: self.n_from_zero,
            n: self.sup_weighted,
            m,
            m_tilde: m + self.sup_dt_weighted + self.sup_dt_dk + self.sup_dt_l2,
        });
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[DiagnosticsRecord<T>] {
        &self.records
    }

    pub fn running(&self) -> &[RunningValues<T>] {
        &self.running
    }

    pub fn running_n(&self) -> T {
        self.sup_weighted
    }

    pub fn running_n_from_zero(&self) -> T {
        self.n_from_zero
    }

    pub fn running_m(&self) -> T {
        self.running.last().map_or(T::zero(), |r| r.m)
    }

    pub fn running_m_tilde(&self) -> T {
        self.running.last().map_or(T::zero(), |r| r.m_tilde)
    }

    /// `running_M` restricted to the `t >= 1` records, in time order.
    pub fn m_series(&self) -> Vec<T> {
        self.records
            .iter()
            .zip(&self.running)
            .filter(|(r, _)| r.t >= T::one())
            .map(|(_, v)| v.m)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (r, v) in self.records.iter().zip(&self.running) {
            let cells = [
                r.t,
                r.mass,
                r.energy,
                r.sup_norm,
                r.l1_norm,
                r.hk_norm,
                r.dk_l2,
                r.dt_sup_norm,
                r.boundary_mass_fraction,
                v.n,
                v.m,
            ];
            let line: Vec<String> = cells
                .iter()
                .map(|c| format!("{:.16e}", c.to_f64_lossy()))
                .collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str =
    "t,mass,energy,sup_norm,l1_norm,hk_norm,dk_l2,dt_sup_norm,boundary_mass_fraction,running_N,running_M";

/// Least-squares fit of `log y = log A - alpha log(1 + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

/// Fits the decay of `(t, y)` samples with `t` inside `window` (and `t >= 1`).
pub fn decay_fit_series<T: Real>(samples: &[(T, T)], window: (T, T)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t >= T::one() && *t >= window.0 && *t <= window.1)
        .map(|&(t, y)| (t.to_f64_lossy(), y.to_f64_lossy()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateWindow(format!(
            "{} samples in [{}, {}], need {MIN_FIT_POINTS}",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if pts.iter().any(|&(_, y)| !(y > 0.0) || !y.is_finite()) {
        return Err(Error::DegenerateWindow("non-positive sample".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|&(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateWindow("all sample times equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(DecayFit {
        amplitude: intercept.exp(),
        exponent: -slope,
        r_squared,
        points: pts.len(),
    })
}

/// Decay fit of `||u(t)||_inf`.
pub fn decay_fit<T: Real>(records: &[DiagnosticsRecord<T>], window: (T, T)) -> Result<DecayFit> {
    let s: Vec<(T, T)> = records.iter().map(|r| (r.t, r.sup_norm)).collect();
    decay_fit_series(&s, window)
}

/// Decay fit of `||u_t(t)||_inf`.
pub fn derivative_decay_fit<T: Real>(records: &[DiagnosticsRecord<T>], window: (T, T)) -> Result<DecayFit> {
    let s: Vec<(T, T)> = records.iter().map(|r| (r.t, r.dt_sup_norm)).collect();
    decay_fit_series(&s, window)
}

/// `[2, 0.8 T_wrap]`, with `T_wrap` the guard trip time or, without a trip,
/// the end of the run.
pub fn default_fit_window(t_end: f64, guard_trip: Option<f64>) -> (f64, f64) {
    match guard_trip {
        Some(t) => (2.0, 0.8 * t),
        None => (2.0, t_end),
    }
}

/// A measured constant: the raw maximum and the value floored at one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstant {
    pub raw: f64,
    pub value: f64,
    pub corpus_size: usize,
}

impl MeasuredConstant {
    pub fn new(raw: f64, corpus_size: usize) -> Self {
        Self {
            raw,
            value: raw.max(1.0),
            corpus_size,
        }
    }

    pub fn unit() -> Self {
        Self::new(1.0, 0)
    }
}

pub const MIN_CORPUS: usize = 5;

fn check_corpus<T: Real>(corpus: &[ComplexField<T>], model: &Model<T>) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if corpus.len() < MIN_CORPUS {
        return Err(Error::InvalidArgument(format!(
            "corpus has {} fields, need {MIN_CORPUS}",
            corpus.len()
        )));
    }
    if corpus.iter().any(|f| **f.grid() != **model.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn sorted_times<T: Real>(times: &[T]) -> Result<Vec<T>> {
    let mut ts = times.to_vec();
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteParameter("time"));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(ts)
}

/// Evaluates `ratio(t, e^{-itH} f, f)` for every corpus element and time,
/// propagating each field forward through the sorted times.
fn linear_sweep<T: Real>(
    model: &Model<T>,
    corpus: &[ComplexField<T>],
    times: &[T],
    max_dt: T,
    ratio: impl Fn(T, &ComplexField<T>, &ComplexField<T>) -> Result<T>,
) -> Result<f64> {
    let linear = model.without_interaction();
    let ts = sorted_times(times)?;
    let mut best = f64::NEG_INFINITY;
    for f in corpus {
        let mut state = f.clone();
        let mut now = T::zero();
        for &t in &ts {
            state = propagator::linear_propagate(&state, t - now, &linear, max_dt)?;
            now = t;
            best = best.max(ratio(t, &state, f)?.to_f64_lossy());
        }
    }
    Ok(best)
}

/// Largest `|t|^{d/2} ||e^{-itH} f||_inf / ||f||_1` over corpus and times.
pub fn dispersive_constant<T: Real>(
    model: &Model<T>,
    corpus: &[ComplexField<T>],
    times: &[T],
    max_dt: T,
) -> Result<MeasuredConstant> {
    check_corpus(corpus, model)?;
    if times.iter().any(|&t| t == T::zero()) {
        return Err(Error::InvalidArgument("dispersive ratio undefined at t = 0".into()));
    }
    let half_d = T::from_usize_exact(model.dimension()) * T::lit(0.5);
    let raw = linear_sweep(model, corpus, times, max_dt, |t, ft, f| {
        let l1 = grid::l1_norm(f);
        if l1 == T::zero() {
            return Err(Error::ZeroDenominator("dispersive_constant"));
        }
        Ok(t.abs().powf(half_d) * grid::sup_norm(ft) / l1)
    })?;
    Ok(MeasuredConstant::new(raw, corpus.len()))
}

/// Largest `||e^{-itH} f||_{H^k} / ||f||_{H^k}` over corpus and times.
pub fn hk_propagation_constant<T: Real>(
    model: &Model<T>,
    corpus: &[ComplexField<T>],
    times: &[T],
    max_dt: T,
) -> Result<MeasuredConstant> {
    check_corpus(corpus, model)?;
    let k = T::from_usize_exact(model.sobolev_index() as usize);
    let raw = linear_sweep(model, corpus, times, max_dt, |_, ft, f| {
        let base = grid::sobolev_norm(f, k)?;
        if base == T::zero() {
            return Err(Error::ZeroDenominator("hk_propagation_constant"));
        }
        Ok(grid::sobolev_norm(ft, k)? / base)
    })?;
    Ok(MeasuredConstant::new(raw, corpus.len()))
}

/// Largest `||f||_inf / ||f||_{H^k}` over the corpus.
pub fn sobolev_embedding_constant<T: Real>(corpus: &[ComplexField<T>], k: u32) -> Result<MeasuredConstant> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let kk = T::from_usize_exact(k as usize);
    let mut best = f64::NEG_INFINITY;
    for f in corpus {
        let hk = grid::sobolev_norm(f, kk)?;
        if hk == T::zero() {
            return Err(Error::ZeroDenominator("sobolev_embedding_constant"));
        }
        best = best.max((grid::sup_norm(f) / hk).to_f64_lossy());
    }
    Ok(MeasuredConstant::new(best, corpus.len()))
}

/// Smallest `C` with `||f||_{H^k}` and `||f||_2 + ||D^k f||_2` within a factor
/// `C` of each other across the corpus.
pub fn norm_equivalence_constant<T: Real>(corpus: &[ComplexField<T>], k: u32) -> Result<MeasuredConstant> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let kk = T::from_usize_exact(k as usize);
    let mut best = f64::NEG_INFINITY;
    for f in corpus {
        let (a, b) = grid::equivalence_ratios(f, kk)?;
        best = best.max(a.max(b).to_f64_lossy());
    }
    Ok(MeasuredConstant::new(best, corpus.len()))
}

/// `||D^k(fh)||_2 / (||D^k f||_2 ||h||_inf + ||f||_inf ||D^k h||_2)`.
pub fn kato_ponce_ratio<T: Real>(f: &ComplexField<T>, h: &ComplexField<T>, k: u32) -> Result<T> {
    let kk = T::from_usize_exact(k as usize);
    let product = f.mul(h)?;
    let num = grid::dk_norm(&product, kk)?;
    let den = grid::dk_norm(f, kk)? * grid::sup_norm(h) + grid::sup_norm(f) * grid::dk_norm(h, kk)?;
    if den == T::zero() {
        return Err(Error::ZeroDenominator("kato_ponce_ratio"));
    }
    Ok(num / den)
}

pub fn kato_ponce_constant<T: Real>(pairs: &[(ComplexField<T>, ComplexField<T>)], k: u32) -> Result<MeasuredConstant> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut best = f64::NEG_INFINITY;
    for (f, h) in pairs {
        best = best.max(kato_ponce_ratio(f, h, k)?.to_f64_lossy());
    }
    Ok(MeasuredConstant::new(best, pairs.len()))
}

/// `(-Laplace + V) phi`.
pub fn apply_hamiltonian<T: Real>(phi: &ComplexField<T>, model: &Model<T>) -> Result<ComplexField<T>> {
    let lap = grid::apply_operator(phi, grid::Symbol::AbsPower(T::lit(2.0)))?;
    let values = lap
        .values()
        .iter()
        .zip(phi.values())
        .zip(model.potential())
        .map(|((&l, &z), &v)| l + z * v)
        .collect();
    ComplexField::from_values(phi.grid().clone(), values)
}

/// `(||phi||_{H^k} / S, S / ||phi||_{H^k})` with `S = sum_{j<=k/2} ||(-Laplace + V)^j phi||_2`.
pub fn equivalent_norm_ratio<T: Real>(phi: &ComplexField<T>, model: &Model<T>, k: u32) -> Result<(T, T)> {
    if k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("order {k} must be even")));
    }
    let hk = grid::sobolev_norm(phi, T::from_usize_exact(k as usize))?;
    let mut term = phi.clone();
    let mut sum = grid::l2_norm(&term);
    for _ in 0..k / 2 {
        term = apply_hamiltonian(&term, model)?;
        sum = sum + grid::l2_norm(&term);
    }
    if hk == T::zero() || sum == T::zero() {
        return Err(Error::ZeroDenominator("equivalent_norm_ratio"));
    }
    Ok((hk / sum, sum / hk))
}

/// Bounds on the two ratios of [`equivalent_norm_ratio`] for `V = 0` from the
/// per-mode comparison of `(1+s^2)^{k/2}` with `sum_j s^{2j}` over the grid's
/// wavenumbers: `(m_hi, sqrt(k/2 + 1) / m_lo)`.
pub fn free_equivalence_bounds<T: Real>(grid: &GridSpec<T>, k: u32) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &q in grid.xi_squared() {
        let q = q.to_f64_lossy();
        let bessel = (1.0 + q).powf(k as f64 / 2.0);
        let sum: f64 = (0..=k / 2).map(|j| q.powi(j as i32)).sum();
        let m = bessel / sum;
        lo = lo.min(m);
        hi = hi.max(m);
    }
    (hi, ((k / 2 + 1) as f64).sqrt() / lo)
}

/// `int_0^{t0} (1+t)^{d/2} (t-s)^{-d/2} (1+s)^{-d/2} ds` with `t0 = max(t-1, 0)`.
pub fn kernel_integral(t: f64, d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::Dimension {
            d,
            reason: "the kernel integral is bounded uniformly in t only for d >= 3",
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be non-negative")));
    }
    let t0 = (t - 1.0).max(0.0);
    if t0 == 0.0 {
        return Ok(0.0);
    }
    let h = d as f64 / 2.0;
    let scale = (1.0 + t).powf(h);
    let f = |s: f64| scale * (t - s).powf(-h) * (1.0 + s).powf(-h);
    let mid = t0 / 2.0;
    Ok(quadrature::integrate(f, 0.0, mid, 1e-13).integral + quadrature::integrate(f, mid, t0, 1e-13).integral)
}

/// Measured constants, floored at one, and the composites built from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub dimension: usize,
    pub sobolev_index: u32,
    pub dispersive: Option<MeasuredConstant>,
    pub hk_propagation: Option<MeasuredConstant>,
    pub norm_equivalence: Option<MeasuredConstant>,
    pub kato_ponce: Option<MeasuredConstant>,
    pub sobolev_embedding: Option<MeasuredConstant>,
}

fn need(c: Option<MeasuredConstant>, name: &'static str) -> Result<f64> {
    c.map(|c| c.value).ok_or(Error::MissingLedgerEntry(name))
}

impl ConstantsLedger {
    pub fn empty(dimension: usize, sobolev_index: u32) -> Self {
        Self {
            dimension,
            sobolev_index,
            dispersive: None,
            hk_propagation: None,
            norm_equivalence: None,
            kato_ponce: None,
            sobolev_embedding: None,
        }
    }

    /// Every constant set to one.
    pub fn unit(dimension: usize, sobolev_index: u32) -> Self {
        let u = Some(MeasuredConstant::unit());
        Self {
            dimension,
            sobolev_index,
            dispersive: u,
            hk_propagation: u,
            norm_equivalence: u,
            kato_ponce: u,
            sobolev_embedding: u,
        }
    }

    pub fn c_v(&self) -> Result<f64> {
        need(self.dispersive, "C_V")
    }

    pub fn c_ds(&self) -> Result<f64> {
        need(self.hk_propagation, "C_DS")
    }

    pub fn c_es(&self) -> Result<f64> {
        need(self.norm_equivalence, "C_ES")
    }

    pub fn c_kp(&self) -> Result<f64> {
        need(self.kato_ponce, "C_KP")
    }

    pub fn c_s(&self) -> Result<f64> {
        need(self.sobolev_embedding, "C_S")
    }

    /// `4 C^S C^DS C^ES (C^KP)^2`.
    pub fn c_se(&self) -> Result<f64> {
        Ok(4.0 * self.c_s()? * self.c_ds()? * self.c_es()? * self.c_kp()?.powi(2))
    }

    /// `2^{2+d/2}/(d-2) C^V + 2^{d/2} C^SE`.
    pub fn c_inf_e(&self) -> Result<f64> {
        let d = self.dimension;
        if d < 3 {
            return Err(Error::Dimension { d, reason: "C_infE needs d >= 3" });
        }
        let h = d as f64 / 2.0;
        Ok(2f64.powf(2.0 + h) / (d as f64 - 2.0) * self.c_v()? + 2f64.powf(h) * self.c_se()?)
    }

    /// `4 C^ES C^DS (C^KP)^2 / (d-1)`.
    pub fn c_k_e(&self) -> Result<f64> {
        let d = self.dimension;
        if d < 2 {
            return Err(Error::Dimension { d, reason: "C_kE needs d >= 2" });
        }
        Ok(4.0 * self.c_es()? * self.c_ds()? * self.c_kp()?.powi(2) / (d as f64 - 1.0))
    }

    /// Cubic coefficient `3 ||w||_1 max(C_infE, C_kE)` of the bootstrap inequality.
    pub fn bootstrap_coefficient(&self, w_l1: f64) -> Result<f64> {
        Ok(3.0 * w_l1 * self.c_inf_e()?.max(self.c_k_e()?))
    }
}

/// Data-dependent inputs of the estimate chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainInputs {
    pub w_l1: f64,
    /// `||e^{iH} u_1||_1`.
    pub linear_l1: f64,
    /// `||u_1||_{H^k}`.
    pub initial_hk: f64,
    /// Multiplies the measured `M(T)` before it enters the right-hand sides.
    pub m_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRow {
    pub t: f64,
    /// `t^{d/2} ||u(t)||_inf`.
    pub sup_lhs: f64,
    /// `C^V ||e^{iH}u_1||_1 + C^{infE} ||w||_1 M(T)^3`.
    pub sup_rhs: f64,
    pub dk_lhs: f64,
    /// `C^DS ||u_1||_{H^k} + C^{kE} ||w||_1 M(T)^3`.
    pub dk_rhs: f64,
}

impl ChainRow {
    pub fn margin(&self) -> f64 {
        (self.sup_rhs - self.sup_lhs).min(self.dk_rhs - self.dk_lhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub rows: Vec<ChainRow>,
    pub min_margin: f64,
    /// No left side exceeded its right side.
    pub witnessed: bool,
}

/// Evaluates both sides of the sup-norm and `D^k` estimates at every record
/// with `t >= 1`, using `M(T)` at that record.
pub fn estimate_chain_check<T: Real>(
    diag: &TrajectoryDiagnostics<T>,
    ledger: &ConstantsLedger,
    inputs: ChainInputs,
) -> Result<ChainReport> {
    let c_v = ledger.c_v()?;
    let c_ds = ledger.c_ds()?;
    let c_inf = ledger.c_inf_e()?;
    let c_k = ledger.c_k_e()?;
    let half_d = diag.dimension() as f64 / 2.0;
    let rows: Vec<ChainRow> = diag
        .records()
        .iter()
        .zip(diag.running())
        .filter(|(r, _)| r.t >= T::one())
        .map(|(r, v)| {
            let t = r.t.to_f64_lossy();
            let m3 = (inputs.m_scale * v.m.to_f64_lossy()).powi(3);
            ChainRow {
                t,
                sup_lhs: t.powf(half_d) * r.sup_norm.to_f64_lossy(),
                sup_rhs: c_v * inputs.linear_l1 + c_inf * inputs.w_l1 * m3,
                dk_lhs: r.dk_l2.to_f64_lossy(),
                dk_rhs: c_ds * inputs.initial_hk + c_k * inputs.w_l1 * m3,
            }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no records with t >= 1".into()));
    }
    let min_margin = rows.iter().map(ChainRow::margin).fold(f64::INFINITY, f64::min);
    Ok(ChainReport {
        rows,
        min_margin,
        witnessed: min_margin >= 0.0,
    })
}

/// `||e^{iH} f||_1`, the smallness functional of the data at `t = 1`.
pub fn backward_linear_l1<T: Real>(f: &ComplexField<T>, model: &Model<T>, max_dt: T) -> Result<T> {
    let g = propagator::linear_propagate(f, -T::one(), &model.without_interaction(), max_dt)?;
    Ok(grid::l1_norm(&g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::grid::{make_grid, sample, AnalyticSpec};
    use crate::physics::{ModelSpec, Nonlinearity, PotentialSpec};
    use proptest::prelude::*;

    fn model(d: usize, n: usize, l: f64, potential: PotentialSpec<f64>) -> Model<f64> {
        Model::new(ModelSpec::new(make_grid(d, n, l).unwrap(), potential, Nonlinearity::None)).unwrap()
    }

    fn synthetic(t: f64, y: f64) -> DiagnosticsRecord<f64> {
        DiagnosticsRecord {
            t,
            mass: 1.0,
            energy: 0.0,
            sup_norm: y,
            l1_norm: 1.0,
            hk_norm: 1.0,
            dk_l2: 0.5,
            dt_sup_norm: y,
            dt_dk_l2: 0.1,
            dt_l2: 0.2,
            boundary_mass_fraction: 0.0,
        }
    }

    #[test]
    fn record_examples() {
        let m = model(1, 128, 12.0, PotentialSpec::Zero);
        let r = record(0.0, &ComplexField::zeros(m.grid().clone()), &m).unwrap();
        assert_eq!((r.mass, r.sup_norm, r.l1_norm, r.hk_norm, r.dk_l2, r.dt_sup_norm), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let t = 1.5;
        let u = sample(m.grid(), &AnalyticSpec::FreeGaussian { amplitude: 1.0, sigma: 1.0, time: t, images: 3 }).unwrap();
        let r = record(t, &u, &m).unwrap();
        let a0: f64 = 0.5;
        let expect = (a0 * a0 / (a0 * a0 + t * t)).powf(0.25);
        assert!((r.sup_norm - expect).abs() <= 1e-6 * expect);
    }

    #[test]
    fn running_quantities() {
        let mut d = TrajectoryDiagnostics::new(3);
        d.push(synthetic(0.0, 2.0)).unwrap();
        assert_eq!(d.running_m(), 0.0);
        assert_eq!(d.running_n_from_zero(), 2.0);
        d.push(synthetic(1.0, 1.0)).unwrap();
        assert_eq!(d.running_n(), 1.0);
        assert_eq!(d.running_m(), 1.0 + 0.5 + 1.0);
        assert_eq!(d.running_m_tilde(), 2.5 + 1.0 + 0.1 + 0.2);
        d.push(synthetic(4.0, 0.5)).unwrap();
        assert_eq!(d.running_n(), 4.0);
        assert!(d.push(synthetic(4.0, 0.5)).is_err());
        assert_eq!(d.m_series().len(), 2);
    }

    #[test]
    fn csv_layout() {
        let d = TrajectoryDiagnostics::from_records(1, [synthetic(1.0, 0.3), synthetic(2.0, 0.1)]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 11);
        assert_eq!(cells[3], "2.9999999999999999e-1");
        assert_eq!(cells[3].parse::<f64>().unwrap(), 0.3);
    }

    #[test]
    fn decay_fit_examples() {
        let recs: Vec<_> = (1..=20).map(|i| synthetic(i as f64, 3.0 * (1.0 + i as f64).powf(-1.5))).collect();
        let fit = decay_fit(&recs, (1.0, 20.0)).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.amplitude - 3.0).abs() < 1e-11);
        let flat: Vec<_> = (1..=20).map(|i| synthetic(i as f64, 0.7)).collect();
        let fit = decay_fit(&flat, (1.0, 20.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-14);
        assert!(matches!(decay_fit(&recs[..5], (1.0, 20.0)), Err(Error::DegenerateWindow(_))));
        let same: Vec<_> = (0..10).map(|_| (2.0, 1.0)).collect();
        assert!(matches!(decay_fit_series(&same, (1.0, 3.0)), Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn free_gaussian_2d_decay_exponent() {
        let m = model(2, 256, 40.0, PotentialSpec::Zero);
        let recs: Vec<_> = (0..=18)
            .map(|i| {
                let t = 2.0 + i as f64;
                let u = sample(m.grid(), &AnalyticSpec::FreeGaussian { amplitude: 1.0, sigma: 1.0, time: t, images: 2 }).unwrap();
                synthetic(t, grid::sup_norm(&u))
            })
            .collect();
        let fit = decay_fit(&recs, (2.0, 20.0)).unwrap();
        assert!((0.9..=1.1).contains(&fit.exponent), "{fit:?}");
    }

    #[test]
    fn dispersive_constant_free_flow() {
        for d in [1usize, 2] {
            let (n, l) = if d == 1 { (1024, 64.0) } else { (128, 32.0) };
            let m = model(d, n, l, PotentialSpec::Zero);
            let corpus = corpus::wave_packets(m.grid(), 5, 3).unwrap();
            let c = dispersive_constant(&m, &corpus, &[1.0, 2.0, 4.0], 0.05).unwrap();
            let bound = (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
            assert!(c.raw <= bound * 1.05, "d={d} raw {}", c.raw);
            assert_eq!(c.value, 1.0);
            assert_eq!(c.corpus_size, 5);
        }
        let m = model(1, 64, 8.0, PotentialSpec::Zero);
        assert!(matches!(dispersive_constant(&m, &[], &[1.0], 0.1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn narrow_gaussian_approaches_stationary_phase_limit() {
        let m = model(1, 4096, 64.0, PotentialSpec::Zero);
        let f = sample(m.grid(), &AnalyticSpec::gaussian(1.0, 0.1)).unwrap();
        let corpus = vec![f; 5];
        let c = dispersive_constant(&m, &corpus, &[1.0], 0.1).unwrap();
        let limit = (4.0 * std::f64::consts::PI).powf(-0.5);
        // closed form: (a0^2 / (a0^2 + 1))^{1/4} / (sigma sqrt(2 pi)) with a0 = 0.005
        let a0: f64 = 0.005;
        let oracle = (a0 * a0 / (a0 * a0 + 1.0)).powf(0.25) / (0.1 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((c.raw - oracle).abs() < 1e-8 * oracle);
        assert!((c.raw - limit).abs() < 1e-4 * limit);
    }

    #[test]
    fn hk_propagation_examples() {
        let m = model(1, 256, 24.0, PotentialSpec::Zero);
        let corpus = corpus::wave_packets(m.grid(), 5, 9).unwrap();
        let c = hk_propagation_constant(&m, &corpus, &[0.0, 1.0, 3.0], 0.05).unwrap();
        assert!((c.raw - 1.0).abs() < 1e-12);
        let mv = model(1, 256, 24.0, PotentialSpec::GaussianWell { depth: 0.5, width: 1.5 });
        let early = hk_propagation_constant(&mv, &corpus, &[0.5, 1.0], 0.01).unwrap();
        let late = hk_propagation_constant(&mv, &corpus, &[0.5, 1.0, 2.0, 3.0], 0.01).unwrap();
        assert!(early.raw.is_finite() && late.raw.is_finite());
        assert!(late.raw / early.raw < 1.5);
    }

    #[test]
    fn kato_ponce_examples() {
        let g = make_grid(1, 128, 12.0).unwrap();
        let f = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let one = sample(&g, &AnalyticSpec::Constant { re: 1.0, im: 0.0 }).unwrap();
        assert!(kato_ponce_ratio(&f, &one, 2).unwrap() <= 1.0 + 1e-12);
        let zero = ComplexField::zeros(g.clone());
        assert!(matches!(kato_ponce_ratio(&zero, &zero, 2), Err(Error::ZeroDenominator(_))));
    }

    /// D^2(f^2) for f = e^{-x^2/2}: f^2 = e^{-x^2}, -d^2/dx^2 e^{-x^2} = (2 - 4x^2) e^{-x^2}.
    #[test]
    fn kato_ponce_ratio_matches_refined_oracle() {
        let g = make_grid(1, 128, 12.0).unwrap();
        let f = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let ratio = kato_ponce_ratio(&f, &f, 2).unwrap();
        let fine = make_grid(1, 256, 12.0_f64).unwrap();
        let h = fine.spacing();
        let num: f64 = fine
            .coordinates()
            .iter()
            .map(|&x| ((2.0 - 4.0 * x * x) * (-x * x).exp()).powi(2) * h)
            .sum::<f64>()
            .sqrt();
        let dk_f: f64 = fine
            .coordinates()
            .iter()
            .map(|&x| ((1.0 - x * x) * (-x * x / 2.0).exp()).powi(2) * h)
            .sum::<f64>()
            .sqrt();
        let oracle = num / (2.0 * dk_f);
        assert!((ratio - oracle).abs() < 1e-8, "{ratio} vs {oracle}");
    }

    #[test]
    fn equivalent_norm_examples() {
        let m = model(1, 128, 12.0, PotentialSpec::Zero);
        let g = m.grid();
        let idx = g.mode_index(&[5]).unwrap();
        let k = g.wavevector(idx)[0];
        let pw = sample(g, &AnalyticSpec::PlaneWave { amplitude: 1.0, wavevector: [k, 0.0, 0.0] }).unwrap();
        let (a, b) = equivalent_norm_ratio(&pw, &m, 2).unwrap();
        // ||phi||_{H^2} = (1 + k^2) ||phi||_2 = ||phi||_2 + ||D^2 phi||_2
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let (hi, up) = free_equivalence_bounds(g, 4);
        for f in corpus::wave_packets(g, 10, 5).unwrap() {
            let (a, b) = equivalent_norm_ratio(&f, &m, 4).unwrap();
            assert!(a <= hi && b <= up);
        }
        let mv = model(1, 128, 12.0, PotentialSpec::GaussianWell { depth: -0.5, width: 1.0 });
        let f = sample(mv.grid(), &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let (a, b) = equivalent_norm_ratio(&f, &mv, 2).unwrap();
        assert!(a.is_finite() && b.is_finite());
        assert!(matches!(equivalent_norm_ratio(&ComplexField::zeros(mv.grid().clone()), &mv, 2), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn kernel_integral_examples() {
        assert_eq!(kernel_integral(0.5, 3).unwrap(), 0.0);
        assert_eq!(kernel_integral(1.0, 3).unwrap(), 0.0);
        assert!(matches!(kernel_integral(5.0, 2), Err(Error::Dimension { .. })));
        // t = 2, d = 3: int_0^1 3^{3/2} (2-s)^{-3/2} (1+s)^{-3/2} ds, antiderivative
        // (2/9) (2s - 1) / sqrt((2-s)(1+s)) * 3^{3/2}.
        let anti = |s: f64| 2.0 / 9.0 * (2.0 * s - 1.0) / ((2.0 - s) * (1.0 + s)).sqrt();
        let oracle = 27f64.sqrt() * (anti(1.0) - anti(0.0));
        assert!((kernel_integral(2.0, 3).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn ledger_composites_with_unit_constants() {
        let l = ConstantsLedger::unit(3, 2);
        let se = 4.0;
        assert_eq!(l.c_se().unwrap(), se);
        let inf = 2f64.powf(3.5) + 2f64.powf(1.5) * se;
        assert!((l.c_inf_e().unwrap() - inf).abs() < 1e-12);
        assert_eq!(l.c_k_e().unwrap(), 2.0);
        assert!((l.bootstrap_coefficient(1.0).unwrap() - 3.0 * inf).abs() < 1e-12);
        assert!(matches!(ConstantsLedger::empty(3, 2).c_v(), Err(Error::MissingLedgerEntry("C_V"))));
        assert!(ConstantsLedger::unit(2, 2).c_inf_e().is_err());
    }

    #[test]
    fn chain_check_linear_and_scaled() {
        let m = model(3, 32, 8.0, PotentialSpec::Zero);
        let u1 = sample(m.grid(), &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let recs: Vec<_> = [1.0, 1.5, 2.0]
            .iter()
            .map(|&t| record(t, &propagator::linear_propagate(&u1, t - 1.0, &m, 0.1).unwrap(), &m).unwrap())
            .collect();
        let diag = TrajectoryDiagnostics::from_records(3, recs).unwrap();
        let ledger = ConstantsLedger::unit(3, 2);
        let inputs = ChainInputs {
            w_l1: 0.0,
            linear_l1: backward_linear_l1(&u1, &m, 0.1).unwrap(),
            initial_hk: grid::sobolev_norm(&u1, 2.0).unwrap(),
            m_scale: 1.0,
        };
        let r = estimate_chain_check(&diag, &ledger, inputs).unwrap();
        assert!(r.witnessed, "{r:?}");
        let scaled = estimate_chain_check(&diag, &ledger, ChainInputs { w_l1: 0.1, m_scale: 10.0, ..inputs }).unwrap();
        assert!(scaled.witnessed && scaled.min_margin >= r.min_margin);
        assert!(matches!(
            estimate_chain_check(&diag, &ConstantsLedger::empty(3, 2), inputs),
            Err(Error::MissingLedgerEntry(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn fit_recovers_power_laws(alpha in 0.0f64..3.0, amp in 0.01f64..100.0) {
            let s: Vec<(f64, f64)> = (0..30).map(|i| { let t = 1.0 + i as f64 * 0.7; (t, amp * (1.0 + t).powf(-alpha)) }).collect();
            let fit = decay_fit_series(&s, (1.0, 100.0)).unwrap();
            prop_assert!((fit.exponent - alpha).abs() < 1e-10);
        }

        #[test]
        fn running_values_are_monotone(ys in proptest::collection::vec(0.0f64..5.0, 1..40)) {
            let mut d = TrajectoryDiagnostics::new(3);
            for (i, &y) in ys.iter().enumerate() {
                let mut r = synthetic(0.5 + i as f64 * 0.5, y);
                r.dk_l2 = y * 0.3;
                d.push(r).unwrap();
            }
            for w in d.running().windows(2) {
                prop_assert!(w[1].n >= w[0].n && w[1].m >= w[0].m && w[1].m_tilde >= w[0].m_tilde && w[1].n_from_zero >= w[0].n_from_zero);
            }
        }

        #[test]
        fn kato_ponce_is_scale_invariant(seed in 0u64..1000, a in 0.1f64..10.0, b in 0.1f64..10.0) {
            let g = make_grid(1, 64, 8.0).unwrap();
            let fs = corpus::band_limited_fields(&g, 2, 2.0, seed).unwrap();
            let r0 = kato_ponce_ratio(&fs[0], &fs[1], 2).unwrap();
            let r1 = kato_ponce_ratio(&fs[0].scale(a.into()), &fs[1].scale(b.into()), 2).unwrap();
            prop_assert!((r0 - r1).abs() <= 1e-12 * r0);
        }
    }

    #[test]
    fn kato_ponce_needs_matching_grids() {
        let a = sample(&make_grid(1, 64, 8.0).unwrap(), &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let b = sample(&make_grid(1, 32, 8.0).unwrap(), &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        assert!(matches!(kato_ponce_ratio(&a, &b, 2), Err(Error::GridMismatch)));
    }
}
