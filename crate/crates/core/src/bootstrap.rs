//! The cubic bootstrap function `f(x) = eps + C x^3 - x`, the continuity trap
//! for the running quantity `M(T)`, and the Gronwall bound for large data.

use serde::{Deserialize, Serialize};

use crate::diagnostics::ConstantsLedger;
use crate::error::{Error, Result};

/// Connected component `[lo, hi]` of `{f >= 0}`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapAnalysis {
    pub epsilon: f64,
    pub c_coeff: f64,
    /// Non-negative roots in increasing order, from the closed-form solution.
    pub roots: Vec<f64>,
    /// The same roots located by bisection.
    pub bisection_roots: Vec<f64>,
    pub intervals: Vec<Interval>,
    /// `sup` of the component containing zero, when it is bounded.
    pub c0: Option<f64>,
    /// `1 / (2 sqrt(6C))`: below it the two-component structure is guaranteed.
    pub threshold: f64,
    /// `1 / sqrt(6C)`, where `f' = -1/2`.
    pub stationary_point: f64,
}

impl BootstrapAnalysis {
    pub fn f(&self, x: f64) -> f64 {
        self.epsilon + self.c_coeff * x * x * x - x
    }

    pub fn derivative(&self, x: f64) -> f64 {
        3.0 * self.c_coeff * x * x - 1.0
    }

    pub fn two_components(&self) -> bool {
        self.intervals.len() == 2
    }

    /// Distance between the two components.
    pub fn gap(&self) -> Option<f64> {
        match self.intervals.as_slice() {
            [a, b] => a.hi.map(|h| b.lo - h),
            _ => None,
        }
    }

    /// `f` at the stationary point, `eps - 5 / (6 sqrt(6C))`.
    pub fn stationary_value(&self) -> f64 {
        self.f(self.stationary_point)
    }

    /// Largest disagreement between closed-form and bisection roots.
    pub fn root_disagreement(&self) -> f64 {
        self.roots
            .iter()
            .zip(&self.bisection_roots)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `1 / (2 sqrt(6C))`.
pub fn threshold(c_coeff: f64) -> f64 {
    1.0 / (2.0 * (6.0 * c_coeff).sqrt())
}

/// `eps` at which the two positive roots merge: `2 / (3 sqrt(3C))`.
pub fn fold_epsilon(c_coeff: f64) -> f64 {
    2.0 / (3.0 * (3.0 * c_coeff).sqrt())
}

/// Default `eps` for a given `C`: nine tenths of the threshold.
pub fn default_epsilon(c_coeff: f64) -> f64 {
    0.9 * threshold(c_coeff)
}

/// Real roots of `C x^3 - x + eps`, ascending, by the trigonometric form of
/// the cubic formula (three real roots) or Cardano's formula (one).
fn cubic_roots(epsilon: f64, c: f64) -> Vec<f64> {
    // depressed cubic x^3 + p x + q with p = -1/C, q = eps/C
    let p = -1.0 / c;
    let q = epsilon / c;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut roots: Vec<f64> = (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        roots
    } else if disc == 0.0 {
        let double = -3.0 * q / (2.0 * p);
        let mut roots = vec![3.0 * q / p, double, double];
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        roots
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact structure of `{x >= 0 : eps + C x^3 - x >= 0}`.
///
/// A double root (the fold) is classified as a single component, since the
/// two pieces touch.
pub fn analyze(epsilon: f64, c_coeff: f64) -> Result<BootstrapAnalysis> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    if !(c_coeff > 0.0) || !c_coeff.is_finite() {
        return Err(Error::InvalidArgument(format!("C = {c_coeff} must be positive")));
    }
    let f = |x: f64| epsilon + c_coeff * x * x * x - x;
    let x_min = 1.0 / (3.0 * c_coeff).sqrt();
    let below = f(x_min) < 0.0;
    let roots: Vec<f64> = if below {
        cubic_roots(epsilon, c_coeff)
            .into_iter()
            .filter(|&r| r >= 0.0)
            .collect()
    } else {
        Vec::new()
    };
    let (intervals, bisection_roots) = if below && roots.len() == 2 {
        let upper = 2.0 / c_coeff.sqrt() + 1.0;
        let b = vec![bisect(f, 0.0, x_min), bisect(f, x_min, upper)];
        (
            vec![
                Interval { lo: 0.0, hi: Some(roots[0]) },
                Interval { lo: roots[1], hi: None },
            ],
            b,
        )
    } else {
        (vec![Interval { lo: 0.0, hi: None }], Vec::new())
    };
    let c0 = if intervals.len() == 2 { intervals[0].hi } else { None };
    Ok(BootstrapAnalysis {
        epsilon,
        c_coeff,
        roots,
        bisection_roots,
        intervals,
        c0,
        threshold: threshold(c_coeff),
        stationary_point: 1.0 / (6.0 * c_coeff).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Jumped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub verdict: Verdict,
    pub first_offending: Option<usize>,
    /// `min_T (c0 - M(T))`.
    pub margin: f64,
}

/// Checks that a running `M` series stays inside the first component.
pub fn continuity_trap(m_series: &[f64], analysis: &BootstrapAnalysis) -> Result<TrapReport> {
    if m_series.is_empty() {
        return Err(Error::InvalidArgument("empty M series".into()));
    }
    let c0 = analysis.c0.ok_or_else(|| {
        Error::InvalidArgument("the bootstrap set has no bounded first component".into())
    })?;
    let first_offending = m_series.iter().position(|&m| !(m <= c0));
    let margin = m_series.iter().map(|&m| c0 - m).fold(f64::INFINITY, f64::min);
    Ok(TrapReport {
        verdict: if first_offending.is_none() { Verdict::Pass } else { Verdict::Jumped },
        first_offending,
        margin,
    })
}

/// Admissible data sizes for the small-data argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessBudget {
    /// `3 ||w||_1 max(C_infE, C_kE)`.
    pub c_coeff: f64,
    pub epsilon: f64,
    pub c0: f64,
    /// `min(eps, c0) / (3 C^V C^DS)`: bound on both `||e^{iH}u_1||_1` and `||u_1||_{H^k}`.
    pub epsilon0: f64,
    /// `eps / (3 C^V)`.
    pub linear_l1_max: f64,
    /// `eps / (3 C^DS)`.
    pub hk_max: f64,
}

impl SmallnessBudget {
    pub fn admits(&self, linear_l1: f64, hk_norm: f64) -> bool {
        linear_l1 <= self.epsilon0 && hk_norm <= self.epsilon0
    }
}

/// Bootstrap analysis for the ledger's coefficient, with `epsilon` defaulting
/// to [`default_epsilon`].
pub fn ledger_analysis(ledger: &ConstantsLedger, w_l1: f64, epsilon: Option<f64>) -> Result<BootstrapAnalysis> {
    let c = ledger.bootstrap_coefficient(w_l1)?;
    analyze(epsilon.unwrap_or_else(|| default_epsilon(c)), c)
}

pub fn smallness_budget(analysis: &BootstrapAnalysis, ledger: &ConstantsLedger) -> Result<SmallnessBudget> {
    let c0 = analysis
        .c0
        .ok_or_else(|| Error::InvalidArgument("analysis has no bounded first component".into()))?;
    let c_v = ledger.c_v()?;
    let c_ds = ledger.c_ds()?;
    Ok(SmallnessBudget {
        c_coeff: analysis.c_coeff,
        epsilon: analysis.epsilon,
        c0,
        epsilon0: analysis.epsilon.min(c0) / (3.0 * c_v * c_ds),
        linear_l1_max: analysis.epsilon / (3.0 * c_v),
        hk_max: analysis.epsilon / (3.0 * c_ds),
    })
}

/// The JSON block reported for a bootstrap analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub epsilon: f64,
    pub c_coeff: f64,
    pub threshold: f64,
    pub roots: Vec<f64>,
    pub c0: Option<f64>,
    pub verdict: Option<Verdict>,
    pub margin: Option<f64>,
}

impl BootstrapSummary {
    pub fn new(analysis: &BootstrapAnalysis, trap: Option<&TrapReport>) -> Self {
        Self {
            epsilon: analysis.epsilon,
            c_coeff: analysis.c_coeff,
            threshold: analysis.threshold,
            roots: analysis.roots.clone(),
            c0: analysis.c0,
            verdict: trap.map(|t| t.verdict),
            margin: trap.map(|t| t.margin),
        }
    }
}

fn check_gronwall_dimension(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::Dimension {
            d,
            reason: "s^{-d/2} is integrable on [T0, inf) only for d >= 3",
        });
    }
    Ok(())
}

fn check_t0(t0: f64) -> Result<()> {
    if !(t0 >= 2.0) || !t0.is_finite() {
        return Err(Error::InvalidArgument(format!("T0 = {t0} must be at least 2")));
    }
    Ok(())
}

/// `||beta||_{L^1[T0, inf)}` for `beta(s) = 2^{d/2+1} C1 s^{-d/2}`, closed form.
pub fn beta_l1(d: usize, c1: f64, t0: f64) -> Result<f64> {
    check_gronwall_dimension(d)?;
    check_t0(t0)?;
    let h = d as f64 / 2.0;
    Ok(2f64.powf(h + 1.0) * c1 * t0.powf(1.0 - h) / (h - 1.0))
}

/// The same integral by quadrature after substituting `s = T0 / v^2`.
pub fn beta_l1_quadrature(d: usize, c1: f64, t0: f64) -> Result<f64> {
    check_gronwall_dimension(d)?;
    check_t0(t0)?;
    let h = d as f64 / 2.0;
    let k = 2f64.powf(h + 1.0) * c1;
    let integrand = |v: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let s = t0 / (v * v);
        k * s.powf(-h) * 2.0 * t0 / (v * v * v)
    };
    Ok(quadrature::integrate(integrand, 0.0, 1.0, 1e-14).integral)
}

/// `2 [(1 + 2^{d/2} C1 2/(d-2)) N(T0) + C^V ||e^{iH}u_1||_1]`.
pub fn gronwall_alpha(d: usize, c1: f64, n_t0: f64, c_v: f64, linear_l1: f64) -> Result<f64> {
    check_gronwall_dimension(d)?;
    let h = d as f64 / 2.0;
    Ok(2.0 * ((1.0 + 2f64.powf(h) * c1 * 2.0 / (d as f64 - 2.0)) * n_t0 + c_v * linear_l1))
}

/// `alpha exp(||beta||_1)`.
pub fn gronwall_bound(alpha: f64, beta_integral: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !beta_integral.is_finite() {
        return Err(Error::InvalidArgument("alpha must be non-negative and beta finite".into()));
    }
    Ok(alpha * beta_integral.exp())
}

/// `C_d = int_1^inf s^{-3d/8} ds`.
pub fn tail_constant(d: usize) -> Result<f64> {
    if 3 * d <= 8 {
        return Err(Error::Dimension { d, reason: "3d/8 must exceed 1" });
    }
    Ok(1.0 / (3.0 * d as f64 / 8.0 - 1.0))
}

/// Left side of the `T0` condition, `2^{d/2} C1 (C_d + 1) sup_{r >= T0/2}(||u||^{1/4} + ||u||)`,
/// given that supremum. The condition holds when this is at most one half.
pub fn t0_condition(d: usize, c1: f64, tail_sup: f64) -> Result<f64> {
    Ok(2f64.powf(d as f64 / 2.0) * c1 * (tail_constant(d)? + 1.0) * tail_sup)
}

/// `C1` built from the direct and Sobolev-type estimates:
/// `max(C^V ||w||_1 ||u_1||_2^2, C^S C^DS C^ES ||w||_1 (||u_1||_2 + 3 (C^KP)^2 sup ||D^k u||_2))`.
pub fn large_data_c1(ledger: &ConstantsLedger, w_l1: f64, l2: f64, sup_dk: f64) -> Result<f64> {
    let direct = ledger.c_v()? * w_l1 * l2 * l2;
    let sobolev = ledger.c_s()? * ledger.c_ds()? * ledger.c_es()? * w_l1 * (l2 + 3.0 * ledger.c_kp()?.powi(2) * sup_dk);
    Ok(direct.max(sobolev))
}
