//! External potentials, interaction kernels, the equation's right-hand side and
//! the energy functional for
//!
//! ```text
//!     i u_t = -Laplace u + V u + (w * |u|^2) u        (Hartree)
//!     i u_t = -Laplace u + V u +/- |u|^2 u            (cubic)
//! ```

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, AnalyticSpec, ComplexField, GridSpec};
use crate::scalar::Real;

/// External potential families; all are smooth with bounded derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec<T> {
    Zero,
    /// `depth * exp(-|x|^2 / (2 width^2))`.
    GaussianWell { depth: T, width: T },
    /// `depth * sum_a cos(kappa x_a)`.
    SmoothLattice { depth: T, kappa: T },
}

impl<T: Real> PotentialSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::GaussianWell { depth, width } => {
                if !depth.is_finite() {
                    return Err(Error::NonFiniteParameter("potential depth"));
                }
                if !width.is_finite() || width <= T::zero() {
                    return Err(Error::InvalidModel(format!(
                        "potential width {width} must be positive"
                    )));
                }
                Ok(())
            }
            PotentialSpec::SmoothLattice { depth, kappa } => {
                if !depth.is_finite() || !kappa.is_finite() {
                    return Err(Error::NonFiniteParameter("lattice potential"));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            PotentialSpec::Zero => true,
            PotentialSpec::GaussianWell { depth, .. } | PotentialSpec::SmoothLattice { depth, .. } => {
                depth == T::zero()
            }
        }
    }

    /// Closed-form supremum of `|V|`.
    pub fn sup_abs(&self, dimension: usize) -> T {
        match *self {
            PotentialSpec::Zero => T::zero(),
            PotentialSpec::GaussianWell { depth, .. } => depth.abs(),
            PotentialSpec::SmoothLattice { depth, .. } => {
                depth.abs() * T::from_usize_exact(dimension)
            }
        }
    }

    fn value(&self, x: &[T; 3], dimension: usize) -> T {
        match *self {
            PotentialSpec::Zero => T::zero(),
            PotentialSpec::GaussianWell { depth, width } => {
                let r2 = x[..dimension].iter().fold(T::zero(), |a, &c| a + c * c);
                depth * (-r2 / (T::lit(2.0) * width * width)).exp()
            }
            PotentialSpec::SmoothLattice { depth, kappa } => {
                depth * x[..dimension].iter().fold(T::zero(), |a, &c| a + (kappa * c).cos())
            }
        }
    }
}

/// Samples `V` on the grid; the result has exactly zero imaginary part.
pub fn realize_potential<T: Real>(
    spec: &PotentialSpec<T>,
    grid: &Arc<GridSpec<T>>,
) -> Result<ComplexField<T>> {
    spec.validate()?;
    let d = grid.dimension();
    Ok(ComplexField::from_real_fn(grid.clone(), |x| spec.value(&x, d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionFamily {
    Gaussian,
    MollifierOfGaussian,
}

/// Where the kernel's Fourier transform comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSource {
    /// Closed-form transform of the gaussian profile.
    Analytic,
    /// Forward transform of the sampled kernel (periodized).
    Sampled,
}

/// Even, real interaction potential with total integral `total_mass`.
///
/// `w(x) = lambda (2 pi s^2)^{-d/2} exp(-|x|^2 / (2 s^2))`, and for the mollifier
/// family `w_n(x) = n^d w(n x)`, which is the same profile at width `s / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec<T> {
    pub family: InteractionFamily,
    pub total_mass: T,
    pub width: T,
    pub mollifier_index: u32,
}

impl<T: Real> InteractionSpec<T> {
    pub fn gaussian(total_mass: T, width: T) -> Self {
        Self {
            family: InteractionFamily::Gaussian,
            total_mass,
            width,
            mollifier_index: 1,
        }
    }

    pub fn mollified(total_mass: T, width: T, index: u32) -> Self {
        Self {
            family: InteractionFamily::MollifierOfGaussian,
            total_mass,
            width,
            mollifier_index: index,
        }
    }

    /// Width of the realized profile, `width / n`.
    pub fn effective_width(&self) -> T {
        self.width / T::from_usize_exact(self.mollifier_index.max(1) as usize)
    }

    /// `||w||_1 = |lambda|` for the gaussian profile.
    pub fn l1_norm(&self) -> T {
        self.total_mass.abs()
    }

    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        if !self.total_mass.is_finite() {
            return Err(Error::NonFiniteParameter("interaction total_mass"));
        }
        if !self.width.is_finite() || self.width <= T::zero() {
            return Err(Error::InvalidModel(format!(
                "interaction width {} must be positive",
                self.width
            )));
        }
        if self.mollifier_index == 0 {
            return Err(Error::InvalidModel("mollifier index must be >= 1".into()));
        }
        let limit = T::lit(4.0) * grid.spacing();
        if self.family == InteractionFamily::MollifierOfGaussian && self.effective_width() < limit {
            return Err(Error::UnresolvedMollifier {
                index: self.mollifier_index,
                scaled_width: self.effective_width().to_f64_lossy(),
                limit: limit.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn value(&self, x: &[T; 3], dimension: usize) -> T {
        let s = self.effective_width();
        let r2 = x[..dimension].iter().fold(T::zero(), |a, &c| a + c * c);
        let norm = (T::lit(2.0) * T::PI() * s * s).powf(T::from_usize_exact(dimension) * T::lit(0.5));
        self.total_mass / norm * (-r2 / (T::lit(2.0) * s * s)).exp()
    }

    /// Samples `w` (or `w_n`) on the grid, centred at the origin.
    pub fn realize(&self, grid: &Arc<GridSpec<T>>) -> Result<ComplexField<T>> {
        self.validate(grid)?;
        let d = grid.dimension();
        Ok(ComplexField::from_real_fn(grid.clone(), |x| self.value(&x, d)))
    }

    /// `w^` on the wavenumber lattice, in transform storage order.
    pub fn transform(&self, grid: &Arc<GridSpec<T>>, source: KernelSource) -> Result<Vec<T>> {
        self.validate(grid)?;
        match source {
            KernelSource::Analytic => {
                let s = self.effective_width();
                let c = s * s * T::lit(0.5);
                Ok(grid
                    .xi_squared()
                    .iter()
                    .map(|&q| self.total_mass * (-(c * q)).exp())
                    .collect())
            }
            KernelSource::Sampled => {
                let w = self.realize(grid)?;
                Ok(grid::forward_transform(&w)
                    .coefficients()
                    .iter()
                    .map(|z| z.re)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicSign {
    /// `+|u|^2 u`.
    Defocusing,
    /// `-|u|^2 u`.
    Focusing,
}

impl CubicSign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            CubicSign::Defocusing => T::one(),
            CubicSign::Focusing => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity<T> {
    /// `w = 0`: the linear equation.
    None,
    Hartree(InteractionSpec<T>),
    Cubic(CubicSign),
}

/// Smallest even integer strictly above `d/2`.
pub fn default_sobolev_index(dimension: usize) -> u32 {
    let mut k = 2u32;
    while 2 * k as usize <= dimension {
        k += 2;
    }
    k
}

/// The triple `(V, w, k)` on a grid.
#[derive(Debug, Clone)]
pub struct ModelSpec<T: Real> {
    pub grid: Arc<GridSpec<T>>,
    pub potential: PotentialSpec<T>,
    pub nonlinearity: Nonlinearity<T>,
    pub sobolev_index: u32,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(
        grid: Arc<GridSpec<T>>,
        potential: PotentialSpec<T>,
        nonlinearity: Nonlinearity<T>,
    ) -> Self {
        let k = default_sobolev_index(grid.dimension());
        Self {
            grid,
            potential,
            nonlinearity,
            sobolev_index: k,
        }
    }

    pub fn with_sobolev_index(mut self, k: u32) -> Result<Self> {
        if k % 2 != 0 || 2 * k as usize <= self.grid.dimension() {
            return Err(Error::InvalidModel(format!(
                "sobolev index {k} must be even and exceed d/2 = {}",
                self.grid.dimension() as f64 / 2.0
            )));
        }
        self.sobolev_index = k;
        Ok(self)
    }
}

/// A validated model with the potential and interaction kernel realized on the grid.
#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    spec: ModelSpec<T>,
    potential: Arc<Vec<T>>,
    kernel: Option<Arc<Vec<T>>>,
}

impl<T: Real> Model<T> {
    pub fn new(spec: ModelSpec<T>) -> Result<Self> {
        Self::with_kernel_source(spec, KernelSource::Analytic)
    }

    pub fn with_kernel_source(spec: ModelSpec<T>, source: KernelSource) -> Result<Self> {
        let k = spec.sobolev_index;
        if k % 2 != 0 || 2 * k as usize <= spec.grid.dimension() {
            return Err(Error::InvalidModel(format!("sobolev index {k} invalid")));
        }
        let v = realize_potential(&spec.potential, &spec.grid)?;
        if !v.is_finite() {
            return Err(Error::InvalidModel("potential has non-finite samples".into()));
        }
        let potential = Arc::new(v.values().iter().map(|z| z.re).collect());
        let kernel = match &spec.nonlinearity {
            Nonlinearity::Hartree(w) => Some(Arc::new(w.transform(&spec.grid, source)?)),
            _ => None,
        };
        Ok(Self {
            spec,
            potential,
            kernel,
        })
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        &self.spec.grid
    }

    pub fn dimension(&self) -> usize {
        self.spec.grid.dimension()
    }

    pub fn sobolev_index(&self) -> u32 {
        self.spec.sobolev_index
    }

    /// Realized `V` samples.
    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn has_potential(&self) -> bool {
        !self.spec.potential.is_zero()
    }

    /// `w^` in storage order when the model has a Hartree term.
    pub fn kernel(&self) -> Option<&[T]> {
        self.kernel.as_deref().map(|v| v.as_slice())
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.spec.nonlinearity, Nonlinearity::None)
    }

    /// `||w||_1`; one for the cubic equation (`w = +/- delta`), zero for the linear one.
    pub fn interaction_l1(&self) -> T {
        match &self.spec.nonlinearity {
            Nonlinearity::None => T::zero(),
            Nonlinearity::Hartree(w) => w.l1_norm(),
            Nonlinearity::Cubic(_) => T::one(),
        }
    }

    /// Same grid and potential with the nonlinearity removed.
    pub fn without_interaction(&self) -> Self {
        let mut spec = self.spec.clone();
        spec.nonlinearity = Nonlinearity::None;
        Self {
            spec,
            potential: self.potential.clone(),
            kernel: None,
        }
    }

    /// Writes the nonlinear potential for `|u|^2` into `out` (real part only).
    pub(crate) fn nonlinear_potential_into(&self, u: &[Complex<T>], out: &mut Vec<T>) {
        out.clear();
        match (&self.spec.nonlinearity, &self.kernel) {
            (Nonlinearity::Hartree(_), Some(kernel)) => {
                let conv = self.convolve_density(u, kernel);
                out.extend(conv.iter().map(|z| z.re));
            }
            (Nonlinearity::Cubic(sign), _) => {
                let s: T = sign.factor();
                out.extend(u.iter().map(|z| s * z.norm_sqr()));
            }
            _ => out.resize(u.len(), T::zero()),
        }
    }

    /// `w * |u|^2` evaluated spectrally, imaginary roundoff retained.
    fn convolve_density(&self, u: &[Complex<T>], kernel: &[T]) -> Vec<Complex<T>> {
        let grid = &self.spec.grid;
        let mut rho: Vec<Complex<T>> = u
            .iter()
            .map(|z| Complex::new(z.norm_sqr(), T::zero()))
            .collect();
        grid::forward_in_place(grid, &mut rho);
        for (z, &w) in rho.iter_mut().zip(kernel) {
            *z = *z * w;
        }
        grid::inverse_in_place(grid, &mut rho);
        rho
    }
}

/// The nonlinear potential: `w * |u|^2` (Hartree), `+/-|u|^2` (cubic) or zero.
///
/// The Hartree case is returned exactly as computed, so its imaginary part
/// shows the roundoff of the spectral convolution.
pub fn hartree_term<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<ComplexField<T>> {
    if **u.grid() != **model.grid() {
        return Err(Error::GridMismatch);
    }
    let values = match (&model.spec.nonlinearity, &model.kernel) {
        (Nonlinearity::Hartree(_), Some(kernel)) => model.convolve_density(u.values(), kernel),
        _ => {
            let mut out = Vec::new();
            model.nonlinear_potential_into(u.values(), &mut out);
            out.into_iter().map(|v| Complex::new(v, T::zero())).collect()
        }
    };
    Ok(ComplexField::from_values_unchecked(u.grid().clone(), values))
}

/// `w * rho` for an arbitrary density with an explicit kernel.
pub fn convolve<T: Real>(
    rho: &ComplexField<T>,
    interaction: &InteractionSpec<T>,
    source: KernelSource,
) -> Result<ComplexField<T>> {
    let kernel = interaction.transform(rho.grid(), source)?;
    let mut s = grid::forward_transform(rho);
    for (z, &w) in s.coefficients_mut().iter_mut().zip(&kernel) {
        *z = *z * w;
    }
    Ok(grid::inverse_transform(&s))
}

/// `u_t = -i (-Laplace u + V u + N(u) u)`.
pub fn rhs<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<ComplexField<T>> {
    if **u.grid() != **model.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = model.grid();
    let mut lap = u.values().to_vec();
    grid::forward_in_place(grid, &mut lap);
    for (z, &q) in lap.iter_mut().zip(grid.xi_squared()) {
        *z = *z * q;
    }
    grid::inverse_in_place(grid, &mut lap);
    let mut nl = Vec::new();
    model.nonlinear_potential_into(u.values(), &mut nl);
    let values = lap
        .iter()
        .zip(u.values())
        .zip(model.potential().iter().zip(&nl))
        .map(|((&l, &z), (&v, &n))| {
            let h = l + z * (v + n);
            Complex::new(h.im, -h.re)
        })
        .collect();
    Ok(ComplexField::from_values_unchecked(grid.clone(), values))
}

/// Energy split into its kinetic, potential and interaction parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts<T> {
    pub kinetic: T,
    pub potential: T,
    pub interaction: T,
}

impl<T: Real> EnergyParts<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.potential + self.interaction
    }
}

/// `E(u) = int |grad u|^2 + int V |u|^2 + 1/2 int (w * |u|^2) |u|^2`
/// (cubic: last term `+/- 1/2 int |u|^4`).
pub fn energy_parts<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<EnergyParts<T>> {
    if **u.grid() != **model.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = model.grid();
    let s = grid::forward_transform(u);
    let kinetic = s
        .coefficients()
        .iter()
        .zip(grid.xi_squared())
        .fold(T::zero(), |a, (z, &q)| a + q * z.norm_sqr())
        / grid.box_volume();
    let h = grid.cell_volume();
    let potential = h * u
        .values()
        .iter()
        .zip(model.potential())
        .fold(T::zero(), |a, (z, &v)| a + v * z.norm_sqr());
    let mut nl = Vec::new();
    model.nonlinear_potential_into(u.values(), &mut nl);
    let interaction = T::lit(0.5)
        * h
        * u.values()
            .iter()
            .zip(&nl)
            .fold(T::zero(), |a, (z, &n)| a + n * z.norm_sqr());
    Ok(EnergyParts {
        kinetic,
        potential,
        interaction,
    })
}

pub fn energy<T: Real>(u: &ComplexField<T>, model: &Model<T>) -> Result<T> {
    energy_parts(u, model).map(|e| e.total())
}

/// Gaussian initial data `A exp(-|x|^2/(2 sigma^2))` on the model's grid.
pub fn gaussian_data<T: Real>(model: &Model<T>, amplitude: T, sigma: T) -> Result<ComplexField<T>> {
    grid::sample(model.grid(), &AnalyticSpec::gaussian(amplitude, sigma))
}
