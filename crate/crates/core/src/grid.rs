//! Periodic box discretization, spectral transforms, Fourier multipliers and norms.
//!
//! The box is `[-L, L)^d` sampled at `x = j h` for `j = -n/2 .. n/2 - 1` on every
//! axis, `h = 2L / n`. Arrays are stored row-major with the last axis fastest.
//!
//! # Transform convention
//!
//! The forward transform approximates the continuum Fourier transform
//! `f^(xi) = \int f(x) e^{-i xi.x} dx` by the rectangle rule,
//!
//! ```text
//!     u^_xi = h^d  sum_x  f(x) e^{-i xi.x},          xi = (pi / L) m
//!     f(x)  = (2L)^{-d} sum_xi u^_xi e^{+i xi.x}
//! ```
//!
//! so `-Laplace` has the symbol `|xi|^2` and Parseval reads
//! `h^d sum |f|^2 = (2L)^{-d} sum |u^|^2`. Spectral coefficients are kept in
//! FFT storage order (non-negative modes first). This is the only place the
//! normalization is fixed; every norm and multiplier below goes through it.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible number of samples per axis.
pub const MIN_POINTS_PER_AXIS: usize = 8;

/// Periodic box discretization with cached FFT plans and spectral tables.
pub struct GridSpec<T: Real> {
    dimension: usize,
    points_per_axis: usize,
    half_length: T,
    spacing: T,
    wavenumbers: Vec<T>,
    coordinates: Vec<T>,
    xi_sq: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for GridSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dimension", &self.dimension)
            .field("points_per_axis", &self.points_per_axis)
            .field("half_length", &self.half_length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl<T: Real> PartialEq for GridSpec<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.points_per_axis == other.points_per_axis
            && self.half_length == other.half_length
    }
}

/// Builds a grid on `[-half_length, half_length)^dimension`.
pub fn make_grid<T: Real>(
    dimension: usize,
    points_per_axis: usize,
    half_length: T,
) -> Result<Arc<GridSpec<T>>> {
    if !(1..=3).contains(&dimension) {
        return Err(Error::InvalidGrid(format!(
            "dimension {dimension} not in {{1, 2, 3}}"
        )));
    }
    if points_per_axis % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "points_per_axis {points_per_axis} is odd"
        )));
    }
    if points_per_axis < MIN_POINTS_PER_AXIS {
        return Err(Error::InvalidGrid(format!(
            "points_per_axis {points_per_axis} below {MIN_POINTS_PER_AXIS}"
        )));
    }
    if !half_length.is_finite() || half_length <= T::zero() {
        return Err(Error::InvalidGrid(format!(
            "half_length {half_length} must be positive"
        )));
    }
    let n = points_per_axis;
    let nt = T::from_usize_exact(n);
    let spacing = (half_length + half_length) / nt;
    let dk = T::PI() / half_length;
    let half = n as i64 / 2;
    let wavenumbers: Vec<T> = (0..n)
        .map(|m| T::from_i64_exact(signed_mode(m, n)) * dk)
        .collect();
    let coordinates: Vec<T> = (0..n)
        .map(|i| T::from_i64_exact(i as i64 - half) * spacing)
        .collect();
    let total = n.pow(dimension as u32);
    let mut xi_sq = vec![T::zero(); total];
    for (flat, v) in xi_sq.iter_mut().enumerate() {
        let mut acc = T::zero();
        let mut rem = flat;
        for _ in 0..dimension {
            let k = wavenumbers[rem % n];
            acc = acc + k * k;
            rem /= n;
        }
        *v = acc;
    }
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    Ok(Arc::new(GridSpec {
        dimension,
        points_per_axis: n,
        half_length,
        spacing,
        wavenumbers,
        coordinates,
        xi_sq,
        forward,
        inverse,
    }))
}

/// Signed mode number of FFT storage index `m` on an axis of `n` samples.
#[inline]
pub fn signed_mode(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

impl<T: Real> GridSpec<T> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_sq.is_empty()
    }

    /// Per-axis wavenumbers `(pi/L) j` in transform storage order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Per-axis sample coordinates, increasing from `-L`.
    pub fn coordinates(&self) -> &[T] {
        &self.coordinates
    }

    /// `|xi|^2` for every flat spectral index.
    pub fn xi_squared(&self) -> &[T] {
        &self.xi_sq
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dimension as i32)
    }

    /// Box volume `(2L)^d`.
    pub fn box_volume(&self) -> T {
        (self.half_length + self.half_length).powi(self.dimension as i32)
    }

    /// Multi-index (one entry per axis, first axis first) of a flat index.
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for a in (0..self.dimension).rev() {
            idx[a] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Physical coordinates of a flat sample index; unused axes are zero.
    #[inline]
    pub fn point(&self, flat: usize) -> [T; 3] {
        let idx = self.multi_index(flat);
        let mut x = [T::zero(); 3];
        for a in 0..self.dimension {
            x[a] = self.coordinates[idx[a]];
        }
        x
    }

    /// Wavevector of a flat spectral index; unused axes are zero.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [T; 3] {
        let idx = self.multi_index(flat);
        let mut k = [T::zero(); 3];
        for a in 0..self.dimension {
            k[a] = self.wavenumbers[idx[a]];
        }
        k
    }

    /// Flat spectral index of a signed mode vector.
    pub fn mode_index(&self, modes: &[i64]) -> Result<usize> {
        if modes.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "mode vector has {} entries for a {}-d grid",
                modes.len(),
                self.dimension
            )));
        }
        let n = self.points_per_axis as i64;
        let mut flat = 0usize;
        for &m in modes {
            if m < -n / 2 || m >= n / 2 {
                return Err(Error::InvalidArgument(format!(
                    "mode {m} outside [-{}, {})",
                    n / 2,
                    n / 2
                )));
            }
            flat = flat * self.points_per_axis + m.rem_euclid(n) as usize;
        }
        Ok(flat)
    }

    /// Whether a flat spectral index lies inside the lower two thirds of every axis.
    #[inline]
    pub fn in_two_thirds(&self, flat: usize) -> bool {
        let n = self.points_per_axis;
        let idx = self.multi_index(flat);
        idx[..self.dimension]
            .iter()
            .all(|&m| 3 * signed_mode(m, n).unsigned_abs() as usize <= n)
    }

    /// `(-1)^{sum of signed modes}`; the phase `e^{i xi.L}` of the box offset.
    #[inline]
    fn offset_sign_is_negative(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        idx[..self.dimension].iter().sum::<usize>() % 2 == 1
    }

    /// Unnormalized forward DFT along every axis.
    pub(crate) fn raw_forward(&self, data: &mut [Complex<T>]) {
        self.transform_in_place(data, &self.forward);
    }

    /// Unnormalized inverse DFT along every axis.
    pub(crate) fn raw_inverse(&self, data: &mut [Complex<T>]) {
        self.transform_in_place(data, &self.inverse);
    }

    fn transform_in_place(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.points_per_axis;
        let zero = Complex::new(T::zero(), T::zero());
        let mut scratch = vec![zero; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        // Strided axes: gather a batch of adjacent columns, transform, scatter back.
        const BATCH: usize = 16;
        let mut buf = vec![zero; BATCH * n];
        for axis in 0..self.dimension - 1 {
            let stride = n.pow((self.dimension - 1 - axis) as u32);
            for block in data.chunks_mut(n * stride) {
                for c0 in (0..stride).step_by(BATCH) {
                    let width = BATCH.min(stride - c0);
                    let cols = &mut buf[..width * n];
                    for j in 0..n {
                        let row = &block[j * stride + c0..j * stride + c0 + width];
                        for (b, &z) in row.iter().enumerate() {
                            cols[b * n + j] = z;
                        }
                    }
                    plan.process_with_scratch(cols, &mut scratch);
                    for j in 0..n {
                        let row = &mut block[j * stride + c0..j * stride + c0 + width];
                        for (b, z) in row.iter_mut().enumerate() {
                            *z = cols[b * n + j];
                        }
                    }
                }
            }
        }
    }
}

fn check_same_grid<T: Real>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<()> {
    if std::ptr::eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Complex samples of a function on the grid.
#[derive(Clone)]
pub struct ComplexField<T: Real> {
    grid: Arc<GridSpec<T>>,
    values: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for ComplexField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField")
            .field("grid", &self.grid)
            .field("len", &self.values.len())
            .finish()
    }
}

impl<T: Real> PartialEq for ComplexField<T> {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl<T: Real> ComplexField<T> {
    /// Wraps raw samples; rejects wrong lengths and non-finite entries.
    pub fn from_values(grid: Arc<GridSpec<T>>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteParameter("values"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Arc<GridSpec<T>>, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<GridSpec<T>>) -> Self {
        let values = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        Self { grid, values }
    }

    /// Real-valued field built from a function of position.
    pub fn from_real_fn(grid: Arc<GridSpec<T>>, f: impl Fn([T; 3]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|i| Complex::new(f(grid.point(i)), T::zero()))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        self.map(|z| z * factor)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Pointwise `|f|^2` as a real-valued field.
    pub fn abs_sq(&self) -> Self {
        self.map(|z| Complex::new(z.norm_sqr(), T::zero()))
    }

    /// Largest imaginary part in absolute value.
    pub fn max_abs_imag(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, z| m.max(z.im.abs()))
    }

    /// Fraction of the squared 2-norm carried by samples with some coordinate
    /// in the outer tenth of the half-length, `|x_a| >= 0.9 L`.
    pub fn boundary_mass_fraction(&self) -> T {
        let g = &self.grid;
        let edge = g.half_length * T::lit(0.9);
        let mut outer = T::zero();
        let mut total = T::zero();
        for (i, z) in self.values.iter().enumerate() {
            let w = z.norm_sqr();
            total = total + w;
            let x = g.point(i);
            if x[..g.dimension].iter().any(|c| c.abs() >= edge) {
                outer = outer + w;
            }
        }
        if total > T::zero() {
            outer / total
        } else {
            T::zero()
        }
    }
}

/// Spectral coefficients in transform storage order.
#[derive(Clone)]
pub struct SpectralField<T: Real> {
    grid: Arc<GridSpec<T>>,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for SpectralField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("len", &self.coefficients.len())
            .finish()
    }
}

impl<T: Real> SpectralField<T> {
    pub fn from_coefficients(grid: Arc<GridSpec<T>>, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coefficients
    }

    /// 2-norm of the represented function, `(2L)^{-d/2} (sum |u^|^2)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let s = self
            .coefficients
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr());
        (s / self.grid.box_volume()).sqrt()
    }
}

/// Forward transform under the continuum-mimicking convention of this module.
pub fn forward_transform<T: Real>(field: &ComplexField<T>) -> SpectralField<T> {
    let grid = field.grid.clone();
    let mut data = field.values.clone();
    forward_in_place(&grid, &mut data);
    SpectralField {
        grid,
        coefficients: data,
    }
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform<T: Real>(spectral: &SpectralField<T>) -> ComplexField<T> {
    let grid = spectral.grid.clone();
    let mut data = spectral.coefficients.clone();
    inverse_in_place(&grid, &mut data);
    ComplexField { grid, values: data }
}

pub(crate) fn forward_in_place<T: Real>(grid: &GridSpec<T>, data: &mut [Complex<T>]) {
    grid.transform_in_place(data, &grid.forward);
    let scale = grid.cell_volume();
    for (i, z) in data.iter_mut().enumerate() {
        let s = if grid.offset_sign_is_negative(i) {
            -scale
        } else {
            scale
        };
        *z = *z * s;
    }
}

pub(crate) fn inverse_in_place<T: Real>(grid: &GridSpec<T>, data: &mut [Complex<T>]) {
    let scale = T::one() / grid.box_volume();
    for (i, z) in data.iter_mut().enumerate() {
        let s = if grid.offset_sign_is_negative(i) {
            -scale
        } else {
            scale
        };
        *z = *z * s;
    }
    grid.transform_in_place(data, &grid.inverse);
}

/// Fourier multipliers used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol<T> {
    /// `|xi|^s`, i.e. `D^s = (-Laplace)^{s/2}`.
    AbsPower(T),
    /// `(1 + |xi|^2)^{s/2}`.
    Bessel(T),
    /// `e^{-i t |xi|^2}`, the free flow `e^{-it(-Laplace)}`.
    FreeFlow(T),
    /// Zeroes every mode outside the lower two thirds of each axis.
    TwoThirdsFilter,
}

impl<T: Real> Symbol<T> {
    fn validate(&self) -> Result<()> {
        match *self {
            Symbol::AbsPower(s) | Symbol::Bessel(s) => {
                if !s.is_finite() {
                    Err(Error::NonFiniteParameter("symbol order"))
                } else if s < T::zero() {
                    Err(Error::NegativeOrder(s.to_f64_lossy()))
                } else {
                    Ok(())
                }
            }
            Symbol::FreeFlow(t) if !t.is_finite() => Err(Error::NonFiniteParameter("symbol time")),
            _ => Ok(()),
        }
    }
}

/// `(xi^2)^{s/2}`, exact for even integer orders.
#[inline]
pub(crate) fn sq_power<T: Real>(xi_sq: T, s: T) -> T {
    let half = s * T::lit(0.5);
    if half == half.round() && half <= T::lit(64.0) {
        xi_sq.powi(half.to_i32().unwrap_or(0))
    } else if xi_sq == T::zero() {
        if s == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        xi_sq.powf(half)
    }
}

/// Pointwise product of the coefficients with a symbol on the wavenumber lattice.
pub fn apply_multiplier<T: Real>(
    spectral: &SpectralField<T>,
    symbol: Symbol<T>,
) -> Result<SpectralField<T>> {
    let mut out = spectral.clone();
    apply_multiplier_in_place(&mut out.coefficients, &out.grid, symbol)?;
    Ok(out)
}

pub(crate) fn apply_multiplier_in_place<T: Real>(
    coefficients: &mut [Complex<T>],
    grid: &GridSpec<T>,
    symbol: Symbol<T>,
) -> Result<()> {
    symbol.validate()?;
    let xi_sq = grid.xi_squared();
    match symbol {
        Symbol::AbsPower(s) => {
            for (z, &q) in coefficients.iter_mut().zip(xi_sq) {
                *z = *z * sq_power(q, s);
            }
        }
        Symbol::Bessel(s) => {
            for (z, &q) in coefficients.iter_mut().zip(xi_sq) {
                *z = *z * sq_power(T::one() + q, s);
            }
        }
        Symbol::FreeFlow(t) => {
            for (z, &q) in coefficients.iter_mut().zip(xi_sq) {
                let phase = -(t * q);
                *z = *z * Complex::new(phase.cos(), phase.sin());
            }
        }
        Symbol::TwoThirdsFilter => {
            for (i, z) in coefficients.iter_mut().enumerate() {
                if !grid.in_two_thirds(i) {
                    *z = Complex::new(T::zero(), T::zero());
                }
            }
        }
    }
    Ok(())
}

/// Applies a multiplier to a position-space field (transform, multiply, invert).
pub fn apply_operator<T: Real>(field: &ComplexField<T>, symbol: Symbol<T>) -> Result<ComplexField<T>> {
    let mut data = field.values.clone();
    forward_in_place(&field.grid, &mut data);
    apply_multiplier_in_place(&mut data, &field.grid, symbol)?;
    inverse_in_place(&field.grid, &mut data);
    Ok(ComplexField {
        grid: field.grid.clone(),
        values: data,
    })
}

/// Discrete `L^p` norm by the rectangle rule; `p = inf` gives the grid maximum,
/// a lower bound for the true supremum of the interpolant.
pub fn lp_norm<T: Real>(field: &ComplexField<T>, p: T) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidExponent(p.to_f64_lossy()));
    }
    if p.is_infinite() {
        return Ok(sup_norm(field));
    }
    let h = field.grid.cell_volume();
    let s = if p == T::one() {
        field.values.iter().fold(T::zero(), |a, z| a + z.norm())
    } else if p == T::lit(2.0) {
        field.values.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    } else {
        field.values.iter().fold(T::zero(), |a, z| a + z.norm().powf(p))
    };
    Ok(if p == T::one() {
        h * s
    } else if p == T::lit(2.0) {
        (h * s).sqrt()
    } else {
        (h * s).powf(T::one() / p)
    })
}

pub fn sup_norm<T: Real>(field: &ComplexField<T>) -> T {
    field.values.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

pub fn l1_norm<T: Real>(field: &ComplexField<T>) -> T {
    field.grid.cell_volume() * field.values.iter().fold(T::zero(), |a, z| a + z.norm())
}

pub fn l2_norm<T: Real>(field: &ComplexField<T>) -> T {
    (field.grid.cell_volume() * field.values.iter().fold(T::zero(), |a, z| a + z.norm_sqr())).sqrt()
}

/// `||(1 + |xi|^2)^{s/2} f^||_2` in the discrete convention.
pub fn sobolev_norm<T: Real>(field: &ComplexField<T>, s: T) -> Result<T> {
    let spectral = forward_transform(field);
    spectral_sobolev_norm(&spectral, s)
}

pub fn spectral_sobolev_norm<T: Real>(spectral: &SpectralField<T>, s: T) -> Result<T> {
    Symbol::Bessel(s).validate()?;
    let xi_sq = spectral.grid.xi_squared();
    let acc = spectral
        .coefficients
        .iter()
        .zip(xi_sq)
        .fold(T::zero(), |a, (z, &q)| {
            let m = sq_power(T::one() + q, s);
            a + z.norm_sqr() * m * m
        });
    Ok((acc / spectral.grid.box_volume()).sqrt())
}

/// `||D^s f||_2 = || |xi|^s f^ ||_2`.
pub fn spectral_dk_norm<T: Real>(spectral: &SpectralField<T>, s: T) -> Result<T> {
    Symbol::AbsPower(s).validate()?;
    let xi_sq = spectral.grid.xi_squared();
    let acc = spectral
        .coefficients
        .iter()
        .zip(xi_sq)
        .fold(T::zero(), |a, (z, &q)| {
            let m = sq_power(q, s);
            a + z.norm_sqr() * m * m
        });
    Ok((acc / spectral.grid.box_volume()).sqrt())
}

pub fn dk_norm<T: Real>(field: &ComplexField<T>, s: T) -> Result<T> {
    spectral_dk_norm(&forward_transform(field), s)
}

/// Ratios witnessing `||f||_2 + ||D^k f||_2 ~ ||f||_{H^k}`:
/// `(||f||_{H^k} / (||f||_2 + ||D^k f||_2), (||f||_2 + ||D^k f||_2) / ||f||_{H^k})`.
pub fn equivalence_ratios<T: Real>(field: &ComplexField<T>, k: T) -> Result<(T, T)> {
    let spectral = forward_transform(field);
    let hk = spectral_sobolev_norm(&spectral, k)?;
    let sum = spectral.l2_norm() + spectral_dk_norm(&spectral, k)?;
    if hk == T::zero() || sum == T::zero() {
        return Err(Error::ZeroDenominator("equivalence_ratios"));
    }
    Ok((hk / sum, sum / hk))
}

/// Closed-form families that can be sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticSpec<T> {
    /// `A exp(-|x - c|^2 / (2 sigma^2)) e^{i k.x}`; `k = 0` gives a plain gaussian.
    Gaussian {
        amplitude: T,
        sigma: T,
        center: [T; 3],
        wavevector: [T; 3],
    },
    /// `A e^{i k.x}`.
    PlaneWave { amplitude: T, wavevector: [T; 3] },
    Constant { re: T, im: T },
    /// Exact free evolution `e^{it Laplace}` of `A exp(-|x|^2 / (2 sigma^2))`
    /// to `time`, summed over `images` periodic copies per axis and side.
    FreeGaussian {
        amplitude: T,
        sigma: T,
        time: T,
        images: u32,
    },
    Sum(Vec<AnalyticSpec<T>>),
}

/// Family names accepted by [`AnalyticSpec::family_from_name`].
pub const FAMILY_NAMES: [&str; 5] = [
    "gaussian",
    "modulated_gaussian",
    "plane_wave",
    "constant",
    "free_gaussian",
];

/// Discriminant of [`AnalyticSpec`] used when building specs from text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    ModulatedGaussian,
    PlaneWave,
    Constant,
    FreeGaussian,
}

impl<T: Real> AnalyticSpec<T> {
    pub fn family_from_name(name: &str) -> Result<Family> {
        match name {
            "gaussian" => Ok(Family::Gaussian),
            "modulated_gaussian" => Ok(Family::ModulatedGaussian),
            "plane_wave" => Ok(Family::PlaneWave),
            "constant" => Ok(Family::Constant),
            "free_gaussian" => Ok(Family::FreeGaussian),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn gaussian(amplitude: T, sigma: T) -> Self {
        AnalyticSpec::Gaussian {
            amplitude,
            sigma,
            center: [T::zero(); 3],
            wavevector: [T::zero(); 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: T, name: &'static str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFiniteParameter(name))
            }
        };
        let positive = |v: T, name: &'static str| {
            finite(v, name)?;
            if v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive")))
            }
        };
        match self {
            AnalyticSpec::Gaussian {
                amplitude,
                sigma,
                center,
                wavevector,
            } => {
                finite(*amplitude, "amplitude")?;
                positive(*sigma, "sigma")?;
                center.iter().try_for_each(|&c| finite(c, "center"))?;
                wavevector.iter().try_for_each(|&k| finite(k, "wavevector"))
            }
            AnalyticSpec::PlaneWave {
                amplitude,
                wavevector,
            } => {
                finite(*amplitude, "amplitude")?;
                wavevector.iter().try_for_each(|&k| finite(k, "wavevector"))
            }
            AnalyticSpec::Constant { re, im } => {
                finite(*re, "constant")?;
                finite(*im, "constant")
            }
            AnalyticSpec::FreeGaussian {
                amplitude,
                sigma,
                time,
                ..
            } => {
                finite(*amplitude, "amplitude")?;
                positive(*sigma, "sigma")?;
                finite(*time, "time")
            }
            AnalyticSpec::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    /// Value at a point with `dimension` active coordinates.
    pub fn evaluate(&self, x: &[T; 3], dimension: usize, box_length: T) -> Complex<T> {
        match self {
            AnalyticSpec::Gaussian {
                amplitude,
                sigma,
                center,
                wavevector,
            } => {
                let mut r2 = T::zero();
                let mut phase = T::zero();
                for a in 0..dimension {
                    let dx = x[a] - center[a];
                    r2 = r2 + dx * dx;
                    phase = phase + wavevector[a] * x[a];
                }
                let mag = *amplitude * (-r2 / (T::lit(2.0) * *sigma * *sigma)).exp();
                Complex::new(phase.cos(), phase.sin()) * mag
            }
            AnalyticSpec::PlaneWave {
                amplitude,
                wavevector,
            } => {
                let phase = (0..dimension).fold(T::zero(), |p, a| p + wavevector[a] * x[a]);
                Complex::new(phase.cos(), phase.sin()) * *amplitude
            }
            AnalyticSpec::Constant { re, im } => Complex::new(*re, *im),
            AnalyticSpec::FreeGaussian {
                amplitude,
                sigma,
                time,
                images,
            } => free_gaussian_value(*amplitude, *sigma, *time, *images, x, dimension, box_length),
            AnalyticSpec::Sum(parts) => parts.iter().fold(
                Complex::new(T::zero(), T::zero()),
                |acc, p| acc + p.evaluate(x, dimension, box_length),
            ),
        }
    }
}

/// `A (a0 / a)^{d/2} exp(-|x|^2 / (4a))` with `a = sigma^2/2 + i t`, the solution of
/// `i u_t = -Laplace u` from `A exp(-|x|^2/(2 sigma^2))`, summed over periodic images.
fn free_gaussian_value<T: Real>(
    amplitude: T,
    sigma: T,
    time: T,
    images: u32,
    x: &[T; 3],
    dimension: usize,
    box_length: T,
) -> Complex<T> {
    let a0 = sigma * sigma * T::lit(0.5);
    let a = Complex::new(a0, time);
    let prefactor = (Complex::new(a0, T::zero()) / a).powf(T::from_usize_exact(dimension) * T::lit(0.5));
    let inv4a = Complex::new(T::lit(0.25), T::zero()) / a;
    let m = images as i64;
    // per-axis factors multiply: exp(-sum x_a^2/(4a)) = prod_a exp(-x_a^2/(4a))
    let mut value = prefactor * amplitude;
    for xa in x.iter().take(dimension) {
        let mut axis_sum = Complex::new(T::zero(), T::zero());
        for shift in -m..=m {
            let y = *xa + T::from_i64_exact(shift) * box_length;
            axis_sum = axis_sum + (-(inv4a * (y * y))).exp();
        }
        value = value * axis_sum;
    }
    value
}

/// Samples a closed-form family at every grid point.
pub fn sample<T: Real>(grid: &Arc<GridSpec<T>>, spec: &AnalyticSpec<T>) -> Result<ComplexField<T>> {
    spec.validate()?;
    let d = grid.dimension();
    let box_length = grid.half_length() + grid.half_length();
    let values = (0..grid.len())
        .map(|i| spec.evaluate(&grid.point(i), d, box_length))
        .collect();
    ComplexField::from_values(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn make_grid_basic() {
        let g = make_grid(1, 8, 4.0_f64).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let mut k: Vec<f64> = g.wavenumbers().to_vec();
        k.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<f64> = (-4..4).map(|j| std::f64::consts::PI / 4.0 * j as f64).collect();
        for (a, b) in k.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(g.coordinates()[0], -4.0);
        assert_eq!(make_grid(3, 64, 16.0_f64).unwrap().len(), 262_144);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(matches!(make_grid(2, 7, 1.0_f64), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 6, 1.0_f64), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 8, 0.0_f64), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 8, -1.0_f64), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(4, 8, 1.0_f64), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn spacing_times_points_is_box_length() {
        for &(n, l) in &[(8usize, 0.3_f64), (64, 16.0), (128, std::f64::consts::E), (96, 7.1)] {
            let g = make_grid(1, n, l).unwrap();
            let lhs = g.spacing() * n as f64;
            assert!((lhs - 2.0 * l).abs() <= f64::EPSILON * 2.0 * l);
        }
    }

    #[test]
    fn sample_families() {
        let g = make_grid(3, 16, 4.0_f64).unwrap();
        let u = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        for (i, z) in u.values().iter().enumerate() {
            let x = g.point(i);
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            assert!((z.re - (-r2 / 2.0).exp()).abs() < 1e-15 && z.im == 0.0);
        }
        let zero = sample(&g, &AnalyticSpec::Constant { re: 0.0, im: 0.0 }).unwrap();
        assert!(zero.values().iter().all(|z| z.norm() == 0.0));

        let shifted = AnalyticSpec::Gaussian {
            amplitude: 1.0,
            sigma: 1.0,
            center: [2.0, 0.0, 0.0],
            wavevector: [0.0; 3],
        };
        let sum = sample(&g, &AnalyticSpec::Sum(vec![AnalyticSpec::gaussian(1.0, 1.0), shifted.clone()]))
            .unwrap();
        let b = sample(&g, &shifted).unwrap();
        let expect = u.add(&b).unwrap();
        for (p, q) in sum.values().iter().zip(expect.values()) {
            assert!((p - q).norm() < 1e-15);
        }
        assert!(matches!(
            AnalyticSpec::<f64>::family_from_name("sech"),
            Err(Error::UnknownFamily(_))
        ));
        assert!(sample(&g, &AnalyticSpec::gaussian(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn transform_of_constant_and_plane_wave() {
        for d in 1..=3 {
            let g = make_grid(d, 16, 3.0_f64).unwrap();
            let one = sample(&g, &AnalyticSpec::Constant { re: 1.0, im: 0.0 }).unwrap();
            let s = forward_transform(&one);
            let vol = 6.0_f64.powi(d as i32);
            assert!(rel(s.coefficients()[0].re, vol) < 1e-13);
            assert!(s.coefficients()[1..].iter().all(|z| z.norm() < 1e-12 * vol));

            let modes: Vec<i64> = (0..d as i64).map(|a| a + 1 - 2 * (a % 2) * 3).collect();
            let target = g.mode_index(&modes).unwrap();
            let k = g.wavevector(target);
            let pw = sample(&g, &AnalyticSpec::PlaneWave { amplitude: 1.0, wavevector: k }).unwrap();
            let s = forward_transform(&pw);
            for (i, z) in s.coefficients().iter().enumerate() {
                if i == target {
                    assert!(rel(z.re, vol) < 1e-12 && z.im.abs() < 1e-12 * vol);
                } else {
                    assert!(z.norm() < 1e-11 * vol, "leak at {i}: {z}");
                }
            }
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // f^(xi) = (2 pi)^{d/2} e^{-|xi|^2/2} for sigma = 1
        for d in 1..=2 {
            let g = make_grid(d, 128, 16.0_f64).unwrap();
            let u = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
            let s = forward_transform(&u);
            let norm = (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0);
            for (i, z) in s.coefficients().iter().enumerate() {
                let q = g.xi_squared()[i];
                if q <= 16.0 {
                    let expect = norm * (-q / 2.0).exp();
                    assert!(rel(z.re, expect) < 1e-10, "xi^2={q}: {} vs {expect}", z.re);
                    assert!(z.im.abs() < 1e-10 * expect);
                }
            }
        }
    }

    #[test]
    fn multiplier_examples() {
        let g = make_grid(2, 32, 5.0_f64).unwrap();
        let target = g.mode_index(&[3, -2]).unwrap();
        let k = g.wavevector(target);
        let pw = sample(&g, &AnalyticSpec::PlaneWave { amplitude: 1.0, wavevector: k }).unwrap();
        let lap = apply_operator(&pw, Symbol::AbsPower(2.0)).unwrap();
        let q = k[0] * k[0] + k[1] * k[1];
        for (a, b) in lap.values().iter().zip(pw.values()) {
            assert!((a - b * q).norm() < 1e-12 * q);
        }
        let id = apply_operator(&pw, Symbol::Bessel(0.0)).unwrap();
        for (a, b) in id.values().iter().zip(pw.values()) {
            assert!((a - b).norm() < 1e-13);
        }
        let s = forward_transform(&pw);
        assert!(matches!(
            apply_multiplier(&s, Symbol::AbsPower(-1.0)),
            Err(Error::NegativeOrder(_))
        ));
    }

    #[test]
    fn d2_of_gaussian_is_minus_laplacian() {
        // -Laplace e^{-|x|^2/2} = (d - |x|^2) e^{-|x|^2/2}
        for d in 1..=3 {
            let n = if d == 3 { 48 } else { 128 };
            let g = make_grid(d, n, if d == 3 { 8.0 } else { 12.0 }).unwrap();
            let u = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
            let lap = apply_operator(&u, Symbol::AbsPower(2.0)).unwrap();
            for (i, z) in lap.values().iter().enumerate() {
                let x = g.point(i);
                let r2: f64 = x.iter().map(|c| c * c).sum();
                let expect = (d as f64 - r2) * (-r2 / 2.0).exp();
                assert!((z.re - expect).abs() < 1e-9, "d={d} r2={r2}");
                assert!(z.im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lp_norm_examples() {
        let g = make_grid(1, 16, 1.0_f64).unwrap();
        let one = sample(&g, &AnalyticSpec::Constant { re: 1.0, im: 0.0 }).unwrap();
        assert!((lp_norm(&one, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(lp_norm(&one, 0.5), Err(Error::InvalidExponent(_))));
        assert_eq!(lp_norm(&one, f64::INFINITY).unwrap(), 1.0);

        let g3 = make_grid(3, 128, 16.0_f64).unwrap();
        let u = sample(&g3, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let expect = (2.0 * std::f64::consts::PI).powf(1.5);
        assert!(rel(lp_norm(&u, 1.0).unwrap(), expect) < 1e-8);
        // p = 3 against the analytic value (2 pi / 3)^{3/2} raised to 1/3
        let l3 = lp_norm(&u, 3.0).unwrap();
        let l3_expect = (2.0 * std::f64::consts::PI / 3.0).powf(1.5).powf(1.0 / 3.0);
        assert!(rel(l3, l3_expect) < 1e-8);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = make_grid(1, 64, 6.0_f64).unwrap();
        let target = g.mode_index(&[5]).unwrap();
        let k = g.wavevector(target);
        let pw = sample(&g, &AnalyticSpec::PlaneWave { amplitude: 1.0, wavevector: k }).unwrap();
        let l2_one = (12.0_f64).sqrt();
        let h2 = sobolev_norm(&pw, 2.0).unwrap();
        assert!(rel(h2, (1.0 + k[0] * k[0]) * l2_one) < 1e-12);
        assert!(rel(sobolev_norm(&pw, 0.0).unwrap(), l2_norm(&pw)) < 1e-12);
        assert!(matches!(sobolev_norm(&pw, -0.5), Err(Error::NegativeOrder(_))));
    }

    /// Composite Simpson quadrature of `(1+xi^2)^2 |g^(xi)|^2 / (2 pi)` for the
    /// unit gaussian, independent of the FFT path.
    fn gaussian_h2_quadrature() -> f64 {
        let (a, b, n) = (-40.0_f64, 40.0_f64, 40_000usize);
        let h = (b - a) / n as f64;
        let f = |xi: f64| {
            let ghat = (2.0 * std::f64::consts::PI).sqrt() * (-xi * xi / 2.0).exp();
            (1.0 + xi * xi).powi(2) * ghat * ghat / (2.0 * std::f64::consts::PI)
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        (s * h / 3.0).sqrt()
    }

    #[test]
    fn gaussian_h2_norm_matches_quadrature() {
        let g = make_grid(1, 256, 16.0_f64).unwrap();
        let u = sample(&g, &AnalyticSpec::gaussian(1.0, 1.0)).unwrap();
        let h2 = sobolev_norm(&u, 2.0).unwrap();
        assert!(rel(h2, gaussian_h2_quadrature()) < 1e-9);
    }

    fn random_band_limited(g: &Arc<GridSpec<f64>>, seed: u64) -> ComplexField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex::new(0.0, 0.0); g.len()];
        for (i, c) in coeffs.iter_mut().enumerate() {
            if g.in_two_thirds(i) {
                *c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        inverse_transform(&SpectralField::from_coefficients(g.clone(), coeffs).unwrap())
    }

    #[test]
    fn equivalence_witness_is_grid_independent() {
        let mut worst = Vec::new();
        for &n in &[32usize, 64, 128] {
            let g = make_grid(1, n, 4.0_f64).unwrap();
            let mut hi: f64 = 0.0;
            for seed in 0..20 {
                let f = random_band_limited(&g, seed);
                let (a, b) = equivalence_ratios(&f, 2.0).unwrap();
                hi = hi.max(a).max(b);
            }
            worst.push(hi);
        }
        // per-mode bound: (1+s^2) <= 1 + s^2 and 1 + s^2 <= sqrt(2) (1+s^2)
        for w in worst {
            assert!(w <= 2.0_f64.sqrt() + 1e-12, "{w}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_and_parseval(seed in 0u64..10_000, d in 1usize..=3) {
            let n = if d == 3 { 16 } else { 32 };
            let g = make_grid(d, n, 2.5_f64).unwrap();
            let f = random_band_limited(&g, seed);
            let back = inverse_transform(&forward_transform(&f));
            let diff = l2_norm(&back.sub(&f).unwrap());
            prop_assert!(diff <= 1e-12 * l2_norm(&f));
            let spec = forward_transform(&f).l2_norm();
            let direct = l2_norm(&f);
            prop_assert!((spec * spec - direct * direct).abs() <= 1e-12 * direct * direct);
        }

        #[test]
        fn multiplier_composition(a in 0.0f64..3.0, b in 0.0f64..3.0, seed in 0u64..1000) {
            let g = make_grid(2, 16, 3.0_f64).unwrap();
            let s = forward_transform(&random_band_limited(&g, seed));
            let two = apply_multiplier(&apply_multiplier(&s, Symbol::AbsPower(a)).unwrap(), Symbol::AbsPower(b)).unwrap();
            let one = apply_multiplier(&s, Symbol::AbsPower(a + b)).unwrap();
            let scale = one.l2_norm().max(1e-300);
            let diff: f64 = two.coefficients().iter().zip(one.coefficients()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
                / g.box_volume().sqrt();
            prop_assert!(diff <= 1e-12 * scale);
        }

        #[test]
        fn norms_interleave(s in 0.0f64..3.0, dt in 0.0f64..2.0, seed in 0u64..1000) {
            let g = make_grid(1, 64, 5.0_f64).unwrap();
            let f = random_band_limited(&g, seed);
            let l2 = l2_norm(&f);
            let hs = sobolev_norm(&f, s).unwrap();
            let ht = sobolev_norm(&f, s + dt).unwrap();
            prop_assert!(l2 <= hs * (1.0 + 1e-12));
            prop_assert!(hs <= ht * (1.0 + 1e-12));
        }
    }

    #[test]
    fn f32_grid_round_trip() {
        let g = make_grid(2, 16, 2.0_f32).unwrap();
        let u = sample(&g, &AnalyticSpec::gaussian(1.0_f32, 0.7)).unwrap();
        let back = inverse_transform(&forward_transform(&u));
        let diff = l2_norm(&back.sub(&u).unwrap());
        assert!(diff <= 1e-5 * l2_norm(&u));
    }
}
