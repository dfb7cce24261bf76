//! Fourier duality between the buying-side and selling-side descriptions.
//!
//! The selling-side amplitude is the unitary angular-frequency transform
//! `psihat(y) = (2 pi)^{-1/2} integral psi(x) e^{-i x y} dx`. This convention
//! makes the basis amplitudes at `mu = 1` exact transform eigenfunctions
//! with eigenvalue `(-i)^n`, so the duality statements become directly
//! checkable: `|psihat_n| = psi_n`, `std_x * std_y = n + 1/2`, and Fisher
//! information is preserved across the transform.
//!
//! [`fourier_transform_grid`] evaluates the transform on the DFT-conjugate
//! grid `y_j = 2 pi j / (N h)`, `j in [-N/2, N/2)`, where the discrete sum
//! `h e^{-i x_min y} DFT` matches the continuum integral to spectral
//! accuracy once the amplitude has decayed at the boundary. The conjugate
//! grid is exact for Parseval and plenty for moments, but its spacing is
//! too coarse for derivative-based functionals; [`fourier_transform_at`]
//! therefore evaluates the same discrete transform densely at arbitrary
//! `y`, which is what the Fisher invariance check uses.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};
use crate::fisher::fisher_information_grid;
use crate::grid::{GridFunction, GridSpec};
use crate::strategy::{psi_pure_eval, Strategy, DEFAULT_GRID_POINTS, DEFAULT_SPAN_SIGMAS};

/// Boundary amplitude above which a grid is considered to leak mass.
pub const BOUNDARY_DECAY_TOL: f64 = 1e-10;

/// Span of the canonical transform grid, in deviations. The usual 8-sigma
/// span leaves the ground state's boundary amplitude near 1e-7, above the
/// decay bound; 12 deviations push it to rounding level at every order.
pub const TRANSFORM_SPAN_SIGMAS: f64 = 12.0;

const INV_SQRT_TWO_PI: f64 = 0.398_942_280_401_432_7;

/// Canonical grid for transforming a strategy's amplitude: default node
/// count over [`TRANSFORM_SPAN_SIGMAS`] deviations either side of center.
pub fn transform_grid(s: &Strategy) -> Result<GridSpec> {
    let half = TRANSFORM_SPAN_SIGMAS * s.sigma();
    GridSpec::new(s.m() - half, s.m() + half, DEFAULT_GRID_POINTS)
}

/// Complex samples of a transformed amplitude on the dual (selling-side)
/// grid. Parseval holds against the input by construction of the DFT, so
/// `integral |values|^2 dy = integral |input|^2 dx` up to rounding.
#[derive(Debug, Clone)]
pub struct DualGridFunction {
    spec: GridSpec,
    values_re: Vec<f64>,
    values_im: Vec<f64>,
}

impl DualGridFunction {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values_re(&self) -> &[f64] {
        &self.values_re
    }

    pub fn values_im(&self) -> &[f64] {
        &self.values_im
    }

    /// `|psihat(y_j)|` at node `j`.
    pub fn modulus(&self, j: usize) -> f64 {
        self.values_re[j].hypot(self.values_im[j])
    }

    /// The selling-side density `|psihat|^2` as a real grid function.
    pub fn modulus_squared(&self) -> GridFunction {
        let values = self
            .values_re
            .iter()
            .zip(self.values_im.iter())
            .map(|(re, im)| re * re + im * im)
            .collect();
        GridFunction::new(self.spec, values).expect("moduli of finite values are finite")
    }
}

fn check_boundary_decay(modulus_first: f64, modulus_last: f64) -> Result<()> {
    if modulus_first > BOUNDARY_DECAY_TOL || modulus_last > BOUNDARY_DECAY_TOL {
        return Err(CoreError::LeakyDomain(format!(
            "boundary amplitudes ({modulus_first:.3e}, {modulus_last:.3e}) exceed {BOUNDARY_DECAY_TOL:.0e}; widen the grid"
        )));
    }
    Ok(())
}

/// Shared core: unitary transform of complex samples onto the conjugate grid.
fn transform_complex(spec: GridSpec, re: &[f64], im: &[f64]) -> Result<DualGridFunction> {
    let n = spec.points;
    let h = spec.h();
    check_boundary_decay(re[0].hypot(im[0]), re[n - 1].hypot(im[n - 1]))?;

    let mut buffer: Vec<Complex<f64>> = re
        .iter()
        .zip(im.iter())
        .map(|(&r, &i)| Complex::new(r, i))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let h_y = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let j_min = -((n / 2) as isize);
    let scale = h * INV_SQRT_TWO_PI;
    let mut values_re = Vec::with_capacity(n);
    let mut values_im = Vec::with_capacity(n);
    for p in 0..n {
        let j = j_min + p as isize;
        let y = h_y * j as f64;
        let k = j.rem_euclid(n as isize) as usize;
        // continuum scaling h * e^{-i x_min y} on the DFT bin
        let phase = Complex::from_polar(scale, -spec.x_min * y);
        let v = phase * buffer[k];
        values_re.push(v.re);
        values_im.push(v.im);
    }
    let y_min = h_y * j_min as f64;
    let dual = GridSpec::new(y_min, y_min + h_y * (n - 1) as f64, n)?;
    Ok(DualGridFunction {
        spec: dual,
        values_re,
        values_im,
    })
}

/// Transform of a real amplitude onto the conjugate grid spanning
/// `[-pi/h, pi/h)`.
pub fn fourier_transform_grid(f: &GridFunction) -> Result<DualGridFunction> {
    let zeros = vec![0.0; f.spec().points];
    transform_complex(f.spec(), f.values(), &zeros)
}

/// Transform of an already-transformed (complex) function; applying this to
/// [`fourier_transform_grid`]'s output evaluates `psi(-x)` on the
/// dual-of-dual grid, which is the convention self-check.
pub fn fourier_transform_dual(g: &DualGridFunction) -> Result<DualGridFunction> {
    transform_complex(g.spec, &g.values_re, &g.values_im)
}

/// The same discrete transform evaluated at one arbitrary `y` (a dense
/// DTFT term, not an interpolation). Returns `(re, im)`.
pub fn fourier_transform_at(f: &GridFunction, y: f64) -> (f64, f64) {
    let spec = f.spec();
    let h = spec.h();
    // e^{-i x_k y} by complex rotation, renormalized periodically so the
    // recurrence drift stays at rounding level over long grids
    let (mut cr, mut ci) = ((spec.x_min * y).cos(), -(spec.x_min * y).sin());
    let (rr, ri) = ((h * y).cos(), -(h * y).sin());
    let mut sr = 0.0;
    let mut si = 0.0;
    for (k, &v) in f.values().iter().enumerate() {
        sr += v * cr;
        si += v * ci;
        let t = cr * rr - ci * ri;
        ci = cr * ri + ci * rr;
        cr = t;
        if k % 256 == 255 {
            let norm = cr.hypot(ci);
            cr /= norm;
            ci /= norm;
        }
    }
    let scale = h * INV_SQRT_TWO_PI;
    (scale * sr, scale * si)
}

/// Dense transform sampled on an arbitrary dual grid; used where the
/// conjugate grid is too coarse (derivative functionals on the dual side).
pub fn fourier_transform_dense(f: &GridFunction, dual: GridSpec) -> Result<DualGridFunction> {
    let n = f.spec().points;
    check_boundary_decay(f.values()[0].abs(), f.values()[n - 1].abs())?;
    let mut values_re = Vec::with_capacity(dual.points);
    let mut values_im = Vec::with_capacity(dual.points);
    for j in 0..dual.points {
        let (re, im) = fourier_transform_at(f, dual.x(j));
        values_re.push(re);
        values_im.push(im);
    }
    Ok(DualGridFunction {
        spec: dual,
        values_re,
        values_im,
    })
}

/// Deviation from the transform-eigenfunction property at the self-dual
/// scale: `max_j | |psihat_n(y_j)| - |psi_n(y_j)| |` over the conjugate
/// grid. The eigenvalue `(-i)^n` has unit modulus, so the moduli must
/// coincide.
pub fn ft_eigen_defect(n: usize, grid: GridSpec) -> Result<f64> {
    let psi = GridFunction::sample(grid, |x| psi_pure_eval(n, 1.0, 0.0, x))?;
    let dual = fourier_transform_grid(&psi)?;
    let mut worst = 0.0f64;
    for j in 0..dual.spec.points {
        let reference = psi_pure_eval(n, 1.0, 0.0, dual.spec.x(j)).abs();
        worst = worst.max((dual.modulus(j) - reference).abs());
    }
    Ok(worst)
}

/// Dispersion product `std_x * std_y` between a strategy's price density
/// and its transform-side density. Equals `n + 1/2` for a pure `e_n` at any
/// scale; bounded below by `1/2` in this unitary convention.
pub fn uncertainty_product(s: &Strategy) -> Result<f64> {
    let psi = s.amplitude(transform_grid(s)?)?;
    let (_, var_x) = psi.map(|v| v * v)?.moments();
    let dual = fourier_transform_grid(&psi)?;
    let (_, var_y) = dual.modulus_squared().moments();
    Ok((var_x * var_y).sqrt())
}

/// Fisher information on both sides of the transform for the pure state
/// `e_n` at the self-dual scale; the pair agrees within quadrature error.
///
/// The dual density is sampled densely over eight selling-side deviations:
/// derivative quadrature needs the same per-sigma resolution as the primal
/// side, which the conjugate grid does not provide at small `n`.
pub fn fisher_ft_invariance(n: usize) -> Result<(f64, f64)> {
    let s = Strategy::pure(n, 1.0, 0.0)?;
    let grid = transform_grid(&s)?;
    let primal = fisher_information_grid(&s.pdf(grid)?)?.value;

    let sigma_y = (n as f64 + 0.5).sqrt();
    let dual_spec = GridSpec::new(
        -DEFAULT_SPAN_SIGMAS * sigma_y,
        DEFAULT_SPAN_SIGMAS * sigma_y,
        DEFAULT_GRID_POINTS,
    )?;
    let psi = s.amplitude(grid)?;
    let dual = fourier_transform_dense(&psi, dual_spec)?;
    let dual_fisher = fisher_information_grid(&dual.modulus_squared())?.value;
    Ok((primal, dual_fisher))
}
