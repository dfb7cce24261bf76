//! Phase-space (joint buying/selling) quasi-distributions.
//!
//! The phase function of an amplitude is
//!
//! ```text
//! f(x, y) = (1/2 pi) integral psi(x + s/2) psi(x - s/2) cos(s y) ds,
//! ```
//!
//! real by construction, with marginals `psi(x)^2` in x and `|psihat(y)|^2`
//! in y. For the pure basis state `e_n` it reduces to the closed form
//! `((-1)^n / pi) e^{-rho^2} L_n(2 rho^2)` in the scaled radius
//! `rho^2 = mu (x - m)^2 + y^2 / mu`, so its sign structure is radial:
//! rings where `L_n` is negative are regions of negative quasi-probability,
//! the phase-space footprint of non-classical (Giffen-prone) strategies.
//!
//! The numeric route truncates the integral at `S = 2 * (x-window width)`
//! and applies the trapezoid rule to the even integrand; both the
//! integrand's decay and its evenness make that quadrature spectrally
//! accurate, so closed and numeric values agree to ~1e-10 on default
//! windows, well inside the 1e-5 contract.

use serde::Serialize;

use crate::duality::{fourier_transform_at, transform_grid};
use crate::error::{CoreError, Result};
use crate::grid::{trapezoid, GridFunction, GridSpec};
use crate::strategy::Strategy;

/// Nodes per axis in the default phase window.
pub const DEFAULT_PHASE_POINTS: usize = 256;
/// Half-width of the default phase window, in deviations per axis.
pub const DEFAULT_PHASE_SPAN_SIGMAS: f64 = 6.0;
/// Floor on the s-quadrature node count.
const MIN_S_NODES: usize = 2049;
/// Ceiling guarding against absurd window/bandwidth combinations.
const MAX_S_NODES: usize = 1 << 17;

/// Rectangular phase-space window: an x-grid (log-price) crossed with a
/// y-grid (its dual).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGridSpec {
    pub x: GridSpec,
    pub y: GridSpec,
}

impl PhaseGridSpec {
    pub fn new(x: GridSpec, y: GridSpec) -> Self {
        PhaseGridSpec { x, y }
    }
}

/// Real samples on a phase window, row-major with x as the slow index:
/// `values[ix * ny + iy]`.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    spec: PhaseGridSpec,
    values: Vec<f64>,
}

impl PhaseFunction {
    pub fn new(spec: PhaseGridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.x.points * spec.y.points {
            return Err(CoreError::InvalidGrid(format!(
                "value count {} does not match {} x {} phase window",
                values.len(),
                spec.x.points,
                spec.y.points
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::InvalidGrid(format!(
                "non-finite phase value {bad}"
            )));
        }
        Ok(PhaseFunction { spec, values })
    }

    pub fn spec(&self) -> PhaseGridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.spec.y.points + iy]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// 2-D trapezoid integral over the window; 1 within 1e-4 for phase
    /// functions computed over a full default window.
    pub fn integral(&self) -> f64 {
        let ny = self.spec.y.points;
        let rows: Vec<f64> = (0..self.spec.x.points)
            .map(|ix| trapezoid(&self.values[ix * ny..(ix + 1) * ny], self.spec.y.h()))
            .collect();
        trapezoid(&rows, self.spec.x.h())
    }

    /// `integral f dy` per x node (should reproduce the price density).
    pub fn marginal_x(&self) -> GridFunction {
        let ny = self.spec.y.points;
        let values: Vec<f64> = (0..self.spec.x.points)
            .map(|ix| trapezoid(&self.values[ix * ny..(ix + 1) * ny], self.spec.y.h()))
            .collect();
        GridFunction::new(self.spec.x, values).expect("finite rows integrate to finite values")
    }

    /// `integral f dx` per y node (should reproduce the dual density).
    pub fn marginal_y(&self) -> GridFunction {
        let ny = self.spec.y.points;
        let values: Vec<f64> = (0..ny)
            .map(|iy| {
                let col: Vec<f64> = (0..self.spec.x.points)
                    .map(|ix| self.values[ix * ny + iy])
                    .collect();
                trapezoid(&col, self.spec.x.h())
            })
            .collect();
        GridFunction::new(self.spec.y, values).expect("finite columns integrate to finite values")
    }
}

/// Sign tag for reported phase-space regions; only negative regions are
/// reported (the complement is nonnegative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSign {
    Negative,
}

/// A radial band `rho in [rho_lo, rho_hi]` in the scaled metric
/// `rho^2 = mu (x - m)^2 + y^2 / mu`; `rho_lo = 0` denotes a disk. In raw
/// phase coordinates the band is an elliptical annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialRegion {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub sign: RegionSign,
}

impl RadialRegion {
    pub fn contains(&self, rho: f64) -> bool {
        (self.rho_lo..=self.rho_hi).contains(&rho)
    }

    /// Intersection of the band with the vertical slice line `x = x_fixed`,
    /// reported as the positive-y interval (the negative-y mirror is
    /// implied). `None` when the slice misses the band.
    pub fn slice_projection(&self, mu: f64, m: f64, x_fixed: f64) -> Option<(f64, f64)> {
        let d2 = mu * (x_fixed - m) * (x_fixed - m);
        if self.rho_hi * self.rho_hi <= d2 {
            return None;
        }
        let y_hi = (mu * (self.rho_hi * self.rho_hi - d2)).sqrt();
        let y_lo = (mu * (self.rho_lo * self.rho_lo - d2).max(0.0)).sqrt();
        Some((y_lo, y_hi))
    }
}

/// Laguerre polynomial `L_n(t)` by the three-term recurrence.
pub fn laguerre_eval(n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - t) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form phase function of the pure state `e_n`:
/// `((-1)^n / pi) e^{-rho^2} L_n(2 rho^2)`.
pub fn wigner_closed(n: usize, mu: f64, m: f64, x: f64, y: f64) -> f64 {
    assert!(mu.is_finite() && mu > 0.0, "wigner_closed needs mu > 0");
    let rho2 = mu * (x - m) * (x - m) + y * y / mu;
    if rho2 > 700.0 {
        // exp underflow dominates any polynomial growth at reachable orders
        return 0.0;
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * std::f64::consts::FRAC_1_PI * (-rho2).exp() * laguerre_eval(n, 2.0 * rho2)
}

/// Closed form sampled over a window (comparison and plotting aid).
pub fn wigner_closed_grid(n: usize, mu: f64, m: f64, spec: &PhaseGridSpec) -> Result<PhaseFunction> {
    let ny = spec.y.points;
    let mut values = Vec::with_capacity(spec.x.points * ny);
    for ix in 0..spec.x.points {
        let x = spec.x.x(ix);
        for iy in 0..ny {
            values.push(wigner_closed(n, mu, m, x, spec.y.x(iy)));
        }
    }
    PhaseFunction::new(*spec, values)
}

/// Default window for a strategy: +-6 deviations per axis, 256x256.
pub fn default_phase_grid(s: &Strategy) -> Result<PhaseGridSpec> {
    let n = s.max_order() as f64;
    let sigma_x = s.sigma();
    let sigma_y = ((n + 0.5) * s.mu()).sqrt();
    let x = GridSpec::new(
        s.m() - DEFAULT_PHASE_SPAN_SIGMAS * sigma_x,
        s.m() + DEFAULT_PHASE_SPAN_SIGMAS * sigma_x,
        DEFAULT_PHASE_POINTS,
    )?;
    let y = GridSpec::new(
        -DEFAULT_PHASE_SPAN_SIGMAS * sigma_y,
        DEFAULT_PHASE_SPAN_SIGMAS * sigma_y,
        DEFAULT_PHASE_POINTS,
    )?;
    Ok(PhaseGridSpec::new(x, y))
}

/// s-node count resolving both the window's largest `|y|` and the
/// amplitude's own spectral content at 4x the Nyquist density.
fn s_node_count(s_max: f64, y_abs_max: f64, order: usize, mu: f64) -> usize {
    let band = ((2.0 * order as f64 + 1.0) * mu).sqrt() + 8.0 * mu.sqrt();
    let h_cap = std::f64::consts::PI / (2.0 * (y_abs_max + band));
    let needed = (s_max / h_cap).ceil() as usize + 2;
    needed.clamp(MIN_S_NODES, MAX_S_NODES)
}

fn s_truncation_guard(s: &Strategy, spec: &PhaseGridSpec) -> Result<f64> {
    let s_max = 2.0 * spec.x.span();
    // The overlap psi(x+s/2) psi(x-s/2) reaches out to |s| = 2 * (support
    // radius); with support taken as 8 deviations the truncation at
    // S = 2 * span only covers it when the window spans >= 8 deviations.
    let needed = 8.0 * s.sigma();
    if spec.x.span() < needed * (1.0 - 1e-12) {
        return Err(CoreError::DomainTooNarrow(format!(
            "x-window width {:.3} truncates the overlap integral; need at least {needed:.3}",
            spec.x.span()
        )));
    }
    Ok(s_max)
}

/// Phase function by the cosine-kernel quadrature on a window.
pub fn wigner_numeric(s: &Strategy, spec: &PhaseGridSpec) -> Result<PhaseFunction> {
    let s_max = s_truncation_guard(s, spec)?;
    let y_abs = spec.y.x_min.abs().max(spec.y.x_max.abs());
    let n_s = s_node_count(s_max, y_abs, s.max_order(), s.mu());
    let h_s = s_max / (n_s - 1) as f64;

    let nx = spec.x.points;
    let ny = spec.y.points;

    // cos(s_k y_j) reused across every x row; one contiguous row per y node
    let mut cos_table = vec![0.0f64; ny * n_s];
    for j in 0..ny {
        let y = spec.y.x(j);
        let row = &mut cos_table[j * n_s..(j + 1) * n_s];
        for (k, c) in row.iter_mut().enumerate() {
            *c = (h_s * k as f64 * y).cos();
        }
    }

    // (1/2pi) int_{-S}^{S} = (1/pi) int_0^S for the even integrand; the
    // half-weight trapezoid end at s = 0 is exactly the full-line weight.
    let scale = h_s * std::f64::consts::FRAC_1_PI;
    let mut values = vec![0.0f64; nx * ny];
    let mut weighted = vec![0.0f64; n_s];
    for ix in 0..nx {
        let x = spec.x.x(ix);
        for (k, w) in weighted.iter_mut().enumerate() {
            let half_s = 0.5 * h_s * k as f64;
            let mut g = s.eval(x + half_s) * s.eval(x - half_s);
            if k == 0 || k == n_s - 1 {
                g *= 0.5;
            }
            *w = g;
        }
        let out_row = &mut values[ix * ny..(ix + 1) * ny];
        for (j, out) in out_row.iter_mut().enumerate() {
            let cos_row = &cos_table[j * n_s..(j + 1) * n_s];
            let acc: f64 = weighted
                .iter()
                .zip(cos_row.iter())
                .map(|(g, c)| g * c)
                .sum();
            *out = scale * acc;
        }
    }
    PhaseFunction::new(*spec, values)
}

/// Single-point quadrature value, using the default window's truncation.
pub fn wigner_numeric_at(s: &Strategy, x: f64, y: f64) -> Result<f64> {
    let spec = default_phase_grid(s)?;
    let s_max = s_truncation_guard(s, &spec)?;
    let y_abs = spec.y.x_min.abs().max(spec.y.x_max.abs()).max(y.abs());
    let n_s = s_node_count(s_max, y_abs, s.max_order(), s.mu());
    let h_s = s_max / (n_s - 1) as f64;
    let mut acc = 0.0;
    for k in 0..n_s {
        let half_s = 0.5 * h_s * k as f64;
        let mut g = s.eval(x + half_s) * s.eval(x - half_s) * (h_s * k as f64 * y).cos();
        if k == 0 || k == n_s - 1 {
            g *= 0.5;
        }
        acc += g;
    }
    Ok(acc * h_s * std::f64::consts::FRAC_1_PI)
}

/// Largest deviations of the window marginals from the two densities:
/// `(max_x |int f dy - psi^2(x)|, max_y |int f dx - |psihat(y)|^2|)`.
pub fn wigner_marginal_defect(f: &PhaseFunction, s: &Strategy) -> Result<(f64, f64)> {
    let spec = f.spec();
    let mx = f.marginal_x();
    let mut defect_x = 0.0f64;
    for ix in 0..spec.x.points {
        let want = s.eval(spec.x.x(ix)).powi(2);
        defect_x = defect_x.max((mx.values()[ix] - want).abs());
    }

    let psi = s.amplitude(transform_grid(s)?)?;
    let my = f.marginal_y();
    let mut defect_y = 0.0f64;
    for iy in 0..spec.y.points {
        let (re, im) = fourier_transform_at(&psi, spec.y.x(iy));
        let want = re * re + im * im;
        defect_y = defect_y.max((my.values()[iy] - want).abs());
    }
    Ok((defect_x, defect_y))
}

/// Maximal radial bands where the pure-state phase function is negative.
///
/// The sign of `f_n` is the sign of `(-1)^n L_n(2 rho^2)`: the scan walks
/// that profile in 1e-3 steps out to `sqrt(2n+3) + 2` (beyond every root of
/// `L_n`), refines each crossing by bisection to 1e-10, and merges the
/// strictly-negative stretches. Even orders yield n/2 annuli; odd orders a
/// center disk plus (n-1)/2 annuli.
pub fn negative_regions(n: usize) -> Vec<RadialRegion> {
    let profile = |rho: f64| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * laguerre_eval(n, 2.0 * rho * rho)
    };
    let rho_max = (2.0 * n as f64 + 3.0).sqrt() + 2.0;
    let step = 1e-3;

    let mut regions = Vec::new();
    let mut prev_rho = 0.0;
    let mut prev_val = profile(0.0);
    let mut open_lo = if prev_val < 0.0 { Some(0.0) } else { None };
    let mut rho = step;
    while rho <= rho_max {
        let val = profile(rho);
        if val == 0.0 {
            // landed exactly on a root; perturb the sample off it
            rho += step * 0.5;
            continue;
        }
        if val.signum() != prev_val.signum() {
            let root = bisect_root(&profile, prev_rho, rho);
            match open_lo.take() {
                Some(lo) => regions.push(RadialRegion {
                    rho_lo: lo,
                    rho_hi: root,
                    sign: RegionSign::Negative,
                }),
                None => open_lo = Some(root),
            }
        }
        prev_rho = rho;
        prev_val = val;
        rho += step;
    }
    debug_assert!(
        open_lo.is_none(),
        "profile must end positive beyond the last root"
    );
    regions
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..80 {
        if hi - lo <= 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
