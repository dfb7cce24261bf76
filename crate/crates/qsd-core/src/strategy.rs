//! Hermite-Gaussian strategy amplitudes.
//!
//! A strategy is a real, L2-normalized amplitude over log-price,
//!
//! ```text
//! psi(x) = sum_k c_k psi_k(x),
//! psi_k(x) = (mu)^(1/4) / sqrt(2^k k! sqrt(pi)) * exp(-mu (x-m)^2 / 2) * H_k(sqrt(mu) (x-m)),
//! ```
//!
//! with `H_k` the physicists' Hermite polynomials. The squared amplitude is
//! the price density; `m` locates it and `1/mu` sets its dispersion scale.
//! The pure state of order `n` carries risk `(n + 1/2)/mu` and is the
//! information-minimizing density at that risk, which is why this family is
//! the natural coordinate system for everything else in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{trapezoid, GridFunction, GridSpec};

/// Node count of the default grid.
pub const DEFAULT_GRID_POINTS: usize = 1024;
/// Half-width of the default grid in units of the density's standard
/// deviation. Eight sigmas leave tail mass below 1e-14 for every order.
pub const DEFAULT_SPAN_SIGMAS: f64 = 8.0;
/// `sum c_k^2` may differ from 1 by at most this much after construction.
pub const COEFF_NORM_TOL: f64 = 1e-12;
/// Larger normalization drift up to this bound is silently repairable
/// (rescale with a warning); beyond it construction fails.
pub const COEFF_RESCALE_TOL: f64 = 1e-6;
/// Largest basis order evaluated through the direct factorial formula;
/// beyond it `2^n n!` degrades and the orthonormal recurrence takes over.
pub const DIRECT_FORMULA_MAX_ORDER: usize = 30;

/// Physicists' Hermite polynomial `H_n(u)` by the three-term recurrence
/// `H_{k+1} = 2u H_k - 2k H_{k-1}`.
pub fn hermite_eval(n: usize, u: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * u;
    for k in 1..n {
        let next = 2.0 * u * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Hermite functions `h_0(u) .. h_{n_max}(u)` where
/// `h_k(u) = H_k(u) exp(-u^2/2) / sqrt(2^k k! sqrt(pi))`.
///
/// The recurrence `h_{k+1} = u sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}`
/// carries the normalization inside each step, so no factorials appear and
/// the values stay representable at any order.
fn hermite_normalized_all(n_max: usize, u: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n_max + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    h.push(h0);
    if n_max == 0 {
        return h;
    }
    h.push(std::f64::consts::SQRT_2 * u * h0);
    for k in 1..n_max {
        let kf = k as f64;
        let next = u * (2.0 / (kf + 1.0)).sqrt() * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Pure basis amplitude `psi_n(x)` for scale `mu > 0` and center `m`.
///
/// Orders up to [`DIRECT_FORMULA_MAX_ORDER`] use the explicit normalization
/// `sqrt(sqrt(mu) / (2^n n! sqrt(pi)))`; higher orders switch to the
/// orthonormal recurrence, which avoids the `2^n n!` overflow entirely.
pub fn psi_pure_eval(n: usize, mu: f64, m: f64, x: f64) -> f64 {
    let u = mu.sqrt() * (x - m);
    if 0.5 * u * u > 745.0 {
        // exp underflows; the true value is indistinguishable from zero.
        return 0.0;
    }
    if n <= DIRECT_FORMULA_MAX_ORDER {
        let norm = (mu.sqrt() / (2f64.powi(n as i32) * factorial(n) * std::f64::consts::PI.sqrt()))
            .sqrt();
        norm * (-0.5 * u * u).exp() * hermite_eval(n, u)
    } else {
        mu.powf(0.25) * hermite_normalized_all(n, u)[n]
    }
}

/// Pointwise value of `sum_k coeffs[k] psi_k(x)` with no normalization
/// requirement on the coefficients. One recurrence sweep serves every order,
/// so this is the right entry point for perturbed (non-unit) combinations.
pub fn eval_linear_combination(mu: f64, m: f64, coeffs: &[f64], x: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let u = mu.sqrt() * (x - m);
    if 0.5 * u * u > 745.0 {
        return 0.0;
    }
    let table = hermite_normalized_all(coeffs.len() - 1, u);
    let scale = mu.powf(0.25);
    coeffs
        .iter()
        .zip(table.iter())
        .map(|(c, h)| c * scale * h)
        .sum()
}

/// First and second central moment of a strategy's price density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub risk: f64,
}

/// A normalized superposition of pure basis amplitudes.
///
/// Serialized form is the plain descriptor `{"mu": .., "m": .., "coeffs": [..]}`;
/// deserialization runs the same validation as [`Strategy::new`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    mu: f64,
    m: f64,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStrategy {
    mu: f64,
    m: f64,
    coeffs: Vec<f64>,
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawStrategy::deserialize(d)?;
        Strategy::new(raw.mu, raw.m, raw.coeffs).map_err(serde::de::Error::custom)
    }
}

impl Strategy {
    /// Validates `mu > 0`, finite `m`, and unit `sum c_k^2`.
    ///
    /// A squared sum within [`COEFF_RESCALE_TOL`] of 1 is rescaled to unit
    /// norm with a warning; anything further off is rejected outright.
    pub fn new(mu: f64, m: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "scale mu must be positive and finite, got {mu}"
            )));
        }
        if !m.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "center m must be finite, got {m}"
            )));
        }
        if coeffs.is_empty() {
            return Err(CoreError::InvalidParameter(
                "coefficient vector is empty".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        let norm2: f64 = coeffs.iter().map(|c| c * c).sum();
        let drift = (norm2 - 1.0).abs();
        let coeffs = if drift <= COEFF_NORM_TOL {
            coeffs
        } else if drift <= COEFF_RESCALE_TOL {
            log::warn!("coefficient norm off by {drift:.3e}; rescaling to unit norm");
            let inv = norm2.sqrt().recip();
            coeffs.into_iter().map(|c| c * inv).collect()
        } else {
            return Err(CoreError::NotNormalized(format!(
                "sum of squared coefficients is {norm2}, off by {drift:.3e} (repair limit {COEFF_RESCALE_TOL})"
            )));
        };
        Ok(Strategy { mu, m, coeffs })
    }

    /// The pure basis strategy `e_n`.
    pub fn pure(n: usize, mu: f64, m: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        Strategy::new(mu, m, coeffs)
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest basis order present in the coefficient vector.
    pub fn max_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Some(n)` when the strategy is the single basis state `e_n`
    /// (up to sign and 1e-12 of stray weight elsewhere).
    pub fn pure_order(&self) -> Option<usize> {
        let (k, ck) = self
            .coeffs
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 * a.1).total_cmp(&(b.1 * b.1)))?;
        if 1.0 - ck * ck <= COEFF_NORM_TOL {
            Some(k)
        } else {
            None
        }
    }

    /// Risk-balance eigenvalue `n + 1/2` of a pure strategy.
    pub fn eigenvalue(&self) -> Option<f64> {
        self.pure_order().map(|n| n as f64 + 0.5)
    }

    /// Standard deviation of the highest-order component's density; this
    /// sets how wide a grid has to be.
    pub fn sigma(&self) -> f64 {
        ((self.max_order() as f64 + 0.5) / self.mu).sqrt()
    }

    /// Default grid: `[m - 8 sigma, m + 8 sigma]` with 1024 nodes, sigma
    /// taken from the highest occupied order.
    pub fn default_grid(&self) -> GridSpec {
        let half = DEFAULT_SPAN_SIGMAS * self.sigma();
        GridSpec {
            x_min: self.m - half,
            x_max: self.m + half,
            points: DEFAULT_GRID_POINTS,
        }
    }

    /// Amplitude value `psi(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.mu.sqrt() * (x - self.m);
        if 0.5 * u * u > 745.0 {
            return 0.0;
        }
        let h = hermite_normalized_all(self.max_order(), u);
        let scale = self.mu.powf(0.25);
        self.coeffs
            .iter()
            .zip(h.iter())
            .map(|(c, hk)| c * hk)
            .sum::<f64>()
            * scale
    }

    /// Amplitude samples on `grid`.
    pub fn amplitude(&self, grid: GridSpec) -> Result<GridFunction> {
        GridFunction::sample(grid, |x| self.eval(x))
    }

    /// Price density `psi(x)^2` on `grid`.
    ///
    /// Errors with `DomainTooNarrow` when the grid captures less than
    /// `1 - 1e-4` of the unit mass; on a conforming grid the samples
    /// integrate to 1 within 1e-6.
    pub fn pdf(&self, grid: GridSpec) -> Result<GridFunction> {
        let f = GridFunction::sample(grid, |x| {
            let v = self.eval(x);
            v * v
        })?;
        let total = f.integral();
        if total < 1.0 - 1e-4 {
            return Err(CoreError::DomainTooNarrow(format!(
                "grid [{}, {}] captures only {total:.6} of the unit density mass",
                grid.x_min, grid.x_max
            )));
        }
        Ok(f)
    }

    /// Quadrature moments of the density on the default grid. For a pure
    /// strategy these reproduce `(m, (n + 1/2)/mu)` to better than 1e-8.
    pub fn moments(&self) -> Result<Moments> {
        let pdf = self.pdf(self.default_grid())?;
        let (mean, risk) = pdf.moments();
        Ok(Moments { mean, risk })
    }
}

/// Result of expanding a gridded amplitude over the basis.
#[derive(Debug, Clone)]
pub struct BasisProjection {
    /// `c_k = integral f psi_k dx` for `k = 0 ..= n_max`.
    pub coeffs: Vec<f64>,
    /// L2 norm of the part of `f` outside the truncated basis.
    pub residual: f64,
}

/// Projects a normalized amplitude onto the basis `(mu, m)` up to `n_max`.
pub fn project_onto_basis(
    f: &GridFunction,
    mu: f64,
    m: f64,
    n_max: usize,
) -> Result<BasisProjection> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "scale mu must be positive and finite, got {mu}"
        )));
    }
    let h = f.spec().h();
    let norm2 = trapezoid(&f.values().iter().map(|v| v * v).collect::<Vec<_>>(), h);
    if (norm2 - 1.0).abs() > 1e-4 {
        return Err(CoreError::NotNormalized(format!(
            "amplitude squared integrates to {norm2}, expected 1 within 1e-4"
        )));
    }
    let spec = f.spec();
    let n = spec.points;
    // One pass per node through the orthonormal recurrence covers all k.
    let mut coeffs = vec![0.0; n_max + 1];
    let scale = mu.powf(0.25);
    let mut basis_at_node = vec![vec![0.0; n_max + 1]; n];
    for i in 0..n {
        let u = mu.sqrt() * (spec.x(i) - m);
        let hs = hermite_normalized_all(n_max, u);
        for k in 0..=n_max {
            basis_at_node[i][k] = scale * hs[k];
        }
    }
    for k in 0..=n_max {
        let prod: Vec<f64> = (0..n).map(|i| f.values()[i] * basis_at_node[i][k]).collect();
        coeffs[k] = trapezoid(&prod, h);
    }
    let mut resid2: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let recon: f64 = (0..=n_max).map(|k| coeffs[k] * basis_at_node[i][k]).sum();
        let r = f.values()[i] - recon;
        resid2.push(r * r);
    }
    let residual = trapezoid(&resid2, h).max(0.0).sqrt();
    Ok(BasisProjection { coeffs, residual })
}

/// Boltzmann-Shannon entropy `-sum w ln w` of mixture weights, with the
/// convention `0 ln 0 = 0`. Weights must be nonnegative and sum to 1
/// within 1e-12.
pub fn mixture_entropy(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(CoreError::BadWeights("no weights supplied".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CoreError::BadWeights(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(CoreError::BadWeights(format!(
            "weights sum to {total}, expected 1 within 1e-12"
        )));
    }
    Ok(weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| -w * w.ln())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_QUARTER_INV: f64 = 0.7511255444649425; // pi^(-1/4)

    #[test]
    fn hermite_matches_explicit_polynomials() {
        // H_0..H_4 written out by hand as the oracle.
        let cases = [
            (0, 1.3, 1.0),
            (1, 1.3, 2.6),
            (2, 1.5, 4.0 * 2.25 - 2.0),
            (3, 0.5, 8.0 * 0.125 - 12.0 * 0.5),
            (4, -0.7, 16.0 * 0.2401 - 48.0 * 0.49 + 12.0),
        ];
        for (n, u, want) in cases {
            let got = hermite_eval(n, u);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "H_{n}({u}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn ground_state_peak_value() {
        let v = psi_pure_eval(0, 1.0, 0.0, 0.0);
        assert!((v - PI_QUARTER_INV).abs() < 1e-15);
    }

    #[test]
    fn direct_formula_and_recurrence_agree_across_the_switch() {
        // psi_n must be continuous in implementation across order 30.
        for n in [10usize, 25, 29, 30, 31, 35, 45] {
            for &x in &[-2.3, -0.4, 0.0, 0.9, 3.7] {
                // the orthonormal recurrence is valid at every order and
                // serves as the reference
                let reference = hermite_normalized_all(n, x)[n];
                let via_api = psi_pure_eval(n, 1.0, 0.0, x);
                assert!(
                    (via_api - reference).abs() < 1e-12 * reference.abs().max(1.0),
                    "n={n} x={x}: {via_api} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn pure_amplitudes_are_normalized_on_default_grid() {
        for n in [0usize, 1, 2, 5, 12, 40] {
            let s = Strategy::pure(n, 1.0, 0.0).unwrap();
            let amp = s.amplitude(s.default_grid()).unwrap();
            let sq: Vec<f64> = amp.values().iter().map(|v| v * v).collect();
            let total = trapezoid(&sq, amp.spec().h());
            assert!((total - 1.0).abs() < 1e-9, "n={n}: {total}");
        }
    }

    #[test]
    fn orthonormality_on_default_grid() {
        let s = Strategy::pure(12, 1.0, 0.0).unwrap();
        let grid = s.default_grid();
        let h = grid.h();
        let basis: Vec<Vec<f64>> = (0..=12)
            .map(|k| {
                (0..grid.points)
                    .map(|i| psi_pure_eval(k, 1.0, 0.0, grid.x(i)))
                    .collect()
            })
            .collect();
        for j in 0..=12 {
            for k in j..=12 {
                let prod: Vec<f64> =
                    (0..grid.points).map(|i| basis[j][i] * basis[k][i]).collect();
                let want = if j == k { 1.0 } else { 0.0 };
                let got = trapezoid(&prod, h);
                assert!(
                    (got - want).abs() < 1e-8,
                    "<psi_{j}|psi_{k}> = {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn equal_superposition_value_at_center() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let s = Strategy::new(1.0, 0.0, vec![c, c]).unwrap();
        // psi_1 vanishes at the center, so only the ground term contributes.
        let want = c * PI_QUARTER_INV;
        assert!((s.eval(0.0) - want).abs() < 1e-14);
    }

    #[test]
    fn norm_repair_and_rejection() {
        // within repair tolerance: rescaled silently (plus a log warning)
        let s = Strategy::new(1.0, 0.0, vec![1.0 + 4e-7, 0.0]).unwrap();
        let norm2: f64 = s.coeffs().iter().map(|c| c * c).sum();
        assert!((norm2 - 1.0).abs() <= COEFF_NORM_TOL);
        // beyond it: hard error
        let err = Strategy::new(1.0, 0.0, vec![1.1]).unwrap_err();
        assert_eq!(err.kind(), "NotNormalized");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Strategy::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(Strategy::new(-2.0, 0.0, vec![1.0]).is_err());
        assert!(Strategy::new(1.0, f64::NAN, vec![1.0]).is_err());
        assert!(Strategy::new(1.0, 0.0, vec![]).is_err());
    }

    #[test]
    fn moments_of_pure_states() {
        for (n, mu, m) in [(0usize, 1.0, 0.0), (1, 1.0, 0.3), (3, 2.0, -1.0), (7, 0.5, 4.0)] {
            let s = Strategy::pure(n, mu, m).unwrap();
            let mom = s.moments().unwrap();
            let want_risk = (n as f64 + 0.5) / mu;
            assert!((mom.mean - m).abs() < 1e-8, "mean n={n}");
            assert!((mom.risk - want_risk).abs() < 1e-8, "risk n={n}: {}", mom.risk);
        }
    }

    #[test]
    fn pdf_rejects_narrow_grid() {
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        let narrow = GridSpec::new(-0.5, 0.5, 64).unwrap();
        let err = s.pdf(narrow).unwrap_err();
        assert_eq!(err.kind(), "DomainTooNarrow");
    }

    #[test]
    fn pdf_mass_on_default_grid() {
        let s = Strategy::new(2.0, 1.0, vec![0.6, 0.0, -0.8]).unwrap();
        let pdf = s.pdf(s.default_grid()).unwrap();
        assert!((pdf.integral() - 1.0).abs() < 1e-6);
        assert!(pdf.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn projection_recovers_cross_scale_overlap() {
        // Ground state at scale 1 projected on the scale-2 basis: the
        // closed-form overlap is sqrt(2 sqrt(2) / 3).
        let want_c0 = (2.0 * std::f64::consts::SQRT_2 / 3.0).sqrt();
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        let amp = s.amplitude(s.default_grid()).unwrap();
        let proj = project_onto_basis(&amp, 2.0, 0.0, 6).unwrap();
        assert!(
            (proj.coeffs[0] - want_c0).abs() < 1e-9,
            "c0 = {}, want {want_c0}",
            proj.coeffs[0]
        );
        // odd orders vanish by parity
        assert!(proj.coeffs[1].abs() < 1e-9);
        assert!(proj.coeffs[3].abs() < 1e-9);
    }

    #[test]
    fn projection_roundtrip_is_identity() {
        let s = Strategy::new(1.5, 0.2, vec![0.5, -0.5, 0.5, 0.5]).unwrap();
        let amp = s.amplitude(s.default_grid()).unwrap();
        let proj = project_onto_basis(&amp, 1.5, 0.2, 12).unwrap();
        for k in 0..4 {
            assert!(
                (proj.coeffs[k] - s.coeffs()[k]).abs() < 1e-8,
                "c_{k}: {} vs {}",
                proj.coeffs[k],
                s.coeffs()[k]
            );
        }
        for k in 4..=12 {
            assert!(proj.coeffs[k].abs() < 1e-8);
        }
        assert!(proj.residual < 1e-7, "residual {}", proj.residual);
    }

    #[test]
    fn projection_rejects_unnormalized_input() {
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        let amp = s.amplitude(s.default_grid()).unwrap();
        let doubled = amp.map(|v| 2.0 * v).unwrap();
        assert_eq!(
            project_onto_basis(&doubled, 1.0, 0.0, 3).unwrap_err().kind(),
            "NotNormalized"
        );
    }

    #[test]
    fn entropy_values() {
        assert_eq!(mixture_entropy(&[1.0]).unwrap(), 0.0);
        let h = mixture_entropy(&[0.25; 4]).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-14);
        assert!((mixture_entropy(&[0.5, 0.5, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn entropy_rejects_bad_weights() {
        assert_eq!(mixture_entropy(&[]).unwrap_err().kind(), "BadWeights");
        assert_eq!(
            mixture_entropy(&[0.5, -0.1, 0.6]).unwrap_err().kind(),
            "BadWeights"
        );
        assert_eq!(
            mixture_entropy(&[0.6, 0.6]).unwrap_err().kind(),
            "BadWeights"
        );
    }

    #[test]
    fn descriptor_roundtrip() {
        let s = Strategy::new(2.5, -0.75, vec![0.8, 0.0, 0.6]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"mu\":2.5"));
        let back: Strategy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        // deserialization validates
        let bad: std::result::Result<Strategy, _> =
            serde_json::from_str(r#"{"mu": -1.0, "m": 0.0, "coeffs": [1.0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn pure_order_detection() {
        let s = Strategy::pure(3, 1.0, 0.0).unwrap();
        assert_eq!(s.pure_order(), Some(3));
        assert_eq!(s.eigenvalue(), Some(3.5));
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = Strategy::new(1.0, 0.0, vec![c, c]).unwrap();
        assert_eq!(mixed.pure_order(), None);
        assert_eq!(mixed.eigenvalue(), None);
    }
}
