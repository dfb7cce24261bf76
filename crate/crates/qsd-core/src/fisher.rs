//! Fisher information of price densities.
//!
//! For a density `f` with amplitude `psi = sqrt(f)`, the Fisher information
//!
//! ```text
//! I_F = integral f (d ln f / dx)^2 dx = integral f'^2 / f dx = 4 integral psi'^2 dx
//! ```
//!
//! is the inverse-variance yardstick of the Cramer-Rao bound and the
//! quantity the equilibrium densities minimize at fixed mean and risk.
//!
//! The quadrature route evaluates `f'^2 / f`. The two integrand forms are
//! identical analytically, but differencing `sqrt(f)` is numerically wrong
//! near interior zeros of the amplitude: `sqrt(f) = |psi|` has a slope
//! discontinuity there that a finite-difference stencil smears into an
//! O(h) error, while `f` itself stays smooth through the zero and the
//! ratio `f'^2 / f` tends to the finite limit `4 psi'^2`.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::grid::{derivative, trapezoid, trapezoid_weight, GridFunction, GridSpec};
use crate::strategy::Strategy;

/// Densities below this are treated as unsupported when dividing by `f`.
pub const PDF_SUPPORT_MIN: f64 = 1e-12;
/// Fisher integrand nodes with `f` below this contribute zero.
pub const INTEGRAND_SUPPORT_MIN: f64 = 1e-14;
/// A density's mass may deviate from 1 by at most this much.
pub const DENSITY_MASS_TOL: f64 = 1e-4;
/// Round-off floor: values in `[-1e-12, 0)` are clamped to zero, anything
/// more negative is rejected.
pub const NEGATIVE_VALUE_TOL: f64 = 1e-12;

/// Which route produced a Fisher value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    ClosedForm,
    Quadrature,
}

/// Fisher information together with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct FisherReport {
    pub value: f64,
    pub method: FisherMethod,
    /// Grid used by the quadrature route; absent for closed forms.
    pub grid: Option<GridSpec>,
}

pub(crate) fn validated_density(f: &GridFunction) -> Result<Vec<f64>> {
    let mut values = f.values().to_vec();
    for v in &mut values {
        if *v < 0.0 {
            if *v < -NEGATIVE_VALUE_TOL {
                return Err(CoreError::NotADensity(format!(
                    "negative density value {v}"
                )));
            }
            *v = 0.0;
        }
    }
    let mass = trapezoid(&values, f.spec().h());
    if (mass - 1.0).abs() > DENSITY_MASS_TOL {
        return Err(CoreError::NotADensity(format!(
            "density integrates to {mass}, expected 1 within {DENSITY_MASS_TOL}"
        )));
    }
    Ok(values)
}

/// Fisher information of gridded density samples, by quadrature of
/// `f'^2 / f` with the integrand zeroed wherever `f < 1e-14`.
pub fn fisher_information_grid(f: &GridFunction) -> Result<FisherReport> {
    let values = validated_density(f)?;
    let h = f.spec().h();
    let df = derivative(&values, h);
    let integrand: Vec<f64> = values
        .iter()
        .zip(df.iter())
        .map(|(&fi, &di)| {
            if fi >= INTEGRAND_SUPPORT_MIN {
                di * di / fi
            } else {
                0.0
            }
        })
        .collect();
    Ok(FisherReport {
        value: trapezoid(&integrand, h),
        method: FisherMethod::Quadrature,
        grid: Some(f.spec()),
    })
}

/// Closed-form Fisher information `4 mu (n + 1/2)` of a pure strategy.
pub fn fisher_information_closed(s: &Strategy) -> Result<FisherReport> {
    let n = s.pure_order().ok_or_else(|| {
        CoreError::NotPure("closed-form Fisher information needs a single basis state".into())
    })?;
    Ok(FisherReport {
        value: 4.0 * s.mu() * (n as f64 + 0.5),
        method: FisherMethod::ClosedForm,
        grid: None,
    })
}

/// Surprisal slope `dS/dx = -f'/f` on the nodes where `f >= 1e-12`.
///
/// `values[i]` is meaningful only where `support[i]` is true; masked nodes
/// hold zero.
#[derive(Debug, Clone)]
pub struct SurprisalDerivative {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub support: Vec<bool>,
}

impl SurprisalDerivative {
    /// Supported `(x, dS/dx)` pairs in grid order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.spec.points)
            .filter(|&i| self.support[i])
            .map(|i| (self.spec.x(i), self.values[i]))
    }
}

/// Derivative of the surprisal `S = -ln f`, restricted to the sub-grid
/// where the density is resolvable.
pub fn surprisal_derivative(f: &GridFunction) -> Result<SurprisalDerivative> {
    let values = validated_density(f)?;
    let h = f.spec().h();
    let df = derivative(&values, h);
    let mut out = vec![0.0; values.len()];
    let mut support = vec![false; values.len()];
    for i in 0..values.len() {
        if values[i] >= PDF_SUPPORT_MIN {
            out[i] = -df[i] / values[i];
            support[i] = true;
        }
    }
    Ok(SurprisalDerivative {
        spec: f.spec(),
        values: out,
        support,
    })
}

/// Dispersion product `std(dS/dx) * std(x)` under `f`.
///
/// This is the dimensionless Cramer-Rao combination; it is bounded below
/// by 1 with equality exactly for Gaussian densities.
pub fn cramer_rao_product(f: &GridFunction) -> Result<f64> {
    let values = validated_density(f)?;
    let spec = f.spec();
    let h = spec.h();
    let n = values.len();
    let df = derivative(&values, h);

    // moments of x under f
    let mass = trapezoid(&values, h);
    let mut mean_x = 0.0;
    for i in 0..n {
        mean_x += trapezoid_weight(i, n, h) * values[i] * spec.x(i);
    }
    mean_x /= mass;
    let mut var_x = 0.0;
    for i in 0..n {
        let d = spec.x(i) - mean_x;
        var_x += trapezoid_weight(i, n, h) * values[i] * d * d;
    }
    var_x /= mass;

    // moments of dS/dx under f, over the supported sub-grid; the weight
    // f * (dS/dx)^2 is accumulated as f'^2 / f which stays finite through
    // amplitude zeros.
    let mut w_mass = 0.0;
    let mut mean_d = 0.0;
    let mut second_d = 0.0;
    for i in 0..n {
        if values[i] < PDF_SUPPORT_MIN {
            continue;
        }
        let w = trapezoid_weight(i, n, h);
        w_mass += w * values[i];
        mean_d += w * (-df[i]);
        second_d += w * df[i] * df[i] / values[i];
    }
    if w_mass <= 0.0 {
        return Err(CoreError::NotADensity(
            "no nodes above the support threshold".into(),
        ));
    }
    mean_d /= w_mass;
    second_d /= w_mass;
    let var_d = (second_d - mean_d * mean_d).max(0.0);
    Ok((var_d * var_x).sqrt())
}
