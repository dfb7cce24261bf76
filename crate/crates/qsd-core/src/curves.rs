//! Supply and demand curves as cumulative distributions.
//!
//! A price density f over log-price x induces the supply curve
//! `S(x) = integral_{-inf}^{x} f` (probability a unit sells at log-price
//! up to x) and the complementary demand curve `D(x) = integral_x^{inf} f`.
//! Conditional curves fix one phase coordinate and accumulate a slice of a
//! phase function instead; where the slice dips negative the accumulated
//! curve loses monotonicity, which is the Giffen anomaly this module
//! detects and localizes.
//!
//! Axis convention for conditional supply: the accumulation runs over x up
//! to the limit `ln(1/c)`, so the curve is reported against `ln c = -x`
//! with the ordinate order reversed to keep the abscissa increasing.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::fisher::validated_density;
use crate::grid::GridFunction;
use crate::wigner::PhaseFunction;

/// Ordinate changes smaller than this count as quadrature noise, not
/// monotonicity violations.
pub const VIOLATION_THRESHOLD: f64 = 1e-9;

/// Slice integrals below this magnitude cannot be normalized meaningfully.
pub const SLICE_MASS_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Supply,
    Demand,
    ConditionalSupply,
    ConditionalDemand,
}

impl CurveKind {
    /// Direction a violation-free curve of this kind moves in.
    pub fn expected_nondecreasing(&self) -> bool {
        matches!(self, CurveKind::Supply | CurveKind::ConditionalDemand)
    }
}

/// A sampled curve over strictly increasing log-prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    kind: CurveKind,
    abscissa: Vec<f64>,
    ordinate: Vec<f64>,
}

impl Curve {
    /// Validates the axis (strictly increasing, finite) and, for the
    /// unconditional kinds, that ordinates stay within `[0, 1]` up to
    /// rounding.
    pub fn new(kind: CurveKind, abscissa: Vec<f64>, ordinate: Vec<f64>) -> Result<Curve> {
        if abscissa.len() != ordinate.len() || abscissa.len() < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "curve needs matching axes with at least 2 points, got {} / {}",
                abscissa.len(),
                ordinate.len()
            )));
        }
        if abscissa.iter().any(|v| !v.is_finite()) || ordinate.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidParameter(
                "curve values must be finite".into(),
            ));
        }
        if abscissa.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidParameter(
                "curve abscissa must be strictly increasing".into(),
            ));
        }
        if matches!(kind, CurveKind::Supply | CurveKind::Demand)
            && ordinate.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v))
        {
            return Err(CoreError::InvalidParameter(
                "cumulative ordinates must lie in [0, 1]".into(),
            ));
        }
        Ok(Curve {
            kind,
            abscissa,
            ordinate,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn ordinate(&self) -> &[f64] {
        &self.ordinate
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Linear interpolation at `lnc`; errors outside the sampled range.
    pub fn value_at(&self, lnc: f64) -> Result<f64> {
        let first = self.abscissa[0];
        let last = *self.abscissa.last().expect("validated non-empty");
        if !(first..=last).contains(&lnc) {
            return Err(CoreError::InvalidParameter(format!(
                "ln c = {lnc} outside the sampled range [{first}, {last}]"
            )));
        }
        let idx = match self
            .abscissa
            .binary_search_by(|a| a.partial_cmp(&lnc).expect("finite"))
        {
            Ok(i) => return Ok(self.ordinate[i]),
            Err(i) => i - 1,
        };
        let (a0, a1) = (self.abscissa[idx], self.abscissa[idx + 1]);
        let w = (lnc - a0) / (a1 - a0);
        Ok(self.ordinate[idx] * (1.0 - w) + self.ordinate[idx + 1] * w)
    }
}

/// Monotonicity audit of a curve.
#[derive(Debug, Clone, Serialize)]
pub struct GiffenReport {
    pub monotone: bool,
    /// Abscissa intervals over which the curve moves against its kind's
    /// direction, contiguous runs merged.
    pub violations: Vec<(f64, f64)>,
    /// Largest single adverse step (0 when none).
    pub max_dip: f64,
}

fn cumulative_from_left(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Supply curve of a price density: left cumulative, normalized to end at
/// exactly 1.
pub fn cdf_supply(f: &GridFunction) -> Result<Curve> {
    let density = validated_density(f)?;
    let h = f.spec().h();
    let mut cum = cumulative_from_left(&density, h);
    let total = *cum.last().expect("grid has points");
    for v in cum.iter_mut() {
        *v /= total;
    }
    Curve::new(CurveKind::Supply, f.spec().nodes(), cum)
}

/// Demand curve of a price density: right cumulative (accumulated
/// independently of [`cdf_supply`], so the complement identity is a real
/// check), normalized to start at exactly 1.
pub fn cdf_demand(f: &GridFunction) -> Result<Curve> {
    let density = validated_density(f)?;
    let h = f.spec().h();
    let n = density.len();
    let mut cum = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += 0.5 * h * (density[i] + density[i + 1]);
        cum[i] = acc;
    }
    let total = cum[0];
    for v in cum.iter_mut() {
        *v /= total;
    }
    Curve::new(CurveKind::Demand, f.spec().nodes(), cum)
}

/// Linear interpolation of a phase-function slice along one axis.
fn phase_slice(
    f: &PhaseFunction,
    fixed: f64,
    along_y: bool,
) -> Result<Vec<f64>> {
    let spec = f.spec();
    let (axis, out_len) = if along_y {
        (spec.x, spec.y.points)
    } else {
        (spec.y, spec.x.points)
    };
    if !(axis.x_min..=axis.x_max).contains(&fixed) {
        return Err(CoreError::InvalidParameter(format!(
            "slice coordinate {fixed} outside [{}, {}]",
            axis.x_min, axis.x_max
        )));
    }
    let t = (fixed - axis.x_min) / axis.h();
    let i0 = (t.floor() as usize).min(axis.points - 2);
    let w = t - i0 as f64;
    let mut slice = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let (a, b) = if along_y {
            (f.value(i0, j), f.value(i0 + 1, j))
        } else {
            (f.value(j, i0), f.value(j, i0 + 1))
        };
        slice.push(a * (1.0 - w) + b * w);
    }
    Ok(slice)
}

fn normalized_cumulative(slice: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut cum = cumulative_from_left(slice, h);
    let total = *cum.last().expect("validated length");
    if total.abs() < SLICE_MASS_MIN {
        return Err(CoreError::SliceDegenerate(format!(
            "slice integral {total:.3e} below {SLICE_MASS_MIN:.0e}"
        )));
    }
    for v in cum.iter_mut() {
        *v /= total;
    }
    Ok(cum)
}

/// Demand curve conditional on a fixed buying-side log-price: accumulates
/// the slice `f(x_fixed, y)` over y. Negative slice stretches make the
/// result non-monotone.
pub fn conditional_demand_curve(f: &PhaseFunction, x_fixed: f64) -> Result<Curve> {
    let slice = phase_slice(f, x_fixed, true)?;
    let cum = normalized_cumulative(&slice, f.spec().y.h())?;
    Curve::new(CurveKind::ConditionalDemand, f.spec().y.nodes(), cum)
}

/// Supply curve conditional on a fixed selling-side coordinate: accumulates
/// the slice `f(x, y_fixed)` over x up to `ln(1/c)` and reports it against
/// `ln c = -x`, so a violation-free curve is nonincreasing.
pub fn conditional_supply_curve(f: &PhaseFunction, y_fixed: f64) -> Result<Curve> {
    let slice = phase_slice(f, y_fixed, false)?;
    let cum = normalized_cumulative(&slice, f.spec().x.h())?;
    let abscissa: Vec<f64> = f.spec().x.nodes().iter().rev().map(|x| -x).collect();
    let ordinate: Vec<f64> = cum.into_iter().rev().collect();
    Curve::new(CurveKind::ConditionalSupply, abscissa, ordinate)
}

/// Scans adjacent ordinate pairs for moves against the curve's direction
/// beyond [`VIOLATION_THRESHOLD`], merging contiguous runs.
pub fn monotonicity_report(c: &Curve) -> GiffenReport {
    let ord = c.ordinate();
    let abs = c.abscissa();
    let nondecreasing = c.kind().expected_nondecreasing();
    let mut violations: Vec<(f64, f64)> = Vec::new();
    let mut last_violating_end: Option<usize> = None;
    let mut max_dip = 0.0f64;
    for i in 0..ord.len() - 1 {
        let adverse = if nondecreasing {
            ord[i] - ord[i + 1]
        } else {
            ord[i + 1] - ord[i]
        };
        max_dip = max_dip.max(adverse);
        if adverse > VIOLATION_THRESHOLD {
            match last_violating_end {
                Some(end) if end == i => {
                    violations.last_mut().expect("runs exist").1 = abs[i + 1];
                }
                _ => violations.push((abs[i], abs[i + 1])),
            }
            last_violating_end = Some(i + 1);
        }
    }
    GiffenReport {
        monotone: violations.is_empty(),
        violations,
        max_dip,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Strategy;
    use crate::wigner::{default_phase_grid, negative_regions, wigner_numeric};

    fn gaussian_pdf() -> GridFunction {
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        s.pdf(s.default_grid()).unwrap()
    }

    #[test]
    fn supply_curve_of_a_gaussian() {
        let c = cdf_supply(&gaussian_pdf()).unwrap();
        assert_eq!(c.kind(), CurveKind::Supply);
        assert!((c.value_at(0.0).unwrap() - 0.5).abs() < 1e-6);
        // 0.75-quantile of a variance-1/2 Gaussian
        assert!((c.value_at(0.476936).unwrap() - 0.75).abs() < 1e-4);
        assert!((c.ordinate().last().unwrap() - 1.0).abs() < 1e-12);
        assert!(monotonicity_report(&c).monotone);
    }

    #[test]
    fn demand_curve_complements_supply() {
        let pdf = gaussian_pdf();
        let s = cdf_supply(&pdf).unwrap();
        let d = cdf_demand(&pdf).unwrap();
        assert!((d.value_at(0.0).unwrap() - 0.5).abs() < 1e-6);
        assert!((d.value_at(0.476936).unwrap() - 0.25).abs() < 1e-4);
        assert!((d.ordinate()[0] - 1.0).abs() < 1e-12);
        for i in 0..s.len() {
            let sum = s.ordinate()[i] + d.ordinate()[i];
            assert!((sum - 1.0).abs() < 1e-9, "node {i}: {sum}");
        }
    }

    #[test]
    fn complement_holds_for_structured_densities() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let s = Strategy::new(0.8, 0.5, vec![c, 0.0, c]).unwrap();
        let pdf = s.pdf(s.default_grid()).unwrap();
        let sup = cdf_supply(&pdf).unwrap();
        let dem = cdf_demand(&pdf).unwrap();
        for i in 0..sup.len() {
            assert!((sup.ordinate()[i] + dem.ordinate()[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_densities_are_rejected() {
        let spec = crate::grid::GridSpec::new(-4.0, 4.0, 64).unwrap();
        let unnormalized = GridFunction::sample(spec, |x| (-x * x).exp()).unwrap();
        assert!(cdf_supply(&unnormalized).is_err());
        let negative = GridFunction::sample(spec, |x| -x).unwrap();
        assert!(cdf_demand(&negative).is_err());
    }

    #[test]
    fn ground_state_conditional_curves_are_monotone() {
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        let dem = conditional_demand_curve(&f, 0.0).unwrap();
        assert!(monotonicity_report(&dem).monotone);
        assert!(dem.ordinate()[0].abs() < 1e-6);
        assert!((dem.ordinate().last().unwrap() - 1.0).abs() < 1e-12);
        let sup = conditional_supply_curve(&f, 0.0).unwrap();
        assert!(monotonicity_report(&sup).monotone);
        assert!((sup.ordinate()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_excited_slices_violate_monotonicity() {
        let s = Strategy::pure(2, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        let dem = conditional_demand_curve(&f, 0.0).unwrap();
        let dem_report = monotonicity_report(&dem);
        assert!(!dem_report.monotone);
        assert!(!dem_report.violations.is_empty());
        assert!(dem_report.max_dip > VIOLATION_THRESHOLD);
        let sup = conditional_supply_curve(&f, 0.0).unwrap();
        assert!(!monotonicity_report(&sup).monotone);
    }

    #[test]
    fn violations_sit_inside_negative_region_projections() {
        let s = Strategy::pure(2, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        let dem = conditional_demand_curve(&f, 0.0).unwrap();
        let report = monotonicity_report(&dem);
        let regions = negative_regions(2);
        // grow each projection by one grid step: a violation interval ends
        // at the first node past the sign change
        let pad = f.spec().y.h();
        for &(lo, hi) in &report.violations {
            let hit = regions.iter().any(|r| {
                r.slice_projection(1.0, 0.0, 0.0)
                    .map(|(plo, phi)| {
                        let mirrored = lo.max(-phi - pad) <= hi.min(-plo + pad);
                        let direct = lo.max(plo - pad) <= hi.min(phi + pad);
                        mirrored || direct
                    })
                    .unwrap_or(false)
            });
            assert!(hit, "violation ({lo}, {hi}) misses every negative band");
        }
    }

    #[test]
    fn offset_slice_away_from_negative_disk_is_monotone() {
        let s = Strategy::pure(1, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        // rho >= 3 everywhere on this slice, far outside the disk at 0.707
        let dem = conditional_demand_curve(&f, 3.0).unwrap();
        assert!(monotonicity_report(&dem).monotone);
    }

    #[test]
    fn vanishing_slice_is_degenerate() {
        let s = Strategy::pure(1, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        let err = conditional_demand_curve(&f, 6.5).unwrap_err();
        assert_eq!(err.kind(), "SliceDegenerate");
    }

    #[test]
    fn slice_coordinate_must_be_inside_the_window() {
        let s = Strategy::pure(0, 1.0, 0.0).unwrap();
        let f = wigner_numeric(&s, &default_phase_grid(&s).unwrap()).unwrap();
        assert!(conditional_demand_curve(&f, 99.0).is_err());
        assert!(conditional_supply_curve(&f, -99.0).is_err());
    }

    #[test]
    fn constant_curve_is_trivially_monotone() {
        let c = Curve::new(
            CurveKind::Supply,
            vec![0.0, 1.0, 2.0],
            vec![0.5, 0.5, 0.5],
        )
        .unwrap();
        let report = monotonicity_report(&c);
        assert!(report.monotone);
        assert_eq!(report.max_dip, 0.0);
    }

    #[test]
    fn curve_validation_rejects_bad_axes() {
        assert!(Curve::new(CurveKind::Supply, vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(Curve::new(CurveKind::Supply, vec![0.0], vec![0.0]).is_err());
        assert!(Curve::new(CurveKind::Supply, vec![0.0, 1.0], vec![0.0, 2.0]).is_err());
        // conditional kinds may leave [0, 1]
        assert!(Curve::new(
            CurveKind::ConditionalDemand,
            vec![0.0, 1.0],
            vec![-0.2, 1.1]
        )
        .is_ok());
    }

    #[test]
    fn value_at_interpolates_and_guards_range() {
        let c = Curve::new(CurveKind::Supply, vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((c.value_at(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(c.value_at(-0.1).is_err());
        assert!(c.value_at(1.1).is_err());
    }

    #[test]
    fn merged_violation_runs_stay_contiguous() {
        // one descending run of three segments, then recovery
        let c = Curve::new(
            CurveKind::ConditionalDemand,
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.5, 0.4, 0.3, 0.2, 1.0],
        )
        .unwrap();
        let report = monotonicity_report(&c);
        assert_eq!(report.violations, vec![(0.0, 3.0)]);
        assert!((report.max_dip - 0.1).abs() < 1e-12);
    }
}
