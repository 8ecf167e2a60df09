//! Reference-table reproduction and seeded invariant suites shared by the CLI
//! and the acceptance run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::amplitudes::{amplitudes, g_factors_raw, hermitian_amplitudes, AmplitudeError};
use crate::oracle::{oracle_amplitudes, OracleError};
use crate::spectral::{
    cc_left_energies, cc_right_energies, classify_matches, family, level_spacing, rprime_left_zeros, rprime_zero_spacing_with,
    scan_ranges, ss_energies, AbsorptionRange, RangeCriterion, ScanError, Side, SpectralKind, DEFAULT_GRID_POINTS,
};
use crate::units::{energy_to, EnergyScale, PotentialSpec};

/// Relative deviation allowed for discrete reference energies.
pub const TABLE_TOLERANCE: f64 = 5e-3;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowCheck {
    /// Relative deviation of a single energy.
    Discrete,
    /// Overlap of a certified range with the reference interval.
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub v0: f64,
    pub rho: f64,
    pub scale: EnergyScale,
    pub check: RowCheck,
    /// Display-unit value; `lo == hi` for discrete rows, NaN when no range was found.
    pub computed: (f64, f64),
    pub reference: (f64, f64),
    /// Relative deviation (discrete) or relative gap to the reference interval (overlap).
    pub deviation: f64,
    /// Threshold that produced the reported range.
    pub threshold: Option<f64>,
    pub pass: bool,
}

fn energy_from(value: f64, scale: EnergyScale) -> f64 {
    value / energy_to(1.0, scale)
}

fn discrete_row(label: String, spec: &PotentialSpec, energy: f64, reference: f64, scale: EnergyScale) -> TableRow {
    let shown = energy_to(energy, scale);
    let deviation = ((shown - reference) / reference).abs();
    TableRow {
        label,
        v0: spec.v0,
        rho: spec.rho,
        scale,
        check: RowCheck::Discrete,
        computed: (shown, shown),
        reference: (reference, reference),
        deviation,
        threshold: None,
        pass: deviation <= TABLE_TOLERANCE,
    }
}

fn gap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0.max(b.0) - a.1.min(b.1)).max(0.0)
}

fn intersection(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Finds the certified range closest to `reference` (smallest gap, then largest
/// shared length), trying thresholds in order and stopping at the first that
/// overlaps. Returns the range and its gap in display units.
pub fn range_overlap(
    spec: &PotentialSpec,
    criterion: RangeCriterion,
    reference: (f64, f64),
    scale: EnergyScale,
    thresholds: &[f64],
    grid_points: usize,
) -> Result<(Option<AbsorptionRange>, f64), ValidationError> {
    let window = (energy_from(reference.0, scale), energy_from(reference.1, scale));
    let mut best: Option<(AbsorptionRange, f64, f64)> = None;
    for &t in thresholds {
        for r in scan_ranges(spec, criterion, window, t, grid_points)? {
            let shown = (energy_to(r.lo, scale), energy_to(r.hi, scale));
            let (g, shared) = (gap(shown, reference), intersection(shown, reference));
            let better = match &best {
                None => true,
                Some((_, bg, bs)) => g < *bg || (g == *bg && shared > *bs),
            };
            if better {
                best = Some((r, g, shared));
            }
        }
        if matches!(best, Some((_, _, s)) if s > 0.0) {
            break;
        }
    }
    Ok(match best {
        Some((r, g, _)) => (Some(r), g),
        None => (None, f64::INFINITY),
    })
}

fn overlap_row(
    label: &str,
    spec: PotentialSpec,
    criterion: RangeCriterion,
    reference: (f64, f64),
    scale: EnergyScale,
    thresholds: &[f64],
    grid_points: usize,
) -> Result<TableRow, ValidationError> {
    let (range, g) = range_overlap(&spec, criterion, reference, scale, thresholds, grid_points)?;
    let computed = range
        .as_ref()
        .map_or((f64::NAN, f64::NAN), |r| (energy_to(r.lo, scale), energy_to(r.hi, scale)));
    Ok(TableRow {
        label: label.to_string(),
        v0: spec.v0,
        rho: spec.rho,
        scale,
        check: RowCheck::Overlap,
        computed,
        reference,
        deviation: g / (reference.1 - reference.0),
        threshold: range.as_ref().map(|r| r.threshold),
        pass: intersection(computed, reference) > 0.0,
    })
}

/// Thresholds tried, in order, for ranges whose published width is only
/// approximate.
pub const RANGE_THRESHOLDS: [f64; 5] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

/// Recomputes every reference row from its defining parameters.
pub fn reference_table(grid_points: usize) -> Result<Vec<TableRow>, ValidationError> {
    use EnergyScale::{ElectronVolt as Ev, MegaElectronVolt as Mev};
    let mut rows = Vec::new();

    let shallow = PotentialSpec::new(1.2, 1.8, 1.0);
    for (p, want) in cc_left_energies(&shallow, 3).iter().zip([16.94, 55.50, 105.07]) {
        rows.push(discrete_row(format!("cc_left n={}", p.index), &shallow, p.energy, want, Ev));
    }
    let right = family(&shallow, SpectralKind::CcRight, 3)?;
    for (p, want) in right.iter().zip([5.51, 22.04, 49.58]) {
        rows.push(discrete_row(format!("cc_right n={}", p.index), &shallow, p.energy, want, Ev));
    }

    rows.push(overlap_row(
        "cc_left range",
        PotentialSpec::new(1.0, 0.0006, 1.0),
        RangeCriterion::CcLeftRange,
        (81.6791, 81.6954),
        Ev,
        &RANGE_THRESHOLDS[..1],
        grid_points,
    )?);
    rows.push(overlap_row(
        "cc_left range",
        PotentialSpec::new(5.5e6, 60.0, 1.0),
        RangeCriterion::CcLeftRange,
        (1.37, 1.83),
        Mev,
        &RANGE_THRESHOLDS,
        grid_points,
    )?);

    let step = PotentialSpec::new(2.0, 2.0, 1.0);
    let a2 = family(&step, SpectralKind::CpaForwardA2, 3)?;
    let a3 = family(&step, SpectralKind::CpaForwardA3, 3)?;
    let pick = |list: &[crate::spectral::SpectralPoint], idx: u64| list.iter().find(|p| p.index == idx).copied();
    for (kind, p, want) in [
        ("cpa_forward_a2", pick(&a2, 1), 27.2),
        ("cpa_forward_a3", pick(&a3, 4), 54.4),
        ("cpa_forward_a2", pick(&a2, 2), 61.2),
    ] {
        let row = match p {
            Some(p) => discrete_row(format!("{kind} n={}", p.index), &step, p.energy, want, Ev),
            None => discrete_row(format!("{kind} missing"), &step, f64::NAN, want, Ev),
        };
        rows.push(row);
    }
    let rev = family(&step, SpectralKind::CpaTimeReversed, 3)?;
    for (p, want) in rev.iter().zip([37.03, 83.32, 143.92]) {
        rows.push(discrete_row(format!("cpa_time_reversed M={}", p.index), &step, p.energy, want, Ev));
    }

    rows.push(overlap_row(
        "cpa range",
        PotentialSpec::new(15.0, 0.000998, 1.0),
        RangeCriterion::CpaRange,
        (408.096, 408.258),
        Ev,
        &RANGE_THRESHOLDS[..1],
        grid_points,
    )?);
    rows.push(overlap_row(
        "cpa range",
        PotentialSpec::new(5.5e6, 60.0, 1.0),
        RangeCriterion::CpaRange,
        (0.055, 0.097),
        Mev,
        &RANGE_THRESHOLDS,
        grid_points,
    )?);
    // NaN deviations (missing points) must not pass.
    for r in &mut rows {
        if r.deviation.is_nan() {
            r.pass = false;
        }
    }
    Ok(rows)
}

pub fn default_reference_table() -> Result<Vec<TableRow>, ValidationError> {
    reference_table(DEFAULT_GRID_POINTS)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub samples: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &str, samples: usize, max_deviation: f64, tolerance: f64, detail: String) -> Self {
        SuiteReport {
            name: name.to_string(),
            samples,
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
            detail,
        }
    }
}

fn generic(x: f64, margin: f64) -> bool {
    (x - x.round()).abs() > margin
}

/// `|G4 G1 + k1/k2 - G2 G3| / |G2 G3|` over random channel parameters.
pub fn gamma_identity_suite(rng: &mut ChaCha8Rng, samples: usize) -> SuiteReport {
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < samples {
        let a2 = rng.gen_range(0.01..20.0);
        let a3 = rng.gen_range(0.01..20.0);
        if ![2.0 * a2, 2.0 * a3, a2 + a3, a2 - a3].iter().all(|&x| generic(x, 1e-3)) {
            continue;
        }
        let g = g_factors_raw(a2, a3, 1.0, 1.0);
        let rhs = (g.g2 * g.g3).coefficient();
        let err = ((g.g4 * g.g1).coefficient() + a2 / a3 - rhs).norm() / rhs.norm();
        worst = worst.max(err);
        n += 1;
    }
    SuiteReport::new("gamma_identity", samples, worst, 1e-9, "a2, a3 in (0.01, 20)".into())
}

/// Flux conservation, reflection symmetry and unit determinant for the real potential.
pub fn hermitian_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport, ValidationError> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v0 = rng.gen_range(0.1..10.0);
        let delta = rng.gen_range(0.2..5.0);
        let e = rng.gen_range(0.01..50.0);
        let a = hermitian_amplitudes(v0, delta, 1.0, e)?;
        let flux = (a.refl_left.value().re + a.trans.value().re - 1.0).abs();
        let sym = (a.rl.value().norm() - a.rr.value().norm()).abs();
        let det = (a.det_s.value().norm() - 1.0).abs();
        worst = worst.max(flux).max(sym).max(det);
    }
    Ok(SuiteReport::new(
        "hermitian_unitarity",
        samples,
        worst,
        1e-10,
        "R + T - 1, |r_l| - |r_r|, |det S| - 1".into(),
    ))
}

/// Contour-ODE amplitudes against the closed forms at moderate parameters.
pub fn oracle_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport, ValidationError> {
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < samples {
        let v0 = rng.gen_range(0.5..5.0);
        let rho = rng.gen_range(0.5..3.0);
        let e = rng.gen_range(0.1..10.0);
        let mut spec = PotentialSpec::new(v0, rho, 1.0);
        if rng.gen_bool(0.5) {
            spec = spec.partner();
        }
        let o = match oracle_amplitudes(&spec, e) {
            Err(OracleError::NearCritical { .. }) => continue,
            r => r?,
        };
        let c = amplitudes(&spec, e)?;
        worst = worst
            .max(o.rl.rel_diff(&c.rl))
            .max(o.rr.rel_diff(&c.rr))
            .max(o.tl.rel_diff(&c.tl));
        n += 1;
    }
    Ok(SuiteReport::new("oracle_agreement", samples, worst, 1e-6, "r_l, r_r, t_l relative".into()))
}

/// Factor by which the oracle's `|r_l|` falls when the offset from a CC-left
/// point shrinks tenfold.
pub fn limit_approach_factor(spec: &PotentialSpec, energy: f64, offset: f64) -> Result<f64, ValidationError> {
    let far = oracle_amplitudes(spec, energy * (1.0 + offset))?;
    let near = oracle_amplitudes(spec, energy * (1.0 + offset / 10.0))?;
    Ok(far.rl.value().norm() / near.rl.value().norm())
}

pub fn limit_approach_suite() -> Result<SuiteReport, ValidationError> {
    let spec = PotentialSpec::new(1.2, 1.8, 1.0);
    let point = cc_left_energies(&spec, 1)[0];
    let factor = limit_approach_factor(&spec, point.energy, 1e-3)?;
    let mut r = SuiteReport::new(
        "oracle_limit_approach",
        1,
        8.0 / factor,
        1.0,
        format!("|r_l| falls {factor:.3}x per decade of offset (need >= 8)"),
    );
    r.pass = factor >= 8.0;
    Ok(r)
}

fn random_spec(rng: &mut ChaCha8Rng) -> PotentialSpec {
    PotentialSpec::new(rng.gen_range(0.1..50.0), rng.gen_range(0.05..5.0), rng.gen_range(0.2..5.0))
}

/// Consecutive differences of the enumerated families against the closed spacings.
pub fn spacing_suite(rng: &mut ChaCha8Rng, specs: usize) -> SuiteReport {
    let mut worst = 0.0f64;
    for _ in 0..specs {
        let spec = random_spec(rng);
        for side in [Side::Left, Side::Right] {
            for w in ss_energies(&spec, side, 12).windows(2) {
                let want = level_spacing(&spec, w[0].index);
                worst = worst.max(((w[1].energy - w[0].energy) - want).abs() / want);
            }
        }
        for w in cc_left_energies(&spec, 12).windows(2).chain(cc_right_energies(&spec, 12).windows(2)) {
            let want = level_spacing(&spec, w[0].index);
            worst = worst.max(((w[1].energy - w[0].energy) - want).abs() / want);
        }
    }
    SuiteReport::new("level_spacing", specs, worst, 1e-12, "SS left/right, CC left/right".into())
}

/// R'-zero spacing against the closed form with level denominator `denom`.
pub fn rprime_spacing_deviation(rng: &mut ChaCha8Rng, specs: usize, denom: f64) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..specs {
        let spec = random_spec(rng);
        let z = rprime_left_zeros(&spec);
        for w in z.windows(2) {
            // Ascending energy means descending index.
            let n = w[1].index;
            let d = w[0].energy - w[1].energy;
            let want = rprime_zero_spacing_with(&spec, n, denom);
            let scale = want.abs().max(level_spacing(&spec, n));
            worst = worst.max((d - want).abs() / scale);
        }
    }
    worst
}

/// Confirms the level denominator 16 and rejects the alternative 18.
pub fn rprime_spacing_suite(seed: u64, specs: usize) -> SuiteReport {
    let good = rprime_spacing_deviation(&mut ChaCha8Rng::seed_from_u64(seed), specs, 16.0);
    let alt = rprime_spacing_deviation(&mut ChaCha8Rng::seed_from_u64(seed), specs, 18.0);
    let mut r = SuiteReport::new(
        "rprime_zero_spacing",
        specs,
        good,
        1e-9,
        format!("denominator 16: {good:.2e}; denominator 18: {alt:.2e}"),
    );
    r.pass = good <= 1e-9 && alt > 1e-3;
    r
}

/// Forward CC-left energies coincide with reversed SS-left energies and carry
/// the expected zero/pole classification.
pub fn duality_suite(rng: &mut ChaCha8Rng, specs: usize) -> Result<SuiteReport, ValidationError> {
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..specs {
        let spec = random_spec(rng);
        let cc = cc_left_energies(&spec, 8);
        let ss = ss_energies(&spec.partner(), Side::Left, 8);
        if cc.len() != ss.len() {
            failures += 1;
        }
        for (a, b) in cc.iter().zip(ss.iter()) {
            worst = worst.max((a.energy - b.energy).abs() / a.energy.abs());
            if !a.degenerate && !(classify_matches(&spec, a)? && classify_matches(&spec, b)?) {
                failures += 1;
            }
        }
    }
    let mut r = SuiteReport::new(
        "cc_ss_duality",
        specs,
        worst,
        0.0,
        format!("{failures} classification mismatches"),
    );
    r.pass = worst == 0.0 && failures == 0;
    Ok(r)
}

/// Runs every suite from one seed; each suite draws from its own stream.
pub fn verify_all(seed: u64) -> Result<Vec<SuiteReport>, ValidationError> {
    let stream = |k: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        rng
    };
    Ok(vec![
        gamma_identity_suite(&mut stream(1), 1000),
        hermitian_suite(&mut stream(2), 200)?,
        oracle_suite(&mut stream(3), 50)?,
        limit_approach_suite()?,
        spacing_suite(&mut stream(4), 50),
        rprime_spacing_suite(seed.wrapping_add(5), 50),
        duality_suite(&mut stream(6), 5)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_rows_reproduce() {
        let rows = reference_table(256).unwrap();
        assert_eq!(rows.len(), 16);
        for r in rows.iter().filter(|r| r.check == RowCheck::Discrete) {
            assert!(r.pass, "{r:?}");
        }
        let m5 = rows.iter().find(|r| r.label == "cpa_time_reversed M=5").unwrap();
        assert!((m5.computed.0 - 143.95).abs() < 0.01);
        assert!((m5.deviation - 2.1e-4).abs() < 1e-4);
    }

    #[test]
    fn missing_range_is_reported_as_failure() {
        let spec = PotentialSpec::new(1.0, 0.0006, 1.0);
        let (r, g) = range_overlap(&spec, RangeCriterion::CcLeftRange, (81.6791, 81.6954), EnergyScale::ElectronVolt, &[1e-300], 256).unwrap();
        assert!(r.is_none() && g.is_infinite());
    }

    #[test]
    fn suites_pass_and_are_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let x = gamma_identity_suite(&mut a, 50);
        let y = gamma_identity_suite(&mut b, 50);
        assert_eq!(x, y);
        assert!(x.pass);
        assert!(hermitian_suite(&mut a, 20).unwrap().pass);
        assert!(spacing_suite(&mut a, 10).pass);
        assert!(duality_suite(&mut a, 3).unwrap().pass);
        let r = rprime_spacing_suite(3, 10);
        assert!(r.pass, "{}", r.detail);
    }
}
