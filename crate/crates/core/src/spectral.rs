//! Closed-form critical energies, their spacing laws, and threshold-certified
//! absorption ranges between consecutive spectral singularities.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::amplitudes::{amplitudes, channel_params, AmplitudeError};
use crate::special::INT_SNAP_TOL;
use crate::units::{PotentialSpec, Variant};

pub const DEFAULT_MAX_COUNT: usize = 10;
pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Hard cap on the number of SS brackets a single scan may touch.
pub const MAX_BRACKETS: usize = 20_000;

const REFINE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    CcLeft,
    CcRight,
    SsLeft,
    SsRight,
    CpaForwardA2,
    CpaForwardA3,
    CpaTimeReversed,
    RPrimeLeftZero,
}

impl SpectralKind {
    pub const ALL: [SpectralKind; 8] = [
        SpectralKind::CcLeft,
        SpectralKind::CcRight,
        SpectralKind::SsLeft,
        SpectralKind::SsRight,
        SpectralKind::CpaForwardA2,
        SpectralKind::CpaForwardA3,
        SpectralKind::CpaTimeReversed,
        SpectralKind::RPrimeLeftZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectralKind::CcLeft => "cc_left",
            SpectralKind::CcRight => "cc_right",
            SpectralKind::SsLeft => "ss_left",
            SpectralKind::SsRight => "ss_right",
            SpectralKind::CpaForwardA2 => "cpa_forward_a2",
            SpectralKind::CpaForwardA3 => "cpa_forward_a3",
            SpectralKind::CpaTimeReversed => "cpa_time_reversed",
            SpectralKind::RPrimeLeftZero => "rprime_left_zero",
        }
    }

    pub fn from_name(name: &str) -> Option<SpectralKind> {
        SpectralKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub kind: SpectralKind,
    pub index: u64,
    pub energy: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeCriterion {
    CcLeftRange,
    CpaRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionRange {
    pub lo: f64,
    pub hi: f64,
    pub criterion: RangeCriterion,
    pub threshold: f64,
    pub bracketing_ss: (SpectralPoint, SpectralPoint),
    pub interior_zeros: Vec<SpectralPoint>,
}

impl AbsorptionRange {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Intermediate scalars of the R'-zero and reversed-CPA closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryScalars {
    pub p_n: f64,
    pub q_m: f64,
}

pub fn auxiliary_scalars(spec: &PotentialSpec, n: u64, m_index: u64) -> AuxiliaryScalars {
    AuxiliaryScalars {
        p_n: p_n(spec, n),
        q_m: q_m(spec, m_index),
    }
}

/// `d^2/2 - v0/2` with `d = n rho / (2 sqrt m)`.
pub fn p_n(spec: &PotentialSpec, n: u64) -> f64 {
    let n = n as f64;
    n * n * spec.rho * spec.rho / (8.0 * spec.mass) - spec.v0 / 2.0
}

pub fn q_m(spec: &PotentialSpec, m_index: u64) -> f64 {
    // Same algebraic shape as p_n.
    p_n(spec, m_index)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("window must satisfy 0 < emin < emax, got [{0}, {1}]")]
    InvalidWindow(f64, f64),
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("grid_points must be at least 100, got {0}")]
    TooFewPoints(usize),
    #[error("window spans {0} spectral-singularity brackets (limit {1})")]
    TooManyBrackets(usize, usize),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= INT_SNAP_TOL
}

/// `2 a2` and `2 a3` (forward signs) at `energy`.
fn doubled_channel(spec: &PotentialSpec, energy: f64) -> (f64, f64) {
    let s = 4.0 / spec.rho;
    (
        s * (spec.mass * energy).sqrt(),
        s * (spec.mass * (energy + spec.v0)).sqrt(),
    )
}

/// Smallest integer strictly above `(4/rho) sqrt(m v0)` whose level sits at positive energy.
fn n_min_left(spec: &PotentialSpec) -> u64 {
    let mut n = ((4.0 / spec.rho) * (spec.mass * spec.v0).sqrt()).floor() as u64 + 1;
    while left_level(spec, n) <= 0.0 {
        n += 1;
    }
    n
}

fn left_level(spec: &PotentialSpec, n: u64) -> f64 {
    let n = n as f64;
    spec.level_unit() * n * n - spec.v0
}

fn right_level(spec: &PotentialSpec, n: u64) -> f64 {
    let n = n as f64;
    spec.level_unit() * n * n
}

fn left_point(spec: &PotentialSpec, kind: SpectralKind, n: u64) -> SpectralPoint {
    let energy = left_level(spec, n);
    let (two_a2, _) = doubled_channel(spec, energy);
    SpectralPoint {
        kind,
        index: n,
        energy,
        degenerate: is_integer(two_a2),
    }
}

fn right_point(spec: &PotentialSpec, kind: SpectralKind, n: u64) -> SpectralPoint {
    let energy = right_level(spec, n);
    let (_, two_a3) = doubled_channel(spec, energy);
    SpectralPoint {
        kind,
        index: n,
        energy,
        degenerate: is_integer(two_a3),
    }
}

pub fn cc_left_energies(spec: &PotentialSpec, max_count: usize) -> Vec<SpectralPoint> {
    let n0 = n_min_left(spec);
    (n0..n0 + max_count as u64)
        .map(|n| left_point(spec, SpectralKind::CcLeft, n))
        .collect()
}

pub fn cc_right_energies(spec: &PotentialSpec, max_count: usize) -> Vec<SpectralPoint> {
    (1..=max_count as u64)
        .map(|n| right_point(spec, SpectralKind::CcRight, n))
        .collect()
}

pub fn ss_energies(spec: &PotentialSpec, side: Side, max_count: usize) -> Vec<SpectralPoint> {
    match side {
        Side::Left => {
            let n0 = n_min_left(spec);
            (n0..n0 + max_count as u64)
                .map(|n| left_point(spec, SpectralKind::SsLeft, n))
                .collect()
        }
        Side::Right => (1..=max_count as u64)
            .map(|n| right_point(spec, SpectralKind::SsRight, n))
            .collect(),
    }
}

fn rprime_zero_at(spec: &PotentialSpec, n: u64) -> Option<SpectralPoint> {
    let d2 = spec.rho * spec.rho * (n * n) as f64 / (4.0 * spec.mass);
    if n == 0 || d2 >= spec.v0 {
        return None;
    }
    let p = p_n(spec, n);
    let energy = p * p / (spec.v0 + 2.0 * p);
    if !(energy > 0.0) {
        return None;
    }
    let (two_a2, _) = doubled_channel(spec, energy);
    Some(SpectralPoint {
        kind: SpectralKind::RPrimeLeftZero,
        index: n,
        energy,
        degenerate: is_integer(two_a2),
    })
}

/// Every zero of the time-reversed left reflection, ascending in energy
/// (descending in `n`).
pub fn rprime_left_zeros(spec: &PotentialSpec) -> Vec<SpectralPoint> {
    let bound = (2.0 / spec.rho) * (spec.mass * spec.v0).sqrt();
    let n_max = bound.ceil() as u64;
    let mut out: Vec<SpectralPoint> = (1..=n_max).filter_map(|n| rprime_zero_at(spec, n)).collect();
    out.reverse();
    out
}

/// Forward CPA points: `2 a2 = n1 + 1` (n1 >= 0) and `2 a3 = n2`, merged in
/// ascending energy. Coincidences where the determinant does not vanish are
/// dropped; surviving coincidences are flagged degenerate.
pub fn cpa_energies_forward(spec: &PotentialSpec, max_count: usize) -> Result<Vec<SpectralPoint>, AmplitudeError> {
    let mut out = Vec::with_capacity(2 * max_count);
    let mut n1 = 0u64;
    let mut kept = 0;
    while kept < max_count {
        let mut p = right_point(spec, SpectralKind::CpaForwardA2, n1 + 1);
        p.index = n1;
        if crate::amplitudes::det_s(spec, p.energy)?.kind.is_zero() {
            out.push(p);
            kept += 1;
        }
        n1 += 1;
    }
    let mut n2 = n_min_left(spec);
    kept = 0;
    while kept < max_count {
        let p = left_point(spec, SpectralKind::CpaForwardA3, n2);
        if crate::amplitudes::det_s(spec, p.energy)?.kind.is_zero() {
            out.push(p);
            kept += 1;
        }
        n2 += 1;
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.kind.cmp(&b.kind)));
    Ok(out)
}

fn cpa_reversed_at(spec: &PotentialSpec, m_index: u64) -> Option<SpectralPoint> {
    let q = q_m(spec, m_index);
    if !(q > 0.0) {
        return None;
    }
    let energy = q * q / (spec.v0 + 2.0 * q);
    let (two_a2, two_a3) = doubled_channel(spec, energy);
    if is_integer(two_a2) || is_integer(two_a3) {
        return None;
    }
    Some(SpectralPoint {
        kind: SpectralKind::CpaTimeReversed,
        index: m_index,
        energy,
        degenerate: false,
    })
}

/// Smallest `M` with `M > sqrt(4 m v0 / rho^2)`.
fn m_min(spec: &PotentialSpec) -> u64 {
    let bound = (4.0 * spec.mass * spec.v0).sqrt() / spec.rho;
    let mut m = bound.floor() as u64 + 1;
    while q_m(spec, m) <= 0.0 {
        m += 1;
    }
    m
}

/// Time-reversed CPA points `a2 + a3 = M`, skipping coincidences with an
/// integer `2 a2` or `2 a3`.
pub fn cpa_energies_time_reversed(spec: &PotentialSpec, max_count: usize) -> Vec<SpectralPoint> {
    let mut out = Vec::with_capacity(max_count);
    let mut m = m_min(spec);
    let mut tries = 0usize;
    while out.len() < max_count && tries < 64 * (max_count + 1) {
        if let Some(p) = cpa_reversed_at(spec, m) {
            out.push(p);
        }
        m += 1;
        tries += 1;
    }
    out
}

/// Enumerates one family.
pub fn family(spec: &PotentialSpec, kind: SpectralKind, max_count: usize) -> Result<Vec<SpectralPoint>, AmplitudeError> {
    Ok(match kind {
        SpectralKind::CcLeft => cc_left_energies(spec, max_count),
        SpectralKind::CcRight => cc_right_energies(spec, max_count),
        SpectralKind::SsLeft => ss_energies(spec, Side::Left, max_count),
        SpectralKind::SsRight => ss_energies(spec, Side::Right, max_count),
        SpectralKind::CpaForwardA2 | SpectralKind::CpaForwardA3 => cpa_energies_forward(spec, max_count)?
            .into_iter()
            .filter(|p| p.kind == kind)
            .collect(),
        SpectralKind::CpaTimeReversed => cpa_energies_time_reversed(spec, max_count),
        SpectralKind::RPrimeLeftZero => {
            let mut all = rprime_left_zeros(spec);
            all.truncate(max_count);
            all
        }
    })
}

/// Residual of the defining integer relation at the point's energy.
pub fn defining_residual(spec: &PotentialSpec, p: &SpectralPoint) -> f64 {
    let (two_a2, two_a3) = doubled_channel(spec, p.energy);
    let idx = p.index as f64;
    match p.kind {
        SpectralKind::CcLeft | SpectralKind::SsLeft | SpectralKind::CpaForwardA3 => two_a3 - idx,
        SpectralKind::CcRight | SpectralKind::SsRight => two_a2 - idx,
        SpectralKind::CpaForwardA2 => two_a2 - (idx + 1.0),
        SpectralKind::CpaTimeReversed => (two_a2 + two_a3) / 2.0 - idx,
        SpectralKind::RPrimeLeftZero => (two_a3 - two_a2) / 2.0 - idx,
    }
}

/// Checks that the amplitude defining the point has the expected zero/pole.
pub fn classify_matches(spec: &PotentialSpec, p: &SpectralPoint) -> Result<bool, AmplitudeError> {
    let fwd = spec.with_variant(Variant::Forward);
    let rev = spec.with_variant(Variant::TimeReversed);
    Ok(match p.kind {
        SpectralKind::CcLeft => {
            let a = amplitudes(&fwd, p.energy)?;
            a.rl.kind.is_zero() && a.tl.kind.is_zero()
        }
        SpectralKind::CcRight => {
            let a = amplitudes(&fwd, p.energy)?;
            a.rr.kind.is_zero() && a.tr.kind.is_zero()
        }
        SpectralKind::SsLeft => amplitudes(&rev, p.energy)?.rl.kind.is_pole(),
        SpectralKind::SsRight => amplitudes(&rev, p.energy)?.rr.kind.is_pole(),
        SpectralKind::CpaForwardA2 | SpectralKind::CpaForwardA3 => amplitudes(&fwd, p.energy)?.det_s.kind.is_zero(),
        SpectralKind::CpaTimeReversed => amplitudes(&rev, p.energy)?.det_s.kind.is_zero(),
        SpectralKind::RPrimeLeftZero => amplitudes(&rev, p.energy)?.rl.kind.is_zero(),
    })
}

/// Left-family spacing `E_{n+1} - E_n = rho^2 (2n+1) / (16 m)`; identical for
/// CC-left, CC-right and both SS sides.
pub fn level_spacing(spec: &PotentialSpec, n: u64) -> f64 {
    spec.level_unit() * (2 * n + 1) as f64
}

/// `E_{n+1} - E_n` for the R'-zeros, with the level denominator as a parameter
/// (16 reproduces the closed form).
pub fn rprime_zero_spacing_with(spec: &PotentialSpec, n: u64, denom: f64) -> f64 {
    let nf = n as f64;
    let rho2 = spec.rho * spec.rho;
    (2.0 * nf + 1.0) * (rho2 / (denom * spec.mass) - spec.mass * spec.v0 * spec.v0 / (nf * nf * (nf + 1.0) * (nf + 1.0) * rho2))
}

pub fn rprime_zero_spacing(spec: &PotentialSpec, n: u64) -> f64 {
    rprime_zero_spacing_with(spec, n, 16.0)
}

/// `log10` of the certified quantity: `max(R'_l, T')` or `|det S'|`, always on
/// the time-reversed amplitudes. `-inf` at exact zeros, `+inf` at poles.
pub fn certified_log10(spec: &PotentialSpec, criterion: RangeCriterion, energy: f64) -> Result<f64, AmplitudeError> {
    let a = amplitudes(&spec.with_variant(Variant::TimeReversed), energy)?;
    let lg = |s: crate::special::SingularValue| match s.kind {
        crate::special::Kind::Finite => s.log10_abs(),
        crate::special::Kind::Zero(_) => f64::NEG_INFINITY,
        crate::special::Kind::Pole(_) => f64::INFINITY,
    };
    Ok(match criterion {
        RangeCriterion::CcLeftRange => lg(a.refl_left).max(lg(a.trans)),
        RangeCriterion::CpaRange => lg(a.det_s),
    })
}

/// SS-left indices whose bracket `[E_N, E_{N+1}]` meets `[emin, emax]`.
fn left_brackets(spec: &PotentialSpec, emin: f64, emax: f64) -> Vec<(SpectralPoint, SpectralPoint)> {
    let n0 = n_min_left(spec);
    let index_of = |e: f64| (4.0 / spec.rho) * (spec.mass * (e + spec.v0)).sqrt();
    let lo = (index_of(emin).floor() as u64).saturating_sub(1).max(n0);
    let hi = index_of(emax).ceil() as u64 + 1;
    let pts: Vec<SpectralPoint> = (lo..=hi.max(lo))
        .map(|n| left_point(spec, SpectralKind::SsLeft, n))
        .collect();
    pairs_in_window(pts, emin, emax)
}

fn right_points(spec: &PotentialSpec, emin: f64, emax: f64) -> Vec<SpectralPoint> {
    let index_of = |e: f64| (4.0 / spec.rho) * (spec.mass * e).sqrt();
    let lo = (index_of(emin).floor() as u64).saturating_sub(1).max(1);
    let hi = index_of(emax).ceil() as u64 + 1;
    (lo..=hi.max(lo))
        .map(|n| right_point(spec, SpectralKind::SsRight, n))
        .collect()
}

fn pairs_in_window(pts: Vec<SpectralPoint>, emin: f64, emax: f64) -> Vec<(SpectralPoint, SpectralPoint)> {
    pts.windows(2)
        .filter(|w| w[1].energy > emin && w[0].energy < emax)
        .map(|w| (w[0], w[1]))
        .collect()
}

/// SS brackets relevant to `criterion` that intersect the window.
pub fn ss_brackets(
    spec: &PotentialSpec,
    criterion: RangeCriterion,
    emin: f64,
    emax: f64,
) -> Result<Vec<(SpectralPoint, SpectralPoint)>, ScanError> {
    let estimate = |e: f64| (4.0 / spec.rho) * (spec.mass * (e + spec.v0)).sqrt();
    let approx = 2.0 * (estimate(emax) - estimate(emin)) + 4.0;
    if approx > MAX_BRACKETS as f64 {
        return Err(ScanError::TooManyBrackets(approx as usize, MAX_BRACKETS));
    }
    Ok(match criterion {
        RangeCriterion::CcLeftRange => left_brackets(spec, emin, emax),
        RangeCriterion::CpaRange => {
            let mut pts: Vec<SpectralPoint> = left_brackets(spec, emin, emax)
                .into_iter()
                .flat_map(|(a, b)| [a, b])
                .collect();
            pts.extend(right_points(spec, emin, emax));
            pts.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.kind.cmp(&b.kind)));
            pts.dedup_by(|b, a| (b.energy - a.energy).abs() <= 1e-12 * a.energy.abs());
            pairs_in_window(pts, emin, emax)
        }
    })
}

/// Scans SS brackets intersecting `[emin, emax]` for maximal intervals where
/// the certified quantity stays below `threshold`.
pub fn scan_ranges(
    spec: &PotentialSpec,
    criterion: RangeCriterion,
    window: (f64, f64),
    threshold: f64,
    grid_points: usize,
) -> Result<Vec<AbsorptionRange>, ScanError> {
    let spec = spec.validate().map_err(AmplitudeError::from)?;
    let (emin, emax) = window;
    if !(emin > 0.0 && emax > emin && emax.is_finite()) {
        return Err(ScanError::InvalidWindow(emin, emax));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(ScanError::InvalidThreshold(threshold));
    }
    if grid_points < 100 {
        return Err(ScanError::TooFewPoints(grid_points));
    }
    let brackets = ss_brackets(&spec, criterion, emin, emax)?;
    let log_thr = threshold.log10();
    let per_bracket: Result<Vec<Vec<AbsorptionRange>>, ScanError> = brackets
        .par_iter()
        .map(|&(a, b)| scan_bracket(&spec, criterion, (a, b), log_thr, threshold, grid_points))
        .collect();
    Ok(per_bracket?.into_iter().flatten().collect())
}

fn scan_bracket(
    spec: &PotentialSpec,
    criterion: RangeCriterion,
    bracket: (SpectralPoint, SpectralPoint),
    log_thr: f64,
    threshold: f64,
    grid_points: usize,
) -> Result<Vec<AbsorptionRange>, ScanError> {
    let (e0, e1) = (bracket.0.energy, bracket.1.energy);
    let at = |i: usize| e0 + (e1 - e0) * i as f64 / (grid_points - 1) as f64;
    let passes = |e: f64| -> Result<bool, AmplitudeError> { Ok(certified_log10(spec, criterion, e)? < log_thr) };
    // The bracket ends are singular by construction and never part of a range.
    let mut ok = vec![false; grid_points];
    for (i, slot) in ok.iter_mut().enumerate().take(grid_points - 1).skip(1) {
        *slot = passes(at(i))?;
    }
    let mut out = Vec::new();
    let mut i = 1;
    while i < grid_points - 1 {
        if !ok[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < grid_points - 1 && ok[i + 1] {
            i += 1;
        }
        let end = i;
        let lo = refine(&passes, at(start - 1), at(start))?;
        let hi = refine(&passes, at(end + 1), at(end))?;
        if lo < hi {
            out.push(AbsorptionRange {
                lo,
                hi,
                criterion,
                threshold,
                bracketing_ss: bracket,
                interior_zeros: interior_zeros(spec, criterion, lo, hi),
            });
        }
        i += 1;
    }
    Ok(out)
}

/// Bisects between a failing and a passing energy; returns the innermost
/// passing point found.
fn refine<F>(passes: &F, mut fail: f64, mut pass: f64) -> Result<f64, AmplitudeError>
where
    F: Fn(f64) -> Result<bool, AmplitudeError>,
{
    while (pass - fail).abs() > REFINE_REL_TOL * pass.abs() {
        let mid = 0.5 * (pass + fail);
        if mid == pass || mid == fail {
            break;
        }
        if passes(mid)? {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    Ok(pass)
}

fn interior_zeros(spec: &PotentialSpec, criterion: RangeCriterion, lo: f64, hi: f64) -> Vec<SpectralPoint> {
    let (k_lo, k_hi) = (
        channel_params(spec, lo).map(|c| (c.k1, c.k2)),
        channel_params(spec, hi).map(|c| (c.k1, c.k2)),
    );
    let (Ok((k1_lo, k2_lo)), Ok((k1_hi, k2_hi))) = (k_lo, k_hi) else {
        return Vec::new();
    };
    let two_over_rho = 2.0 / spec.rho;
    let mut pts: Vec<SpectralPoint> = match criterion {
        RangeCriterion::CcLeftRange => {
            // n = (2/rho)(k2 - k1) decreases with energy.
            let n_hi = (two_over_rho * (k2_lo - k1_lo)).floor() as u64;
            let n_lo = (two_over_rho * (k2_hi - k1_hi)).ceil() as u64;
            (n_lo.max(1)..=n_hi).filter_map(|n| rprime_zero_at(spec, n)).collect()
        }
        RangeCriterion::CpaRange => {
            let m_lo = (two_over_rho * (k1_lo + k2_lo)).ceil() as u64;
            let m_hi = (two_over_rho * (k1_hi + k2_hi)).floor() as u64;
            (m_lo..=m_hi).filter_map(|m| cpa_reversed_at(spec, m)).collect()
        }
    };
    pts.retain(|p| p.energy >= lo && p.energy <= hi);
    pts.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    pts
}
