//! Quasi-monochromatic two-path model of the rotating-source apparatus.
//!
//! The source sits in a rotating container whose opening faces a long
//! route at `t1` and a short route at `t1 + ΔT`. Both routes end at slits
//! separated by `d` a distance `D` from the screen. A carrier wave of
//! wavelength λ rides under a Gaussian envelope of RMS width σ; fringe
//! contrast at a screen point is the product of the envelope overlap of the
//! two arrivals and the emission coherence. Species enters only through
//! `(λ, v_group, v_phase)`, so photons and matter waves use the same
//! geometry.
//!
//! Amplitudes fall off as 1/L per path (spherical-wave scaling in section);
//! slits are ideal points. Both choices drop out of fringe visibility.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Which of the two routes a single-moment emission takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathId {
    /// Long route, opened at `t1`, slit at `+d/2`.
    A,
    /// Short route, opened at `t1 + ΔT`, slit at `-d/2`.
    B,
}

/// How the source emits relative to the two container openings.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionModel {
    /// Coherent two-moment superposition with amplitudes `c_a`, `c_b`
    /// (unit total weight).
    Coherent { c_a: Complex64, c_b: Complex64 },
    /// Emission pinned to a single opening.
    Single(PathId),
    /// Classical mixture of the two openings with probabilities summing
    /// to 1.
    Incoherent { p_a: f64, p_b: f64 },
}

impl EmissionModel {
    /// Coherent model from raw amplitudes, rescaled to unit weight.
    pub fn coherent(c_a: Complex64, c_b: Complex64) -> Result<Self> {
        let w = c_a.norm_sqr() + c_b.norm_sqr();
        if w <= 0.0 || !w.is_finite() {
            return Err(Error::parameter("c_a/c_b", "coherent weights must be positive"));
        }
        let s = Complex64::new(1.0 / w.sqrt(), 0.0);
        Ok(EmissionModel::Coherent {
            c_a: c_a * s,
            c_b: c_b * s,
        })
    }

    /// Coherent model from the weight `|c_a|²` and the relative phase
    /// `arg(c_a·conj(c_b))`.
    pub fn coherent_weights(weight_a: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight_a) {
            return Err(Error::parameter("weight_a", "must lie in [0, 1]"));
        }
        Ok(EmissionModel::Coherent {
            c_a: Complex64::new(weight_a.sqrt(), 0.0),
            c_b: Complex64::from_polar((1.0 - weight_a).sqrt(), -phase),
        })
    }

    pub fn incoherent(p_a: f64, p_b: f64) -> Result<Self> {
        if p_a < 0.0 || p_b < 0.0 || (p_a + p_b - 1.0).abs() > 1e-12 {
            return Err(Error::parameter(
                "p_a/p_b",
                "mixture probabilities must be non-negative and sum to 1",
            ));
        }
        Ok(EmissionModel::Incoherent { p_a, p_b })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EmissionModel::Coherent { c_a, c_b } => {
                let w = c_a.norm_sqr() + c_b.norm_sqr();
                if (w - 1.0).abs() > 1e-12 {
                    return Err(Error::parameter(
                        "c_a/c_b",
                        format!("coherent weights must sum to 1, got {w:.15}"),
                    ));
                }
            }
            EmissionModel::Single(_) => {}
            EmissionModel::Incoherent { p_a, p_b } => {
                if *p_a < 0.0 || *p_b < 0.0 || (p_a + p_b - 1.0).abs() > 1e-12 {
                    return Err(Error::parameter(
                        "p_a/p_b",
                        "mixture probabilities must be non-negative and sum to 1",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short machine-readable label for summaries.
    pub fn label(&self) -> String {
        match self {
            EmissionModel::Coherent { .. } => "coherent".into(),
            EmissionModel::Single(PathId::A) => "single:A".into(),
            EmissionModel::Single(PathId::B) => "single:B".into(),
            EmissionModel::Incoherent { .. } => "incoherent".into(),
        }
    }
}

/// Geometry, timing, and wave parameters of the apparatus. SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Envelope (group) speed, m/s.
    pub v_group: f64,
    /// Carrier (phase) speed, m/s.
    pub v_phase: f64,
    /// Slit separation `d`, m.
    pub slit_separation: f64,
    /// Slit plane to screen distance `D`, m.
    pub screen_distance: f64,
    /// Source-side excess of the long route over the short route `ΔL₀`, m.
    pub extra_long_path: f64,
    /// Container half-turn time `ΔT`, s.
    pub delta_t: f64,
    /// Envelope RMS width σ, s.
    pub pulse_sigma: f64,
    /// Moment at which the opening faces the long route, s.
    pub t1: f64,
    /// Transverse screen coordinate samples, m.
    pub screen: GridSpec,
    /// Reduced Planck constant, J·s (not used by the scalar pattern; kept
    /// with the configuration so runs are self-describing).
    pub hbar: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 8] = [
            ("wavelength", self.wavelength),
            ("v_group", self.v_group),
            ("v_phase", self.v_phase),
            ("slit_separation", self.slit_separation),
            ("screen_distance", self.screen_distance),
            ("extra_long_path", self.extra_long_path),
            ("delta_t", self.delta_t),
            ("pulse_sigma", self.pulse_sigma),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::parameter(name, "must be strictly positive"));
            }
        }
        if !self.t1.is_finite() {
            return Err(Error::parameter("t1", "must be finite"));
        }
        if self.hbar <= 0.0 || !self.hbar.is_finite() {
            return Err(Error::parameter("hbar", "must be strictly positive"));
        }
        if self.slit_separation >= self.screen_distance / 5.0 {
            return Err(Error::parameter(
                "slit_separation",
                "paraxial model requires d < D/5",
            ));
        }
        if self.pulse_sigma > self.delta_t / 10.0 {
            return Err(Error::parameter(
                "pulse_sigma",
                "pulse must be much shorter than the half-turn time: sigma <= delta_t/10",
            ));
        }
        Ok(())
    }

    /// Small-angle fringe spacing `λD/d`.
    pub fn analytic_fringe_spacing(&self) -> f64 {
        self.wavelength * self.screen_distance / self.slit_separation
    }

    /// Carrier angular frequency `2π·v_phase/λ`.
    pub fn angular_frequency(&self) -> f64 {
        std::f64::consts::TAU * self.v_phase / self.wavelength
    }

    /// Default visibility window: 3.5 analytic fringes, clamped to the
    /// screen extent.
    pub fn default_window(&self) -> f64 {
        (3.5 * self.analytic_fringe_spacing()).min(self.screen.extent())
    }
}

/// Geometric path lengths to screen point `x`; the long path carries the
/// source-side excess `ΔL₀`.
pub fn path_lengths(cfg: &ExperimentConfig, x: f64) -> (f64, f64) {
    let half_d = cfg.slit_separation / 2.0;
    let dist = |slit: f64| ((x - slit).powi(2) + cfg.screen_distance.powi(2)).sqrt();
    (cfg.extra_long_path + dist(half_d), dist(-half_d))
}

/// Envelope arrival mismatch `δ(x) = (L_A - L_B)/v_group - ΔT` in seconds;
/// zero means the two pulses overlap perfectly at `x`.
pub fn synchrony_mismatch(cfg: &ExperimentConfig, x: f64) -> f64 {
    let (l_a, l_b) = path_lengths(cfg, x);
    (l_a - l_b) / cfg.v_group - cfg.delta_t
}

/// Normalized overlap `γ(δ) = ∫g(τ)g(τ-δ)dτ / ∫g²dτ` of two unit-peak
/// Gaussian envelopes of RMS width σ, by Simpson quadrature.
///
/// `γ(0) = 1` and γ decreases monotonically in |δ|.
pub fn envelope_overlap(cfg: &ExperimentConfig, delta: f64) -> f64 {
    let sigma = cfg.pulse_sigma;
    let g = |tau: f64| (-tau * tau / (2.0 * sigma * sigma)).exp();
    let lo = delta.min(0.0) - 8.0 * sigma;
    let hi = delta.max(0.0) + 8.0 * sigma;
    let n = 800; // even panel count; Simpson error far below 1e-10 here
    let h = (hi - lo) / n as f64;
    let mut cross = 0.0;
    let mut auto = 0.0;
    for k in 0..=n {
        let tau = lo + k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        cross += w * g(tau) * g(tau - delta);
        auto += w * g(tau) * g(tau);
    }
    (cross / auto).clamp(0.0, 1.0)
}

/// Per-sample decomposition of the screen pattern.
#[derive(Debug, Clone, Copy)]
pub struct PatternPoint {
    /// Screen coordinate, m.
    pub x: f64,
    /// Total intensity.
    pub intensity: f64,
    /// Weighted single-path intensity through the long route.
    pub path_a: f64,
    /// Weighted single-path intensity through the short route.
    pub path_b: f64,
    /// Envelope overlap γ(δ(x)).
    pub gamma: f64,
    /// Accumulated phase difference φ(x), rad.
    pub phase: f64,
}

/// Screen intensity samples with per-point breakdown.
#[derive(Debug, Clone)]
pub struct IntensityPattern {
    screen: GridSpec,
    points: Vec<PatternPoint>,
    normalization: f64,
}

impl IntensityPattern {
    pub fn screen(&self) -> &GridSpec {
        &self.screen
    }

    pub fn points(&self) -> &[PatternPoint] {
        &self.points
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.intensity).collect()
    }

    /// Integrated intensity `Σ I_k·step`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn is_empty(&self) -> bool {
        !(self.normalization > 0.0)
    }

    /// Per-bin probabilities `I_k / Σ I_k`.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let total: f64 = self.points.iter().map(|p| p.intensity).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::EmptyPattern);
        }
        Ok(self.points.iter().map(|p| p.intensity / total).collect())
    }

    /// Rebuild a pattern from bare intensity samples (used for analysing
    /// histograms with the same machinery).
    pub fn from_samples(screen: GridSpec, intensity: &[f64]) -> Result<Self> {
        if intensity.len() != screen.n() {
            return Err(Error::DimensionMismatch {
                context: "intensity length must equal screen.n",
            });
        }
        if intensity.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::parameter("intensity", "samples must be finite and >= 0"));
        }
        let points: Vec<PatternPoint> = intensity
            .iter()
            .enumerate()
            .map(|(k, &v)| PatternPoint {
                x: screen.point(k),
                intensity: v,
                path_a: 0.0,
                path_b: 0.0,
                gamma: 0.0,
                phase: 0.0,
            })
            .collect();
        let normalization = intensity.iter().sum::<f64>() * screen.step();
        Ok(IntensityPattern {
            screen,
            points,
            normalization,
        })
    }
}

/// Screen intensity for an emission model.
///
/// Per-path amplitudes scale as `a_k = 1/L_k`; the coherent cross term is
/// `2γ(δ)·Re[c_A·conj(c_B)·a_A·a_B·e^{iφ}]` with
/// `φ = (2π/λ)(L_A - L_B) - ω·ΔT`. Single-moment and incoherent emissions
/// carry no cross term.
pub fn intensity_pattern(
    cfg: &ExperimentConfig,
    emission: &EmissionModel,
) -> Result<IntensityPattern> {
    cfg.validate()?;
    emission.validate()?;
    let omega_dt = cfg.angular_frequency() * cfg.delta_t;
    let wave_number = std::f64::consts::TAU / cfg.wavelength;
    let points: Vec<PatternPoint> = (0..cfg.screen.n())
        .map(|k| {
            let x = cfg.screen.point(k);
            let (l_a, l_b) = path_lengths(cfg, x);
            let amp_a = 1.0 / l_a;
            let amp_b = 1.0 / l_b;
            let gamma = envelope_overlap(cfg, synchrony_mismatch(cfg, x));
            let phase = wave_number * (l_a - l_b) - omega_dt;
            let (path_a, path_b, cross) = match emission {
                EmissionModel::Coherent { c_a, c_b } => {
                    let interference = (c_a * c_b.conj() * Complex64::from_polar(1.0, phase)).re;
                    (
                        c_a.norm_sqr() * amp_a * amp_a,
                        c_b.norm_sqr() * amp_b * amp_b,
                        2.0 * gamma * amp_a * amp_b * interference,
                    )
                }
                EmissionModel::Single(PathId::A) => (amp_a * amp_a, 0.0, 0.0),
                EmissionModel::Single(PathId::B) => (0.0, amp_b * amp_b, 0.0),
                EmissionModel::Incoherent { p_a, p_b } => {
                    (p_a * amp_a * amp_a, p_b * amp_b * amp_b, 0.0)
                }
            };
            // AM–GM with γ ≤ 1 keeps the sum non-negative; the max clips
            // rounding residue at perfectly destructive points.
            let intensity = (path_a + path_b + cross).max(0.0);
            PatternPoint {
                x,
                intensity,
                path_a,
                path_b,
                gamma,
                phase,
            }
        })
        .collect();
    let normalization = points.iter().map(|p| p.intensity).sum::<f64>() * cfg.screen.step();
    Ok(IntensityPattern {
        screen: cfg.screen.clone(),
        points,
        normalization,
    })
}

/// Parabolic vertex value through three equally spaced samples.
fn refined_value(left: f64, mid: f64, right: f64, maximize: bool) -> f64 {
    let curvature = left - 2.0 * mid + right;
    let proper = if maximize { curvature < 0.0 } else { curvature > 0.0 };
    if !proper {
        return mid;
    }
    mid - (right - left).powi(2) / (8.0 * curvature)
}

/// Extremum value over `ys[lo..=hi]` with local parabolic refinement.
fn window_extremum(ys: &[f64], lo: usize, hi: usize, maximize: bool) -> f64 {
    let mut arg = lo;
    for k in lo..=hi {
        let better = if maximize { ys[k] > ys[arg] } else { ys[k] < ys[arg] };
        if better {
            arg = k;
        }
    }
    if arg > lo && arg < hi {
        refined_value(ys[arg - 1], ys[arg], ys[arg + 1], maximize)
    } else {
        ys[arg]
    }
}

pub(crate) fn window_indices(screen: &GridSpec, window: f64) -> Result<(usize, usize)> {
    if !(window > 0.0) {
        return Err(Error::WindowTooSmall {
            reason: "window width must be positive".into(),
        });
    }
    let half = window / 2.0;
    let mut lo = None;
    let mut hi = 0;
    for k in 0..screen.n() {
        let x = screen.point(k);
        if x.abs() <= half {
            if lo.is_none() {
                lo = Some(k);
            }
            hi = k;
        }
    }
    let lo = lo.ok_or_else(|| Error::WindowTooSmall {
        reason: "window contains no screen samples around x = 0".into(),
    })?;
    if hi - lo + 1 < 9 {
        return Err(Error::WindowTooSmall {
            reason: format!("only {} samples inside the window", hi - lo + 1),
        });
    }
    Ok((lo, hi))
}

/// Visibility of sampled values over a window centred at `x = 0`.
///
/// Exposed for histogram counts as well as analytic patterns; the caller
/// is responsible for the window spanning at least three fringe periods.
pub fn visibility_of_samples(screen: &GridSpec, values: &[f64], window: f64) -> Result<f64> {
    if values.len() != screen.n() {
        return Err(Error::DimensionMismatch {
            context: "sample count must equal screen.n",
        });
    }
    let (lo, hi) = window_indices(screen, window)?;
    let max = window_extremum(values, lo, hi, true);
    let min = window_extremum(values, lo, hi, false).max(0.0);
    if max <= 0.0 {
        return Err(Error::FlatPattern);
    }
    Ok((max - min) / (max + min))
}

/// Fringe visibility `(I_max - I_min)/(I_max + I_min)` of a pattern.
pub fn visibility(pattern: &IntensityPattern, window: f64) -> Result<f64> {
    visibility_of_samples(&pattern.screen, &pattern.intensities(), window)
}

/// Measured fringe spacing: median distance between adjacent refined peak
/// positions inside the window.
pub fn fringe_spacing(pattern: &IntensityPattern, window: f64) -> Result<f64> {
    let ys = pattern.intensities();
    let (lo, hi) = window_indices(&pattern.screen, window)?;
    let max = window_extremum(&ys, lo, hi, true);
    let min = window_extremum(&ys, lo, hi, false).max(0.0);
    if max <= 0.0 {
        return Err(Error::FlatPattern);
    }
    let level = 0.5 * (max + min);
    let step = pattern.screen.step();
    let mut peaks = Vec::new();
    for k in lo.max(1)..=hi.min(ys.len() - 2) {
        if ys[k] >= ys[k - 1] && ys[k] > ys[k + 1] && ys[k] > level {
            let denom = ys[k - 1] - 2.0 * ys[k] + ys[k + 1];
            let offset = if denom < 0.0 {
                0.5 * (ys[k - 1] - ys[k + 1]) / denom
            } else {
                0.0
            };
            peaks.push(pattern.screen.point(k) + offset * step);
        }
    }
    if peaks.len() < 2 {
        return Err(Error::WindowTooSmall {
            reason: format!("found {} fringe peaks, need at least 2", peaks.len()),
        });
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    Ok(gaps[gaps.len() / 2])
}

/// Scannable configuration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    /// Container half-turn time ΔT, s.
    DeltaT,
    /// Envelope RMS width σ, s.
    PulseSigma,
    /// Coherent weight `|c_A|²`; forces a coherent emission, keeping the
    /// configured relative phase when one is present.
    WeightSplit,
}

impl ScanParameter {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "delta_t" => Ok(ScanParameter::DeltaT),
            "pulse_sigma" => Ok(ScanParameter::PulseSigma),
            "weight_split" => Ok(ScanParameter::WeightSplit),
            other => Err(Error::parameter(
                "scan-param",
                format!("unknown parameter `{other}` (expected delta_t, pulse_sigma, or weight_split)"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanParameter::DeltaT => "delta_t",
            ScanParameter::PulseSigma => "pulse_sigma",
            ScanParameter::WeightSplit => "weight_split",
        }
    }
}

/// One point of a visibility scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub value: f64,
    pub visibility: f64,
}

/// Visibility as a function of one swept parameter, other parameters
/// fixed. Points are independent and evaluated in parallel; output order
/// follows the input values.
pub fn visibility_scan(
    cfg: &ExperimentConfig,
    emission: &EmissionModel,
    parameter: ScanParameter,
    values: &[f64],
) -> Result<Vec<ScanPoint>> {
    let window = cfg.default_window();
    values
        .par_iter()
        .map(|&value| {
            let mut point_cfg = cfg.clone();
            let mut point_emission = emission.clone();
            match parameter {
                ScanParameter::DeltaT => point_cfg.delta_t = value,
                ScanParameter::PulseSigma => point_cfg.pulse_sigma = value,
                ScanParameter::WeightSplit => {
                    let phase = match emission {
                        EmissionModel::Coherent { c_a, c_b } => (c_a * c_b.conj()).arg(),
                        _ => 0.0,
                    };
                    point_emission = EmissionModel::coherent_weights(value, phase)?;
                }
            }
            let pattern = intensity_pattern(&point_cfg, &point_emission)?;
            Ok(ScanPoint {
                value,
                visibility: visibility(&pattern, window)?,
            })
        })
        .collect()
}

/// Inclusive linear spacing of `steps` values from `from` to `to`.
pub fn scan_values(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::parameter("scan-steps", "must be at least 1"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let h = (to - from) / (steps - 1) as f64;
    Ok((0..steps).map(|k| from + k as f64 * h).collect())
}

/// Gaussian gate weights of the two container openings at emission moment
/// `t_emit`; the gate width equals the pulse width σ.
pub fn emission_gate(cfg: &ExperimentConfig, t_emit: f64) -> (f64, f64) {
    let sigma = cfg.pulse_sigma;
    let w = |center: f64| (-(t_emit - center).powi(2) / (2.0 * sigma * sigma)).exp();
    (w(cfg.t1), w(cfg.t1 + cfg.delta_t))
}
