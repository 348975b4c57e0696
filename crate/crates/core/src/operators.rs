//! Discretized operators on grid Hilbert spaces and their commutation checks.
//!
//! The time and position operators are diagonal in the sample basis. Their
//! conjugates (energy and momentum) are built spectrally: on a periodic grid
//! of `n` samples over length `L`, the sampled wave `e^{iκ_k x}` with
//! `κ_k = 2π·k̃/L` is an exact eigenvector, where `k̃` runs over the signed
//! frequency indices of the grid. Every operator assembled this way is a
//! circulant `F⁻¹·diag(symbol)·F` and is hermitian to rounding when the
//! symbol is real.
//!
//! The resulting energy spectrum is the finite set `{2πħk/L : k = -n/2 ..
//! n/2-1}`, a truncation of the continuum; the Nyquist bin is assigned the
//! negative end of that range. Exact canonical commutation cannot hold on a
//! finite-dimensional space, so the relations are asserted as actions on
//! band-limited, interior-supported probe states instead of as matrix
//! identities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::state::StateVector;

/// Hermiticity tolerance for `hermitian_hint` operators: max|M - M†|.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Relative spectral amplitude above which a probe no longer counts as
/// band-limited (checked over the top third of |frequency|).
pub const BAND_LIMIT_TOL: f64 = 1e-10;

/// Dense complex matrix acting on states over one grid.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: GridSpec,
    mat: DMatrix<Complex64>,
    hermitian_hint: bool,
}

impl LinearOperator {
    /// Wrap a matrix. With `hermitian_hint` set, the matrix must be
    /// hermitian within [`HERMITICITY_TOL`].
    pub fn new(grid: GridSpec, mat: DMatrix<Complex64>, hermitian_hint: bool) -> Result<Self> {
        if mat.nrows() != grid.n() || mat.ncols() != grid.n() {
            return Err(Error::DimensionMismatch {
                context: "operator matrix must be n × n",
            });
        }
        let op = LinearOperator {
            grid,
            mat,
            hermitian_hint,
        };
        if hermitian_hint {
            let res = op.hermiticity_residual();
            if res > HERMITICITY_TOL {
                return Err(Error::parameter(
                    "mat",
                    format!("hermiticity residual {res:.3e} exceeds {HERMITICITY_TOL:.0e}"),
                ));
            }
        }
        Ok(op)
    }

    pub fn identity(grid: GridSpec) -> Self {
        let n = grid.n();
        LinearOperator {
            grid,
            mat: DMatrix::identity(n, n),
            hermitian_hint: true,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    /// max|M - M†| over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.mat.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if *v.grid() != self.grid {
            return Err(Error::GridMismatch {
                context: "operator application",
            });
        }
        StateVector::new(self.grid.clone(), &self.mat * v.amp())
    }
}

/// Signed frequency index of DFT bin `k` on an `n`-sample grid.
///
/// Bins `0..=n/2` keep their index; higher bins map to `k - n`. For even
/// `n` the Nyquist bin is assigned `+n/2`.
pub fn signed_frequency_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequencies `κ_k = 2π·k̃/L` in DFT bin order.
pub fn angular_frequencies(grid: &GridSpec) -> Vec<f64> {
    let n = grid.n();
    let l = grid.extent();
    (0..n)
        .map(|k| TAU * signed_frequency_index(k, n) as f64 / l)
        .collect()
}

/// Circulant matrix `F⁻¹·diag(symbol)·F` for a real spectral symbol given
/// in DFT bin order.
pub(crate) fn spectral_circulant(grid: &GridSpec, symbol: &[f64]) -> DMatrix<Complex64> {
    let n = grid.n();
    debug_assert_eq!(symbol.len(), n);
    // roots of unity ω^m = exp(2πi m/n)
    let omega: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, TAU * m as f64 / n as f64))
        .collect();
    // first column c[r] = (1/n) Σ_k symbol_k ω^{kr}
    let inv_n = 1.0 / n as f64;
    let col: Vec<Complex64> = (0..n)
        .map(|r| {
            let mut acc = Complex64::default();
            for (k, &s) in symbol.iter().enumerate() {
                acc += omega[(k * r) % n] * s;
            }
            acc * inv_n
        })
        .collect();
    DMatrix::from_fn(n, n, |j, m| col[(n + j - m) % n])
}

/// Diagonal operator multiplying by the grid coordinate; the time operator
/// on a time grid.
pub fn time_operator(grid_t: &GridSpec) -> LinearOperator {
    let n = grid_t.n();
    let mat = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(grid_t.point(i), 0.0)
        } else {
            Complex64::default()
        }
    });
    LinearOperator {
        grid: grid_t.clone(),
        mat,
        hermitian_hint: true,
    }
}

/// Diagonal position operator; identical construction to [`time_operator`]
/// on a spatial grid.
pub fn position_operator(grid_q: &GridSpec) -> LinearOperator {
    time_operator(grid_q)
}

/// Energy operator conjugate to time: `iħ ∂/∂t` built spectrally.
///
/// Sampled waves `e^{E t/(iħ)}` with commensurate `E` are exact
/// eigenvectors with eigenvalue `E`.
pub fn energy_operator(grid_t: &GridSpec, hbar: f64) -> Result<LinearOperator> {
    if !grid_t.periodic() {
        return Err(Error::PeriodicGridRequired {
            context: "energy operator",
        });
    }
    let symbol: Vec<f64> = angular_frequencies(grid_t)
        .iter()
        .map(|kappa| -hbar * kappa)
        .collect();
    LinearOperator::new(grid_t.clone(), spectral_circulant(grid_t, &symbol), true)
}

/// Momentum operator `-iħ ∂/∂q` built spectrally. Sampled waves
/// `e^{ip q/ħ}` with commensurate `p` are exact eigenvectors.
pub fn momentum_operator(grid_q: &GridSpec, hbar: f64) -> Result<LinearOperator> {
    if !grid_q.periodic() {
        return Err(Error::PeriodicGridRequired {
            context: "momentum operator",
        });
    }
    let symbol: Vec<f64> = angular_frequencies(grid_q)
        .iter()
        .map(|kappa| hbar * kappa)
        .collect();
    LinearOperator::new(grid_q.clone(), spectral_circulant(grid_q, &symbol), true)
}

/// `AB - BA` as a dense operator.
pub fn commutator(a: &LinearOperator, b: &LinearOperator) -> Result<LinearOperator> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch { context: "commutator" });
    }
    let mat = &a.mat * &b.mat - &b.mat * &a.mat;
    LinearOperator::new(a.grid.clone(), mat, false)
}

/// Residual `‖((1/iħ)[A,B] - sign·I)·probe‖` of a canonical commutation
/// relation acting on a probe state.
///
/// `sign` is +1 for a conjugate pair satisfying `(1/iħ)[A,B] = I` (position
/// and momentum) and -1 for the time-energy pair. The probe should be
/// normalized and band-limited; a probe failing the band-limit check is
/// still evaluated but logged as a warning because the discrete relation is
/// only faithful on band-limited interior-supported states.
pub fn canonical_residual(
    a: &LinearOperator,
    b: &LinearOperator,
    sign: f64,
    probe: &StateVector,
    hbar: f64,
) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch { context: "canonical_residual" });
    }
    if *probe.grid() != a.grid {
        return Err(Error::GridMismatch { context: "canonical_residual probe" });
    }
    let margin = band_limit_margin(probe);
    if margin > BAND_LIMIT_TOL {
        log::warn!(
            "canonical_residual probe is not band-limited: top-third spectral amplitude {:.2e} of peak",
            margin
        );
    }
    let ab = a.apply(&b.apply(probe)?)?;
    let ba = b.apply(&a.apply(probe)?)?;
    let inv_ihbar = Complex64::new(0.0, -1.0 / hbar); // 1/(iħ)
    let residual = DVector::from_fn(probe.amp().len(), |k, _| {
        inv_ihbar * (ab.amp()[k] - ba.amp()[k]) - Complex64::new(sign, 0.0) * probe.amp()[k]
    });
    Ok(StateVector::new(a.grid.clone(), residual)?.norm())
}

/// Largest spectral amplitude in the top third of |frequency|, relative to
/// the spectral peak.
pub fn band_limit_margin(probe: &StateVector) -> f64 {
    let n = probe.grid().n();
    let mut buf: Vec<Complex64> = probe.amp().iter().copied().collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let cutoff = (n as i64 / 2) * 2 / 3;
    let top: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| signed_frequency_index(*k, n).abs() >= cutoff.max(1))
        .map(|(_, c)| c.norm())
        .fold(0.0f64, f64::max);
    top / peak
}

/// Commensurate energy `2πħk/L` of integer frequency index `k` on a grid.
pub fn commensurate_energy(grid_t: &GridSpec, hbar: f64, k: i64) -> f64 {
    TAU * hbar * k as f64 / grid_t.extent()
}

/// Normalized sampled plane wave `e^{E t/(iħ)}`, the energy eigenvector.
///
/// `E` snaps to the nearest grid-commensurate value `2πħk/L` (with a logged
/// warning when the shift is material); indices beyond the Nyquist range
/// fold back onto the grid spectrum.
pub fn energy_eigenvector(grid_t: &GridSpec, energy: f64, hbar: f64) -> Result<StateVector> {
    if !grid_t.periodic() {
        return Err(Error::PeriodicGridRequired {
            context: "energy eigenvector",
        });
    }
    let l = grid_t.extent();
    let n = grid_t.n() as i64;
    let exact = energy * l / (TAU * hbar);
    let mut k = exact.round() as i64;
    if (exact - k as f64).abs() > 1e-9 * exact.abs().max(1.0) {
        log::warn!(
            "energy {energy:.6e} is not commensurate with the grid; snapping to {:.6e}",
            commensurate_energy(grid_t, hbar, k)
        );
    }
    if k > n / 2 || k < -n / 2 + 1 {
        let folded = k.rem_euclid(n);
        let folded = if folded > n / 2 { folded - n } else { folded };
        log::warn!("energy index {k} lies beyond the grid spectrum; folding to {folded}");
        k = folded;
    }
    let snapped = commensurate_energy(grid_t, hbar, k);
    let scale = 1.0 / l.sqrt();
    Ok(StateVector::from_fn(grid_t.clone(), move |t| {
        Complex64::from_polar(scale, -snapped * t / hbar)
    }))
}

/// Deterministic family of normalized band-limited probe states.
///
/// Probes are Gaussians centred in the middle half of the grid, narrow
/// enough that their tails vanish at the boundary, with a small integer
/// carrier wave. The family is defined by closed-form parameters, so the
/// same probe can be sampled on grids of different resolution.
pub fn probe_suite(grid: &GridSpec, count: usize) -> Vec<StateVector> {
    let l = grid.extent();
    let lo = grid.lo();
    (0..count)
        .map(|j| {
            let center = lo + l * (0.40 + 0.05 * (j % 5) as f64);
            let sigma = l / 30.0 * (1.0 + 0.10 * ((j / 5) % 4) as f64 / 3.0);
            let carrier = [0i64, 1, -1, 2, -2, 3, -3][j % 7] as f64 * TAU / l;
            StateVector::from_fn(grid.clone(), move |x| {
                let envelope = (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
                Complex64::from_polar(envelope, carrier * (x - lo))
            })
            .normalized()
            .expect("probe has positive norm")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::state::{inner_product, time_eigenstate};

    fn tgrid(n: usize) -> GridSpec {
        make_grid(0.0, 1.0, n, true).unwrap()
    }

    #[test]
    fn time_operator_scales_delta_kets_exactly() {
        let g = tgrid(64);
        let t_op = time_operator(&g);
        let ket = time_eigenstate(&g, 0.25).unwrap();
        let out = t_op.apply(&ket).unwrap();
        for (a, b) in out.amp().iter().zip(ket.amp().iter()) {
            assert_eq!(*a, b * Complex64::new(0.25, 0.0));
        }
        assert_eq!(t_op.hermiticity_residual(), 0.0);
    }

    #[test]
    fn time_expectation_of_two_moment_state() {
        let g = tgrid(64);
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = crate::state::temporal_superposition(&g, c, 0.25, c, 0.75).unwrap();
        let t_op = time_operator(&g);
        let mean = inner_product(&psi, &t_op.apply(&psi).unwrap()).unwrap();
        assert!((mean.re - 0.5).abs() < 1e-12);
        assert!(mean.im.abs() < 1e-14);
    }

    #[test]
    fn energy_operator_rejects_nonperiodic_grid() {
        let g = make_grid(0.0, 1.0, 64, false).unwrap();
        assert!(matches!(
            energy_operator(&g, 1.0),
            Err(Error::PeriodicGridRequired { .. })
        ));
    }

    #[test]
    fn energy_operator_annihilates_constants_and_is_hermitian() {
        let g = tgrid(64);
        let s = energy_operator(&g, 1.0).unwrap();
        assert!(s.hermiticity_residual() < 1e-12);
        let flat = StateVector::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let out = s.apply(&flat).unwrap();
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn plane_wave_is_energy_eigenvector() {
        let g = tgrid(128);
        let hbar = 1.0;
        let s = energy_operator(&g, hbar).unwrap();
        let e = commensurate_energy(&g, hbar, 5);
        let wave = energy_eigenvector(&g, e, hbar).unwrap();
        let out = s.apply(&wave).unwrap();
        let diff = StateVector::new(
            g.clone(),
            out.amp() - wave.amp() * Complex64::new(e, 0.0),
        )
        .unwrap();
        assert!(diff.norm() < 1e-8);
    }

    #[test]
    fn energy_spectrum_matches_grid_frequencies() {
        // eigendecomposition oracle: spectrum is {2πħk/L : k = -n/2 .. n/2-1}
        let n = 32;
        let g = tgrid(n);
        let hbar = 0.7;
        let s = energy_operator(&g, hbar).unwrap();
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(s.matrix().clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = (-(n as i64) / 2..n as i64 / 2)
            .map(|k| commensurate_energy(&g, hbar, k))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn momentum_acts_on_commensurate_plane_wave() {
        let g = make_grid(-0.5, 0.5, 64, true).unwrap();
        let hbar = 1.0;
        let p = momentum_operator(&g, hbar).unwrap();
        assert!(p.hermiticity_residual() < 1e-10);
        let p0 = TAU * 4.0; // commensurate with L = 1
        let wave = StateVector::from_fn(g.clone(), |q| Complex64::from_polar(1.0, p0 * q / hbar))
            .normalized()
            .unwrap();
        let out = p.apply(&wave).unwrap();
        let diff = StateVector::new(g, out.amp() - wave.amp() * Complex64::new(p0, 0.0)).unwrap();
        assert!(diff.norm() < 1e-9);
    }

    #[test]
    fn position_operator_scales_position_kets() {
        let g = make_grid(-0.5, 0.5, 64, true).unwrap();
        let q_op = position_operator(&g);
        let ket = time_eigenstate(&g, g.point(10)).unwrap();
        let out = q_op.apply(&ket).unwrap();
        let expect = ket.amp() * Complex64::new(g.point(10), 0.0);
        assert!((out.amp() - expect).norm() < 1e-14);
    }

    #[test]
    fn self_commutator_vanishes_and_residual_is_one() {
        let g = tgrid(64);
        let t_op = time_operator(&g);
        let comm = commutator(&t_op, &t_op).unwrap();
        assert!(comm.matrix().norm() == 0.0);
        let probe = probe_suite(&g, 1).remove(0);
        let r = canonical_residual(&t_op, &t_op, 1.0, &probe, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_pairs_hold_on_band_limited_probes() {
        let hbar = 1.0;
        let gt = tgrid(64);
        let gq = make_grid(-0.5, 0.5, 64, true).unwrap();
        let t_op = time_operator(&gt);
        let s_op = energy_operator(&gt, hbar).unwrap();
        let q_op = position_operator(&gq);
        let p_op = momentum_operator(&gq, hbar).unwrap();
        for probe in probe_suite(&gt, 4) {
            let r = canonical_residual(&t_op, &s_op, -1.0, &probe, hbar).unwrap();
            assert!(r < 1e-6, "time-energy residual {r}");
        }
        for probe in probe_suite(&gq, 4) {
            let r = canonical_residual(&q_op, &p_op, 1.0, &probe, hbar).unwrap();
            assert!(r < 1e-6, "position-momentum residual {r}");
        }
    }

    #[test]
    fn residual_agrees_with_dense_commutator_matrix() {
        // same quantity through the explicit matrix route
        let hbar = 1.0;
        let g = tgrid(64);
        let t_op = time_operator(&g);
        let s_op = energy_operator(&g, hbar).unwrap();
        let probe = probe_suite(&g, 3).remove(2);
        let fast = canonical_residual(&t_op, &s_op, -1.0, &probe, hbar).unwrap();

        let comm = commutator(&t_op, &s_op).unwrap();
        let scaled = comm.matrix().map(|c| c * Complex64::new(0.0, -1.0 / hbar));
        let dense = &scaled + DMatrix::<Complex64>::identity(64, 64);
        let out = StateVector::new(g, &dense * probe.amp()).unwrap();
        assert!((fast - out.norm()).abs() < 1e-12);
    }

    #[test]
    fn commutator_sign_flips_between_pairs() {
        let hbar = 1.0;
        let g = make_grid(-0.5, 0.5, 128, true).unwrap();
        let probe = probe_suite(&g, 1).remove(0);

        // (1/iħ)[q̂,p̂]ψ = +ψ and (1/iħ)[t̂,ŝ]ψ = -ψ on the same grid data
        let q_op = position_operator(&g);
        let p_op = momentum_operator(&g, hbar).unwrap();
        let comm = commutator(&q_op, &p_op).unwrap();
        let applied = comm.apply(&probe).unwrap();
        let scaled = StateVector::new(
            g.clone(),
            applied.amp().map(|c| c * Complex64::new(0.0, -1.0 / hbar)),
        )
        .unwrap();
        let plus = StateVector::new(g.clone(), scaled.amp() - probe.amp()).unwrap();
        let minus = StateVector::new(g.clone(), scaled.amp() + probe.amp()).unwrap();
        assert!(plus.norm() < 1e-6);
        assert!(minus.norm() > 1.0);

        let t_op = time_operator(&g);
        let s_op = energy_operator(&g, hbar).unwrap();
        let comm = commutator(&t_op, &s_op).unwrap();
        let applied = comm.apply(&probe).unwrap();
        let scaled = StateVector::new(
            g.clone(),
            applied.amp().map(|c| c * Complex64::new(0.0, -1.0 / hbar)),
        )
        .unwrap();
        let minus = StateVector::new(g.clone(), scaled.amp() + probe.amp()).unwrap();
        assert!(minus.norm() < 1e-6);
    }

    #[test]
    fn energy_eigenvector_family_is_orthonormal_with_flat_overlap() {
        let g = tgrid(128);
        let hbar = 2.0;
        let e0 = energy_eigenvector(&g, 0.0, hbar).unwrap();
        // E = 0 is the constant vector
        let spread: f64 = e0
            .amp()
            .iter()
            .map(|a| (a - e0.amp()[0]).norm())
            .fold(0.0, f64::max);
        assert!(spread < 1e-14);

        let kets: Vec<_> = (-4..4)
            .map(|k| energy_eigenvector(&g, commensurate_energy(&g, hbar, k), hbar).unwrap())
            .collect();
        for (i, a) in kets.iter().enumerate() {
            // |⟨t|E⟩| independent of t
            let mags: Vec<f64> = a.amp().iter().map(|c| c.norm()).collect();
            let dev = mags.iter().map(|m| (m - mags[0]).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-14);
            for (j, b) in kets.iter().enumerate() {
                let ip = inner_product(a, b).unwrap();
                if i == j {
                    assert!((ip.re - 1.0).abs() < 1e-12);
                } else {
                    assert!(ip.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn probe_suite_is_band_limited_and_interior() {
        let g = tgrid(256);
        for probe in probe_suite(&g, 20) {
            assert!(probe.is_normalized());
            assert!(band_limit_margin(&probe) < BAND_LIMIT_TOL);
            // interior support: boundary samples are negligible
            assert!(probe.amp()[0].norm() < 1e-12);
        }
    }
}
