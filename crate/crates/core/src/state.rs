//! States on grids: discretized kets and space-time amplitudes.
//!
//! Continuum kets |t⟩ are delta-normalized and have no direct finite-grid
//! counterpart; here they become grid-delta kets scaled by `1/√step`, which
//! makes them exactly orthonormal under the step-weighted inner product
//! `⟨a|b⟩ = Σ conj(a_k)·b_k·step`. That convention is used consistently by
//! every norm and inner product in the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Tolerance on `|‖ψ‖² - 1|` below which a state counts as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Complex amplitudes over a [`GridSpec`]; a discretized ket.
#[derive(Debug, Clone)]
pub struct StateVector {
    grid: GridSpec,
    amp: DVector<Complex64>,
}

impl StateVector {
    pub fn new(grid: GridSpec, amp: DVector<Complex64>) -> Result<Self> {
        if amp.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                context: "amplitude length must equal grid.n",
            });
        }
        Ok(StateVector { grid, amp })
    }

    /// Sample a function of the grid coordinate.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let amp = DVector::from_fn(grid.n(), |k, _| f(grid.point(k)));
        StateVector { grid, amp }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let amp = DVector::zeros(grid.n());
        StateVector { grid, amp }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amp(&self) -> &DVector<Complex64> {
        &self.amp
    }

    /// Step-weighted squared norm `Σ |a_k|²·step`.
    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Rescaled copy with unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::parameter("state", "cannot normalize a zero state"));
        }
        let inv = Complex64::new(1.0 / n, 0.0);
        Ok(StateVector {
            grid: self.grid.clone(),
            amp: self.amp.map(|a| a * inv),
        })
    }
}

/// Step-weighted inner product `⟨a|b⟩ = Σ conj(a_k)·b_k·step`.
///
/// Conjugate-linear in `a`, linear in `b`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            context: "inner_product",
        });
    }
    let step = a.grid.step();
    let sum: Complex64 = a
        .amp
        .iter()
        .zip(b.amp.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(sum * step)
}

/// Grid-delta ket at the sample nearest `t0`: amplitude `1/√step` there,
/// zero elsewhere.
pub fn time_eigenstate(grid: &GridSpec, t0: f64) -> Result<StateVector> {
    let idx = grid.nearest_index(t0)?;
    let mut amp = DVector::zeros(grid.n());
    amp[idx] = Complex64::new(1.0 / grid.step().sqrt(), 0.0);
    Ok(StateVector {
        grid: grid.clone(),
        amp,
    })
}

/// Normalized two-moment superposition `cA|tA⟩ + cB|tB⟩`.
///
/// A vanishing coefficient degenerates to the pure remaining ket, so the
/// single-moment emission case is a legal input. Distinct moments that snap
/// to the same sample are rejected.
pub fn temporal_superposition(
    grid: &GridSpec,
    c_a: Complex64,
    t_a: f64,
    c_b: Complex64,
    t_b: f64,
) -> Result<StateVector> {
    let weight = c_a.norm_sqr() + c_b.norm_sqr();
    if weight <= 0.0 {
        return Err(Error::parameter(
            "c_a/c_b",
            "superposition coefficients are both zero",
        ));
    }
    let ia = grid.nearest_index(t_a)?;
    let ib = grid.nearest_index(t_b)?;
    if c_b == Complex64::default() {
        let mut ket = time_eigenstate(grid, t_a)?;
        let phase = c_a / Complex64::new(c_a.norm(), 0.0);
        ket.amp[ia] *= phase;
        return Ok(ket);
    }
    if c_a == Complex64::default() {
        let mut ket = time_eigenstate(grid, t_b)?;
        let phase = c_b / Complex64::new(c_b.norm(), 0.0);
        ket.amp[ib] *= phase;
        return Ok(ket);
    }
    if ia == ib {
        return Err(Error::DegenerateSuperposition { index: ia });
    }
    let scale = Complex64::new(1.0 / (weight * grid.step()).sqrt(), 0.0);
    let mut amp = DVector::zeros(grid.n());
    amp[ia] = c_a * scale;
    amp[ib] = c_b * scale;
    Ok(StateVector {
        grid: grid.clone(),
        amp,
    })
}

/// Amplitude matrix ψ(q, t) over a pair of grids; column `k` is the
/// q-space slice at time sample `k`.
#[derive(Debug, Clone)]
pub struct SpaceTimeState {
    grid_q: GridSpec,
    grid_t: GridSpec,
    amp: DMatrix<Complex64>,
}

impl SpaceTimeState {
    pub fn new(grid_q: GridSpec, grid_t: GridSpec, amp: DMatrix<Complex64>) -> Result<Self> {
        if amp.nrows() != grid_q.n() || amp.ncols() != grid_t.n() {
            return Err(Error::DimensionMismatch {
                context: "space-time amplitude must be n_q × n_t",
            });
        }
        Ok(SpaceTimeState { grid_q, grid_t, amp })
    }

    pub fn grid_q(&self) -> &GridSpec {
        &self.grid_q
    }

    pub fn grid_t(&self) -> &GridSpec {
        &self.grid_t
    }

    pub fn amp(&self) -> &DMatrix<Complex64> {
        &self.amp
    }

    /// q-space slice at time index `k`.
    pub fn slice(&self, k: usize) -> StateVector {
        StateVector {
            grid: self.grid_q.clone(),
            amp: self.amp.column(k).into_owned(),
        }
    }

    /// Step-weighted Frobenius norm over both grids.
    pub fn weighted_norm(&self) -> f64 {
        let w = self.grid_q.step() * self.grid_t.step();
        (self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Apply `A ⊗ I`: the operator acts on the q index of every time slice.
    pub fn apply_space_operator(&self, op: &crate::operators::LinearOperator) -> Result<Self> {
        if *op.grid() != self.grid_q {
            return Err(Error::GridMismatch {
                context: "apply_space_operator",
            });
        }
        Ok(SpaceTimeState {
            grid_q: self.grid_q.clone(),
            grid_t: self.grid_t.clone(),
            amp: op.matrix() * &self.amp,
        })
    }

    /// Apply `I ⊗ B`: the operator acts on the time index of every q row.
    pub fn apply_time_operator(&self, op: &crate::operators::LinearOperator) -> Result<Self> {
        if *op.grid() != self.grid_t {
            return Err(Error::GridMismatch {
                context: "apply_time_operator",
            });
        }
        Ok(SpaceTimeState {
            grid_q: self.grid_q.clone(),
            grid_t: self.grid_t.clone(),
            amp: &self.amp * op.matrix().transpose(),
        })
    }
}
