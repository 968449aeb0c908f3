use num_complex::Complex64 as C64;

use super::{herm_eigvals, ComplexMatrix, SpaceLayout};
use crate::error::{Error, Result};

/// Validation tolerance for ket norms, density traces and Hermiticity.
pub const STATE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Ket,
    Density,
}

/// A pure ket (column vector) or density matrix on a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    kind: StateKind,
    data: ComplexMatrix,
    layout: SpaceLayout,
}

impl QState {
    /// Normalized ket; fails if `‖ψ‖` deviates from 1.
    pub fn ket(amplitudes: Vec<C64>, layout: SpaceLayout) -> Result<Self> {
        let dim = layout.total_dim();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "ket",
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let data = ComplexMatrix::from_vec(dim, 1, amplitudes)?;
        let norm = data.frobenius_norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "ket norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            kind: StateKind::Ket,
            data,
            layout,
        })
    }

    /// Computational-basis product state with the given per-subsystem levels.
    pub fn basis(layout: &SpaceLayout, levels: &[usize]) -> Result<Self> {
        let idx = layout.basis_index(levels)?;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Self::ket(amps, layout.clone())
    }

    /// Validated density matrix.
    pub fn density(rho: ComplexMatrix, layout: SpaceLayout) -> Result<Self> {
        let dim = layout.total_dim();
        if rho.rows() != dim || rho.cols() != dim {
            return Err(Error::DimensionMismatch {
                context: "density matrix",
                expected: dim,
                found: rho.rows().max(rho.cols()),
            });
        }
        let dev = rho.hermiticity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density trace {tr} differs from 1"
            )));
        }
        let min = herm_eigvals(&rho.hermitian_part())?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "density has eigenvalue {min:e}"
            )));
        }
        Ok(Self {
            kind: StateKind::Density,
            data: rho,
            layout,
        })
    }

    /// Wraps integrator output without re-validating; callers run their own diagnostics.
    pub(crate) fn from_parts(kind: StateKind, data: ComplexMatrix, layout: SpaceLayout) -> Self {
        Self { kind, data, layout }
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn is_ket(&self) -> bool {
        self.kind == StateKind::Ket
    }

    pub fn data(&self) -> &ComplexMatrix {
        &self.data
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.data.rows()
    }

    /// `|ψ⟩⟨ψ|` for kets, a copy for density matrices.
    pub fn to_density(&self) -> QState {
        match self.kind {
            StateKind::Density => self.clone(),
            StateKind::Ket => {
                let psi = self.data.data();
                let rho =
                    ComplexMatrix::from_fn(psi.len(), psi.len(), |r, c| psi[r] * psi[c].conj());
                Self::from_parts(StateKind::Density, rho, self.layout.clone())
            }
        }
    }

    /// Applies `U` as `U|ψ⟩` or `UρU†`.
    pub fn transformed(&self, u: &ComplexMatrix) -> Result<QState> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "state transform",
                expected: self.dim(),
                found: u.rows(),
            });
        }
        let data = match self.kind {
            StateKind::Ket => u * &self.data,
            StateKind::Density => &(u * &self.data) * &u.adjoint(),
        };
        Ok(Self::from_parts(self.kind, data, self.layout.clone()))
    }

    /// `‖ψ‖²` for kets, `Re tr ρ` for densities.
    pub fn norm_or_trace(&self) -> f64 {
        match self.kind {
            StateKind::Ket => self.data.frobenius_norm().powi(2),
            StateKind::Density => self.data.trace().re,
        }
    }
}

/// Reduced density matrix over the kept subsystems, in their original order.
pub fn ptrace(state: &QState, keep: &[usize]) -> Result<QState> {
    let layout = state.layout();
    for &k in keep {
        layout.check_slot(k)?;
    }
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("keep", "non-empty and strictly increasing"));
    }
    let rho = state.to_density();
    let dims = layout.dims();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kept_labels: Vec<String> = keep.iter().map(|&k| layout.labels()[k].clone()).collect();
    let reduced_dim: usize = kept_dims.iter().product();

    let total = layout.total_dim();
    let mut kept_of = vec![0usize; total];
    let mut traced_of = vec![0usize; total];
    for i in 0..total {
        let levels = layout.levels_of(i);
        let (mut ki, mut ti) = (0usize, 0usize);
        for (slot, (&l, &d)) in levels.iter().zip(dims).enumerate() {
            if keep.contains(&slot) {
                ki = ki * d + l;
            } else {
                ti = ti * d + l;
            }
        }
        kept_of[i] = ki;
        traced_of[i] = ti;
    }
    let mut red = ComplexMatrix::zeros(reduced_dim, reduced_dim);
    let m = rho.data();
    for i in 0..total {
        for j in 0..total {
            if traced_of[i] == traced_of[j] {
                red[(kept_of[i], kept_of[j])] += m[(i, j)];
            }
        }
    }
    Ok(QState::from_parts(
        StateKind::Density,
        red,
        SpaceLayout::new(kept_dims, kept_labels)?,
    ))
}

/// Expectation value of a Hermitian operator.
pub fn expect(op: &ComplexMatrix, state: &QState) -> Result<f64> {
    let dim = state.dim();
    if op.rows() != dim || op.cols() != dim {
        return Err(Error::DimensionMismatch {
            context: "expect",
            expected: dim,
            found: op.rows().max(op.cols()),
        });
    }
    if !op.is_hermitian(1e-12) {
        return Err(Error::NotHermitian {
            deviation: op.hermiticity_deviation(),
        });
    }
    let z = expect_raw(op, state);
    if z.im.abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `⟨ψ|op|ψ⟩` or `tr(op·ρ)` without Hermiticity checks.
pub(crate) fn expect_raw(op: &ComplexMatrix, state: &QState) -> C64 {
    match state.kind() {
        StateKind::Ket => expect_ket(op, state.data().data()),
        StateKind::Density => expect_density(op, state.data()),
    }
}

pub(crate) fn expect_ket(op: &ComplexMatrix, psi: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (r, p) in psi.iter().enumerate() {
        if p.re == 0.0 && p.im == 0.0 {
            continue;
        }
        let row: C64 = op.row(r).iter().zip(psi).map(|(a, b)| a * b).sum();
        acc += p.conj() * row;
    }
    acc
}

pub(crate) fn expect_density(op: &ComplexMatrix, rho: &ComplexMatrix) -> C64 {
    let n = rho.rows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for (j, o) in op.row(i).iter().enumerate() {
            acc += o * rho[(j, i)];
        }
    }
    acc
}
