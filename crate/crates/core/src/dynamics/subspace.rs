use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, SpaceLayout};

/// Product-basis states with at most `max_excitations` quanta in total.
///
/// The total excitation number is diagonal in the product basis and conserved by the
/// rotating-wave Hamiltonian; lowering-type and diagonal collapse operators never
/// raise it. Dynamics started inside this subspace therefore stay inside it, and all
/// operators can be replaced by their principal submatrices on these indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationSubspace {
    layout: SpaceLayout,
    max_excitations: usize,
    indices: Vec<usize>,
}

impl ExcitationSubspace {
    pub fn new(layout: &SpaceLayout, max_excitations: usize) -> Self {
        let indices = (0..layout.total_dim())
            .filter(|&i| layout.levels_of(i).iter().sum::<usize>() <= max_excitations)
            .collect();
        Self {
            layout: layout.clone(),
            max_excitations,
            indices,
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn max_excitations(&self) -> usize {
        self.max_excitations
    }

    /// Full-space basis indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Subspace position of a product state.
    pub fn position(&self, levels: &[usize]) -> Result<usize> {
        let full = self.layout.basis_index(levels)?;
        self.indices
            .binary_search(&full)
            .map_err(|_| Error::InvalidState(format!("{levels:?} lies outside the subspace")))
    }

    pub fn restrict(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.submatrix(&self.indices)
    }

    /// Projects a full-space ket; fails if it has weight outside the subspace.
    pub fn restrict_ket(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.layout.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "subspace restriction",
                expected: self.layout.total_dim(),
                found: psi.len(),
            });
        }
        let inside: f64 = self.indices.iter().map(|&i| psi[i].norm_sqr()).sum();
        let total: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if total - inside > 1e-12 * total.max(1.0) {
            return Err(Error::InvalidState(format!(
                "state has weight {:e} outside the excitation subspace",
                total - inside
            )));
        }
        Ok(self.indices.iter().map(|&i| psi[i]).collect())
    }

    pub fn lift_ket(&self, sub: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.layout.total_dim()];
        for (&i, z) in self.indices.iter().zip(sub) {
            out[i] = *z;
        }
        out
    }

    pub fn lift_density(&self, sub: &ComplexMatrix) -> ComplexMatrix {
        let d = self.layout.total_dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for (r, &i) in self.indices.iter().enumerate() {
            for (c, &j) in self.indices.iter().enumerate() {
                out[(i, j)] = sub[(r, c)];
            }
        }
        out
    }

    /// Reduced density matrix over `keep` (strictly increasing slots) of a state given
    /// in subspace coordinates: a ket of length `dim()` or a row-major `dim()²` density.
    pub fn reduce(&self, state: &[C64], keep: &[usize]) -> Result<ComplexMatrix> {
        for &k in keep {
            self.layout.check_slot(k)?;
        }
        if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("keep", "non-empty and strictly increasing"));
        }
        let n = self.dim();
        let is_ket = state.len() == n;
        if !is_ket && state.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "subspace state",
                expected: n,
                found: state.len(),
            });
        }
        let dims = self.layout.dims();
        let red_dim: usize = keep.iter().map(|&k| dims[k]).product();
        let (kept, traced): (Vec<usize>, Vec<usize>) = self
            .indices
            .iter()
            .map(|&i| {
                let levels = self.layout.levels_of(i);
                let (mut ki, mut ti) = (0, 0);
                for (slot, (&l, &d)) in levels.iter().zip(dims).enumerate() {
                    if keep.contains(&slot) {
                        ki = ki * d + l;
                    } else {
                        ti = ti * d + l;
                    }
                }
                (ki, ti)
            })
            .unzip();
        let mut red = ComplexMatrix::zeros(red_dim, red_dim);
        for r in 0..n {
            for c in 0..n {
                if traced[r] != traced[c] {
                    continue;
                }
                let v = if is_ket {
                    state[r] * state[c].conj()
                } else {
                    state[r * n + c]
                };
                red[(kept[r], kept[c])] += v;
            }
        }
        Ok(red)
    }
}
