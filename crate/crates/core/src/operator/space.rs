use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Ordered tensor-product structure of the Hilbert space.
///
/// The simulator always uses `[q1, f1, …, fn, q2]`; the type itself accepts any
/// ordering so tests can build small ad-hoc spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl SpaceLayout {
    pub fn new(dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::param("dims", "non-empty"));
        }
        if dims.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "layout labels",
                expected: dims.len(),
                found: labels.len(),
            });
        }
        if let Some(i) = dims.iter().position(|&d| d < 2) {
            return Err(Error::param(format!("dims[{i}]"), ">= 2"));
        }
        Ok(Self { dims, labels })
    }

    /// Layout with generic labels `s0, s1, …`.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        let labels = (0..dims.len()).map(|i| format!("s{i}")).collect();
        Self::new(dims.to_vec(), labels)
    }

    /// The simulator's `[q1, f1, …, fn, q2]` layout.
    pub fn qubits_and_filter(n_cavities: usize, fock_levels: usize) -> Result<Self> {
        let mut dims = vec![2];
        let mut labels = vec!["q1".to_string()];
        for i in 1..=n_cavities {
            dims.push(fock_levels);
            labels.push(format!("f{i}"));
        }
        dims.push(2);
        labels.push("q2".to_string());
        Self::new(dims, labels)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Overflow-checked total dimension.
    pub fn checked_total_dim(&self) -> Option<usize> {
        self.dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    pub fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.dims.len() {
            return Err(Error::InvalidSubsystem {
                index: slot,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Flat basis index of a product state given per-subsystem levels.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                context: "basis levels",
                expected: self.dims.len(),
                found: levels.len(),
            });
        }
        let mut idx = 0;
        for (i, (&l, &d)) in levels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(Error::param(format!("level[{i}]"), format!("< {d}")));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.dims.len()];
        for (l, &d) in levels.iter_mut().zip(&self.dims).rev() {
            *l = index % d;
            index /= d;
        }
        levels
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let cols = ac * bc;
    let data = out.data_mut();
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * cols + j * bc;
                for (l, y) in b.row(k).iter().enumerate() {
                    data[row + l] = x * y;
                }
            }
        }
    }
    out
}

/// Lifts `op` acting on subsystem `slot` into the full space: `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn embed(op: &ComplexMatrix, slot: usize, layout: &SpaceLayout) -> Result<ComplexMatrix> {
    embed_product(&[(slot, op)], layout)
}

/// Tensor product of single-subsystem factors on distinct slots, identity elsewhere.
///
/// Equivalent to the product of the individually embedded operators but built
/// directly, without full-dimension matrix multiplication.
pub fn embed_product(
    factors: &[(usize, &ComplexMatrix)],
    layout: &SpaceLayout,
) -> Result<ComplexMatrix> {
    let mut per_slot: Vec<Option<&ComplexMatrix>> = vec![None; layout.len()];
    for &(slot, op) in factors {
        layout.check_slot(slot)?;
        let d = layout.dims()[slot];
        if op.rows() != d || op.cols() != d {
            return Err(Error::DimensionMismatch {
                context: "embed",
                expected: d,
                found: op.rows().max(op.cols()),
            });
        }
        if per_slot[slot].is_some() {
            return Err(Error::param(
                format!("slot {slot}"),
                "used at most once per product",
            ));
        }
        per_slot[slot] = Some(op);
    }
    let mut acc = ComplexMatrix::identity(1);
    let mut pending_identity = 1usize;
    for (slot, f) in per_slot.iter().enumerate() {
        match f {
            Some(op) => {
                if pending_identity > 1 {
                    acc = kron(&acc, &ComplexMatrix::identity(pending_identity));
                    pending_identity = 1;
                }
                acc = kron(&acc, op);
            }
            None => pending_identity *= layout.dims()[slot],
        }
    }
    if pending_identity > 1 {
        acc = kron(&acc, &ComplexMatrix::identity(pending_identity));
    }
    Ok(acc)
}

/// Truncated annihilation operator on `d` Fock levels.
pub fn destroy(d: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Qubit lowering operator `|g⟩⟨e|` with index 0 = |g⟩, 1 = |e⟩.
pub fn sigma_minus() -> ComplexMatrix {
    destroy(2)
}

pub fn sigma_plus() -> ComplexMatrix {
    sigma_minus().adjoint()
}

/// `|e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[-1.0, 1.0])
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_vec(2, 2, vec![C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)]).expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_identity_factors() {
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(
            kron(&i2, &z),
            ComplexMatrix::from_real_diag(&[1.0, -1.0, 1.0, -1.0])
        );
        assert_eq!(
            kron(&z, &i2),
            ComplexMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn kron_shape_of_rectangular() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(4, 1);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (8, 3));
    }

    #[test]
    fn embed_lowering_on_first_qubit() {
        let layout = SpaceLayout::from_dims(&[2, 2]).unwrap();
        let sm = embed(&sigma_minus(), 0, &layout).unwrap();
        // |e⟩⊗|g⟩ is index 2, |g⟩⊗|g⟩ is index 0
        let mut psi = vec![C64::new(0.0, 0.0); 4];
        psi[2] = C64::new(1.0, 0.0);
        let out = sm.mul_vec(&psi);
        assert_eq!(out[0], C64::new(1.0, 0.0));
        assert!(out[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn embed_identity_is_identity() {
        let layout = SpaceLayout::from_dims(&[2, 3, 2]).unwrap();
        for slot in 0..3 {
            let d = layout.dims()[slot];
            let e = embed(&ComplexMatrix::identity(d), slot, &layout).unwrap();
            assert_eq!(e, ComplexMatrix::identity(12));
        }
    }

    #[test]
    fn distinct_slots_commute() {
        let layout = SpaceLayout::from_dims(&[2, 3, 3]).unwrap();
        let a = destroy(3);
        let a1 = embed(&a, 1, &layout).unwrap();
        let a2dag = embed(&a.adjoint(), 2, &layout).unwrap();
        assert_eq!(a1.commutator(&a2dag).max_abs(), 0.0);
    }

    #[test]
    fn embed_rejects_wrong_dimension_and_slot() {
        let layout = SpaceLayout::from_dims(&[2, 3]).unwrap();
        assert!(matches!(
            embed(&destroy(2), 1, &layout),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            embed(&destroy(2), 5, &layout),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn embed_product_matches_matrix_product() {
        let layout = SpaceLayout::from_dims(&[2, 3, 2]).unwrap();
        let a = destroy(3);
        let sp = sigma_plus();
        let direct = embed_product(&[(0, &sp), (1, &a)], &layout).unwrap();
        let via = &embed(&sp, 0, &layout).unwrap() * &embed(&a, 1, &layout).unwrap();
        assert_eq!(direct.max_abs_diff(&via), 0.0);
    }

    #[test]
    fn truncated_ladder_commutator() {
        for d in 2..6 {
            let a = destroy(d);
            let comm = a.commutator(&a.adjoint());
            for r in 0..d {
                for c in 0..d {
                    let expected = if r != c {
                        0.0
                    } else if r == d - 1 {
                        1.0 - d as f64
                    } else {
                        1.0
                    };
                    assert!(
                        (comm[(r, c)] - C64::new(expected, 0.0)).norm() < 1e-14,
                        "d={d} ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn basis_index_roundtrip() {
        let layout = SpaceLayout::from_dims(&[2, 3, 2]).unwrap();
        for idx in 0..12 {
            let lv = layout.levels_of(idx);
            assert_eq!(layout.basis_index(&lv).unwrap(), idx);
        }
        assert!(SpaceLayout::from_dims(&[2, 1]).is_err());
    }
}
