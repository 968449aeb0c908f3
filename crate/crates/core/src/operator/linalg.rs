use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, ordered like `values`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let fl: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[(r, k)] * fl[k] * v[(c, k)].conj();
                }
                out[(r, c)] = acc;
            }
        }
        out
    }
}

pub(crate) fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            deviation: h.hermiticity_deviation(),
        });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    // Feed the exactly Hermitian part so round-off asymmetry cannot leak in.
    let eig = to_nalgebra(&h.hermitian_part()).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermEig { values, vectors })
}

/// Ascending eigenvalues only.
pub fn herm_eigvals(h: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(h)?.values)
}

/// `exp(−i·H·t)` for Hermitian `H` via its eigendecomposition.
pub fn unitary_propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.reconstruct_with(|l| C64::from_polar(1.0, -l * t)))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn lin_comb(terms: &[(f64, &ComplexMatrix)], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    for &(c, m) in terms {
        out.add_scaled(m, C64::new(c, 0.0));
    }
    out
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("expm input"));
    }
    let n = a.rows();
    if a.max_abs() == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let norm = a.norm_one();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale_real(0.5f64.powi(s));
    let b = &PADE13;
    let ident = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let mut u = &a6 * &inner_u;
    u += &lin_comb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &ident)], n);
    let u = &a * &u;

    let inner_v = lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let mut v = &a6 * &inner_v;
    v += &lin_comb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &ident)], n);

    let p = to_nalgebra(&(&v + &u));
    let q = to_nalgebra(&(&v - &u));
    let mut r = from_nalgebra(
        &q.lu()
            .solve(&p)
            .ok_or(Error::NonFinite("singular Padé denominator"))?,
    );
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("expm result"));
    }
    Ok(r)
}
