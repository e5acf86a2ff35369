//! Dense linear-algebra helpers: row-stacking vectorization, matrix
//! exponential, and null-space extraction.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Norm, OperationNorm, Solve, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-stacking vectorization: vec(ρ) lists ρ row by row, so that
/// vec(AXB) = (A ⊗ Bᵀ) vec(X).
pub fn vec_r(rho: &Array2<Complex64>) -> Array1<Complex64> {
    Array1::from_iter(rho.iter().cloned())
}

/// Inverse of [`vec_r`] for a d×d matrix.
pub fn unvec_r(v: &Array1<Complex64>, dim: usize) -> Result<Array2<Complex64>> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            context: "unvec",
            expected: dim * dim,
            got: v.len(),
        });
    }
    Ok(Array2::from_shape_vec((dim, dim), v.to_vec()).expect("length checked"))
}

pub fn frobenius_norm(a: &Array2<Complex64>) -> f64 {
    a.norm_l2()
}

/// Padé(13,13) coefficients (Higham 2005, scaling-and-squaring method).
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

/// Matrix exponential by scaling-and-squaring with a Padé(13,13)
/// approximant; the denominator is inverted with an LU solve.
pub fn expm(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }

    let norm = a.opnorm_one()?;
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new((1u64 << s) as f64, 0.0);

    let mut result = pade13(&scaled)?;
    for _ in 0..s {
        result = result.dot(&result);
    }
    Ok(result)
}

fn pade13(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let eye = crate::operators::identity(n);

    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let w2 = w1.dot(&a6) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &eye * c(1);
    let u = a.dot(&w2);

    let v1 = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = v1.dot(&a6) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &eye * c(0);

    // exp(A) ≈ (V − U)⁻¹ (V + U)
    let numer = &v + &u;
    let denom = &v - &u;
    solve_matrix(&denom, &numer)
}

/// Solve A X = B column by column through one LU factorization.
fn solve_matrix(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    use ndarray_linalg::Factorize;
    let lu = a.factorize()?;
    let mut x = Array2::zeros(b.raw_dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let sol = lu.solve(&col.to_owned())?;
        x.column_mut(j).assign(&sol);
    }
    Ok(x)
}

/// Right null-space basis of `a`: columns v with A v ≈ 0, taken from the
/// SVD as the singular directions with σ ≤ rel_tol·σ_max.  At least one
/// direction (the smallest singular value) is always returned.
pub fn null_space(a: &Array2<Complex64>, rel_tol: f64) -> Result<Vec<Array1<Complex64>>> {
    let (_, sigma, vt) = a.svd(false, true)?;
    let vt = vt.expect("requested V^T");
    let s_max = sigma.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).unwrap());

    let mut vectors = Vec::new();
    for &i in &order {
        if vectors.is_empty() || sigma[i] <= rel_tol * s_max {
            // Row i of V† conjugated gives the right singular vector.
            vectors.push(vt.row(i).mapv(|z| z.conj()));
        } else {
            break;
        }
    }
    Ok(vectors)
}
