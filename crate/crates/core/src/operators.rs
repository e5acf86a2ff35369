//! Operators on the truncated tensor-product Hilbert space
//! (cavity Fock space ⊗ one or two two-level atoms).

use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tensor-factor layout: photon numbers 0..=n_max, followed by the atoms.
/// Factor order is fixed (cavity first, then atom 0, atom 1, …) so that
/// embedded operators are bit-identical wherever they are built.
/// Atom basis: index 0 = |g⟩, index 1 = |e⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Space {
    n_max: usize,
    n_atoms: usize,
}

impl Space {
    pub fn new(n_max: usize, n_atoms: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "photon truncation must be at least 1, got {n_max}"
            )));
        }
        if n_atoms < 1 {
            return Err(Error::InvalidParameter(
                "at least one atom is required".into(),
            ));
        }
        Ok(Self { n_max, n_atoms })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn cavity_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total Hilbert-space dimension (n_max+1)·2^n_atoms.
    pub fn dim(&self) -> usize {
        (self.n_max + 1) << self.n_atoms
    }

    pub fn identity(&self) -> Array2<Complex64> {
        identity(self.dim())
    }

    /// Cavity annihilation operator a ⊗ 1 ⊗ ….
    pub fn annihilation(&self) -> Array2<Complex64> {
        self.embed_cavity(&fock_annihilation(self.n_max))
    }

    /// Cavity creation operator a† ⊗ 1 ⊗ ….
    pub fn creation(&self) -> Array2<Complex64> {
        self.embed_cavity(&dagger(&fock_annihilation(self.n_max)))
    }

    /// Photon-number operator a†a with exact integer diagonal.
    pub fn number(&self) -> Array2<Complex64> {
        let mut n = Array2::zeros((self.cavity_dim(), self.cavity_dim()));
        for k in 0..=self.n_max {
            n[[k, k]] = Complex64::new(k as f64, 0.0);
        }
        self.embed_cavity(&n)
    }

    /// σ⁻ = |g⟩⟨e| on the chosen atom, identity elsewhere.
    pub fn lowering(&self, atom: usize) -> Array2<Complex64> {
        self.embed_atom(atom, &sigma_minus())
    }

    /// σ⁺ = |e⟩⟨g| on the chosen atom, identity elsewhere.
    pub fn raising(&self, atom: usize) -> Array2<Complex64> {
        self.embed_atom(atom, &dagger(&sigma_minus()))
    }

    /// Excited-state projector σ⁺σ⁻ on the chosen atom (exact 0/1 diagonal).
    pub fn excited_projector(&self, atom: usize) -> Array2<Complex64> {
        let mut p = Array2::zeros((2, 2));
        p[[1, 1]] = Complex64::new(1.0, 0.0);
        self.embed_atom(atom, &p)
    }

    /// Total excitation number a†a + Σᵢ σᵢ⁺σᵢ⁻ (exact integer diagonal).
    pub fn total_excitations(&self) -> Array2<Complex64> {
        let mut op = self.number();
        for atom in 0..self.n_atoms {
            op = op + self.excited_projector(atom);
        }
        op
    }

    /// Decompose a basis index into (photon number, per-atom excitation).
    pub fn basis_state(&self, index: usize) -> (usize, Vec<bool>) {
        let mut rem = index;
        let mut excited = vec![false; self.n_atoms];
        for atom in (0..self.n_atoms).rev() {
            excited[atom] = rem & 1 == 1;
            rem >>= 1;
        }
        (rem, excited)
    }

    /// Basis index of |photons⟩ ⊗ |s₀⟩ ⊗ |s₁⟩ ….
    pub fn index_of(&self, photons: usize, excited: &[bool]) -> usize {
        debug_assert_eq!(excited.len(), self.n_atoms);
        let mut index = photons;
        for &e in excited {
            index = (index << 1) | usize::from(e);
        }
        index
    }

    /// Permutation exchanging the two atom factors (requires n_atoms = 2).
    pub fn swap_atoms(&self) -> Array2<Complex64> {
        assert_eq!(self.n_atoms, 2, "swap requires exactly two atoms");
        let d = self.dim();
        let mut s = Array2::zeros((d, d));
        for i in 0..d {
            let (n, exc) = self.basis_state(i);
            let j = self.index_of(n, &[exc[1], exc[0]]);
            s[[j, i]] = Complex64::new(1.0, 0.0);
        }
        s
    }

    fn embed_cavity(&self, cavity_op: &Array2<Complex64>) -> Array2<Complex64> {
        let mut op = cavity_op.clone();
        for _ in 0..self.n_atoms {
            op = kron(&op, &identity(2));
        }
        op
    }

    fn embed_atom(&self, atom: usize, atom_op: &Array2<Complex64>) -> Array2<Complex64> {
        assert!(atom < self.n_atoms, "atom index {atom} out of range");
        let mut op = identity(self.cavity_dim());
        for k in 0..self.n_atoms {
            let factor = if k == atom {
                atom_op.clone()
            } else {
                identity(2)
            };
            op = kron(&op, &factor);
        }
        op
    }
}

/// Bare-cavity annihilation matrix: a|n⟩ = √n |n−1⟩ on 0..=n_max.
pub fn fock_annihilation(n_max: usize) -> Array2<Complex64> {
    let dim = n_max + 1;
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn sigma_minus() -> Array2<Complex64> {
    let mut s = Array2::zeros((2, 2));
    s[[0, 1]] = Complex64::new(1.0, 0.0);
    s
}

pub fn identity(dim: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Tr(Aρ).
pub fn expectation(op: &Array2<Complex64>, rho: &Array2<Complex64>) -> Complex64 {
    debug_assert_eq!(op.shape(), rho.shape());
    (op * &rho.t()).sum()
}

pub fn trace(a: &Array2<Complex64>) -> Complex64 {
    a.diag().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(dim: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((dim, dim), |_| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn smallest_annihilation_matrix() {
        let a = fock_annihilation(1);
        assert_eq!(a[[0, 1]], Complex64::new(1.0, 0.0));
        assert_eq!(a[[0, 0]], Complex64::new(0.0, 0.0));
        assert_eq!(a[[1, 0]], Complex64::new(0.0, 0.0));
        assert_eq!(a[[1, 1]], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn number_operator_diagonal() {
        let space = Space::new(4, 1).unwrap();
        let n = space.number();
        let from_products = space.creation().dot(&space.annihilation());
        assert!(max_abs_diff(&n, &from_products) < 1e-12);
        for (idx, _) in (0..space.dim()).map(|i| space.basis_state(i)).enumerate() {
            let (photons, _) = space.basis_state(idx);
            assert_eq!(n[[idx, idx]], Complex64::new(photons as f64, 0.0));
        }
    }

    #[test]
    fn truncated_commutator() {
        // [a, a†] = I − (n_max+1)|n_max⟩⟨n_max| on the cavity factor.
        let space = Space::new(3, 2).unwrap();
        let a = space.annihilation();
        let ad = space.creation();
        let comm = a.dot(&ad) - ad.dot(&a);
        for i in 0..space.dim() {
            let (photons, _) = space.basis_state(i);
            let expected = if photons == space.n_max() {
                -(space.n_max() as f64)
            } else {
                1.0
            };
            assert!((comm[[i, i]] - expected).norm() < 1e-12);
            for j in 0..space.dim() {
                if i != j {
                    assert_eq!(comm[[i, j]], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn lowering_is_nilpotent() {
        let space = Space::new(2, 2).unwrap();
        for atom in 0..2 {
            let sm = space.lowering(atom);
            let sq = sm.dot(&sm);
            assert!(sq.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn excited_projector_spectrum() {
        // Embedded σ⁺σ⁻ is diagonal with eigenvalues {0,1}, each dim/2 times.
        let space = Space::new(3, 2).unwrap();
        for atom in 0..2 {
            let p = space.excited_projector(atom);
            let from_products = space.raising(atom).dot(&space.lowering(atom));
            assert!(max_abs_diff(&p, &from_products) < 1e-15);
            let ones: usize = (0..space.dim())
                .filter(|&i| p[[i, i]] == Complex64::new(1.0, 0.0))
                .count();
            assert_eq!(ones, space.dim() / 2);
        }
    }

    #[test]
    fn disjoint_factors_commute_exactly() {
        let space = Space::new(3, 2).unwrap();
        let pairs = [
            (space.number(), space.lowering(0)),
            (space.number(), space.raising(1)),
            (space.annihilation(), space.lowering(0)),
            (space.lowering(0), space.raising(1)),
        ];
        for (x, y) in pairs {
            let comm = x.dot(&y) - y.dot(&x);
            assert!(comm.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn adjoint_involution() {
        let m = random_matrix(12, 3);
        assert_eq!(dagger(&dagger(&m)), m);
        let herm = &m + &dagger(&m);
        assert_eq!(dagger(&herm), herm);
    }

    #[test]
    fn expectation_examples() {
        let space = Space::new(3, 2).unwrap();
        let dim = space.dim();
        // ρ = |2,g,g⟩⟨2,g,g|
        let mut rho = Array2::zeros((dim, dim));
        let idx = space.index_of(2, &[false, false]);
        rho[[idx, idx]] = Complex64::new(1.0, 0.0);
        assert!((expectation(&space.identity(), &rho).re - 1.0).abs() < 1e-15);
        assert!((expectation(&space.number(), &rho).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn trace_cyclic() {
        let a = random_matrix(16, 11);
        let b = random_matrix(16, 12);
        let t1 = trace(&a.dot(&b));
        let t2 = trace(&b.dot(&a));
        assert!((t1 - t2).norm() < 1e-12);
    }

    #[test]
    fn basis_index_round_trip() {
        let space = Space::new(2, 2).unwrap();
        for i in 0..space.dim() {
            let (n, exc) = space.basis_state(i);
            assert_eq!(space.index_of(n, &exc), i);
        }
        // |1, g, e⟩: cavity ⊗ atom0 ⊗ atom1 ordering.
        assert_eq!(space.index_of(1, &[false, true]), 0b101);
    }

    #[test]
    fn invalid_layouts_rejected() {
        assert!(Space::new(0, 1).is_err());
        assert!(Space::new(3, 0).is_err());
    }

    #[test]
    fn swap_exchanges_atom_operators() {
        let space = Space::new(2, 2).unwrap();
        let s = space.swap_atoms();
        // Involution: S² = I exactly (permutation of basis states).
        let eye = space.identity();
        assert_eq!(s.dot(&s), eye);
        // S σ₁⁻ S = σ₂⁻ exactly.
        let conj = s.dot(&space.lowering(0)).dot(&s);
        assert_eq!(conj, space.lowering(1));
        // Cavity factor untouched.
        let a = space.annihilation();
        assert_eq!(s.dot(&a).dot(&s), a);
    }
}
