//! Small dense complex matrices over a [`Scalar`] field.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn c_approx_zero<T: Scalar>(z: &Complex<T>, tol: f64) -> bool {
    z.re.approx_eq(&T::zero(), tol) && z.im.approx_eq(&T::zero(), tol)
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Real matrix from row-major entries.
    pub fn from_real(dim: usize, entries: Vec<T>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count");
        Self {
            dim,
            data: entries.into_iter().map(|v| Complex::new(v, T::zero())).collect(),
        }
    }

    /// `|ψ⟩⟨ψ|` for a real vector.
    pub fn outer_real(psi: &[T]) -> Self {
        let dim = psi.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = Complex::new(psi[i].clone() * psi[j].clone(), T::zero());
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let mut m = Self::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        m.set(i * other.dim + k, j * other.dim + l, a.clone() * other.get(k, l).clone());
                    }
                }
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let v = m.get(i, j).clone() + a.clone() * other.get(k, j).clone();
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|a| Complex::new(a.re.clone() * s.clone(), a.im.clone() * s.clone()))
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| c_approx_zero(&(a.clone() - b.clone()), tol))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.dagger(), tol)
    }

    /// Positive semidefiniteness of a Hermitian matrix by symmetric
    /// elimination with diagonal pivoting. Exact for exact scalars.
    pub fn is_psd(&self, tol: f64) -> bool {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut alive: Vec<usize> = (0..d).collect();
        while !alive.is_empty() {
            let (pos, &k) = alive
                .iter()
                .enumerate()
                .max_by(|x, y| a[x.1 * d + x.1].re.partial_cmp(&a[y.1 * d + y.1].re).expect("comparable"))
                .expect("nonempty");
            let pivot = a[k * d + k].re.clone();
            if pivot.is_negative_tol(tol) {
                return false;
            }
            alive.swap_remove(pos);
            if pivot.approx_eq(&T::zero(), tol) {
                if alive.iter().any(|&j| !c_approx_zero(&a[k * d + j], tol)) {
                    return false;
                }
                continue;
            }
            for &i in &alive {
                let aik = a[i * d + k].clone();
                if aik.is_zero() {
                    continue;
                }
                for &j in &alive {
                    let prod = aik.clone() * a[k * d + j].clone();
                    let upd = Complex::new(prod.re / pivot.clone(), prod.im / pivot.clone());
                    a[i * d + j] = a[i * d + j].clone() - upd;
                }
            }
        }
        true
    }
}

impl<T: Scalar> Matrix<T> {
    /// Identity check, used for projector completeness.
    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Self::identity(self.dim), tol)
    }
}

/// Complex one, for callers building matrices entrywise.
pub fn cone<T: Scalar>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}
