//! Fixed-size complex linear algebra for the three-level model.
//!
//! Everything here is sized for a qutrit: 3×3 operators, 9×9 superoperators.
//! The Hermitian eigensolver is a complex Jacobi iteration, which at this
//! size is exact to machine precision and cheaper than any general-purpose
//! routine.

use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Float;

pub type C64 = Complex64;

/// Hilbert-space dimension of the truncated transmon.
pub const DIM: usize = 3;

/// Dense complex 3×3 matrix, row major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat3 {
    e: [[C64; DIM]; DIM],
}

/// Complex 3-vector (state amplitudes).
#[derive(Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub e: [C64; DIM],
}

impl core::fmt::Debug for Mat3 {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for r in 0..DIM {
            writeln!(
                f,
                "[{:+.4}{:+.4}i  {:+.4}{:+.4}i  {:+.4}{:+.4}i]",
                self.e[r][0].re,
                self.e[r][0].im,
                self.e[r][1].re,
                self.e[r][1].im,
                self.e[r][2].re,
                self.e[r][2].im
            )?;
        }
        Ok(())
    }
}

impl core::fmt::Debug for Vec3 {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "[{}, {}, {}]", self.e[0], self.e[1], self.e[2])
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.e[r][c]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.e[r][c]
    }
}

impl Mat3 {
    pub fn zero() -> Self {
        Mat3 {
            e: [[C64::new(0.0, 0.0); DIM]; DIM],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for k in 0..DIM {
            m.e[k][k] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[C64; DIM]; DIM]) -> Self {
        Mat3 { e: rows }
    }

    pub fn diag(d0: C64, d1: C64, d2: C64) -> Self {
        let mut m = Self::zero();
        m.e[0][0] = d0;
        m.e[1][1] = d1;
        m.e[2][2] = d2;
        m
    }

    pub fn diag_re(d0: f64, d1: f64, d2: f64) -> Self {
        Self::diag(C64::new(d0, 0.0), C64::new(d1, 0.0), C64::new(d2, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] = self.e[c][r].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] = self.e[c][r];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] = m.e[r][c].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] *= s;
            }
        }
        m
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1] + self.e[2][2]
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..DIM {
            for c in 0..DIM {
                acc += self.e[r][c].norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..DIM {
            for c in 0..DIM {
                m = m.max(self.e[r][c].norm());
            }
        }
        m
    }

    /// ‖A − A†‖_F relative to max(‖A‖_F, 1): zero for Hermitian input.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = *self - self.adjoint();
        d.frobenius_norm() / self.frobenius_norm().max(1.0)
    }

    pub fn commutator(&self, other: &Mat3) -> Mat3 {
        *self * *other - *other * *self
    }

    pub fn column(&self, c: usize) -> Vec3 {
        Vec3 {
            e: [self.e[0][c], self.e[1][c], self.e[2][c]],
        }
    }

    /// Tr(self · other), without forming the product.
    pub fn trace_of_product(&self, other: &Mat3) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..DIM {
            for c in 0..DIM {
                acc += self.e[r][c] * other.e[c][r];
            }
        }
        acc
    }

    /// Conjugate by a diagonal unitary: diag(d)† · self · diag(d).
    pub fn conjugate_by_diag(&self, d: [C64; DIM]) -> Mat3 {
        let mut m = *self;
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] = d[r].conj() * self.e[r][c] * d[c];
            }
        }
        m
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut m = self;
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] += rhs.e[r][c];
            }
        }
        m
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut m = self;
        for r in 0..DIM {
            for c in 0..DIM {
                m.e[r][c] -= rhs.e[r][c];
            }
        }
        m
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut m = Mat3::zero();
        for r in 0..DIM {
            for c in 0..DIM {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..DIM {
                    acc += self.e[r][k] * rhs.e[k][c];
                }
                m.e[r][c] = acc;
            }
        }
        m
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        let mut v = Vec3::zero();
        for r in 0..DIM {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..DIM {
                acc += self.e[r][k] * rhs.e[k];
            }
            v.e[r] = acc;
        }
        v
    }
}

impl Vec3 {
    pub fn zero() -> Self {
        Vec3 {
            e: [C64::new(0.0, 0.0); DIM],
        }
    }

    pub fn basis(k: usize) -> Self {
        let mut v = Self::zero();
        v.e[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn norm(&self) -> f64 {
        (self.e[0].norm_sqr() + self.e[1].norm_sqr() + self.e[2].norm_sqr()).sqrt()
    }
}

/// Eigendecomposition of a Hermitian 3×3 matrix by cyclic complex Jacobi
/// rotations. Returns (eigenvalues, V) with A = V · diag(λ) · V† and V
/// unitary to machine precision. Eigenvalue order is unspecified.
pub fn eigh(a: &Mat3) -> ([f64; DIM], Mat3) {
    let mut m = *a;
    let mut v = Mat3::identity();
    let scale = m.frobenius_norm().max(1e-300);

    for _ in 0..60 {
        let mut off = 0.0;
        for r in 0..DIM {
            for c in 0..DIM {
                if r != c {
                    off += m.e[r][c].norm_sqr();
                }
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m.e[p][q];
            let r = apq.norm();
            if r <= 1e-18 * scale {
                continue;
            }
            let phase = apq / r;
            let app = m.e[p][p].re;
            let aqq = m.e[q][q].re;
            // Classic Jacobi angle for the phase-stripped real 2×2 block.
            let tau = (aqq - app) / (2.0 * r);
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                -1.0 / (-tau + (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;

            // J = identity with the (p,q) block set to [[c, s],[-s·e^{-iφ}, c·e^{-iφ}]],
            // where e^{-iφ} strips the phase of a_pq before the real rotation.
            let mut j = Mat3::identity();
            j.e[p][p] = C64::new(c, 0.0);
            j.e[p][q] = C64::new(s, 0.0);
            j.e[q][p] = -phase.conj() * s;
            j.e[q][q] = phase.conj() * c;

            m = j.adjoint() * m * j;
            v = v * j;
        }
    }

    ([m.e[0][0].re, m.e[1][1].re, m.e[2][2].re], v)
}

/// exp(−i·H·dt) for Hermitian H, via eigendecomposition. Exactly unitary up
/// to the accuracy of `eigh`.
pub fn expm_hermitian(h: &Mat3, dt: f64) -> Mat3 {
    let (vals, v) = eigh(h);
    let vdag = v.adjoint();
    let mut phases = Mat3::zero();
    for k in 0..DIM {
        let ang = -vals[k] * dt;
        phases.e[k][k] = C64::new(ang.cos(), ang.sin());
    }
    v * phases * vdag
}

/// Dense complex 9×9 matrix for superoperators acting on row-major vec(ρ).
#[derive(Clone, Copy)]
pub struct Mat9 {
    pub e: [[C64; 9]; 9],
}

/// Row-major vectorization of a density matrix: v[3r + c] = ρ_{rc}.
pub type Vec9 = [C64; 9];

impl Mat9 {
    pub fn zero() -> Self {
        Mat9 {
            e: [[C64::new(0.0, 0.0); 9]; 9],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for k in 0..9 {
            m.e[k][k] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn add_scaled(&mut self, other: &Mat9, s: C64) {
        for r in 0..9 {
            for c in 0..9 {
                self.e[r][c] += s * other.e[r][c];
            }
        }
    }

    pub fn matmul(&self, rhs: &Mat9) -> Mat9 {
        let mut m = Mat9::zero();
        for r in 0..9 {
            for k in 0..9 {
                let a = self.e[r][k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..9 {
                    m.e[r][c] += a * rhs.e[k][c];
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &Vec9) -> Vec9 {
        let mut out = [C64::new(0.0, 0.0); 9];
        for r in 0..9 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..9 {
                acc += self.e[r][k] * v[k];
            }
            out[r] = acc;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Mat9 {
        let mut m = *self;
        for r in 0..9 {
            for c in 0..9 {
                m.e[r][c] *= s;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        let mut mx = 0.0f64;
        for r in 0..9 {
            for c in 0..9 {
                mx = mx.max(self.e[r][c].norm());
            }
        }
        mx
    }

    /// Maximum absolute row sum (induced ∞-norm).
    pub fn norm_inf(&self) -> f64 {
        let mut mx = 0.0f64;
        for r in 0..9 {
            let mut acc = 0.0;
            for c in 0..9 {
                acc += self.e[r][c].norm();
            }
            mx = mx.max(acc);
        }
        mx
    }
}

/// Kronecker product A ⊗ B of two 3×3 matrices. With row-major vec(ρ),
/// vec(A·ρ·B) = (A ⊗ Bᵀ)·vec(ρ).
pub fn kron(a: &Mat3, b: &Mat3) -> Mat9 {
    let mut m = Mat9::zero();
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    m.e[DIM * i + k][DIM * j + l] = a.e[i][j] * b.e[k][l];
                }
            }
        }
    }
    m
}

pub fn vectorize(rho: &Mat3) -> Vec9 {
    let mut v = [C64::new(0.0, 0.0); 9];
    for r in 0..DIM {
        for c in 0..DIM {
            v[DIM * r + c] = rho.e[r][c];
        }
    }
    v
}

pub fn unvectorize(v: &Vec9) -> Mat3 {
    let mut m = Mat3::zero();
    for r in 0..DIM {
        for c in 0..DIM {
            m.e[r][c] = v[DIM * r + c];
        }
    }
    m
}

/// exp(A) for a general 9×9 matrix by scaling-and-squaring with a Taylor
/// series on the scaled matrix. Accurate to machine precision for the
/// generator norms that occur here.
pub fn expm9(a: &Mat9) -> Mat9 {
    let norm = a.norm_inf();
    let mut s = 0u32;
    if norm > 0.25 {
        s = (norm / 0.25).log2().ceil() as u32;
        s = s.min(60);
    }
    let b = a.scale(C64::new(1.0 / (1u64 << s.min(63)) as f64, 0.0));

    let mut sum = Mat9::identity();
    let mut term = Mat9::identity();
    for k in 1..=24u32 {
        term = term.matmul(&b).scale(C64::new(1.0 / k as f64, 0.0));
        sum.add_scaled(&term, C64::new(1.0, 0.0));
        if term.max_abs() < 1e-20 {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

/// In-place Gaussian elimination with partial pivoting for a small dense
/// real system A·x = b (row-major A of size n×n). Returns None if singular.
pub fn solve_real(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col * n + c] * b[c];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}
