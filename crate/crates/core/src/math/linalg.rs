//! Dense square matrices sized for feature statistics (tens to a few
//! hundred dimensions) with a Jacobi eigenvalue solver.

use crate::num::{cast, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Real> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![S::zero(); n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.data[i * self.n + j]
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == S::zero() {
                    continue;
                }
                for j in 0..n {
                    *out.at_mut(i, j) += a * o.at(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&o.data) {
            *a += *b;
        }
        out
    }

    pub fn trace(&self) -> S {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn symmetrized(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        let half: S = cast(0.5);
        for i in 0..n {
            for j in 0..n {
                *out.at_mut(i, j) = (self.at(i, j) + self.at(j, i)) * half;
            }
        }
        out
    }
}

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<S: Real>(m: &Mat<S>) -> Vec<S> {
    let n = m.dim();
    let mut a = m.clone();
    let eps: S = cast(1e-12);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.at(i, j) * a.at(i, j);
            }
        }
        let scale = a.trace().abs().max(S::one());
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq == S::zero() {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                let theta = (aqq - app) / (cast::<S>(2.0) * apq);
                let t = {
                    let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    *a.at_mut(k, p) = c * akp - s * akq;
                    *a.at_mut(k, q) = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    *a.at_mut(p, k) = c * apk - s * aqk;
                    *a.at_mut(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a.at(i, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        let mut m = Mat::<f64>::zeros(3);
        *m.at_mut(0, 0) = 3.0;
        *m.at_mut(1, 1) = -1.0;
        *m.at_mut(2, 2) = 0.5;
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-10);
        assert!((ev[1] - 0.5).abs() < 1e-10);
        assert!((ev[2] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_of_known_symmetric() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let mut m = Mat::<f64>::zeros(2);
        *m.at_mut(0, 0) = 2.0;
        *m.at_mut(0, 1) = 1.0;
        *m.at_mut(1, 0) = 1.0;
        *m.at_mut(1, 1) = 2.0;
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-10);
        assert!((ev[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn trace_is_rotation_invariant() {
        let mut m = Mat::<f64>::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                let v = ((i * 4 + j) as f64 * 0.37).sin();
                *m.at_mut(i, j) = v;
            }
        }
        let sym = m.symmetrized();
        let ev = symmetric_eigenvalues(&sym);
        let sum: f64 = ev.iter().sum();
        assert!((sum - sym.trace()).abs() < 1e-9);
    }
}
