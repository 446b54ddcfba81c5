use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert!(sub.len() == diag.len() && sup.len() == diag.len());
        Tridiagonal { sub, diag, sup }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.mul_into(u, &mut out);
        out
    }

    pub fn mul_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.sub[i] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * u[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn transpose(&self) -> Tridiagonal {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                sub[i] = self.sup[i - 1];
            }
            if i + 1 < n {
                sup[i] = self.sub[i + 1];
            }
        }
        Tridiagonal {
            sub,
            diag: self.diag.clone(),
            sup,
        }
    }

    /// LU factorization without pivoting (Thomas algorithm).
    pub fn factor(&self) -> Result<Factored> {
        let n = self.len();
        let mut sup_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.sub[i] * prev
            };
            let scale = self.diag[i].abs() + self.sub[i].abs() + self.sup[i].abs();
            if !pivot.is_finite() || pivot.abs() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularSystem { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            prev = if i + 1 < n { self.sup[i] * inv_pivot[i] } else { 0.0 };
            sup_mod[i] = prev;
        }
        Ok(Factored {
            sub: self.sub.clone(),
            sup_mod,
            inv_pivot,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let f = self.factor()?;
        let mut x = rhs.to_vec();
        f.solve_in_place(&mut x);
        Ok(x)
    }
}

/// A factored tridiagonal system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored {
    sub: Vec<f64>,
    sup_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Factored {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, d: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(d.len(), n);
        if n == 0 {
            return;
        }
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - self.sub[i] * d[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.sup_mod[i] * d[i + 1];
        }
    }
}
