//! Sparse symmetric matrices and a Jacobi-preconditioned conjugate gradient.

/// Symmetric matrix stored as per-row `(column, value)` lists.
#[derive(Clone, Debug, Default)]
pub struct SparseSym {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to entry `(i, j)` only; callers keep the matrix symmetric.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = &mut self.rows[i];
        match row.iter_mut().find(|(c, _)| *c == j) {
            Some(e) => e.1 += v,
            None => row.push((j, v)),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().filter(|(c, _)| *c == i).map(|e| e.1).sum())
            .collect()
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, v)| v * x[c]).sum();
        }
    }

    /// Drops row and column `k`, renumbering the rest.
    pub fn without(&self, k: usize) -> SparseSym {
        let map = |c: usize| if c > k { c - 1 } else { c };
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, r)| r.iter().filter(|(c, _)| *c != k).map(|&(c, v)| (map(c), v)).collect())
            .collect();
        SparseSym { rows }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`. Returns the solution
/// and the final relative residual.
pub fn conjugate_gradient(a: &SparseSym, b: &[f64], rel_tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = 1.0;
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= rel_tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, res)
}
