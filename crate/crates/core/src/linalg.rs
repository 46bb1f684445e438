//! Small dense helpers: ℓp norms and a cyclic Jacobi eigensolver for
//! symmetric matrices. The eigensolver backs every exact `p = 2` oracle.

use crate::ball::NormOrder;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖x‖_p`, with `p = ∞` giving the max norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    }
    let scale = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    }
    scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Norm of the functional `y ↦ ⟨g, y⟩` on `B_p`, i.e. `‖g‖_q`.
pub fn dual_norm(g: &[f64], p: NormOrder) -> f64 {
    lp_norm(g, p.conjugate())
}

/// Row-major square symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `self += G Gᵀ` where `g` is an `n × cols` row-major matrix.
    pub fn add_gram(&mut self, g: &[f64], cols: usize) {
        let n = self.n;
        debug_assert_eq!(g.len(), n * cols);
        for i in 0..n {
            let gi = &g[i * cols..(i + 1) * cols];
            for j in i..n {
                let v = dot(gi, &g[j * cols..(j + 1) * cols]);
                self.data[i * n + j] += v;
                if i != j {
                    self.data[j * n + i] += v;
                }
            }
        }
    }

    /// `self += Gᵀ G` where `g` is a `rows × n` row-major matrix.
    pub fn add_gram_transposed(&mut self, g: &[f64], rows: usize) {
        let n = self.n;
        debug_assert_eq!(g.len(), rows * n);
        for row in g.chunks_exact(n).take(rows) {
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    self.data[i * n + j] += row[i] * row[j];
                }
            }
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| x[i] * dot(&self.data[i * n..(i + 1) * n], x))
            .sum()
    }

    /// Eigenvalues (unsorted) by cyclic Jacobi rotations. The sweep budget
    /// is fixed so the cost is deterministic.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.data.clone();
        let total: f64 = a.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return vec![0.0; n];
        }
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            if off <= 1e-30 * total {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).collect()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.eigenvalues()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0), 5.0);
        assert_eq!(lp_norm(&[1.0, -2.0], f64::INFINITY), 2.0);
        assert!((lp_norm(&[1.0, 1.0], 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(lp_norm(&[0.0, 0.0], 3.0), 0.0);
        assert!((lp_norm(&[1e200, 1e200], 2.0) - 2f64.sqrt() * 1e200).abs() < 1e186);
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        let mut m = SymMatrix::zeros(2);
        m.add_gram(&[2.0, 1.0, 1.0, 3.0], 2);
        // G Gᵀ = [[5, 5], [5, 10]]
        let (a, b, c): (f64, f64, f64) = (5.0, 5.0, 10.0);
        let top = 0.5 * (a + c + ((a - c) * (a - c) + 4.0 * b * b).sqrt());
        assert!((m.max_eigenvalue() - top).abs() < 1e-12);
    }

    #[test]
    fn jacobi_diagonal_and_trace() {
        let mut m = SymMatrix::zeros(4);
        let g: Vec<f64> = (0..16).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        m.add_gram(&g, 4);
        let ev = m.eigenvalues();
        let trace: f64 = (0..4).map(|i| m.get(i, i)).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9);
        assert!(ev.iter().all(|&e| e > -1e-9));
    }
}
