//! 1D Lagrange bases on a fixed node lattice, evaluated with the
//! barycentric formula so that high orders stay well conditioned.

/// Lagrange basis through an arbitrary strictly increasing node set.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        assert!(n >= 1);
        let mut bary = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    bary[i] /= nodes[i] - nodes[j];
                }
            }
        }
        LagrangeBasis { nodes, bary }
    }

    /// Equispaced lattice of `order + 1` nodes on `[0, 1]`.
    pub fn equispaced_unit(order: usize) -> Self {
        let n = order + 1;
        if n == 1 {
            return Self::new(vec![0.5]);
        }
        Self::new((0..n).map(|i| i as f64 / order as f64).collect())
    }

    /// Equispaced lattice of `order + 1` nodes on `[-1, 1]`.
    pub fn equispaced_biunit(order: usize) -> Self {
        let n = order + 1;
        if n == 1 {
            return Self::new(vec![0.0]);
        }
        Self::new((0..n).map(|i| -1.0 + 2.0 * i as f64 / order as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of every basis function at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// Values of every basis function at `x`, written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(out.len(), n);
        // Exact hit on a node: the basis is a Kronecker delta there.
        if let Some(k) = self.node_index(x) {
            out.fill(0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for i in 0..n {
            let t = self.bary[i] / (x - self.nodes[i]);
            out[i] = t;
            denom += t;
        }
        for v in out.iter_mut() {
            *v /= denom;
        }
    }

    /// Derivatives of every basis function at `x`.
    pub fn deriv(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.deriv_into(x, &mut out);
        out
    }

    /// Derivatives of every basis function at `x`, written into `out`.
    pub fn deriv_into(&self, x: f64, out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(out.len(), n);
        if n == 1 {
            out[0] = 0.0;
            return;
        }
        if let Some(k) = self.node_index(x) {
            // Differentiation-matrix row at node k.
            let mut sum = 0.0;
            for j in 0..n {
                if j != k {
                    let d = (self.bary[j] / self.bary[k]) / (self.nodes[k] - self.nodes[j]);
                    out[j] = d;
                    sum += d;
                }
            }
            out[k] = -sum;
            return;
        }
        // L_i(x) = (w_i / (x - x_i)) / s with s = sum_j w_j / (x - x_j).
        // Differentiating gives L_i' = L_i * (s'/(-s) + 1/(x - x_i))... the
        // direct quotient rule below avoids that cancellation-prone form.
        let mut t = vec![0.0; n];
        let mut s = 0.0;
        let mut sp = 0.0;
        for i in 0..n {
            let inv = 1.0 / (x - self.nodes[i]);
            t[i] = self.bary[i] * inv;
            s += t[i];
            sp -= t[i] * inv;
        }
        for i in 0..n {
            let inv = 1.0 / (x - self.nodes[i]);
            // d/dx [t_i / s] = (t_i' s - t_i s') / s^2, with t_i' = -t_i/(x-x_i).
            out[i] = (-t[i] * inv * s - t[i] * sp) / (s * s);
        }
    }

    fn node_index(&self, x: f64) -> Option<usize> {
        self.nodes.iter().position(|&xn| x == xn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronecker_delta_at_nodes() {
        let basis = LagrangeBasis::equispaced_unit(6);
        for (k, &xk) in basis.nodes().to_vec().iter().enumerate() {
            let vals = basis.eval(xk);
            for (i, v) in vals.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert_relative_eq!(*v, expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let basis = LagrangeBasis::equispaced_unit(10);
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let sum: f64 = basis.eval(x).iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn reproduces_polynomials_of_matching_degree() {
        let basis = LagrangeBasis::equispaced_biunit(4);
        let f = |x: f64| 3.0 * x.powi(4) - x.powi(3) + 0.5 * x - 2.0;
        let df = |x: f64| 12.0 * x.powi(3) - 3.0 * x.powi(2) + 0.5;
        let coeffs: Vec<f64> = basis.nodes().iter().map(|&x| f(x)).collect();
        for k in 0..=20 {
            let x = -1.0 + 2.0 * k as f64 / 20.0;
            let vals = basis.eval(x);
            let ders = basis.deriv(x);
            let fx: f64 = vals.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
            let dfx: f64 = ders.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
            assert_relative_eq!(fx, f(x), epsilon = 1e-10, max_relative = 1e-10);
            assert_relative_eq!(dfx, df(x), epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn derivative_rows_sum_to_zero() {
        let basis = LagrangeBasis::equispaced_unit(8);
        for k in 0..=16 {
            let x = k as f64 / 16.0;
            let sum: f64 = basis.deriv(x).iter().sum();
            assert_relative_eq!(sum, 0.0, epsilon = 1e-9);
        }
    }
}
