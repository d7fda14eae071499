//! The matrix `H_β = 2 diag(β) − W`, Schur-complement effective weights,
//! wired weights and the u-field.
//!
//! Vertex subsets are index lists into the ambient vertex set. Outputs on a
//! subset `J` are ordered as `J` is given.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jump::MjpParams;

/// Relative pivot tolerance of [`Cholesky::factor`].
pub const PIVOT_TOL: f64 = 1e-12;

/// Symmetric matrix with nonnegative entries; the diagonal holds self-loop
/// weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidWeights(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        let scale = m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let x = m[(i, j)];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidWeights(format!("entry ({i}, {j}) = {x}")));
                }
                if (x - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidWeights(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(WeightMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: r.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix(DMatrix::zeros(n, n))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        WeightMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }

    /// `W_i = Σ_{j≠i} W_ij`.
    pub fn off_diagonal_sum(&self, i: usize) -> f64 {
        (0..self.n()).filter(|&j| j != i).map(|j| self.0[(i, j)]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn submatrix(&self, idx: &[usize]) -> WeightMatrix {
        WeightMatrix(select(&self.0, idx, idx))
    }

    /// True if the graph of positive off-diagonal entries is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if !seen[u] && u != v && self.0[(v, u)] > 0.0 {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

pub(crate) fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

/// Checks that `j` is a nonempty list of distinct indices below `n` and
/// returns the sorted complement.
pub fn complement(n: usize, j: &[usize]) -> Result<Vec<usize>> {
    let mut inside = vec![false; n];
    for &v in j {
        if v >= n {
            return Err(Error::InvalidSubset(format!("index {v} out of range 0..{n}")));
        }
        if std::mem::replace(&mut inside[v], true) {
            return Err(Error::InvalidSubset(format!("index {v} repeated")));
        }
    }
    if j.is_empty() {
        return Err(Error::InvalidSubset("empty subset".into()));
    }
    Ok((0..n).filter(|&v| !inside[v]).collect())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `2 diag(β) − W`.
pub fn h_matrix(w: &WeightMatrix, beta: &[f64]) -> Result<DMatrix<f64>> {
    check_len(w.n(), beta.len())?;
    let mut h = -w.0.clone();
    for (i, b) in beta.iter().enumerate() {
        h[(i, i)] += 2.0 * b;
    }
    Ok(h)
}

/// Lower-triangular factor `L` with `H = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Fails if some pivot is not above `PIVOT_TOL` times the largest diagonal
    /// entry. Only the lower triangle of `h` is read.
    pub fn factor(h: &DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: h.ncols() });
        }
        let tol = PIVOT_TOL * (0..n).fold(0.0f64, |a, i| a.max(h[(i, i)].abs()));
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = h[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = h[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            let mut v = DVector::from_iterator(col.nrows(), col.iter().copied());
            self.solve_in_place(&mut v);
            col.copy_from(&v);
        }
        x
    }

    fn solve_in_place(&self, x: &mut DVector<f64>) {
        let n = self.n();
        let l = &self.l;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.solve(&DMatrix::identity(self.n(), self.n()));
        symmetrize(&mut inv);
        inv
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

pub fn is_positive_definite(h: &DMatrix<f64>) -> bool {
    Cholesky::factor(h).is_ok()
}

/// `W^J = W_JJ + W_JI ([H_β]_II)^{-1} W_IJ` with `I` the complement of `J`.
///
/// `beta` has the full length of `w`; its entries on `J` are not read.
pub fn effective_weights(w: &WeightMatrix, beta: &[f64], j: &[usize]) -> Result<WeightMatrix> {
    check_len(w.n(), beta.len())?;
    let i = complement(w.n(), j)?;
    let mut out = select(&w.0, j, j);
    if !i.is_empty() {
        let mut h_ii = -select(&w.0, &i, &i);
        for (a, &v) in i.iter().enumerate() {
            h_ii[(a, a)] += 2.0 * beta[v];
        }
        let chol = Cholesky::factor(&h_ii)?;
        let w_ij = select(&w.0, &i, j);
        let x = chol.solve(&w_ij);
        out += w_ij.transpose() * x;
    }
    symmetrize(&mut out);
    // round-off can leave -0-ish entries where the exact value is 0
    out.iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0
        }
    });
    Ok(WeightMatrix(out))
}

/// Moves the diagonal of `W^J` into the betas: returns `(W^{J≠}, β^{≠})`
/// with `β^{≠}_j = β_j − ½ W^J_jj`, leaving `H` unchanged.
pub fn drop_diagonal(w: &WeightMatrix, beta: &[f64]) -> Result<(WeightMatrix, Vec<f64>)> {
    check_len(w.n(), beta.len())?;
    let mut m = w.0.clone();
    let mut b = beta.to_vec();
    for k in 0..w.n() {
        b[k] -= 0.5 * m[(k, k)];
        m[(k, k)] = 0.0;
    }
    Ok((WeightMatrix(m), b))
}

/// Wires all of `J` into `ρ`. Returns the weights on `I ∪ {ρ}` together with
/// the ambient indices of those vertices (ascending).
pub fn wire_weights(w: &WeightMatrix, j: &[usize], rho: usize) -> Result<(WeightMatrix, Vec<usize>)> {
    let i = complement(w.n(), j)?;
    if !j.contains(&rho) {
        return Err(Error::InvalidSubset(format!("pin {rho} is not in J")));
    }
    let mut verts = i.clone();
    verts.push(rho);
    verts.sort_unstable();
    let pos = verts.binary_search(&rho).expect("rho present");
    let mut m = DMatrix::zeros(verts.len(), verts.len());
    for (a, &va) in verts.iter().enumerate() {
        if a == pos {
            continue;
        }
        for (b, &vb) in verts.iter().enumerate() {
            if b != pos {
                m[(a, b)] = w.0[(va, vb)];
            }
        }
        let s: f64 = j.iter().map(|&k| w.0[(va, k)]).sum();
        m[(a, pos)] = s;
        m[(pos, a)] = s;
    }
    Ok((WeightMatrix(m), verts))
}

/// `u` with `u_ρ = 0` and `e^{u_{Λ−}} = ([H_β]_{Λ−Λ−})^{-1} W_{Λ−ρ}`.
pub fn u_field(w: &WeightMatrix, beta: &[f64], rho: usize) -> Result<Vec<f64>> {
    check_len(w.n(), beta.len())?;
    let rest = complement(w.n(), &[rho])?;
    let mut u = vec![0.0; w.n()];
    if rest.is_empty() {
        return Ok(u);
    }
    let mut h = -select(&w.0, &rest, &rest);
    for (a, &v) in rest.iter().enumerate() {
        h[(a, a)] += 2.0 * beta[v];
    }
    let rhs = DVector::from_iterator(rest.len(), rest.iter().map(|&v| w.0[(v, rho)]));
    let x = Cholesky::factor(&h)?.solve_vec(&rhs);
    for (a, &v) in rest.iter().enumerate() {
        if !(x[a] > 0.0) {
            return Err(Error::NonPositiveUField { index: v, value: x[a] });
        }
        u[v] = x[a].ln();
    }
    Ok(u)
}

/// Conductances `C_ij = W_ij e^{u_i+u_j}` and measure `π_i = 2 e^{2u_i}`.
pub fn conductances(w: &WeightMatrix, u: &[f64]) -> Result<MjpParams> {
    check_len(w.n(), u.len())?;
    let n = w.n();
    let c = DMatrix::from_fn(n, n, |i, j| w.0[(i, j)] * (u[i] + u[j]).exp());
    let pi = u.iter().map(|x| 2.0 * (2.0 * x).exp()).collect();
    MjpParams::new(c, pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn path3() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![0., 1., 0.], vec![1., 0., 1.], vec![0., 1., 0.]]).unwrap()
    }

    /// Random symmetric W with random diagonal and a diagonally dominant β.
    pub(crate) fn random_instance(rng: &mut impl Rng, n: usize) -> (WeightMatrix, Vec<f64>) {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                if i == j || rng.random::<f64>() < 0.5 {
                    let x = rng.random::<f64>() * 2.0;
                    w[(i, j)] = x;
                    w[(j, i)] = x;
                }
            }
        }
        let beta = (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| w[(i, j)]).sum();
                0.5 * row + 0.05 + rng.random::<f64>()
            })
            .collect();
        (WeightMatrix::new(w).unwrap(), beta)
    }

    /// Σ_l (2β)^{-1} (W (2β)^{-1})^l applied to W_IJ, truncated at 1e-14.
    fn geometric_oracle(w: &WeightMatrix, beta: &[f64], j: &[usize]) -> DMatrix<f64> {
        let i = complement(w.n(), j).unwrap();
        let w_ii = select(&w.0, &i, &i);
        let w_ij = select(&w.0, &i, j);
        let dinv = DMatrix::from_diagonal(&DVector::from_iterator(i.len(), i.iter().map(|&v| 1.0 / (2.0 * beta[v]))));
        let mut term = &dinv * &w_ij;
        let mut sum = term.clone();
        for _ in 0..100_000 {
            term = &dinv * (&w_ii * &term);
            sum += &term;
            if term.amax() < 1e-14 {
                break;
            }
        }
        select(&w.0, j, j) + w_ij.transpose() * sum
    }

    #[test]
    fn h_examples() {
        let h = h_matrix(&WeightMatrix::zeros(1), &[1.0]).unwrap();
        assert_eq!(h[(0, 0)], 2.0);
        let w = WeightMatrix::from_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap();
        assert_eq!(h_matrix(&w, &[1., 1.]).unwrap(), m(&[&[2., -1.], &[-1., 2.]]));
        let w = WeightMatrix::from_rows(&[vec![3.]]).unwrap();
        assert_eq!(h_matrix(&w, &[2.]).unwrap()[(0, 0)], 1.0);
        assert!(h_matrix(&w, &[1., 2.]).is_err());
    }

    #[test]
    fn pd_examples() {
        assert!(is_positive_definite(&DMatrix::identity(4, 4)));
        assert!(is_positive_definite(&m(&[&[2., -1.], &[-1., 2.]])));
        assert!(!is_positive_definite(&m(&[&[1., 2.], &[2., 1.]])));
        assert!(!is_positive_definite(&m(&[&[0.]])));
    }

    #[test]
    fn effective_weights_examples() {
        let w = path3();
        let we = effective_weights(&w, &[0., 1., 0.], &[0, 2]).unwrap();
        assert_relative_eq!(we.matrix(), &m(&[&[0.5, 0.5], &[0.5, 0.5]]), epsilon = 1e-15);

        let all = effective_weights(&w, &[1., 1., 1.], &[0, 1, 2]).unwrap();
        assert_eq!(all, w);

        // on a path, off-diagonals on consecutive vertices are deterministic
        let n = 6;
        let mut p = DMatrix::zeros(n, n);
        for k in 1..n {
            p[(k - 1, k)] = 1.0 + k as f64;
            p[(k, k - 1)] = 1.0 + k as f64;
        }
        let w = WeightMatrix::new(p).unwrap();
        let beta = vec![3.0, 2.5, 4.0, 5.0, 6.0, 7.0];
        let j = [2, 3, 4];
        let we = effective_weights(&w, &beta, &j).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_relative_eq!(we.get(a, b), w.get(j[a], j[b]));
                }
            }
        }

        let bad = effective_weights(&w, &[0.1; 6], &[0]);
        assert!(matches!(bad, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn drop_diagonal_examples() {
        let w = WeightMatrix::from_rows(&[vec![1., 1.], vec![1., 1.]]).unwrap();
        let (w2, b2) = drop_diagonal(&w, &[1., 1.]).unwrap();
        assert_eq!(w2.matrix(), &m(&[&[0., 1.], &[1., 0.]]));
        assert_eq!(b2, vec![0.5, 0.5]);
        assert_eq!(h_matrix(&w, &[1., 1.]).unwrap(), h_matrix(&w2, &b2).unwrap());
        let (w3, b3) = drop_diagonal(&w2, &b2).unwrap();
        assert_eq!((w3, b3), (w2, b2));
    }

    #[test]
    fn wire_examples() {
        let (wh, verts) = wire_weights(&path3(), &[0, 2], 0).unwrap();
        assert_eq!(verts, vec![0, 1]);
        assert_eq!(wh.get(1, 0), 2.0);
        assert_eq!(wh.get(1, 1), 0.0);
        assert_eq!(wh.get(0, 0), 0.0);

        let (wh, verts) = wire_weights(&path3(), &[0, 1, 2], 1).unwrap();
        assert_eq!(verts, vec![1]);
        assert_eq!(wh.matrix(), &DMatrix::zeros(1, 1));

        let w = WeightMatrix::from_rows(&[
            vec![0., 1., 0., 0.],
            vec![1., 0., 1., 0.],
            vec![0., 1., 0., 0.5],
            vec![0., 0., 0.5, 0.],
        ])
        .unwrap();
        let (wh, verts) = wire_weights(&w, &[0, 1, 2], 0).unwrap();
        assert_eq!(verts, vec![0, 3]);
        assert_eq!(wh.get(1, 0), 0.5);
        let (wh, verts) = wire_weights(&w, &[0, 1], 0).unwrap();
        assert_eq!(verts, vec![0, 2, 3]);
        assert_eq!(wh.get(2, 0), 0.0);
        assert!(wire_weights(&w, &[0, 1], 2).is_err());
    }

    #[test]
    fn u_field_single_edge() {
        let w = WeightMatrix::from_rows(&[vec![0., 3.], vec![3., 0.]]).unwrap();
        let u = u_field(&w, &[1.0, 2.5], 0).unwrap();
        assert_eq!(u[0], 0.0);
        assert_relative_eq!(u[1].exp(), 3.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn conductances_zero_u() {
        let w = path3();
        let p = conductances(&w, &[0.; 3]).unwrap();
        assert_eq!(p.c(), w.matrix());
        assert_eq!(p.pi(), &[2.0; 3]);
        assert_relative_eq!(p.q(0, 1), 0.5);
    }

    #[test]
    fn schur_matches_geometric_series() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 2..12 {
            let (w, beta) = random_instance(&mut rng, n);
            let j: Vec<usize> = (0..n).filter(|k| k % 3 != 1).collect();
            let a = effective_weights(&w, &beta, &j).unwrap();
            let b = geometric_oracle(&w, &beta, &j);
            assert_relative_eq!(a.matrix(), &b, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn u_field_identities(seed in any::<u64>(), n in 2usize..10, rho_pick in any::<usize>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (w, beta) = random_instance(&mut rng, n);
            prop_assume!(w.is_connected());
            let rho = rho_pick % n;
            let u = u_field(&w, &beta, rho).unwrap();
            prop_assert_eq!(u[rho], 0.0);
            let params = conductances(&w, &u).unwrap();
            for i in (0..n).filter(|&i| i != rho) {
                let s: f64 = (0..n).map(|j| w.get(i, j) * (u[j] - u[i]).exp()).sum();
                prop_assert!((beta[i] - 0.5 * s).abs() <= 1e-10 * beta[i]);
                let ci = params.total(i);
                let expect = 2.0 * beta[i] * (2.0 * u[i]).exp();
                prop_assert!((ci - expect).abs() <= 1e-10 * expect);
            }
            for i in 0..n {
                for j in 0..n {
                    let a = params.pi()[i] * params.q(i, j);
                    let b = params.pi()[j] * params.q(j, i);
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
                }
            }
        }

        #[test]
        fn effective_weights_symmetric_nonnegative(seed in any::<u64>(), n in 2usize..12) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (w, beta) = random_instance(&mut rng, n);
            let j: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
            prop_assume!(!j.is_empty());
            let we = effective_weights(&w, &beta, &j).unwrap();
            prop_assert!(WeightMatrix::new(we.into_matrix()).is_ok());
        }

        #[test]
        fn drop_diagonal_keeps_h(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (w, beta) = random_instance(&mut rng, n);
            let (w2, b2) = drop_diagonal(&w, &beta).unwrap();
            let h1 = h_matrix(&w, &beta).unwrap();
            let h2 = h_matrix(&w2, &b2).unwrap();
            prop_assert!((h1 - h2).amax() <= 1e-14);
        }
    }
}
