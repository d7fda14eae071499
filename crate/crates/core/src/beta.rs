//! Exact sampling and density of the β-field law `ν^W`.
//!
//! Sampling eliminates one vertex at a time: with current effective weights
//! `W̃` on the remaining set, `(2β_i − W̃_ii)^{-1} ~ IG(1/W̃_i, 1)` where
//! `W̃_i = Σ_{j≠i} W̃_ij`, and eliminating `i` adds
//! `(2β_i − W̃_ii)^{-1} W̃_Ji W̃_iJ` to the rest. The last vertex has
//! `W̃_i = 0` and is drawn from the limit law IG(∞, 1).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::inv_gauss::IgParams;
use crate::linalg::{effective_weights, h_matrix, Cholesky, WeightMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct NuSample {
    pub beta: Vec<f64>,
    /// Vertices in the order they were eliminated.
    pub order: Vec<usize>,
}

/// `log ν^W(β)`, or `None` outside the support (`H_β` not positive definite).
pub fn nu_log_density(w: &WeightMatrix, beta: &[f64]) -> Result<Option<f64>> {
    let h = h_matrix(w, beta)?;
    let Ok(chol) = Cholesky::factor(&h) else {
        return Ok(None);
    };
    let n = w.n() as f64;
    Ok(Some(
        0.5 * n * (2.0 / std::f64::consts::PI).ln() - 0.5 * h.sum() - 0.5 * chol.log_det(),
    ))
}

/// `(2/π)^{n/2} 1{H_β > 0} e^{−½⟨1, H_β 1⟩} / √det H_β`.
pub fn nu_density(w: &WeightMatrix, beta: &[f64]) -> Result<f64> {
    Ok(nu_log_density(w, beta)?.map_or(0.0, f64::exp))
}

/// `⟨1, H_β 1⟩ = 2 Σ β_i − Σ_ij W_ij`.
pub fn quadratic_form_ones(w: &WeightMatrix, beta: &[f64]) -> f64 {
    2.0 * beta.iter().sum::<f64>() - w.matrix().sum()
}

/// Draws `β ~ ν^W`. With `order = None` the vertex with the largest current
/// `W̃_i` is eliminated first (ties to the lower index).
pub fn sample_beta<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rng: &mut R,
    order: Option<&[usize]>,
) -> Result<NuSample> {
    let n = w.n();
    if let Some(o) = order {
        let mut seen = vec![false; n];
        if o.len() != n || o.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
            return Err(Error::InvalidSubset("elimination order must be a permutation".into()));
        }
    }
    let mut wt: DMatrix<f64> = w.matrix().clone();
    let mut alive = vec![true; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut beta = vec![0.0; n];
    let mut done = Vec::with_capacity(n);
    for step in 0..n {
        let row_sum = |i: usize, alive: &[bool], wt: &DMatrix<f64>| -> f64 {
            (0..n).filter(|&j| j != i && alive[j]).map(|j| wt[(i, j)]).sum()
        };
        let (i, wi) = match order {
            Some(o) => (o[step], row_sum(o[step], &alive, &wt)),
            None => remaining
                .iter()
                .map(|&i| (i, row_sum(i, &alive, &wt)))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best }),
        };
        let last = step + 1 == n;
        if !last && !(wi > 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
        let g = IgParams::new(if last { f64::INFINITY } else { 1.0 / wi }, 1.0)?.sample(rng);
        beta[i] = 0.5 * (1.0 / g + wt[(i, i)]);
        alive[i] = false;
        remaining.retain(|&v| v != i);
        for &a in &remaining {
            let wai = wt[(a, i)];
            if wai == 0.0 {
                continue;
            }
            for &b in &remaining {
                wt[(a, b)] += g * wai * wt[(i, b)];
            }
        }
        done.push(i);
    }
    Ok(NuSample { beta, order: done })
}

/// Draws `β_J ~ ν_J^{W^J(β_I)}` given `β_I` (entries of `beta` outside `j`).
/// Returns values ordered as `j`.
pub fn conditional_sample<R: Rng + ?Sized>(
    w: &WeightMatrix,
    beta: &[f64],
    j: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let wj = effective_weights(w, beta, j)?;
    Ok(sample_beta(&wj, rng, None)?.beta)
}

/// `n` independent draws, deterministic for a given seed.
pub fn sample_beta_many(w: &WeightMatrix, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    crate::rng::try_par_collect(seed, n, |r| sample_beta(w, r, None).map(|s| s.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_positive_definite;
    use crate::quad;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn density_examples() {
        let w = WeightMatrix::from_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap();
        assert_eq!(nu_density(&w, &[0.2, 0.2]).unwrap(), 0.0);
        let beta = [0.7, 1.3];
        let h = h_matrix(&w, &beta).unwrap();
        assert_relative_eq!(quadratic_form_ones(&w, &beta), h.sum(), epsilon = 1e-15);
        let w1 = WeightMatrix::zeros(1);
        let mass = quad::integrate_to_infinity(|b| if b > 0.0 { nu_density(&w1, &[b]).unwrap() } else { 0.0 }, 0.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn two_vertex_density_integrates_to_one() {
        // ν on two vertices, integrated over the PD region β1 β2 > w²/4
        let w = 0.8;
        let wm = WeightMatrix::from_rows(&[vec![0., w], vec![w, 0.]]).unwrap();
        let outer = quad::integrate_to_infinity(
            |b1| {
                if b1 <= 0.0 {
                    return 0.0;
                }
                let lo = w * w / (4.0 * b1);
                // b2 = lo + s² removes the 1/√det singularity at the boundary
                quad::integrate_to_infinity(|s| 2.0 * s * nu_density(&wm, &[b1, lo + s * s]).unwrap(), 0.0, 1e-13, 1e-11).unwrap()
            },
            0.0,
            1e-11,
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(outer, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn samples_are_pd_and_orders_recorded() {
        let w = WeightMatrix::from_rows(&[
            vec![0.3, 1., 0., 2.],
            vec![1., 0., 0.5, 0.],
            vec![0., 0.5, 0., 1.],
            vec![2., 0., 1., 0.1],
        ])
        .unwrap();
        let mut r = rng(5);
        for _ in 0..2000 {
            let s = sample_beta(&w, &mut r, None).unwrap();
            assert!(is_positive_definite(&h_matrix(&w, &s.beta).unwrap()));
            assert_eq!(s.order[0], 0);
        }
        let s = sample_beta(&w, &mut r, Some(&[3, 2, 1, 0])).unwrap();
        assert_eq!(s.order, vec![3, 2, 1, 0]);
        assert!(sample_beta(&w, &mut r, Some(&[0, 0, 1, 2])).is_err());
    }

    #[test]
    fn disconnected_errors() {
        let w = WeightMatrix::from_rows(&[vec![0., 1., 0.], vec![1., 0., 0.], vec![0., 0., 0.]]).unwrap();
        assert!(matches!(sample_beta(&w, &mut rng(0), None), Err(Error::IsolatedVertex(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let w = WeightMatrix::from_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap();
        assert_eq!(sample_beta_many(&w, 3000, 9).unwrap(), sample_beta_many(&w, 3000, 9).unwrap());
    }
}
