//! Vertex-reinforced jump processes and edge-reinforced random walks.
//!
//! All mixture samplers work in the exchangeable time scale
//! `D(t) = Σ_i (L_i(t)² − 1)`, where the VRJP is a mixture of reversible
//! Markov jump processes with rates `½ W_ij e^{u_j − u_i}`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};

use crate::beta::sample_beta;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::jump::{pick, simulate_mjp, JumpPath, LoopFreeRestrictor, MjpParams};
use crate::linalg::{conductances, drop_diagonal, effective_weights, u_field, wire_weights, WeightMatrix};

fn check_start(w: &WeightMatrix, rho: usize) -> Result<()> {
    if rho >= w.n() {
        return Err(Error::NotFound(format!("start vertex {rho}")));
    }
    Ok(())
}

fn check_loop_free(w: &WeightMatrix) -> Result<()> {
    if let Some(i) = (0..w.n()).find(|&i| w.get(i, i) != 0.0) {
        return Err(Error::InvalidWeights(format!("VRJP weights need a zero diagonal (vertex {i})")));
    }
    Ok(())
}

/// Direct VRJP in its original time scale.
///
/// During a sojourn at `i` only `L_i` grows, and it does not enter the exit
/// rates `W_ij L_j` (`j ≠ i`), so each sojourn is an exact exponential race.
#[derive(Clone, Debug)]
pub struct VrjpWalker<'a> {
    w: &'a WeightMatrix,
    neighbors: Vec<Vec<(usize, f64)>>,
    local: Vec<f64>,
    current: usize,
    rates: Vec<(usize, f64)>,
}

impl<'a> VrjpWalker<'a> {
    pub fn new(w: &'a WeightMatrix, rho: usize) -> Result<Self> {
        check_start(w, rho)?;
        check_loop_free(w)?;
        let n = w.n();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| w.get(i, j) > 0.0).map(|j| (j, w.get(i, j))).collect())
            .collect();
        Ok(VrjpWalker { w, neighbors, local: vec![1.0; n], current: rho, rates: Vec::new() })
    }

    pub fn current(&self) -> usize {
        self.current
    }

    /// Local times `L_j = 1 + time spent at j`.
    pub fn local_times(&self) -> &[f64] {
        &self.local
    }

    /// Performs one sojourn and jump; returns `(wait, next)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(f64, usize)> {
        let i = self.current;
        self.rates.clear();
        let mut total = 0.0;
        for &(j, wij) in &self.neighbors[i] {
            total += wij * self.local[j];
            self.rates.push((j, total));
        }
        if self.rates.is_empty() {
            return Err(Error::Absorbing(i));
        }
        let e: f64 = Exp1.sample(rng);
        let wait = e / total;
        let next = pick(&self.rates, total, rng);
        self.local[i] += wait;
        self.current = next;
        Ok((wait, next))
    }

    pub fn weights(&self) -> &WeightMatrix {
        self.w
    }
}

/// Runs `n_steps` jumps of the VRJP from `rho` (original time scale).
pub fn simulate_vrjp_direct<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rho: usize,
    n_steps: usize,
    rng: &mut R,
) -> Result<JumpPath> {
    let mut walker = VrjpWalker::new(w, rho)?;
    let mut path = JumpPath { states: vec![rho], waits: Vec::with_capacity(n_steps) };
    for _ in 0..n_steps {
        let (t, x) = walker.step(rng)?;
        path.waits.push(t);
        path.states.push(x);
    }
    Ok(path)
}

/// Maps waits to the exchangeable scale: a sojourn of length `s` at `i`
/// becomes `(L_i + s)² − L_i²` with `L_i` the local time when it starts.
pub fn time_change(path: &JumpPath, n_vertices: usize) -> Result<JumpPath> {
    let mut local = vec![1.0; n_vertices];
    let mut waits = Vec::with_capacity(path.waits.len());
    for (&x, &s) in path.states.iter().zip(&path.waits) {
        if x >= n_vertices {
            return Err(Error::NotFound(format!("vertex {x}")));
        }
        let l = local[x];
        // (l + s)² − l², written without cancellation
        waits.push(s * (2.0 * l + s));
        local[x] = l + s;
    }
    Ok(JumpPath { states: path.states.clone(), waits })
}

/// Conditional Markov parameters given `β`: `C_ij = W_ij e^{u_i + u_j}`,
/// `π_i = 2e^{2u_i}`, with `u` pinned at `rho`.
pub fn mixture_params(w: &WeightMatrix, beta: &[f64], rho: usize) -> Result<MjpParams> {
    let u = u_field(w, beta, rho)?;
    conductances(w, &u)
}

/// Draws the random environment `β ~ ν^W` and returns the conditional chain.
pub fn sample_environment<R: Rng + ?Sized>(w: &WeightMatrix, rho: usize, rng: &mut R) -> Result<MjpParams> {
    check_start(w, rho)?;
    check_loop_free(w)?;
    let beta = sample_beta(w, rng, None)?.beta;
    mixture_params(w, &beta, rho)
}

/// VRJP as a mixture of Markov jump processes (exchangeable time scale).
pub fn simulate_vrjp_mixture<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rho: usize,
    n_steps: usize,
    rng: &mut R,
) -> Result<JumpPath> {
    let params = sample_environment(w, rho, rng)?;
    simulate_mjp(&params, rho, n_steps, rng)
}

/// Inserts self-loops at rate `½ W_ii` into a loop-free exchangeable-scale
/// path: each sojourn of length `s` at `i` gets a Poisson(½ W_ii s) number of
/// loop events at uniform positions.
pub fn decorate_self_loops<R: Rng + ?Sized>(path: &JumpPath, diag: &[f64], rng: &mut R) -> Result<JumpPath> {
    if let Some(d) = diag.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::InvalidWeights(format!("negative loop weight {d}")));
    }
    let mut out = JumpPath { states: Vec::with_capacity(path.states.len()), waits: Vec::new() };
    for (n, &x) in path.states.iter().enumerate() {
        let Some(&s) = path.waits.get(n) else {
            out.states.push(x);
            continue;
        };
        let rate = 0.5 * diag[x] * s;
        let k = if rate > 0.0 {
            Poisson::new(rate).map_err(|e| Error::domain(e.to_string()))?.sample(rng) as usize
        } else {
            0
        };
        let mut cuts: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * s).collect();
        cuts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for c in cuts {
            out.states.push(x);
            out.waits.push(c - prev);
            prev = c;
        }
        out.states.push(x);
        out.waits.push(s - prev);
    }
    Ok(out)
}

/// Linearly edge-reinforced random walk: each step picks an incident edge
/// with probability proportional to its current weight, which then grows by 1.
/// Initial weights are the graph's edge weights.
pub fn simulate_errw<R: Rng + ?Sized>(g: &Graph, rho: usize, n_steps: usize, rng: &mut R) -> Result<Vec<usize>> {
    if rho >= g.n_vertices() {
        return Err(Error::NotFound(format!("start vertex {rho}")));
    }
    let mut weights: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    let mut x = rho;
    let mut seq = Vec::with_capacity(n_steps + 1);
    seq.push(x);
    let mut table = Vec::new();
    for _ in 0..n_steps {
        table.clear();
        let mut acc = 0.0;
        for (k, &(_, e)) in g.neighbors(x).iter().enumerate() {
            acc += weights[e];
            table.push((k, acc));
        }
        let k = pick(&table, acc, rng);
        let (y, e) = g.neighbors(x)[k];
        weights[e] += 1.0;
        x = y;
        seq.push(x);
    }
    Ok(seq)
}

/// ERRW as a mixture: `W_e ~ Gamma(a_e, 1)` independently (with `a_e` the
/// graph's edge weights), then the discrete skeleton of the VRJP with
/// weights `W`.
pub fn errw_as_mixture<R: Rng + ?Sized>(g: &Graph, rho: usize, n_steps: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut weights = Vec::with_capacity(g.n_edges());
    for e in g.edges() {
        let d = Gamma::new(e.weight, 1.0).map_err(|err| Error::domain(err.to_string()))?;
        weights.push(d.sample(rng));
    }
    let w = g.weight_matrix_with(&weights);
    let params = sample_environment(&w, rho, rng)?;
    discrete_skeleton(&params, rho, n_steps, rng)
}

/// `n_steps` jumps of the discrete chain `p_ij = C_ij / C_i`.
pub fn discrete_skeleton<R: Rng + ?Sized>(params: &MjpParams, rho: usize, n_steps: usize, rng: &mut R) -> Result<Vec<usize>> {
    let s = params.sampler()?;
    let mut x = rho;
    let mut seq = Vec::with_capacity(n_steps + 1);
    seq.push(x);
    for _ in 0..n_steps {
        x = s.next_vertex(x, rng)?;
        seq.push(x);
    }
    Ok(seq)
}

/// Which β-law feeds the restricted mixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingForm {
    /// `β_{I∪{ρ}} ~ ν^{Ŵ}` on the wired graph.
    Wired,
    /// `β ~ ν^W` on the whole vertex set.
    Full,
}

/// Effective loop-free weights `W^{J≠}(β_I)` for one draw of the mixing law.
pub fn sample_restricted_weights<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rho: usize,
    j: &[usize],
    form: MixingForm,
    rng: &mut R,
) -> Result<WeightMatrix> {
    check_start(w, rho)?;
    if !j.contains(&rho) {
        return Err(Error::InvalidSubset(format!("start {rho} is not in J")));
    }
    let n = w.n();
    let mut beta = vec![0.0; n];
    match form {
        MixingForm::Full => beta = sample_beta(w, rng, None)?.beta,
        MixingForm::Wired => {
            let (wh, verts) = wire_weights(w, j, rho)?;
            let b = sample_beta(&wh, rng, None)?.beta;
            for (k, &v) in verts.iter().enumerate() {
                beta[v] = b[k];
            }
        }
    }
    let wj = effective_weights(w, &beta, j)?;
    let zeros = vec![0.0; j.len()];
    Ok(drop_diagonal(&wj, &zeros)?.0)
}

/// First `k + 1` states of the loop-free restriction of the direct VRJP to `j`.
pub fn restricted_direct_skeleton<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rho: usize,
    j: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut walker = VrjpWalker::new(w, rho)?;
    let mut r = LoopFreeRestrictor::new(w.n(), j);
    r.push(rho, 0.0);
    r.run_until(k + 1, || walker.step(rng).map(|(_, x)| x))?;
    Ok(r.states()[..=k].to_vec())
}

/// First `k + 1` states of a fresh VRJP on `J` with weights `W^{J≠}(β_I)`,
/// in `J`'s ambient labels.
pub fn restricted_mixture_skeleton<R: Rng + ?Sized>(
    w: &WeightMatrix,
    rho: usize,
    j: &[usize],
    k: usize,
    form: MixingForm,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let wj = sample_restricted_weights(w, rho, j, form, rng)?;
    let start = j.iter().position(|&v| v == rho).expect("checked");
    let path = simulate_vrjp_direct(&wj, start, k, rng)?;
    Ok(path.states.iter().map(|&a| j[a]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::remove_self_loops;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn triangle() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![0., 1., 2.], vec![1., 0., 0.5], vec![2., 0.5, 0.]]).unwrap()
    }

    #[test]
    fn first_step_law() {
        let w = triangle();
        let mut r = rng(1);
        let n = 100_000;
        let mut to2 = 0usize;
        let mut wait = 0.0;
        for _ in 0..n {
            let p = simulate_vrjp_direct(&w, 0, 1, &mut r).unwrap();
            if p.states[1] == 2 {
                to2 += 1;
            }
            wait += p.waits[0];
        }
        let f = to2 as f64 / n as f64;
        assert!((f - 2.0 / 3.0).abs() < 4.0 * (2.0 / 9.0 / n as f64).sqrt());
        let mean = wait / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 4.0 * (1.0 / 3.0) / (n as f64).sqrt());
    }

    #[test]
    fn time_change_examples() {
        let p = JumpPath::new(vec![0, 1], vec![2.0]).unwrap();
        let t = time_change(&p, 2).unwrap();
        assert_eq!(t.waits, vec![(1.0f64 + 2.0).powi(2) - 1.0]);
        let mut r = rng(3);
        let p = simulate_vrjp_direct(&triangle(), 0, 50, &mut r).unwrap();
        let t = time_change(&p, 3).unwrap();
        assert_eq!(t.states, p.states);
        assert!(t.waits.iter().all(|&x| x > 0.0));
        // D at the end equals Σ (L_i² − 1)
        let mut local = [1.0f64; 3];
        for (&x, &s) in p.states.iter().zip(&p.waits) {
            local[x] += s;
        }
        let d: f64 = local.iter().map(|l| l * l - 1.0).sum();
        assert_relative_eq!(t.total_time(), d, max_relative = 1e-12);
    }

    #[test]
    fn conditional_chain_matches_formula() {
        let w = triangle();
        let mut r = rng(4);
        let beta = sample_beta(&w, &mut r, None).unwrap().beta;
        let params = mixture_params(&w, &beta, 0).unwrap();
        let u = u_field(&w, &beta, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let lhs = params.pi()[i] * params.q(i, j);
                let rhs = params.pi()[j] * params.q(j, i);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0));
            }
            if i != 0 {
                // p = e^{-u} (2β)^{-1} W e^{u}
                for j in 0..3 {
                    let p = (-u[i]).exp() * w.get(i, j) * u[j].exp() / (2.0 * beta[i]);
                    assert_relative_eq!(params.p(i, j), p, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn decorate_then_remove_is_identity() {
        let mut r = rng(6);
        let p = simulate_vrjp_mixture(&triangle(), 0, 40, &mut r).unwrap();
        let same = decorate_self_loops(&p, &[0.0; 3], &mut r).unwrap();
        assert_eq!(same, p);
        let d = decorate_self_loops(&p, &[3.0, 1.0, 0.5], &mut r).unwrap();
        assert!(d.len() >= p.len());
        let back = remove_self_loops(&d);
        assert_eq!(back.states, p.states);
        for (a, b) in back.waits.iter().zip(&p.waits) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert!(decorate_self_loops(&p, &[-1.0, 0., 0.], &mut r).is_err());
    }

    #[test]
    fn decoration_count_mean() {
        let mut r = rng(7);
        let p = JumpPath::new(vec![0, 1], vec![2.0]).unwrap();
        let n = 100_000;
        let total: usize = (0..n).map(|_| decorate_self_loops(&p, &[1.5, 0.], &mut r).unwrap().len() - 2).sum();
        let mean = total as f64 / n as f64;
        let expect = 0.5 * 1.5 * 2.0;
        assert!((mean - expect).abs() < 4.0 * (expect / n as f64).sqrt());
    }

    #[test]
    fn errw_star_repeat() {
        // star: center 0, leaves 1 and 2, a = 1
        let g = Graph::from_indexed(3, &[(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let mut r = rng(8);
        let n = 100_000;
        let mut repeat = 0usize;
        let mut first_leaf1 = 0usize;
        for _ in 0..n {
            let s = simulate_errw(&g, 0, 3, &mut r).unwrap();
            assert_eq!(s[2], 0);
            if s[3] == s[1] {
                repeat += 1;
            }
            if s[1] == 1 {
                first_leaf1 += 1;
            }
        }
        // the traversed edge has weight 3 after going out and back, vs 1
        let p = repeat as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75 * 0.25 / n as f64).sqrt(), "{p}");
        let q = first_leaf1 as f64 / n as f64;
        assert!((q - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn restricted_weights_are_loop_free() {
        let w = WeightMatrix::from_rows(&[
            vec![0., 1., 0., 1.],
            vec![1., 0., 1., 0.],
            vec![0., 1., 0., 1.],
            vec![1., 0., 1., 0.],
        ])
        .unwrap();
        let mut r = rng(9);
        for form in [MixingForm::Wired, MixingForm::Full] {
            let wj = sample_restricted_weights(&w, 0, &[0, 2], form, &mut r).unwrap();
            assert_eq!(wj.get(0, 0), 0.0);
            assert!(wj.get(0, 1) > 0.0);
        }
        let s = restricted_direct_skeleton(&w, 0, &[0, 2], 4, &mut r).unwrap();
        assert_eq!(s, vec![0, 2, 0, 2, 0]);
    }
}
