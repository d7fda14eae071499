//! Reversible Markov jump processes: simulation, self-loop removal,
//! restriction to a vertex subset, and exact path-law oracles.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::linalg::{complement, select, Cholesky};

/// A discrete skeleton `X` with waiting times `T` (`T[n]` is spent at `X[n]`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JumpPath {
    pub states: Vec<usize>,
    pub waits: Vec<f64>,
}

impl JumpPath {
    pub fn new(states: Vec<usize>, waits: Vec<f64>) -> Result<Self> {
        if waits.len() > states.len() || waits.len() + 1 < states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), actual: waits.len() });
        }
        if let Some(t) = waits.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::domain(format!("nonpositive wait {t}")));
        }
        Ok(JumpPath { states, waits })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.waits.iter().sum()
    }

    /// Writes CSV with columns `step, vertex, wait` (empty wait if unknown).
    pub fn write_csv<W: std::io::Write>(&self, out: W, labels: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "vertex", "wait"])?;
        for (n, &x) in self.states.iter().enumerate() {
            let wait = self.waits.get(n).map(|t| format!("{t:.17e}")).unwrap_or_default();
            w.write_record([n.to_string(), labels[x].clone(), wait])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Conductances `C` (symmetric, diagonal = self-loops) and reversible measure `π`.
#[derive(Clone, Debug, PartialEq)]
pub struct MjpParams {
    c: DMatrix<f64>,
    pi: Vec<f64>,
    totals: Vec<f64>,
}

impl MjpParams {
    pub fn new(c: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = c.nrows();
        if c.ncols() != n || pi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: pi.len() });
        }
        let scale = c.amax();
        for i in 0..n {
            for j in 0..n {
                let x = c[(i, j)];
                if !(x >= 0.0 && x.is_finite()) || (x - c[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidWeights(format!("conductance ({i}, {j}) = {x}")));
                }
            }
            if !(pi[i] > 0.0 && pi[i].is_finite()) {
                return Err(Error::InvalidWeights(format!("measure at {i} is {}", pi[i])));
            }
        }
        let totals = (0..n).map(|i| c.row(i).sum()).collect();
        Ok(MjpParams { c, pi, totals })
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `C_i = Σ_k C_ik`.
    pub fn total(&self, i: usize) -> f64 {
        self.totals[i]
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)] / self.totals[i]
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)] / self.pi[i]
    }

    /// Total jump rate `q_i = C_i / π_i`.
    pub fn rate(&self, i: usize) -> f64 {
        self.totals[i] / self.pi[i]
    }

    pub fn p_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| self.p(i, j))
    }

    pub fn sampler(&self) -> Result<MjpSampler> {
        MjpSampler::new(self)
    }
}

/// Precomputed cumulative transition rows for fast stepping.
#[derive(Clone, Debug)]
pub struct MjpSampler {
    rows: Vec<Vec<(usize, f64)>>,
    rates: Vec<f64>,
}

impl MjpSampler {
    fn new(params: &MjpParams) -> Result<Self> {
        let n = params.n();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut row = Vec::new();
            for j in 0..n {
                let c = params.c[(i, j)];
                if c > 0.0 {
                    acc += c;
                    row.push((j, acc));
                }
            }
            rows.push(row);
        }
        let rates = (0..n).map(|i| params.rate(i)).collect();
        Ok(MjpSampler { rows, rates })
    }

    /// One step from `i`: `(wait, next)`.
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<(f64, usize)> {
        let row = &self.rows[i];
        let Some(&(_, total)) = row.last() else {
            return Err(Error::Absorbing(i));
        };
        let e: f64 = Exp1.sample(rng);
        let wait = e / self.rates[i];
        Ok((wait, pick(row, total, rng)))
    }

    pub fn next_vertex<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        let row = &self.rows[i];
        let Some(&(_, total)) = row.last() else {
            return Err(Error::Absorbing(i));
        };
        Ok(pick(row, total, rng))
    }
}

/// Samples from a cumulative table `(index, running sum)`.
pub(crate) fn pick<R: Rng + ?Sized>(row: &[(usize, f64)], total: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * total;
    let k = row.partition_point(|&(_, c)| c <= u);
    row[k.min(row.len() - 1)].0
}

/// Runs `n_steps` jumps from `rho`. The returned path has `n_steps + 1` states
/// and `n_steps` waits.
pub fn simulate_mjp<R: Rng + ?Sized>(
    params: &MjpParams,
    rho: usize,
    n_steps: usize,
    rng: &mut R,
) -> Result<JumpPath> {
    if rho >= params.n() {
        return Err(Error::NotFound(format!("start vertex {rho}")));
    }
    let s = params.sampler()?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut waits = Vec::with_capacity(n_steps);
    let mut x = rho;
    states.push(x);
    for _ in 0..n_steps {
        let (t, y) = s.step(x, rng)?;
        waits.push(t);
        states.push(y);
        x = y;
    }
    Ok(JumpPath { states, waits })
}

/// Collapses runs of equal states, summing their waits. Only completed runs
/// (followed by a different state) get a wait, so `|T| = |X| − 1`.
pub fn remove_self_loops(path: &JumpPath) -> JumpPath {
    let mut states = Vec::new();
    let mut waits = Vec::new();
    let mut acc = 0.0;
    for (n, &x) in path.states.iter().enumerate() {
        if states.last() != Some(&x) {
            if !states.is_empty() {
                waits.push(acc);
            }
            states.push(x);
            acc = 0.0;
        }
        acc += path.waits.get(n).copied().unwrap_or(0.0);
    }
    JumpPath { states, waits }
}

/// Subsamples the path at its visits to `j`, keeping the single wait at each
/// visit.
pub fn restrict_path(path: &JumpPath, j: &[usize]) -> Result<JumpPath> {
    let Some(&x0) = path.states.first() else {
        return Ok(JumpPath::default());
    };
    if !j.contains(&x0) {
        return Err(Error::InvalidSubset(format!("start {x0} is not in J")));
    }
    let mut states = Vec::new();
    let mut waits = Vec::new();
    for (n, &x) in path.states.iter().enumerate() {
        if j.contains(&x) {
            states.push(x);
            if let Some(&t) = path.waits.get(n) {
                waits.push(t);
            }
        }
    }
    Ok(JumpPath { states, waits })
}

/// Streaming form of `remove_self_loops ∘ restrict_path`, fed one
/// `(state, wait)` pair at a time.
#[derive(Clone, Debug)]
pub struct LoopFreeRestrictor {
    in_j: Vec<bool>,
    path: JumpPath,
    acc: f64,
}

impl LoopFreeRestrictor {
    pub fn new(n: usize, j: &[usize]) -> Self {
        let mut in_j = vec![false; n];
        for &v in j {
            in_j[v] = true;
        }
        LoopFreeRestrictor { in_j, path: JumpPath::default(), acc: 0.0 }
    }

    pub fn push(&mut self, x: usize, wait: f64) {
        if !self.in_j[x] {
            return;
        }
        if self.path.states.last() != Some(&x) {
            if !self.path.states.is_empty() {
                self.path.waits.push(self.acc);
            }
            self.path.states.push(x);
            self.acc = 0.0;
        }
        self.acc += wait;
    }

    /// Feeds states from `next` (waits ignored) until `len` states are recorded.
    pub fn run_until<F: FnMut() -> Result<usize>>(&mut self, len: usize, mut next: F) -> Result<()> {
        let mut steps = 0u64;
        while self.len() < len {
            steps += 1;
            if steps > 100_000_000 {
                return Err(Error::Guard("restricted path did not complete".into()));
            }
            let x = next()?;
            self.push(x, 0.0);
        }
        Ok(())
    }

    /// Number of loop-free restricted states recorded so far.
    pub fn len(&self) -> usize {
        self.path.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.path.states
    }

    pub fn into_path(self) -> JumpPath {
        self.path
    }
}

/// Parameters of the process watched only on `j` (ordered as given):
/// `C^J = C_JJ + C_JI (diag(C_I) − C_II)^{-1} C_IJ`, `π` restricted to `J`.
pub fn restricted_params(params: &MjpParams, j: &[usize]) -> Result<MjpParams> {
    if j.len() < 2 {
        return Err(Error::InvalidSubset("restriction needs |J| >= 2".into()));
    }
    let i = complement(params.n(), j)?;
    let mut c = select(&params.c, j, j);
    if !i.is_empty() {
        let mut a = -select(&params.c, &i, &i);
        for (k, &v) in i.iter().enumerate() {
            a[(k, k)] += params.totals[v];
        }
        let chol = Cholesky::factor(&a).map_err(|_| {
            Error::InvalidSubset("the chain cannot leave the complement of J".into())
        })?;
        let c_ij = select(&params.c, &i, j);
        c += c_ij.transpose() * chol.solve(&c_ij);
        for a in 0..j.len() {
            for b in a + 1..j.len() {
                let m = 0.5 * (c[(a, b)] + c[(b, a)]);
                c[(a, b)] = m;
                c[(b, a)] = m;
            }
        }
    }
    let pi = j.iter().map(|&v| params.pi[v]).collect();
    MjpParams::new(c, pi)
}

/// Parameters with self-loops removed: `C^≠` has zero diagonal, `π` is kept,
/// so `q^≠_i = q_i − q_ii`.
pub fn drop_loop_params(params: &MjpParams) -> Result<MjpParams> {
    let mut c = params.c.clone();
    for i in 0..params.n() {
        c[(i, i)] = 0.0;
    }
    let out = MjpParams::new(c, params.pi.clone())?;
    if let Some(i) = (0..out.n()).find(|&i| out.totals[i] <= 0.0) {
        return Err(Error::Absorbing(i));
    }
    Ok(out)
}

/// Largest number of sequences [`exact_path_law`] will enumerate.
pub const MAX_ENUMERATED: usize = 5_000_000;

/// Exact law of `(X_0 = ρ, X_1, …, X_k)` for the discrete skeleton, over
/// sequences of positive probability.
pub fn exact_path_law(params: &MjpParams, rho: usize, k: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    if k > 12 || params.n() > 8 {
        return Err(Error::Guard(format!("k = {k} > 12 or {} vertices > 8", params.n())));
    }
    if rho >= params.n() {
        return Err(Error::NotFound(format!("start vertex {rho}")));
    }
    let p = params.p_matrix();
    let mut layer = vec![(vec![rho], 1.0)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (seq, prob) in layer {
            let x = *seq.last().expect("nonempty");
            if params.totals[x] <= 0.0 {
                return Err(Error::Absorbing(x));
            }
            for y in 0..params.n() {
                if p[(x, y)] > 0.0 {
                    let mut s = seq.clone();
                    s.push(y);
                    next.push((s, prob * p[(x, y)]));
                }
            }
            if next.len() > MAX_ENUMERATED {
                return Err(Error::Guard(format!("more than {MAX_ENUMERATED} sequences")));
            }
        }
        layer = next;
    }
    Ok(layer.into_iter().collect())
}

/// Law of the first `k + 1` states of the loop-free restriction to `j` of
/// the skeleton started at `rho`, by pushing mass forward until less than
/// `tol` remains unresolved. Returns the law and the unresolved mass.
pub fn restricted_path_law(
    params: &MjpParams,
    rho: usize,
    j: &[usize],
    k: usize,
    tol: f64,
) -> Result<(BTreeMap<Vec<usize>, f64>, f64)> {
    complement(params.n(), j)?;
    if !j.contains(&rho) {
        return Err(Error::InvalidSubset(format!("start {rho} is not in J")));
    }
    let n = params.n();
    let mut in_j = vec![false; n];
    for &v in j {
        in_j[v] = true;
    }
    let p = params.p_matrix();
    let mut done: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    // (restricted loop-free prefix, current vertex) -> mass
    let mut live: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
    if k == 0 {
        done.insert(vec![rho], 1.0);
        return Ok((done, 0.0));
    }
    live.insert((vec![rho], rho), 1.0);
    let mut pending = 1.0;
    let mut iterations = 0usize;
    while pending >= tol {
        iterations += 1;
        if iterations > 1_000_000 {
            return Err(Error::Guard("push-forward did not converge".into()));
        }
        let mut next: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
        for ((prefix, x), mass) in live {
            for y in 0..n {
                let pxy = p[(x, y)];
                if pxy <= 0.0 {
                    continue;
                }
                let m = mass * pxy;
                if in_j[y] && prefix.last() != Some(&y) {
                    let mut s = prefix.clone();
                    s.push(y);
                    if s.len() == k + 1 {
                        *done.entry(s).or_insert(0.0) += m;
                        continue;
                    }
                    *next.entry((s, y)).or_insert(0.0) += m;
                } else {
                    *next.entry((prefix.clone(), y)).or_insert(0.0) += m;
                }
            }
        }
        live = next;
        pending = live.values().sum();
    }
    Ok((done, pending))
}

/// `½ Σ |p − q|` over the union of supports.
pub fn tv_distance(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let mut s = 0.0;
    for (key, pa) in a {
        s += (pa - b.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, pb) in b {
        if !a.contains_key(key) {
            s += pb.abs();
        }
    }
    0.5 * s
}
