//! Renormalization flow of effective weights on subdivided graphs, with the
//! moment bounds it satisfies.
//!
//! A [`FlowState`] at level `l` holds, for every base edge, the weights of
//! its `2^l` pieces, the diagonal of `W^{(l)}` at its `2^l − 1` interior
//! vertices, and optionally the shifted betas `β^{(l)≠}` there. One
//! [`flow_step`] eliminates the midpoints `Λ_l \ Λ_{l−1}`:
//!
//! ```text
//! g_v = (2β_v^{(l)≠})^{-1}          (fresh: g_v ~ IG(1/(W_e' + W_e''), 1))
//! W^{(l−1)}_ē = W_e' W_e'' g_v
//! W^{(l−1)}_v̄v̄ = W^{(l)}_v̄v̄ + W_e¹² g_v¹ + W_e²² g_v²
//! 2β_v̄^{(l−1)≠} = 2β_v̄^{(l)≠} − W_e¹² g_v¹ − W_e²² g_v²
//! ```
//!
//! Weights are stored as logarithms: after a few levels they routinely fall
//! below the smallest normal `f64`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::beta::sample_beta;
use crate::error::{Error, Result};
use crate::graph::{Graph, SubdividedGraph};
use crate::inv_gauss::{c_alpha, IgParams, C2};
use crate::linalg::WeightMatrix;
use crate::stats::{batch_means, MeanSe, BATCHES};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    base: Graph,
    level: u32,
    log_weights: Vec<Vec<f64>>,
    interior_diag: Vec<Vec<f64>>,
    base_diag: Vec<f64>,
    loop_betas: Option<Vec<Vec<f64>>>,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl FlowState {
    /// Level-`r` state from weights in `E_r` order; midpoint betas are drawn
    /// afresh at every step.
    pub fn fresh(base: &Graph, r: u32, weights: &[f64]) -> Result<Self> {
        let pieces = check_top(base, r, weights)?;
        Ok(FlowState {
            base: base.clone(),
            level: r,
            log_weights: weights.chunks(pieces).map(|c| c.iter().map(|w| w.ln()).collect()).collect(),
            interior_diag: vec![vec![0.0; pieces - 1]; base.n_edges()],
            base_diag: vec![0.0; base.n_vertices()],
            loop_betas: None,
        })
    }

    /// Level-`r` state carrying a full β on `Λ_r` (in [`SubdividedGraph`]
    /// vertex order). The flow then reads midpoint betas from the state and
    /// is pathwise equal to the Schur complement with this β.
    pub fn coupled(base: &Graph, r: u32, weights: &[f64], beta: &[f64]) -> Result<Self> {
        let mut s = Self::fresh(base, r, weights)?;
        let pieces = 1usize << r;
        let n0 = base.n_vertices();
        let expected = n0 + base.n_edges() * (pieces - 1);
        if beta.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: beta.len() });
        }
        let lb: Vec<Vec<f64>> = (0..base.n_edges())
            .map(|e| beta[n0 + e * (pieces - 1)..n0 + (e + 1) * (pieces - 1)].to_vec())
            .collect();
        if let Some(b) = lb.iter().flatten().find(|b| !(**b > 0.0)) {
            return Err(Error::InconsistentFlow(format!("nonpositive beta {b}")));
        }
        s.loop_betas = Some(lb);
        Ok(s)
    }

    /// Coupled level-`r` state with `β ~ ν^W` on `Λ_r`. Returns the state and β.
    pub fn sample_coupled<R: Rng + ?Sized>(base: &Graph, r: u32, weights: &[f64], rng: &mut R) -> Result<(Self, Vec<f64>)> {
        let sg = SubdividedGraph::build(base, r)?;
        let w = sg.weight_matrix(weights)?;
        let beta = sample_beta(&w, rng, None)?.beta;
        Ok((Self::coupled(base, r, weights, &beta)?, beta))
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_coupled(&self) -> bool {
        self.loop_betas.is_some()
    }

    /// `ln W^{(l)}` in `E_l` order.
    pub fn log_weights(&self) -> Vec<f64> {
        self.log_weights.iter().flatten().copied().collect()
    }

    /// `W^{(l)}` in `E_l` order (may underflow to 0).
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().flatten().map(|x| x.exp()).collect()
    }

    /// Weights of the pieces of one base edge.
    pub fn edge_log_weights(&self, edge: usize) -> &[f64] {
        &self.log_weights[edge]
    }

    /// Diagonal of `W^{(l)}` on `Λ_l` in [`SubdividedGraph`] vertex order.
    pub fn diagonal(&self) -> Vec<f64> {
        self.base_diag.iter().chain(self.interior_diag.iter().flatten()).copied().collect()
    }

    /// `β^{(l)≠}` at the interior vertices of `Λ_l`, edge-major, or `None`
    /// for a fresh flow.
    pub fn loop_betas(&self) -> Option<Vec<f64>> {
        self.loop_betas.as_ref().map(|lb| lb.iter().flatten().copied().collect())
    }

    /// `W^{(l)≠}` as a dense matrix on `Λ_l`.
    pub fn loop_free_weights(&self) -> Result<WeightMatrix> {
        SubdividedGraph::build(&self.base, self.level)?.weight_matrix(&self.weights())
    }
}

fn check_top(base: &Graph, r: u32, weights: &[f64]) -> Result<usize> {
    if r > 24 {
        return Err(Error::Level { level: r, reason: "flow supports r <= 24".into() });
    }
    if base.n_edges() == 0 {
        return Err(Error::InvalidGraph("base graph has no edges".into()));
    }
    let pieces = 1usize << r;
    if weights.len() != base.n_edges() * pieces {
        return Err(Error::DimensionMismatch { expected: base.n_edges() * pieces, actual: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidWeights(format!("flow weights must be positive and finite, got {w}")));
    }
    Ok(pieces)
}

/// One level down: `l → l − 1`.
pub fn flow_step<R: Rng + ?Sized>(state: &FlowState, rng: &mut R) -> Result<FlowState> {
    let l = state.level;
    if l == 0 {
        return Err(Error::Level { level: 0, reason: "flow_step needs l >= 1".into() });
    }
    let half = 1usize << (l - 1);
    let mut out = FlowState {
        base: state.base.clone(),
        level: l - 1,
        log_weights: Vec::with_capacity(state.log_weights.len()),
        interior_diag: Vec::with_capacity(state.log_weights.len()),
        base_diag: state.base_diag.clone(),
        loop_betas: state.loop_betas.as_ref().map(|_| Vec::new()),
    };
    for (e, lw) in state.log_weights.iter().enumerate() {
        // ln g_v for the midpoints, v at odd positions 2i+1 of 2^l
        let mut ln_g = Vec::with_capacity(half);
        for i in 0..half {
            let g = match &state.loop_betas {
                Some(lb) => (2.0 * lb[e][2 * i]).recip().ln(),
                None => {
                    let mu = (-ln_add(lw[2 * i], lw[2 * i + 1])).exp();
                    IgParams::new(mu, 1.0)?.sample(rng).ln()
                }
            };
            if !g.is_finite() {
                return Err(Error::InconsistentFlow(format!("midpoint {} on edge {e}: ln g = {g}", 2 * i + 1)));
            }
            ln_g.push(g);
        }
        out.log_weights.push((0..half).map(|i| lw[2 * i] + lw[2 * i + 1] + ln_g[i]).collect());
        // gain[k] is added to the diagonal at level-(l-1) position k = 0..=half
        let mut gain = vec![0.0; half + 1];
        for i in 0..half {
            gain[i] += (2.0 * lw[2 * i] + ln_g[i]).exp();
            gain[i + 1] += (2.0 * lw[2 * i + 1] + ln_g[i]).exp();
        }
        let edge = state.base.edges()[e];
        out.base_diag[edge.tail] += gain[0];
        out.base_diag[edge.head] += gain[half];
        out.interior_diag.push((1..half).map(|k| state.interior_diag[e][2 * k - 1] + gain[k]).collect());
        if let (Some(lb), Some(nb)) = (&state.loop_betas, &mut out.loop_betas) {
            let mut row = Vec::with_capacity(half.saturating_sub(1));
            for k in 1..half {
                let b = lb[e][2 * k - 1] - 0.5 * gain[k];
                if !(b > 0.0) {
                    return Err(Error::InconsistentFlow(format!(
                        "updated loop beta {b} at position {k}/{half} of edge {e}"
                    )));
                }
                row.push(b);
            }
            nb.push(row);
        }
    }
    Ok(out)
}

/// Iterates [`flow_step`] down to level `l`. Returns the final state.
pub fn run_flow<R: Rng + ?Sized>(state: FlowState, l: u32, rng: &mut R) -> Result<FlowState> {
    run_flow_trace(state, l, rng).map(|mut t| t.pop().expect("nonempty trace"))
}

/// Like [`run_flow`] but returns every intermediate state, top level first.
pub fn run_flow_trace<R: Rng + ?Sized>(state: FlowState, l: u32, rng: &mut R) -> Result<Vec<FlowState>> {
    if l > state.level {
        return Err(Error::Level { level: l, reason: format!("target above current level {}", state.level) });
    }
    let mut trace = vec![state];
    while trace.last().expect("nonempty").level > l {
        let next = flow_step(trace.last().expect("nonempty"), rng)?;
        trace.push(next);
    }
    Ok(trace)
}

/// Law of the i.i.d. input weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightDist {
    Const { w: f64 },
    Gamma { a: f64 },
}

impl WeightDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            WeightDist::Const { w } => Ok(w),
            WeightDist::Gamma { a } => Ok(Gamma::new(a, 1.0).map_err(|e| Error::domain(e.to_string()))?.sample(rng)),
        }
    }

    /// `E[W^α]`.
    pub fn moment(&self, alpha: f64) -> f64 {
        match *self {
            WeightDist::Const { w } => w.powf(alpha),
            WeightDist::Gamma { a } => (ln_gamma(a + alpha) - ln_gamma(a)).exp(),
        }
    }

    /// `E[ln W]`.
    pub fn mean_log(&self) -> f64 {
        match *self {
            WeightDist::Const { w } => w.ln(),
            WeightDist::Gamma { a } => digamma(a),
        }
    }

    fn validate(self) -> Result<Self> {
        let ok = match self {
            WeightDist::Const { w } => w > 0.0 && w.is_finite(),
            WeightDist::Gamma { a } => a > 0.0 && a.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::domain(format!("invalid weight law {self:?}")))
        }
    }
}

impl FromStr for WeightDist {
    type Err = Error;

    /// `gamma:a=<shape>` or `const:w=<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let param = |key: &str| -> Result<f64> {
            rest.split(',')
                .filter_map(|kv| kv.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .ok_or_else(|| Error::Parse(format!("weight law `{s}` lacks `{key}=`")))?
                .1
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("weight law `{s}`: {e}")))
        };
        match kind.trim() {
            "gamma" => WeightDist::Gamma { a: param("a")? },
            "const" => WeightDist::Const { w: param("w")? },
            other => return Err(Error::Parse(format!("unknown weight law `{other}`"))),
        }
        .validate()
    }
}

/// I.i.d. weights for every edge of `E_r`.
pub fn sample_weights<R: Rng + ?Sized>(base: &Graph, r: u32, dist: &WeightDist, rng: &mut R) -> Result<Vec<f64>> {
    (0..base.n_edges() << r).map(|_| dist.sample(rng)).collect()
}

/// Fresh flow from i.i.d. weights on `E_r` down to level `l`.
pub fn run_flow_iid<R: Rng + ?Sized>(base: &Graph, r: u32, l: u32, dist: &WeightDist, rng: &mut R) -> Result<FlowState> {
    let w = sample_weights(base, r, dist, rng)?;
    run_flow(FlowState::fresh(base, r, &w)?, l, rng)
}

/// Right-hand sides of the decay bounds from level `r` to level `l`.
///
/// Per-`m` terms are indexed by `m = l..=r`; the bound is their minimum.
/// Terms are kept in log form as well since they shrink doubly exponentially.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub r: u32,
    pub l: u32,
    /// `(2^{−α})^{r−l} E[W^α]`, for `α ∈ [0, 1]` with a moment given.
    pub phase1: Option<f64>,
    /// `ln` of each term `C_α^{−1}(C_α 2^{−α(r−m)} E[W^α])^{2^{m−l}}`, for `α ∈ [0, ½)`.
    pub combined_ln_terms: Vec<f64>,
    pub combined: Option<f64>,
    pub combined_ln: Option<f64>,
    /// Each term `2^{m−l}(E[ln W] − (r−m) ln 2 + c₂) − c₂`.
    pub log_terms: Vec<f64>,
    pub log_bound: Option<f64>,
    /// Unclamped `m₀` and `m₁`.
    pub m0_raw: Option<i64>,
    pub m1_raw: Option<i64>,
    /// Minimizers after clamping to `{l, …, r}`.
    pub m0: Option<u32>,
    pub m1: Option<u32>,
}

fn clamp_level(m: i64, l: u32, r: u32) -> u32 {
    m.clamp(l as i64, r as i64) as u32
}

/// The decay bounds at `(α, r, l)` given `E[W^α]` and/or `E[ln W]`.
///
/// With `α = 0` every combined term equals 1; the minimizer is reported as `l`.
pub fn moment_bound(alpha: f64, moment: Option<f64>, mean_log: Option<f64>, r: u32, l: u32) -> Result<BoundReport> {
    if l > r {
        return Err(Error::Level { level: l, reason: format!("l must not exceed r = {r}") });
    }
    if r - l > 60 {
        return Err(Error::Level { level: r, reason: "r - l above 60".into() });
    }
    if moment.is_some() && !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("power bounds need 0 <= alpha <= 1, got {alpha}")));
    }
    if let Some(m) = moment {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::domain(format!("moment must be positive and finite, got {m}")));
        }
    }
    if let Some(m) = mean_log {
        if !m.is_finite() {
            return Err(Error::domain(format!("mean log must be finite, got {m}")));
        }
    }
    let gap = (r - l) as f64;
    let mut rep = BoundReport {
        alpha,
        r,
        l,
        phase1: None,
        combined_ln_terms: Vec::new(),
        combined: None,
        combined_ln: None,
        log_terms: Vec::new(),
        log_bound: None,
        m0_raw: None,
        m1_raw: None,
        m0: None,
        m1: None,
    };
    if let Some(e) = moment {
        rep.phase1 = Some((-alpha * gap * LN2).exp() * e);
        if alpha < 0.5 {
            let ln_c = c_alpha(alpha)?.ln();
            rep.combined_ln_terms = (l..=r)
                .map(|m| {
                    let x = ln_c - alpha * (r - m) as f64 * LN2 + e.ln();
                    (2f64).powi((m - l) as i32) * x - ln_c
                })
                .collect();
            let min = rep.combined_ln_terms.iter().copied().fold(f64::INFINITY, f64::min);
            rep.combined_ln = Some(min);
            rep.combined = Some(min.exp());
            let raw = if alpha == 0.0 {
                l as i64
            } else {
                r as i64 - 2 - ((ln_c + e.ln()) / (alpha * LN2)).floor() as i64
            };
            rep.m0_raw = Some(raw);
            rep.m0 = Some(clamp_level(raw, l, r));
        }
    }
    if let Some(el) = mean_log {
        rep.log_terms = (l..=r)
            .map(|m| (2f64).powi((m - l) as i32) * (el - (r - m) as f64 * LN2 + C2) - C2)
            .collect();
        rep.log_bound = Some(rep.log_terms.iter().copied().fold(f64::INFINITY, f64::min));
        let raw = r as i64 - 2 - ((el + C2) / LN2).floor() as i64;
        rep.m1_raw = Some(raw);
        rep.m1 = Some(clamp_level(raw, l, r));
    }
    Ok(rep)
}

/// One-step bounds `(2^{−α}E, C_α E²)` on `E[(W^{(l−1)})^α]` given `E = E[(W^{(l)})^α]`.
pub fn one_step_bounds(alpha: f64, moment: f64) -> Result<(f64, f64)> {
    Ok((2f64.powf(-alpha) * moment, c_alpha(alpha)? * moment * moment))
}

/// True iff the `2^{−α}` one-step bound is the stronger one, i.e.
/// `E[(W^{(l)})^α] > 2^{−α} C_α^{−1}`.
pub fn halving_bound_is_stronger(alpha: f64, moment: f64) -> Result<bool> {
    Ok(moment > 2f64.powf(-alpha) / c_alpha(alpha)?)
}

/// One-step log bound `min{E[ln W] − ln 2, 2E[ln W] + c₂}`.
pub fn one_step_log_bound(mean_log: f64) -> f64 {
    (mean_log - LN2).min(2.0 * mean_log + C2)
}

/// Result of [`recurrence_threshold`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCheck {
    /// `E[W^α] ≤ c₃ 2^{α(r−l)}`.
    pub holds: bool,
    /// Smallest `r − l ≥ 0` for which it holds.
    pub required_gap: u32,
}

/// Checks the moment hypothesis `E[W^α] ≤ c₃ 2^{α(r−l)}`; `c3` is the
/// user-supplied constant for maximal degree `d`.
pub fn recurrence_threshold(d: usize, alpha: f64, c3: f64, moment: f64, r: u32, l: u32) -> Result<RecurrenceCheck> {
    if !(alpha > 0.0 && alpha <= 0.25) {
        return Err(Error::domain(format!("recurrence check needs 0 < alpha <= 1/4, got {alpha}")));
    }
    if !(c3 > 0.0 && c3.is_finite()) {
        return Err(Error::domain(format!("c3 must be positive and finite, got {c3}")));
    }
    if !(moment > 0.0 && moment.is_finite()) {
        return Err(Error::domain(format!("moment must be positive and finite, got {moment}")));
    }
    if l > r {
        return Err(Error::Level { level: l, reason: format!("l must not exceed r = {r}") });
    }
    if d == 0 {
        return Err(Error::domain("maximal degree must be positive"));
    }
    let need = ((moment / c3).log2() / alpha).ceil();
    // guard against ceil landing one above an exact integer solution
    let need = if need >= 1.0 && moment <= c3 * 2f64.powf(alpha * (need - 1.0)) { need - 1.0 } else { need };
    let required_gap = need.max(0.0).min(u32::MAX as f64) as u32;
    Ok(RecurrenceCheck { holds: (r - l) >= required_gap, required_gap })
}

/// `E[W^α] = Γ(a + α)/Γ(a)` for Gamma(a, 1) weights.
pub fn errw_moment(a: f64, alpha: f64) -> Result<f64> {
    if !(a > 0.0) || !(a + alpha > 0.0) {
        return Err(Error::domain(format!("Gamma moment needs a > 0 and a + alpha > 0, got a = {a}, alpha = {alpha}")));
    }
    Ok((ln_gamma(a + alpha) - ln_gamma(a)).exp())
}

/// One row of a [`verify_bounds`] run: MC moments at one level for one α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub level: u32,
    pub alpha: f64,
    pub mc_moment: f64,
    pub mc_se: f64,
    pub bound_phase1: Option<f64>,
    pub bound_combined: Option<f64>,
    pub bound_log: Option<f64>,
    pub m0: Option<u32>,
    pub m1: Option<u32>,
    pub mc_log: f64,
    pub mc_log_se: f64,
}

/// Per-realization averages over all edges at each level, top level first.
#[derive(Clone, Debug)]
pub struct FlowSamples {
    pub r: u32,
    pub l: u32,
    /// `powers[level_index][alpha_index][sample]` with level index `r − level`.
    pub powers: Vec<Vec<Vec<f64>>>,
    pub logs: Vec<Vec<f64>>,
}

/// Runs `n` independent fresh flows from `r` to `l` with i.i.d. weights and
/// records edge-averaged `W^α` and `ln W` at every level.
pub fn sample_flow_moments(
    base: &Graph,
    r: u32,
    l: u32,
    alphas: &[f64],
    dist: &WeightDist,
    n: usize,
    seed: u64,
) -> Result<FlowSamples> {
    if l > r {
        return Err(Error::Level { level: l, reason: format!("l must not exceed r = {r}") });
    }
    let per: Vec<(Vec<Vec<f64>>, Vec<f64>)> = crate::rng::try_par_collect(seed, n, |rng| {
        let w = sample_weights(base, r, dist, rng)?;
        let trace = run_flow_trace(FlowState::fresh(base, r, &w)?, l, rng)?;
        let mut pw = Vec::with_capacity(trace.len());
        let mut lg = Vec::with_capacity(trace.len());
        for s in &trace {
            let lw = s.log_weights();
            let k = lw.len() as f64;
            pw.push(alphas.iter().map(|&a| lw.iter().map(|x| (a * x).exp()).sum::<f64>() / k).collect());
            lg.push(lw.iter().sum::<f64>() / k);
        }
        Ok::<_, Error>((pw, lg))
    })?;
    let levels = (r - l + 1) as usize;
    let mut powers = vec![vec![Vec::with_capacity(n); alphas.len()]; levels];
    let mut logs = vec![Vec::with_capacity(n); levels];
    for (pw, lg) in per {
        for t in 0..levels {
            for (a, v) in pw[t].iter().enumerate() {
                powers[t][a].push(*v);
            }
            logs[t].push(lg[t]);
        }
    }
    Ok(FlowSamples { r, l, powers, logs })
}

/// MC moments of the flow against the decay bounds, one row per (level, α).
pub fn verify_bounds(
    base: &Graph,
    r: u32,
    l: u32,
    alphas: &[f64],
    dist: &WeightDist,
    n: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let s = sample_flow_moments(base, r, l, alphas, dist, n, seed)?;
    moment_rows(&s, alphas, dist)
}

/// Tabulates [`FlowSamples`] against the bounds.
pub fn moment_rows(s: &FlowSamples, alphas: &[f64], dist: &WeightDist) -> Result<Vec<MomentRow>> {
    let mut rows = Vec::new();
    for (t, level) in (s.l..=s.r).rev().enumerate() {
        let lg: MeanSe = batch_means(&s.logs[t], BATCHES)?;
        for (a, &alpha) in alphas.iter().enumerate() {
            let m = batch_means(&s.powers[t][a], BATCHES)?;
            let b = moment_bound(alpha, Some(dist.moment(alpha)), Some(dist.mean_log()), s.r, level)?;
            rows.push(MomentRow {
                level,
                alpha,
                mc_moment: m.mean,
                mc_se: m.se,
                bound_phase1: b.phase1,
                bound_combined: b.combined,
                bound_log: b.log_bound,
                m0: b.m0,
                m1: b.m1,
                mc_log: lg.mean,
                mc_log_se: lg.se,
            });
        }
    }
    Ok(rows)
}
