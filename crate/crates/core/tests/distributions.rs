//! Distributional checks of the samplers against independent laws.

use nalgebra::DMatrix;
use rand::Rng;
use vrjp_core::beta::{nu_density, sample_beta};
use vrjp_core::inv_gauss::{ig_cdf, IgParams};
use vrjp_core::jump::{drop_loop_params, remove_self_loops, restrict_path, restricted_params, simulate_mjp, MjpParams};
use statrs::function::erf::erf;
use vrjp_core::linalg::WeightMatrix;
use vrjp_core::quad::{integrate, integrate_to_infinity};
use vrjp_core::reinforced::{discrete_skeleton, simulate_vrjp_direct};
use vrjp_core::rng::{par_collect, try_par_collect};
use vrjp_core::stats::{chi_square_gof, ks_one_sample, ks_two_sample, two_sample_tv, Histogram, TestVerdict};

fn check(v: TestVerdict) {
    assert!(v.pass, "{}: statistic {} threshold {} ({})", v.test, v.statistic, v.threshold, v.notes);
}

fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }
}

/// Four vertices, a cycle with a chord, self-loops at two vertices.
fn looped() -> WeightMatrix {
    WeightMatrix::from_rows(&[
        vec![0.6, 1.0, 0.0, 0.5],
        vec![1.0, 0.0, 2.0, 0.3],
        vec![0.0, 2.0, 1.2, 0.8],
        vec![0.5, 0.3, 0.8, 0.0],
    ])
    .unwrap()
}

#[test]
fn beta_marginal_is_inverse_gaussian() {
    let w = looped();
    let n = 100_000;
    let draws = try_par_collect(101, n, |r| sample_beta(&w, r, None).map(|s| s.beta)).unwrap();
    for i in 0..4 {
        let wi = w.off_diagonal_sum(i);
        let p = IgParams::new(1.0 / wi, 1.0).unwrap();
        let x: Vec<f64> = draws.iter().map(|b| 1.0 / (2.0 * b[i] - w.get(i, i))).collect();
        check(ks_one_sample(&format!("vertex {i}"), &x, |t| ig_cdf(t, &p), 0.01).unwrap());
    }
}

#[test]
fn self_loops_shift_beta() {
    let w = looped();
    let mut no_loops = w.matrix().clone();
    no_loops.fill_diagonal(0.0);
    let w0 = WeightMatrix::new(no_loops).unwrap();
    let n = 40_000;
    let a = try_par_collect(102, n, |r| sample_beta(&w, r, None).map(|s| s.beta)).unwrap();
    let b = try_par_collect(103, n, |r| sample_beta(&w0, r, None).map(|s| s.beta)).unwrap();
    for i in 0..4 {
        let xa: Vec<f64> = a.iter().map(|v| v[i] - 0.5 * w.get(i, i)).collect();
        let xb: Vec<f64> = b.iter().map(|v| v[i]).collect();
        check(ks_two_sample(&format!("vertex {i}"), &xa, &xb, 0.01).unwrap());
    }
}

/// Density of `ν` for two vertices joined by `w`, written out by hand.
fn two_vertex_density(w: f64, b1: f64, b2: f64) -> f64 {
    let det = 4.0 * b1 * b2 - w * w;
    if b1 <= 0.0 || det <= 0.0 {
        return 0.0;
    }
    2.0 / std::f64::consts::PI * (w - b1 - b2).exp() / det.sqrt()
}

/// Mass of that density over `[a0, a1] × [b0, b1]`. With `e = w²/(4β₁)` the
/// inner integral is `√π/(2√β₁) e^{−e} (erf √(b1−e) − erf √(b0−e))`.
fn two_vertex_cell(w: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let inner = |b1: f64| {
        if b1 <= 0.0 {
            return 0.0;
        }
        let e = w * w / (4.0 * b1);
        let g = |x: f64| if x.is_infinite() { 1.0 } else { erf((x - e).max(0.0).sqrt()) };
        let pi = std::f64::consts::PI;
        2.0 / pi * (w - b1 - e).exp() * pi.sqrt() / (2.0 * b1.sqrt()) * (g(b.1) - g(b.0))
    };
    if a.1.is_infinite() {
        integrate_to_infinity(inner, a.0, 1e-13, 1e-10).unwrap()
    } else {
        integrate(inner, a.0, a.1, 1e-13, 1e-10).unwrap()
    }
}

#[test]
fn two_vertex_joint_law_matches_density() {
    let w = 1.3;
    let wm = WeightMatrix::from_rows(&[vec![0.0, w], vec![w, 0.0]]).unwrap();
    for (b1, b2) in [(0.5, 1.0), (2.0, 0.3), (0.2, 0.2), (1.0, 4.0)] {
        let a = nu_density(&wm, &[b1, b2]).unwrap();
        let e = two_vertex_density(w, b1, b2);
        assert!((a - e).abs() <= 1e-13 * e.max(1.0), "density at ({b1}, {b2}): {a} vs {e}");
    }
    let edges = [0.0, 0.3, 0.5, 0.75, 1.0, 1.5, 2.5, f64::INFINITY];
    let nb = edges.len() - 1;
    let mut probs = Vec::new();
    for i in 0..nb {
        for j in 0..nb {
            probs.push(two_vertex_cell(w, (edges[i], edges[i + 1]), (edges[j], edges[j + 1])));
        }
    }
    let total: f64 = probs.iter().sum();
    assert!((total - 1.0).abs() < 1e-6, "cell masses sum to {total}");

    let n = 100_000;
    let bin = |x: f64| edges.iter().rposition(|&e| x >= e).unwrap().min(nb - 1);
    let draws = try_par_collect(104, n, |r| sample_beta(&wm, r, None).map(|s| s.beta)).unwrap();
    let mut counts = vec![0u64; nb * nb];
    for b in &draws {
        counts[bin(b[0]) * nb + bin(b[1])] += 1;
    }
    // cells outside the support must stay empty
    let (c, p): (Vec<u64>, Vec<f64>) = counts.into_iter().zip(probs).filter(|&(c, p)| {
        assert!(p > 0.0 || c == 0, "draws in a cell of zero mass");
        p > 0.0
    }).unzip();
    check(chi_square_gof("two-vertex joint law", &c, &p, 0.01).unwrap());
}

fn triangle_mjp() -> MjpParams {
    let c = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 0.5, 2.0, 0.5, 0.0]);
    MjpParams::new(c, vec![1.0, 3.0, 0.5]).unwrap()
}

#[test]
fn mjp_waits_are_exponential() {
    let p = triangle_mjp();
    let paths = try_par_collect(105, 20_000, |r| simulate_mjp(&p, 0, 10, r)).unwrap();
    for i in 0..3 {
        let waits: Vec<f64> = paths
            .iter()
            .filter_map(|path| path.states[..10].iter().position(|&x| x == i).map(|n| path.waits[n]))
            .collect();
        assert!(waits.len() > 5_000);
        check(ks_one_sample(&format!("wait at {i}"), &waits, exp_cdf(p.rate(i)), 0.01).unwrap());
    }
}

#[test]
fn mjp_occupation_follows_stationary_laws() {
    let p = triangle_mjp();
    let n = 50_000;
    // discrete skeleton after many steps: ∝ C_i
    let ends = try_par_collect(106, n, |r| simulate_mjp(&p, 0, 60, r).map(|path| path.states[60])).unwrap();
    let mut counts = vec![0u64; 3];
    for e in ends {
        counts[e] += 1;
    }
    let c: Vec<f64> = (0..3).map(|i| p.total(i)).collect();
    let cs: f64 = c.iter().sum();
    check(chi_square_gof("skeleton", &counts, &c.iter().map(|x| x / cs).collect::<Vec<_>>(), 0.01).unwrap());

    // continuous time at a late fixed time: ∝ π_i
    let t_end = 40.0;
    let at_time = try_par_collect(107, n, |r| {
        let path = simulate_mjp(&p, 0, 400, r)?;
        let mut t = 0.0;
        for (k, w) in path.waits.iter().enumerate() {
            t += w;
            if t > t_end {
                return Ok(path.states[k]);
            }
        }
        Err(vrjp_core::Error::Guard("path too short".into()))
    })
    .unwrap();
    let mut counts = vec![0u64; 3];
    for e in at_time {
        counts[e] += 1;
    }
    let ps: f64 = p.pi().iter().sum();
    check(chi_square_gof("continuous", &counts, &p.pi().iter().map(|x| x / ps).collect::<Vec<_>>(), 0.01).unwrap());
}

fn five_vertex_mjp() -> MjpParams {
    let c = DMatrix::from_row_slice(
        5,
        5,
        &[
            0.0, 1.0, 0.0, 0.4, 0.7, //
            1.0, 0.3, 2.0, 0.0, 0.0, //
            0.0, 2.0, 0.0, 1.0, 0.5, //
            0.4, 0.0, 1.0, 0.0, 1.5, //
            0.7, 0.0, 0.5, 1.5, 0.0,
        ],
    );
    MjpParams::new(c, vec![1.0, 2.0, 0.5, 1.5, 1.0]).unwrap()
}

#[test]
fn restricted_loop_free_wait_has_composite_rate() {
    let p = five_vertex_mjp();
    let j = [0usize, 2, 3];
    let reduced = drop_loop_params(&restricted_params(&p, &j).unwrap()).unwrap();
    let waits: Vec<f64> = try_par_collect(108, 40_000, |r| {
        loop {
            let path = simulate_mjp(&p, 0, 200, r)?;
            let q = remove_self_loops(&restrict_path(&path, &j)?);
            if let Some(&t) = q.waits.first() {
                return Ok::<_, vrjp_core::Error>(t);
            }
        }
    })
    .unwrap();
    // reduced params are indexed by position in j; vertex 0 is position 0
    check(ks_one_sample("first loop-free wait at 0", &waits, exp_cdf(reduced.rate(0)), 0.01).unwrap());
}

#[test]
fn simulated_restriction_matches_restricted_chain() {
    let p = five_vertex_mjp();
    let j = [0usize, 2, 3];
    let k = 4;
    let n = 100_000;
    let reduced = drop_loop_params(&restricted_params(&p, &j).unwrap()).unwrap();
    let direct: Vec<Vec<usize>> = try_par_collect(109, n, |r| {
        loop {
            let path = simulate_mjp(&p, 0, 400, r)?;
            let q = remove_self_loops(&restrict_path(&path, &j)?);
            if q.states.len() > k {
                return Ok::<_, vrjp_core::Error>(q.states[..=k].to_vec());
            }
        }
    })
    .unwrap();
    let reduced_paths: Vec<Vec<usize>> = try_par_collect(110, n, |r| {
        discrete_skeleton(&reduced, 0, k, r).map(|s| s.iter().map(|&x| j[x]).collect())
    })
    .unwrap();
    let (a, b) = Histogram::pair(&direct, &reduced_paths);
    check(two_sample_tv("restricted skeleton", &a, &b).unwrap());
}

#[test]
fn vrjp_first_step_law() {
    let w = WeightMatrix::from_rows(&[
        vec![0.0, 1.0, 0.5, 2.0],
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.5, 1.0, 0.0, 1.0],
        vec![2.0, 0.0, 1.0, 0.0],
    ])
    .unwrap();
    let n = 50_000;
    let first = try_par_collect(111, n, |r| simulate_vrjp_direct(&w, 0, 1, r).map(|p| (p.states[1], p.waits[0]))).unwrap();
    let rate = w.off_diagonal_sum(0);
    let waits: Vec<f64> = first.iter().map(|x| x.1).collect();
    check(ks_one_sample("first wait", &waits, exp_cdf(rate), 0.01).unwrap());
    let mut counts = vec![0u64; 3];
    for (x, _) in &first {
        counts[x - 1] += 1;
    }
    let probs: Vec<f64> = (1..4).map(|j| w.get(0, j) / rate).collect();
    let (c, p): (Vec<u64>, Vec<f64>) = counts.into_iter().zip(probs).filter(|(_, p)| *p > 0.0).unzip();
    check(chi_square_gof("first jump", &c, &p, 0.01).unwrap());
}

#[test]
fn seeded_streams_are_reproducible() {
    let a: Vec<f64> = par_collect(5, 3000, |r| r.random());
    let b: Vec<f64> = par_collect(5, 3000, |r| r.random());
    assert_eq!(a, b);
}
