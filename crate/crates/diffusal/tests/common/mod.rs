//! Independent reference implementations used to verify the library from
//! the outside. Everything here recomputes results from first principles
//! (power series, numeric quadrature) rather than calling back into the
//! code paths under test.

use diffusal::Graph;
use rand::Rng;

/// Random connected undirected graph: a random attachment tree on `n`
/// nodes plus `extra` uniformly random edges (duplicates and self loops
/// are dropped by graph construction).
pub fn random_connected_graph<R: Rng>(n: usize, extra: usize, rng: &mut R) -> Graph {
    assert!(n >= 2);
    let mut edges = Vec::with_capacity(n - 1 + extra);
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    while edges.len() < n - 1 + extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges).expect("valid random graph").0
}

/// Personalized PageRank column from `seed` by truncated power series:
/// `alpha * sum_k (1-alpha)^k T^k e_seed` with column-stochastic
/// `T = A D^-1`, truncated once the remaining tail mass drops below
/// `tail`. Entrywise truncation error is at most `tail`.
pub fn dense_ppr_column(graph: &Graph, seed: usize, alpha: f64, tail: f64) -> Vec<f64> {
    let n = graph.num_nodes();
    let mut out = vec![0f64; n];
    let mut v = vec![0f64; n];
    v[seed] = 1.0;
    let mut coeff = alpha;
    loop {
        for (acc, &mass) in out.iter_mut().zip(&v) {
            *acc += coeff * mass;
        }
        // Tail after the term just added: (1-alpha)^(k+1).
        coeff *= 1.0 - alpha;
        if coeff / alpha <= tail {
            break;
        }
        let mut next = vec![0f64; n];
        for (u, &mass) in v.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let share = mass / graph.degree(u) as f64;
            for &w in graph.neighbors(u) {
                next[w] += share;
            }
        }
        v = next;
    }
    out
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Two-sided Student-t tail probability by quadrature. Substituting
/// `x = sqrt(df) * tan(theta)` turns the density integral into
/// `integral of cos(theta)^(df-1)`, smooth and finite on `[0, pi/2]`,
/// so no gamma-function normalization is needed:
/// `p = int_{atan(|t|/sqrt(df))}^{pi/2} cos^{df-1} / int_0^{pi/2} cos^{df-1}`.
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    assert!(df >= 1.0, "quadrature oracle needs df >= 1");
    let g = move |theta: f64| theta.cos().powf(df - 1.0);
    let split = (t.abs() / df.sqrt()).atan();
    let half = std::f64::consts::FRAC_PI_2;
    let tail = adaptive_simpson(&g, split, half, 1e-13);
    let norm = adaptive_simpson(&g, 0.0, half, 1e-13);
    (tail / norm).clamp(0.0, 1.0)
}

/// Welch p-value recomputed from raw samples: own mean/variance/t/df
/// arithmetic plus the quadrature tail above.
pub fn welch_p_quadrature(a: &[f64], b: &[f64]) -> f64 {
    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb) * (sa + sb)
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    t_two_sided_p_quadrature(t, df)
}
