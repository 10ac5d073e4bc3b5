//! Gauss–Legendre quadrature: single panels, composite rules, and
//! phase-graded panel layouts for oscillatory integrands.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; standard symmetric layout.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = ((i as f64 + 0.75) / (n as f64 + 0.5) * std::f64::consts::PI).cos();
        loop {
            let (p, dp) = legendre_and_derivative(n, z);
            let z_new = z - p / dp;
            if (z_new - z).abs() < 1e-15 {
                z = z_new;
                break;
            }
            z = z_new;
        }
        let (_, dp) = legendre_and_derivative(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of an `order`-point Gauss rule mapped to `[a, b]`.
pub fn panel(a: f64, b: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(order);
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|&x| c + half * x).collect(),
        ws.iter().map(|&w| w * half).collect(),
    )
}

/// Composite rule: `panels` equal panels of `order` points each on `[a, b]`.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let (xs, ws) = panel(a + p as f64 * width, a + (p + 1) as f64 * width, order);
        nodes.extend(xs);
        weights.extend(ws);
    }
    (nodes, weights)
}

/// Panel layout graded to a local phase rate.
///
/// Subdivides `[a, b]` so that each panel carries at most `phase_per_panel`
/// radians of estimated phase, where `rate(x)` bounds `|dφ/dx|` on the panel
/// (sampled at both ends and the midpoint). Every panel gets `order` Gauss
/// points; `min_nodes` forces a floor on the total node count.
pub fn graded(
    a: f64,
    b: f64,
    rate: impl Fn(f64) -> f64,
    phase_per_panel: f64,
    order: usize,
    min_nodes: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![a];
    let mut x = a;
    // Greedy march: panel width limited by the local rate bound.
    while x < b {
        let probe = |t: f64| rate(t).abs().max(1e-12);
        let mut width = phase_per_panel / probe(x);
        // Re-check the bound across the tentative panel and shrink if needed.
        for _ in 0..40 {
            let r = probe(x).max(probe(x + width)).max(probe(x + 0.5 * width));
            let w_new = phase_per_panel / r;
            if w_new >= 0.95 * width {
                width = width.min(w_new);
                break;
            }
            width = w_new;
        }
        x = (x + width).min(b);
        edges.push(x);
    }
    // Enforce the node floor by uniform refinement of the layout.
    let mut refine = 1usize;
    while (edges.len() - 1) * order * refine < min_nodes {
        refine *= 2;
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for seg in edges.windows(2) {
        let w = (seg[1] - seg[0]) / refine as f64;
        for r in 0..refine {
            let (xs, ws) = panel(seg[0] + r as f64 * w, seg[0] + (r + 1) as f64 * w, order);
            nodes.extend(xs);
            weights.extend(ws);
        }
    }
    (nodes, weights)
}
