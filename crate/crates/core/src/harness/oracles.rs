//! Independent reference computations used by the verification suite.
//! None of these share code with the routines they check.

/// Greedy decomposition of `t` into descending powers of two, returned as
/// running totals.
pub fn brute_index_set(t: usize) -> Vec<usize> {
    let mut p = 1usize;
    while p * 2 <= t {
        p *= 2;
    }
    let mut out = Vec::new();
    let mut acc = 0;
    while p > 0 {
        if acc + p <= t {
            acc += p;
            out.push(acc);
        }
        p /= 2;
    }
    out
}

/// `S_i = {s + 1, ..., i}` with `s` the running total preceding `i` in its
/// own greedy decomposition (0 if none).
pub fn brute_node_interval(i: usize) -> (usize, usize) {
    let set = brute_index_set(i);
    let prev = if set.len() >= 2 { set[set.len() - 2] } else { 0 };
    (prev + 1, i)
}

fn log_sum_exp(xs: &[f64], ws: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().zip(ws).map(|(x, w)| w * (x - m).exp()).sum::<f64>().ln()
}

/// `(1/(alpha-1)) ln int p^alpha q^{1-alpha}` for `p = N(0, sigma^2)`,
/// `q = N(shift, sigma^2)` by composite Simpson quadrature in log space,
/// centred on the tilted mean `(1 - alpha) shift`.
pub fn renyi_quadrature_1d(shift: f64, sigma: f64, alpha: f64) -> f64 {
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    let log_p = |x: f64| log_norm - x * x / (2.0 * sigma * sigma);
    let log_q = |x: f64| log_norm - (x - shift) * (x - shift) / (2.0 * sigma * sigma);
    let centre = (1.0 - alpha) * shift;
    let half_width = 40.0 * sigma;
    let n = 8000; // even
    let h = 2.0 * half_width / n as f64;
    let mut xs = Vec::with_capacity(n + 1);
    let mut ws = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = centre - half_width + i as f64 * h;
        xs.push(alpha * log_p(x) + (1.0 - alpha) * log_q(x));
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        ws.push(w * h / 3.0);
    }
    log_sum_exp(&xs, &ws) / (alpha - 1.0)
}

/// Noise variance written out term by term:
/// `4 (k+1)^2 / rho^2 * (G + H m)^2 * log2(2T) * t^(2k-2)`.
pub fn literal_sigma_sq(t: usize, k: u32, rho: f64, g: f64, h: f64, max_disp: f64, horizon: usize) -> f64 {
    let kk = k as f64 + 1.0;
    4.0 * kk * kk / (rho * rho)
        * (g + h * max_disp).powi(2)
        * (2.0 * horizon as f64).log2()
        * (t as f64).powf(2.0 * k as f64 - 2.0)
}

/// `(eps, alpha)` minimizing `alpha rho^2/2 + ln(1/delta)/(alpha-1)` over
/// `alpha > 1` by golden-section search.
pub fn numeric_rdp_optimum(rho: f64, delta: f64) -> (f64, f64) {
    let f = |a: f64| a * rho * rho / 2.0 + (1.0 / delta).ln() / (a - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-9, 1e6);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..400 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let a = 0.5 * (lo + hi);
    (f(a), a)
}
