//! Gauss–Legendre rules and composite panels.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A flattened quadrature rule: `∫ f ≈ Σ w_i f(x_i)`.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre over the panels delimited by `breaks`
    /// (ascending), `order` nodes per panel.
    pub fn composite(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(mid + half * xi);
                rule.weights.push(half * wi);
            }
        }
        rule
    }

    /// `panels` equal panels on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
        Self::composite(&breaks, order)
    }

    /// Panels on `[0, hi]` that shrink geometrically towards the origin
    /// (`levels` halvings below `first`), then are uniform of width
    /// `first` up to `hi`. Suited to integrands with a power-law behaviour
    /// at zero.
    pub fn graded_from_zero(hi: f64, first: f64, levels: usize, order: usize) -> Self {
        let mut breaks = vec![0.0];
        let mut b = first * 0.5f64.powi(levels as i32);
        while b < first {
            breaks.push(b);
            b *= 2.0;
        }
        let panels = ((hi - first) / first).ceil().max(1.0) as usize;
        for i in 0..=panels {
            breaks.push(first + (hi - first) * i as f64 / panels as f64);
        }
        Self::composite(&breaks, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_abs_diff_eq!(got, want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn composite_integrates_exponential() {
        let r = Rule::uniform(0.0, 3.0, 7, 8);
        assert_abs_diff_eq!(r.integrate(f64::exp), 3f64.exp() - 1.0, epsilon = 1e-12);
        let g = Rule::graded_from_zero(10.0, 0.5, 30, 8);
        // ∫0^10 sqrt(x) dx
        assert_abs_diff_eq!(g.integrate(f64::sqrt), 2.0 / 3.0 * 10f64.powf(1.5), epsilon = 1e-10);
    }
}
