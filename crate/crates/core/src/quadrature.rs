//! Gauss–Legendre rules and geometric grading toward an endpoint singularity.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on the reference interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Newton on P_n starting from the Chebyshev-like guess
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (a + len * x, len * w))
    }

    /// `∫_a^b f`.
    pub fn integrate<V: Quantity, F: FnMut(f64) -> V>(&self, a: f64, b: f64, mut f: F) -> V {
        let mut acc = V::zero();
        for (x, w) in self.points(a, b) {
            acc.add_scaled(&f(x), w);
        }
        acc
    }
}

/// Values that quadrature can accumulate: scalars and fixed-size arrays.
pub trait Quantity: Copy {
    fn zero() -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    /// Size used by the stopping rules.
    fn magnitude(&self) -> f64;
    fn components(&self) -> &[f64];
    fn components_mut(&mut self) -> &mut [f64];
}

impl Quantity for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn components(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
    fn components_mut(&mut self) -> &mut [f64] {
        std::slice::from_mut(self)
    }
}

impl<const K: usize> Quantity for [f64; K] {
    fn zero() -> Self {
        [0.0; K]
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += w * b;
        }
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn components(&self) -> &[f64] {
        self
    }
    fn components_mut(&mut self) -> &mut [f64] {
        self
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for integrating functions with a point singularity at (or near)
/// one end of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingOptions {
    /// Each graded cell is this fraction of the previous one.
    pub ratio: f64,
    /// Stop refining once a cell contributes less than this fraction of the
    /// running total, or once the rest of the geometric series is known to
    /// within it.
    pub rel_tol: f64,
    /// Hard limit on the number of graded cells.
    pub max_levels: usize,
}

impl Default for GradingOptions {
    fn default() -> Self {
        GradingOptions {
            ratio: 0.5,
            rel_tol: 1e-17,
            max_levels: 400,
        }
    }
}

/// `∫_lo^hi f` for `f` that may be singular at `sing ≤ lo`.
///
/// If the singular point lies strictly before `lo`, the interval is cut
/// into cells no longer than their distance to `sing` and each cell gets
/// the plain rule. If `sing == lo`, cells shrink geometrically toward `lo`
/// until their contribution is negligible. Near a power-law singularity the
/// cell contributions form a geometric series per component; once its ratio
/// has settled the remainder is summed in closed form, which keeps weak
/// singularities (`|x|^α`, `α` close to `−1`) from needing hundreds of
/// levels.
pub fn integrate_toward_singularity<V: Quantity, F: FnMut(f64) -> V>(
    rule: &GaussRule,
    lo: f64,
    hi: f64,
    sing: f64,
    opts: &GradingOptions,
    mut f: F,
) -> Result<V> {
    debug_assert!(sing <= lo && lo <= hi);
    if hi <= lo {
        return Ok(V::zero());
    }
    let dist = lo - sing;
    if dist > 0.0 {
        let mut sum = V::zero();
        let mut a = lo;
        let mut cells = 0;
        while a < hi {
            // cell length at most its distance to the singular point
            let b = (a + (a - sing)).min(hi);
            sum.add_scaled(&rule.integrate(a, b, &mut f), 1.0);
            a = b;
            cells += 1;
            if cells > opts.max_levels {
                return Err(Error::numerical(format!(
                    "too many cells integrating over [{lo}, {hi}] near {sing}"
                )));
            }
        }
        return Ok(sum);
    }

    let len = hi - lo;
    let mut sum = V::zero();
    let mut upper = len;
    // the two previous cell contributions
    let mut history: [Option<V>; 2] = [None, None];
    for level in 0..opts.max_levels {
        let lower = upper * opts.ratio;
        let part: V = rule.integrate(lo + lower, lo + upper, &mut f);
        sum.add_scaled(&part, 1.0);
        upper = lower;
        if part.magnitude() <= opts.rel_tol * sum.magnitude() {
            let last: V = rule.integrate(lo, lo + upper, &mut f);
            sum.add_scaled(&last, 1.0);
            return Ok(sum);
        }
        if let [Some(p1), Some(p2)] = history {
            if level >= MIN_TAIL_LEVELS {
                let tol = opts.rel_tol.max(TAIL_TOL_FLOOR) * sum.magnitude();
                if let Some(tail) = geometric_tail(&part, &p1, &p2, tol) {
                    sum.add_scaled(&tail, 1.0);
                    return Ok(sum);
                }
            }
        }
        history = [Some(part), history[0]];
        if upper <= f64::MIN_POSITIVE * 1e10 {
            break;
        }
    }
    if sum.magnitude() == 0.0 {
        return Ok(sum);
    }
    Err(Error::numerical(format!(
        "graded quadrature did not settle on [{lo}, {hi}] (estimate {:e})",
        sum.magnitude()
    )))
}

const MIN_TAIL_LEVELS: usize = 8;
const TAIL_TOL_FLOOR: f64 = 1e-15;

/// Closed-form remainder `p q / (1 − q)` with `q = p / p1` per component,
/// provided the ratio against `p1 / p2` pins the sum to within `tol`.
fn geometric_tail<V: Quantity>(p: &V, p1: &V, p2: &V, tol: f64) -> Option<V> {
    let mut tail = V::zero();
    let comps = p.components().iter().zip(p1.components()).zip(p2.components());
    for (t, ((&c, &c1), &c2)) in tail.components_mut().iter_mut().zip(comps) {
        // below the tolerance even with a slowly decaying tail
        if c.abs() <= 1e-2 * tol {
            continue;
        }
        let (q, q_prev) = (c / c1, c1 / c2);
        if !(q > 0.0 && q < 1.0 && q_prev > 0.0 && q_prev < 1.0) {
            return None;
        }
        let err = c.abs() * (q - q_prev).abs() / ((1.0 - q) * (1.0 - q));
        if err > tol {
            return None;
        }
        *t = c * q / (1.0 - q);
    }
    Some(tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_exact_on_polynomials() {
        for n in 1..=20 {
            let rule = GaussRule::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14, "n = {n}");
            for deg in 0..(2 * n) {
                let got = rule.integrate(0.0, 1.0, |x: f64| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn graded_power_singularity() {
        let rule = GaussRule::new(10);
        let opts = GradingOptions::default();
        for p in [-0.97, -0.9, -0.5, -0.1, 0.0, 0.5, 1.5] {
            let got: f64 =
                integrate_toward_singularity(&rule, 0.0, 2.0, 0.0, &opts, |x: f64| x.powf(p))
                    .unwrap();
            let want = 2f64.powf(p + 1.0) / (p + 1.0);
            assert!((got - want).abs() < 1e-13 * want, "p = {p}: {got} vs {want}");
        }
        // mixed leading orders per component
        let got: [f64; 2] = integrate_toward_singularity(&rule, 0.0, 1.0, 0.0, &opts, |x: f64| {
            [x.powf(-0.95) + x, 3.0 * x.powf(-0.2)]
        })
        .unwrap();
        assert!((got[0] - 20.5).abs() < 1e-12 * 20.5, "{got:?}");
        assert!((got[1] - 3.75).abs() < 1e-13 * 3.75, "{got:?}");
    }

    #[test]
    fn near_singularity_is_split() {
        let rule = GaussRule::new(10);
        let opts = GradingOptions::default();
        let got: f64 =
            integrate_toward_singularity(&rule, 1.0, 40.0, 0.0, &opts, |x: f64| x.powf(-1.5))
                .unwrap();
        let want = 2.0 * (1.0 - 40f64.powf(-0.5));
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }
}
