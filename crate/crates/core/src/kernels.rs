//! Radial interaction kernels with a finite (or infinite) horizon.
//!
//! Every kernel has the form `γ(x, y) = σ · g(|x − y|)` for `|x − y| ≤ δ` and
//! vanishes beyond the horizon `δ`. Three radial profiles are supported:
//!
//! | case                 | `g(r)` in dimension `n` |
//! |----------------------|-------------------------|
//! | fractional type      | `r^(−n−2s)`             |
//! | constant, integrable | `1`                     |
//! | peridynamic          | `r^(−1)`                |
//!
//! The scaling `σ` is a single positive constant. It is either given
//! directly or derived from `(s, δ, n)` through a [`SigmaMode`].

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Radial profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCase {
    /// `σ r^(−n−2s)`, comparable to the fractional Laplacian.
    FractionalType,
    /// `σ` on the ball; square integrable.
    ConstantIntegrable,
    /// `σ / r`.
    Peridynamic,
}

/// Interaction radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    /// The radius as a float, `+∞` for an infinite horizon.
    pub fn radius(self) -> f64 {
        match self {
            Horizon::Finite(d) => d,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

/// How the kernel scaling `σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// A fixed value.
    Constant(f64),
    /// `σ = c_{n,s} / 2`; with an infinite horizon this is the integral
    /// fractional Laplacian.
    FractionalNormalization,
    /// `σ = (2 − 2s) / δ^(2−2s)`.
    LocalScaling,
    /// `σ = (1 − s) / δ^(2−2s)`; the nonlocal operator tends to `−Δ` as
    /// `δ → 0` with this choice.
    LaplacianLimit,
    /// `σ = 1 / (2δ²)`.
    InverseTwoDeltaSq,
}

/// A validated kernel with its scaling resolved to a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    case: KernelCase,
    s: Option<f64>,
    horizon: Horizon,
    sigma_mode: SigmaMode,
    sigma: f64,
    dim: usize,
}

/// Builds a kernel, checking the parameter combination.
///
/// `s` must be given for [`KernelCase::FractionalType`] and omitted
/// otherwise.
pub fn make_kernel(
    case: KernelCase,
    s: Option<f64>,
    horizon: Horizon,
    sigma_mode: SigmaMode,
    dim: usize,
) -> Result<KernelSpec> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    match (case, s) {
        (KernelCase::FractionalType, Some(s)) => {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::invalid("s must lie in (0,1)"));
            }
        }
        (KernelCase::FractionalType, None) => {
            return Err(Error::invalid("the fractional-type kernel needs an order s"));
        }
        (_, Some(_)) => {
            return Err(Error::invalid(format!(
                "the order s only applies to the fractional-type kernel, not {case:?}"
            )));
        }
        (_, None) => {}
    }
    match horizon {
        Horizon::Finite(d) if !(d > 0.0 && d.is_finite()) => {
            return Err(Error::invalid(format!("horizon must be positive, got {d}")));
        }
        Horizon::Infinite if case == KernelCase::Peridynamic && dim == 1 => {
            return Err(Error::invalid(
                "an infinite horizon is not allowed for the peridynamic kernel in 1D: non-integrable tail",
            ));
        }
        _ => {}
    }

    let need_s = |mode: &str| {
        s.ok_or_else(|| Error::invalid(format!("sigma mode {mode} needs the fractional order s")))
    };
    let need_delta = |mode: &str| match horizon {
        Horizon::Finite(d) => Ok(d),
        Horizon::Infinite => Err(Error::invalid(format!(
            "sigma mode {mode} needs a finite horizon"
        ))),
    };
    let sigma = match sigma_mode {
        SigmaMode::Constant(v) => v,
        SigmaMode::FractionalNormalization => c_ns(dim, need_s("fractional")?) / 2.0,
        SigmaMode::LocalScaling => {
            let (s, d) = (need_s("local")?, need_delta("local")?);
            (2.0 - 2.0 * s) / d.powf(2.0 - 2.0 * s)
        }
        SigmaMode::LaplacianLimit => {
            let (s, d) = (need_s("laplacian")?, need_delta("laplacian")?);
            (1.0 - s) / d.powf(2.0 - 2.0 * s)
        }
        SigmaMode::InverseTwoDeltaSq => {
            let d = need_delta("inv-two-delta-sq")?;
            1.0 / (2.0 * d * d)
        }
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(KernelSpec {
        case,
        s,
        horizon,
        sigma_mode,
        sigma,
        dim,
    })
}

impl KernelSpec {
    /// Shorthand for the 1D fractional-type kernel with a constant `σ`.
    pub fn fractional(s: f64, delta: f64, sigma: f64) -> Result<Self> {
        make_kernel(
            KernelCase::FractionalType,
            Some(s),
            Horizon::Finite(delta),
            SigmaMode::Constant(sigma),
            1,
        )
    }

    pub fn case(&self) -> KernelCase {
        self.case
    }

    pub fn s(&self) -> Option<f64> {
        self.s
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn sigma_mode(&self) -> SigmaMode {
        self.sigma_mode
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same kernel with another horizon. The scaling value is kept as is
    /// (it is *not* re-derived from the new horizon).
    pub fn with_horizon(&self, horizon: Horizon) -> Result<Self> {
        make_kernel(
            self.case,
            self.s,
            horizon,
            SigmaMode::Constant(self.sigma),
            self.dim,
        )
        .map(|mut k| {
            k.sigma_mode = self.sigma_mode;
            k
        })
    }

    /// Exponent `q` of the radial profile `g(r) = r^q`.
    pub fn radial_exponent(&self) -> f64 {
        match self.case {
            KernelCase::FractionalType => -(self.dim as f64) - 2.0 * self.s.unwrap_or(0.0),
            KernelCase::ConstantIntegrable => 0.0,
            KernelCase::Peridynamic => -1.0,
        }
    }

    fn is_singular(&self) -> bool {
        self.case != KernelCase::ConstantIntegrable
    }

    /// `γ` as a function of the distance `r`.
    ///
    /// Singular kernels must not be evaluated at `r = 0`.
    pub fn kernel_value(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
        }
        if r > self.horizon.radius() {
            return Ok(0.0);
        }
        if r == 0.0 && self.is_singular() {
            return Err(Error::invalid("singular kernel evaluated on the diagonal r = 0"));
        }
        Ok(self.profile(r))
    }

    /// `σ g(r)` without the horizon cut-off and without checks.
    #[inline]
    pub(crate) fn profile(&self, r: f64) -> f64 {
        match self.case {
            KernelCase::ConstantIntegrable => self.sigma,
            KernelCase::Peridynamic => self.sigma / r,
            KernelCase::FractionalType => self.sigma * r.powf(self.radial_exponent()),
        }
    }

    /// `∫_a^b γ(r) dr` along a ray (1D profile), honouring the horizon.
    ///
    /// `b` may be `f64::INFINITY`.
    pub fn radial_tail_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0 && a <= b) {
            return Err(Error::invalid(format!(
                "radial integral needs 0 < a <= b, got a = {a}, b = {b}"
            )));
        }
        let hi = b.min(self.horizon.radius());
        if hi <= a {
            return Ok(0.0);
        }
        let q = self.radial_exponent();
        if hi.is_infinite() && q >= -1.0 {
            return Err(Error::numerical(format!(
                "radial tail of the {:?} kernel diverges",
                self.case
            )));
        }
        Ok(self.sigma * power_integral(q, a, hi))
    }

    /// Mass-term coefficient `C(δ, n) = 2 ∫_{|z| > δ} γ_∞(|z|) dz` linking
    /// the truncated operator to its infinite-horizon counterpart.
    pub fn truncation_constant(&self) -> Result<f64> {
        let delta = match self.horizon {
            Horizon::Finite(d) => d,
            Horizon::Infinite => {
                return Err(Error::invalid(
                    "truncation constant needs a finite horizon",
                ))
            }
        };
        let s = match (self.case, self.s) {
            (KernelCase::FractionalType, Some(s)) => s,
            _ => {
                return Err(Error::numerical(format!(
                    "the {:?} kernel has a divergent tail; no truncation constant",
                    self.case
                )))
            }
        };
        let n = self.dim as f64;
        Ok(match self.sigma_mode {
            SigmaMode::FractionalNormalization => {
                c_ns(self.dim, s) * PI.powf(n / 2.0) / (gamma(n / 2.0) * delta.powf(2.0 * s) * s)
            }
            _ => {
                let omega = 2.0 * PI.powf(n / 2.0) / gamma(n / 2.0);
                2.0 * self.sigma * omega / (2.0 * s * delta.powf(2.0 * s))
            }
        })
    }
}

/// Normalization constant `c_{n,s} = 2^(2s) s Γ(s + n/2) / (π^(n/2) Γ(1 − s))`
/// of the integral fractional Laplacian.
///
/// # Panics
///
/// If `n == 0` or `s ∉ (0, 1)`.
pub fn c_ns(n: usize, s: f64) -> f64 {
    assert!(n >= 1, "dimension must be at least 1");
    assert!(s > 0.0 && s < 1.0, "s must lie in (0,1)");
    let nh = n as f64 / 2.0;
    4f64.powf(s) * s * gamma(s + nh) / (PI.powf(nh) * gamma(1.0 - s))
}

/// `∫_a^b t^q dt` for `0 < a ≤ b ≤ ∞` (the caller rules out divergence).
pub(crate) fn power_integral(q: f64, a: f64, b: f64) -> f64 {
    if q == -1.0 {
        return (b / a).ln();
    }
    let p = q + 1.0;
    if b.is_infinite() {
        -a.powf(p) / p
    } else {
        (b.powf(p) - a.powf(p)) / p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(s: f64, horizon: Horizon, mode: SigmaMode) -> KernelSpec {
        make_kernel(KernelCase::FractionalType, Some(s), horizon, mode, 1).unwrap()
    }

    #[test]
    fn fractional_normalization_at_one_half() {
        let k = frac(0.5, Horizon::Finite(2.0), SigmaMode::FractionalNormalization);
        assert!((k.sigma() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn local_scaling_value() {
        let k = frac(0.5, Horizon::Finite(0.5), SigmaMode::LocalScaling);
        assert!((k.sigma() - 2.0).abs() < 1e-15);
        let k = frac(0.5, Horizon::Finite(0.5), SigmaMode::LaplacianLimit);
        assert!((k.sigma() - 1.0).abs() < 1e-15);
        let k = frac(0.5, Horizon::Finite(2.0), SigmaMode::InverseTwoDeltaSq);
        assert!((k.sigma() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let err = make_kernel(
            KernelCase::Peridynamic,
            None,
            Horizon::Infinite,
            SigmaMode::Constant(1.0),
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-integrable"));
        for s in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            let err = make_kernel(
                KernelCase::FractionalType,
                Some(s),
                Horizon::Finite(1.0),
                SigmaMode::Constant(1.0),
                1,
            )
            .unwrap_err();
            assert_eq!(err.to_string(), "s must lie in (0,1)");
        }
        assert!(KernelSpec::fractional(0.5, 0.0, 1.0).is_err());
        assert!(KernelSpec::fractional(0.5, -1.0, 1.0).is_err());
        assert!(KernelSpec::fractional(0.5, 1.0, 0.0).is_err());
        assert!(frac_result(Horizon::Infinite, SigmaMode::LocalScaling).is_err());
    }

    fn frac_result(h: Horizon, m: SigmaMode) -> Result<KernelSpec> {
        make_kernel(KernelCase::FractionalType, Some(0.5), h, m, 1)
    }

    #[test]
    fn kernel_values() {
        let k = KernelSpec::fractional(0.5, 1.0, 1.0).unwrap();
        assert_eq!(k.kernel_value(0.5).unwrap(), 4.0);
        assert_eq!(k.kernel_value(1.5).unwrap(), 0.0);
        assert!(k.kernel_value(0.0).is_err());
        let p = make_kernel(
            KernelCase::Peridynamic,
            None,
            Horizon::Finite(1.0),
            SigmaMode::Constant(2.0),
            1,
        )
        .unwrap();
        assert_eq!(p.kernel_value(0.25).unwrap(), 8.0);
        assert_eq!(p.kernel_value(1.5).unwrap(), 0.0);
        let c = make_kernel(
            KernelCase::ConstantIntegrable,
            None,
            Horizon::Finite(1.0),
            SigmaMode::Constant(3.0),
            1,
        )
        .unwrap();
        assert_eq!(c.kernel_value(0.0).unwrap(), 3.0);
        assert_eq!(c.kernel_value(1.0).unwrap(), 3.0);
        assert_eq!(c.kernel_value(1.0 + 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn tail_integrals() {
        let k = frac(0.5, Horizon::Infinite, SigmaMode::Constant(1.0));
        assert!((k.radial_tail_integral(1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let c = make_kernel(
            KernelCase::ConstantIntegrable,
            None,
            Horizon::Finite(1.0),
            SigmaMode::Constant(3.0),
            1,
        )
        .unwrap();
        assert!((c.radial_tail_integral(0.1, 0.4).unwrap() - 0.9).abs() < 1e-15);
        // compact support clips the upper limit
        assert!((c.radial_tail_integral(0.5, f64::INFINITY).unwrap() - 1.5).abs() < 1e-15);
        let c_inf = make_kernel(
            KernelCase::ConstantIntegrable,
            None,
            Horizon::Infinite,
            SigmaMode::Constant(3.0),
            1,
        )
        .unwrap();
        assert!(c_inf.radial_tail_integral(0.5, f64::INFINITY).is_err());
        let truncated = KernelSpec::fractional(0.5, 2.0, 1.0).unwrap();
        assert_eq!(truncated.radial_tail_integral(2.0, f64::INFINITY).unwrap(), 0.0);
        assert!(truncated.radial_tail_integral(0.0, 1.0).is_err());
    }

    #[test]
    fn truncation_constant_closed_form() {
        let k = frac(0.5, Horizon::Finite(2.0), SigmaMode::FractionalNormalization);
        assert!((k.truncation_constant().unwrap() - 1.0 / PI).abs() < 1e-14);
        let k = frac(0.5, Horizon::Finite(1.0), SigmaMode::FractionalNormalization);
        assert!((k.truncation_constant().unwrap() - 2.0 / PI).abs() < 1e-14);
        let p = make_kernel(
            KernelCase::Peridynamic,
            None,
            Horizon::Finite(1.0),
            SigmaMode::Constant(1.0),
            1,
        )
        .unwrap();
        assert!(p.truncation_constant().is_err());
    }

    #[test]
    fn c_ns_closed_forms() {
        assert!((c_ns(1, 0.5) - 1.0 / PI).abs() < 1e-15);
        // Γ(s + 1/2) = Γ(1 − s) at s = 1/4
        assert!((c_ns(1, 0.25) - 2f64.sqrt() * 0.25 / PI.sqrt()).abs() < 1e-15);
        assert!((c_ns(2, 0.5) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }
}
