//! Perceived distributions and perceptual utility.
//!
//! A PWF applied to an objective CDF yields the perceived CDF
//! `w(F(x))`; its derivative `w'(F(x)) f(x)` is the perceived density.
//! The perceptual utility of a metric `M` is the expectation of `u(M(Y))`
//! under the perceived density, evaluated by adaptive quadrature or by
//! importance-reweighted Monte-Carlo over objective samples.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::utility::UtilitySpec;
use crate::weighting::WeightingSpec;
use crate::Error;

/// Upper truncation rule for quadrature: integrate only where
/// `1 - F(x) >= 1e-10`.
const TAIL_TRUNCATION: f64 = 1e-10;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar distribution given by its CDF and PDF on a support interval.
#[derive(Clone)]
pub struct ScalarDistribution {
    cdf: ScalarFn,
    pdf: ScalarFn,
    quantile: Option<ScalarFn>,
    support: (f64, f64),
}

impl std::fmt::Debug for ScalarDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarDistribution")
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarDistribution {
    /// Exponential distribution with the given mean; models the power gain
    /// `|h|^2` under Rayleigh fading.
    pub fn exponential(mean: f64) -> Result<Self, Error> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "exponential mean must be positive, got {mean}"
            )));
        }
        Ok(ScalarDistribution {
            cdf: Arc::new(move |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-x / mean).exp() }),
            pdf: Arc::new(move |x: f64| if x < 0.0 { 0.0 } else { (-x / mean).exp() / mean }),
            quantile: Some(Arc::new(move |t: f64| -mean * (1.0 - t).ln())),
            support: (0.0, f64::INFINITY),
        })
    }

    /// Custom distribution from CDF, PDF, support, and optional quantile.
    /// Without a quantile, one is computed by monotone bisection.
    pub fn custom(
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
        quantile: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        ScalarDistribution {
            cdf: Arc::new(cdf),
            pdf: Arc::new(pdf),
            quantile: quantile.map(|q| Arc::from(q) as ScalarFn),
            support,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// `F^{-1}(t)`: analytic when available, else bisection on the CDF.
    pub fn quantile(&self, t: f64) -> Result<f64, Error> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::OutOfDomain(format!(
                "quantile requires t in [0,1), got {t}"
            )));
        }
        if let Some(q) = &self.quantile {
            return Ok(q(t));
        }
        let (lo, hi) = self.support;
        let mut a = lo;
        let mut b = if hi.is_finite() {
            hi
        } else {
            // Expand until the CDF exceeds t.
            let mut b = if lo > 0.0 { 2.0 * lo + 1.0 } else { 1.0 };
            while self.cdf(b) < t {
                b *= 2.0;
                if !b.is_finite() {
                    return Err(Error::NonConvergent(
                        "quantile bracket expansion diverged".into(),
                    ));
                }
            }
            b
        };
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.cdf(mid) < t {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// A distribution seen through a PWF.
#[derive(Debug, Clone)]
pub struct PerceptualTransform {
    pub base: ScalarDistribution,
    pub pwf: WeightingSpec,
}

impl PerceptualTransform {
    pub fn new(base: ScalarDistribution, pwf: WeightingSpec) -> Result<Self, Error> {
        pwf.validate()?;
        Ok(PerceptualTransform { base, pwf })
    }

    /// Perceived CDF `w(F(x))`; points outside the support clamp to 0 / 1.
    pub fn perceived_cdf(&self, x: f64) -> Result<f64, Error> {
        let (lo, hi) = self.base.support();
        if x < lo {
            return Ok(0.0);
        }
        if x > hi {
            return Ok(1.0);
        }
        self.pwf.value(self.base.cdf(x).clamp(0.0, 1.0))
    }

    /// Perceived density `w'(F(x)) f(x)` by the chain rule.
    ///
    /// Rejected where `F(x)` hits 0 or 1: the PWF derivative may be
    /// unbounded there.
    pub fn perceived_pdf(&self, x: f64) -> Result<f64, Error> {
        let p = self.base.cdf(x);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "perceived pdf requires F(x) in (0,1), got F({x}) = {p}"
            )));
        }
        Ok(self.pwf.derivative(p)? * self.base.pdf(x))
    }
}

/// How to evaluate a perceptual-utility integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Quadrature,
    MonteCarlo { seed: u64, n: usize },
}

/// A perceptual-utility estimate; `std_error` is present for Monte-Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Adaptive Simpson on `[a, b]`; returns `(integral, error estimate)`.
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> (f64, f64) {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            (left + right + delta / 15.0, delta.abs() / 15.0)
        } else {
            let (lv, le) = recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1);
            let (rv, re) = recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1);
            (lv + rv, le + re)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 48)
}

/// Perceptual utility of a metric: the integral of
/// `u(M(y)) w'(F(y)) f(y)` over the support.
///
/// Quadrature changes variables to perceived-probability space
/// `s = w(F(y))`, where the integrand `u(M(Q(w^{-1}(s))))` is bounded, and
/// truncates the upper tail where `1 - F < 1e-10`. A
/// [`Error::NonConvergent`] is signaled when the estimated quadrature
/// error exceeds `1e-6 |value| + 1e-9`.
///
/// Monte-Carlo draws objective samples through the quantile (a
/// counter-based stream keyed by `(seed, sample index)`) and reweights
/// each by `w'(F(y))`.
pub fn perceptual_utility(
    metric: &dyn Fn(f64) -> f64,
    t: &PerceptualTransform,
    u: &UtilitySpec,
    method: Method,
) -> Result<Estimate, Error> {
    u.validate()?;
    match method {
        Method::Quadrature => {
            let p_hi = 1.0 - TAIL_TRUNCATION;
            let s_hi = t.pwf.value(p_hi)?;
            let integrand = |s: f64| -> f64 {
                let p = t.pwf.inverse(s.clamp(0.0, s_hi)).unwrap_or(0.0);
                let y = t.base.quantile(p.min(p_hi)).unwrap_or(t.base.support().0);
                u.value(metric(y)).unwrap_or(0.0)
            };
            let rough = adaptive_simpson(&integrand, 0.0, s_hi, 1e-6).0;
            let tol = 1e-10 * rough.abs().max(1.0) + 1e-13;
            let (mut value, err) = adaptive_simpson(&integrand, 0.0, s_hi, tol);
            // Truncated upper tail carries perceived mass 1 - s_hi.
            let y_hi = t.base.quantile(p_hi)?;
            value += u.value(metric(y_hi))? * (1.0 - s_hi);
            if err > 1e-6 * value.abs() + 1e-9 {
                return Err(Error::NonConvergent(format!(
                    "quadrature error estimate {err} too large for value {value}"
                )));
            }
            Ok(Estimate {
                value,
                std_error: None,
            })
        }
        Method::MonteCarlo { seed, n } => {
            if n == 0 {
                return Err(Error::InvalidSpec("Monte-Carlo requires n >= 1".into()));
            }
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in 0..n as u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let p: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
                let y = t.base.quantile(p)?;
                let v = u.value(metric(y))? * t.pwf.derivative(p)?;
                sum += v;
                sum_sq += v * v;
            }
            let nf = n as f64;
            let mean = sum / nf;
            let var = (sum_sq / nf - mean * mean).max(0.0);
            Ok(Estimate {
                value: mean,
                std_error: Some((var / nf).sqrt()),
            })
        }
    }
}

/// The integrand of the perceptual-utility integral at `x`:
/// `u(M(x)) * w'(F(x)) f(x)`.
pub fn soi_density(
    metric: &dyn Fn(f64) -> f64,
    t: &PerceptualTransform,
    u: &UtilitySpec,
    x: f64,
) -> Result<f64, Error> {
    Ok(u.value(metric(x))? * t.perceived_pdf(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_u() -> UtilitySpec {
        UtilitySpec::Kt {
            x0: 0.0,
            alpha: 1.0,
            beta: 1.0,
            lambda: 1.0,
        }
    }

    fn inverse_s() -> WeightingSpec {
        WeightingSpec::Prelec {
            gamma: 1.0,
            theta: 0.5,
        }
    }

    #[test]
    fn identity_pwf_collapses_to_objective() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            WeightingSpec::Identity,
        )
        .unwrap();
        for x in [0.1, 0.5, 1.0, 3.0] {
            assert!((t.perceived_cdf(x).unwrap() - t.base.cdf(x)).abs() < 1e-15);
            assert!((t.perceived_pdf(x).unwrap() - t.base.pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn prelec_fixed_point_passes_through() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            WeightingSpec::Prelec {
                gamma: 1.0,
                theta: 0.7,
            },
        )
        .unwrap();
        let target = (1.0f64).exp().recip();
        let x = -(1.0 - target).ln(); // F(x) = 1/e
        assert!((t.perceived_cdf(x).unwrap() - target).abs() < 1e-12);
    }

    #[test]
    fn inverse_s_underweights_high_probabilities() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        let x = -(0.1f64).ln(); // F(x) = 0.9
        let perceived = t.perceived_cdf(x).unwrap();
        let expected = (-(-(0.9f64).ln()).sqrt()).exp();
        assert!((perceived - expected).abs() < 1e-12);
        assert!(perceived < 0.9);
    }

    #[test]
    fn perceived_pdf_matches_cdf_finite_difference() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        let h = 1e-6;
        for x in [0.2, 1.0, 2.5] {
            let fd = (t.perceived_cdf(x + h).unwrap() - t.perceived_cdf(x - h).unwrap())
                / (2.0 * h);
            let an = t.perceived_pdf(x).unwrap();
            assert!(((an - fd) / fd).abs() < 1e-5, "x={x}: {an} vs {fd}");
        }
    }

    #[test]
    fn perceived_pdf_integrates_to_one() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        let one = |_: f64| 1.0;
        let est = perceptual_utility(&one, &t, &linear_u(), Method::Quadrature).unwrap();
        // u(M(y)) = M(y) = 1 turns the integral into total perceived mass...
        // except u(1) = 1 under the linear utility, so the value is exactly
        // the perceived-mass integral.
        assert!((est.value - 1.0).abs() < 1e-6, "mass {}", est.value);
    }

    #[test]
    fn identity_pwf_linear_u_reduces_to_mean() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(2.0).unwrap(),
            WeightingSpec::Identity,
        )
        .unwrap();
        let id = |y: f64| y;
        let est = perceptual_utility(&id, &t, &linear_u(), Method::Quadrature).unwrap();
        assert!((est.value - 2.0).abs() < 1e-6, "mean {}", est.value);
    }

    #[test]
    fn all_loss_metric_gives_negative_utility() {
        let u = UtilitySpec::generalized_concave(10f64.powf(0.7), 2.0, 4.0, 3.0, 2.0, -5.0, -5.0);
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        // Scale the metric so essentially all mass sits below x0.
        let m = |y: f64| 0.05 * y;
        let est = perceptual_utility(&m, &t, &u, Method::Quadrature).unwrap();
        assert!(est.value < 0.0);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        // Smoke configuration with finite MC variance (theta = 1).
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            WeightingSpec::Prelec {
                gamma: 0.8,
                theta: 1.0,
            },
        )
        .unwrap();
        let u = UtilitySpec::Kw {
            x0: 1.0,
            lambda1: 1.0,
            lambda2: 2.0,
            alpha: 1.0,
            beta: 0.5,
        };
        let m = |y: f64| y;
        let quad = perceptual_utility(&m, &t, &u, Method::Quadrature).unwrap();
        let mc = perceptual_utility(&m, &t, &u, Method::MonteCarlo { seed: 9, n: 200_000 })
            .unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (quad.value - mc.value).abs() < 3.0 * se,
            "quad {} mc {} se {}",
            quad.value,
            mc.value,
            se
        );
    }

    #[test]
    fn soi_density_zero_where_metric_hits_reference() {
        let u = UtilitySpec::generalized_concave(2.0, 2.0, 4.0, 3.0, 2.0, -5.0, -5.0);
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        let m = |y: f64| y;
        // M(x) = x0 at x = 2.
        assert!(soi_density(&m, &t, &u, 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn soi_density_integral_reproduces_perceptual_utility() {
        let u = UtilitySpec::Kw {
            x0: 1.5,
            lambda1: 1.0,
            lambda2: 2.0,
            alpha: 1.0,
            beta: 0.7,
        };
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.2).unwrap(),
            inverse_s(),
        )
        .unwrap();
        let m = |y: f64| y;
        let reference = perceptual_utility(&m, &t, &u, Method::Quadrature).unwrap();

        // Independent y-space integration: geometric panels in F toward both
        // endpoints, plus analytic corrections for the chopped tails.
        let levels: Vec<f64> = (1..=12)
            .map(|k| 10f64.powi(-(13 - k)))
            .chain((1..=9).map(|k| k as f64 / 10.0))
            .chain((1..=12).map(|k| 1.0 - 10f64.powi(-(k + 1))))
            .collect();
        let mut total = 0.0;
        let integrand =
            |x: f64| u.value(m(x)).unwrap() * t.perceived_pdf(x).unwrap();
        for pair in levels.windows(2) {
            let a = t.base.quantile(pair[0]).unwrap();
            let b = t.base.quantile(pair[1]).unwrap();
            total += adaptive_simpson(&integrand, a, b, 1e-13).0;
        }
        let y_lo = t.base.quantile(levels[0]).unwrap();
        let y_hi = t.base.quantile(*levels.last().unwrap()).unwrap();
        total += u.value(m(y_lo)).unwrap() * t.pwf.value(levels[0]).unwrap();
        total += u.value(m(y_hi)).unwrap()
            * (1.0 - t.pwf.value(*levels.last().unwrap()).unwrap());

        assert!(
            (total - reference.value).abs() < 1e-7,
            "soi integral {total} vs perceptual utility {}",
            reference.value
        );
    }

    #[test]
    fn perceived_cdf_valid_on_dense_grid() {
        for pwf in [
            WeightingSpec::Identity,
            WeightingSpec::Tk92 { delta: 0.6 },
            inverse_s(),
            WeightingSpec::Prelec {
                gamma: 2.0,
                theta: 1.5,
            },
        ] {
            let t = PerceptualTransform::new(
                ScalarDistribution::exponential(1.0).unwrap(),
                pwf,
            )
            .unwrap();
            let mut prev = 0.0;
            for i in 0..=2000 {
                let x = i as f64 * 0.01;
                let c = t.perceived_cdf(x).unwrap();
                assert!((0.0..=1.0).contains(&c));
                assert!(c >= prev, "{pwf:?} not nondecreasing at x={x}");
                prev = c;
            }
            // TK92 approaches 1 slowly: 1 - w(1-e) ~ e^delta.
            assert!(prev > 1.0 - 1e-4);
        }
    }

    #[test]
    fn monotone_in_stochastic_dominance() {
        // Exponential(mean2) first-order dominates Exponential(mean1) for
        // mean2 > mean1, so perceptual utility must not decrease.
        let u = UtilitySpec::Kw {
            x0: 1.0,
            lambda1: 1.0,
            lambda2: 2.0,
            alpha: 1.0,
            beta: 0.5,
        };
        let m = |y: f64| y;
        let mut prev = f64::NEG_INFINITY;
        for mean in [0.5, 1.0, 2.0, 4.0] {
            let t = PerceptualTransform::new(
                ScalarDistribution::exponential(mean).unwrap(),
                inverse_s(),
            )
            .unwrap();
            let v = perceptual_utility(&m, &t, &u, Method::Quadrature)
                .unwrap()
                .value;
            assert!(v > prev, "mean={mean}: {v} <= {prev}");
            prev = v;
        }
    }

    #[test]
    fn boundary_rejections() {
        let t = PerceptualTransform::new(
            ScalarDistribution::exponential(1.0).unwrap(),
            inverse_s(),
        )
        .unwrap();
        assert!(t.perceived_pdf(0.0).is_err());
        assert_eq!(t.perceived_cdf(-1.0).unwrap(), 0.0);
    }
}
