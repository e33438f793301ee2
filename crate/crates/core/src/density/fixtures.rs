//! Named densities used as fixtures by tests, the bench and the CLI.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use statrs::distribution::{ContinuousCDF, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use super::generic::{invert_cdf, Convexity, GenericDensity, Monotone, Shape};
use super::spec::DensitySpec;
use super::{Density, LogLinear, PiecewiseConstant, PiecewiseLinear, Side};
use crate::numeric::integrate;
use crate::{domain, Error, Result};

/// Parameter names of each named family, in positional order.
pub fn parameter_names(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "uniform" => &["a", "b"],
        "exp" => &["rate"],
        "laplace" => &["loc", "scale"],
        "gaussian" => &["mean", "sd"],
        "triangular" => &["a", "c", "b"],
        "power" => &["gamma"],
        "heavytail" => &["alpha", "beta", "gamma"],
        "gamma" => &["shape"],
        "truncexp" => &["rate", "t"],
        "halfgaussian" => &["sd"],
        "linear_decreasing" | "concave_quadratic" => &[],
        _ => return None,
    })
}

fn defaults(name: &str) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match name {
        "uniform" => &[("a", 0.0), ("b", 1.0)],
        "exp" => &[("rate", 1.0)],
        "laplace" => &[("loc", 0.0), ("scale", 1.0)],
        "gaussian" => &[("mean", 0.0), ("sd", 1.0)],
        "triangular" => &[("a", 0.0), ("c", 0.5), ("b", 1.0)],
        "power" => &[("gamma", 0.5)],
        "heavytail" => &[("alpha", 1.0), ("beta", 0.0), ("gamma", 0.5)],
        "gamma" => &[("shape", 3.0)],
        "truncexp" => &[("rate", 1.0), ("t", 3.0)],
        "halfgaussian" => &[("sd", 1.0)],
        _ => &[],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Splits `"power(0.5)"` into `("power", [0.5])`.
pub fn parse_call(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), vec![]));
    };
    if !s.ends_with(')') {
        return Err(Error::Spec(format!("unbalanced parentheses in {s:?}")));
    }
    let args = s[open + 1..s.len() - 1]
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Spec(format!("bad argument {a:?} in {s:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    Ok((s[..open].trim().to_string(), args))
}

/// Resolves a named family: positional arguments in the name, then explicit
/// parameters, then defaults.
pub fn named(name: &str, params: &BTreeMap<String, f64>) -> Result<Density> {
    let (base, args) = parse_call(name)?;
    let names = parameter_names(&base).ok_or_else(|| Error::Spec(format!("unknown named density {base:?}")))?;
    if args.len() > names.len() {
        return Err(Error::Spec(format!("{base} takes {} parameters", names.len())));
    }
    let mut p = defaults(&base);
    for (k, v) in names.iter().zip(&args) {
        p.insert(k.to_string(), *v);
    }
    for (k, v) in params {
        if !names.contains(&k.as_str()) {
            return Err(Error::Spec(format!("{base} has no parameter {k:?}")));
        }
        p.insert(k.clone(), *v);
    }
    let g = |k: &str| p[k];
    let d: Density = match base.as_str() {
        "uniform" => PiecewiseConstant::uniform(g("a"), g("b"))?.into(),
        "exp" => LogLinear::exponential(g("rate"))?.into(),
        "laplace" => LogLinear::laplace(g("loc"), g("scale"))?.into(),
        "gaussian" => gaussian(g("mean"), g("sd"))?.into(),
        "triangular" => triangular(g("a"), g("c"), g("b"))?.into(),
        "power" => power(g("gamma"))?.into(),
        "heavytail" => heavytail(g("alpha"), g("beta"), g("gamma"))?.into(),
        "gamma" => gamma(g("shape"))?.into(),
        "truncexp" => truncated_exp(g("rate"), g("t"))?.into(),
        "halfgaussian" => half_gaussian(g("sd"))?.into(),
        "linear_decreasing" => linear_decreasing().into(),
        "concave_quadratic" => concave_quadratic().into(),
        _ => unreachable!(),
    };
    let spec = DensitySpec::Named { name: base, params: p };
    Ok(match d {
        Density::Generic(gd) => Density::Generic(gd.with_spec(spec)),
        other => other,
    })
}

pub fn gaussian(mean: f64, sd: f64) -> Result<GenericDensity> {
    if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
        return domain("gaussian needs finite mean and positive sd");
    }
    let n = Normal::new(mean, sd).map_err(|e| Error::Domain(e.to_string()))?;
    let n2 = n;
    let c = -(sd * (2.0 * PI).sqrt()).ln();
    let logp = move |x: f64| c - 0.5 * ((x - mean) / sd).powi(2);
    Ok(GenericDensity::new("gaussian", f64::NEG_INFINITY, f64::INFINITY, move |x| logp(x).exp())
        .with_log_pdf(logp)
        .with_cdf(move |x| n.cdf(x))
        .with_quantile(move |u| n2.inverse_cdf(u))
        .with_derivative(move |x, _| -(x - mean) / (sd * sd) * logp(x).exp())
        .with_shape(Shape { log_concave: true, ..Shape::default() }))
}

pub fn triangular(a: f64, c: f64, b: f64) -> Result<PiecewiseLinear> {
    if !(a < b) || !(a <= c && c <= b) {
        return domain("triangular needs a ≤ c ≤ b with a < b");
    }
    let h = 2.0 / (b - a);
    if c == a {
        PiecewiseLinear::continuous(vec![a, b], vec![h, 0.0])
    } else if c == b {
        PiecewiseLinear::continuous(vec![a, b], vec![0.0, h])
    } else {
        PiecewiseLinear::continuous(vec![a, c, b], vec![0.0, h, 0.0])
    }
}

/// `(1+γ)x^γ` on `(0, 1]`.
pub fn power(gamma: f64) -> Result<GenericDensity> {
    if !(gamma > -1.0) || !gamma.is_finite() {
        return domain("power needs γ > −1");
    }
    let k = 1.0 + gamma;
    let monotone = if gamma > 0.0 {
        Some(Monotone::Increasing)
    } else if gamma < 0.0 {
        Some(Monotone::Decreasing)
    } else {
        None
    };
    let convexity = if gamma == 0.0 || gamma == 1.0 {
        None
    } else if gamma > 1.0 || gamma < 0.0 {
        Some(Convexity::Convex)
    } else {
        Some(Convexity::Concave)
    };
    Ok(GenericDensity::new("power", 0.0, 1.0, move |x| k * x.powf(gamma))
        .with_cdf(move |x| x.clamp(0.0, 1.0).powf(k))
        .with_quantile(move |u| u.clamp(0.0, 1.0).powf(1.0 / k))
        .with_log_pdf(move |x| k.ln() + gamma * x.ln())
        .with_derivative(move |x, _| {
            if gamma == 0.0 {
                0.0
            } else if x == 0.0 {
                if gamma < 1.0 {
                    f64::INFINITY * gamma.signum()
                } else if gamma == 1.0 {
                    k
                } else {
                    0.0
                }
            } else {
                k * gamma * x.powf(gamma - 1.0)
            }
        })
        .with_shape(Shape { monotone, convexity, log_concave: gamma >= 0.0 }))
}

/// The heavy-tailed decreasing family
/// `q(x) = 2^{1−γ}x^{γ−1} on (0,2) + 2^{1+α}(log 2)^{1+β} x^{−1−α}(log x)^{−1−β} on [2,∞)`,
/// normalized.
pub fn heavytail(alpha: f64, beta: f64, gamma: f64) -> Result<GenericDensity> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain("heavytail needs γ ∈ (0,1)");
    }
    let ok = (alpha > 0.0 && beta >= -1.0) || (alpha == 0.0 && beta > 0.0);
    if !ok || !alpha.is_finite() || !beta.is_finite() {
        return domain("heavytail needs α > 0, β ≥ −1 or α = 0, β > 0");
    }
    let k = 2f64.powf(1.0 + alpha) * LN_2.powf(1.0 + beta);
    // ∫_2^x of the tail part, on the log scale u = log x
    let tail = move |x: f64| -> f64 {
        if x <= 2.0 {
            return 0.0;
        }
        if alpha == 0.0 {
            let lx = x.ln();
            return 2.0 * LN_2.powf(1.0 + beta) / beta * (LN_2.powf(-beta) - lx.powf(-beta));
        }
        if beta == -1.0 {
            return 2f64.powf(1.0 + alpha) / alpha * (2f64.powf(-alpha) - x.powf(-alpha));
        }
        let f = |u: f64| k * (-alpha * u).exp() * u.powf(-1.0 - beta);
        integrate(&f, LN_2, x.ln(), 1e-14)
    };
    let head = 2.0 / gamma;
    let total = head + tail(f64::INFINITY);
    let c = 1.0 / total;
    let pdf = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x < 2.0 {
            c * 2f64.powf(1.0 - gamma) * x.powf(gamma - 1.0)
        } else {
            c * k * x.powf(-1.0 - alpha) * x.ln().powf(-1.0 - beta)
        }
    };
    let cdf = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x <= 2.0 {
            c * 2f64.powf(1.0 - gamma) * x.powf(gamma) / gamma
        } else {
            (c * (head + tail(x))).min(1.0)
        }
    };
    let quantile = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        if u <= c * head {
            return (u * gamma / (c * 2f64.powf(1.0 - gamma))).powf(1.0 / gamma);
        }
        // bisection on log x
        let lx = invert_cdf(|l: f64| cdf(l.exp()), LN_2, 700.0, u);
        lx.exp()
    };
    let tilde_c = c;
    Ok(GenericDensity::new("heavytail", 0.0, f64::INFINITY, pdf)
        .with_cdf(cdf)
        .with_quantile(quantile)
        .with_kinks(vec![2.0])
        .with_tilde(move |y: f64| {
            // closed form above the jump level p(2−) = c, numeric below
            if y > tilde_c {
                2.0 * (tilde_c / y).powf(1.0 / (1.0 - gamma))
            } else {
                let lx = crate::numeric::bisect_predicate(|l: f64| pdf(l.exp()) < y, LN_2, 700.0, 200);
                lx.exp()
            }
        })
        .with_shape(Shape { monotone: Some(Monotone::Decreasing), ..Shape::default() }))
}

/// Gamma(shape, 1).
pub fn gamma(shape: f64) -> Result<GenericDensity> {
    if !(shape >= 1.0) || !shape.is_finite() {
        return domain("gamma fixture needs shape ≥ 1 (log-concave range)");
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let g2 = g;
    let lc = -ln_gamma(shape);
    let logp = move |x: f64| {
        if x <= 0.0 {
            if shape == 1.0 {
                lc
            } else {
                f64::NEG_INFINITY
            }
        } else {
            lc + (shape - 1.0) * x.ln() - x
        }
    };
    Ok(GenericDensity::new("gamma", 0.0, f64::INFINITY, move |x| logp(x).exp())
        .with_log_pdf(logp)
        .with_cdf(move |x| g.cdf(x))
        .with_quantile(move |u| g2.inverse_cdf(u))
        .with_derivative(move |x, _| {
            let p = logp(x).exp();
            if x <= 0.0 {
                if shape == 1.0 {
                    -p
                } else if shape < 2.0 {
                    f64::INFINITY
                } else if shape == 2.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                p * ((shape - 1.0) / x - 1.0)
            }
        })
        .with_shape(Shape { log_concave: true, ..Shape::default() }))
}

/// Exponential(rate) conditioned on `(0, t]`.
pub fn truncated_exp(rate: f64, t: f64) -> Result<LogLinear> {
    if !(rate > 0.0) || !(t > 0.0) || !t.is_finite() {
        return domain("truncexp needs rate > 0 and finite t > 0");
    }
    let z = -(-rate * t).exp_m1();
    LogLinear::new(vec![0.0, t], vec![-rate], vec![(rate / z).ln()])
}

pub fn half_gaussian(sd: f64) -> Result<GenericDensity> {
    if !(sd > 0.0) || !sd.is_finite() {
        return domain("halfgaussian needs sd > 0");
    }
    let n = Normal::new(0.0, sd).map_err(|e| Error::Domain(e.to_string()))?;
    let n2 = n;
    let p0 = 2.0 / (sd * (2.0 * PI).sqrt());
    let logp = move |x: f64| p0.ln() - 0.5 * (x / sd).powi(2);
    Ok(GenericDensity::new("halfgaussian", 0.0, f64::INFINITY, move |x| logp(x).exp())
        .with_log_pdf(logp)
        .with_cdf(move |x| (2.0 * n.cdf(x) - 1.0).max(0.0))
        .with_quantile(move |u| n2.inverse_cdf(0.5 * (1.0 + u)))
        .with_derivative(move |x, _| -x / (sd * sd) * logp(x).exp())
        .with_tilde(move |y| if y >= p0 { 0.0 } else { sd * (2.0 * (p0 / y).ln()).sqrt() })
        .with_shape(Shape { monotone: Some(Monotone::Decreasing), convexity: None, log_concave: true }))
}

/// `2(1 − x)` on `[0, 1]`.
pub fn linear_decreasing() -> PiecewiseLinear {
    PiecewiseLinear::continuous(vec![0.0, 1.0], vec![2.0, 0.0]).expect("valid fixture")
}

/// `(3/2)(1 − x²)` on `[0, 1]`.
pub fn concave_quadratic() -> GenericDensity {
    GenericDensity::new("concave_quadratic", 0.0, 1.0, |x| 1.5 * (1.0 - x * x))
        .with_cdf(|x| {
            let x = x.clamp(0.0, 1.0);
            1.5 * x - 0.5 * x.powi(3)
        })
        .with_quantile(|u| invert_cdf(|x| 1.5 * x - 0.5 * x.powi(3), 0.0, 1.0, u))
        .with_derivative(|x, _| -3.0 * x)
        .with_shape(Shape {
            monotone: Some(Monotone::Decreasing),
            convexity: Some(Convexity::Concave),
            log_concave: true,
        })
}

/// A density on a bounded interval given by closed forms of `p`, `p′` and the
/// CDF.
fn closed(
    name: &str,
    p: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    dp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    cdf: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    shape: Shape,
) -> GenericDensity {
    let c2 = cdf.clone();
    GenericDensity::new(name, 0.0, 1.0, p)
        .with_derivative(move |x, _| dp(x))
        .with_cdf(move |x| cdf(x.clamp(0.0, 1.0)))
        .with_quantile(move |u| invert_cdf(&c2, 0.0, 1.0, u))
        .with_shape(shape)
}

/// A monotone fixture on a bounded interval with its shape data.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub density: Density,
    pub lo: f64,
    pub hi: f64,
    pub monotone: Monotone,
    pub convexity: Option<Convexity>,
}

impl Fixture {
    fn new(name: &str, density: impl Into<Density>, monotone: Monotone, convexity: Option<Convexity>) -> Self {
        let density = density.into();
        let (lo, hi) = density.support();
        Fixture { name: name.into(), density, lo, hi, monotone, convexity }
    }

    /// Values at the closed ends of the interval.
    pub fn end_values(&self) -> (f64, f64) {
        (self.density.eval_right(self.lo), self.density.eval(self.hi))
    }

    pub fn variation(&self) -> f64 {
        let (a, b) = self.end_values();
        (a - b).abs()
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        self.density.derivative(x, side)
    }
}

use Convexity::{Concave, Convex};
use Monotone::{Decreasing, Increasing};

fn shape(m: Monotone, c: Option<Convexity>) -> Shape {
    Shape { monotone: Some(m), convexity: c, log_concave: false }
}

/// Monotone convex-concave fixtures on `[0, 1]` with bounded values.
pub fn convex_concave_fixtures() -> Vec<Fixture> {
    let e1 = std::f64::consts::E - 1.0;
    vec![
        Fixture::new("linear_decreasing", linear_decreasing(), Decreasing, None),
        Fixture::new("linear_increasing", PiecewiseLinear::continuous(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap(), Increasing, None),
        Fixture::new("concave_quadratic", concave_quadratic(), Decreasing, Some(Concave)),
        Fixture::new(
            "cubic_increasing",
            closed("3x^2", |x| 3.0 * x * x, |x| 6.0 * x, |x| x.powi(3), shape(Increasing, Some(Convex))),
            Increasing,
            Some(Convex),
        ),
        Fixture::new(
            "cubic_decreasing",
            closed(
                "3(1-x)^2",
                |x| 3.0 * (1.0 - x).powi(2),
                |x| -6.0 * (1.0 - x),
                |x| 1.0 - (1.0 - x).powi(3),
                shape(Decreasing, Some(Convex)),
            ),
            Decreasing,
            Some(Convex),
        ),
        Fixture::new(
            "cosine",
            closed(
                "cos",
                |x| 0.5 * PI * (0.5 * PI * x).cos(),
                |x| -0.25 * PI * PI * (0.5 * PI * x).sin(),
                |x| (0.5 * PI * x).sin(),
                shape(Decreasing, Some(Concave)),
            ),
            Decreasing,
            Some(Concave),
        ),
        Fixture::new(
            "reciprocal",
            closed(
                "1/(1+x)",
                |x| 1.0 / (LN_2 * (1.0 + x)),
                |x| -1.0 / (LN_2 * (1.0 + x).powi(2)),
                |x| (1.0 + x).ln() / LN_2,
                shape(Decreasing, Some(Convex)),
            ),
            Decreasing,
            Some(Convex),
        ),
        Fixture::new(
            "exp_increasing",
            closed("e^x", move |x| x.exp() / e1, move |x| x.exp() / e1, move |x| x.exp_m1() / e1, shape(Increasing, Some(Convex))),
            Increasing,
            Some(Convex),
        ),
        Fixture::new(
            "sqrt",
            closed(
                "sqrt",
                |x| 1.5 * x.sqrt(),
                |x| if x == 0.0 { f64::INFINITY } else { 0.75 / x.sqrt() },
                |x| x.powf(1.5),
                shape(Increasing, Some(Concave)),
            ),
            Increasing,
            Some(Concave),
        ),
    ]
}

/// Monotone fixtures on bounded intervals with finite variation.
pub fn monotone_fixtures() -> Vec<Fixture> {
    let mut v = convex_concave_fixtures();
    v.push(Fixture::new("truncexp", truncated_exp(1.0, 3.0).unwrap(), Decreasing, Some(Convex)));
    v.push(Fixture::new("power_0.5", power(0.5).unwrap(), Increasing, Some(Concave)));
    v.push(Fixture::new(
        "steps",
        PiecewiseConstant::new(vec![0.0, 0.25, 0.5, 1.0], vec![2.0, 1.2, 0.4]).unwrap(),
        Decreasing,
        None,
    ));
    let ht = half_gaussian(1.0).unwrap();
    let z = ht.cdf(2.0);
    let trunc = closed(
        "halfgaussian_trunc",
        move |x| {
            let y = 2.0 * x;
            2.0 * (2.0 / (2.0 * PI).sqrt()) * (-0.5 * y * y).exp() / z
        },
        move |x| {
            let y = 2.0 * x;
            -4.0 * y * (2.0 / (2.0 * PI).sqrt()) * (-0.5 * y * y).exp() / z
        },
        move |x| ht.cdf(2.0 * x) / z,
        shape(Decreasing, None),
    );
    v.push(Fixture::new("halfgaussian_trunc", trunc, Decreasing, None));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_densities() {
        for f in monotone_fixtures() {
            let m = f.density.total_mass();
            assert!((m - 1.0).abs() < 1e-9, "{}: {m}", f.name);
            let q = crate::numeric::integrate(&|x| f.density.eval(x), f.lo, f.hi, 1e-12);
            assert!((q - 1.0).abs() < 1e-8, "{}: {q}", f.name);
        }
    }

    #[test]
    fn heavytail_normalized() {
        for (a, b, g) in [(1.0, 0.0, 0.5), (0.0, 1.0, 0.5), (2.0, -1.0, 0.3), (0.5, 0.5, 0.7)] {
            let h = heavytail(a, b, g).unwrap();
            assert!((h.cdf(f64::INFINITY) - 1.0).abs() < 1e-9);
            let u = 0.9;
            assert!((h.cdf(h.quantile(u)) - u).abs() < 1e-9);
            let x = 5.0;
            let num = crate::numeric::integrate(&|t| h.pdf(t), 2.0, x, 1e-12);
            assert!((h.cdf(x) - h.cdf(2.0) - num).abs() < 1e-9);
        }
    }

    #[test]
    fn call_syntax() {
        let d = named("power(0.5)", &BTreeMap::new()).unwrap();
        assert!((d.eval(1.0) - 1.5).abs() < 1e-15);
        assert!(named("power(0.5,1)", &BTreeMap::new()).is_err());
        assert!(named("nope", &BTreeMap::new()).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = gaussian(0.0, 1.0).unwrap();
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((g.pdf(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }
}
