use super::{Approximant, CertifiedApproximant};
use crate::density::{Density, PiecewiseConstant};
use crate::numeric::{integrate_split, TOL_MEAN, TOL_MEASURE};
use crate::{domain, Result};

/// Piecewise constant approximation of a monotone density on `I = (a, b)`
/// with `d` cells on the geometric grid `x_j = a + ((1+η)^j − 1)/V`,
/// `η = (1+VL)^{1/d} − 1`, levels equal to the cell means of `p`.
///
/// The bound is `min(η, 2)`, and the measured error is `∫_I |p − p̄|`.
/// Nondecreasing densities use the grid reflected about the midpoint.
pub fn approx_monotone_pc(p: &Density, a: f64, b: f64, d: usize) -> Result<CertifiedApproximant> {
    if !a.is_finite() || !b.is_finite() || !(b > a) {
        return domain("the interval must be bounded with positive length");
    }
    if d == 0 {
        return domain("at least one cell is required");
    }
    let l = b - a;
    let (pa, pb) = (p.eval_right(a), p.eval(b));
    if !pa.is_finite() || !pb.is_finite() {
        return domain("the density must be bounded on the interval");
    }
    let v = (pa - pb).abs();
    let breaks = if v == 0.0 { vec![a, b] } else { geometric_grid(a, b, v, d, pb > pa) };
    let cuts = p.breakpoints();
    let f = |x: f64| p.eval(x);
    let levels: Vec<f64> = breaks
        .windows(2)
        .map(|w| integrate_split(&f, w[0], w[1], &cuts, TOL_MEAN) / (w[1] - w[0]))
        .collect();
    let q = PiecewiseConstant::from_unnormalized(breaks.clone(), levels)?;
    let bound = if v == 0.0 { 0.0 } else { ((v * l).ln_1p() / d as f64).exp_m1().min(2.0) };
    let mut all_cuts = cuts;
    all_cuts.extend_from_slice(&breaks);
    let err = integrate_split(&|x: f64| (p.eval(x) - q.eval(x)).abs(), a, b, &all_cuts, TOL_MEASURE);
    let pieces = q.cells();
    Ok(CertifiedApproximant { approximant: Approximant::Density(q.into()), bound, measured: Some(err), pieces })
}

/// `a = x_0 < … < x_d = b` with consecutive widths growing by `1 + η` away
/// from the end where the density is largest.
fn geometric_grid(a: f64, b: f64, v: f64, d: usize, increasing: bool) -> Vec<f64> {
    let l = b - a;
    let r = ((v * l).ln_1p() / d as f64).exp();
    let offsets: Vec<f64> = (0..=d)
        .map(|j| if j == d { l } else { (r.powi(j as i32) - 1.0) / v })
        .collect();
    if increasing {
        offsets.iter().rev().map(|o| if *o == l { a } else { b - o }).collect()
    } else {
        offsets.iter().map(|o| if *o == l { b } else { a + o }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fixtures;

    #[test]
    fn linear_density_one_cell() {
        let p: Density = fixtures::linear_decreasing().into();
        let c = approx_monotone_pc(&p, 0.0, 1.0, 1).unwrap();
        assert!((c.bound - 2.0).abs() < 1e-12);
        assert!((c.measured.unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(c.approximant.knots(), vec![0.0, 1.0]);
    }

    #[test]
    fn linear_density_eight_cells() {
        let p: Density = fixtures::linear_decreasing().into();
        let c = approx_monotone_pc(&p, 0.0, 1.0, 8).unwrap();
        let eta = 3f64.powf(1.0 / 8.0) - 1.0;
        assert!((c.bound - eta).abs() < 1e-12);
        assert!(c.measured.unwrap() <= eta);
        assert!(c.measured.unwrap() <= 2.0 * 3f64.ln() / 8.0);
        // widths grow by 1 + η
        let k = c.approximant.knots();
        for j in 2..k.len() {
            let ratio = (k[j] - k[j - 1]) / (k[j - 1] - k[j - 2]);
            assert!((ratio - (1.0 + eta)).abs() < 1e-9 * (1.0 + eta), "{ratio}");
        }
    }

    #[test]
    fn constant_density_is_exact() {
        let p: Density = PiecewiseConstant::uniform(2.0, 4.0).unwrap().into();
        for d in [1, 3, 7] {
            let c = approx_monotone_pc(&p, 2.0, 4.0, d).unwrap();
            assert_eq!(c.bound, 0.0);
            assert!(c.measured.unwrap() < 1e-12);
            assert_eq!(c.pieces, 1);
        }
    }

    #[test]
    fn increasing_density_uses_reflected_grid() {
        let p: Density =
            crate::PiecewiseLinear::continuous(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap().into();
        let c = approx_monotone_pc(&p, 0.0, 1.0, 4).unwrap();
        let k = c.approximant.knots();
        // the short cells sit near b, where the density is large
        assert!(k[4] - k[3] < k[1] - k[0]);
        assert!(c.measured.unwrap() <= c.bound);
    }

    #[test]
    fn unbounded_interval_is_rejected() {
        let p: Density = crate::LogLinear::exponential(1.0).unwrap().into();
        assert!(approx_monotone_pc(&p, 0.0, f64::INFINITY, 4).is_err());
    }
}
