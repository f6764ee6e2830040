//! Least-squares calibration of the Hertz pressure law
//! `p(r) = p0 * sqrt(a^2 - r^2) / a` against a sampled profile.

use crate::contact::PressureSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct HertzFit {
    /// Contact half-width.
    pub a: f64,
    /// Peak pressure at the contact center.
    pub p0: f64,
    /// Relative L2 residual of the fit over the whole profile.
    pub residual: f64,
}

impl HertzFit {
    /// Model pressure at arc distance `r` (zero outside the support).
    pub fn pressure(&self, r: f64) -> f64 {
        if r.abs() >= self.a {
            0.0
        } else {
            self.p0 * (self.a * self.a - r * r).sqrt() / self.a
        }
    }
}

/// For a fixed half-width the peak pressure is linear least squares; the
/// half-width itself is found by a scan plus golden-section refinement of
/// the residual.
pub fn calibrate_hertz(profile: &[PressureSample]) -> Result<HertzFit> {
    let compressive: Vec<&PressureSample> = profile.iter().filter(|s| s.pressure > 0.0).collect();
    if compressive.is_empty() {
        return Err(Error::Config(
            "pressure profile has no compressive support to fit".into(),
        ));
    }
    let r_max = profile.iter().map(|s| s.r).fold(0.0, f64::max);
    let support_max = compressive.iter().map(|s| s.r).fold(0.0, f64::max);
    let norm2: f64 = profile.iter().map(|s| s.pressure * s.pressure).sum();

    let residual2 = |a: f64| -> (f64, f64) {
        // Optimal p0 for this a, then the squared misfit.
        let mut num = 0.0;
        let mut den = 0.0;
        for s in profile {
            if s.r < a {
                let phi = (a * a - s.r * s.r).sqrt() / a;
                num += s.pressure * phi;
                den += phi * phi;
            }
        }
        if den == 0.0 {
            return (norm2, 0.0);
        }
        let p0 = (num / den).max(0.0);
        let mut misfit = 0.0;
        for s in profile {
            let model = if s.r < a {
                p0 * (a * a - s.r * s.r).sqrt() / a
            } else {
                0.0
            };
            misfit += (s.pressure - model) * (s.pressure - model);
        }
        (misfit, p0)
    };

    // Coarse scan over plausible half-widths.
    let lo = 0.25 * support_max.max(1e-12);
    let hi = (2.0 * support_max).min(r_max.max(support_max * 2.0)).max(lo * 1.001);
    let mut best_a = support_max.max(1e-12);
    let mut best = residual2(best_a).0;
    let scans = 400;
    for i in 0..=scans {
        let a = lo + (hi - lo) * i as f64 / scans as f64;
        let (m, _) = residual2(a);
        if m < best {
            best = m;
            best_a = a;
        }
    }
    // Golden-section refinement around the best scan cell.
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let cell = (hi - lo) / scans as f64;
    let mut x0 = (best_a - 2.0 * cell).max(lo);
    let mut x3 = (best_a + 2.0 * cell).min(hi);
    let mut x1 = x3 - gr * (x3 - x0);
    let mut x2 = x0 + gr * (x3 - x0);
    let mut f1 = residual2(x1).0;
    let mut f2 = residual2(x2).0;
    for _ in 0..200 {
        if f1 < f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - gr * (x3 - x0);
            f1 = residual2(x1).0;
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + gr * (x3 - x0);
            f2 = residual2(x2).0;
        }
        if (x3 - x0).abs() < 1e-14 * support_max.max(1.0) {
            break;
        }
    }
    let a = if f1 < f2 { x1 } else { x2 };
    let (misfit, p0) = residual2(a);
    if p0 <= 0.0 {
        return Err(Error::Config("pressure profile fits a zero peak".into()));
    }
    Ok(HertzFit {
        a,
        p0,
        residual: (misfit / norm2).sqrt(),
    })
}

/// Relative L2 distance between a profile and a fitted law.
pub fn profile_misfit(profile: &[PressureSample], fit: &HertzFit) -> f64 {
    let mut misfit = 0.0;
    let mut norm = 0.0;
    for s in profile {
        let model = fit.pressure(s.r);
        misfit += (s.pressure - model) * (s.pressure - model);
        norm += s.pressure * s.pressure;
    }
    if norm == 0.0 {
        return if misfit == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (misfit / norm).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::PressureSample;

    fn sample(r: f64, p: f64) -> PressureSample {
        PressureSample {
            r,
            pressure: p,
            position: [r, 0.0],
        }
    }

    #[test]
    fn recovers_synthetic_hertz_parameters() {
        let a = 0.2;
        let p0 = 1.0e10;
        let profile: Vec<PressureSample> = (0..200)
            .map(|i| {
                let r = 0.4 * i as f64 / 199.0;
                let p = if r < a {
                    p0 * (a * a - r * r).sqrt() / a
                } else {
                    0.0
                };
                sample(r, p)
            })
            .collect();
        let fit = calibrate_hertz(&profile).unwrap();
        assert!((fit.a - a).abs() / a < 1e-6, "a = {}", fit.a);
        assert!((fit.p0 - p0).abs() / p0 < 1e-6, "p0 = {}", fit.p0);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn zero_profile_is_rejected() {
        let profile: Vec<PressureSample> = (0..10).map(|i| sample(i as f64 * 0.1, 0.0)).collect();
        assert!(calibrate_hertz(&profile).is_err());
    }
}
