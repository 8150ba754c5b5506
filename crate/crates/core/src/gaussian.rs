//! The additive white Gaussian noise analogue of the exponent.
//!
//! A test channel is summarised by the empirical correlation `ρ` between
//! input and output and the output scale `σ_z`. The divergence term is
//! minimised over `σ_z` in closed form, leaving a line search over `ρ` for
//! each branch.

use rayon::prelude::*;
use serde::Serialize;

use crate::dmc::{gamma_dmc, Branch, RatePair};
use crate::error::{invalid, Result};
use crate::numeric::{golden_section_min, linspace};

/// Default number of `ρ` grid points.
pub const DEFAULT_RHO_POINTS: usize = 100_000;

const GRID_EDGE: f64 = 1e-9;
const ENDPOINT_CLAMP: f64 = 1e-12;
const REFINE_TOL: f64 = 1e-9;

/// Power constraint `S` and noise variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpec {
    s: f64,
    sigma2: f64,
}

impl GaussianSpec {
    pub fn new(s: f64, sigma2: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0 && sigma2.is_finite() && sigma2 > 0.0) {
            return Err(invalid(format!(
                "power {s} and noise variance {sigma2} must be positive and finite"
            )));
        }
        Ok(Self { s, sigma2 })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `½ ln(1 + S/σ²)`
    pub fn capacity(&self) -> f64 {
        0.5 * (self.s / self.sigma2).ln_1p()
    }

    /// Correlation of the true channel, `√(S/(S+σ²))`.
    pub fn rho_true(&self) -> f64 {
        (self.s / (self.s + self.sigma2)).sqrt()
    }
}

/// Branch values and the attaining `(ρ, σ_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianOptimum {
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub rho_star: f64,
    pub sigma_z_star: f64,
    pub active_branch: Branch,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("correlation {rho} outside (-1, 1)")))
    }
}

/// `½[(ρσ_z − √S)²/σ² + σ_z²(1−ρ²)/σ² − ln(σ_z²(1−ρ²)/σ²) − 1]`.
pub fn gaussian_divergence_term(rho: f64, sigma_z: f64, g: &GaussianSpec) -> Result<f64> {
    check_rho(rho)?;
    if !(sigma_z.is_finite() && sigma_z > 0.0) {
        return Err(invalid(format!("output scale {sigma_z} must be positive")));
    }
    Ok(divergence_unchecked(rho, sigma_z, g))
}

fn divergence_unchecked(rho: f64, sz: f64, g: &GaussianSpec) -> f64 {
    let resid = sz * sz * (1.0 - rho * rho) / g.sigma2;
    let bias = (rho * sz - g.s.sqrt()).powi(2) / g.sigma2;
    (0.5 * (bias + resid - resid.ln() - 1.0)).max(0.0)
}

/// `−½ ln(1 − ρ²)`
pub fn gaussian_mutual_info(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(mutual_info_unchecked(rho))
}

fn mutual_info_unchecked(rho: f64) -> f64 {
    -0.5 * (-rho * rho).ln_1p()
}

/// `[R2 + ½ln(1−ρ²)]_+ − [½ln(1/(1−ρ²)) − R1]_+`
pub fn gamma_gaussian(rho: f64, rates: RatePair) -> Result<f64> {
    Ok(gamma_dmc(gaussian_mutual_info(rho)?, rates))
}

/// Minimiser of the divergence term over `σ_z`: `½(ρ√S + √(ρ²S + 4σ²))`.
pub fn sigma_z_star(rho: f64, g: &GaussianSpec) -> Result<f64> {
    check_rho(rho)?;
    Ok(sigma_star_unchecked(rho, g))
}

fn sigma_star_unchecked(rho: f64, g: &GaussianSpec) -> f64 {
    let a = rho * g.s.sqrt();
    let root = (a * a + 4.0 * g.sigma2).sqrt();
    if a >= 0.0 {
        0.5 * (a + root)
    } else {
        // same root without cancellation
        2.0 * g.sigma2 / (root - a)
    }
}

/// Divergence term at the optimal `σ_z`.
pub fn reduced_divergence(rho: f64, g: &GaussianSpec) -> Result<f64> {
    check_rho(rho)?;
    Ok(divergence_unchecked(rho, sigma_star_unchecked(rho, g), g))
}

// |ρ| at which −½ln(1−ρ²) = r, clamped away from 1
fn rho_at_rate(r: f64) -> f64 {
    (-(-2.0 * r).exp_m1()).sqrt().min(1.0 - ENDPOINT_CLAMP)
}

/// Line-search grid over `ρ`, shared across rate pairs.
#[derive(Debug, Clone)]
pub struct RhoGrid {
    g: GaussianSpec,
    rho: Vec<f64>,
    d: Vec<f64>,
}

impl RhoGrid {
    pub fn new(g: GaussianSpec, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(invalid("rho grid needs at least three points"));
        }
        let rho = linspace(-1.0 + GRID_EDGE, 1.0 - GRID_EDGE, points);
        let d = rho
            .par_iter()
            .map(|&r| divergence_unchecked(r, sigma_star_unchecked(r, &g), &g))
            .collect();
        Ok(Self { g, rho, d })
    }

    pub fn spec(&self) -> &GaussianSpec {
        &self.g
    }

    fn value(&self, rho: f64, with_info: bool) -> f64 {
        let d = divergence_unchecked(rho, sigma_star_unchecked(rho, &self.g), &self.g);
        if with_info {
            d - mutual_info_unchecked(rho)
        } else {
            d
        }
    }

    // Minimum over the union of closed intervals; grid first, then golden
    // refinement in the cells next to the best point. Ties go to smaller |ρ|.
    fn branch_min(&self, intervals: &[(f64, f64)], with_info: bool) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        let better = |cand: (f64, f64), best: Option<(f64, f64)>| match best {
            None => true,
            Some(b) => cand.1 < b.1 || (cand.1 == b.1 && cand.0.abs() < b.0.abs()),
        };
        for &(lo, hi) in intervals {
            if lo > hi {
                continue;
            }
            let start = self.rho.partition_point(|&r| r < lo);
            let end = self.rho.partition_point(|&r| r <= hi);
            let mut local = (lo, self.value(lo, with_info));
            let at_hi = (hi, self.value(hi, with_info));
            if better(at_hi, Some(local)) {
                local = at_hi;
            }
            for k in start..end {
                let v = if with_info {
                    self.d[k] - mutual_info_unchecked(self.rho[k])
                } else {
                    self.d[k]
                };
                if better((self.rho[k], v), Some(local)) {
                    local = (self.rho[k], v);
                }
            }
            let k = self.rho.partition_point(|&r| r < local.0);
            let a = if k == 0 { lo } else { self.rho[k - 1].max(lo) };
            let b = self.rho.get(k + 1).copied().unwrap_or(hi).min(hi);
            if b > a {
                let refined = golden_section_min(|r| self.value(r, with_info), a, b, REFINE_TOL);
                if better(refined, Some(local)) {
                    local = refined;
                }
            }
            if better(local, best) {
                best = Some(local);
            }
        }
        best.unwrap_or((0.0, f64::INFINITY))
    }

    /// Branch minima restricted to `ρ ≥ 0` when `nonnegative` is set.
    fn evaluate_on(&self, rates: RatePair, nonnegative: bool) -> GaussianOptimum {
        let (r1, r2) = (rates.r1(), rates.r2());
        let a1 = rho_at_rate(r1);
        let a2 = rho_at_rate(r2);
        let top = 1.0 - ENDPOINT_CLAMP;
        let sym = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            if nonnegative {
                vec![(lo, hi)]
            } else if lo == 0.0 {
                vec![(-hi, hi)]
            } else {
                vec![(-hi, -lo), (lo, hi)]
            }
        };
        let capacity = self.g.capacity();

        let (rho1, m1) = if r2 >= capacity {
            (self.g.rho_true(), 0.0)
        } else {
            self.branch_min(&sym(0.0, a2), false)
        };
        let (rho2, m2) = self.branch_min(&sym(a2, a1), true);
        let (rho3, m3) = if r1 <= capacity {
            (self.g.rho_true(), 0.0)
        } else {
            self.branch_min(&sym(a1, top), false)
        };
        let e1 = r1 - r2 + m1;
        let e2 = r1 + m2;
        let e3 = m3;
        let e = e1.min(e2).min(e3);
        let (active_branch, rho_star) = if e1 <= e {
            (Branch::E1, rho1)
        } else if e2 <= e {
            (Branch::E2, rho2)
        } else {
            (Branch::E3, rho3)
        };
        let e = if r1 == r2 { 0.0 } else { e.max(0.0) };
        GaussianOptimum {
            e,
            e1,
            e2,
            e3,
            rho_star,
            sigma_z_star: sigma_star_unchecked(rho_star, &self.g),
            active_branch,
        }
    }

    pub fn evaluate(&self, rates: RatePair) -> GaussianOptimum {
        self.evaluate_on(rates, false)
    }

    /// Same search restricted to `ρ ≥ 0`.
    pub fn evaluate_nonnegative(&self, rates: RatePair) -> GaussianOptimum {
        self.evaluate_on(rates, true)
    }
}

/// `E(R1, R2)` for the Gaussian channel with a `points`-point grid over `ρ`.
pub fn gaussian_exponent(
    g: &GaussianSpec,
    rates: RatePair,
    points: usize,
) -> Result<GaussianOptimum> {
    Ok(RhoGrid::new(*g, points)?.evaluate(rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> GaussianSpec {
        GaussianSpec::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GaussianSpec::new(0.0, 1.0).is_err());
        assert!(GaussianSpec::new(1.0, -1.0).is_err());
        assert!(GaussianSpec::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn divergence_examples() {
        let g = unit();
        assert!((gaussian_divergence_term(0.0, 1.0, &g).unwrap() - 0.5).abs() < 1e-15);
        let (rho, sz) = (g.rho_true(), (g.s() + g.sigma2()).sqrt());
        assert!(gaussian_divergence_term(rho, sz, &g).unwrap().abs() < 1e-15);
        assert!(gaussian_divergence_term(0.3, 1e-200, &g).unwrap() > 200.0);
        assert!(gaussian_divergence_term(1.0, 1.0, &g).is_err());
        assert!(gaussian_divergence_term(0.5, 0.0, &g).is_err());
    }

    #[test]
    fn mutual_info_examples() {
        assert_eq!(gaussian_mutual_info(0.0).unwrap(), 0.0);
        assert!((gaussian_mutual_info(0.6).unwrap() - 0.223_143_551_314_209_7).abs() < 1e-12);
        let r: f64 = 0.37;
        let rho = (1.0 - (-2.0 * r).exp()).sqrt();
        assert!((gaussian_mutual_info(rho).unwrap() - r).abs() < 1e-14);
        assert!(gaussian_mutual_info(-1.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let rates = RatePair::new(0.6, 0.1).unwrap();
        assert!((gamma_gaussian(0.0, rates).unwrap() - 0.1).abs() < 1e-15);
        let at = |i: f64| (1.0 - (-2.0 * i).exp()).sqrt();
        assert!(gamma_gaussian(at(0.3), rates).unwrap().abs() < 1e-12);
        assert!((gamma_gaussian(at(0.8), rates).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn sigma_star_examples() {
        let g = unit();
        assert_eq!(sigma_z_star(0.0, &g).unwrap(), 1.0);
        let expected = 0.5 * (0.5 + 4.25f64.sqrt());
        assert!((sigma_z_star(0.5, &g).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.280_776_406).abs() < 1e-9);
        let big = GaussianSpec::new(1e8, 1.0).unwrap();
        assert!(sigma_z_star(-0.999_999, &big).unwrap() > 0.0);
        let g2 = GaussianSpec::new(2.0, 0.5).unwrap();
        assert!((sigma_z_star(0.0, &g2).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_zero_regions() {
        let grid = RhoGrid::new(unit(), 20_001).unwrap();
        let c = unit().capacity();
        for &r in &[0.0, 0.2, c, 1.0] {
            assert_eq!(grid.evaluate(RatePair::new(r, r).unwrap()).e, 0.0);
        }
        for &(r1, r2) in &[(0.3, 0.1), (c, 0.0), (0.2, 0.19)] {
            let opt = grid.evaluate(RatePair::new(r1, r2).unwrap());
            assert_eq!(opt.e, 0.0);
            assert_eq!(opt.e3, 0.0);
        }
        // the true-channel statistics zero the divergence term
        let rho = unit().rho_true();
        assert!(reduced_divergence(rho, &unit()).unwrap() < 1e-15);
    }

    #[test]
    fn optimum_is_consistent() {
        let grid = RhoGrid::new(unit(), 20_001).unwrap();
        let opt = grid.evaluate(RatePair::new(1.0, 0.2).unwrap());
        assert!(opt.e > 0.0 && opt.e <= 0.8);
        assert_eq!(opt.e, opt.e1.min(opt.e2).min(opt.e3));
        let s = sigma_z_star(opt.rho_star, &unit()).unwrap();
        assert_eq!(s, opt.sigma_z_star);
    }

    #[test]
    fn nonnegative_search_matches_full_search() {
        let grid = RhoGrid::new(unit(), 20_001).unwrap();
        for &(r1, r2) in &[(1.0, 0.2), (0.8, 0.5), (1.4, 0.0), (0.5, 0.1)] {
            let rates = RatePair::new(r1, r2).unwrap();
            let a = grid.evaluate(rates);
            let b = grid.evaluate_nonnegative(rates);
            assert_eq!(a.e, b.e);
            assert_eq!(a.rho_star, b.rho_star);
        }
    }

    proptest! {
        #[test]
        fn divergence_nonnegative(rho in -0.999f64..0.999, sz in 0.01f64..10.0, s in 0.1f64..10.0, n in 0.1f64..10.0) {
            let g = GaussianSpec::new(s, n).unwrap();
            prop_assert!(gaussian_divergence_term(rho, sz, &g).unwrap() >= 0.0);
            let star = sigma_z_star(rho, &g).unwrap();
            let at_star = gaussian_divergence_term(rho, star, &g).unwrap();
            prop_assert!(at_star <= gaussian_divergence_term(rho, sz, &g).unwrap() + 1e-12);
        }

        #[test]
        fn gamma_identity(rho in -0.9999f64..0.9999, r1 in 0.0f64..3.0, f in 0.0f64..=1.0) {
            let rates = RatePair::new(r1, r1 * f).unwrap();
            let i = gaussian_mutual_info(rho).unwrap();
            prop_assert_eq!(gamma_gaussian(rho, rates).unwrap(), gamma_dmc(i, rates));
        }
    }
}
