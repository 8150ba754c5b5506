//! Zero, partial and full-security regions of the rate plane.
//!
//! Full security at a rate pair means `E(R1, R2) = R1 − R2`: observing the
//! wiretap output is exponentially no better than guessing the message.

use std::fmt;

use serde::Serialize;

use crate::channel::{ChannelSpec, ConditionalChannel};
use crate::dmc::{ExponentSolver, MuGrid, RatePair};
use crate::error::{invalid, Result};
use crate::solver::SolverOptions;

/// Default classification tolerance in nats.
pub const DEFAULT_TOL: f64 = 1e-6;

const BISECT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RateClass {
    /// `E = 0`
    Zero,
    /// `0 < E < R1 − R2`
    Partial,
    /// `E = R1 − R2 > 0`
    Full,
}

impl fmt::Display for RateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateClass::Zero => "ZERO",
            RateClass::Partial => "PARTIAL",
            RateClass::Full => "FULL",
        })
    }
}

/// Full-security `R2` values at one `R1`: every `R2` in `[lower, upper)`
/// gives `E = R1 − R2` (the end `R2 = R1` holds trivially).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullSecurityInterval {
    pub lower: f64,
    pub upper: f64,
    /// Whether recomputing `E` at both ends confirmed `E = R1 − R2` within
    /// [`DEFAULT_TOL`].
    pub verified: bool,
}

/// The unconstrained minimiser `Q*` of `D − I` and the derived quantities
/// that govern the security regions.
#[derive(Debug, Clone)]
pub struct SecurityAnalysis {
    solver: ExponentSolver,
    pub q_star: ConditionalChannel,
    pub i_qstar: f64,
    pub d_qstar: f64,
    pub i_p: f64,
}

impl SecurityAnalysis {
    pub fn new(spec: &ChannelSpec, options: SolverOptions, grid: MuGrid) -> Result<Self> {
        Ok(Self::from_solver(ExponentSolver::new(spec, options, grid)?))
    }

    pub fn from_solver(solver: ExponentSolver) -> Self {
        let q = solver.qstar();
        Self {
            q_star: q.q.clone(),
            i_qstar: q.mutual_info,
            d_qstar: q.divergence,
            i_p: solver.i_p(),
            solver,
        }
    }

    pub fn solver(&self) -> &ExponentSolver {
        &self.solver
    }

    /// `E3(R1) = min{D : I ≥ R1}`; `+inf` beyond `I_{Q*}`.
    pub fn e3(&self, r1: f64) -> Result<f64> {
        self.solver.e3(r1)
    }

    /// `E3` tabulated on `r1s`.
    pub fn e3_table(&self, r1s: &[f64]) -> Result<Vec<(f64, f64)>> {
        r1s.iter().map(|&r| Ok((r, self.e3(r)?))).collect()
    }

    /// The sufficient construction `[max(I_{Q*} − D*, R1 − E3(R1)), I_{Q*}]`,
    /// defined for `R1 > I_{Q*}`.
    pub fn sufficient_bracket(&self, r1: f64) -> Result<Option<(f64, f64)>> {
        if r1 <= self.i_qstar {
            return Ok(None);
        }
        let lower = (self.i_qstar - self.d_qstar)
            .max(r1 - self.e3(r1)?)
            .max(0.0);
        Ok((lower <= self.i_qstar).then_some((lower, self.i_qstar)))
    }

    // min{D − I : R2 ≤ I ≤ R1} + R2 ≥ 0
    fn e2_condition(&self, r2: f64, r1: f64) -> Result<bool> {
        Ok(self.solver.e2_inner_min(r2, r1)? + r2 >= 0.0)
    }

    /// Both boundary conditions are monotone in `R2`, so each threshold is
    /// located by bisection on `[0, R1]`.
    pub fn full_security_interval(&self, r1: f64) -> Result<Option<FullSecurityInterval>> {
        if !(r1.is_finite() && r1 > 0.0) {
            return Err(invalid(format!("R1 = {r1} must be positive and finite")));
        }
        if r1 <= self.i_p {
            return Ok(None);
        }
        let e3 = self.e3(r1)?;
        let t3 = (r1 - e3).max(0.0);
        let t2 = if self.e2_condition(0.0, r1)? {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, r1);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                if self.e2_condition(mid, r1)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        let lower = t2.max(t3);
        if lower >= r1 {
            return Ok(None);
        }
        let mut verified = true;
        for r2 in [lower, 0.5 * (lower + r1)] {
            let e = self.solver.rep1(RatePair::new(r1, r2)?)?.e;
            verified &= (e - (r1 - r2)).abs() <= DEFAULT_TOL;
        }
        Ok(Some(FullSecurityInterval {
            lower,
            upper: r1,
            verified,
        }))
    }

    pub fn classify(&self, rates: RatePair, tol: f64) -> Result<RateClass> {
        let e = self.solver.rep1(rates)?.e;
        Ok(classify_value(e, rates, tol))
    }
}

/// Class of an already computed exponent value.
pub fn classify_value(e: f64, rates: RatePair, tol: f64) -> RateClass {
    let r = rates.message_rate();
    if e <= tol {
        RateClass::Zero
    } else if (e - r).abs() <= tol && r > tol {
        RateClass::Full
    } else {
        RateClass::Partial
    }
}

/// `Q*` and its information quantities with default solver settings.
pub fn compute_qstar(spec: &ChannelSpec) -> Result<SecurityAnalysis> {
    SecurityAnalysis::new(spec, SolverOptions::default(), MuGrid::default())
}

pub fn full_security_interval(spec: &ChannelSpec, r1: f64) -> Result<Option<FullSecurityInterval>> {
    compute_qstar(spec)?.full_security_interval(r1)
}

pub fn classify_rate_point(spec: &ChannelSpec, rates: RatePair, tol: f64) -> Result<RateClass> {
    compute_qstar(spec)?.classify(rates, tol)
}
