//! The correct-decoding exponent `E(R1, R2)` of a discrete memoryless
//! wiretap channel.
//!
//! Two routes are provided and cross-checked:
//!
//! * **Branch form.** `E = min{E1, E2, E3}` with
//!   `E1 = R1 − R2 + min{D : I ≤ R2}`,
//!   `E2 = R1 + min{D − I : R2 ≤ I ≤ R1}` and
//!   `E3 = min{D : I ≥ R1}`, where `D = D(Q‖P|P_X)` and `I = I_Q(X;Z)`.
//!   Each constrained minimum is read off the trade-off curve
//!   `φ(I) = min{D : I_Q = I}`, traced by scalarising `D + μ·I` over
//!   `μ ∈ [−1, 1]`, and then refined by golden-section search on the
//!   Lagrange dual inside the bracketing grid cell.
//! * **Saddle form.** `E = min_{λ2} max_{λ1} min_Q {D + (λ1+λ2−1)·I +
//!   (1−λ1)·R1 − λ2·R2}`, evaluated by nested golden-section searches.
//!
//! The curve only reaches `I_{Q*}`, the mutual information of the
//! unconstrained minimiser of `D − I`; constraint sets beyond it are treated
//! as empty. This never changes `E` itself.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelSpec, ConditionalChannel};
use crate::error::{invalid, Error, Result};
use crate::numeric::{
    golden_section_min, grid_refine_max, grid_refine_min, linspace, maximize_on_interval,
    minimize_on_interval, positive_part,
};
use crate::solver::{InnerProblem, InnerSolution, SolverOptions};

/// Total rate `R1` and sub-code rate `R2`, in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    r1: f64,
    r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite()) || r1 < 0.0 || r2 < 0.0 {
            return Err(invalid(format!(
                "rates must be finite and nonnegative, got ({r1}, {r2})"
            )));
        }
        if r2 > r1 {
            return Err(invalid(format!(
                "sub-code rate R2 = {r2} exceeds total rate R1 = {r1}"
            )));
        }
        Ok(Self { r1, r2 })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// Message rate `R = R1 − R2`.
    pub fn message_rate(&self) -> f64 {
        self.r1 - self.r2
    }
}

/// Which of the three branches attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    E1,
    E2,
    E3,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::E1 => "E1",
            Branch::E2 => "E2",
            Branch::E3 => "E3",
        };
        f.write_str(s)
    }
}

/// Sampling plan for the `μ` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuGrid {
    /// Uniform points on `[−1, 1]`, endpoints included.
    pub points: usize,
    /// Golden-section tolerance in `μ` for refinement.
    pub refine_tol: f64,
}

impl Default for MuGrid {
    fn default() -> Self {
        Self {
            points: 401,
            refine_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub mu: f64,
    pub i_value: f64,
    pub d_value: f64,
    pub q: ConditionalChannel,
}

/// Sampled trade-off between divergence and mutual information, ordered by
/// increasing `μ` (hence nonincreasing `I`).
#[derive(Debug, Clone)]
pub struct ParetoCurve {
    pub points: Vec<ParetoPoint>,
    /// `[I at μ = 1, I at μ = −1]`
    pub i_range: (f64, f64),
}

impl ParetoCurve {
    pub fn i_min(&self) -> f64 {
        self.i_range.0
    }

    pub fn i_max(&self) -> f64 {
        self.i_range.1
    }

    /// `I` never increases with `μ` (up to `tol`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].i_value <= w[0].i_value + tol)
    }

    /// Discrete convexity of `D` as a function of `I` on consecutive triples
    /// whose `I` values are separated by more than `min_gap`.
    pub fn is_convex(&self, tol: f64, min_gap: f64) -> bool {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.i_value, p.d_value)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|b, a| (b.0 - a.0).abs() <= min_gap);
        pts.windows(3).all(|w| {
            let (a, b, c) = (w[0], w[1], w[2]);
            let t = (b.0 - a.0) / (c.0 - a.0);
            b.1 <= (1.0 - t) * a.1 + t * c.1 + tol
        })
    }
}

/// Trace the trade-off curve of `spec` on `grid`.
pub fn pareto_curve(
    spec: &ChannelSpec,
    grid: &MuGrid,
    options: &SolverOptions,
) -> Result<ParetoCurve> {
    let problem = InnerProblem::new(spec, *options);
    curve_from_problem(&problem, grid)
}

fn curve_from_problem(problem: &InnerProblem, grid: &MuGrid) -> Result<ParetoCurve> {
    if grid.points < 3 {
        return Err(invalid("mu grid needs at least three points"));
    }
    let mus = linspace(-1.0, 1.0, grid.points);
    let points = mus
        .par_iter()
        .map(|&mu| {
            problem.solve(mu).map(|s| ParetoPoint {
                mu,
                i_value: s.mutual_info,
                d_value: s.divergence,
                q: s.q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let i_range = (points[points.len() - 1].i_value, points[0].i_value);
    Ok(ParetoCurve { points, i_range })
}

/// `Γ(I, R1, R2) = [R2 − I]_+ − [I − R1]_+`.
pub fn gamma_dmc(i_value: f64, rates: RatePair) -> f64 {
    if i_value <= rates.r2 {
        rates.r2 - i_value
    } else if i_value <= rates.r1 {
        0.0
    } else {
        rates.r1 - i_value
    }
}

/// Branch-form evaluation.
#[derive(Debug, Clone)]
pub struct Rep1Result {
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub active_branch: Branch,
    pub q_star: ConditionalChannel,
}

/// Saddle-form evaluation with the attaining multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rep2Result {
    pub value: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Both representations at one rate pair.
#[derive(Debug, Clone)]
pub struct ExponentResult {
    pub rates: RatePair,
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub active_branch: Branch,
    pub q_star: ConditionalChannel,
    pub rep2_value: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ExponentResult {
    /// `|E_rep1 − E_rep2|`.
    pub fn discrepancy(&self) -> f64 {
        (self.e - self.rep2_value).abs()
    }
}

// Upper end of the μ expansion used when a constraint level lies below the
// curve's sampled range.
const MU_CAP: f64 = 1e4;
const LAMBDA_TOL: f64 = 1e-7;
const BRANCH_TIE: f64 = 1e-9;

/// Reusable evaluator for one channel: holds the solver setup and the traced
/// curve so that many rate pairs can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct ExponentSolver {
    problem: InnerProblem,
    grid: MuGrid,
    curve: ParetoCurve,
    i_p: f64,
    qstar: InnerSolution,
}

impl ExponentSolver {
    pub fn new(spec: &ChannelSpec, options: SolverOptions, grid: MuGrid) -> Result<Self> {
        let problem = InnerProblem::new(spec, options);
        let curve = curve_from_problem(&problem, &grid)?;
        let i_p = spec.mutual_information();
        let qstar = problem.solve(-1.0)?;
        Ok(Self {
            problem,
            grid,
            curve,
            i_p,
            qstar,
        })
    }

    pub fn with_defaults(spec: &ChannelSpec) -> Result<Self> {
        Self::new(spec, SolverOptions::default(), MuGrid::default())
    }

    pub fn spec(&self) -> &ChannelSpec {
        self.problem.spec()
    }

    pub fn curve(&self) -> &ParetoCurve {
        &self.curve
    }

    /// `I_P(X;Z)`
    pub fn i_p(&self) -> f64 {
        self.i_p
    }

    /// The unconstrained minimiser of `D − I`.
    pub fn qstar(&self) -> &InnerSolution {
        &self.qstar
    }

    /// One inner solve at `μ ≥ −1`.
    pub fn solve_inner(&self, mu: f64) -> Result<InnerSolution> {
        self.problem.solve(mu)
    }

    /// `φ(r) = min{D : I_Q = r}` for `r ≤ I_{Q*}` (equivalently the
    /// constrained minimum over `I ≤ r` below `I_P` and over `I ≥ r` above
    /// it), with an attaining test channel. `+inf` above `I_{Q*}`.
    pub fn phi(&self, r: f64) -> Result<(f64, ConditionalChannel)> {
        if r == self.i_p {
            return Ok((0.0, self.spec().true_channel()));
        }
        if r > self.curve.i_max() {
            return Ok((f64::INFINITY, self.qstar.q.clone()));
        }
        if r <= 0.0 {
            let v = self.problem.zero_information_divergence();
            let q = self
                .problem
                .zero_information_channel()
                .unwrap_or_else(|| self.curve.points[self.curve.points.len() - 1].q.clone());
            return Ok((v, q));
        }
        let (lo, hi) = match self.bracket(r)? {
            Some(b) => b,
            None => {
                // r sits below everything reachable with μ ≤ MU_CAP; report
                // the dual bound at the cap.
                let sol = self.problem.solve(MU_CAP)?;
                let v = sol.objective - MU_CAP * r;
                return Ok((v, sol.q));
            }
        };
        let tol = self.grid.refine_tol * hi.abs().max(1.0);
        let (mu, _) = self.dual_search(r, lo, hi, tol)?;
        let sol = self.problem.solve(mu)?;
        let value = (sol.objective - mu * r).max(0.0);
        Ok((value, sol.q))
    }

    // Maximise the concave dual μ ↦ min_Q{D + μI} − μr on [lo, hi].
    fn dual_search(&self, r: f64, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
        let err = RefCell::new(None);
        let f = |mu: f64| match self.problem.solve(mu) {
            Ok(s) => -(s.objective - mu * r),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let (mu, v) = golden_section_min(f, lo, hi, tol);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok((mu, -v))
    }

    // μ-bracket whose end points straddle the level I = r.
    fn bracket(&self, r: f64) -> Result<Option<(f64, f64)>> {
        let pts = &self.curve.points;
        if r >= self.curve.i_min() {
            for w in pts.windows(2) {
                if w[0].i_value >= r && r >= w[1].i_value {
                    return Ok(Some((w[0].mu, w[1].mu)));
                }
            }
            // rounding at the ends of the sweep
            return Ok(Some((pts[pts.len() - 2].mu, pts[pts.len() - 1].mu)));
        }
        let mut lo = pts[pts.len() - 1].mu;
        let mut hi = 2.0 * lo;
        loop {
            let sol = self.problem.solve(hi)?;
            if sol.mutual_info <= r {
                return Ok(Some((lo, hi)));
            }
            if hi >= MU_CAP {
                return Ok(None);
            }
            lo = hi;
            hi = (2.0 * hi).min(MU_CAP);
        }
    }

    /// `E3(R1) = min{D : I ≥ R1}`.
    pub fn e3(&self, r1: f64) -> Result<f64> {
        if r1 <= self.i_p {
            return Ok(0.0);
        }
        Ok(self.phi(r1)?.0)
    }

    /// `min{D − I : R2 ≤ I ≤ R1}` (without the `R1` offset of `E2`).
    pub fn e2_inner_min(&self, r2: f64, r1: f64) -> Result<f64> {
        let i_star = self.qstar.mutual_info;
        if r2 > self.curve.i_max() {
            return Ok(f64::INFINITY);
        }
        if r1 >= i_star {
            return Ok(self.qstar.objective);
        }
        Ok(self.phi(r1)?.0 - r1)
    }

    /// Branch form.
    pub fn rep1(&self, rates: RatePair) -> Result<Rep1Result> {
        let (r1, r2) = (rates.r1, rates.r2);
        let i_star = self.qstar.mutual_info;
        let truth = self.spec().true_channel();

        let (e1, q1) = if r2 >= self.i_p {
            (r1 - r2, truth.clone())
        } else {
            let (v, q) = self.phi(r2)?;
            (r1 - r2 + v, q)
        };

        // E2 and E3 share φ(R1) whenever I_P < R1 ≤ I_{Q*}.
        let phi_r1 = if r1 > self.i_p && r1 <= self.curve.i_max() {
            Some(self.phi(r1)?)
        } else {
            None
        };

        let (e2, q2) = if r2 > self.curve.i_max() {
            (f64::INFINITY, self.qstar.q.clone())
        } else if r1 >= i_star {
            (r1 + self.qstar.objective, self.qstar.q.clone())
        } else if let Some(v) = phi_r1.clone() {
            v
        } else if r1 == self.i_p {
            (0.0, truth.clone())
        } else {
            self.phi(r1)?
        };

        let (e3, q3) = if r1 <= self.i_p {
            (0.0, truth)
        } else if let Some((v, q)) = phi_r1 {
            (v, q)
        } else {
            (f64::INFINITY, self.qstar.q.clone())
        };

        let e = e1.min(e2).min(e3);
        let (active_branch, q_star) = if e1 <= e + BRANCH_TIE {
            (Branch::E1, q1)
        } else if e2 <= e + BRANCH_TIE {
            (Branch::E2, q2)
        } else {
            (Branch::E3, q3)
        };
        let e = if r1 == r2 || r1 == 0.0 { 0.0 } else { e };
        Ok(Rep1Result {
            e,
            e1,
            e2,
            e3,
            active_branch,
            q_star,
        })
    }

    /// Saddle form: `min_{λ2} max_{λ1} min_Q{…}` with the min–max order kept.
    pub fn rep2(&self, rates: RatePair) -> Result<Rep2Result> {
        let (r1, r2) = (rates.r1, rates.r2);
        if r1 == r2 || r1 == 0.0 {
            return Ok(Rep2Result {
                value: 0.0,
                lambda1: 1.0,
                lambda2: 0.0,
            });
        }
        let cache: RefCell<HashMap<i64, f64>> = RefCell::new(HashMap::new());
        let err: RefCell<Option<Error>> = RefCell::new(None);
        let inner_value = |s: f64| -> f64 {
            let key = (s * 1e9).round() as i64;
            if let Some(v) = cache.borrow().get(&key) {
                return *v;
            }
            match self.problem.solve(s - 1.0) {
                Ok(sol) => {
                    cache.borrow_mut().insert(key, sol.objective);
                    sol.objective
                }
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let max_over_l1 = |l2: f64| {
            maximize_on_interval(
                |l1| inner_value(l1 + l2) + (1.0 - l1) * r1 - l2 * r2,
                0.0,
                1.0,
                LAMBDA_TOL,
            )
        };
        let (lambda2, value) = minimize_on_interval(|l2| max_over_l1(l2).1, 0.0, 1.0, LAMBDA_TOL);
        let (lambda1, _) = max_over_l1(lambda2);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(Rep2Result {
            value: value.max(0.0),
            lambda1,
            lambda2,
        })
    }

    /// `E(R, 0) = max_{λ1} min_Q {D + λ1·[R − I_Q]}`.
    pub fn r2_zero(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("rate {r} must be finite and nonnegative")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let err = RefCell::new(None);
        let (_, v) = maximize_on_interval(
            |l1| match self.problem.solve(-l1) {
                Ok(s) => s.objective + l1 * r,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            0.0,
            1.0,
            LAMBDA_TOL,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(v.max(0.0))
    }

    /// Both representations.
    pub fn evaluate(&self, rates: RatePair) -> Result<ExponentResult> {
        let r1 = self.rep1(rates)?;
        let r2 = self.rep2(rates)?;
        Ok(ExponentResult {
            rates,
            e: r1.e,
            e1: r1.e1,
            e2: r1.e2,
            e3: r1.e3,
            active_branch: r1.active_branch,
            q_star: r1.q_star,
            rep2_value: r2.value,
            lambda1: r2.lambda1,
            lambda2: r2.lambda2,
        })
    }
}

/// Branch-form exponent with default solver settings.
pub fn exponent_rep1(spec: &ChannelSpec, rates: RatePair) -> Result<Rep1Result> {
    ExponentSolver::with_defaults(spec)?.rep1(rates)
}

/// Saddle-form exponent with default solver settings.
pub fn exponent_rep2(spec: &ChannelSpec, rates: RatePair) -> Result<Rep2Result> {
    ExponentSolver::with_defaults(spec)?.rep2(rates)
}

/// `E(R, 0)` in its single-multiplier form.
pub fn exponent_r2_zero(spec: &ChannelSpec, r: f64) -> Result<f64> {
    ExponentSolver::with_defaults(spec)?.r2_zero(r)
}

/// `min_Q {D + (s−1)·I}` for the BSC(p) with uniform input, where the
/// minimiser is a BSC with crossover `p^{1/s}/(p^{1/s}+(1−p)^{1/s})`.
pub fn bsc_inner_value(p: f64, s: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    if p == 0.5 {
        return 0.0;
    }
    // s·ln[p^{1/s} + (1−p)^{1/s}] = ln(1−p) + s·ln(1 + (p/(1−p))^{1/s})
    let tail = if s == 0.0 {
        0.0
    } else {
        s * ((p / (1.0 - p)).powf(1.0 / s)).ln_1p()
    };
    (s - 1.0) * ln2 - (1.0 - p).ln() - tail
}

/// Closed-form BSC exponent: the saddle form with the inner minimisation done
/// analytically and both multiplier searches done on a dense grid of
/// `points` values followed by golden-section refinement.
pub fn bsc_exponent_closed_form(p: f64, rates: RatePair, points: usize) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(invalid(format!(
            "crossover probability {p} outside (0, 1/2]"
        )));
    }
    let (r1, r2) = (rates.r1, rates.r2);
    if r1 == r2 {
        return Ok(0.0);
    }
    let tol = 1e-10;
    let max_over_l1 = |l2: f64| {
        grid_refine_max(
            |l1| bsc_inner_value(p, l1 + l2) + (1.0 - l1) * r1 - l2 * r2,
            0.0,
            1.0,
            points,
            tol,
        )
        .1
    };
    let (_, v) = grid_refine_min(max_over_l1, 0.0, 1.0, points, tol);
    Ok(positive_part(v))
}
