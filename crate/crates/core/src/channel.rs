//! Finite-alphabet probability objects and the information measures built on
//! them. All logarithms are natural; every quantity is in nats.

use std::path::Path;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sum-to-one tolerance for in-memory distributions.
pub const SUM_TOL: f64 = 1e-12;
/// Per-row sum tolerance applied when loading channel-spec files.
pub const FILE_SUM_TOL: f64 = 1e-9;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates `probs` (finite, nonnegative, sum within [`SUM_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, SUM_TOL)
    }

    /// Accepts a vector whose sum is within `tol` of one and renormalises it.
    pub fn with_tolerance(mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("distribution over an empty alphabet"));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(invalid(format!(
                "probability {bad} is not a finite nonnegative number"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(invalid(format!("probabilities sum to {sum}, expected 1")));
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs a nonempty alphabet");
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        assert!(at < k);
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Indices with strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    // Used by the solver, which produces rows that are normalised by
    // construction up to rounding.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self { probs }
    }
}

/// A discrete memoryless channel: one output distribution per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dmc {
    rows: Vec<Distribution>,
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(rows, SUM_TOL)
    }

    pub fn with_tolerance(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("channel has no input symbols"));
        }
        let width = rows[0].len();
        let mut out = Vec::with_capacity(rows.len());
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!(
                    "row {x} has {} columns, row 0 has {width}",
                    row.len()
                )));
            }
            out.push(
                Distribution::with_tolerance(row, tol)
                    .map_err(|e| invalid(format!("row {x}: {e}")))?,
            );
        }
        Ok(Self { rows: out })
    }

    pub fn from_distributions(rows: Vec<Distribution>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("channel has no input symbols"));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged channel rows".into()));
        }
        Ok(Self { rows })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Noiseless channel on `k` symbols.
    pub fn identity(k: usize) -> Self {
        Self {
            rows: (0..k).map(|i| Distribution::point_mass(k, i)).collect(),
        }
    }

    /// Channel whose rows all equal `row`.
    pub fn useless(inputs: usize, row: Distribution) -> Self {
        Self {
            rows: vec![row; inputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, x: usize, z: usize) -> f64 {
        self.rows[x].probs[z]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.probs.clone()).collect()
    }
}

/// A test channel `Q_{Z|X}` paired with its fixed input marginal, so that it
/// also determines `Q_{XZ}` and `Q_Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalChannel {
    rows: Vec<Distribution>,
    input_marginal: Distribution,
}

impl ConditionalChannel {
    pub fn new(rows: Vec<Distribution>, input_marginal: Distribution) -> Result<Self> {
        if rows.len() != input_marginal.len() {
            return Err(Error::Dimension(format!(
                "{} rows but input marginal over {} symbols",
                rows.len(),
                input_marginal.len()
            )));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged conditional channel".into()));
        }
        Ok(Self {
            rows,
            input_marginal,
        })
    }

    pub fn from_dmc(channel: &Dmc, input_marginal: &Distribution) -> Result<Self> {
        Self::new(channel.rows.clone(), input_marginal.clone())
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn input_marginal(&self) -> &Distribution {
        &self.input_marginal
    }

    #[inline]
    pub fn prob(&self, x: usize, z: usize) -> f64 {
        self.rows[x].probs[z]
    }

    /// `Q_Z(z) = Σ_x Q_X(x) Q(z|x)`.
    pub fn output_marginal(&self) -> Vec<f64> {
        let mut qz = vec![0.0; self.outputs()];
        for (w, row) in self.input_marginal.probs.iter().zip(&self.rows) {
            for (acc, q) in qz.iter_mut().zip(&row.probs) {
                *acc += w * q;
            }
        }
        qz
    }

    pub fn as_dmc(&self) -> Dmc {
        Dmc {
            rows: self.rows.clone(),
        }
    }
}

/// The system under study: input distribution, wiretap channel and
/// (optionally) the main channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    input_dist: Distribution,
    wiretap: Dmc,
    main: Option<Dmc>,
}

/// On-disk form of a [`ChannelSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub input_dist: Vec<f64>,
    pub wiretap: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main: Option<Vec<Vec<f64>>>,
}

impl ChannelSpec {
    pub fn new(input_dist: Distribution, wiretap: Dmc, main: Option<Dmc>) -> Result<Self> {
        if input_dist.len() < 2 {
            return Err(invalid("input alphabet must have at least two symbols"));
        }
        if input_dist.len() != wiretap.inputs() {
            return Err(Error::Dimension(format!(
                "input_dist has {} entries but wiretap channel has {} rows",
                input_dist.len(),
                wiretap.inputs()
            )));
        }
        if let Some(m) = &main {
            if m.inputs() != wiretap.inputs() {
                return Err(Error::Dimension(format!(
                    "main channel has {} rows but wiretap channel has {}",
                    m.inputs(),
                    wiretap.inputs()
                )));
            }
        }
        Ok(Self {
            input_dist,
            wiretap,
            main,
        })
    }

    /// BSC(p) wiretap channel with uniform binary input.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(Distribution::uniform(2), Dmc::bsc(p)?, None)
    }

    pub fn from_file_struct(file: ChannelFile) -> Result<Self> {
        let input = Distribution::with_tolerance(file.input_dist, FILE_SUM_TOL)
            .map_err(|e| invalid(format!("input_dist: {e}")))?;
        let wiretap = Dmc::with_tolerance(file.wiretap, FILE_SUM_TOL)
            .map_err(|e| invalid(format!("wiretap: {e}")))?;
        let main = file
            .main
            .map(|m| {
                Dmc::with_tolerance(m, FILE_SUM_TOL).map_err(|e| invalid(format!("main: {e}")))
            })
            .transpose()?;
        Self::new(input, wiretap, main)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text)?;
        Self::from_file_struct(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_file_struct(&self) -> ChannelFile {
        ChannelFile {
            input_dist: self.input_dist.probs.clone(),
            wiretap: self.wiretap.to_vecs(),
            main: self.main.as_ref().map(Dmc::to_vecs),
        }
    }

    pub fn input_dist(&self) -> &Distribution {
        &self.input_dist
    }

    pub fn wiretap(&self) -> &Dmc {
        &self.wiretap
    }

    pub fn main(&self) -> Option<&Dmc> {
        self.main.as_ref()
    }

    /// The true test channel `P_{Z|X}` with marginal `P_X`.
    pub fn true_channel(&self) -> ConditionalChannel {
        ConditionalChannel {
            rows: self.wiretap.rows.clone(),
            input_marginal: self.input_dist.clone(),
        }
    }

    /// `I_P(X;Z)`.
    pub fn mutual_information(&self) -> f64 {
        mutual_information(&self.true_channel())
    }

    /// Drops input symbols with zero probability. Returns the reduced spec
    /// together with the retained original indices.
    pub fn canonical(&self) -> (ChannelSpec, Vec<usize>) {
        let keep = self.input_dist.support();
        if keep.len() == self.input_dist.len() {
            return (self.clone(), keep);
        }
        let input =
            Distribution::from_normalized(keep.iter().map(|&x| self.input_dist.probs[x]).collect());
        let pick = |d: &Dmc| Dmc {
            rows: keep.iter().map(|&x| d.rows[x].clone()).collect(),
        };
        let reduced = ChannelSpec {
            input_dist: input,
            wiretap: pick(&self.wiretap),
            main: self.main.as_ref().map(pick),
        };
        (reduced, keep)
    }

    /// Lifts a test channel over the canonical (reduced) input alphabet back
    /// to the full alphabet. Dropped inputs carry the true channel rows.
    pub fn expand(&self, reduced: &ConditionalChannel, keep: &[usize]) -> ConditionalChannel {
        let mut rows = self.wiretap.rows.clone();
        for (k, &x) in keep.iter().enumerate() {
            rows[x] = reduced.rows[k].clone();
        }
        ConditionalChannel {
            rows,
            input_marginal: self.input_dist.clone(),
        }
    }
}

/// Shannon entropy `−Σ p ln p` with `0 ln 0 = 0`.
pub fn entropy(d: &Distribution) -> f64 {
    -d.probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// `I_Q(X;Z)` of a test channel under its input marginal.
pub fn mutual_information(q: &ConditionalChannel) -> f64 {
    let qz = q.output_marginal();
    let mut total = 0.0;
    for (w, row) in q.input_marginal.probs.iter().zip(&q.rows) {
        if *w == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (z, &p) in row.probs.iter().enumerate() {
            if p > 0.0 {
                inner += p * (p / qz[z]).ln();
            }
        }
        total += w * inner;
    }
    total.max(0.0)
}

/// `D(Q_{Z|X} ‖ P_{Z|X} | Q_X)`; `+inf` when `Q` is not absolutely continuous
/// with respect to `P` on an input of positive weight.
pub fn weighted_divergence(q: &ConditionalChannel, p: &Dmc) -> Result<f64> {
    if q.inputs() != p.inputs() || q.outputs() != p.outputs() {
        return Err(Error::Dimension(format!(
            "test channel is {}x{}, reference channel is {}x{}",
            q.inputs(),
            q.outputs(),
            p.inputs(),
            p.outputs()
        )));
    }
    let mut total = 0.0;
    for (x, w) in q.input_marginal.probs.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for z in 0..q.outputs() {
            let qv = q.prob(x, z);
            if qv == 0.0 {
                continue;
            }
            let pv = p.prob(x, z);
            if pv == 0.0 {
                return Ok(f64::INFINITY);
            }
            inner += qv * (qv / pv).ln();
        }
        total += w * inner;
    }
    Ok(total.max(0.0))
}

/// Outcome of a degradedness check.
#[derive(Debug, Clone, PartialEq)]
pub struct Degradedness {
    pub degraded: bool,
    /// Smallest achievable `‖P_{Y|X} W − P_{Z|X}‖_∞` over row-stochastic `W`.
    pub max_deviation: f64,
    /// A channel `P_{Z|Y}` attaining `max_deviation`; present when degraded.
    pub witness: Option<Dmc>,
}

/// Decides whether `wiretap` is a degraded version of `main`, i.e. whether
/// some row-stochastic `W` satisfies `main · W ≈ wiretap` within `tol` in the
/// max norm. Solved as a linear program minimising the max deviation.
#[allow(clippy::needless_range_loop)]
pub fn check_degraded(main: &Dmc, wiretap: &Dmc, tol: f64) -> Result<Degradedness> {
    if main.inputs() != wiretap.inputs() {
        return Err(Error::Dimension(format!(
            "main channel has {} inputs, wiretap channel has {}",
            main.inputs(),
            wiretap.inputs()
        )));
    }
    let (nx, ny, nz) = (main.inputs(), main.outputs(), wiretap.outputs());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let w: Vec<Vec<_>> = (0..ny)
        .map(|_| (0..nz).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect())
        .collect();
    let slack = lp.add_var(1.0, (0.0, f64::INFINITY));
    for row in &w {
        let terms: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 1.0);
    }
    for x in 0..nx {
        for z in 0..nz {
            let mut terms: Vec<_> = (0..ny).map(|y| (w[y][z], main.prob(x, y))).collect();
            let target = wiretap.prob(x, z);
            terms.push((slack, -1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Le, target);
            terms.pop();
            terms.push((slack, 1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, target);
        }
    }
    let solution = lp
        .solve()
        .map_err(|e| invalid(format!("degradedness program failed: {e}")))?;
    let max_deviation = solution[slack].max(0.0);
    let degraded = max_deviation <= tol;
    let witness = if degraded {
        let rows = w
            .iter()
            .map(|row| {
                let vals: Vec<f64> = row.iter().map(|&v| solution[v].clamp(0.0, 1.0)).collect();
                let s: f64 = vals.iter().sum();
                Distribution::from_normalized(vals.into_iter().map(|v| v / s).collect())
            })
            .collect();
        Some(Dmc { rows })
    } else {
        None
    };
    Ok(Degradedness {
        degraded,
        max_deviation,
        witness,
    })
}
