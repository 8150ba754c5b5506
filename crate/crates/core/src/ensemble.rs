//! Finite-blocklength oracles for the coding ensemble.
//!
//! [`estimate_ensemble_pc`] samples constant-composition random codebooks,
//! splits them into sub-codes and computes the eavesdropper's probability of
//! correctly decoding the sub-code index under the optimal decoder.
//! [`type_enum_exponent`] evaluates the exponent's objective exactly over all
//! conditional `n`-types.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelSpec, Distribution, Dmc};
use crate::dmc::{gamma_dmc, RatePair};
use crate::error::{invalid, Error, Result};
use crate::numeric::{log_sum_exp, KahanSum};

/// Default cap on `|Z|^n` for exact enumeration.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;
/// Default cap on the number of codewords `M1`.
pub const DEFAULT_CODEBOOK_BUDGET: u64 = 1 << 22;
/// Default cap on the number of joint conditional types.
pub const DEFAULT_TYPE_BUDGET: u64 = 1 << 24;

/// Largest-remainder rounding of `n·P_X` to an integer composition.
pub fn quantize_composition(dist: &Distribution, n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = dist.probs().iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // larger remainder first, lower index on ties
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &x in order.iter().take(n.saturating_sub(assigned)) {
        counts[x] += 1;
    }
    counts
}

fn round_size(exponent: f64, what: &'static str, limit: u64) -> Result<u64> {
    let v = exponent.exp().round();
    if v.is_nan() || v > limit as f64 {
        return Err(Error::BudgetExceeded {
            quantity: what,
            required: v,
            limit: limit as f64,
        });
    }
    Ok((v as u64).max(1))
}

/// One simulation setup.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    n: usize,
    rates: RatePair,
    composition: Vec<usize>,
    channel: Dmc,
    trials: usize,
    seed: u64,
    m: u64,
    m2: u64,
    /// Cap on `|Z|^n` for exact enumeration; beyond it outputs are sampled.
    pub enum_budget: u64,
    /// Output draws per codebook when enumeration is over budget.
    pub z_samples: usize,
}

impl EnsembleSpec {
    /// Codebook sizes `M2 = round(e^{nR2})`, `M = round(e^{n(R1−R2)})` and a
    /// composition obtained by rounding `n·P_X`.
    pub fn new(
        n: usize,
        rates: RatePair,
        input_dist: &Distribution,
        channel: Dmc,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        let composition = quantize_composition(input_dist, n);
        Self::with_composition(n, rates, composition, channel, trials, seed)
    }

    pub fn from_channel_spec(
        spec: &ChannelSpec,
        n: usize,
        rates: RatePair,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::new(
            n,
            rates,
            spec.input_dist(),
            spec.wiretap().clone(),
            trials,
            seed,
        )
    }

    pub fn with_composition(
        n: usize,
        rates: RatePair,
        composition: Vec<usize>,
        channel: Dmc,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || trials == 0 {
            return Err(invalid("blocklength and trial count must be positive"));
        }
        if composition.len() != channel.inputs() {
            return Err(Error::Dimension(format!(
                "composition has {} entries, channel has {} inputs",
                composition.len(),
                channel.inputs()
            )));
        }
        if composition.iter().sum::<usize>() != n {
            return Err(invalid(format!(
                "composition {composition:?} does not sum to {n}"
            )));
        }
        let nf = n as f64;
        let m2 = round_size(nf * rates.r2(), "sub-code size M2", DEFAULT_CODEBOOK_BUDGET)?;
        let m = round_size(
            nf * rates.message_rate(),
            "message count M",
            DEFAULT_CODEBOOK_BUDGET,
        )?;
        if (m as u128) * (m2 as u128) > DEFAULT_CODEBOOK_BUDGET as u128 {
            return Err(Error::BudgetExceeded {
                quantity: "codebook size M1",
                required: m as f64 * m2 as f64,
                limit: DEFAULT_CODEBOOK_BUDGET as f64,
            });
        }
        Ok(Self {
            n,
            rates,
            composition,
            channel,
            trials,
            seed,
            m,
            m2,
            enum_budget: DEFAULT_ENUM_BUDGET,
            z_samples: 256,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> RatePair {
        self.rates
    }

    pub fn composition(&self) -> &[usize] {
        &self.composition
    }

    pub fn channel(&self) -> &Dmc {
        &self.channel
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of messages (sub-codes).
    pub fn m(&self) -> u64 {
        self.m
    }

    /// Sub-code size.
    pub fn m2(&self) -> u64 {
        self.m2
    }

    pub fn m1(&self) -> u64 {
        self.m * self.m2
    }

    /// `(ln(M·M2)/n, ln(M2)/n)`
    pub fn realized_rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        ((self.m1() as f64).ln() / n, (self.m2 as f64).ln() / n)
    }

    fn outputs_pow_n(&self) -> Option<u64> {
        (self.channel.outputs() as u64).checked_pow(self.n as u32)
    }
}

/// `M·M2` codewords; sub-code `w` is the contiguous block
/// `[w·M2, (w+1)·M2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub n: usize,
    pub m: usize,
    pub m2: usize,
    pub words: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn subcode(&self, w: usize) -> &[Vec<usize>] {
        &self.words[w * self.m2..(w + 1) * self.m2]
    }
}

/// The per-trial random stream: seeded by `seed`, stream number `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draw `M1` codewords independently and uniformly from the type class.
pub fn sample_codebook<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Codebook {
    let base: Vec<usize> = spec
        .composition
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(x, c))
        .collect();
    let words = (0..spec.m1())
        .map(|_| {
            let mut w = base.clone();
            w.shuffle(rng);
            w
        })
        .collect();
    Codebook {
        n: spec.n,
        m: spec.m as usize,
        m2: spec.m2 as usize,
        words,
    }
}

fn log_likelihood(channel: &Dmc, x: &[usize], z: &[usize]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(&a, &b)| channel.prob(a, b).ln())
        .sum()
}

/// `ln P(z|C_w) = ln[(1/M2)·Σ_{x∈C_w} P(z|x)]`.
pub fn decoder_score(codebook: &Codebook, w: usize, z: &[usize], channel: &Dmc) -> f64 {
    let terms: Vec<f64> = codebook
        .subcode(w)
        .iter()
        .map(|x| log_likelihood(channel, x, z))
        .collect();
    log_sum_exp(&terms) - (codebook.m2 as f64).ln()
}

// P(·|x) over all of Z^n, first symbol most significant.
fn likelihood_row(channel: &Dmc, x: &[usize], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let nz = channel.outputs();
    for &a in x {
        let row = channel.row(a).probs();
        let len = out.len();
        out.resize(len * nz, 0.0);
        for k in (0..len).rev() {
            let v = out[k];
            for (z, &p) in row.iter().enumerate() {
                out[k * nz + z] = v * p;
            }
        }
    }
}

/// `(1/M)·Σ_z max_w P(z|C_w)` by enumerating all of `Z^n`.
pub fn exact_pc_for_codebook(codebook: &Codebook, channel: &Dmc, budget: u64) -> Result<f64> {
    let nz = channel.outputs() as u64;
    let size = nz.checked_pow(codebook.n as u32).filter(|&s| s <= budget);
    let size = match size {
        Some(s) => s as usize,
        None => {
            return Err(Error::BudgetExceeded {
                quantity: "|Z|^n",
                required: (nz as f64).powi(codebook.n as i32),
                limit: budget as f64,
            })
        }
    };
    if codebook.m == 1 {
        return Ok(1.0);
    }
    let min_p = channel
        .rows()
        .iter()
        .flat_map(|r| r.probs().iter().copied())
        .filter(|&p| p > 0.0)
        .fold(1.0, f64::min);
    if (codebook.n as f64) * min_p.ln() < -600.0 {
        return Ok(exact_pc_log_domain(codebook, channel, size));
    }
    let mut best = vec![0.0; size];
    let mut acc = vec![0.0; size];
    // P(·|x) = P(·|head) ⊗ P(·|tail)
    let split = codebook.n / 2;
    let (mut head, mut tail) = (Vec::new(), Vec::new());
    for w in 0..codebook.m {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for x in codebook.subcode(w) {
            likelihood_row(channel, &x[..split], &mut head);
            likelihood_row(channel, &x[split..], &mut tail);
            for (chunk, &h) in acc.chunks_exact_mut(tail.len()).zip(&head) {
                for (a, &t) in chunk.iter_mut().zip(&tail) {
                    *a += h * t;
                }
            }
        }
        for (b, a) in best.iter_mut().zip(&acc) {
            if *a > *b {
                *b = *a;
            }
        }
    }
    let mut total = KahanSum::new();
    for v in best {
        total.add(v);
    }
    let pc = total.value() / (codebook.m as f64 * codebook.m2 as f64);
    Ok(pc.clamp(1.0 / codebook.m as f64, 1.0))
}

fn exact_pc_log_domain(codebook: &Codebook, channel: &Dmc, size: usize) -> f64 {
    let nz = channel.outputs();
    let mut z = vec![0usize; codebook.n];
    let mut terms = Vec::with_capacity(size);
    for idx in 0..size {
        let mut k = idx;
        for slot in z.iter_mut().rev() {
            *slot = k % nz;
            k /= nz;
        }
        let best = (0..codebook.m)
            .map(|w| decoder_score(codebook, w, &z, channel))
            .fold(f64::NEG_INFINITY, f64::max);
        terms.push(best);
    }
    let pc = (log_sum_exp(&terms) - (codebook.m as f64).ln()).exp();
    pc.clamp(1.0 / codebook.m as f64, 1.0)
}

// Plain forward sampling of (W, X, Z); ties in the decoder count fractionally.
fn sampled_pc_for_codebook<R: Rng + ?Sized>(
    codebook: &Codebook,
    channel: &Dmc,
    samples: usize,
    rng: &mut R,
) -> f64 {
    if codebook.m == 1 {
        return 1.0;
    }
    let mut hits = KahanSum::new();
    let mut z = vec![0usize; codebook.n];
    for _ in 0..samples {
        let w = rng.random_range(0..codebook.m);
        let x = &codebook.subcode(w)[rng.random_range(0..codebook.m2)];
        for (slot, &a) in z.iter_mut().zip(x) {
            let u: f64 = rng.random();
            let row = channel.row(a).probs();
            let mut cum = 0.0;
            *slot = row.len() - 1;
            for (k, &p) in row.iter().enumerate() {
                cum += p;
                if u < cum {
                    *slot = k;
                    break;
                }
            }
        }
        let scores: Vec<f64> = (0..codebook.m)
            .map(|v| decoder_score(codebook, v, &z, channel))
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if scores[w] == top {
            let ties = scores.iter().filter(|&&s| s == top).count();
            hits.add(1.0 / ties as f64);
        }
    }
    hits.value() / samples as f64
}

/// Monte-Carlo estimate of the ensemble-average correct-decoding probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub pc_mean: f64,
    pub pc_std_err: f64,
    /// `−ln(pc_mean)/n`
    pub empirical_exponent: f64,
    pub trials_used: usize,
    /// Whether every trial enumerated `Z^n` exactly.
    pub exact: bool,
    pub r1_realized: f64,
    pub r2_realized: f64,
}

pub fn estimate_ensemble_pc(spec: &EnsembleSpec) -> Result<SimulationResult> {
    let exact = spec.outputs_pow_n().is_some_and(|s| s <= spec.enum_budget);
    let per_trial = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t);
            let cb = sample_codebook(spec, &mut rng);
            if exact {
                exact_pc_for_codebook(&cb, &spec.channel, spec.enum_budget)
            } else {
                Ok(sampled_pc_for_codebook(
                    &cb,
                    &spec.channel,
                    spec.z_samples,
                    &mut rng,
                ))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let count = per_trial.len() as f64;
    let mut sum = KahanSum::new();
    for &v in &per_trial {
        sum.add(v);
    }
    let mean = sum.value() / count;
    let mut sq = KahanSum::new();
    for &v in &per_trial {
        sq.add((v - mean) * (v - mean));
    }
    let std_err = if per_trial.len() > 1 {
        (sq.value() / (count - 1.0)).sqrt() / count.sqrt()
    } else {
        0.0
    };
    let (r1_realized, r2_realized) = spec.realized_rates();
    Ok(SimulationResult {
        pc_mean: mean,
        pc_std_err: std_err,
        empirical_exponent: -mean.ln() / spec.n as f64,
        trials_used: per_trial.len(),
        exact,
        r1_realized,
        r2_realized,
    })
}

/// Finite-`n` minimum over conditional types of
/// `R1 + D(Q‖P|P̂_X) − I_Q − Γ(I_Q, R1, R2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeEnumExponent {
    pub n: usize,
    pub value: f64,
    /// Rows of the minimising conditional type.
    pub q: Vec<Vec<f64>>,
    pub types_enumerated: u64,
}

// All ways to split `total` into `parts` ordered nonnegative counts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn type_enum_exponent(
    spec: &ChannelSpec,
    rates: RatePair,
    n: usize,
) -> Result<TypeEnumExponent> {
    type_enum_exponent_with_budget(spec, rates, n, DEFAULT_TYPE_BUDGET)
}

pub fn type_enum_exponent_with_budget(
    spec: &ChannelSpec,
    rates: RatePair,
    n: usize,
    budget: u64,
) -> Result<TypeEnumExponent> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    let counts = quantize_composition(spec.input_dist(), n);
    let nz = spec.wiretap().outputs();
    let active: Vec<usize> = (0..counts.len()).filter(|&x| counts[x] > 0).collect();
    let required: f64 = active
        .iter()
        .map(|&x| binomial((counts[x] + nz - 1) as u64, (nz - 1) as u64))
        .product();
    if required > budget as f64 {
        return Err(Error::BudgetExceeded {
            quantity: "conditional types",
            required,
            limit: budget as f64,
        });
    }
    let weights: Vec<f64> = active
        .iter()
        .map(|&x| counts[x] as f64 / n as f64)
        .collect();
    let log_p: Vec<Vec<f64>> = active
        .iter()
        .map(|&x| {
            spec.wiretap()
                .row(x)
                .probs()
                .iter()
                .map(|p| p.ln())
                .collect()
        })
        .collect();
    // candidate rows per active input, as probabilities
    let rows: Vec<Vec<Vec<f64>>> = active
        .iter()
        .map(|&x| {
            compositions(counts[x], nz)
                .into_iter()
                .map(|c| c.iter().map(|&k| k as f64 / counts[x] as f64).collect())
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = rows.iter().map(Vec::len).collect();
    let total: u64 = sizes.iter().map(|&s| s as u64).product();

    let objective = |idx: u64| -> f64 {
        let mut k = idx;
        let mut picks = Vec::with_capacity(sizes.len());
        for &s in sizes.iter().rev() {
            picks.push((k % s as u64) as usize);
            k /= s as u64;
        }
        picks.reverse();
        let mut qz = vec![0.0; nz];
        let mut div = 0.0;
        for (a, &pick) in picks.iter().enumerate() {
            let row = &rows[a][pick];
            for z in 0..nz {
                if row[z] > 0.0 {
                    if log_p[a][z] == f64::NEG_INFINITY {
                        return f64::INFINITY;
                    }
                    div += weights[a] * row[z] * (row[z].ln() - log_p[a][z]);
                    qz[z] += weights[a] * row[z];
                }
            }
        }
        let mut info = 0.0;
        for (a, &pick) in picks.iter().enumerate() {
            let row = &rows[a][pick];
            for z in 0..nz {
                if row[z] > 0.0 {
                    info += weights[a] * row[z] * (row[z] / qz[z]).ln();
                }
            }
        }
        let info = info.max(0.0);
        rates.r1() + div.max(0.0) - info - gamma_dmc(info, rates)
    };
    let (value, best) = (0..total)
        .into_par_iter()
        .map(|i| (objective(i), i))
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let mut k = best;
    let mut q = vec![vec![0.0; nz]; counts.len()];
    for (a, &s) in sizes.iter().enumerate().rev() {
        q[active[a]] = rows[a][(k % s as u64) as usize].clone();
        k /= s as u64;
    }
    Ok(TypeEnumExponent {
        n,
        value: value.max(0.0),
        q,
        types_enumerated: total,
    })
}
