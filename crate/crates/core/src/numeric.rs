//! Small numerical helpers shared by the solvers.

/// `ln Σ exp(v)` without overflow. Returns `-inf` for an empty slice or an
/// all-`-inf` slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `[t]_+`
#[inline]
pub fn positive_part(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// Compensated summation; order of `add` calls fixes the result bit-for-bit.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| {
                if k == steps - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
///
/// Only interior points are evaluated; the returned pair is the best point
/// seen. Callers that care about boundary optima compare against the
/// endpoints themselves (see [`minimize_on_interval`]).
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Golden-section search plus explicit endpoint evaluation. Ties within
/// `1e-12` go to the smaller abscissa.
pub fn minimize_on_interval<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if hi - lo <= tol {
        let (fl, fh) = (f(lo), f(hi));
        return if fh < fl - 1e-12 { (hi, fh) } else { (lo, fl) };
    }
    let mut candidates = vec![(lo, f(lo))];
    candidates.push(golden_section_min(&mut f, lo, hi, tol));
    candidates.push((hi, f(hi)));
    pick_min(&candidates)
}

/// Maximisation counterpart of [`minimize_on_interval`].
pub fn maximize_on_interval<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (x, v) = minimize_on_interval(|t| -f(t), lo, hi, tol);
    (x, -v)
}

/// Dense grid followed by golden-section refinement inside the best grid
/// cell. Needs no unimodality for the grid stage.
pub fn grid_refine_min<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let xs = linspace(lo, hi, points.max(2));
    let values: Vec<(f64, f64)> = xs.iter().map(|&x| (x, f(x))).collect();
    let best = pick_min(&values);
    let k = xs.iter().position(|&x| x == best.0).unwrap_or(0);
    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(xs.len() - 1)];
    let refined = golden_section_min(&mut f, a, b, tol);
    pick_min(&[best, refined])
}

/// Maximisation counterpart of [`grid_refine_min`].
pub fn grid_refine_max<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (x, v) = grid_refine_min(|t| -f(t), lo, hi, points, tol);
    (x, -v)
}

fn pick_min(candidates: &[(f64, f64)]) -> (f64, f64) {
    let min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .filter(|c| c.1 <= min + 1e-12 || c.1 == min)
        .copied()
        .fold((f64::INFINITY, f64::INFINITY), |acc, c| {
            if c.0 < acc.0 {
                c
            } else {
                acc
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_and_handles_infinities() {
        let v = [0.1_f64, -2.0, 3.5];
        let naive = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - naive).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|t| (t - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interval_search_checks_endpoints() {
        // concave: minimum sits at an endpoint
        let (x, fx) = minimize_on_interval(|t| -(t - 0.4).powi(2), 0.0, 1.0, 1e-9);
        assert_eq!(x, 1.0);
        assert!((fx + 0.36).abs() < 1e-15);
        let (x, _) = maximize_on_interval(|t| -(t - 0.7).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.7).abs() < 1e-8);
    }

    #[test]
    fn kahan_beats_naive_accumulation() {
        let mut k = KahanSum::new();
        for _ in 0..1_000_000 {
            k.add(0.1);
        }
        assert!((k.value() - 100_000.0).abs() < 1e-8);
    }

    #[test]
    fn linspace_endpoints() {
        assert!(linspace(0.0, 1.0, 0).is_empty());
        assert_eq!(linspace(0.5, 1.0, 1), vec![0.5]);
        let g = linspace(-1.0, 1.0, 401);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[200], 0.0);
        assert_eq!(g[400], 1.0);
    }
}
