use proptest::prelude::*;
use wiretap_core::{ChannelSpec, Distribution, Dmc, ExponentSolver, RatePair};

fn binary(px0: f64, a: f64, b: f64) -> ChannelSpec {
    ChannelSpec::new(
        Distribution::new(vec![px0, 1.0 - px0]).unwrap(),
        Dmc::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap(),
        None,
    )
    .unwrap()
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

// R1 + min over binary-input binary-output Q of D − I − Γ, scanned on a
// uniform grid of crossover pairs.
fn grid_exponent(px: [f64; 2], p: [[f64; 2]; 2], r1: f64, r2: f64, n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let q = [
                [1.0 - i as f64 / n as f64, i as f64 / n as f64],
                [j as f64 / n as f64, 1.0 - j as f64 / n as f64],
            ];
            let qz = [
                px[0] * q[0][0] + px[1] * q[1][0],
                px[0] * q[0][1] + px[1] * q[1][1],
            ];
            let (mut d, mut info) = (0.0, 0.0);
            for x in 0..2 {
                for z in 0..2 {
                    d += px[x] * (xlogy(q[x][z], q[x][z]) - xlogy(q[x][z], p[x][z]));
                    if q[x][z] > 0.0 {
                        info += px[x] * q[x][z] * (q[x][z] / qz[z]).ln();
                    }
                }
            }
            let gamma = (r2 - info).max(0.0) - (info - r1).max(0.0);
            best = best.min(d - info - gamma);
        }
    }
    r1 + best
}

#[test]
fn binary_channels_match_grid_search() {
    let cases = [
        (0.5, 0.1, 0.1),
        (0.3, 0.05, 0.2),
        (0.6, 0.25, 0.15),
    ];
    let rates = [(0.9, 0.2), (1.2, 0.6), (0.6, 0.3), (0.4, 0.0)];
    for &(px0, a, b) in &cases {
        let spec = binary(px0, a, b);
        let solver = ExponentSolver::with_defaults(&spec).unwrap();
        for &(r1, r2) in &rates {
            let e = solver.rep1(RatePair::new(r1, r2).unwrap()).unwrap().e;
            let g = grid_exponent(
                [px0, 1.0 - px0],
                [[1.0 - a, a], [b, 1.0 - b]],
                r1,
                r2,
                800,
            );
            // the grid only sees a subset of channels, so it bounds E from above
            assert!(g >= e - 1e-9, "({px0},{a},{b}) at ({r1},{r2}): grid {g} < {e}");
            assert!(g - e <= 2e-3, "({px0},{a},{b}) at ({r1},{r2}): grid {g} vs {e}");
        }
    }
}

fn channel_strategy() -> impl Strategy<Value = ChannelSpec> {
    (0.1..0.9f64, 0.01..0.49f64, 0.01..0.49f64).prop_map(|(px0, a, b)| binary(px0, a, b))
}

fn rates_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.5f64, 0.0..1.0f64).prop_map(|(r1, f)| (r1, f * r1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exponent_bounds_and_zero_set(spec in channel_strategy(), (r1, r2) in rates_strategy()) {
        let solver = ExponentSolver::with_defaults(&spec).unwrap();
        let e = solver.rep1(RatePair::new(r1, r2).unwrap()).unwrap().e;
        prop_assert!(e >= 0.0);
        prop_assert!(e <= r1 - r2 + 1e-12);
        if r1 <= spec.mutual_information() {
            prop_assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn representations_agree(spec in channel_strategy(), (r1, r2) in rates_strategy()) {
        let solver = ExponentSolver::with_defaults(&spec).unwrap();
        let res = solver.evaluate(RatePair::new(r1, r2).unwrap()).unwrap();
        prop_assert!(res.discrepancy() <= 1e-6, "{} vs {}", res.e, res.rep2_value);
    }

    #[test]
    fn monotone_in_both_rates(spec in channel_strategy(), (r1, r2) in rates_strategy(), d in 0.0..0.3f64) {
        let solver = ExponentSolver::with_defaults(&spec).unwrap();
        let e = |a: f64, b: f64| solver.rep1(RatePair::new(a, b).unwrap()).unwrap().e;
        let base = e(r1, r2);
        prop_assert!(e(r1 + d, r2) >= base - 1e-9);
        prop_assert!(e(r1, (r2 - d).max(0.0)) >= base - 1e-9);
    }
}
