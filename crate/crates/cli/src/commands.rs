use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use wiretap_core::ensemble::estimate_ensemble_pc;
use wiretap_core::region::{classify_value, FullSecurityInterval};
use wiretap_core::{
    check_degraded, ChannelSpec, EnsembleSpec, Error, ExponentSolver, GaussianSpec, RatePair,
    RhoGrid, SecurityAnalysis,
};

use crate::config::Settings;
use crate::output::{num, Table};
use crate::SweepArgs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::NonConvergence { .. }) => 3,
            CliError::Core(Error::BudgetExceeded { .. }) => 4,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type Res = Result<(), CliError>;

/// Conversion between the user's unit and nats.
#[derive(Debug, Clone, Copy)]
struct Units {
    bits: bool,
}

impl Units {
    fn input(&self, v: f64) -> f64 {
        if self.bits {
            v * std::f64::consts::LN_2
        } else {
            v
        }
    }

    fn show(&self, nats: f64) -> String {
        num(if self.bits {
            nats / std::f64::consts::LN_2
        } else {
            nats
        })
    }
}

fn load(path: &Path) -> Result<ChannelSpec, CliError> {
    ChannelSpec::load(path).map_err(|e| match e {
        Error::Parse(p) => CliError::Usage(format!("{}: {p}", path.display())),
        other => CliError::Usage(format!("{}: {other}", path.display())),
    })
}

fn rates(units: Units, r1: f64, r2: f64) -> Result<RatePair, CliError> {
    RatePair::new(units.input(r1), units.input(r2)).map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(table: Table, columns: Option<&Vec<String>>, out: impl Write) -> Res {
    let table = match columns {
        Some(c) => table.select(c).map_err(CliError::Usage)?,
        None => table,
    };
    table.write(out)?;
    Ok(())
}

pub fn exponent(settings: &Settings, channel: &Path, r1: f64, r2: f64, out: impl Write) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let pair = rates(units, r1, r2)?;
    let spec = load(channel)?;
    let solver = ExponentSolver::new(&spec, settings.solver, settings.grid)?;
    let res = solver.evaluate(pair)?;
    let mut t = Table::new(&[
        "R1",
        "R2",
        "E",
        "E1",
        "E2",
        "E3",
        "branch",
        "E_rep2",
        "lambda1",
        "lambda2",
        "discrepancy",
    ]);
    t.push(vec![
        num(r1),
        num(r2),
        units.show(res.e),
        units.show(res.e1),
        units.show(res.e2),
        units.show(res.e3),
        res.active_branch.to_string(),
        units.show(res.rep2_value),
        num(res.lambda1),
        num(res.lambda2),
        units.show(res.discrepancy()),
    ]);
    emit(t, None, out)
}

/// Grid points in R1-major order together with the number of points
/// dropped because `R2 > R1`.
fn grid_points(plan: &SweepArgs) -> Result<(Vec<(f64, f64)>, usize), CliError> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Usage(format!("sweep needs --{name}")))
    };
    let r1s = wiretap_core::numeric::linspace(
        need(plan.r1_min, "r1-min")?,
        need(plan.r1_max, "r1-max")?,
        plan.r1_steps
            .ok_or_else(|| CliError::Usage("sweep needs --r1-steps".into()))?,
    );
    let mut points = Vec::new();
    let mut skipped = 0;
    if let Some(k) = plan.r2_fraction_steps {
        let fr = wiretap_core::numeric::linspace(0.0, 1.0, k);
        for &r1 in &r1s {
            points.extend(fr.iter().map(|f| (r1, f * r1)));
        }
    } else {
        let r2s = wiretap_core::numeric::linspace(
            need(plan.r2_min, "r2-min")?,
            need(plan.r2_max, "r2-max")?,
            plan.r2_steps.ok_or_else(|| {
                CliError::Usage("sweep needs --r2-steps or --r2-fraction-steps".into())
            })?,
        );
        for &r1 in &r1s {
            for &r2 in &r2s {
                if r2 > r1 {
                    skipped += 1;
                } else {
                    points.push((r1, r2));
                }
            }
        }
    }
    Ok((points, skipped))
}

pub fn sweep(settings: &Settings, channel: &Path, plan: &SweepArgs, out: impl Write) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let spec = load(channel)?;
    let (points, skipped) = grid_points(plan)?;
    let mut t = Table::new(&["R1", "R2", "E", "E1", "E2", "E3", "branch", "class"]);
    if !points.is_empty() {
        let solver = ExponentSolver::new(&spec, settings.solver, settings.grid)?;
        let rows = points
            .par_iter()
            .map(|&(r1, r2)| {
                let pair = rates(units, r1, r2)?;
                let r = solver.rep1(pair)?;
                let class = classify_value(r.e, pair, settings.class_tol);
                Ok(vec![
                    num(r1),
                    num(r2),
                    units.show(r.e),
                    units.show(r.e1),
                    units.show(r.e2),
                    units.show(r.e3),
                    r.active_branch.to_string(),
                    class.to_string(),
                ])
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        rows.into_iter().for_each(|r| t.push(r));
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} grid points with R2 > R1");
    }
    emit(t, plan.columns.as_ref(), out)
}

pub fn region(settings: &Settings, channel: &Path, r1s: &[f64], out: impl Write) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let spec = load(channel)?;
    let analysis = SecurityAnalysis::new(&spec, settings.solver, settings.grid)?;
    let mut t = Table::new(&[
        "R1",
        "R2_lower",
        "R2_upper",
        "verified",
        "bracket_lower",
        "bracket_upper",
        "I_Qstar",
        "D_Qstar",
        "I_P",
    ]);
    for &r1 in r1s {
        let r1n = units.input(r1);
        if !(r1n.is_finite() && r1n > 0.0) {
            return Err(CliError::Usage(format!("R1 = {r1} must be positive")));
        }
        let iv = analysis.full_security_interval(r1n)?;
        let bracket = analysis.sufficient_bracket(r1n)?;
        let (lo, hi, ok) = match iv {
            Some(FullSecurityInterval {
                lower,
                upper,
                verified,
            }) => (units.show(lower), units.show(upper), verified.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let (blo, bhi) = match bracket {
            Some((a, b)) => (units.show(a), units.show(b)),
            None => (String::new(), String::new()),
        };
        t.push(vec![
            num(r1),
            lo,
            hi,
            ok,
            blo,
            bhi,
            units.show(analysis.i_qstar),
            units.show(analysis.d_qstar),
            units.show(analysis.i_p),
        ]);
    }
    emit(t, None, out)
}

pub fn gaussian(
    settings: &Settings,
    s: f64,
    sigma2: f64,
    single: Option<(f64, f64)>,
    plan: &SweepArgs,
    out: impl Write,
) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let g = GaussianSpec::new(s, sigma2).map_err(|e| CliError::Usage(e.to_string()))?;
    let (points, skipped, with_class) = match single {
        Some(p) => (vec![p], 0, false),
        None => {
            let (p, k) = grid_points(plan)?;
            (p, k, true)
        }
    };
    let mut header = vec![
        "S",
        "sigma2",
        "R1",
        "R2",
        "E",
        "E1",
        "E2",
        "E3",
        "rho_star",
        "sigma_z_star",
        "branch",
    ];
    if with_class {
        header.push("class");
    }
    let mut t = Table::new(&header);
    if !points.is_empty() {
        let grid =
            RhoGrid::new(g, settings.rho_points).map_err(|e| CliError::Usage(e.to_string()))?;
        for &(r1, r2) in &points {
            let pair = rates(units, r1, r2)?;
            let o = grid.evaluate(pair);
            let mut row = vec![
                num(s),
                num(sigma2),
                num(r1),
                num(r2),
                units.show(o.e),
                units.show(o.e1),
                units.show(o.e2),
                units.show(o.e3),
                num(o.rho_star),
                num(o.sigma_z_star),
                o.active_branch.to_string(),
            ];
            if with_class {
                row.push(classify_value(o.e, pair, settings.class_tol).to_string());
            }
            t.push(row);
        }
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} grid points with R2 > R1");
    }
    emit(
        t,
        if with_class {
            plan.columns.as_ref()
        } else {
            None
        },
        out,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    settings: &Settings,
    channel: &Path,
    ns: &[usize],
    r1: f64,
    r2: f64,
    trials: usize,
    seed: u64,
    out: impl Write,
) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let pair = rates(units, r1, r2)?;
    let spec = load(channel)?;
    let asymptotic = ExponentSolver::new(&spec, settings.solver, settings.grid)?
        .rep1(pair)?
        .e;
    let mut t = Table::new(&[
        "n",
        "R1_req",
        "R2_req",
        "R1_real",
        "R2_real",
        "trials",
        "pc_mean",
        "pc_stderr",
        "emp_exponent",
        "seed",
        "E_asymptotic",
        "exact",
    ]);
    for &n in ns {
        let mut es =
            EnsembleSpec::from_channel_spec(&spec, n, pair, trials, seed).map_err(|e| match e {
                Error::Invalid(m) | Error::Dimension(m) => CliError::Usage(m),
                other => CliError::Core(other),
            })?;
        es.enum_budget = settings.enum_budget;
        es.z_samples = settings.z_samples;
        let r = estimate_ensemble_pc(&es)?;
        t.push(vec![
            n.to_string(),
            num(r1),
            num(r2),
            units.show(r.r1_realized),
            units.show(r.r2_realized),
            r.trials_used.to_string(),
            num(r.pc_mean),
            num(r.pc_std_err),
            units.show(r.empirical_exponent),
            seed.to_string(),
            units.show(asymptotic),
            r.exact.to_string(),
        ]);
    }
    emit(t, None, out)
}

pub fn check(settings: &Settings, channel: &Path, tol: f64, out: impl Write) -> Res {
    let units = Units {
        bits: settings.bits,
    };
    let spec = load(channel)?;
    let mut t = Table::new(&[
        "inputs",
        "outputs",
        "I_P",
        "has_main",
        "degraded",
        "max_deviation",
    ]);
    let (degraded, deviation) = match spec.main() {
        Some(main) => {
            let d = check_degraded(main, spec.wiretap(), tol)?;
            (d.degraded.to_string(), num(d.max_deviation))
        }
        None => (String::new(), String::new()),
    };
    t.push(vec![
        spec.wiretap().inputs().to_string(),
        spec.wiretap().outputs().to_string(),
        units.show(spec.mutual_information()),
        spec.main().is_some().to_string(),
        degraded,
        deviation,
    ]);
    emit(t, None, out)
}
