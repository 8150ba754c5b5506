use std::path::Path;

use serde::Deserialize;
use wiretap_core::{MuGrid, SolverOptions};

/// Optional overrides read from a TOML file. Every field falls back to the
/// library default when absent.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub obj_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu_points: Option<usize>,
    pub mu_refine_tol: Option<f64>,
    pub class_tol: Option<f64>,
    pub rho_points: Option<usize>,
    pub enum_budget: Option<u64>,
    pub z_samples: Option<usize>,
    pub threads: Option<usize>,
    pub bits: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

/// Settings after merging flags, config file and defaults, in that order.
#[derive(Debug, Clone)]
pub struct Settings {
    pub solver: SolverOptions,
    pub grid: MuGrid,
    pub class_tol: f64,
    pub rho_points: usize,
    pub enum_budget: u64,
    pub z_samples: usize,
    pub threads: Option<usize>,
    pub bits: bool,
}

/// Values supplied on the command line.
#[derive(Debug, Default, Clone)]
pub struct FlagOverrides {
    pub obj_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu_points: Option<usize>,
    pub class_tol: Option<f64>,
    pub threads: Option<usize>,
    pub bits: bool,
}

impl Settings {
    pub fn merge(flags: &FlagOverrides, file: &FileConfig) -> Self {
        let solver_default = SolverOptions::default();
        let grid_default = MuGrid::default();
        Self {
            solver: SolverOptions {
                obj_tol: flags
                    .obj_tol
                    .or(file.obj_tol)
                    .unwrap_or(solver_default.obj_tol),
                residual_tol: flags
                    .residual_tol
                    .or(file.residual_tol)
                    .unwrap_or(solver_default.residual_tol),
                max_iter: flags
                    .max_iter
                    .or(file.max_iter)
                    .unwrap_or(solver_default.max_iter),
            },
            grid: MuGrid {
                points: flags
                    .mu_points
                    .or(file.mu_points)
                    .unwrap_or(grid_default.points),
                refine_tol: file.mu_refine_tol.unwrap_or(grid_default.refine_tol),
            },
            class_tol: flags
                .class_tol
                .or(file.class_tol)
                .unwrap_or(wiretap_core::region::DEFAULT_TOL),
            rho_points: file
                .rho_points
                .unwrap_or(wiretap_core::gaussian::DEFAULT_RHO_POINTS),
            enum_budget: file
                .enum_budget
                .unwrap_or(wiretap_core::ensemble::DEFAULT_ENUM_BUDGET),
            z_samples: file.z_samples.unwrap_or(256),
            threads: flags.threads.or(file.threads),
            bits: flags.bits || file.bits.unwrap_or(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig =
            toml::from_str("obj_tol = 1e-6\nmax_iter = 50\nrho_points = 99").unwrap();
        let flags = FlagOverrides {
            max_iter: Some(7),
            ..Default::default()
        };
        let s = Settings::merge(&flags, &file);
        assert_eq!(s.solver.max_iter, 7);
        assert_eq!(s.solver.obj_tol, 1e-6);
        assert_eq!(s.solver.residual_tol, SolverOptions::default().residual_tol);
        assert_eq!(s.rho_points, 99);
        assert!(!s.bits);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("tolerance = 1").is_err());
    }
}
