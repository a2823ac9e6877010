use crate::error::{Error, Result};

/// Tolerances and iteration limits shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target for `|ψ_t'(s) - α|` in the tilt solve.
    pub root_tol: f64,
    pub max_newton_iters: usize,
    /// Multiplier applied to the bracket half-width until it straddles the root.
    pub bracket_growth: f64,
    /// Relative distance from `|α| = ‖t‖₁` inside which the endpoint value is reported.
    pub boundary_guard: f64,
    /// Initial step of the projected-gradient line search.
    pub pg_step0: f64,
    /// Backtracking factor.
    pub pg_shrink: f64,
    /// Convergence threshold on the KKT residual.
    pub pg_tol: f64,
    pub pg_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            max_newton_iters: 100,
            bracket_growth: 2.0,
            boundary_guard: 1e-9,
            pg_step0: 1.0,
            pg_shrink: 0.5,
            pg_tol: 1e-10,
            pg_max_iters: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("root_tol", self.root_tol),
            ("boundary_guard", self.boundary_guard),
            ("pg_step0", self.pg_step0),
            ("pg_tol", self.pg_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.bracket_growth > 1.0 && self.bracket_growth.is_finite()) {
            return Err(Error::Config(format!(
                "bracket_growth must exceed 1, got {}",
                self.bracket_growth
            )));
        }
        if !(self.pg_shrink > 0.0 && self.pg_shrink < 1.0) {
            return Err(Error::Config(format!(
                "pg_shrink must lie in (0, 1), got {}",
                self.pg_shrink
            )));
        }
        if self.boundary_guard >= 1.0 {
            return Err(Error::Config("boundary_guard must be below 1".into()));
        }
        if self.max_newton_iters == 0 || self.pg_max_iters == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies a `name=value` override, as accepted on the command line.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let float = || {
            value
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{name}: {e}")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("{name}: {e}")))
        };
        match name {
            "root_tol" => self.root_tol = float()?,
            "max_newton_iters" => self.max_newton_iters = int()?,
            "bracket_growth" => self.bracket_growth = float()?,
            "boundary_guard" => self.boundary_guard = float()?,
            "pg_step0" => self.pg_step0 = float()?,
            "pg_shrink" => self.pg_shrink = float()?,
            "pg_tol" => self.pg_tol = float()?,
            "pg_max_iters" => self.pg_max_iters = int()?,
            other => return Err(Error::Config(format!("unknown solver setting `{other}`"))),
        }
        Ok(())
    }
}
