use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{check, GasError, GasModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Config {
    pub gas_limit: u64,
    pub gas_limit_increment: u64,
    pub max_gas_limit: u64,
    /// Seconds.
    pub target_time: f64,
    pub congestion_threshold: f64,
    pub max_iterations: usize,
}

impl Algorithm1Config {
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.gas_limit_increment == 0 {
            p.push("gas_limit_increment must be positive".into());
        }
        if self.gas_limit == 0 || self.gas_limit > self.max_gas_limit {
            p.push(format!("gas_limit must be in (0, max_gas_limit = {}], got {}", self.max_gas_limit, self.gas_limit));
        }
        if !(0.0..=1.0).contains(&self.congestion_threshold) {
            p.push(format!("congestion_threshold must be in [0, 1], got {}", self.congestion_threshold));
        }
        if !self.target_time.is_finite() {
            p.push("target_time must be finite".into());
        }
        if self.max_iterations == 0 {
            p.push("max_iterations must be positive".into());
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Step {
    pub iteration: usize,
    pub gas_limit: u64,
    pub expected_time: f64,
    pub congestion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Result {
    pub gas_limit: u64,
    pub converged: bool,
    pub trace: Vec<Algorithm1Step>,
}

impl Algorithm1Result {
    /// CSV `iteration,gas_limit,expected_time,congestion`.
    pub fn write_trace_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = crate::report::csv_writer(out);
        w.write_record(["iteration", "gas_limit", "expected_time", "congestion"])?;
        for s in &self.trace {
            w.write_record([
                s.iteration.to_string(),
                s.gas_limit.to_string(),
                s.expected_time.to_string(),
                s.congestion.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Iterative gas-limit search.
///
/// Each iteration evaluates the current limit and stops when the expected
/// time is within one `t_per_tx` of the target and congestion is at or below
/// the threshold. Otherwise: congestion above threshold raises the limit
/// (more inclusion is the only way to lower it); else a time above target
/// lowers it and a time below target raises it. The limit is clamped to
/// `[increment, max_gas_limit]`. On running out of iterations, the last
/// evaluated limit is returned.
pub fn algorithm1_optimize(cfg: &Algorithm1Config, model: &GasModel) -> Result<Algorithm1Result, GasError> {
    let mut problems = cfg.problems();
    problems.extend(model.problems());
    check(problems)?;
    let inc = cfg.gas_limit_increment;
    let lo = inc.min(cfg.max_gas_limit);
    let mut g = cfg.gas_limit.clamp(lo, cfg.max_gas_limit);
    let mut trace = Vec::new();
    for iteration in 0..cfg.max_iterations {
        let (time, congestion) = model.simulate(g);
        trace.push(Algorithm1Step { iteration, gas_limit: g, expected_time: time, congestion });
        let congested = congestion > cfg.congestion_threshold;
        if !congested && (time - cfg.target_time).abs() <= model.t_per_tx {
            return Ok(Algorithm1Result { gas_limit: g, converged: true, trace });
        }
        let next = if congested || time < cfg.target_time {
            g.saturating_add(inc)
        } else {
            g.saturating_sub(inc)
        };
        let next = next.clamp(lo, cfg.max_gas_limit);
        if next == g && iteration + 1 < cfg.max_iterations {
            // Pinned at a bound; further iterations would repeat this one.
            return Ok(Algorithm1Result { gas_limit: g, converged: false, trace });
        }
        g = next;
    }
    let last = trace.last().expect("max_iterations > 0").gas_limit;
    Ok(Algorithm1Result { gas_limit: last, converged: false, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> GasModel {
        GasModel { n_pending: 50, t_per_tx: 0.1, g_limit: 0, g_per_tx: 1000, overhead: 0.0, congestion: Default::default() }
    }

    fn cfg(start: u64) -> Algorithm1Config {
        Algorithm1Config {
            gas_limit: start,
            gas_limit_increment: 1000,
            max_gas_limit: 100_000,
            target_time: 2.05,
            congestion_threshold: 0.8,
            max_iterations: 500,
        }
    }

    #[test]
    fn already_converged_start() {
        let r = algorithm1_optimize(&cfg(20_000), &model()).unwrap();
        assert!(r.converged);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.gas_limit, 20_000);
    }

    #[test]
    fn climbs_and_descends_to_the_band() {
        for start in [1000, 90_000] {
            let r = algorithm1_optimize(&cfg(start), &model()).unwrap();
            assert!(r.converged);
            assert!((19_000..=22_000).contains(&r.gas_limit), "{}", r.gas_limit);
        }
    }

    #[test]
    fn cap_binds() {
        let c = Algorithm1Config { target_time: 100.0, max_gas_limit: 30_500, ..cfg(1000) };
        let r = algorithm1_optimize(&c, &model()).unwrap();
        assert_eq!(r.gas_limit, 30_500);
        assert!(r.trace.iter().all(|s| s.gas_limit <= 30_500 && s.gas_limit >= 1000));
    }

    #[test]
    fn invalid_config_lists_all_problems() {
        let c = Algorithm1Config { gas_limit_increment: 0, gas_limit: 0, max_iterations: 0, ..cfg(1) };
        let msg = algorithm1_optimize(&c, &model()).unwrap_err().to_string();
        assert_eq!(msg.matches(';').count(), 2, "{msg}");
    }
}
