use ethgnn::gasopt::*;

/// Time and congestion recomputed from the model definition.
pub fn oracle_eval(m: &GasModel, g: u64) -> (f64, f64) {
    let cap = g / m.g_per_tx;
    let inc = if (m.n_pending as u64) < cap { m.n_pending as u64 } else { cap };
    let time = m.overhead + m.t_per_tx * inc as f64;
    let congestion = match m.congestion {
        CongestionMode::Excluded => {
            if m.n_pending == 0 {
                0.0
            } else {
                (m.n_pending as u64 - inc) as f64 / m.n_pending as f64
            }
        }
        CongestionMode::FeeTiered => {
            let high = (m.n_pending / 2) as u64;
            if high == 0 {
                0.0
            } else {
                high.saturating_sub(inc) as f64 / high as f64
            }
        }
    };
    (time, congestion)
}

/// Every grid limit that is best under: feasible congestion first, then the
/// smallest distance to the target time (or, if nothing is feasible, the
/// smallest congestion).
pub fn grid_optimum(cfg: &Algorithm1Config, m: &GasModel) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..).map(|k| k * cfg.gas_limit_increment).take_while(|&g| g <= cfg.max_gas_limit).collect();
    grid.push(cfg.max_gas_limit);
    let scored: Vec<(u64, bool, f64)> = grid
        .iter()
        .map(|&g| {
            let (time, c) = oracle_eval(m, g);
            let feasible = c <= cfg.congestion_threshold;
            (g, feasible, if feasible { (time - cfg.target_time).abs() } else { c })
        })
        .collect();
    let any_feasible = scored.iter().any(|s| s.1);
    let pool: Vec<_> = scored.into_iter().filter(|s| s.1 == any_feasible).collect();
    let best = pool.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    pool.into_iter().filter(|s| s.2 <= best + 1e-12).map(|s| s.0).collect()
}

pub fn model(n: usize, t: f64, g_per_tx: u64, overhead: f64, congestion: CongestionMode) -> GasModel {
    GasModel { n_pending: n, t_per_tx: t, g_limit: 0, g_per_tx, overhead, congestion }
}

/// `(model, start, max, target, threshold)` for the grid comparison.
pub fn algorithm1_cases() -> Vec<(GasModel, u64, u64, f64, f64)> {
    use CongestionMode::*;
    vec![
        (model(50, 0.1, 1000, 0.0, Excluded), 1000, 100_000, 3.0, 0.5),
        (model(50, 0.1, 1000, 0.0, Excluded), 90_000, 100_000, 3.0, 0.5),
        (model(80, 0.05, 500, 0.2, Excluded), 5000, 60_000, 2.6, 0.9),
        (model(30, 0.2, 250, 0.0, FeeTiered), 20_000, 40_000, 3.1, 0.3),
        (model(40, 0.1, 1000, 0.0, Excluded), 1000, 100_000, 1.0, 0.25),
        (model(40, 0.1, 1000, 0.0, Excluded), 1000, 25_000, 10.0, 0.5),
        (model(100, 0.01, 1000, 0.5, FeeTiered), 50_000, 200_000, 0.9, 0.1),
        (model(10, 1.0, 1000, 0.0, Excluded), 10_000, 20_000, 10.0, 0.0),
        (model(64, 0.03, 750, 0.0, Excluded), 3000, 70_000, 1.2, 0.6),
        (model(25, 0.4, 1000, 1.0, Excluded), 2000, 50_000, 100.0, 0.5),
    ]
}
