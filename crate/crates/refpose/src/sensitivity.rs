//! Parallel sensitivity-to-initialization grid.

use std::path::Path;

use rayon::prelude::*;
use refpose_core::synth::{sensitivity_trial, Benchmark, SensitivityConfig, SensitivityGrid};

use crate::error::Result;
use crate::format::grid;

/// Same result as the serial [`refpose_core::synth::sensitivity_grid`]:
/// every trial has its own counter-derived seed.
pub fn run(bench: &Benchmark, cfg: &SensitivityConfig) -> Result<SensitivityGrid> {
    cfg.validate()?;
    let (nr, nt) = (cfg.rot_levels_deg.len(), cfg.trans_levels_m.len());
    let outcomes: Vec<_> = (0..nr * nt * cfg.trials)
        .into_par_iter()
        .map(|i| {
            let (cell, k) = (i / cfg.trials, i % cfg.trials);
            let (r, t) = (cell / nt, cell % nt);
            let seed = cfg.trial_seed(r, t, k);
            sensitivity_trial(bench, cfg.rot_levels_deg[r], cfg.trans_levels_m[t], seed, cfg).0
        })
        .collect();
    Ok(SensitivityGrid::from_outcomes(cfg, &outcomes)?)
}

/// Writes `sensitivity_iter1.{csv,dat}` and `sensitivity_iter<N>.{csv,dat}`.
pub fn write(out_dir: &Path, g: &SensitivityGrid, iterations: usize) -> Result<()> {
    for (k, rates) in [(1, &g.first), (iterations, &g.last)] {
        let stem = format!("sensitivity_iter{k}");
        grid::write_csv(&out_dir.join(format!("{stem}.csv")), &g.rot_levels_deg, &g.trans_levels_m, rates)?;
        grid::write_dat(&out_dir.join(format!("{stem}.dat")), &g.rot_levels_deg, &g.trans_levels_m, rates)?;
    }
    Ok(())
}
