use super::{run_pipeline, PipelineConfig, PipelineError, PipelineOutcome};
use crate::scenario::Scenario;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub scenario: Scenario,
    pub instructions: String,
}

/// Runs every item on a pool of `parallelism` threads. Outcomes keep input
/// order and a failing item never aborts the others.
pub fn run_batch(items: &[BatchItem], cfg: &PipelineConfig, parallelism: usize) -> Vec<PipelineOutcome> {
    let one = |item: &BatchItem| {
        run_pipeline(&item.scenario, &item.instructions, cfg)
            .unwrap_or_else(|e| PipelineOutcome::failed(&item.scenario.scenario_id, cfg.strategy, e))
    };
    if parallelism <= 1 {
        return items.iter().map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(one).collect()),
        Err(e) => items
            .iter()
            .map(|item| {
                PipelineOutcome::failed(
                    &item.scenario.scenario_id,
                    cfg.strategy,
                    PipelineError::Config(format!("thread pool: {e}")),
                )
            })
            .collect(),
    }
}
