//! Shared setup for the criterion benchmarks in `benches/`.

use rqa_core::corpus::{dataset, CorpusError, Scenario};
use rqa_core::{KnowledgeBase, Query};

/// A loaded scenario and its default query.
pub struct Workload {
    pub scenario: Scenario,
    pub kb: KnowledgeBase,
    pub query: Query,
}

pub fn workload(scenario: Scenario) -> Result<Workload, CorpusError> {
    let kb = dataset(&scenario)?.load()?;
    let query = kb
        .parse_query(scenario.default_query())
        .expect("scenario default queries are well formed");
    Ok(Workload { scenario, kb, query })
}
