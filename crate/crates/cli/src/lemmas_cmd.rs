use std::time::Instant;

use projlab_core::lemmas::{replay, run_all, CampaignSizes, CaseOutcome, LemmaId};

use crate::error::{CliError, CliResult};
use crate::report::{LemmaReport, Timings, SCHEMA_VERSION, TOOL_VERSION};

/// Runs every campaign; `cases` overrides all per-campaign counts.
pub fn run_lemmas(cases: Option<u64>, seed: u64) -> CliResult<LemmaReport> {
    let sizes = cases.map_or_else(CampaignSizes::default, CampaignSizes::uniform);
    let start = Instant::now();
    let campaigns = run_all(&sizes, seed)?;
    let mut timings_ms = Timings::new();
    timings_ms.insert("campaigns".into(), start.elapsed().as_secs_f64() * 1e3);
    Ok(LemmaReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        command: "lemmas".into(),
        seed,
        all_pass: campaigns.iter().all(|c| c.all_pass()),
        sizes,
        campaigns,
        timings_ms,
    })
}

/// Replays one case given as `LEMMA_ID:SEED`.
pub fn replay_case(arg: &str) -> CliResult<(LemmaId, u64, CaseOutcome)> {
    let (id, seed) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("expected LEMMA_ID:SEED, got {arg:?}")))?;
    let lemma = LemmaId::parse(id).ok_or_else(|| CliError::Input(format!("unknown lemma id {id:?}")))?;
    let seed: u64 = seed.parse().map_err(|e| CliError::input("bad seed", e))?;
    Ok((lemma, seed, replay(lemma, seed, &CampaignSizes::default())?))
}
