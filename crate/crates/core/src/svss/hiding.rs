use crate::adversary::AdversaryStrategy;
use crate::error::ConfigError;
use crate::sim::{
    run_simulation, Endpoint, PartyFactory, PartySet, RunOptions, SessionTag, SimConfig, TraceKind, TraceMode,
    TraceRecord,
};

/// Adversary-visible records up to the first reconstruction request a
/// nonfaulty party sends for `session`.
pub fn adversary_view_before_rec(trace: &[TraceRecord], corrupted: &PartySet, session: &SessionTag) -> Vec<String> {
    let tag = session.to_string();
    trace
        .iter()
        .take_while(|r| {
            let nonfaulty_rec = r.kind == TraceKind::Send
                && r.session == tag
                && r.party.is_some_and(|p| !corrupted.contains(crate::sim::PartyId(p)))
                && r.endpoints.is_some_and(|(_, to)| to == Endpoint::Functionality)
                && r.detail.ends_with("payload=01");
            !nonfaulty_rec
        })
        .filter_map(|r| r.adversary_view(corrupted))
        .collect()
}

/// Re-runs the same seed and schedule with the dealer's secret in `session`
/// replaced by each of `secrets`, and reports whether the adversary's view
/// before any nonfaulty reconstruction is identical across the runs.
pub fn hiding_probe<F: PartyFactory>(
    config: &SimConfig,
    factory: &F,
    adversary: &AdversaryStrategy,
    options: &RunOptions,
    session: &SessionTag,
    secrets: (u64, u64),
) -> Result<bool, ConfigError> {
    let view = |secret: u64| -> Result<Vec<String>, ConfigError> {
        let mut opts = options.clone();
        opts.trace = TraceMode::Collect;
        opts.svss.secret_override = Some((session.clone(), secret));
        let report = run_simulation(config, factory, adversary, &opts)?;
        Ok(adversary_view_before_rec(&report.trace, &report.corrupted, session))
    };
    Ok(view(secrets.0)? == view(secrets.1)?)
}
