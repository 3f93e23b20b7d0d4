//! Writes one run's JSONL trace to stdout, followed by what the corrupted
//! party observed.

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::ba::BaFactory;
use abft_lab::sim::{run_simulation, write_jsonl, PartyId, RunOptions, SchedulerSpec, SimConfig, TraceMode};

fn main() {
    let factory = BaFactory { n: 4, t: 1, inputs: vec![true, false] };
    let adv = AdversaryStrategy::honest(SchedulerSpec::Fifo).corrupt(PartyId(2), Behavior::Equivocate);
    let r = run_simulation(&SimConfig::new(4, 1, 42), &factory, &adv, &RunOptions::traced(TraceMode::Collect)).unwrap();
    write_jsonl(std::io::stdout().lock(), &r.trace).unwrap();
    let view: Vec<String> = r.trace.iter().filter_map(|x| x.adversary_view(&r.corrupted)).collect();
    eprintln!("{} records, {} visible to the adversary, hash {:?}", r.trace.len(), view.len(), r.trace_hash);
}
