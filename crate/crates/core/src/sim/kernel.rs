use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, MAX_PAYLOAD};
use super::ids::{Endpoint, PartyId, PartySet, MAX_PARTIES};
use super::scheduler::SchedulerView;
use super::session::SessionTag;
use super::trace::{TraceKind, TraceMode, TraceRecord, TraceSink};
use crate::adversary::{AdversaryStrategy, ByzantineController, ShunBudget};
use crate::error::{ConfigError, ProtocolError};
use crate::svss::{SvssFunctionality, SvssOptions};

/// Parameters fixed for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    pub max_events: u64,
}

impl SimConfig {
    pub fn new(n: usize, t: usize, seed: u64) -> Self {
        SimConfig { n, t, seed, max_events: 1_000_000 }
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.n > MAX_PARTIES {
            return Err(ConfigError::PartyCount(self.n));
        }
        if 3 * self.t + 1 > self.n {
            return Err(ConfigError::Resilience { n: self.n, t: self.t });
        }
        if self.max_events == 0 {
            return Err(ConfigError::ZeroEventCap);
        }
        Ok(())
    }

    pub fn parties(&self) -> impl Iterator<Item = PartyId> + Clone {
        PartyId::all(self.n)
    }
}

const SCHEDULER_STREAM: u64 = 0;
const FUNCTIONALITY_STREAM: u64 = 1 << 40;
const BYZANTINE_STREAM: u64 = 1 << 32;

/// The randomness stream of one party, derived from `(seed, index)`.
pub fn party_rng(seed: u64, party: PartyId) -> ChaCha8Rng {
    stream(seed, 1 + party.0 as u64)
}

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub(crate) enum Effect {
    Send { to: Endpoint, session: SessionTag, payload: Vec<u8> },
    Note { kind: TraceKind, session: SessionTag, detail: String },
}

/// Handle passed to a state machine while it is being stepped. Everything a
/// machine does to the outside world goes through here.
pub struct Context<'a> {
    me: Endpoint,
    n: usize,
    t: usize,
    tracing: bool,
    rng: &'a mut ChaCha8Rng,
    effects: &'a mut Vec<Effect>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(
        me: Endpoint,
        n: usize,
        t: usize,
        tracing: bool,
        rng: &'a mut ChaCha8Rng,
        effects: &'a mut Vec<Effect>,
    ) -> Self {
        Context { me, n, t, tracing, rng, effects }
    }

    /// The party being stepped. Panics inside the SVSS functionality.
    pub fn me(&self) -> PartyId {
        self.me.party().expect("functionality has no party id")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn tracing(&self) -> bool {
        self.tracing
    }

    pub fn send(&mut self, to: impl Into<Endpoint>, session: &SessionTag, payload: Vec<u8>) {
        self.effects.push(Effect::Send { to: to.into(), session: session.clone(), payload });
    }

    /// Sends `payload` to every party, including the sender.
    pub fn broadcast(&mut self, session: &SessionTag, payload: &[u8]) {
        for p in PartyId::all(self.n) {
            self.effects.push(Effect::Send {
                to: Endpoint::Party(p),
                session: session.clone(),
                payload: payload.to_vec(),
            });
        }
    }

    pub fn to_functionality(&mut self, session: &SessionTag, payload: Vec<u8>) {
        self.send(Endpoint::Functionality, session, payload);
    }

    /// Draws one uniform bit from this party's stream and logs it.
    pub fn random_bit(&mut self, session: &SessionTag) -> bool {
        let bit = self.rng.gen::<bool>();
        if self.tracing {
            self.effects.push(Effect::Note {
                kind: TraceKind::RngDraw,
                session: session.clone(),
                detail: format!("bit={}", bit as u8),
            });
        }
        bit
    }

    /// Records a party-local event; `detail` is only evaluated when tracing.
    pub fn note(&mut self, session: &SessionTag, detail: impl FnOnce() -> String) {
        self.note_kind(TraceKind::LocalOutput, session, detail);
    }

    pub(crate) fn note_kind(&mut self, kind: TraceKind, session: &SessionTag, detail: impl FnOnce() -> String) {
        if self.tracing {
            self.effects.push(Effect::Note { kind, session: session.clone(), detail: detail() });
        }
    }

    /// Shun records are always emitted, even with tracing off, so the kernel
    /// can count them.
    pub(crate) fn shun(&mut self, session: &SessionTag, detail: String) {
        self.effects.push(Effect::Note { kind: TraceKind::Shun, session: session.clone(), detail });
    }

    pub(crate) fn effects_len(&self) -> usize {
        self.effects.len()
    }

    pub(crate) fn effects_from(&mut self, mark: usize) -> &mut [Effect] {
        &mut self.effects[mark..]
    }

    pub(crate) fn truncate_effects(&mut self, mark: usize) {
        self.effects.truncate(mark);
    }
}

/// A protocol state machine hosted by the kernel.
pub trait Party {
    type Output: Clone + fmt::Debug + PartialEq + Serialize;

    fn start(&mut self, ctx: &mut Context<'_>);

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError>;

    fn output(&self) -> Option<&Self::Output>;
}

/// Builds the state machine for each party. `flip_input` asks for the honest
/// code with the opposite binary input (or the protocol's analogue).
pub trait PartyFactory {
    type Party: Party;

    fn build(&self, id: PartyId, flip_input: bool) -> Self::Party;
}

pub enum Node<P> {
    Honest(P),
    Byzantine(ByzantineController<P>),
}

impl<P: Party> Node<P> {
    pub fn honest(&self) -> Option<&P> {
        match self {
            Node::Honest(p) => Some(p),
            Node::Byzantine(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "kebab-case")]
pub enum PartyOutcome<O> {
    Output(O),
    /// The queue drained without this party producing output.
    Quiescent,
    /// The event cap was hit first.
    Incomplete,
    Corrupted,
}

impl<O> PartyOutcome<O> {
    pub fn value(&self) -> Option<&O> {
        match self {
            PartyOutcome::Output(o) => Some(o),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub trace: TraceMode,
    pub svss: SvssOptions,
}

impl RunOptions {
    pub fn traced(mode: TraceMode) -> Self {
        RunOptions { trace: mode, ..Default::default() }
    }
}

pub struct RunReport<P: Party> {
    pub config: SimConfig,
    pub outcomes: Vec<PartyOutcome<P::Output>>,
    /// Delivery count at which each nonfaulty party first output.
    pub output_at: Vec<Option<u64>>,
    pub trace: Vec<TraceRecord>,
    pub trace_hash: Option<String>,
    pub deliveries: u64,
    pub hit_cap: bool,
    pub corrupted: PartySet,
    pub budget: ShunBudget,
    pub shun_records: u64,
    pub dropped: u64,
    pub functionality: SvssFunctionality,
    pub nodes: Vec<Node<P>>,
}

impl<P: Party> RunReport<P> {
    pub fn honest(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.config.parties().filter(|p| !self.corrupted.contains(*p))
    }

    pub fn honest_outputs(&self) -> Vec<(PartyId, &P::Output)> {
        self.honest().filter_map(|p| self.outcomes[p.index()].value().map(|o| (p, o))).collect()
    }

    /// No two nonfaulty outputs differ.
    pub fn agreement(&self) -> bool {
        let outs = self.honest_outputs();
        outs.windows(2).all(|w| w[0].1 == w[1].1)
    }

    pub fn all_honest_output(&self) -> bool {
        self.honest().all(|p| self.outcomes[p.index()].value().is_some())
    }

    pub fn common_output(&self) -> Option<&P::Output> {
        if !self.all_honest_output() || !self.agreement() {
            return None;
        }
        self.honest_outputs().first().map(|(_, o)| *o)
    }

    pub fn party(&self, p: PartyId) -> Option<&P> {
        self.nodes[p.index()].honest()
    }
}

/// Runs one simulation to quiescence or until `max_events` deliveries.
pub fn run_simulation<F: PartyFactory>(
    config: &SimConfig,
    factory: &F,
    adversary: &AdversaryStrategy,
    options: &RunOptions,
) -> Result<RunReport<F::Party>, ConfigError> {
    config.validate()?;
    let corrupted = adversary.corrupted_set(config)?;
    let budget = adversary.budget.build(config.n)?;
    Kernel::new(config, factory, adversary, options, corrupted, budget).run()
}

struct Kernel<P: Party> {
    config: SimConfig,
    nodes: Vec<Node<P>>,
    rngs: Vec<ChaCha8Rng>,
    functionality: SvssFunctionality,
    func_rng: ChaCha8Rng,
    corrupted: PartySet,
    budget: ShunBudget,
    scheduler: Box<dyn super::scheduler::Scheduler>,
    trace: TraceSink,
    next_msg: u64,
    deliveries: u64,
    completed: usize,
    outcomes: Vec<Option<P::Output>>,
    output_at: Vec<Option<u64>>,
    shun_records: u64,
    dropped: u64,
    effects: Vec<Effect>,
}

impl<P: Party> Kernel<P> {
    fn new<F: PartyFactory<Party = P>>(
        config: &SimConfig,
        factory: &F,
        adversary: &AdversaryStrategy,
        options: &RunOptions,
        corrupted: PartySet,
        budget: ShunBudget,
    ) -> Self {
        let nodes = config
            .parties()
            .map(|p| match adversary.behavior_of(p) {
                None => Node::Honest(factory.build(p, false)),
                Some(b) => {
                    let inner = b.runs_honest_code().then(|| factory.build(p, b.flips_input()));
                    Node::Byzantine(ByzantineController::new(
                        p,
                        b.clone(),
                        inner,
                        stream(config.seed, BYZANTINE_STREAM + p.0 as u64),
                    ))
                }
            })
            .collect();
        Kernel {
            config: config.clone(),
            nodes,
            rngs: config.parties().map(|p| party_rng(config.seed, p)).collect(),
            functionality: SvssFunctionality::new(options.svss.clone()),
            func_rng: stream(config.seed, FUNCTIONALITY_STREAM),
            corrupted,
            budget,
            scheduler: adversary.scheduler.build(stream(config.seed, SCHEDULER_STREAM)),
            trace: TraceSink::new(options.trace),
            next_msg: 0,
            deliveries: 0,
            completed: 0,
            outcomes: vec![None; config.n],
            output_at: vec![None; config.n],
            shun_records: 0,
            dropped: 0,
            effects: Vec::new(),
        }
    }

    fn run(mut self) -> Result<RunReport<P>, ConfigError> {
        let (n, t) = (self.config.n, self.config.t);
        let tracing = self.trace.enabled();
        for i in 0..n {
            let mut ctx =
                Context::new(Endpoint::Party(PartyId::new(i)), n, t, tracing, &mut self.rngs[i], &mut self.effects);
            match &mut self.nodes[i] {
                Node::Honest(p) => p.start(&mut ctx),
                Node::Byzantine(b) => b.start(&mut ctx),
            }
            self.flush(Endpoint::Party(PartyId::new(i)));
            self.check_output(i);
        }

        let mut hit_cap = false;
        loop {
            if self.deliveries >= self.config.max_events {
                hit_cap = !self.scheduler.is_empty();
                break;
            }
            let view = SchedulerView { deliveries: self.deliveries, completed: self.completed };
            let Some(env) = self.scheduler.pop(&view) else { break };
            self.deliveries += 1;
            self.trace.push(
                TraceKind::Deliver,
                env.to.party().map(|p| p.0),
                || env.session.to_string(),
                || env.describe(),
                Some((env.from, env.to)),
            );
            let me = env.to;
            let result = match me {
                Endpoint::Functionality => {
                    let mut ctx =
                        Context::new(me, n, t, tracing, &mut self.func_rng, &mut self.effects);
                    self.functionality.on_message(&mut ctx, &env, &self.corrupted, &mut self.budget)
                }
                Endpoint::Party(p) => {
                    let i = p.index();
                    let mut ctx = Context::new(me, n, t, tracing, &mut self.rngs[i], &mut self.effects);
                    match &mut self.nodes[i] {
                        Node::Honest(party) => party.on_message(&mut ctx, &env),
                        Node::Byzantine(b) => {
                            b.step(&mut ctx, &env);
                            Ok(())
                        }
                    }
                }
            };
            if let Err(e) = result {
                self.dropped += 1;
                self.trace.push(
                    TraceKind::LocalOutput,
                    me.party().map(|p| p.0),
                    || env.session.to_string(),
                    || format!("drop id={} reason={e}", env.msg_id),
                    None,
                );
            }
            self.flush(me);
            if let Endpoint::Party(p) = me {
                self.check_output(p.index());
            }
        }

        let (trace, trace_hash) = self.trace.finish();
        let outcomes = self
            .config
            .parties()
            .zip(self.outcomes)
            .map(|(p, o)| match o {
                _ if self.corrupted.contains(p) => PartyOutcome::Corrupted,
                Some(o) => PartyOutcome::Output(o),
                None if hit_cap => PartyOutcome::Incomplete,
                None => PartyOutcome::Quiescent,
            })
            .collect();
        Ok(RunReport {
            config: self.config,
            outcomes,
            output_at: self.output_at,
            trace,
            trace_hash,
            deliveries: self.deliveries,
            hit_cap,
            corrupted: self.corrupted,
            budget: self.budget,
            shun_records: self.shun_records,
            dropped: self.dropped,
            functionality: self.functionality,
            nodes: self.nodes,
        })
    }

    fn check_output(&mut self, i: usize) {
        if self.outcomes[i].is_some() {
            return;
        }
        let Node::Honest(p) = &self.nodes[i] else { return };
        if let Some(out) = p.output() {
            self.outcomes[i] = Some(out.clone());
            self.output_at[i] = Some(self.deliveries);
            self.completed += 1;
            self.trace.push(
                TraceKind::ProtocolComplete,
                Some(i as u32),
                String::new,
                || serde_json::to_string(out).unwrap_or_default(),
                None,
            );
        }
    }

    fn flush(&mut self, from: Endpoint) {
        let n = self.config.n;
        for effect in std::mem::take(&mut self.effects) {
            match effect {
                Effect::Note { kind, session, detail } => {
                    if kind == TraceKind::Shun {
                        self.shun_records += 1;
                    }
                    self.trace.push(kind, from.party().map(|p| p.0), || session.to_string(), || detail, None);
                }
                Effect::Send { to, session, payload } => {
                    let env = Envelope { msg_id: self.next_msg, from, to, session, payload };
                    self.next_msg += 1;
                    let bad_target = matches!(to, Endpoint::Party(p) if p.index() >= n);
                    if bad_target || env.payload.len() > MAX_PAYLOAD {
                        self.dropped += 1;
                        self.trace.push(
                            TraceKind::LocalOutput,
                            from.party().map(|p| p.0),
                            || env.session.to_string(),
                            || format!("drop-send id={} len={}", env.msg_id, env.payload.len()),
                            None,
                        );
                        continue;
                    }
                    self.trace.push(
                        TraceKind::Send,
                        from.party().map(|p| p.0),
                        || env.session.to_string(),
                        || env.describe(),
                        Some((env.from, env.to)),
                    );
                    self.scheduler.push(env);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryStrategy;
    use crate::sim::scheduler::SchedulerSpec;
    use crate::sim::session::Label;

    /// Each party broadcasts a byte once and outputs the count it heard.
    struct Echo {
        heard: usize,
        out: Option<usize>,
    }

    impl Party for Echo {
        type Output = usize;

        fn start(&mut self, ctx: &mut Context<'_>) {
            ctx.broadcast(&SessionTag::root(Label::Acast), &[ctx.me().0 as u8]);
        }

        fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
            if env.payload.len() != 1 {
                return Err(ProtocolError::Malformed("echo"));
            }
            self.heard += 1;
            if self.heard == ctx.n() {
                self.out = Some(self.heard);
            }
            Ok(())
        }

        fn output(&self) -> Option<&usize> {
            self.out.as_ref()
        }
    }

    struct EchoFactory;

    impl PartyFactory for EchoFactory {
        type Party = Echo;

        fn build(&self, _: PartyId, _: bool) -> Echo {
            Echo { heard: 0, out: None }
        }
    }

    fn run(seed: u64, max_events: u64) -> RunReport<Echo> {
        let cfg = SimConfig::new(4, 1, seed).with_max_events(max_events);
        let adv = AdversaryStrategy::honest(SchedulerSpec::Random);
        run_simulation(&cfg, &EchoFactory, &adv, &RunOptions::traced(TraceMode::Collect)).unwrap()
    }

    #[test]
    fn identical_runs_have_identical_traces() {
        let a = run(7, 1000);
        let b = run(7, 1000);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace_hash, b.trace_hash);
        assert_ne!(a.trace_hash, run(8, 1000).trace_hash);
    }

    #[test]
    fn steps_increase_and_each_delivery_has_a_send() {
        let r = run(3, 1000);
        assert!(r.trace.windows(2).all(|w| w[0].step < w[1].step));
        let sends = r.trace.iter().filter(|x| x.kind == TraceKind::Send).count();
        let delivers = r.trace.iter().filter(|x| x.kind == TraceKind::Deliver).count();
        assert_eq!(sends, 16);
        assert_eq!(delivers, 16);
        assert!(r.outcomes.iter().all(|o| *o == PartyOutcome::Output(4)));
    }

    #[test]
    fn event_cap_marks_missing_outputs_incomplete() {
        let r = run(3, 5);
        assert!(r.hit_cap);
        assert!(r.outcomes.contains(&PartyOutcome::Incomplete));
    }

    #[test]
    fn resilience_is_checked() {
        let cfg = SimConfig::new(3, 1, 0);
        let adv = AdversaryStrategy::honest(SchedulerSpec::Fifo);
        let err = run_simulation(&cfg, &EchoFactory, &adv, &RunOptions::default()).err();
        assert_eq!(err, Some(ConfigError::Resilience { n: 3, t: 1 }));
        assert_eq!(SimConfig::new(4, 1, 0).with_max_events(0).validate(), Err(ConfigError::ZeroEventCap));
    }

    #[test]
    fn party_streams_are_deterministic_and_distinct() {
        let draw = |p| {
            let mut r = party_rng(0, PartyId(p));
            (0..64).map(|_| r.gen::<bool>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(0), draw(0));
        assert_ne!(draw(0), draw(1));
        let mut r = party_rng(42, PartyId(0));
        let ones = (0..10_000).filter(|_| r.gen::<bool>()).count();
        assert!((4700..=5300).contains(&ones), "ones={ones}");
    }
}
