//! Model invariants as properties over random scripts, patterns and schedules.

use std::collections::HashMap;
use std::sync::Arc;

use omega_core::bgsim::{SafeAgreement, SimId};
use omega_core::config::ExperimentConfig;
use omega_core::consensus::{check_consensus_trace, OmegaConsensus};
use omega_core::dag::{check_dag_properties, dag_union, snapshots, CommProcess};
use omega_core::detectors::{make_omega, OmegaSpec};
use omega_core::extractor::{least_appearing, replay};
use omega_core::sim::{
    AutomatonProcess, CausalOrder, ConsKey, ConsRegistry, Env, FailurePattern, OpRequest, Process, ProcessId,
    RegKey, Response, Scheduler, Slot, StepKind, System, Value,
};
use omega_core::suites::fair_dag;
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Write(u64, i64),
    Read(usize, u64),
    Query,
    Cons(u64, u8),
}

/// Runs a fixed list of operations, then stops.
#[derive(Clone, Debug)]
struct Script {
    me: ProcessId,
    ops: Vec<Op>,
    pc: usize,
}

impl Process for Script {
    fn next_op(&mut self, env: &Env<'_>) -> OpRequest {
        match &self.ops[self.pc] {
            Op::Write(k, v) => OpRequest::Write(RegKey::new(self.me, Slot::Cell(*k)), Value::Int(*v)),
            Op::Read(j, k) => OpRequest::Read(RegKey::new(ProcessId::from_index(j % env.n), Slot::Cell(*k))),
            Op::Query => OpRequest::Query,
            Op::Cons(k, b) => OpRequest::Cons(ConsKey { proc: ProcessId::new(1), ell: *k, r: 1 }, *b),
        }
    }

    fn complete(&mut self, _op: &OpRequest, _response: Response, _env: &Env<'_>) {
        self.pc += 1;
    }

    fn terminated(&self) -> bool {
        self.pc == self.ops.len()
    }
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..3u64, 0..100i64).prop_map(|(k, v)| Op::Write(k, v)),
        (0..4usize, 0..3u64).prop_map(|(j, k)| Op::Read(j, k)),
        Just(Op::Query),
        (0..2u64, 0..2u8).prop_map(|(k, b)| Op::Cons(k, b)),
    ]
}

fn scripted(scripts: &[Vec<Op>], crash: Option<(usize, u64)>, t_stab: u64, seed: u64) -> System<Script> {
    let n = scripts.len();
    let mut pattern = FailurePattern::new(n);
    if let Some((p, t)) = crash {
        pattern.set_crash(ProcessId::from_index(p % n), t).unwrap();
    }
    let leader = pattern.correct()[0];
    let history = Arc::new(make_omega(&pattern, &OmegaSpec { t_stab, leader, noise_seed: seed }).unwrap());
    let procs = scripts
        .iter()
        .enumerate()
        .map(|(i, ops)| Script { me: ProcessId::from_index(i), ops: ops.clone(), pc: 0 })
        .collect();
    let mut sys = System::new(pattern, history, procs).unwrap();
    sys.run(&mut Scheduler::seeded(n, seed), 1_000).unwrap();
    sys
}

fn scripts() -> impl Strategy<Value = Vec<Vec<Op>>> {
    prop::collection::vec(prop::collection::vec(op(), 1..18), 2..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn registers_are_atomic(s in scripts(), crash in prop::option::of((0..4usize, 0..30u64)), seed in any::<u64>()) {
        let sys = scripted(&s, crash, 10, seed);
        let mut mem: HashMap<RegKey, Value> = HashMap::new();
        for step in sys.steps() {
            match step.kind {
                StepKind::Write => { mem.insert(step.reg.unwrap(), step.value.clone().unwrap()); }
                StepKind::Read => {
                    let want = mem.get(&step.reg.unwrap()).cloned().unwrap_or_default();
                    prop_assert_eq!(step.value.clone().unwrap(), want);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn crashed_processes_stay_silent(s in scripts(), crash in (0..4usize, 0..30u64), seed in any::<u64>()) {
        let sys = scripted(&s, Some(crash), 10, seed);
        for step in sys.steps() {
            if let Some(t) = sys.pattern().crash_time(step.proc) {
                prop_assert!(step.t < t);
            }
        }
    }

    #[test]
    fn queries_sample_the_history(s in scripts(), t_stab in 0..40u64, seed in any::<u64>()) {
        let sys = scripted(&s, None, t_stab, seed);
        for step in sys.steps().iter().filter(|s| s.kind == StepKind::Query) {
            prop_assert_eq!(step.fd, Some(sys.history().sample(step.proc, step.t)));
        }
    }

    #[test]
    fn runs_are_deterministic(s in scripts(), seed in any::<u64>()) {
        let a = scripted(&s, Some((1, 7)), 10, seed);
        let b = scripted(&s, Some((1, 7)), 10, seed);
        prop_assert_eq!(a.steps(), b.steps());
    }

    #[test]
    fn consensus_objects_agree_on_a_proposed_value(s in scripts(), seed in any::<u64>()) {
        let sys = scripted(&s, None, 0, seed);
        let mut seen: HashMap<ConsKey, (Vec<u8>, u8)> = HashMap::new();
        for step in sys.steps() {
            if let Some(c) = step.cons {
                let entry = seen.entry(c.key).or_insert((Vec::new(), c.returned));
                entry.0.push(c.proposed);
                prop_assert_eq!(entry.1, c.returned);
                prop_assert!(entry.0.contains(&c.returned));
            }
        }
    }

    #[test]
    fn causal_order_matches_brute_force(s in scripts(), seed in any::<u64>()) {
        let sys = scripted(&s, None, 0, seed);
        let steps: Vec<_> = sys.steps().iter().take(50).cloned().collect();
        let m = steps.len();
        let object = |k: usize| -> Option<String> {
            let s = &steps[k];
            match s.kind {
                StepKind::Read | StepKind::Write => s.reg.map(|r| r.to_string()),
                StepKind::Cons => s.cons.map(|c| c.key.to_string()),
                _ => None,
            }
        };
        let mut rel = vec![vec![false; m]; m];
        for a in 0..m {
            for b in a + 1..m {
                let same_proc = steps[a].proc == steps[b].proc;
                let writes = matches!(steps[a].kind, StepKind::Write | StepKind::Cons);
                let reads = matches!(steps[b].kind, StepKind::Read | StepKind::Cons);
                rel[a][b] = same_proc || (writes && reads && object(a).is_some() && object(a) == object(b));
            }
        }
        for k in 0..m {
            for a in 0..m {
                if rel[a][k] {
                    for b in 0..m {
                        if rel[k][b] {
                            rel[a][b] = true;
                        }
                    }
                }
            }
        }
        let order = CausalOrder::new(sys.n(), &steps);
        for a in 0..m {
            prop_assert!(!order.precedes(a, a));
            for b in 0..m {
                prop_assert_eq!(order.precedes(a, b), rel[a][b], "steps {} {}", a, b);
            }
        }
    }

    #[test]
    fn consensus_is_safe_under_any_noise(
        inputs in prop::collection::vec(0..2u8, 2..5),
        t_stab in 0..400u64,
        crash in prop::option::of((0..5usize, 0..200u64)),
        seed in any::<u64>(),
    ) {
        let n = inputs.len();
        let mut pattern = FailurePattern::new(n);
        if let Some((p, t)) = crash {
            pattern.set_crash(ProcessId::from_index(p % n), t).unwrap();
        }
        let leader = pattern.correct()[0];
        let history = Arc::new(make_omega(&pattern, &OmegaSpec { t_stab, leader, noise_seed: seed }).unwrap());
        let algo = OmegaConsensus::new(n);
        let procs = inputs.iter().enumerate().map(|(i, &b)| AutomatonProcess::new(algo, ProcessId::from_index(i), b)).collect();
        let mut sys = System::new(pattern, history, procs).unwrap();
        sys.run(&mut Scheduler::seeded(n, seed), 3_000).unwrap();
        prop_assert!(check_consensus_trace(&sys.trace()).ok());
    }

    #[test]
    fn comm_runs_build_well_formed_dags(
        n in 2..6usize,
        crash in prop::option::of((0..6usize, 0..800u64)),
        t_stab in 0..800u64,
        seed in any::<u64>(),
    ) {
        let mut pattern = FailurePattern::new(n);
        if let Some((p, t)) = crash {
            pattern.set_crash(ProcessId::from_index(p % n), t).unwrap();
        }
        let leader = pattern.correct()[0];
        let history = Arc::new(make_omega(&pattern, &OmegaSpec { t_stab, leader, noise_seed: seed }).unwrap());
        let procs = ProcessId::all(n).map(|p| CommProcess::new(p, n)).collect();
        let mut sys = System::new(pattern.clone(), history.clone(), procs).unwrap();
        sys.run(&mut Scheduler::seeded(n, seed), 500).unwrap();
        let report = check_dag_properties(sys.vertices(), &snapshots(sys.steps()), &pattern, history.as_ref());
        prop_assert!(report.safety_ok(), "{:?}", report.violations.first());
        let mut locals = sys.procs().iter().map(|p| sys.vertices().view(p.local()).materialize());
        let a = locals.next().unwrap();
        let b = locals.next().unwrap();
        prop_assert!(a.is_acyclic() && a.is_transitively_closed());
        let ab = dag_union(&a, &b).unwrap();
        prop_assert_eq!(&ab, &dag_union(&b, &a).unwrap());
        prop_assert_eq!(&dag_union(&ab, &a).unwrap(), &ab);
        prop_assert!(ab.is_transitively_closed());
    }

    #[test]
    fn safe_agreement_agrees_under_random_interleavings(
        props in (any::<u32>(), any::<u32>()),
        order in prop::collection::vec(0..2usize, 0..12),
    ) {
        let mut sa = SafeAgreement::new();
        let values = [props.0, props.1];
        let mut done = [false; 2];
        let mut seen = Vec::new();
        for i in order {
            let q = SimId::BOTH[i];
            if !done[i] {
                done[i] = sa.propose_step(q, || values[i]).unwrap();
            } else if let Some(v) = sa.resolve(q).unwrap() {
                seen.push(v);
            }
        }
        prop_assert!(seen.windows(2).all(|w| w[0] == w[1]));
        prop_assert!(seen.iter().all(|v| values.contains(v)));
    }

    #[test]
    fn least_appearing_is_a_minimum(counts in prop::collection::vec(0..5u64, 1..7)) {
        let p = least_appearing(&counts).index();
        let min = *counts.iter().min().unwrap();
        prop_assert_eq!(counts[p], min);
        prop_assert!(counts[..p].iter().all(|&c| c > min));
    }

    #[test]
    fn config_text_round_trips(
        n in 2..7usize,
        t_stab in 0..10_000u64,
        seed in any::<u64>(),
        budget in 1..10_000_000u64,
        crash in prop::option::of(0..1_000u64),
        round_robin in any::<bool>(),
    ) {
        let mut c = ExperimentConfig { n, t_stab, seed, budget, ..ExperimentConfig::default() };
        if let Some(t) = crash {
            c.set("crash", &format!("p{n}@{t}")).unwrap();
        }
        if round_robin {
            c.set("scheduler", "round-robin").unwrap();
        }
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replay_extends_prefixes(sigma in prop::collection::vec(1..=2u8, 0..80), q in 1..=2u8, j in 0..4usize, seed in 0..4u64) {
        let (store, _) = fair_dag(3, 4_000, seed).unwrap();
        let f = store.frontier();
        let view = store.view(&f);
        let algo = OmegaConsensus::new(3);
        let inputs = omega_core::extractor::INPUT_VECTORS[j];
        let mut cons = ConsRegistry::new();
        let short = replay(&algo, 3, inputs, &sigma, &view, &mut cons).unwrap();
        let mut longer = sigma.clone();
        longer.push(q);
        let long = replay(&algo, 3, inputs, &longer, &view, &mut cons).unwrap();
        prop_assert!(long.sch().starts_with(short.sch()));
        let again = replay(&algo, 3, inputs, &sigma, &view, &mut cons).unwrap();
        prop_assert_eq!(again.sch(), short.sch());
        prop_assert!(!long.safety_violation());
    }
}
