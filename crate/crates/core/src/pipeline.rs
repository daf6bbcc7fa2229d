//! End-to-end runs that produce every artifact from one instance.
//!
//! All randomness is derived from the run seed, so two runs with the same
//! instance and configuration produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cycles::{decompose, decomposition_problems, support_size, Decomposition};
use crate::execution::{run_execution, setup_cycle_htlcs, AdversarySpec, CycleStatus, ExecutionOutcome};
use crate::generate::{generate_instance, GenError, GenParams};
use crate::model::{NodeId, RebalancingInstance};
use crate::mpc::{
    private_solve, reconstruct_circulation, reveal_per_participant, select_delegates, IterationSchedule, MpcError,
    PrivateSolveConfig, PublicShape, SharedInstance,
};
use crate::oracle::{best_circulation, oracle_applicable};
use crate::solver::{circulation_violations, objective_of, solve_rebalancing, Circulation, CirculationFile};

pub const CIRCULATION_FILE: &str = "circulation.json";
pub const REPORT_FILE: &str = "report.json";
pub const DECOMPOSITION_FILE: &str = "decomposition.json";
pub const EXECUTIONS_FILE: &str = "executions.json";
pub const EVENTS_FILE: &str = "events.json";
pub const LEDGER_FILE: &str = "ledger.json";
pub const TRANSCRIPT_FILE: &str = "transcript.txt";
pub const DISCLOSURES_FILE: &str = "disclosures.json";

/// Refuse worst-case private solves whose rough operation count
/// (`iterations * n^3`) exceeds this, unless an explicit bound is given.
pub const MPC_WORK_LIMIT: u128 = 200_000_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 for bad input or I/O, 2 for a broken internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Internal(_) => 2,
            _ => 1,
        }
    }
}

impl From<GenError> for PipelineError {
    fn from(e: GenError) -> Self {
        PipelineError::Malformed(e.to_string())
    }
}

impl From<MpcError> for PipelineError {
    fn from(e: MpcError) -> Self {
        match e {
            MpcError::KTooLarge { .. } | MpcError::KTooSmall(_) | MpcError::OutOfRange(_) => {
                PipelineError::Malformed(e.to_string())
            }
            _ => PipelineError::Internal(e.to_string()),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_owned(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io { path: path.to_owned(), source })
}

pub fn load_instance(path: &Path) -> Result<RebalancingInstance, PipelineError> {
    RebalancingInstance::from_json(&read_file(path)?).map_err(|e| PipelineError::Malformed(e.to_string()))
}

pub fn load_adversary(path: &Path) -> Result<AdversarySpec, PipelineError> {
    AdversarySpec::from_json(&read_file(path)?).map_err(|e| PipelineError::Malformed(e.to_string()))
}

/// Derives an independent 64-bit seed for one labelled use of the run seed.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub mpc: bool,
    /// Delegate count for the private solve.
    pub k: usize,
    pub iteration_bound: Option<usize>,
    pub adversary: AdversarySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 0, mpc: false, k: 3, iteration_bound: None, adversary: AdversarySpec::honest() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MpcSummary {
    pub delegates: Vec<NodeId>,
    pub schedule: u64,
    pub transcript_ops: usize,
    pub messages: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub mode: &'static str,
    pub seed: u64,
    pub objective: u64,
    pub iterations: u64,
    pub terminated_early: bool,
    pub cycles: usize,
    pub support_nodes: usize,
    pub support_edges: usize,
    pub completed: usize,
    pub aborted: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mpc: Option<MpcSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub decomposition: Decomposition,
    pub outcome: ExecutionOutcome,
    /// File name to contents, for every artifact of the run.
    pub artifacts: BTreeMap<&'static str, String>,
}

impl RunOutput {
    pub fn circulation(&self) -> &Circulation {
        &self.decomposition.source
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_owned(), source })?;
        for (name, contents) in &self.artifacts {
            write_file(&dir.join(name), contents)?;
        }
        Ok(())
    }
}

struct Solved {
    circulation: Circulation,
    iterations: u64,
    terminated_early: bool,
    mpc: Option<(MpcSummary, String, String)>,
}

fn solve_plain(instance: &RebalancingInstance, config: &RunConfig) -> Result<Solved, PipelineError> {
    let report = solve_rebalancing(instance, config.iteration_bound).map_err(|e| PipelineError::Internal(e.to_string()))?;
    Ok(Solved {
        circulation: report.circulation,
        iterations: report.iterations as u64,
        terminated_early: report.terminated_early,
        mpc: None,
    })
}

fn solve_private(instance: &RebalancingInstance, config: &RunConfig) -> Result<Solved, PipelineError> {
    let mut sortition_seed = b"sortition".to_vec();
    sortition_seed.extend_from_slice(&config.seed.to_le_bytes());
    let delegates = select_delegates(instance.nodes(), config.k, &sortition_seed)?;

    let shape = PublicShape::of(instance);
    let worst = IterationSchedule::worst_case(&shape);
    let schedule = match config.iteration_bound {
        Some(b) => IterationSchedule::fixed(b as u64),
        None => {
            let n = shape.nodes as u128;
            let work = u128::from(worst.iterations) * n * n * n;
            if work > MPC_WORK_LIMIT {
                return Err(PipelineError::Malformed(format!(
                    "worst-case private schedule of {} iterations on {} nodes is too large; \
                     tighten capacity_bound in the instance or pass an iteration bound",
                    worst.iterations, shape.nodes
                )));
            }
            worst
        }
    };

    let mut share_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.seed, "shares", 0));
    let shared = SharedInstance::encode(instance, config.k, &mut share_rng)?;
    let out = private_solve(
        &shared,
        &shape,
        &schedule,
        &PrivateSolveConfig { seed: derive_seed(config.seed, "dealer", 0), shadow: false },
    )?;
    let circulation = reconstruct_circulation(&out.circulation, instance)?;
    let disclosures = reveal_per_participant(&out.circulation, instance)?;
    let summary = MpcSummary {
        delegates: delegates.delegates,
        schedule: schedule.iterations,
        transcript_ops: out.transcript.len(),
        messages: out.messages,
    };
    Ok(Solved {
        circulation,
        iterations: schedule.iterations,
        terminated_early: schedule.iterations < worst.iterations,
        mpc: Some((summary, out.transcript.dump(), pretty(&disclosures))),
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes")
}

/// Solves, decomposes and executes `instance`; nothing is written to disk.
pub fn run_pipeline(instance: &RebalancingInstance, config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let solved = if config.mpc { solve_private(instance, config)? } else { solve_plain(instance, config)? };
    let decomposition = decompose(&solved.circulation).map_err(|e| PipelineError::Internal(e.to_string()))?;
    if let Some(problem) = decomposition_problems(&decomposition).into_iter().next() {
        return Err(PipelineError::Internal(problem));
    }

    let executions = decomposition
        .cycles
        .iter()
        .enumerate()
        .map(|(i, c)| setup_cycle_htlcs(c, derive_seed(config.seed, "htlc", i as u64)))
        .collect();
    let outcome = run_execution(executions, &config.adversary).map_err(|e| PipelineError::Internal(e.to_string()))?;

    let statuses = outcome.statuses();
    let (support_nodes, support_edges) = support_size(instance, solved.circulation.flows());
    let report = RunReport {
        mode: if config.mpc { "mpc" } else { "plaintext" },
        seed: config.seed,
        objective: solved.circulation.objective(),
        iterations: solved.iterations,
        terminated_early: solved.terminated_early,
        cycles: decomposition.cycles.len(),
        support_nodes,
        support_edges,
        completed: statuses.iter().filter(|&&s| s == CycleStatus::Completed).count(),
        aborted: statuses.iter().filter(|&&s| s == CycleStatus::Aborted).count(),
        mpc: solved.mpc.as_ref().map(|(s, _, _)| s.clone()),
    };

    let mut artifacts = BTreeMap::new();
    artifacts.insert(REPORT_FILE, pretty(&report));
    artifacts.insert(CIRCULATION_FILE, solved.circulation.to_json());
    artifacts.insert(DECOMPOSITION_FILE, decomposition.to_json());
    artifacts.insert(EXECUTIONS_FILE, outcome.executions_json());
    artifacts.insert(EVENTS_FILE, outcome.events_json());
    artifacts.insert(LEDGER_FILE, outcome.ledger.to_json(instance.nodes()));
    if let Some((_, transcript, disclosures)) = solved.mpc {
        artifacts.insert(TRANSCRIPT_FILE, transcript);
        artifacts.insert(DISCLOSURES_FILE, disclosures);
    }
    Ok(RunOutput { report, decomposition, outcome, artifacts })
}

/// Reads the instance, runs the pipeline and writes all artifacts into
/// `out_dir`, plus a Graphviz rendering to `dot` if requested.
pub fn cmd_run(input: &Path, config: &RunConfig, out_dir: &Path, dot: Option<&Path>) -> Result<RunOutput, PipelineError> {
    let instance = load_instance(input)?;
    let output = run_pipeline(&instance, config)?;
    output.write_to(out_dir)?;
    if let Some(path) = dot {
        write_file(path, &output.decomposition.to_dot())?;
    }
    Ok(output)
}

pub fn cmd_gen(n: usize, m: usize, cap_max: u64, weight_max: u64, seed: u64) -> Result<String, PipelineError> {
    let params = GenParams { nodes: n, edges: m, cap_max, weight_max, seed };
    Ok(generate_instance(params)?.to_json())
}

/// Outcome of re-validating run artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub reasons: Vec<String>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.reasons.is_empty()
    }
}

/// Independently re-checks a circulation file and, when given, the
/// decomposition and ledger produced from it.
///
/// Checks:
/// * capacity and conservation on every edge and node
/// * the recorded objective against the flows
/// * edgewise decomposition sum and cycle shape
/// * zero net delta for every node in the ledger
/// * optimality by exhaustive search, when the instance is small enough
pub fn verify_artifacts(
    instance: &RebalancingInstance,
    circulation: &str,
    decomposition: Option<&str>,
    ledger: Option<&str>,
) -> Verdict {
    let mut reasons = Vec::new();
    let file: CirculationFile = match serde_json::from_str(circulation) {
        Ok(f) => f,
        Err(e) => {
            return Verdict { reasons: vec![format!("unreadable circulation: {e}")] };
        }
    };
    let flows = match file.edge_flows(instance) {
        Ok(f) => f,
        Err(e) => return Verdict { reasons: vec![e.to_string()] },
    };
    let violations = circulation_violations(instance, &flows);
    let feasible = violations.is_empty();
    reasons.extend(violations.iter().map(ToString::to_string));

    let objective = objective_of(instance, &flows);
    if objective != file.objective {
        reasons.push(format!("recorded objective {} but flows give {objective}", file.objective));
    }

    if let (Some(text), true) = (decomposition, feasible) {
        let source = Circulation::new(instance, flows.clone()).expect("feasibility checked");
        match Decomposition::from_json(&source, text) {
            Ok(d) => reasons.extend(decomposition_problems(&d)),
            Err(e) => reasons.push(e.to_string()),
        }
    }

    if let Some(text) = ledger {
        match serde_json::from_str::<serde_json::Value>(text) {
            Ok(v) => {
                let deltas = v.get("net_deltas").and_then(|d| d.as_object());
                match deltas {
                    Some(map) => {
                        for (node, delta) in map {
                            if delta.as_i64() != Some(0) {
                                reasons.push(format!("balance not conserved at {node}: net delta {delta}"));
                            }
                        }
                    }
                    None => reasons.push("ledger has no net_deltas".into()),
                }
            }
            Err(e) => reasons.push(format!("unreadable ledger: {e}")),
        }
    }

    if feasible && oracle_applicable(instance) {
        let best = best_circulation(instance).value.max(0) as u64;
        if objective < best {
            reasons.push(format!("objective below oracle optimum: {objective} < {best}"));
        }
    }
    Verdict { reasons }
}

/// Verifies a run directory written by [`cmd_run`] against its instance.
pub fn cmd_verify(instance_path: &Path, run_dir: &Path) -> Result<Verdict, PipelineError> {
    let instance = load_instance(instance_path)?;
    let circulation = read_file(&run_dir.join(CIRCULATION_FILE))?;
    let optional = |name: &str| {
        let path = run_dir.join(name);
        if path.exists() {
            read_file(&path).map(Some)
        } else {
            Ok(None)
        }
    };
    let decomposition = optional(DECOMPOSITION_FILE)?;
    let ledger = optional(LEDGER_FILE)?;
    Ok(verify_artifacts(&instance, &circulation, decomposition.as_deref(), ledger.as_deref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::Policy;
    use crate::model::{Bounds, ChannelConstraint};

    fn triangle() -> RebalancingInstance {
        RebalancingInstance::new(
            ["A", "B", "C"].map(NodeId::from),
            vec![ChannelConstraint::new("A", "B", 4), ChannelConstraint::new("B", "C", 4), ChannelConstraint::new("C", "A", 4)],
            Bounds { capacity_bound: 4, weight_bound: 1 },
        )
        .unwrap()
    }

    #[test]
    fn honest_triangle_run() {
        let out = run_pipeline(&triangle(), &RunConfig::default()).unwrap();
        assert_eq!(out.report.objective, 12);
        assert_eq!(out.report.cycles, 1);
        assert_eq!(out.report.completed, 1);
        assert!(out.report.mpc.is_none());
        assert!(!out.artifacts.contains_key(TRANSCRIPT_FILE));
        let v = verify_artifacts(
            &triangle(),
            &out.artifacts[CIRCULATION_FILE],
            Some(&out.artifacts[DECOMPOSITION_FILE]),
            Some(&out.artifacts[LEDGER_FILE]),
        );
        assert!(v.ok(), "{:?}", v.reasons);
    }

    #[test]
    fn mpc_run_matches_plaintext() {
        let inst = triangle();
        let plain = run_pipeline(&inst, &RunConfig::default()).unwrap();
        let private = run_pipeline(&inst, &RunConfig { mpc: true, k: 3, ..RunConfig::default() }).unwrap();
        assert_eq!(private.report.objective, plain.report.objective);
        assert_eq!(private.report.mode, "mpc");
        assert_eq!(private.report.mpc.as_ref().unwrap().delegates.len(), 3);
        assert!(private.artifacts[TRANSCRIPT_FILE].starts_with("add 1\n"));
        assert!(private.artifacts.contains_key(DISCLOSURES_FILE));
    }

    #[test]
    fn withholding_member_aborts_its_cycle() {
        let config = RunConfig { adversary: AdversarySpec::honest().with("B", Policy::WithholdPreimage), ..RunConfig::default() };
        let out = run_pipeline(&triangle(), &config).unwrap();
        assert_eq!(out.report.aborted, 1);
        assert!(out.outcome.ledger.transfers.is_empty());
        assert!(out.artifacts[LEDGER_FILE].contains("\"A\": 0"));
    }

    #[test]
    fn verify_rejects_tampering() {
        let inst = triangle();
        let bumped = r#"{"flows":[{"from":"A","to":"B","amount":4},{"from":"B","to":"C","amount":4},{"from":"C","to":"A","amount":5}],"objective":13}"#;
        let v = verify_artifacts(&inst, bumped, None, None);
        assert!(v.reasons.iter().any(|r| r.contains("capacity")), "{:?}", v.reasons);

        let small = r#"{"flows":[{"from":"A","to":"B","amount":1},{"from":"B","to":"C","amount":1},{"from":"C","to":"A","amount":1}],"objective":3}"#;
        let v = verify_artifacts(&inst, small, None, None);
        assert_eq!(v.reasons, vec!["objective below oracle optimum: 3 < 12".to_string()]);

        let wrong = r#"{"flows":[],"objective":1}"#;
        assert!(!verify_artifacts(&inst, wrong, None, None).ok());
    }

    #[test]
    fn oversized_private_schedule_needs_a_bound() {
        let inst = crate::generate::generate_instance(GenParams { nodes: 30, edges: 60, cap_max: 1000, weight_max: 1, seed: 1 })
            .unwrap();
        let err = run_pipeline(&inst, &RunConfig { mpc: true, ..RunConfig::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let too_many = run_pipeline(&triangle(), &RunConfig { mpc: true, k: 4, ..RunConfig::default() }).unwrap_err();
        assert_eq!(too_many.exit_code(), 1);
    }

    #[test]
    fn derived_seeds_differ_by_label_and_index() {
        assert_ne!(derive_seed(1, "htlc", 0), derive_seed(1, "htlc", 1));
        assert_ne!(derive_seed(1, "htlc", 0), derive_seed(1, "shares", 0));
        assert_eq!(derive_seed(5, "x", 2), derive_seed(5, "x", 2));
    }
}
