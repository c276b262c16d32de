//! Round-based game loop, divergent-batch generation, and the full
//! benchmark sweep.
//!
//! Rounds are simultaneous-move: every agent decides against the same
//! round-start metrics and last round's inbox, and no agent's state is
//! touched until all decisions are in. The borrow structure enforces
//! this; decisions read `&AgentState` while commits run afterwards.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{
    apply_round, parse_response, render_prompt, route_proposals, ActionRecord, AgentMode,
    AgentState, DecisionBackend, DecisionContext, ScriptedBackend,
};
use crate::dpc::{analyze_feasibility, dpc_step};
use crate::error::{Error, Result};
use crate::gateway::{Gateway, GatewayConfig};
use crate::radio::{compute_metrics, generate_scenario, GenConfig, PowerVector, Scenario};
use crate::report::{aggregate_rows, summarize, SummaryRow};
use crate::rng::stream_seed;
use crate::runlog::{
    BackendKind, RoundEntry, RunConfig, RunLog, RunMode, TranscriptEntry, SCHEMA_VERSION,
};

/// Execute one run with the backend implied by the config. Remote runs
/// need a constructed gateway; use [`run_with_backend`] for those.
pub fn run(scenario: &Scenario<f64>, config: &RunConfig) -> Result<RunLog> {
    match (config.mode, config.backend) {
        (RunMode::Dpc, _) | (_, BackendKind::Scripted) => {
            run_with_backend(scenario, config, &ScriptedBackend)
        }
        (_, BackendKind::Remote) => Err(Error::ProtocolViolation(
            "remote backend requires a gateway; call run_with_backend".into(),
        )),
    }
}

/// The classical baseline for `rounds` rounds from the scenario's initial
/// powers.
pub fn run_dpc(scenario: &Scenario<f64>, rounds: usize) -> Result<RunLog> {
    run(
        scenario,
        &RunConfig::new(RunMode::Dpc, rounds, BackendKind::Scripted, 0),
    )
}

/// Execute one run, driving `backend` for agent decisions (unused in DPC
/// mode). Backend errors degrade to hold-on-failure per agent-round;
/// scenario errors abort.
pub fn run_with_backend(
    scenario: &Scenario<f64>,
    config: &RunConfig,
    backend: &dyn DecisionBackend,
) -> Result<RunLog> {
    config.validate()?;
    scenario.validate()?;
    if config.mode == RunMode::Dpc {
        analyze_feasibility(scenario)?;
    }

    let n = scenario.n_pairs;
    let mut agents: Vec<AgentState> = (1..=n)
        .map(|u| AgentState::new(u, scenario.p_init[u - 1]))
        .collect();
    let mut powers = PowerVector(scenario.p_init.clone());
    let initial_metrics = compute_metrics(scenario, &powers)?;

    let mut rounds = Vec::with_capacity(config.rounds);
    let mut transcript = Vec::new();
    let mut backend_failures = 0usize;
    let mut parse_failures = 0usize;

    for round in 1..=config.rounds {
        let observed = compute_metrics(scenario, &powers)?;

        let (records, delivered, dropped) = match config.mode.agent_mode() {
            None => {
                powers = dpc_step(scenario, &powers)?;
                (Vec::new(), 0, 0)
            }
            Some(agent_mode) => {
                // Decision phase: agents are read-only.
                let mut records: Vec<ActionRecord> = Vec::with_capacity(n);
                for agent in &agents {
                    let idx = agent.user_id - 1;
                    let rate = observed.rate_kbps[idx];
                    let (system_text, user_text, memory_text) =
                        render_prompt(scenario, agent, agent_mode, rate, round);
                    let prompt_sha256 = prompt_hash(&system_text, &user_text, &memory_text);
                    let ctx = DecisionContext {
                        system_text: &system_text,
                        user_text: &user_text,
                        memory_text: &memory_text,
                        agent,
                        scenario,
                        current_rate_kbps: rate,
                        target_kbps: scenario.targets_kbps[idx],
                        mode: agent_mode,
                        round,
                        decision_seed: stream_seed(
                            config.seed,
                            "decision",
                            &[agent.user_id as u64, round as u64],
                        ),
                    };
                    let (record, error) = match backend.decide(&ctx) {
                        Ok(raw) => {
                            let record = parse_response(
                                &raw,
                                scenario.p_max,
                                agent.last_power_w,
                                agent.user_id,
                                round,
                            );
                            if !record.parse_ok {
                                parse_failures += 1;
                            }
                            (record, None)
                        }
                        Err(e) => {
                            backend_failures += 1;
                            let held = ActionRecord {
                                power_w: agent.last_power_w,
                                proposals: Vec::new(),
                                explanation: String::new(),
                                raw_response: String::new(),
                                parse_ok: false,
                            };
                            (held, Some(e.to_string()))
                        }
                    };
                    transcript.push(TranscriptEntry {
                        round,
                        user_id: agent.user_id,
                        prompt_sha256,
                        raw_response: record.raw_response.clone(),
                        parse_ok: record.parse_ok,
                        error,
                    });
                    records.push(record);
                }

                // Routing: proposals travel only in cooperative mode, with
                // a one-round delay. Standalone agents may still emit
                // "To User" text; it is counted and dropped so message
                // accounting stays conserved.
                let (inboxes, delivered, dropped) = if agent_mode == AgentMode::Cooperative {
                    route_proposals(&records, n)
                } else {
                    let emitted: usize = records.iter().map(|r| r.proposals.len()).sum();
                    (vec![Vec::new(); n], 0, emitted)
                };

                // Commit phase: memories, adopted powers, fresh inboxes.
                for (agent, record) in agents.iter_mut().zip(&records) {
                    let idx = agent.user_id - 1;
                    apply_round(agent, record, observed.rate_kbps[idx], round)?;
                }
                for (agent, inbox) in agents.iter_mut().zip(inboxes) {
                    agent.inbox = inbox;
                }
                powers = PowerVector(records.iter().map(|r| r.power_w).collect());
                (records, delivered, dropped)
            }
        };

        let metrics = compute_metrics(scenario, &powers)?;
        rounds.push(RoundEntry {
            round,
            powers: powers.clone(),
            metrics,
            records,
            delivered,
            dropped,
        });
    }

    let summary = summarize(scenario, config.mode, &rounds, backend_failures, parse_failures)?;
    let log = RunLog {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        nondeterministic: config.backend == BackendKind::Remote && config.mode != RunMode::Dpc,
        scenario: scenario.clone(),
        initial_metrics,
        rounds,
        summary,
        transcript,
    };
    log.validate()?;
    Ok(log)
}

fn prompt_hash(system_text: &str, user_text: &str, memory_text: &str) -> String {
    let mut sha = Sha256::new();
    sha.update(system_text.as_bytes());
    sha.update([0u8]);
    sha.update(user_text.as_bytes());
    sha.update([0u8]);
    sha.update(memory_text.as_bytes());
    sha.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A batch of scenarios on which the baseline diverges, plus how hard
/// they were to find.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergentBatch {
    pub scenarios: Vec<Scenario<f64>>,
    /// Total scenarios drawn, accepted or not.
    pub draws: usize,
}

impl DivergentBatch {
    pub fn acceptance_rate(&self) -> f64 {
        self.scenarios.len() as f64 / self.draws as f64
    }
}

/// Draw seeded scenarios and keep those the feasibility analysis rejects,
/// until `count` are collected. Gives up (FilterExhausted) after
/// `1000 * count` draws; that signals generation parameters under which
/// the baseline essentially always converges.
pub fn generate_divergent_batch(n_pairs: usize, count: usize, seed: u64) -> Result<DivergentBatch> {
    generate_divergent_batch_with(n_pairs, count, seed, &GenConfig::default())
}

pub fn generate_divergent_batch_with(
    n_pairs: usize,
    count: usize,
    seed: u64,
    gen: &GenConfig<f64>,
) -> Result<DivergentBatch> {
    if count == 0 {
        return Err(Error::InvalidScenario("batch count must be >= 1".into()));
    }
    let cap = 1000 * count;
    let mut scenarios = Vec::with_capacity(count);
    let mut draws = 0usize;
    while scenarios.len() < count {
        if draws >= cap {
            return Err(Error::FilterExhausted {
                draws,
                accepted: scenarios.len(),
                requested: count,
            });
        }
        let scenario_seed = stream_seed(seed, "scenario", &[draws as u64]);
        let scenario = generate_scenario(scenario_seed, n_pairs, gen)?;
        draws += 1;
        if !analyze_feasibility(&scenario)?.feasible {
            scenarios.push(scenario);
        }
    }
    Ok(DivergentBatch { scenarios, draws })
}

/// Sweep parameters: which table to produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub user_counts: Vec<usize>,
    pub scenarios_per_count: usize,
    pub modes: Vec<RunMode>,
    pub backend: BackendKind,
    pub seed: u64,
    pub rounds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            user_counts: vec![2, 4, 10],
            scenarios_per_count: 25,
            modes: RunMode::ALL.to_vec(),
            backend: BackendKind::Scripted,
            seed: 0,
            rounds: 10,
        }
    }
}

/// One completed run within a sweep, addressable by its table cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRun {
    pub n_pairs: usize,
    pub mode: RunMode,
    pub scenario_index: usize,
    pub log: RunLog,
}

/// Batch provenance for one user count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchStats {
    pub n_pairs: usize,
    pub draws: usize,
    pub accepted: usize,
}

/// Everything a sweep produces: table rows, every run log, and batch
/// acceptance statistics.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<SweepRun>,
    pub batches: Vec<BatchStats>,
}

/// Run the full (user count x mode x scenario) grid and aggregate the
/// comparison table.
///
/// The same divergent batch serves all modes of a user count, so the
/// policies face identical instances. Seeds are derived per run from the
/// sweep seed through named streams; results are ordered by
/// (user count, mode, scenario index) regardless of scheduling, and
/// enlarging `scenarios_per_count` never changes earlier runs.
pub fn sweep(config: &SweepConfig, gateway: Option<&GatewayConfig>) -> Result<SweepOutcome> {
    if config.user_counts.is_empty() || config.modes.is_empty() {
        return Err(Error::InvalidScenario("sweep needs user counts and modes".into()));
    }
    if config.scenarios_per_count == 0 || config.rounds == 0 {
        return Err(Error::InvalidScenario("sweep needs at least one scenario and round".into()));
    }
    if config.backend == BackendKind::Remote && gateway.is_none() {
        return Err(Error::ProtocolViolation("remote sweep requires a gateway config".into()));
    }

    let mut user_counts = config.user_counts.clone();
    user_counts.sort_unstable();
    user_counts.dedup();
    let mut modes = config.modes.clone();
    modes.sort_unstable();
    modes.dedup();

    let mut batches = Vec::new();
    let mut batch_stats = Vec::new();
    for &n in &user_counts {
        let batch_seed = stream_seed(config.seed, "batch", &[n as u64]);
        let batch = generate_divergent_batch(n, config.scenarios_per_count, batch_seed)?;
        batch_stats.push(BatchStats {
            n_pairs: n,
            draws: batch.draws,
            accepted: batch.scenarios.len(),
        });
        batches.push((n, batch));
    }

    struct Task<'a> {
        n: usize,
        mode: RunMode,
        index: usize,
        scenario: &'a Scenario<f64>,
        run_config: RunConfig,
    }

    let mut tasks = Vec::new();
    for (n, batch) in &batches {
        for &mode in &modes {
            for (index, scenario) in batch.scenarios.iter().enumerate() {
                let run_seed =
                    stream_seed(config.seed, "run", &[*n as u64, mode as u64, index as u64]);
                let mut run_config =
                    RunConfig::new(mode, config.rounds, config.backend, run_seed);
                run_config.scenario_ref = Some(format!("batch n={n} index={index}"));
                tasks.push(Task {
                    n: *n,
                    mode,
                    index,
                    scenario,
                    run_config,
                });
            }
        }
    }

    let mut runs: Vec<SweepRun> = tasks
        .par_iter()
        .map(|task| {
            let log = match (config.backend, task.mode) {
                (BackendKind::Remote, mode) if mode != RunMode::Dpc => {
                    let gw = Gateway::new(gateway.unwrap().clone())?;
                    run_with_backend(task.scenario, &task.run_config, &gw)?
                }
                _ => run(task.scenario, &task.run_config)?,
            };
            Ok(SweepRun {
                n_pairs: task.n,
                mode: task.mode,
                scenario_index: task.index,
                log,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| (r.n_pairs, r.mode, r.scenario_index));

    let mut rows = Vec::new();
    for &n in &user_counts {
        for &mode in &modes {
            let summaries: Vec<_> = runs
                .iter()
                .filter(|r| r.n_pairs == n && r.mode == mode)
                .map(|r| r.log.summary.clone())
                .collect();
            rows.push(aggregate_rows(n, mode, &summaries)?);
        }
    }

    Ok(SweepOutcome {
        rows,
        runs,
        batches: batch_stats,
    })
}
