//! Agent runtime: per-agent memory, inboxes, decision records, and the
//! backend interface the round loop drives.
//!
//! User ids are 1-based everywhere an agent can see them (prompts,
//! proposals, memory lines), matching the "You are 2" / "To User 2"
//! surface grammar; vectors remain 0-indexed internally.

mod parse;
mod prompt;
mod scripted;

pub use parse::parse_response;
pub use prompt::render_prompt;
pub use scripted::scripted_decide;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::Scenario;

/// Which prompt template and messaging rules a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Memory and reasoning only; no proposal channel.
    Standalone,
    /// Memory, reasoning, and unicast cooperation proposals.
    Cooperative,
}

/// One line of an agent's memory, serialized into the prompt in the
/// fixed key order `user, round, observation, action[, message], explanation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub user_id: usize,
    pub round: usize,
    pub observation_rate_kbps: f64,
    pub action_power_w: f64,
    /// Proposal text the agent sent this round, when any.
    pub message: Option<String>,
    pub explanation: String,
}

impl MemoryEntry {
    /// Render the memory line. Floats carry three decimals so that a
    /// re-parse recovers the same values the agent saw.
    pub fn render(&self) -> String {
        match &self.message {
            Some(m) => format!(
                "{{user:{}, round:{}, observation:{:.3}, action:{:.3}, message:{}, explanation:{}}}",
                self.user_id, self.round, self.observation_rate_kbps, self.action_power_w, m,
                self.explanation
            ),
            None => format!(
                "{{user:{}, round:{}, observation:{:.3}, action:{:.3}, explanation:{}}}",
                self.user_id, self.round, self.observation_rate_kbps, self.action_power_w,
                self.explanation
            ),
        }
    }
}

/// A unicast cooperation request, "To User [id]: [content]".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub from_user: usize,
    pub to_user: usize,
    pub body: String,
    pub round_sent: usize,
}

impl Proposal {
    pub fn render(&self) -> String {
        format!("To User {}: {}", self.to_user, self.body)
    }
}

/// Parsed outcome of one agent decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    /// Requested transmit power after clamping to `[0, p_max]`. Equals the
    /// agent's previous power when `parse_ok` is false.
    pub power_w: f64,
    pub proposals: Vec<Proposal>,
    pub explanation: String,
    pub raw_response: String,
    pub parse_ok: bool,
}

/// One agent's identity, memory stream, and pending inbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// 1-based id as it appears in prompts.
    pub user_id: usize,
    pub memory: Vec<MemoryEntry>,
    /// Proposals received at the end of the previous round, consumed by
    /// the next prompt.
    pub inbox: Vec<Proposal>,
    pub last_power_w: f64,
}

impl AgentState {
    pub fn new(user_id: usize, initial_power_w: f64) -> Self {
        Self {
            user_id,
            memory: Vec::new(),
            inbox: Vec::new(),
            last_power_w: initial_power_w,
        }
    }

    /// Memory serialized for the prompt, one line per entry.
    pub fn memory_text(&self) -> String {
        self.memory
            .iter()
            .map(MemoryEntry::render)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Everything a backend may consult for one decision. The remote backend
/// reads the rendered text; the scripted backend reads the numeric fields
/// and the agent's inbox. Both produce raw response text in the template's
/// output format.
pub struct DecisionContext<'a> {
    pub system_text: &'a str,
    pub user_text: &'a str,
    pub memory_text: &'a str,
    pub agent: &'a AgentState,
    pub scenario: &'a Scenario<f64>,
    pub current_rate_kbps: f64,
    pub target_kbps: f64,
    pub mode: AgentMode,
    pub round: usize,
    /// Stream seed unique to this (run, agent, round).
    pub decision_seed: u64,
}

/// Behavioral interface of a decision maker: context in, raw text out.
pub trait DecisionBackend: Send + Sync {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<String>;
}

/// Deterministic stand-in policy; see [`scripted_decide`].
pub struct ScriptedBackend;

impl DecisionBackend for ScriptedBackend {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<String> {
        Ok(scripted_decide(
            ctx.agent,
            ctx.current_rate_kbps,
            ctx.target_kbps,
            ctx.scenario,
            ctx.mode,
            ctx.decision_seed,
        ))
    }
}

/// Commit a round: append the memory line, adopt the decided power, and
/// clear the consumed inbox. The memory message field echoes what this
/// agent sent, delivered or not.
pub fn apply_round(
    agent: &mut AgentState,
    record: &ActionRecord,
    observed_rate_kbps: f64,
    round: usize,
) -> Result<()> {
    if let Some(last) = agent.memory.last() {
        if last.round >= round {
            return Err(Error::ProtocolViolation(format!(
                "memory for user {} already contains round {round}",
                agent.user_id
            )));
        }
    }
    let message = if record.proposals.is_empty() {
        None
    } else {
        Some(
            record
                .proposals
                .iter()
                .map(Proposal::render)
                .collect::<Vec<_>>()
                .join("; "),
        )
    };
    agent.memory.push(MemoryEntry {
        user_id: agent.user_id,
        round,
        observation_rate_kbps: observed_rate_kbps,
        action_power_w: record.power_w,
        message,
        explanation: record.explanation.clone(),
    });
    agent.last_power_w = record.power_w;
    agent.inbox.clear();
    Ok(())
}

/// Deliver this round's proposals into next-round inboxes.
///
/// `records` must be ordered by agent index (user 1 first). Proposals to
/// ids outside `1..=n` or back to the sender are dropped and counted.
/// Returns (inboxes, delivered, dropped).
pub fn route_proposals(
    records: &[ActionRecord],
    n_pairs: usize,
) -> (Vec<Vec<Proposal>>, usize, usize) {
    let mut inboxes = vec![Vec::new(); n_pairs];
    let mut delivered = 0;
    let mut dropped = 0;
    for record in records {
        for proposal in &record.proposals {
            let to = proposal.to_user;
            if (1..=n_pairs).contains(&to) && to != proposal.from_user {
                inboxes[to - 1].push(proposal.clone());
                delivered += 1;
            } else {
                dropped += 1;
            }
        }
    }
    (inboxes, delivered, dropped)
}
