//! Run configuration and the structured log a run produces.
//!
//! A RunLog is self-contained: it embeds the scenario it was produced
//! from, one entry per round, the final summary, and the agent-level
//! transcript, so reports can be regenerated from persisted logs alone.

use serde::{Deserialize, Serialize};

use crate::agent::{ActionRecord, AgentMode};
use crate::error::{Error, Result};
use crate::radio::{LinkMetrics, PowerVector, Scenario};

/// Version stamp written into every persisted document.
pub const SCHEMA_VERSION: u32 = 1;

/// The three policies under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Classical distributed power control.
    Dpc,
    /// Agents with memory and reasoning, no messaging.
    GenaiAlone,
    /// Agents that additionally exchange cooperation proposals.
    Genainet,
}

impl RunMode {
    /// Stable lowercase label used in files, CSV rows, and CLI flags.
    pub fn label(self) -> &'static str {
        match self {
            RunMode::Dpc => "dpc",
            RunMode::GenaiAlone => "genai_alone",
            RunMode::Genainet => "genainet",
        }
    }

    pub fn parse_label(s: &str) -> Option<Self> {
        match s {
            "dpc" => Some(RunMode::Dpc),
            "genai_alone" => Some(RunMode::GenaiAlone),
            "genainet" => Some(RunMode::Genainet),
            _ => None,
        }
    }

    /// Prompt/messaging flavor for agent-driven modes; None for DPC.
    pub fn agent_mode(self) -> Option<AgentMode> {
        match self {
            RunMode::Dpc => None,
            RunMode::GenaiAlone => Some(AgentMode::Standalone),
            RunMode::Genainet => Some(AgentMode::Cooperative),
        }
    }

    pub const ALL: [RunMode; 3] = [RunMode::Dpc, RunMode::GenaiAlone, RunMode::Genainet];
}

/// Which decision maker non-DPC agents use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Scripted,
    Remote,
}

/// Parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: RunMode,
    pub rounds: usize,
    /// Ignored when mode is dpc.
    pub backend: BackendKind,
    pub seed: u64,
    /// Optional provenance note (scenario file path or batch tag).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_ref: Option<String>,
}

impl RunConfig {
    pub fn new(mode: RunMode, rounds: usize, backend: BackendKind, seed: u64) -> Self {
        Self {
            mode,
            rounds,
            backend,
            seed,
            scenario_ref: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidScenario("rounds must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(RunMode::Dpc, 10, BackendKind::Scripted, 0)
    }
}

/// Everything recorded for one round: the powers decided this round and
/// the metrics those powers induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    /// 1-based round number.
    pub round: usize,
    pub powers: PowerVector<f64>,
    pub metrics: LinkMetrics<f64>,
    /// One record per agent, ordered by user id; empty in DPC mode.
    pub records: Vec<ActionRecord>,
    pub delivered: usize,
    pub dropped: usize,
}

/// Aggregates of one run, computed at the final round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Mean absolute per-transmitter gap to target at the final round.
    pub rate_gap_kbps: f64,
    /// Sum of final-round powers.
    pub total_power_w: f64,
    /// Proposals emitted per transmitter; None outside cooperative mode.
    pub msgs_per_tx: Option<f64>,
    pub proposals_emitted: usize,
    pub proposals_delivered: usize,
    pub proposals_dropped: usize,
    /// Agent-rounds where the backend returned an error (held power).
    pub backend_failures: usize,
    /// Agent-rounds where the response carried no parseable action.
    pub parse_failures: usize,
}

/// One record per agent decision, for audit and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub round: usize,
    pub user_id: usize,
    /// SHA-256 over system, user, and memory texts.
    pub prompt_sha256: String,
    pub raw_response: String,
    pub parse_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub schema_version: u32,
    pub config: RunConfig,
    /// True when a remote backend was involved; such logs replay but do
    /// not regenerate.
    pub nondeterministic: bool,
    pub scenario: Scenario<f64>,
    /// Metrics at the initial powers, before any decision.
    pub initial_metrics: LinkMetrics<f64>,
    pub rounds: Vec<RoundEntry>,
    pub summary: RunSummary,
    pub transcript: Vec<TranscriptEntry>,
}

impl RunLog {
    /// Structural invariants: one entry per round, powers in range.
    pub fn validate(&self) -> Result<()> {
        if self.rounds.len() != self.config.rounds {
            return Err(Error::ProtocolViolation(format!(
                "log holds {} rounds, config says {}",
                self.rounds.len(),
                self.config.rounds
            )));
        }
        let p_max = self.scenario.p_max;
        for entry in &self.rounds {
            if entry.powers.as_slice().iter().any(|&p| !(0.0..=p_max).contains(&p)) {
                return Err(Error::ProtocolViolation(format!(
                    "round {} power outside [0, p_max]",
                    entry.round
                )));
            }
        }
        Ok(())
    }

    /// Total proposals emitted across all rounds and agents.
    pub fn proposals_emitted(&self) -> usize {
        self.rounds
            .iter()
            .flat_map(|e| &e.records)
            .map(|r| r.proposals.len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_labels_roundtrip() {
        for mode in RunMode::ALL {
            assert_eq!(RunMode::parse_label(mode.label()), Some(mode));
        }
        assert_eq!(RunMode::parse_label("nonsense"), None);
    }

    #[test]
    fn mode_serializes_as_snake_case() {
        assert_eq!(serde_json::to_string(&RunMode::GenaiAlone).unwrap(), "\"genai_alone\"");
        assert_eq!(serde_json::to_string(&BackendKind::Scripted).unwrap(), "\"scripted\"");
    }

    #[test]
    fn zero_rounds_is_rejected() {
        let config = RunConfig { rounds: 0, ..RunConfig::default() };
        assert!(config.validate().is_err());
    }

    #[test]
    fn dpc_mode_has_no_agent_mode() {
        assert_eq!(RunMode::Dpc.agent_mode(), None);
        assert_eq!(RunMode::GenaiAlone.agent_mode(), Some(AgentMode::Standalone));
        assert_eq!(RunMode::Genainet.agent_mode(), Some(AgentMode::Cooperative));
    }
}
