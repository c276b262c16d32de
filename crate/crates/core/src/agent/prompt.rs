//! Prompt rendering from the fixed power-control templates.
//!
//! The template wording is reproduced exactly, including its grammar
//! quirks ("transmitter-receiver pair", "while help to minimize"), so
//! transcripts are comparable with the published experiments. Float
//! placeholders carry three decimals; counts and ids are bare integers.

use crate::agent::{AgentMode, AgentState};
use crate::radio::Scenario;

const STANDALONE_SYSTEM: &str = "Consider a wireless network with {user_num} transmitter-receiver pair sharing the same spectrum. Each user has allocated bandwidth of {bandwidth} kHz. Maximum power allowed is {Pmax}. The target rate of all Tx-Rx pairs: {rate} kbps.";

const STANDALONE_USER: &str = "You are {user_id}. Your current transmission power: {power} W. Your current transmission rate: {rate} kbps. You should adjust your transmit power to reach the targeted rate: {target} kbps while help to minimize the total power of the network. Think step by step, consider interference with others and your past history. Once you made a final decision, output in the following format: {action:power, explanation:thought}.";

const COOPERATIVE_SYSTEM: &str = "Consider a wireless network with {user_num} paired Tx and Rx users sharing the same spectrum. Each user has allocated bandwidth of {bandwidth} kHz. Maximum power allowed is {Pmax}. The target rate of all users: {rate} kbps.";

const COOPERATIVE_USER: &str = "You are {user_id}. Your current transmission power: {power} W. Your current transmission rate: {rate} kbps. You should adjust your transmit power to reach the targeted rate: {target} kbps while help to minimize the total power of the network. Think step by step, consider interference and cooperation proposals with others. Be careful of not increasing drastically your power since it is damaging to increase the interference level for all Tx-Rx pairs. If you received proposals, your explanation should include the corresponding reasoning for accepting or rejecting them. You can propose cooperation plan to other users. If cooperation is needed, send a concise proposal to another user using this format: \"To User [id]: [content of proposal]\". Once you made a final decision, output in the following format: {action:power, message:proposal explanation:thought}.";

/// Render the system, user, and memory texts for one agent's turn.
///
/// The system prompt's `{rate}` expands to the comma-separated target
/// list of all pairs (the target of every user is shared up front); the
/// user prompt's `{rate}` is this agent's current rate. In cooperative
/// mode, proposals received last round are appended verbatim to the user
/// text. `round` is 1-based and only sanity-checks the inbox staleness
/// invariant.
pub fn render_prompt(
    scenario: &Scenario<f64>,
    agent: &AgentState,
    mode: AgentMode,
    current_rate_kbps: f64,
    round: usize,
) -> (String, String, String) {
    debug_assert!(round >= 1);
    debug_assert!(agent.inbox.iter().all(|p| p.round_sent + 1 == round));

    let all_targets = scenario
        .targets_kbps
        .iter()
        .map(|t| format!("{t:.3}"))
        .collect::<Vec<_>>()
        .join(", ");

    let (system_template, user_template) = match mode {
        AgentMode::Standalone => (STANDALONE_SYSTEM, STANDALONE_USER),
        AgentMode::Cooperative => (COOPERATIVE_SYSTEM, COOPERATIVE_USER),
    };

    let system_text = system_template
        .replace("{user_num}", &scenario.n_pairs.to_string())
        .replace("{bandwidth}", &format!("{:.3}", scenario.bandwidth_khz))
        .replace("{Pmax}", &format!("{:.3}", scenario.p_max))
        .replace("{rate}", &all_targets);

    let target = scenario.targets_kbps[agent.user_id - 1];
    let mut user_text = user_template
        .replace("{user_id}", &agent.user_id.to_string())
        .replace("{power}", &format!("{:.3}", agent.last_power_w))
        .replace("{rate}", &format!("{current_rate_kbps:.3}"))
        .replace("{target}", &format!("{target:.3}"));

    if mode == AgentMode::Cooperative && !agent.inbox.is_empty() {
        user_text.push_str("\n\nProposals received last round:");
        for p in &agent.inbox {
            user_text.push_str(&format!("\nFrom User {}: {}", p.from_user, p.render()));
        }
    }

    (system_text, user_text, agent.memory_text())
}
