//! Deterministic scripted decision policy.
//!
//! A stand-in for a remote model so the harness is testable offline: a
//! damped SINR-ratio power update plus simple cooperate/accept/reject
//! rules keyed to the agent's relative rate deficit. Responses are
//! rendered in the exact template output format, so every scripted run
//! exercises the same parsing path a remote model would.

use rand::Rng;

use crate::agent::{AgentMode, AgentState};
use crate::radio::Scenario;
use crate::rng::stream_rng;

/// Damping exponent of the multiplicative power update.
pub const ALPHA: f64 = 0.5;
/// Relative deficit above which a cooperative agent asks someone to back off.
pub const PROPOSE_DEFICIT: f64 = 0.25;
/// Relative deficit below which a cooperative agent accepts a received
/// proposal by holding its power for the round.
pub const ACCEPT_DEFICIT: f64 = 0.10;

const PROPOSAL_BODY: &str = "hold or reduce your power next round";

/// Decide one round for one agent; returns raw response text.
///
/// Power rule: `p' = clamp(p * (gamma(target)/gamma(rate))^ALPHA)` with
/// `gamma(x) = 2^(x/B) - 1`, guarded by plain doubling when no rate is
/// measurable. Cooperative extras: accept (hold) when a proposal arrived
/// and own deficit is small, reject otherwise with the reason in the
/// explanation, and propose to a seeded-uniform other agent when own
/// deficit is large. The same inputs and seed always produce the same
/// text.
pub fn scripted_decide(
    agent: &AgentState,
    current_rate_kbps: f64,
    target_kbps: f64,
    scenario: &Scenario<f64>,
    mode: AgentMode,
    seed: u64,
) -> String {
    let p = agent.last_power_w;
    let p_max = scenario.p_max;
    let deficit = if target_kbps > 0.0 {
        (target_kbps - current_rate_kbps) / target_kbps
    } else {
        0.0
    };
    let cooperative = mode == AgentMode::Cooperative;

    if cooperative && !agent.inbox.is_empty() && deficit < ACCEPT_DEFICIT {
        let from = agent.inbox[0].from_user;
        return format!(
            "{{action:{p:.3}, explanation:accepting proposal from user {from}: own deficit {:.1}% is below the hold threshold, keeping power at {p:.3}}}",
            deficit * 100.0
        );
    }

    let (p_new, thought) = if current_rate_kbps <= 0.0 {
        (
            (2.0 * p).min(p_max),
            "no measurable rate, doubling power to probe the channel".to_string(),
        )
    } else {
        let gamma_target = 2f64.powf(target_kbps / scenario.bandwidth_khz) - 1.0;
        let gamma_now = 2f64.powf(current_rate_kbps / scenario.bandwidth_khz) - 1.0;
        let p_new = (p * (gamma_target / gamma_now).powf(ALPHA)).clamp(0.0, p_max);
        (
            p_new,
            format!(
                "rate {current_rate_kbps:.3} vs target {target_kbps:.3}, scaling power from {p:.3} to {p_new:.3}"
            ),
        )
    };

    let mut parts = Vec::new();
    if cooperative && !agent.inbox.is_empty() {
        parts.push(format!(
            "rejecting proposal from user {}: own deficit {:.1}% requires action",
            agent.inbox[0].from_user,
            deficit * 100.0
        ));
    }
    parts.push(thought);

    let mut propose_to = None;
    if cooperative && deficit > PROPOSE_DEFICIT && scenario.n_pairs > 1 {
        let candidates: Vec<usize> = (1..=scenario.n_pairs)
            .filter(|&k| k != agent.user_id)
            .collect();
        let mut rng = stream_rng(seed, "propose-target", &[]);
        let k = candidates[rng.random_range(0..candidates.len())];
        propose_to = Some(k);
        parts.push(format!("asking user {k} to back off"));
    }

    let explanation = parts.join("; ");
    match propose_to {
        Some(k) => format!(
            "{{action:{p_new:.3}, message:To User {k}: {PROPOSAL_BODY} explanation:{explanation}}}"
        ),
        None => format!("{{action:{p_new:.3}, explanation:{explanation}}}"),
    }
}
