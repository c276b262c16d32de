//! Tolerant parsing of raw agent responses into actions and proposals.
//!
//! The nominal output format, "{action:power, message:proposal
//! explanation:thought}", is not valid JSON and real model outputs drift
//! from it anyway (quotes, brackets, prose around the braces). Parsing is
//! therefore regex-grade scanning: find an "action" key with a number,
//! find "To User <id>:" clauses, find an "explanation" tail. A response
//! with no usable action never fails hard; the agent simply holds its
//! previous power for the round.

use std::sync::LazyLock;

use regex::Regex;

use crate::agent::{ActionRecord, Proposal};

static ACTION_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)\baction\b["']?\s*[:=]\s*["']?\s*(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"#)
        .unwrap()
});

static PROPOSAL_KEY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bto\s+user\s*\[?\s*(\d+)\s*\]?\s*:").unwrap()
});

/// Ends a proposal body: a quote or brace, a line break, the trailing
/// explanation key, or sentence punctuation (a dot followed by a digit is
/// a decimal, not a boundary).
static BODY_BOUNDARY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)["'}\n]|,?\s*\bexplanation\b\s*[:=]|[.!?](\s|$)"#).unwrap()
});

static EXPLANATION_KEY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bexplanation\b\s*[:=]\s*").unwrap()
});

/// Extract action, proposals, and explanation from a raw response.
///
/// The first number following an "action" key becomes the power, clamped
/// to `[0, p_max]`. Without one, `parse_ok` is false and the power is
/// exactly `previous_power`. Proposals are stamped with the sender and
/// the current round; addressing is validated at routing time, not here.
pub fn parse_response(
    raw: &str,
    p_max: f64,
    previous_power: f64,
    from_user: usize,
    round: usize,
) -> ActionRecord {
    let action = ACTION_RE
        .captures(raw)
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().parse::<f64>().ok());
    let (power_w, parse_ok) = match action {
        Some(v) => (v.clamp(0.0, p_max), true),
        None => (previous_power, false),
    };

    let mut proposals = Vec::new();
    let keys: Vec<_> = PROPOSAL_KEY_RE.captures_iter(raw).collect();
    for (i, cap) in keys.iter().enumerate() {
        let to_user: usize = match cap[1].parse() {
            Ok(v) => v,
            Err(_) => continue,
        };
        let start = cap.get(0).unwrap().end();
        let end = keys
            .get(i + 1)
            .map(|next| next.get(0).unwrap().start())
            .unwrap_or(raw.len());
        let mut body = &raw[start..end];
        if let Some(boundary) = BODY_BOUNDARY_RE.find(body) {
            body = &body[..boundary.start()];
        }
        let body = body.trim().trim_end_matches([',', ';']).trim();
        if !body.is_empty() {
            proposals.push(Proposal {
                from_user,
                to_user,
                body: body.to_string(),
                round_sent: round,
            });
        }
    }

    let explanation = EXPLANATION_KEY_RE
        .find(raw)
        .map(|m| {
            let rest = &raw[m.end()..];
            let captured = match rest.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let inner = &rest[1..];
                    &inner[..inner.find(q).unwrap_or(inner.len())]
                }
                _ => &rest[..rest.find(['}', '\n']).unwrap_or(rest.len())],
            };
            captured.trim().to_string()
        })
        .unwrap_or_default();

    ActionRecord {
        power_w,
        proposals,
        explanation,
        raw_response: raw.to_string(),
        parse_ok,
    }
}
