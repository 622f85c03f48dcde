use super::{ClearingError, MarketOutcome};
use crate::devices::Player;
use crate::model::CaseDefinition;

/// Profit of the H-MG or retailer with id `player` in one cleared scenario (£).
pub fn compute_player_profit(case: &CaseDefinition, outcome: &MarketOutcome, player: &str) -> Result<f64, ClearingError> {
    let p = if let Some(i) = case.hmg_index(player) {
        Player::Hmg(i)
    } else if let Some(k) = case.retailers.iter().position(|r| r.id == player) {
        Player::Retailer(k)
    } else {
        return Err(ClearingError::UnknownPlayer(player.to_string()));
    };
    Ok(outcome.profits.get(&p).copied().unwrap_or(0.0))
}

/// Scenario-weighted profit over a full set of per-scenario outcomes.
pub fn expected_profit(case: &CaseDefinition, outcomes: &[MarketOutcome], player: Player) -> f64 {
    outcomes
        .iter()
        .map(|o| case.scenarios.weights[o.w] * o.profits.get(&player).copied().unwrap_or(0.0))
        .sum()
}

/// Terms of one H-MG's profit in one scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfitBreakdown {
    /// Device output valued at its own bids; electricity bought by boilers
    /// and heat pumps enters negatively.
    pub device_revenue: f64,
    pub fuel_cost: f64,
    pub dsm_revenue: f64,
    /// Export revenue minus import cost.
    pub retail: f64,
    /// Net receipts on peer links.
    pub peer: f64,
}

impl ProfitBreakdown {
    pub fn total(&self) -> f64 {
        self.device_revenue - self.fuel_cost + self.dsm_revenue + self.retail + self.peer
    }
}

pub fn profit_breakdown(outcome: &MarketOutcome, hmg: usize) -> ProfitBreakdown {
    let me = Player::Hmg(hmg);
    let mut b = ProfitBreakdown::default();
    for (v, &x) in outcome.problem.vars.iter().zip(&outcome.solution.x) {
        let Some(&(_, a)) = v.profit.iter().find(|(p, _)| *p == me) else {
            continue;
        };
        let mut parts = v.name.split('.');
        let (device, role) = (parts.nth(1).unwrap_or(""), parts.next().unwrap_or(""));
        if device == "DR" {
            b.dsm_revenue += a * x;
        } else if device.starts_with("link_") || role.starts_with("flow_") {
            b.peer += a * x;
        } else if role == "import" || role == "export" {
            b.retail += a * x;
        } else {
            let asbid = -v.cost * x;
            b.device_revenue += asbid;
            b.fuel_cost += asbid - a * x;
        }
    }
    b
}
