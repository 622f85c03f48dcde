//! Device, demand-response and exchange constraint blocks of the clearing LP.
//!
//! Every block is built for one H-MG and one scenario over the whole horizon.
//! Variables are named `{hmg}.{device}{j}.{role}.{t}.{w}` with 1-based `t`
//! and `w`; rows use the multiplier tag in place of the role.

mod bids;
mod blocks;

pub use bids::{bid_bounds, BidComponent, BidVector, BidViolation, DeviceBid};
pub use blocks::{
    build_conversion_block, build_dr_block, build_exchange_block, build_generation_block,
    build_storage_block, dev_label, DeviceError,
};

use crate::lp::RowKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Carrier {
    Electric,
    Thermal,
}

/// Someone whose profit a variable contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Hmg(usize),
    Retailer(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDef {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    /// Clearing objective coefficient.
    pub cost: f64,
    /// Profit per unit, by player.
    pub profit: Vec<(Player, f64)>,
    /// Contributions to `(carrier, hmg)` balance rows at this variable's period,
    /// written as demand minus supply.
    pub balance: Vec<(Carrier, usize, f64)>,
    /// 0-based period, or `None` for variables outside the horizon.
    pub t: Option<usize>,
    pub lower_tag: Option<&'static str>,
    pub upper_tag: Option<&'static str>,
}

impl VarDef {
    fn new(name: String, lo: f64, hi: f64, t: Option<usize>) -> Self {
        VarDef {
            name,
            lo,
            hi,
            cost: 0.0,
            profit: Vec::new(),
            balance: Vec::new(),
            t,
            lower_tag: None,
            upper_tag: None,
        }
    }

    fn tags(mut self, lower: &'static str, upper: &'static str) -> Self {
        self.lower_tag = Some(lower);
        self.upper_tag = Some(upper);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowDef {
    pub name: String,
    pub tag: &'static str,
    /// Terms over block-local variable indices.
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintBlock {
    pub vars: Vec<VarDef>,
    pub rows: Vec<RowDef>,
}

impl ConstraintBlock {
    fn var(&mut self, v: VarDef) -> usize {
        self.vars.push(v);
        self.vars.len() - 1
    }

    fn row(&mut self, name: String, tag: &'static str, terms: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(RowDef { name, tag, terms, kind, rhs });
    }

    pub fn find_var(&self, name: &str) -> Option<&VarDef> {
        self.vars.iter().find(|v| v.name == name)
    }

    /// Every multiplier tag the block carries: row tags and bound tags.
    pub fn tag_set(&self) -> std::collections::BTreeSet<&'static str> {
        let mut s: std::collections::BTreeSet<&'static str> = self.rows.iter().map(|r| r.tag).collect();
        for v in &self.vars {
            s.extend(v.lower_tag);
            s.extend(v.upper_tag);
        }
        s
    }
}

pub fn var_name(hmg: &str, device: &str, role: &str, t: usize, w: usize) -> String {
    format!("{hmg}.{device}.{role}.{}.{}", t, w + 1)
}

#[cfg(test)]
pub(crate) mod tests;
