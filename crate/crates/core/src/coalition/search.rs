use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::CoalitionError;
use crate::clearing::{clear_market_with, ClearOptions, MarketOutcome};
use crate::devices::{BidVector, Player};
use crate::lp::Basis;
use crate::model::{BidClasses, CaseDefinition, CoalitionStructure, DeviceKind, ValidatedCase};

/// Bid levels of one H-MG or group: electrical levels per period class,
/// then thermal levels per period class.
pub type Levels = Vec<u8>;

const MAX_POINTS: f64 = 1e6;
const TIE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub levels: usize,
    /// Period class of each period.
    pub class_of: Vec<usize>,
    pub num_classes: usize,
}

impl GridSpec {
    pub fn from_case(case: &CaseDefinition, levels: usize) -> Self {
        let nt = case.periods();
        let f = &case.scenarios.mcp_forecast;
        let (class_of, num_classes) = match case.options.bid_classes {
            BidClasses::Flat => (vec![0; nt], 1),
            BidClasses::PerPeriod => ((0..nt).collect(), nt),
            BidClasses::PeakOffpeak => {
                let mean_t: Vec<f64> = (0..nt).map(|t| (0..f.scenarios()).map(|w| f.at(t, w)).sum::<f64>()).collect();
                let avg = mean_t.iter().sum::<f64>() / nt as f64;
                (mean_t.iter().map(|&m| usize::from(m >= avg)).collect(), 2)
            }
        };
        GridSpec { levels: levels.max(1), class_of, num_classes }
    }

    pub fn fraction(&self, level: u8) -> f64 {
        if self.levels == 1 {
            0.5
        } else {
            f64::from(level) / (self.levels - 1) as f64
        }
    }

    pub fn mid(&self) -> u8 {
        ((self.levels - 1) / 2) as u8
    }
}

/// Which bid carriers the devices of `members` have.
fn carriers(case: &CaseDefinition, members: &[usize]) -> (bool, bool) {
    let mut c = (false, false);
    for &i in members {
        for d in &case.hmgs[i].devices {
            if matches!(d.kind(), DeviceKind::EB | DeviceKind::EHP) {
                c.1 = true;
                continue;
            }
            let (e, h) = d.kind().bid_components();
            c.0 |= e;
            c.1 |= h;
        }
    }
    c
}

#[derive(Clone, Debug)]
struct Payoff {
    hmg: Vec<f64>,
    retailer: Vec<f64>,
}

/// Memoized expected payoffs of bid profiles. The clearing LP does not depend
/// on the coalition structure, so one evaluator serves a whole sweep.
pub struct Evaluator<'a> {
    pub case: &'a ValidatedCase,
    pub grid: GridSpec,
    opts: ClearOptions,
    bases: Vec<Option<Basis>>,
    cache: Mutex<HashMap<Vec<Levels>, Arc<Payoff>>>,
    clears: AtomicUsize,
    audit: Mutex<KktAudit>,
}

/// KKT results over every clear an evaluator performed with verification on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KktAudit {
    pub checked: usize,
    pub failed: usize,
    pub max_stationarity: f64,
    pub max_complementarity: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(case: &'a ValidatedCase, levels: usize) -> Result<Self, CoalitionError> {
        let grid = GridSpec::from_case(case, levels);
        let mut opts = ClearOptions::from_case(case);
        opts.verify = false;
        let mut ev = Evaluator {
            case,
            grid,
            opts,
            bases: Vec::new(),
            cache: Mutex::new(HashMap::new()),
            clears: AtomicUsize::new(0),
            audit: Mutex::new(KktAudit::default()),
        };
        // Every clear starts from the basis of the mid-grid profile so that
        // results do not depend on evaluation order.
        let mid = ev.hmg_levels(&vec![vec![ev.grid.mid(); 2 * ev.grid.num_classes]; case.hmgs.len()]);
        let s = CoalitionStructure::new(case, (0..case.hmgs.len()).collect(), vec![]);
        let bids = ev.bids(&mid);
        for w in 0..case.num_scenarios() {
            let o = clear_market_with(case, &s, &bids, w, None, &ev.opts)?;
            ev.bases.push(o.solution.basis);
        }
        Ok(ev)
    }

    /// As [`Evaluator::new`], but every search clear is also KKT-verified;
    /// see [`Evaluator::audit`].
    pub fn verifying(case: &'a ValidatedCase, levels: usize) -> Result<Self, CoalitionError> {
        let mut ev = Self::new(case, levels)?;
        ev.opts.verify = true;
        Ok(ev)
    }

    pub fn audit(&self) -> KktAudit {
        self.audit.lock().expect("audit lock").clone()
    }

    /// Number of LP solves performed so far.
    pub fn clears(&self) -> usize {
        self.clears.load(Ordering::Relaxed)
    }

    /// Zeroes the levels of carriers an H-MG has no bids for.
    fn hmg_levels(&self, per_hmg: &[Levels]) -> Vec<Levels> {
        let nc = self.grid.num_classes;
        per_hmg
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let (e, h) = carriers(self.case, &[i]);
                let mut l = l.clone();
                if !e {
                    l[..nc].iter_mut().for_each(|v| *v = 0);
                }
                if !h {
                    l[nc..].iter_mut().for_each(|v| *v = 0);
                }
                l
            })
            .collect()
    }

    fn expand(&self, structure: &CoalitionStructure, point: &[Levels]) -> Vec<Levels> {
        let mut per = vec![Vec::new(); self.case.hmgs.len()];
        for (g, members) in structure.groups().iter().enumerate() {
            for &i in *members {
                per[i] = point[g].clone();
            }
        }
        self.hmg_levels(&per)
    }

    pub fn bids(&self, per_hmg: &[Levels]) -> BidVector {
        let g = &self.grid;
        let nc = g.num_classes;
        BidVector::from_fn(self.case, |i, _, t, _| {
            let c = g.class_of[t];
            (g.fraction(per_hmg[i][c]), g.fraction(per_hmg[i][nc + c]))
        })
    }

    pub fn bids_for(&self, structure: &CoalitionStructure, point: &[Levels]) -> BidVector {
        self.bids(&self.expand(structure, point))
    }

    fn payoff(&self, structure: &CoalitionStructure, point: &[Levels]) -> Result<Arc<Payoff>, CoalitionError> {
        let key = self.expand(structure, point);
        if let Some(p) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let bids = self.bids(&key);
        let case = self.case;
        let mut hmg = vec![0.0; case.hmgs.len()];
        let mut retailer = vec![0.0; case.retailers.len()];
        for w in 0..case.num_scenarios() {
            let o = clear_market_with(case, structure, &bids, w, self.bases[w].as_ref(), &self.opts)?;
            self.clears.fetch_add(1, Ordering::Relaxed);
            if let Some(k) = &o.kkt {
                let mut a = self.audit.lock().expect("audit lock");
                a.checked += 1;
                a.failed += usize::from(!k.pass);
                a.max_stationarity = a.max_stationarity.max(k.max_stationarity());
                a.max_complementarity = a.max_complementarity.max(k.max_complementarity());
            }
            let rho = case.weight(w);
            for (p, v) in &o.profits {
                match *p {
                    Player::Hmg(i) => hmg[i] += rho * v,
                    Player::Retailer(k) => retailer[k] += rho * v,
                }
            }
        }
        let p = Arc::new(Payoff { hmg, retailer });
        self.cache.lock().expect("cache lock").insert(key, p.clone());
        Ok(p)
    }

    /// Verified per-scenario outcomes of a profile.
    pub fn outcomes(&self, structure: &CoalitionStructure, point: &[Levels]) -> Result<Vec<MarketOutcome>, CoalitionError> {
        let bids = self.bids_for(structure, point);
        let mut opts = self.opts.clone();
        opts.verify = true;
        (0..self.case.num_scenarios())
            .map(|w| clear_market_with(self.case, structure, &bids, w, self.bases[w].as_ref(), &opts).map_err(Into::into))
            .collect()
    }

    fn group_profit(&self, structure: &CoalitionStructure, point: &[Levels], g: usize) -> Result<f64, CoalitionError> {
        let p = self.payoff(structure, point)?;
        Ok(structure.groups()[g].iter().map(|&i| p.hmg[i]).sum())
    }

    /// Grid of group `g`, lowest levels first.
    fn group_grid(&self, structure: &CoalitionStructure, g: usize) -> Result<Vec<Levels>, CoalitionError> {
        let nc = self.grid.num_classes;
        let (e, h) = carriers(self.case, structure.groups()[g]);
        let mut slots: Vec<usize> = Vec::new();
        if e {
            slots.extend(0..nc);
        }
        if h {
            slots.extend(nc..2 * nc);
        }
        let k = self.grid.levels;
        let points = (k as f64).powi(slots.len() as i32);
        if points > MAX_POINTS {
            return Err(CoalitionError::GridTooLarge { group: structure.group_label(self.case, g), points });
        }
        let mut out = Vec::with_capacity(points as usize);
        for mut idx in 0..points as usize {
            let mut l = vec![0u8; 2 * nc];
            for &s in slots.iter().rev() {
                l[s] = (idx % k) as u8;
                idx /= k;
            }
            out.push(l);
        }
        Ok(out)
    }

    fn mid_point(&self, structure: &CoalitionStructure) -> Vec<Levels> {
        let nc = self.grid.num_classes;
        structure
            .groups()
            .iter()
            .map(|m| {
                let (e, h) = carriers(self.case, m);
                let mut l = vec![0u8; 2 * nc];
                for s in 0..nc {
                    if e {
                        l[s] = self.grid.mid();
                    }
                    if h {
                        l[nc + s] = self.grid.mid();
                    }
                }
                l
            })
            .collect()
    }

    /// Best levels of group `g` against `point`, with the profit they earn.
    fn best_response(&self, structure: &CoalitionStructure, point: &[Levels], g: usize) -> Result<(Levels, f64), CoalitionError> {
        let grid = self.group_grid(structure, g)?;
        let profits: Vec<Result<f64, CoalitionError>> = grid
            .par_iter()
            .map(|l| {
                let mut p = point.to_vec();
                p[g] = l.clone();
                self.group_profit(structure, &p, g)
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (idx, p) in profits.into_iter().enumerate() {
            let p = p?;
            if best.map_or(true, |(_, b)| p > b + TIE) {
                best = Some((idx, p));
            }
        }
        let (idx, p) = best.expect("grid has at least one point");
        Ok((grid[idx].clone(), p))
    }
}

/// Terminal point of the equilibrium search for one structure.
#[derive(Clone, Debug)]
pub struct EquilibriumRecord {
    pub structure: CoalitionStructure,
    /// Levels per group.
    pub point: Vec<Levels>,
    pub bids: BidVector,
    pub group_profit: Vec<f64>,
    /// Expected profit per H-MG.
    pub hmg_profit: Vec<f64>,
    pub retailer_profit: Vec<f64>,
    /// Largest gain any group can get by changing its own levels.
    pub deviation_margin: f64,
    pub equilibrium: bool,
    pub converged: bool,
    pub cycle: bool,
    pub rounds: usize,
    /// Other visited equilibrium points with the same total profit.
    pub alternatives: Vec<Vec<Levels>>,
    pub outcomes: Vec<MarketOutcome>,
}

/// Best levels for group `group` with every other group held at `point`.
pub fn best_response_bids(
    ev: &Evaluator,
    structure: &CoalitionStructure,
    group: usize,
    point: &[Levels],
) -> Result<(Levels, BidVector), CoalitionError> {
    let (l, _) = ev.best_response(structure, point, group)?;
    let mut p = point.to_vec();
    p[group] = l.clone();
    Ok((l, ev.bids_for(structure, &p)))
}

/// Iterated best response from mid-grid bids, upper group first in every
/// round, followed by a full deviation scan at the terminal point.
pub fn solve_bilevel(ev: &Evaluator, structure: &CoalitionStructure, max_rounds: usize) -> Result<EquilibriumRecord, CoalitionError> {
    let eps = ev.case.tolerances.nash;
    let ng = structure.groups().len();
    let mut point = ev.mid_point(structure);
    let mut visited: HashMap<Vec<Levels>, usize> = HashMap::new();
    let mut order: Vec<Vec<Levels>> = vec![point.clone()];
    visited.insert(point.clone(), 0);
    let (mut converged, mut cycle, mut rounds) = (false, false, 0);
    while rounds < max_rounds {
        rounds += 1;
        let mut changed = false;
        for g in 0..ng {
            let cur = ev.group_profit(structure, &point, g)?;
            let (l, p) = ev.best_response(structure, &point, g)?;
            if p > cur + eps {
                point[g] = l;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
        if visited.contains_key(&point) {
            cycle = true;
            break;
        }
        visited.insert(point.clone(), order.len());
        order.push(point.clone());
    }
    if cycle {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, p) in order.iter().enumerate() {
            let total: f64 = (0..ng).map(|g| ev.group_profit(structure, p, g)).sum::<Result<f64, _>>()?;
            if total > best.0 + TIE {
                best = (total, k);
            }
        }
        point = order[best.1].clone();
    }
    let (margin, group_profit) = deviation_scan(ev, structure, &point)?;
    let total: f64 = group_profit.iter().sum();
    let mut alternatives = Vec::new();
    for p in &order {
        if *p == point {
            continue;
        }
        let t: f64 = (0..ng).map(|g| ev.group_profit(structure, p, g)).sum::<Result<f64, _>>()?;
        if (t - total).abs() <= eps && deviation_scan(ev, structure, p)?.0 <= eps {
            alternatives.push(p.clone());
        }
    }
    let payoff = ev.payoff(structure, &point)?;
    Ok(EquilibriumRecord {
        structure: structure.clone(),
        bids: ev.bids_for(structure, &point),
        outcomes: ev.outcomes(structure, &point)?,
        point,
        group_profit,
        hmg_profit: payoff.hmg.clone(),
        retailer_profit: payoff.retailer.clone(),
        deviation_margin: margin,
        equilibrium: margin <= eps,
        converged,
        cycle,
        rounds,
        alternatives,
    })
}

/// Largest unilateral gain over all groups, with the current group profits.
fn deviation_scan(ev: &Evaluator, structure: &CoalitionStructure, point: &[Levels]) -> Result<(f64, Vec<f64>), CoalitionError> {
    let mut margin: f64 = 0.0;
    let mut profits = Vec::new();
    for g in 0..structure.groups().len() {
        let cur = ev.group_profit(structure, point, g)?;
        let (_, p) = ev.best_response(structure, point, g)?;
        margin = margin.max(p - cur);
        profits.push(cur);
    }
    Ok((margin, profits))
}
