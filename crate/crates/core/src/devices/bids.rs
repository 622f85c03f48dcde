use crate::model::{CaseDefinition, DeviceKind};

/// Offer prices of one device, indexed `[scenario][period]` (£/kWh).
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeviceBid {
    pub e: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// Bids of every device, indexed `[hmg][device]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BidVector {
    pub hmgs: Vec<Vec<DeviceBid>>,
}

impl BidVector {
    /// Electrical bids at `fe * forecast` and thermal bids at `fh * 2 * forecast`.
    /// Electricity bought by boilers and heat pumps is priced at the forecast.
    pub fn uniform(case: &CaseDefinition, fe: f64, fh: f64) -> Self {
        Self::from_fn(case, |_, _, _, _| (fe, fh))
    }

    /// Builds bids from per-(hmg, device, t, w) fractions of the bid bounds.
    pub fn from_fn(case: &CaseDefinition, f: impl Fn(usize, usize, usize, usize) -> (f64, f64)) -> Self {
        let (nt, nw) = (case.periods(), case.num_scenarios());
        let mcp = &case.scenarios.mcp_forecast;
        let hmgs = case
            .hmgs
            .iter()
            .enumerate()
            .map(|(i, h)| {
                h.devices
                    .iter()
                    .enumerate()
                    .map(|(j, d)| {
                        let buyer = matches!(d.kind(), DeviceKind::EB | DeviceKind::EHP);
                        let mut e = vec![vec![0.0; nt]; nw];
                        let mut hb = vec![vec![0.0; nt]; nw];
                        for w in 0..nw {
                            for t in 0..nt {
                                let (fe, fh) = f(i, j, t, w);
                                let l = mcp.at(t, w);
                                e[w][t] = if buyer { l } else { fe * l };
                                hb[w][t] = fh * 2.0 * l;
                            }
                        }
                        DeviceBid { e, h: hb }
                    })
                    .collect()
            })
            .collect();
        BidVector { hmgs }
    }

    pub fn e(&self, i: usize, j: usize, t: usize, w: usize) -> f64 {
        self.hmgs[i][j].e[w][t]
    }

    pub fn h(&self, i: usize, j: usize, t: usize, w: usize) -> f64 {
        self.hmgs[i][j].h[w][t]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BidComponent {
    Electric,
    Thermal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BidViolation {
    pub hmg: usize,
    pub device: usize,
    pub t: usize,
    pub w: usize,
    pub component: BidComponent,
    pub value: f64,
    pub bound: f64,
}

/// Lists bids outside `[0, forecast]` (electrical) or `[0, 2 * forecast]` (thermal).
pub fn bid_bounds(case: &CaseDefinition, bids: &BidVector) -> Vec<BidViolation> {
    let mcp = &case.scenarios.mcp_forecast;
    let mut out = Vec::new();
    for (i, devs) in bids.hmgs.iter().enumerate() {
        for (j, b) in devs.iter().enumerate() {
            for (w, row) in b.e.iter().enumerate() {
                for (t, &v) in row.iter().enumerate() {
                    let bound = mcp.at(t, w);
                    if !(v >= 0.0 && v <= bound) {
                        out.push(BidViolation { hmg: i, device: j, t, w, component: BidComponent::Electric, value: v, bound });
                    }
                }
            }
            for (w, row) in b.h.iter().enumerate() {
                for (t, &v) in row.iter().enumerate() {
                    let bound = 2.0 * mcp.at(t, w);
                    if !(v >= 0.0 && v <= bound) {
                        out.push(BidViolation { hmg: i, device: j, t, w, component: BidComponent::Thermal, value: v, bound });
                    }
                }
            }
        }
    }
    out
}
