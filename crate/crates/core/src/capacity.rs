//! Commitment capacities of the elastic channel families and the tables
//! behind the capacity-vs-crossover curves and equal-capacity contours.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{binary_entropy, h2, kappa, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Bsc,
    Rec,
    Ec,
    Unc,
    Gec,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Bsc => "bsc",
            ChannelKind::Rec => "rec",
            ChannelKind::Ec => "ec",
            ChannelKind::Unc => "unc",
            ChannelKind::Gec => "gec",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bsc" => Ok(ChannelKind::Bsc),
            "rec" => Ok(ChannelKind::Rec),
            "ec" => Ok(ChannelKind::Ec),
            "unc" => Ok(ChannelKind::Unc),
            "gec" => Ok(ChannelKind::Gec),
            other => Err(Error::domain(format!("unknown channel family {other:?}"))),
        }
    }
}

/// A channel family with validated parameters.
///
/// REC, EC and UNC carry one lower crossover `gamma`; GEC carries separate
/// lower ends for each party. A plain BSC only has `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct ChannelFamily {
    kind: ChannelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Probability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_a: Option<Probability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_b: Option<Probability>,
    delta: Probability,
}

#[derive(Deserialize)]
struct RawFamily {
    kind: ChannelKind,
    gamma: Option<f64>,
    gamma_a: Option<f64>,
    gamma_b: Option<f64>,
    delta: f64,
}

impl TryFrom<RawFamily> for ChannelFamily {
    type Error = Error;
    fn try_from(r: RawFamily) -> Result<Self> {
        ChannelFamily::new(r.kind, r.gamma, r.gamma_a, r.gamma_b, r.delta)
    }
}

fn check_below_half(delta: f64) -> Result<Probability> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("need 0 < delta < 1/2, got {delta}")));
    }
    Probability::new(delta)
}

fn check_ordered(gamma: f64, delta: f64) -> Result<(Probability, Probability)> {
    if !(gamma > 0.0 && gamma < delta && delta < 0.5) {
        return Err(Error::domain(format!(
            "need 0 < gamma < delta < 1/2, got gamma={gamma}, delta={delta}"
        )));
    }
    Ok((Probability::new(gamma)?, Probability::new(delta)?))
}

impl ChannelFamily {
    /// Builds a family from loosely specified parameters, as read from a
    /// config block or command line.
    pub fn new(
        kind: ChannelKind,
        gamma: Option<f64>,
        gamma_a: Option<f64>,
        gamma_b: Option<f64>,
        delta: f64,
    ) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::domain(format!("{kind} channel needs {name}")))
        };
        match kind {
            ChannelKind::Bsc => Self::bsc(delta),
            ChannelKind::Rec => Self::rec(need(gamma, "gamma")?, delta),
            ChannelKind::Ec => Self::ec(need(gamma, "gamma")?, delta),
            ChannelKind::Unc => Self::unc(need(gamma, "gamma")?, delta),
            ChannelKind::Gec => Self::gec(need(gamma_a, "gamma_a")?, need(gamma_b, "gamma_b")?, delta),
        }
    }

    pub fn bsc(delta: f64) -> Result<Self> {
        Ok(Self {
            kind: ChannelKind::Bsc,
            gamma: None,
            gamma_a: None,
            gamma_b: None,
            delta: check_below_half(delta)?,
        })
    }

    fn single(kind: ChannelKind, gamma: f64, delta: f64) -> Result<Self> {
        let (gamma, delta) = check_ordered(gamma, delta)?;
        Ok(Self {
            kind,
            gamma: Some(gamma),
            gamma_a: None,
            gamma_b: None,
            delta,
        })
    }

    pub fn rec(gamma: f64, delta: f64) -> Result<Self> {
        Self::single(ChannelKind::Rec, gamma, delta)
    }

    pub fn ec(gamma: f64, delta: f64) -> Result<Self> {
        Self::single(ChannelKind::Ec, gamma, delta)
    }

    pub fn unc(gamma: f64, delta: f64) -> Result<Self> {
        Self::single(ChannelKind::Unc, gamma, delta)
    }

    pub fn gec(gamma_a: f64, gamma_b: f64, delta: f64) -> Result<Self> {
        let (gamma_a, delta) = check_ordered(gamma_a, delta)?;
        let (gamma_b, _) = check_ordered(gamma_b, delta.value())?;
        Ok(Self {
            kind: ChannelKind::Gec,
            gamma: None,
            gamma_a: Some(gamma_a),
            gamma_b: Some(gamma_b),
            delta,
        })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn delta(&self) -> Probability {
        self.delta
    }

    /// Lower crossover of a one-parameter elastic family.
    pub fn gamma(&self) -> Option<Probability> {
        self.gamma
    }

    /// Lowest crossover Alice may set, if she has elasticity.
    pub fn alice_floor(&self) -> Option<Probability> {
        match self.kind {
            ChannelKind::Rec | ChannelKind::Unc => self.gamma,
            ChannelKind::Gec => self.gamma_a,
            ChannelKind::Bsc | ChannelKind::Ec => None,
        }
    }

    /// Lowest crossover Bob may set, if he has elasticity.
    pub fn bob_floor(&self) -> Option<Probability> {
        match self.kind {
            ChannelKind::Ec | ChannelKind::Unc => self.gamma,
            ChannelKind::Gec => self.gamma_b,
            ChannelKind::Bsc | ChannelKind::Rec => None,
        }
    }
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ChannelKind::Bsc => write!(f, "BSC[{}]", self.delta),
            ChannelKind::Gec => write!(
                f,
                "GEC[{},{},{}]",
                self.gamma_a.unwrap_or(Probability::ZERO),
                self.gamma_b.unwrap_or(Probability::ZERO),
                self.delta
            ),
            kind => write!(
                f,
                "{}[{},{}]",
                kind.name().to_ascii_uppercase(),
                self.gamma.unwrap_or(Probability::ZERO),
                self.delta
            ),
        }
    }
}

/// A commitment capacity in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    pub family: ChannelFamily,
}

/// `H(delta) - H((delta - gamma) / (1 - 2 gamma))`
pub fn capacity_rec(gamma: Probability, delta: Probability) -> Result<CapacityResult> {
    let family = ChannelFamily::rec(gamma.value(), delta.value())?;
    let k = kappa(gamma, delta)?;
    Ok(CapacityResult {
        value: binary_entropy(delta) - binary_entropy(k),
        family,
    })
}

/// `H(gamma)`, independent of `delta`.
pub fn capacity_ec(gamma: Probability, delta: Probability) -> Result<CapacityResult> {
    let family = ChannelFamily::ec(gamma.value(), delta.value())?;
    Ok(CapacityResult {
        value: binary_entropy(gamma),
        family,
    })
}

/// `H(gamma) - H(kappa)`, or exactly zero once `delta >= 2 gamma (1 - gamma)`
/// where commitment over the UNC is impossible.
pub fn capacity_unc(gamma: Probability, delta: Probability) -> Result<CapacityResult> {
    let family = ChannelFamily::unc(gamma.value(), delta.value())?;
    let value = if unc_impossible(gamma, delta) {
        0.0
    } else {
        (binary_entropy(gamma) - binary_entropy(kappa(gamma, delta)?)).max(0.0)
    };
    Ok(CapacityResult { value, family })
}

/// `delta >= 2 gamma (1 - gamma)`
pub fn unc_impossible(gamma: Probability, delta: Probability) -> bool {
    let g = gamma.value();
    delta.value() >= 2.0 * g * (1.0 - g)
}

/// `C_EC - C_REC = H(gamma) - H(delta) + H(kappa)`
pub fn capacity_gap(gamma: Probability, delta: Probability) -> Result<f64> {
    Ok(capacity_ec(gamma, delta)?.value - capacity_rec(gamma, delta)?.value)
}

/// The `gamma` maximizing the capacity gap for a given `delta`:
/// `(1 - sqrt(1 - 2 delta)) / 2`.
pub fn gamma_star(delta: Probability) -> Result<Probability> {
    let d = check_below_half(delta.value())?.value();
    // Same value as (1 - r) / 2 without the cancellation for small delta.
    let r = (1.0 - 2.0 * d).sqrt();
    Probability::new(d / (1.0 + r))
}

/// One row of the capacity-vs-gamma table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub delta: f64,
    pub gamma: f64,
    pub bsc: f64,
    pub ec: f64,
    pub rec: f64,
    pub unc: f64,
}

/// Interior grid `delta * i / (points + 1)`, `i = 1..=points`.
pub fn gamma_grid(delta: f64, points: usize) -> Vec<f64> {
    (1..=points)
        .map(|i| delta * i as f64 / (points + 1) as f64)
        .collect()
}

/// For each `delta`, all four capacities over an interior `gamma` grid.
pub fn curve_series(deltas: &[Probability], gamma_points: usize) -> Result<Vec<CurveRow>> {
    if gamma_points < 2 {
        return Err(Error::domain("need at least two gamma points"));
    }
    let mut rows = Vec::with_capacity(deltas.len() * gamma_points);
    for &delta in deltas {
        check_below_half(delta.value())?;
        let bsc = binary_entropy(delta);
        for gamma in gamma_grid(delta.value(), gamma_points) {
            let g = Probability::new(gamma)?;
            rows.push(CurveRow {
                delta: delta.value(),
                gamma,
                bsc,
                ec: capacity_ec(g, delta)?.value,
                rec: capacity_rec(g, delta)?.value,
                unc: capacity_unc(g, delta)?.value,
            });
        }
    }
    Ok(rows)
}

/// A pair of lower crossovers giving the EC and REC the same capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub delta: f64,
    pub level: f64,
    pub gamma_ec: f64,
    pub gamma_rec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmittedLevel {
    pub delta: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContourTable {
    pub points: Vec<ContourPoint>,
    pub omitted: Vec<OmittedLevel>,
}

/// Bisection tolerance on gamma for contour inversion.
pub const CONTOUR_TOLERANCE: f64 = 1e-10;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for increasing `f`, down to
/// float resolution (and at least [`CONTOUR_TOLERANCE`]).
fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(hi - lo <= CONTOUR_TOLERANCE);
    0.5 * (lo + hi)
}

/// The `gamma` in `[0, 1/2]` with `H(gamma) = level`.
pub fn ec_gamma_for_level(level: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::domain(format!("capacity level {level} outside [0, 1]")));
    }
    Ok(bisect(0.0, 0.5, level, h2))
}

/// The `gamma` in `[0, delta]` with `C_REC(gamma, delta) = level`.
pub fn rec_gamma_for_level(level: f64, delta: Probability) -> Result<f64> {
    let d = check_below_half(delta.value())?.value();
    let top = h2(d);
    if !(0.0..=top).contains(&level) {
        return Err(Error::domain(format!(
            "capacity level {level} outside [0, H(delta)={top}]"
        )));
    }
    Ok(bisect(0.0, d, level, |g| top - h2((d - g) / (1.0 - 2.0 * g))))
}

/// The EC crossover matching `C_REC(gamma_rec, delta)`.
pub fn ec_gamma_matching_rec(gamma_rec: Probability, delta: Probability) -> Result<f64> {
    ec_gamma_for_level(capacity_rec(gamma_rec, delta)?.value)
}

/// Solves one contour point, or `None` when `level` is not a capacity both
/// families reach on the open interval `0 < gamma < delta`.
pub fn contour_point(delta: Probability, level: f64) -> Result<Option<ContourPoint>> {
    let d = check_below_half(delta.value())?.value();
    if !(level > 0.0 && level <= h2(d)) {
        return Ok(None);
    }
    Ok(Some(ContourPoint {
        delta: d,
        level,
        gamma_ec: ec_gamma_for_level(level)?,
        gamma_rec: rec_gamma_for_level(level, delta)?,
    }))
}

/// Equal-capacity pairs for each `delta` at capacity levels
/// `H(delta) * i / (points + 1)`, `i = 1..=points`.
pub fn contour_series(deltas: &[Probability], points: usize) -> Result<ContourTable> {
    let mut levels = Vec::new();
    for &delta in deltas {
        let top = binary_entropy(check_below_half(delta.value())?);
        levels.extend((1..=points).map(|i| (delta, top * i as f64 / (points + 1) as f64)));
    }
    contour_levels(&levels)
}

/// Solves explicit `(delta, level)` pairs, recording the unreachable ones.
pub fn contour_levels(levels: &[(Probability, f64)]) -> Result<ContourTable> {
    let mut table = ContourTable::default();
    for &(delta, level) in levels {
        match contour_point(delta, level)? {
            Some(p) => table.points.push(p),
            None => table.omitted.push(OmittedLevel {
                delta: delta.value(),
                level,
            }),
        }
    }
    Ok(table)
}

#[derive(Serialize)]
struct CurveRecord {
    family: &'static str,
    gamma: f64,
    delta: f64,
    capacity: f64,
    gamma_over_delta: f64,
}

#[derive(Serialize)]
struct ContourRecord {
    family: &'static str,
    gamma: f64,
    delta: f64,
    capacity: f64,
    gamma_over_delta: f64,
    point: usize,
}

pub const CURVE_HEADER: [&str; 5] = ["family", "gamma", "delta", "capacity", "gamma_over_delta"];
pub const CONTOUR_HEADER: [&str; 6] = [
    "family",
    "gamma",
    "delta",
    "capacity",
    "gamma_over_delta",
    "point",
];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Internal(format!("csv: {other:?}")),
    }
}

/// Long-format CSV: one line per (family, gamma, delta) cell, families in the
/// order bsc, ec, rec, unc.
pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CURVE_HEADER).map_err(csv_error)?;
    for r in rows {
        for (family, capacity) in [("bsc", r.bsc), ("ec", r.ec), ("rec", r.rec), ("unc", r.unc)] {
            w.serialize(CurveRecord {
                family,
                gamma: r.gamma,
                delta: r.delta,
                capacity,
                gamma_over_delta: r.gamma / r.delta,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Two lines per contour point (ec then rec) sharing a `point` index.
pub fn write_contour_csv<W: Write>(table: &ContourTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CONTOUR_HEADER).map_err(csv_error)?;
    for (i, p) in table.points.iter().enumerate() {
        for (family, gamma) in [("ec", p.gamma_ec), ("rec", p.gamma_rec)] {
            w.serialize(ContourRecord {
                family,
                gamma,
                delta: p.delta,
                capacity: p.level,
                gamma_over_delta: gamma / p.delta,
                point: i,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}
