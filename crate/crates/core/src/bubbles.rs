//! Greedy extraction of mass-concentration balls from a grid density.
//!
//! Repeatedly take the ball of the scan radius `r` carrying the most mass;
//! stop once it holds less than the floor `δ`. Each accepted ball grows while
//! the mass gained per unit radius exceeds the growth tolerance, is recorded
//! and zeroed. Balls stay at distance `≥ r` from each other; a heavy ball
//! that would come closer is carved and its mass credited to the nearest
//! recorded bubble, whose ball is left unchanged. Recorded balls are thus
//! never revisited, so a higher floor yields a prefix of the same sequence.
//! The remainder has no `r`-ball of mass `≥ δ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::GridDensity;
use crate::error::{invalid, Result};

/// Relative band within which ball masses tie.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Scan radius `r`.
    pub radius: f64,
    /// Mass floor `δ`.
    pub floor: f64,
    pub max_bubbles: usize,
    /// Mass per unit radius below which growth stops; `0.01 δ/r` if unset.
    pub growth_tol: Option<f64>,
}

impl BubbleParams {
    pub fn new(radius: f64, floor: f64) -> Self {
        Self { radius, floor, max_bubbles: 16, growth_tol: None }
    }

    pub fn validate(&self, u: &GridDensity) -> Result<()> {
        if !(self.radius.is_finite() && self.radius >= u.h * (1.0 - 1e-12)) {
            return Err(invalid(format!("scan radius {} is below the grid spacing {}", self.radius, u.h)));
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(invalid(format!("mass floor must be positive, got {}", self.floor)));
        }
        if self.max_bubbles == 0 {
            return Err(invalid("max_bubbles must be at least 1"));
        }
        if let Some(g) = self.growth_tol {
            if !(g.is_finite() && g >= 0.0) {
                return Err(invalid(format!("growth tolerance must be non-negative, got {g}")));
            }
        }
        Ok(())
    }

    fn growth_tol(&self) -> f64 {
        self.growth_tol.unwrap_or(0.01 * self.floor / self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub center: Vec<f64>,
    pub radius: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleSet {
    pub bubbles: Vec<Bubble>,
    pub remainder_mass: f64,
    pub total_mass: f64,
    /// Largest remainder mass in a ball of the scan radius.
    pub vanishing_sup: f64,
    /// `max_bubbles` ran out while a ball of mass `≥ δ` remained.
    pub incomplete: bool,
    pub params: BubbleParams,
}

impl BubbleSet {
    pub fn bubble_mass(&self) -> f64 {
        neumaier(self.bubbles.iter().map(|b| b.mass))
    }

    /// `|Σ m_i + remainder − total| / total` (0 for the zero density).
    pub fn accounting_error(&self) -> f64 {
        let err = (self.bubble_mass() + self.remainder_mass - self.total_mass).abs();
        if self.total_mass > 0.0 {
            err / self.total_mass
        } else {
            err
        }
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.bubbles.iter().map(|b| b.center.clone()).collect()
    }
}

fn neumaier(it: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Row offsets `(di, w)`: the ball of radius `r` covers columns `cj−w..=cj+w`
/// of row `ci+di`. In 1D a single row with `di = 0`.
fn ball_rows(r: f64, h: f64, dim: usize) -> Vec<(isize, isize)> {
    let q = r / h * (1.0 + TIE);
    let k = q.floor() as isize;
    if dim == 1 {
        return vec![(0, k)];
    }
    (-k..=k).map(|di| (di, (q * q - (di * di) as f64).max(0.0).sqrt().floor() as isize)).collect()
}

struct Windows<'a> {
    u: &'a GridDensity,
    rows: Vec<(isize, isize)>,
    /// Prefix sums per row, `ny + 1` entries each.
    prefix: Vec<f64>,
}

impl<'a> Windows<'a> {
    fn new(u: &'a GridDensity, r: f64) -> Self {
        let (nx, ny) = shape2(u);
        let mut prefix = vec![0.0; nx * (ny + 1)];
        for i in 0..nx {
            let row = &mut prefix[i * (ny + 1)..(i + 1) * (ny + 1)];
            for j in 0..ny {
                row[j + 1] = row[j] + u.values[i * ny + j];
            }
        }
        Self { u, rows: ball_rows(r, u.h, u.dim), prefix }
    }

    /// Raw value sum (without the cell volume) of the ball around node `c`.
    fn sum(&self, c: usize) -> f64 {
        let (nx, ny) = shape2(self.u);
        let (ci, cj) = ((c / ny) as isize, (c % ny) as isize);
        let mut s = 0.0;
        for &(di, w) in &self.rows {
            let i = ci + di;
            if i < 0 || i >= nx as isize {
                continue;
            }
            let j0 = (cj - w).max(0) as usize;
            let j1 = (cj + w).min(ny as isize - 1) as usize;
            let row = &self.prefix[i as usize * (ny + 1)..];
            s += row[j1 + 1] - row[j0];
        }
        s.max(0.0)
    }
}

/// `(nx, ny)` with `nx = 1` in 1D so that node `i` is row `i / ny`.
fn shape2(u: &GridDensity) -> (usize, usize) {
    match u.dim {
        1 => (1, u.shape[0]),
        _ => (u.shape[0], u.shape[1]),
    }
}

/// Nodes within distance `r` of node `c`.
fn ball_nodes(u: &GridDensity, c: usize, r: f64) -> impl Iterator<Item = usize> + '_ {
    let (nx, ny) = shape2(u);
    let (ci, cj) = ((c / ny) as isize, (c % ny) as isize);
    ball_rows(r, u.h, u.dim).into_iter().flat_map(move |(di, w)| {
        let i = ci + di;
        let ok = i >= 0 && i < nx as isize;
        let (j0, j1) = if ok { ((cj - w).max(0), (cj + w).min(ny as isize - 1)) } else { (0, -1) };
        (j0..=j1).map(move |j| i as usize * ny + j as usize)
    })
}

fn ball_sum(u: &GridDensity, c: usize, r: f64) -> f64 {
    neumaier(ball_nodes(u, c, r).map(|i| u.values[i]))
}

fn carve(u: &mut GridDensity, c: usize, r: f64) -> f64 {
    let nodes: Vec<usize> = ball_nodes(u, c, r).collect();
    let taken = neumaier(nodes.iter().map(|&i| u.values[i]));
    for i in nodes {
        u.values[i] = 0.0;
    }
    taken
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubblingSup {
    pub mass: f64,
    /// `None` for the zero density.
    pub center: Option<Vec<f64>>,
    pub index: Option<usize>,
}

/// Largest mass in a ball of radius `r` centred at a node of positive mass;
/// among near-ties (relative `10⁻¹²`) the lexicographically smallest centre.
pub fn bubbling_sup(u: &GridDensity, r: f64) -> BubblingSup {
    let win = Windows::new(u, r);
    let masses: Vec<(usize, f64)> =
        (0..u.len()).into_par_iter().filter(|&i| u.values[i] > 0.0).map(|i| (i, win.sum(i))).collect();
    let top = masses.iter().map(|m| m.1).fold(0.0, f64::max);
    // Row-major order with x slow is lexicographic order of the centres.
    match masses.iter().find(|m| m.1 >= top * (1.0 - TIE)) {
        Some(&(i, _)) => BubblingSup { mass: top * u.cell_volume(), center: Some(u.coords(i)), index: Some(i) },
        None => BubblingSup { mass: 0.0, center: None, index: None },
    }
}

struct Recorded {
    center: Vec<f64>,
    radius: f64,
    raw: f64,
}

pub fn extract_bubbles(u: &GridDensity, params: &BubbleParams) -> Result<BubbleSet> {
    extract_bubbles_with_remainder(u, params).map(|(set, _)| set)
}

/// [`extract_bubbles`] together with the carved remainder density.
pub fn extract_bubbles_with_remainder(u: &GridDensity, params: &BubbleParams) -> Result<(BubbleSet, GridDensity)> {
    params.validate(u)?;
    let r = params.radius;
    let vol = u.cell_volume();
    let total_raw = neumaier(u.values.iter().cloned());
    let extent = u.shape.iter().map(|&n| (n as f64 * u.h).powi(2)).sum::<f64>().sqrt();
    let step = u.h.max(r / 10.0);
    let growth_tol = params.growth_tol();
    let mut work = u.clone();
    let mut rec: Vec<Recorded> = Vec::new();
    let mut incomplete = false;
    loop {
        let sup = bubbling_sup(&work, r);
        let Some(c) = sup.index else { break };
        if sup.mass < params.floor {
            break;
        }
        let x = work.coords(c);
        let conflict = rec
            .iter()
            .enumerate()
            .filter(|(_, b)| dist(&x, &b.center) < b.radius + 2.0 * r)
            .min_by(|a, b| dist(&x, &a.1.center).total_cmp(&dist(&x, &b.1.center)))
            .map(|(j, _)| j);
        if let Some(j) = conflict {
            // Too close to bubble j to stand alone: credit its mass to j.
            rec[j].raw += carve(&mut work, c, r);
            continue;
        }
        if rec.len() == params.max_bubbles {
            incomplete = true;
            break;
        }
        let mut radius = r;
        let mut raw = ball_sum(&work, c, radius);
        loop {
            let next = radius + step;
            if next > extent || rec.iter().any(|b| dist(&x, &b.center) < b.radius + next + r) {
                break;
            }
            let raw_next = ball_sum(&work, c, next);
            if (raw_next - raw) * vol / step <= growth_tol {
                break;
            }
            radius = next;
            raw = raw_next;
        }
        let taken = carve(&mut work, c, radius);
        rec.push(Recorded { center: x, radius, raw: taken });
    }
    let set = BubbleSet {
        bubbles: rec.into_iter().map(|b| Bubble { center: b.center, radius: b.radius, mass: b.raw * vol }).collect(),
        remainder_mass: neumaier(work.values.iter().cloned()) * vol,
        total_mass: total_raw * vol,
        vanishing_sup: bubbling_sup(&work, r).mass,
        incomplete,
        params: *params,
    };
    Ok((set, work))
}

/// Bubbles of one index matched to a track, by nearest centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleTrack {
    /// Per index, `None` when the track has no bubble there.
    pub masses: Vec<Option<f64>>,
    pub centers: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub sets: Vec<BubbleSet>,
    pub tracks: Vec<BubbleTrack>,
    pub vanishing_sups: Vec<f64>,
    /// Smallest distance between bubble centres per index (`None` below two bubbles).
    pub separations: Vec<Option<f64>>,
    /// Indices where two bubbles lay within `r` of the same previous centre.
    pub ambiguous: Vec<usize>,
}

impl DecompositionReport {
    pub fn bubble_counts(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.bubbles.len()).collect()
    }
}

/// Extract bubbles along a sequence and follow them from index to index.
pub fn decomposition_report(seq: &[GridDensity], params: &BubbleParams) -> Result<DecompositionReport> {
    let sets: Vec<BubbleSet> = seq.iter().map(|u| extract_bubbles(u, params)).collect::<Result<_>>()?;
    let n = sets.len();
    let mut tracks: Vec<BubbleTrack> = Vec::new();
    let mut last: Vec<Vec<f64>> = Vec::new();
    let mut ambiguous = Vec::new();
    for (t, set) in sets.iter().enumerate() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (b, bubble) in set.bubbles.iter().enumerate() {
            for (k, c) in last.iter().enumerate() {
                pairs.push((dist(&bubble.center, c), b, k));
            }
        }
        if last.iter().any(|c| set.bubbles.iter().filter(|b| dist(&b.center, c) < params.radius).count() >= 2) {
            ambiguous.push(t);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut used_b = vec![false; set.bubbles.len()];
        let mut used_k = vec![false; last.len()];
        let mut assign: Vec<Option<usize>> = vec![None; set.bubbles.len()];
        for (_, b, k) in pairs {
            if !used_b[b] && !used_k[k] {
                used_b[b] = true;
                used_k[k] = true;
                assign[b] = Some(k);
            }
        }
        for (b, bubble) in set.bubbles.iter().enumerate() {
            let k = assign[b].unwrap_or_else(|| {
                tracks.push(BubbleTrack { masses: vec![None; n], centers: vec![None; n] });
                last.push(bubble.center.clone());
                tracks.len() - 1
            });
            tracks[k].masses[t] = Some(bubble.mass);
            tracks[k].centers[t] = Some(bubble.center.clone());
            last[k] = bubble.center.clone();
        }
    }
    let separations = sets
        .iter()
        .map(|s| {
            let mut best: Option<f64> = None;
            for (i, a) in s.bubbles.iter().enumerate() {
                for b in &s.bubbles[i + 1..] {
                    let d = dist(&a.center, &b.center);
                    best = Some(best.map_or(d, |x| x.min(d)));
                }
            }
            best
        })
        .collect();
    Ok(DecompositionReport {
        vanishing_sups: sets.iter().map(|s| s.vanishing_sup).collect(),
        sets,
        tracks,
        separations,
        ambiguous,
    })
}
