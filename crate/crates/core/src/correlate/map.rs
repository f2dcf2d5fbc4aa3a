use super::{check_bin_width, check_channels, CorrelateError};
use crate::montecarlo::TimeTag;

/// Which cycles are paired when filling a two-time map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    SameCycle,
    /// A-tags of cycle `k` against B-tags of cycles `k+1 ..= k+cycles`.
    /// One cycle is the usual normalization; more average the background.
    Displaced { cycles: u32 },
}

impl Pairing {
    pub const DISPLACED_ONE_CYCLE: Pairing = Pairing::Displaced { cycles: 1 };

    fn multiplicity(self) -> u32 {
        match self {
            Pairing::SameCycle => 1,
            Pairing::Displaced { cycles } => cycles,
        }
    }
}

/// Square histogram of `(t1 mod period, t2 mod period)`, `t1` from channel
/// set A along rows and `t2` from set B along columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationMap2D {
    pub bin_width: u64,
    side: usize,
    counts: Vec<u64>,
    /// Number of cycle displacements summed into the counts.
    pub multiplicity: u32,
}

impl CorrelationMap2D {
    pub fn zeros(bin_width: u64, side: usize) -> Self {
        Self {
            bin_width,
            side,
            counts: vec![0; side * side],
            multiplicity: 1,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn extent(&self) -> u64 {
        self.bin_width * self.side as u64
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.side + col]
    }

    pub fn add(&mut self, row: usize, col: usize, n: u64) {
        self.counts[row * self.side + col] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.bin_width, self.side);
        t.multiplicity = self.multiplicity;
        for r in 0..self.side {
            for c in 0..self.side {
                t.counts[c * self.side + r] = self.get(r, c);
            }
        }
        t
    }

    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        let mut s = self.clone();
        s.counts.iter_mut().for_each(|c| *c *= k);
        s
    }

    /// Nonzero cells as `(row, col, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / self.side, i % self.side, c))
    }

    fn sum_block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> u64 {
        rows.map(|r| self.counts[r * self.side..][cols.clone()].iter().sum::<u64>())
            .sum()
    }
}

/// Tag offsets within their cycle, grouped by cycle in one flat buffer.
struct ByCycle {
    cycles: Vec<u64>,
    /// `offsets[starts[i]..starts[i + 1]]` belong to `cycles[i]`.
    starts: Vec<usize>,
    offsets: Vec<u64>,
}

impl ByCycle {
    fn new(tags: &[TimeTag], channels: &[u8], period: u64) -> Self {
        let mut g = ByCycle {
            cycles: Vec::new(),
            starts: Vec::new(),
            offsets: Vec::new(),
        };
        for tag in tags.iter().filter(|t| channels.contains(&t.channel)) {
            let cycle = tag.time / period;
            if g.cycles.last() != Some(&cycle) {
                g.cycles.push(cycle);
                g.starts.push(g.offsets.len());
            }
            g.offsets.push(tag.time % period);
        }
        g.starts.push(g.offsets.len());
        g
    }

    fn len(&self) -> usize {
        self.cycles.len()
    }

    fn group(&self, i: usize) -> &[u64] {
        &self.offsets[self.starts[i]..self.starts[i + 1]]
    }
}

/// Two-time correlation map over `extent` ps of each cycle (default the
/// whole period). Pairs outside the extent are dropped. When a tag belongs
/// to both channel sets it is never paired with itself.
pub fn two_time_map(
    tags: &[TimeTag],
    channels_a: &[u8],
    channels_b: &[u8],
    rep_period: u64,
    bin_width: u64,
    pairing: Pairing,
    extent: Option<u64>,
) -> Result<CorrelationMap2D, CorrelateError> {
    check_channels(channels_a)?;
    check_channels(channels_b)?;
    check_bin_width(bin_width, rep_period)?;
    let extent = extent.unwrap_or(rep_period);
    if extent == 0 || extent > rep_period || extent % bin_width != 0 {
        return Err(CorrelateError::InvalidParameter(format!(
            "map extent {extent} ps must be a positive multiple of the bin width, at most one period"
        )));
    }
    if pairing.multiplicity() == 0 {
        return Err(CorrelateError::InvalidParameter(
            "displaced pairing needs at least one cycle".into(),
        ));
    }
    let side = (extent / bin_width) as usize;
    let mut map = CorrelationMap2D::zeros(bin_width, side);
    map.multiplicity = pairing.multiplicity();

    let a = ByCycle::new(tags, channels_a, rep_period);
    let b = ByCycle::new(tags, channels_b, rep_period);
    let bin = |t: u64| (t < extent).then(|| (t / bin_width) as usize);
    let fill = |map: &mut CorrelationMap2D, xs: &[u64], ys: &[u64]| {
        for r in xs.iter().filter_map(|&x| bin(x)) {
            for c in ys.iter().filter_map(|&y| bin(y)) {
                map.add(r, c, 1);
            }
        }
    };
    let overlap = channels_a.iter().any(|c| channels_b.contains(c));
    let span = match pairing {
        Pairing::SameCycle => 0,
        Pairing::Displaced { cycles } => cycles as u64,
    };
    let first = if span == 0 { 0 } else { 1 };
    let mut j = 0;
    for i in 0..a.len() {
        let cycle = a.cycles[i];
        while j < b.len() && b.cycles[j] < cycle + first {
            j += 1;
        }
        let mut k = j;
        while k < b.len() && b.cycles[k] <= cycle + span {
            if overlap && span == 0 {
                let sets = (channels_a, channels_b);
                fill_overlapping(&mut map, tags, sets, cycle, rep_period, extent);
            } else {
                fill(&mut map, a.group(i), b.group(k));
            }
            k += 1;
        }
    }
    Ok(map)
}

/// Same-cycle pairs when the channel sets overlap: every ordered pair of
/// distinct tags with the first in A and the second in B.
fn fill_overlapping(
    map: &mut CorrelationMap2D,
    tags: &[TimeTag],
    (channels_a, channels_b): (&[u8], &[u8]),
    cycle: u64,
    period: u64,
    extent: u64,
) {
    let start = tags.partition_point(|t| t.time < cycle * period);
    let end = tags.partition_point(|t| t.time < (cycle + 1) * period);
    let in_cycle = &tags[start..end];
    let bw = map.bin_width;
    for (i, x) in in_cycle.iter().enumerate() {
        let tx = x.time % period;
        if !channels_a.contains(&x.channel) || tx >= extent {
            continue;
        }
        for (j, y) in in_cycle.iter().enumerate() {
            let ty = y.time % period;
            if i != j && channels_b.contains(&y.channel) && ty < extent {
                map.add((tx / bw) as usize, (ty / bw) as usize, 1);
            }
        }
    }
}

/// Time-bin combination; the first letter refers to the map's row axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    EE,
    EL,
    LE,
    LL,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::EE, Quadrant::EL, Quadrant::LE, Quadrant::LL];

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::EE => "ee",
            Quadrant::EL => "el",
            Quadrant::LE => "le",
            Quadrant::LL => "ll",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Quadrants<T> {
    pub ee: T,
    pub el: T,
    pub le: T,
    pub ll: T,
}

impl<T: Copy> Quadrants<T> {
    pub fn get(&self, q: Quadrant) -> T {
        match q {
            Quadrant::EE => self.ee,
            Quadrant::EL => self.el,
            Quadrant::LE => self.le,
            Quadrant::LL => self.ll,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantResult {
    pub boundary: f64,
    /// First late bin on each axis.
    pub split_bin: usize,
    pub same: Quadrants<u64>,
    pub displaced: Quadrants<u64>,
    /// `None` where the displaced quadrant is empty.
    pub g2: Quadrants<Option<f64>>,
}

fn quadrant_sums(map: &CorrelationMap2D, s: usize) -> Quadrants<u64> {
    let n = map.side;
    Quadrants {
        ee: map.sum_block(0..s, 0..s),
        el: map.sum_block(0..s, s..n),
        le: map.sum_block(s..n, 0..s),
        ll: map.sum_block(s..n, s..n),
    }
}

/// Splits both maps at `t0 + delta_t` and normalizes each same-cycle
/// quadrant by its displaced counterpart.
///
/// The boundary is snapped to the nearest bin edge; a bin starting at the
/// boundary belongs to the late bin.
pub fn quadrant_g2(
    same: &CorrelationMap2D,
    displaced: &CorrelationMap2D,
    t0: f64,
    delta_t: f64,
) -> Result<QuadrantResult, CorrelateError> {
    if same.bin_width != displaced.bin_width || same.side != displaced.side {
        return Err(CorrelateError::GeometryMismatch);
    }
    let boundary = t0 + delta_t;
    let extent = same.extent();
    if !(boundary >= 0.0 && boundary <= extent as f64) {
        return Err(CorrelateError::BoundaryOutside { boundary, extent });
    }
    let split_bin = ((boundary / same.bin_width as f64).round() as usize).min(same.side);
    let s = quadrant_sums(same, split_bin);
    let d = quadrant_sums(displaced, split_bin);
    let ratio = |x: u64, y: u64| {
        (y > 0).then(|| {
            (x as f64 * displaced.multiplicity as f64) / (y as f64 * same.multiplicity as f64)
        })
    };
    Ok(QuadrantResult {
        boundary,
        split_bin,
        same: s,
        displaced: d,
        g2: Quadrants {
            ee: ratio(s.ee, d.ee),
            el: ratio(s.el, d.el),
            le: ratio(s.le, d.le),
            ll: ratio(s.ll, d.ll),
        },
    })
}
