//! Globally adaptive Gauss–Kronrod (7, 15) quadrature with user breakpoints
//! and maps for (semi-)infinite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Interval of the real line; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    /// Error above which the result is rejected outright.
    pub fail_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, fail_tol: 1e-8, max_segments: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over the finite interval `[a, b]`, pre-split at `breaks`.
pub fn integrate_finite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(a);
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut segs: Vec<Segment> = cuts.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();
    loop {
        let total_err: f64 = segs.iter().map(|s| s.error).sum();
        if total_err <= opts.abs_tol || segs.len() >= opts.max_segments {
            let value = segs.iter().map(|s| s.value).sum();
            if !(total_err <= opts.fail_tol) {
                return Err(Error::Quadrature { achieved: total_err, tolerance: opts.fail_tol });
            }
            return Ok(value);
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval cannot be split further in floating point
            let value = segs.iter().map(|s| s.value).sum::<f64>() + s.value;
            let err = total_err;
            if err <= opts.fail_tol {
                return Ok(value);
            }
            return Err(Error::Quadrature { achieved: err, tolerance: opts.fail_tol });
        }
        segs.push(gk15(&mut f, s.a, mid));
        segs.push(gk15(&mut f, mid, s.b));
    }
}

/// Variable change taking a finite `t` range onto the interval, centred on
/// `center` with length scale `scale`.
#[derive(Debug, Clone, Copy)]
pub struct IntervalMap {
    kind: MapKind,
    center: f64,
    scale: f64,
}

#[derive(Debug, Clone, Copy)]
enum MapKind {
    Finite { lo: f64, hi: f64 },
    Both,
    Upper { lo: f64 },
    Lower { hi: f64 },
}

impl IntervalMap {
    pub fn new(support: Interval, center: f64, scale: f64) -> Self {
        let kind = match (support.lo.is_finite(), support.hi.is_finite()) {
            (true, true) => MapKind::Finite { lo: support.lo, hi: support.hi },
            (false, false) => MapKind::Both,
            (true, false) => MapKind::Upper { lo: support.lo },
            (false, true) => MapKind::Lower { hi: support.hi },
        };
        Self { kind, center, scale }
    }

    pub fn t_range(&self) -> (f64, f64) {
        match self.kind {
            MapKind::Finite { lo, hi } => (lo, hi),
            MapKind::Both => (-1.0, 1.0),
            MapKind::Upper { .. } | MapKind::Lower { .. } => (0.0, 1.0),
        }
    }

    /// Returns `(x(t), dx/dt)`.
    pub fn apply(&self, t: f64) -> (f64, f64) {
        match self.kind {
            MapKind::Finite { .. } => (t, 1.0),
            MapKind::Both => {
                let d = 1.0 - t * t;
                (self.center + self.scale * t / d, self.scale * (1.0 + t * t) / (d * d))
            }
            MapKind::Upper { lo } => {
                let d = 1.0 - t;
                (lo + self.scale * t / d, self.scale / (d * d))
            }
            MapKind::Lower { hi } => {
                let d = 1.0 - t;
                (hi - self.scale * t / d, self.scale / (d * d))
            }
        }
    }

    /// The t-value mapping to `center` (a natural breakpoint).
    pub fn center_t(&self) -> Option<f64> {
        match self.kind {
            MapKind::Both => Some(0.0),
            _ => None,
        }
    }
}

/// Integrates `f` over `support` after mapping to a finite range.
///
/// `kink` is evaluated on a grid of the mapped variable; sign changes are
/// located by bisection and used as breakpoints.
pub fn integrate<F, K>(
    mut f: F,
    support: Interval,
    center: f64,
    scale: f64,
    mut kink: K,
    opts: QuadOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    K: FnMut(f64) -> f64,
{
    let map = IntervalMap::new(support, center, scale);
    let (t0, t1) = map.t_range();
    let mut breaks: Vec<f64> = map.center_t().into_iter().collect();

    const GRID: usize = 400;
    let at = |i: usize| t0 + (t1 - t0) * (i as f64 + 0.5) / GRID as f64;
    let mut prev_t = at(0);
    let mut prev_k = kink(map.apply(prev_t).0);
    for i in 1..GRID {
        let t = at(i);
        let k = kink(map.apply(t).0);
        if prev_k.is_finite() && k.is_finite() && (prev_k < 0.0) != (k < 0.0) {
            let (mut lo, mut hi) = (prev_t, t);
            let lo_neg = prev_k < 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (kink(map.apply(mid).0) < 0.0) == lo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_k = k;
    }

    integrate_finite(
        |t| {
            let (x, jac) = map.apply(t);
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        t0,
        t1,
        &breaks,
        opts,
    )
}
