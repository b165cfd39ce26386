/// Least concave majorant of a curve sampled on the integer grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub values: Vec<f64>,
    /// `max_C (hull(C) - f(C))`.
    pub gap: f64,
    /// First grid point attaining [`Hull::gap`].
    pub gap_at: usize,
    /// Widest hull segment that bridges over points strictly below it.
    pub bridge: Option<(usize, usize)>,
}

impl Hull {
    pub fn value(&self, k: usize) -> f64 {
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn marginal(&self, k: usize) -> f64 {
        self.value(k + 1) - self.value(k)
    }
}

/// Upper convex hull of `(k, values[k])` by a monotone chain. Collinear points
/// are kept as vertices, so every segment longer than one step is a bridge.
pub fn concave_hull(values: &[f64]) -> Hull {
    assert!(!values.is_empty(), "empty curve");
    assert!(values.iter().all(|v| v.is_finite()), "non-finite curve value");
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut vertices: Vec<usize> = Vec::with_capacity(values.len());
    for k in 0..values.len() {
        while vertices.len() >= 2 {
            let a = vertices[vertices.len() - 2];
            let b = vertices[vertices.len() - 1];
            // > 0 when b lies strictly below the chord a -> k
            let cross = (b - a) as f64 * (values[k] - values[a]) - (values[b] - values[a]) * (k - a) as f64;
            if cross > 1e-9 * scale * (k - a) as f64 {
                vertices.pop();
            } else {
                break;
            }
        }
        vertices.push(k);
    }

    let mut hull = values.to_vec();
    let mut bridge: Option<(usize, usize)> = None;
    for pair in vertices.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 2 {
            continue;
        }
        let slope = (values[b] - values[a]) / (b - a) as f64;
        for (k, h) in hull.iter_mut().enumerate().take(b).skip(a + 1) {
            *h = (values[a] + slope * (k - a) as f64).max(values[k]);
        }
        if bridge.is_none_or(|(x, y)| b - a > y - x) {
            bridge = Some((a, b));
        }
    }
    let (gap_at, gap) = hull
        .iter()
        .zip(values)
        .map(|(h, f)| h - f)
        .enumerate()
        .fold((0, 0.0f64), |best, (k, g)| if g > best.1 { (k, g) } else { best });
    Hull {
        values: hull,
        gap,
        gap_at,
        bridge,
    }
}

/// The two base curves of one video, their pointwise max and its concave hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridCurve {
    pub video: usize,
    /// Fixed fractional curve `f_{m,0}`.
    pub fixed_fractional: Vec<f64>,
    /// Adaptive whole curve `f_{m,1}`.
    pub adaptive_whole: Vec<f64>,
    /// `f_m = max(f_{m,0}, f_{m,1})`.
    pub combined: Vec<f64>,
    pub hull: Hull,
    /// Linear stretch `[A_m, B_m]` of the hull, when the curves cross.
    pub linear_interval: Option<(usize, usize)>,
    /// First grid point where the better base curve changes.
    pub crossover: Option<usize>,
}

impl HybridCurve {
    /// Pads the shorter base curve with its last value so both share one grid.
    pub fn new(video: usize, fixed_fractional: &[f64], adaptive_whole: &[f64]) -> Self {
        let len = fixed_fractional.len().max(adaptive_whole.len());
        let pad = |v: &[f64]| -> Vec<f64> {
            let mut out = v.to_vec();
            out.resize(len, *v.last().expect("empty curve"));
            out
        };
        let ff = pad(fixed_fractional);
        let aw = pad(adaptive_whole);
        let combined: Vec<f64> = ff.iter().zip(&aw).map(|(a, b)| a.max(*b)).collect();
        let hull = concave_hull(&combined);
        let crossover = crossover(&ff, &aw);
        let linear_interval = if hull.gap > 0.0 { hull.bridge } else { None };
        Self {
            video,
            fixed_fractional: ff,
            adaptive_whole: aw,
            combined,
            hull,
            linear_interval,
            crossover,
        }
    }

    pub fn gap(&self) -> f64 {
        self.hull.gap
    }
}

fn crossover(ff: &[f64], aw: &[f64]) -> Option<usize> {
    let scale = ff.iter().chain(aw).fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut sign = 0i8;
    for (k, (a, b)) in ff.iter().zip(aw).enumerate() {
        let s = if b - a > tol {
            1
        } else if a - b > tol {
            -1
        } else {
            0
        };
        if s != 0 {
            if sign != 0 && s != sign {
                return Some(k);
            }
            sign = s;
        }
    }
    None
}
