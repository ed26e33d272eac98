//! Sampling point spread functions and measuring their central feature.
//!
//! Two feature shapes occur. A *peak* (the unmodulated population, f₀) is
//! measured at half its height above a zero baseline. A *notch* (f₂, f₄ and
//! the perturbative orders, which all vanish at a drive node) is measured
//! between the points on either side of the center where the curve climbs
//! halfway from the notch floor to the adjacent lobe extremum. Curves whose
//! dominant lobes are negative are inverted first.

use std::f64::consts::PI;

use crate::analytic::{rho22_coupled_lambda, IntensityRatio};
use crate::error::{require, Error, Result, Side};
use crate::modulation::{f_coeff_closed, f_coeff_quadrature, perturbative_coeff};

/// Rayleigh limit λ/2 in units of kx.
pub const RAYLEIGH_WIDTH: f64 = PI;
/// Default number of grid points for 1D curves.
pub const DEFAULT_SAMPLES: usize = 4001;
pub const MIN_SAMPLES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Peak,
    Notch,
}

/// Affine map applied to the raw values: stored = scale·raw + shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scale: f64,
    pub shift: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            scale: 1.0,
            shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsfCurve {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub inverted: bool,
    /// Central feature, once classified by [`normalize_orientation`].
    pub feature: Option<FeatureKind>,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWidth {
    pub width: f64,
    pub center: f64,
    /// Level at which the width was taken, in oriented units. For a notch
    /// with unequal lobes this is the mean of the two side levels.
    pub half_level: f64,
    pub kind: FeatureKind,
    pub left: f64,
    pub right: f64,
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

fn check_grid(lo: f64, hi: f64, n: usize) -> Result<()> {
    require(n >= MIN_SAMPLES, "samples", n as f64, "need at least 9 grid points")?;
    require(lo.is_finite() && hi.is_finite() && lo < hi, "range", hi - lo, "need lo < hi")
}

/// Evaluates `psf` on `n` uniform points spanning `range`, unnormalized.
pub fn sample_psf<F: Fn(f64) -> f64>(psf: F, range: (f64, f64), n: usize) -> Result<PsfCurve> {
    check_grid(range.0, range.1, n)?;
    let positions = uniform_grid(range.0, range.1, n);
    let values = positions.iter().map(|&x| psf(x)).collect();
    Ok(PsfCurve {
        positions,
        values,
        inverted: false,
        feature: None,
        normalization: Normalization::default(),
    })
}

/// Symmetric range of five expected widths on each side of `center`.
pub fn default_range(center: f64, expected_width: f64) -> (f64, f64) {
    (center - 5.0 * expected_width, center + 5.0 * expected_width)
}

impl PsfCurve {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.positions[0] + self.positions[self.len() - 1])
    }

    fn sign(&self) -> f64 {
        self.normalization.scale.signum()
    }

    fn nearest(&self, x: f64) -> usize {
        let lo = self.positions[0];
        let step = (self.positions[self.len() - 1] - lo) / (self.len() - 1) as f64;
        (((x - lo) / step).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// Oriented value at x by linear interpolation on the grid.
    fn interpolate(&self, x: f64) -> f64 {
        let i = match self.positions.partition_point(|&p| p <= x) {
            0 => 0,
            i if i >= self.len() => self.len() - 2,
            i => i - 1,
        };
        let (x0, x1) = (self.positions[i], self.positions[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Orients and classifies the feature at the midpoint of the range.
pub fn normalize_orientation(curve: &PsfCurve) -> Result<PsfCurve> {
    normalize_orientation_at(curve, curve.midpoint())
}

/// Negates the curve if its largest-magnitude extremum is negative, then
/// classifies the feature at `center` as a peak (local max) or a notch
/// (local min).
pub fn normalize_orientation_at(curve: &PsfCurve, center: f64) -> Result<PsfCurve> {
    let (min, max) = curve
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    // NaN anywhere also lands here.
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::DegenerateCurve);
    }
    let mut out = curve.clone();
    if -min > max {
        out.values.iter_mut().for_each(|v| *v = -*v);
        out.inverted = !out.inverted;
        out.normalization.scale = -out.normalization.scale;
        out.normalization.shift = -out.normalization.shift;
    }

    let c = out.nearest(center);
    if c == 0 || c + 1 >= out.len() {
        return Err(Error::NoCentralFeature { center });
    }
    let (l, m, r) = (out.values[c - 1], out.values[c], out.values[c + 1]);
    out.feature = if m >= l && m >= r && (m > l || m > r) {
        Some(FeatureKind::Peak)
    } else if m <= l && m <= r && (m < l || m < r) {
        Some(FeatureKind::Notch)
    } else {
        return Err(Error::NoCentralFeature { center });
    };
    Ok(out)
}

fn bisect<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    if ga == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-15 * a.abs().max(b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Maximum of a unimodal `g` on [a, b] by golden-section search.
fn golden_max<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = g(x1);
        }
    }
    g1.max(g2)
}

/// Half-level crossing walking away from `center` on one side.
struct SideScan {
    crossing: f64,
    level: f64,
}

fn scan_side(
    curve: &PsfCurve,
    center: f64,
    center_value: f64,
    side: Side,
    exact: Option<&dyn Fn(f64) -> f64>,
) -> Result<SideScan> {
    let idx: Vec<usize> = match side {
        Side::Right => (0..curve.len()).filter(|&i| curve.positions[i] > center).collect(),
        Side::Left => (0..curve.len())
            .rev()
            .filter(|&i| curve.positions[i] < center)
            .collect(),
    };
    let kind = curve.feature.expect("curve is classified");
    let no_cross = Error::NoHalfCrossing { side };

    let level = match kind {
        FeatureKind::Peak => 0.5 * center_value,
        FeatureKind::Notch => {
            // Adjacent lobe: first local maximum walking outward.
            let k = (0..idx.len())
                .find(|&k| k + 1 < idx.len() && curve.values[idx[k + 1]] < curve.values[idx[k]])
                .ok_or(no_cross.clone())?;
            let lobe = match exact {
                Some(f) => {
                    let before = if k == 0 { center } else { curve.positions[idx[k - 1]] };
                    let after = curve.positions[idx[k + 1]];
                    golden_max(f, before.min(after), before.max(after))
                }
                None => curve.values[idx[k]],
            };
            center_value + 0.5 * (lobe - center_value)
        }
    };

    let below = |v: f64| match kind {
        FeatureKind::Peak => v > level,
        FeatureKind::Notch => v < level,
    };
    let (mut px, mut pv) = (center, center_value);
    for &i in &idx {
        let (x, v) = (curve.positions[i], curve.values[i]);
        if !below(v) {
            let crossing = match exact {
                Some(f) => bisect(|t| f(t) - level, px, x),
                None if v == pv => x,
                None => px + (level - pv) * (x - px) / (v - pv),
            };
            return Ok(SideScan { crossing, level });
        }
        px = x;
        pv = v;
    }
    Err(no_cross)
}

fn width_impl(curve: &PsfCurve, center: f64, exact: Option<&dyn Fn(f64) -> f64>) -> Result<FeatureWidth> {
    let lo = curve.positions[0];
    let hi = curve.positions[curve.len() - 1];
    require(
        center >= lo && center <= hi,
        "center",
        center,
        "must lie inside the sampled range",
    )?;
    let curve = match curve.feature {
        Some(_) => curve.clone(),
        None => normalize_orientation_at(curve, center)?,
    };
    let kind = curve.feature.expect("classified above");
    let center_value = match exact {
        Some(f) => f(center),
        None => curve.interpolate(center),
    };
    if kind == FeatureKind::Peak && center_value.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NoCentralFeature { center });
    }
    let left = scan_side(&curve, center, center_value, Side::Left, exact)?;
    let right = scan_side(&curve, center, center_value, Side::Right, exact)?;
    Ok(FeatureWidth {
        width: right.crossing - left.crossing,
        center,
        half_level: 0.5 * (left.level + right.level),
        kind,
        left: left.crossing,
        right: right.crossing,
    })
}

/// Width of the central feature from the grid alone, with linear
/// interpolation between samples.
pub fn measure_width(curve: &PsfCurve, center: f64) -> Result<FeatureWidth> {
    width_impl(curve, center, None)
}

/// Width of the central feature with lobe extrema and half-level crossings
/// refined on `psf` itself (the unnormalized function the curve was sampled
/// from). Crossings are bisected to machine precision.
pub fn measure_width_refined<F: Fn(f64) -> f64>(curve: &PsfCurve, center: f64, psf: F) -> Result<FeatureWidth> {
    let curve = match curve.feature {
        Some(_) => curve.clone(),
        None => normalize_orientation_at(curve, center)?,
    };
    let sign = curve.sign();
    let shift = curve.normalization.shift;
    let oriented = move |x: f64| sign * psf(x) + shift;
    width_impl(&curve, center, Some(&oriented))
}

/// Samples, orients and measures `psf` around `center` in one go.
pub fn measure_psf<F: Fn(f64) -> f64>(psf: F, range: (f64, f64), n: usize, center: f64) -> Result<FeatureWidth> {
    let curve = normalize_orientation_at(&sample_psf(&psf, range, n)?, center)?;
    measure_width_refined(&curve, center, psf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// λ/2, i.e. kΔx = π.
    Rayleigh,
    Custom(f64),
}

impl Reference {
    pub fn width(self) -> f64 {
        match self {
            Reference::Rayleigh => RAYLEIGH_WIDTH,
            Reference::Custom(w) => w,
        }
    }
}

/// Reference width over measured width.
pub fn improvement_factor(width: &FeatureWidth, reference: Reference) -> f64 {
    reference.width() / width.width
}

/// The PSF families compared throughout, each a function of the local field
/// ratio s = Ω_s/Ω_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsfFamily {
    /// 1/(1 + s²).
    Unmodulated,
    /// [1/(1 + s²)]², two coupled Λ systems.
    CoupledLambda,
    /// f₂ₗ of the fully modulated probe, indexed by l.
    Full(usize),
    /// Coefficient of (a sin νt)^order, order ≤ 2.
    Perturbative(usize),
}

impl PsfFamily {
    pub fn value(self, s: f64) -> Result<f64> {
        match self {
            PsfFamily::Unmodulated => Ok(1.0 / (1.0 + s * s)),
            PsfFamily::CoupledLambda => Ok(rho22_coupled_lambda(IntensityRatio::from_field_ratio(s)?, PI / 2.0)),
            PsfFamily::Full(l) if l <= 2 => f_coeff_closed(l, s),
            PsfFamily::Full(l) => Ok(f_coeff_quadrature(l, s)),
            PsfFamily::Perturbative(order) => perturbative_coeff(order, s),
        }
    }

    /// Validates the family once and returns it as a plain function of s.
    pub fn evaluator(self) -> Result<impl Fn(f64) -> f64> {
        self.value(1.0)?;
        Ok(move |s: f64| self.value(s).unwrap_or(f64::NAN))
    }

    /// Short column label: `unmodulated`, `coupled`, `f4`, `pert1`, ...
    pub fn label(self) -> String {
        match self {
            PsfFamily::Unmodulated => "unmodulated".into(),
            PsfFamily::CoupledLambda => "coupled".into(),
            PsfFamily::Full(l) => format!("f{}", 2 * l),
            PsfFamily::Perturbative(o) => format!("pert{o}"),
        }
    }
}

/// Grid over a rectangle; `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfSurface {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

pub type Segment = [(f64, f64); 2];

pub fn sample_psf_2d<F: Fn(f64, f64) -> f64>(
    psf: F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    n: usize,
) -> Result<PsfSurface> {
    check_grid(x_range.0, x_range.1, n)?;
    check_grid(y_range.0, y_range.1, n)?;
    let xs = uniform_grid(x_range.0, x_range.1, n);
    let ys = uniform_grid(y_range.0, y_range.1, n);
    let values = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .map(|(x, y)| psf(x, y))
        .collect();
    Ok(PsfSurface { xs, ys, values })
}

impl PsfSurface {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    fn curve(positions: Vec<f64>, values: Vec<f64>) -> PsfCurve {
        PsfCurve {
            positions,
            values,
            inverted: false,
            feature: None,
            normalization: Normalization::default(),
        }
    }

    /// Values along x at row `iy`.
    pub fn row(&self, iy: usize) -> PsfCurve {
        let nx = self.xs.len();
        Self::curve(self.xs.clone(), self.values[iy * nx..(iy + 1) * nx].to_vec())
    }

    /// Values along y at column `ix`.
    pub fn column(&self, ix: usize) -> PsfCurve {
        let vals = (0..self.ys.len()).map(|iy| self.value(ix, iy)).collect();
        Self::curve(self.ys.clone(), vals)
    }

    fn nearest(axis: &[f64], v: f64) -> usize {
        (0..axis.len())
            .min_by(|&a, &b| (axis[a] - v).abs().total_cmp(&(axis[b] - v).abs()))
            .expect("axis is non-empty")
    }

    /// Grid-only widths along x and y through the grid point nearest `center`.
    pub fn axis_widths(&self, center: (f64, f64)) -> Result<(FeatureWidth, FeatureWidth)> {
        let iy = Self::nearest(&self.ys, center.1);
        let ix = Self::nearest(&self.xs, center.0);
        Ok((
            measure_width(&self.row(iy), center.0)?,
            measure_width(&self.column(ix), center.1)?,
        ))
    }

    /// Widths along x and y through `center`, refined on `psf`.
    pub fn axis_widths_refined<F: Fn(f64, f64) -> f64>(
        &self,
        center: (f64, f64),
        psf: F,
    ) -> Result<(FeatureWidth, FeatureWidth)> {
        let (cx, cy) = center;
        let along_x = |x: f64| psf(x, cy);
        let along_y = |y: f64| psf(cx, y);
        let row = Self::curve(self.xs.clone(), self.xs.iter().map(|&x| along_x(x)).collect());
        let col = Self::curve(self.ys.clone(), self.ys.iter().map(|&y| along_y(y)).collect());
        let row = normalize_orientation_at(&row, cx)?;
        let col = normalize_orientation_at(&col, cy)?;
        Ok((
            measure_width_refined(&row, cx, along_x)?,
            measure_width_refined(&col, cy, along_y)?,
        ))
    }

    /// Iso-line at `level` (raw values) by marching squares, as straight
    /// segments with linear interpolation along cell edges.
    pub fn contour(&self, level: f64) -> Vec<Segment> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut segments = Vec::new();
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                // Corners counter-clockwise from bottom-left.
                let corners = [
                    (self.xs[ix], self.ys[iy], self.value(ix, iy)),
                    (self.xs[ix + 1], self.ys[iy], self.value(ix + 1, iy)),
                    (self.xs[ix + 1], self.ys[iy + 1], self.value(ix + 1, iy + 1)),
                    (self.xs[ix], self.ys[iy + 1], self.value(ix, iy + 1)),
                ];
                let mut hits = Vec::with_capacity(4);
                for e in 0..4 {
                    let (x0, y0, v0) = corners[e];
                    let (x1, y1, v1) = corners[(e + 1) % 4];
                    if (v0 >= level) != (v1 >= level) {
                        let t = (level - v0) / (v1 - v0);
                        hits.push((x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
                    }
                }
                match hits.len() {
                    2 => segments.push([hits[0], hits[1]]),
                    // Saddle: pair edges in order, which keeps the
                    // above-level corners on the same side of each segment.
                    4 => {
                        segments.push([hits[0], hits[1]]);
                        segments.push([hits[2], hits[3]]);
                    }
                    _ => {}
                }
            }
        }
        segments
    }

    /// Contour at the half level of the feature at `center`, taken from the
    /// x-axis width measurement.
    pub fn half_level_contour(&self, center: (f64, f64)) -> Result<Vec<Segment>> {
        let iy = Self::nearest(&self.ys, center.1);
        let row = normalize_orientation_at(&self.row(iy), center.0)?;
        let w = measure_width(&row, center.0)?;
        let raw = (w.half_level - row.normalization.shift) / row.normalization.scale;
        Ok(self.contour(raw))
    }
}
