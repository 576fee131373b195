//! Quadrature on piecewise-uniform label grids.
//!
//! A grid is a non-decreasing array made of uniformly spaced pieces. Pieces
//! either share a node where the spacing changes, or are separated by a
//! repeated value `z[k] == z[k + 1]`: a breakpoint where the fields may jump
//! (the two nodes hold the one-sided limits). Integrals are trapezoid sums
//! corrected by the leading Euler-Maclaurin end terms of every piece, which
//! makes them fourth order for piecewise smooth integrands.

/// Index range `start..=end` of one uniform piece and its spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: usize,
    pub end: usize,
    pub h: f64,
}

impl Piece {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Relative change in cell width that starts a new piece.
const SPACING_TOL: f64 = 1e-6;

pub fn pieces(z: &[f64]) -> Vec<Piece> {
    let n = z.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut start = 0;
    let mut k = 0;
    while k + 1 < n {
        let width = z[k + 1] - z[k];
        if width == 0.0 {
            push_piece(&mut out, z, start, k);
            start = k + 1;
        } else if k > start {
            let prev = z[k] - z[k - 1];
            if (width - prev).abs() > SPACING_TOL * width.max(prev) {
                push_piece(&mut out, z, start, k);
                start = k;
            }
        }
        k += 1;
    }
    push_piece(&mut out, z, start, n - 1);
    out
}

fn push_piece(out: &mut Vec<Piece>, z: &[f64], start: usize, end: usize) {
    let h = if end > start {
        (z[end] - z[start]) / (end - start) as f64
    } else {
        0.0
    };
    out.push(Piece { start, end, h });
}

/// Largest spacing over all pieces.
pub fn max_spacing(z: &[f64]) -> f64 {
    pieces(z).iter().map(|p| p.h).fold(0.0, f64::max)
}

/// `true` at the two nodes of every breakpoint.
pub fn breakpoint_mask(z: &[f64]) -> Vec<bool> {
    let mut mask = vec![false; z.len()];
    for k in 0..z.len().saturating_sub(1) {
        if z[k + 1] == z[k] {
            mask[k] = true;
            mask[k + 1] = true;
        }
    }
    mask
}

/// Second-order derivative within each piece (one-sided at piece ends; a node
/// shared by two pieces takes the stencil of the right one).
pub fn derivative(z: &[f64], f: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; f.len()];
    for p in pieces(z) {
        let (a, b, h) = (p.start, p.end, p.h);
        match p.len() {
            1 => {}
            2 => {
                let s = (f[b] - f[a]) / h;
                d[a] = s;
                d[b] = s;
            }
            _ => {
                d[a] = (-3.0 * f[a] + 4.0 * f[a + 1] - f[a + 2]) / (2.0 * h);
                d[b] = (3.0 * f[b] - 4.0 * f[b - 1] + f[b - 2]) / (2.0 * h);
                for i in a + 1..b {
                    d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
                }
            }
        }
    }
    d
}

/// Plain trapezoid weights (zero-width breakpoint cells contribute nothing).
pub fn node_weights(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut wts = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let half = 0.5 * (z[k + 1] - z[k]);
        wts[k] += half;
        wts[k + 1] += half;
    }
    wts
}

/// `int f dZ` over the whole grid, given `f` and its derivative `f_z`.
pub fn integrate(z: &[f64], f: &[f64], f_z: &[f64]) -> f64 {
    let trap: f64 = node_weights(z).iter().zip(f).map(|(w, a)| w * a).sum();
    let correction: f64 = pieces(z)
        .iter()
        .map(|p| p.h * p.h / 12.0 * (f_z[p.end] - f_z[p.start]))
        .sum();
    trap - correction
}

/// Running integral `int_{Z_0}^{Z_i} f dZ` at every node.
pub fn cumulative(z: &[f64], f: &[f64], f_z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut out = vec![0.0; n];
    let mut base = 0.0;
    for p in pieces(z) {
        let c = p.h * p.h / 12.0;
        let mut trap = 0.0;
        out[p.start] = base;
        for i in p.start + 1..=p.end {
            trap += 0.5 * (z[i] - z[i - 1]) * (f[i - 1] + f[i]);
            out[i] = base + trap - c * (f_z[i] - f_z[p.start]);
        }
        base = out[p.end];
    }
    out
}
