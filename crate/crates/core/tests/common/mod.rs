//! Shared helpers for integration tests: an independent eigenvalue oracle,
//! random systems and synthetic cavity fields.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use cavmag::fieldmap::{FieldSample, SphereRegion};
use cavmag::{ComplexMatrix, CouplingEdge, ModeSpec, SystemModel};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Eigenvalue oracle.
//
// The leading principal minors of H − λI are the characteristic polynomials
// of the leading submatrices evaluated at λ. Their ratios are the pivots of
// an LDLᴴ factorization, and by Sylvester's law of inertia the number of
// negative pivots equals the number of eigenvalues below λ. Bisection on
// that count isolates every eigenvalue without any iterative rotation.

/// Number of eigenvalues of the Hermitian `h` strictly below `lambda`.
pub fn count_below(h: &ComplexMatrix, lambda: f64) -> usize {
    let n = h.dim();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| h[(i, j)]).collect()).collect();
    for i in 0..n {
        a[i][i] -= Complex64::new(lambda, 0.0);
    }
    let tiny = 1e-300_f64.max(f64::EPSILON * f64::EPSILON * h.frobenius_norm().max(1.0));
    let mut negatives = 0;
    for k in 0..n {
        let mut d = a[k][k].re;
        if d == 0.0 {
            d = tiny;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let l = a[i][k] / d;
            for j in k + 1..n {
                let v = l * a[k][j];
                a[i][j] -= v;
            }
        }
    }
    negatives
}

/// All eigenvalues, ascending, by bisection on [`count_below`].
pub fn oracle_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    // Gershgorin bound
    let bound = (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                // eigenvalue k is the smallest λ with count_below(λ) > k
                if count_below(h, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(rng.random_range(-scale..scale), 0.0);
        for j in i + 1..dim {
            let z = Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Random bipartite systems.

pub fn random_system(rng: &mut ChaCha8Rng, max_photons: usize, max_magnons: usize) -> SystemModel {
    let np = rng.random_range(1..=max_photons);
    let nm = rng.random_range(1..=max_magnons);
    let mut modes = Vec::new();
    for k in 0..np {
        modes.push(ModeSpec::photon(format!("c{}", k + 1), rng.random_range(3.0..9.0)));
    }
    for l in 0..nm {
        modes.push(ModeSpec::magnon(format!("m{}", l + 1), rng.random_range(3.0..9.0)));
    }
    let mut edges = Vec::new();
    for k in 0..np {
        for l in 0..nm {
            if rng.random_bool(0.6) {
                edges.push(CouplingEdge::new(
                    format!("c{}", k + 1),
                    format!("m{}", l + 1),
                    rng.random_range(1.0..300.0),
                    rng.random_range(-PI..PI),
                ));
            }
        }
    }
    SystemModel::new(modes, edges, vec![]).expect("generated system is valid")
}

pub fn random_vertex_phases(rng: &mut ChaCha8Rng, system: &SystemModel) -> BTreeMap<String, f64> {
    system
        .modes()
        .iter()
        .map(|m| (m.label.clone(), rng.random_range(-10.0..10.0)))
        .collect()
}

/// Number of connected components among modes that carry a coupling,
/// counted by union–find (independent of the gauge module's BFS).
pub fn components(system: &SystemModel) -> (usize, usize) {
    let labels: Vec<&str> = system
        .modes()
        .iter()
        .map(|m| m.label.as_str())
        .filter(|l| system.edges().iter().any(|e| e.photon == *l || e.magnon == *l))
        .collect();
    let idx = |l: &str| labels.iter().position(|x| *x == l).unwrap();
    let mut parent: Vec<usize> = (0..labels.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for e in system.edges() {
        let (a, b) = (find(&mut parent, idx(&e.photon)), find(&mut parent, idx(&e.magnon)));
        parent[a] = b;
    }
    let roots = (0..labels.len()).filter(|&i| find(&mut parent, i) == i).count();
    (labels.len(), roots)
}

// ---------------------------------------------------------------------------
// Synthetic cavity fields.

/// Post spacing and sphere radius (470 µm spheres).
pub const POST_SPACING: f64 = 4e-3;
pub const SPHERE_RADIUS: f64 = 235e-6;
const POST_CORE: f64 = 0.5e-3;

pub fn sphere_regions() -> Vec<SphereRegion> {
    let d = POST_SPACING;
    vec![
        SphereRegion::new("m1", [-0.5 * d, 0.0, 0.0], SPHERE_RADIUS).unwrap(),
        SphereRegion::new("m2", [0.5 * d, 0.0, 0.0], SPHERE_RADIUS).unwrap(),
    ]
}

/// Magnetic field circulating around vertical posts at x = −d, 0, +d with
/// currents `currents`, regularized inside a core of radius `POST_CORE`.
pub fn post_field(currents: [f64; 3], p: [f64; 3]) -> [f64; 3] {
    let d = POST_SPACING;
    let mut h = [0.0; 3];
    for (i, x0) in [-d, 0.0, d].iter().enumerate() {
        let (rx, ry) = (p[0] - x0, p[1]);
        let s = currents[i] / (rx * rx + ry * ry + POST_CORE * POST_CORE);
        // ẑ × ρ
        h[0] += -ry * s;
        h[1] += rx * s;
    }
    // gentle standing-wave envelope along the posts
    let env = (PI * p[2] / (8.0 * d)).cos();
    [h[0] * env, h[1] * env, 0.0]
}

/// Midpoint quadrature of a ball of radius `radius` in spherical
/// coordinates: `n` radial, `n` polar and `2n` azimuthal cells.
pub fn ball_quadrature(center: [f64; 3], r0: f64, r1: f64, n: usize, out: &mut Vec<([f64; 3], f64)>) {
    let dr = (r1 - r0) / n as f64;
    let dt = PI / n as f64;
    let dp = PI / n as f64;
    for i in 0..n {
        let r = r0 + (i as f64 + 0.5) * dr;
        for j in 0..n {
            let t = (j as f64 + 0.5) * dt;
            for k in 0..2 * n {
                let ph = (k as f64 + 0.5) * dp;
                let w = r * r * t.sin() * dr * dt * dp;
                let p = [
                    center[0] + r * t.sin() * ph.cos(),
                    center[1] + r * t.sin() * ph.sin(),
                    center[2] + r * t.cos(),
                ];
                out.push((p, w));
            }
        }
    }
}

/// Samples of a field: spherical quadrature on each sphere plus a coarse
/// cartesian grid over the cavity box away from the spheres.
pub fn cavity_samples(field: impl Fn([f64; 3]) -> [f64; 3], sphere_n: usize, box_n: usize) -> Vec<FieldSample> {
    let regions = sphere_regions();
    let mut pts = Vec::new();
    for r in &regions {
        ball_quadrature(r.center, 0.0, r.radius, sphere_n, &mut pts);
    }
    let d = POST_SPACING;
    let (hx, hy, hz) = (2.0 * d, 1.0 * d, 4.0 * d);
    let (sx, sy, sz) = (2.0 * hx / box_n as f64, 2.0 * hy / box_n as f64, 2.0 * hz / box_n as f64);
    for i in 0..box_n {
        for j in 0..box_n {
            for k in 0..box_n {
                let p = [
                    -hx + (i as f64 + 0.5) * sx,
                    -hy + (j as f64 + 0.5) * sy,
                    -hz + (k as f64 + 0.5) * sz,
                ];
                if regions.iter().any(|r| r.contains(p)) {
                    continue;
                }
                pts.push((p, sx * sy * sz));
            }
        }
    }
    pts.into_iter()
        .map(|(p, w)| FieldSample::real(p, field(p), w))
        .collect()
}

/// Mode 1: opposite currents on the outer posts, field along −ŷ at both spheres.
pub const MODE_SAME: [f64; 3] = [-1.0, 0.0, 1.0];
/// Mode 2: current on the centre post, field reversed between the spheres.
pub const MODE_OPPOSITE: [f64; 3] = [0.0, -1.0, 0.0];
/// Third mode of the three-mode device: centre post dominant, outer posts
/// carrying a weaker co-directed current.
pub const MODE_OPPOSITE_DRESSED: [f64; 3] = [-0.3, -1.0, -0.3];
