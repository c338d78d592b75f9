//! The regular hyperbolic octagon with opposite sides paired.
//!
//! Sides are centred at angles `k pi/4`; vertices sit at angles
//! `pi/8 + k pi/4`. The side pairing `g_0` maps the side at angle `pi`
//! to the side at angle `0`:
//!
//! `g_0(z) = (A z + B) / (B z + A)`, `A = 1 + sqrt 2`, `B = sqrt(2 + 2 sqrt 2)`,
//!
//! and `g_k = R_k g_0 R_k^{-1}` with `R_k` the rotation by `k pi/4`, so
//! `g_{k+4} = g_k^{-1}`.

use std::sync::OnceLock;

use nalgebra::Complex;

use super::UnitTangentState;

type C = Complex<f64>;

/// Möbius transformation `(a z + b) / (c z + d)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl Mobius {
    pub fn identity() -> Self {
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        Self {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn apply(&self, z: C) -> C {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// `arg g'(z) = -2 arg(c z + d)`.
    pub fn derivative_arg(&self, z: C) -> f64 {
        -2.0 * (self.c * z + self.d).arg()
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Distance to `±identity` in matrix entries.
    pub fn distance_to_identity(&self) -> f64 {
        let id = Mobius::identity();
        let plus = (self.a - id.a).norm()
            + (self.b - id.b).norm()
            + (self.c - id.c).norm()
            + (self.d - id.d).norm();
        let minus = (self.a + id.a).norm()
            + (self.b + id.b).norm()
            + (self.c + id.c).norm()
            + (self.d + id.d).norm();
        plus.min(minus)
    }

    /// Image of a unit tangent state; the direction is rotated by
    /// `arg g'(z)`.
    pub fn apply_state(&self, v: &UnitTangentState) -> UnitTangentState {
        let z = C::new(v.position[0], v.position[1]);
        let w = self.apply(z);
        let rot = self.derivative_arg(z);
        let (s, c) = rot.sin_cos();
        let [dx, dy] = v.direction;
        UnitTangentState {
            position: [w.re, w.im],
            direction: [c * dx - s * dy, s * dx + c * dy],
            t: v.t,
        }
    }
}

/// Generator `g_k`, `k = 0..8`.
pub fn generator(k: usize) -> Mobius {
    generators()[k % 8]
}

pub fn generators() -> &'static [Mobius; 8] {
    static G: OnceLock<[Mobius; 8]> = OnceLock::new();
    G.get_or_init(|| {
        let a = 1.0 + 2f64.sqrt();
        let b = (2.0 + 2.0 * 2f64.sqrt()).sqrt();
        std::array::from_fn(|k| {
            let phi = k as f64 * std::f64::consts::FRAC_PI_4;
            let e = C::from_polar(1.0, phi);
            Mobius {
                a: C::new(a, 0.0),
                b: e * b,
                c: e.conj() * b,
                d: C::new(a, 0.0),
            }
        })
    })
}

/// Identity, the eight generators and all reduced words of length two.
pub fn neighbour_elements() -> &'static [Mobius] {
    static N: OnceLock<Vec<Mobius>> = OnceLock::new();
    N.get_or_init(|| {
        let g = generators();
        let mut v = vec![Mobius::identity()];
        v.extend_from_slice(g);
        for i in 0..8 {
            for j in 0..8 {
                if j != (i + 4) % 8 {
                    v.push(g[i].compose(&g[j]));
                }
            }
        }
        v
    })
}

/// Hyperbolic translation length of each generator for curvature `-1`:
/// `2 arccosh(1 + sqrt 2)`.
pub fn translation_length() -> f64 {
    2.0 * (1.0 + 2f64.sqrt()).acosh()
}

/// Euclidean radius of the side midpoints, `tanh(d/4)`.
pub fn side_midpoint_radius() -> f64 {
    (translation_length() / 4.0).tanh()
}

/// Euclidean radius of the vertices, `2^{-1/4}`.
pub fn vertex_radius() -> f64 {
    2f64.powf(-0.25)
}

/// Greedily apply the generator that most decreases `|z|` until none
/// does. The result lies in the closed Dirichlet domain centred at 0.
pub fn reduce_point(z: C) -> (C, Vec<u8>, Mobius) {
    let g = generators();
    let mut z = z;
    let mut word = Vec::new();
    let mut total = Mobius::identity();
    for _ in 0..10_000 {
        let r = z.norm();
        let mut best: Option<(usize, C, f64)> = None;
        for (k, gk) in g.iter().enumerate() {
            let w = gk.apply(z);
            let rw = w.norm();
            if rw < r - 1e-14 && best.map_or(true, |(_, _, b)| rw < b) {
                best = Some((k, w, rw));
            }
        }
        match best {
            Some((k, w, _)) => {
                z = w;
                word.push(k as u8);
                total = g[k].compose(&total);
            }
            None => break,
        }
    }
    (z, word, total)
}

pub fn reduce_state(v: &UnitTangentState) -> (UnitTangentState, Vec<u8>) {
    let (_, word, m) = reduce_point(C::new(v.position[0], v.position[1]));
    if word.is_empty() {
        return (*v, word);
    }
    (m.apply_state(v).normalised(), word)
}

/// `true` if no generator moves `z` closer to the origin (beyond `tol`).
pub fn in_domain(z: C, tol: f64) -> bool {
    let r = z.norm();
    generators().iter().all(|g| g.apply(z).norm() >= r - tol)
}
