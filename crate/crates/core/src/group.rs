//! Co-compact Fuchsian groups given by the side pairings of a Dirichlet polygon
//! centred at the origin of the disk.
//!
//! Side `j` of the polygon is the perpendicular bisector between `0` and
//! `c_j = T_j(0)`, where `T_j` is the `j`-th side pairing. A point that leaves
//! through side `j` is brought back by `T_j^{-1}`.

use crate::error::{Error, Result};
use crate::hyperbolic::{
    disk_distance, klein_to_poincare, poincare_to_klein, triangle_area, DiskMap, Sl2, C64,
};
use rand::Rng;
use std::f64::consts::PI;

/// Determinant tolerance for generator validation.
pub const DET_TOL: f64 = 1e-12;

/// Points closer than this to the outside of a side are treated as inside.
const SIDE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SidePairing {
    pub matrix: Sl2,
    pub disk: DiskMap,
    /// Image of the origin; the side is the bisector between `0` and this point.
    pub center: C64,
    /// Index of the inverse pairing.
    pub inverse: usize,
}

#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    name: String,
    generators: Vec<Sl2>,
    pairings: Vec<SidePairing>,
    vertices: Vec<C64>,
    circumradius: f64,
    inradius: f64,
    area: f64,
}

impl FuchsianGroup {
    /// Genus-2 Bolza surface: regular octagon with interior angles `pi/4` and
    /// opposite sides identified. Pairing `k` translates towards the side at
    /// angle `k pi / 4`.
    pub fn bolza() -> Self {
        let alpha = 1.0 + std::f64::consts::SQRT_2;
        let beta = (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt();
        let generators: Vec<Sl2> = (0..4)
            .map(|k| {
                let phase = C64::from_polar(1.0, k as f64 * PI / 4.0);
                let disk = DiskMap::new(alpha.into(), phase * beta, phase.conj() * beta, alpha.into());
                disk.to_sl2().expect("Bolza generators are real after conjugation")
            })
            .collect();
        Self::from_generators("bolza", generators).expect("Bolza preset is valid")
    }

    /// Builds the group from generator matrices; inverses are added as the
    /// remaining side pairings.
    pub fn from_generators(name: &str, generators: Vec<Sl2>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Config("no generators given".into()));
        }
        for (index, g) in generators.iter().enumerate() {
            let det = g.det();
            if (det - 1.0).abs() > DET_TOL {
                return Err(Error::NonUnitDeterminant { index, det, tol: DET_TOL });
            }
        }
        let mut matrices: Vec<Sl2> = generators.clone();
        for g in &generators {
            let inv = g.inverse();
            if !matrices.iter().any(|m| m.projective_distance(&inv) < 1e-9) {
                matrices.push(inv);
            }
        }
        let mut pairings = Vec::with_capacity(matrices.len());
        for m in &matrices {
            let disk = m.to_disk();
            let center = disk.act(C64::new(0.0, 0.0));
            if center.norm() < 1e-9 {
                return Err(Error::Config("a generator fixes the polygon centre".into()));
            }
            pairings.push(SidePairing { matrix: *m, disk, center, inverse: usize::MAX });
        }
        for j in 0..pairings.len() {
            let inv = pairings[j].matrix.inverse();
            let k = pairings
                .iter()
                .position(|p| p.matrix.projective_distance(&inv) < 1e-9)
                .ok_or_else(|| Error::Config("side pairings are not closed under inversion".into()))?;
            pairings[j].inverse = k;
        }

        let vertices = dirichlet_vertices(&pairings)?;
        let origin = C64::new(0.0, 0.0);
        let circumradius = vertices.iter().map(|v| disk_distance(origin, *v)).fold(0.0, f64::max);
        let inradius = pairings
            .iter()
            .map(|p| 0.5 * disk_distance(origin, p.center))
            .fold(f64::INFINITY, f64::min);
        let area = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                triangle_area(disk_distance(origin, a), disk_distance(origin, b), disk_distance(a, b))
            })
            .sum();
        Ok(FuchsianGroup {
            name: name.to_string(),
            generators,
            pairings,
            vertices,
            circumradius,
            inradius,
            area,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[Sl2] {
        &self.generators
    }

    pub fn pairings(&self) -> &[SidePairing] {
        &self.pairings
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    /// Largest distance from the centre to a polygon point.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Hyperbolic area of the fundamental polygon.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Signed violation of side `j`: positive outside.
    #[inline]
    pub fn side_violation(&self, w: C64, j: usize) -> f64 {
        let c = self.pairings[j].center;
        2.0 * (w.re * c.re + w.im * c.im) - c.norm_sqr() * (1.0 + w.norm_sqr())
    }

    /// First side (in index order) that `w` lies outside of.
    #[inline]
    pub fn exit_side(&self, w: C64) -> Option<usize> {
        (0..self.pairings.len()).find(|&j| self.side_violation(w, j) > SIDE_SLACK)
    }

    pub fn contains(&self, w: C64) -> bool {
        self.exit_side(w).is_none()
    }

    /// Pulls `w` back into the polygon. Returns the reduced point and the
    /// accumulated group element `g` with `g(w) = reduced`, or `None` if more
    /// than `max_moves` pairings were needed.
    pub fn reduce(&self, w: C64, max_moves: usize) -> Option<(C64, DiskMap, usize)> {
        let mut cur = w;
        let mut acc = DiskMap::identity();
        let mut moves = 0;
        while let Some(j) = self.exit_side(cur) {
            if moves == max_moves {
                return None;
            }
            let back = &self.pairings[self.pairings[j].inverse].disk;
            cur = back.act(cur);
            acc = back.compose(&acc);
            moves += 1;
        }
        Some((cur, acc, moves))
    }

    /// Same as [`reduce`](Self::reduce) but tracking the `SL(2,R)` element.
    pub fn reduce_matrix(&self, w: C64, max_moves: usize) -> Option<(C64, Sl2, usize)> {
        let mut cur = w;
        let mut acc = Sl2::IDENTITY;
        let mut moves = 0;
        while let Some(j) = self.exit_side(cur) {
            if moves == max_moves {
                return None;
            }
            let back = &self.pairings[self.pairings[j].inverse];
            cur = back.disk.act(cur);
            acc = back.matrix * acc;
            moves += 1;
        }
        Some((cur, acc, moves))
    }

    /// Group element for a word of pairing indices (applied left to right as a product).
    pub fn word_matrix(&self, word: &[usize]) -> Sl2 {
        word.iter().fold(Sl2::IDENTITY, |acc, &j| acc * self.pairings[j].matrix)
    }

    pub fn word_disk(&self, word: &[usize]) -> DiskMap {
        word.iter().fold(DiskMap::identity(), |acc, &j| acc.compose(&self.pairings[j].disk))
    }

    /// All freely reduced words of length at most `max_len` (including the empty word).
    pub fn reduced_words(&self, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for j in 0..self.pairings.len() {
                    if let Some(&last) = w.last() {
                        if self.pairings[last].inverse == j {
                            continue;
                        }
                    }
                    let mut nw: Vec<usize> = w.clone();
                    nw.push(j);
                    next.push(nw);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Random cyclically reduced word of the given length.
    pub fn random_cyclic_word<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let n = self.pairings.len();
        loop {
            let mut w: Vec<usize> = Vec::with_capacity(len);
            while w.len() < len {
                let j = rng.random_range(0..n);
                if let Some(&last) = w.last() {
                    if self.pairings[last].inverse == j {
                        continue;
                    }
                }
                w.push(j);
            }
            if len <= 1 || self.pairings[w[len - 1]].inverse != w[0] {
                return w;
            }
        }
    }

    /// Uniform point of the polygon with respect to hyperbolic area.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> C64 {
        let cosh_r = self.circumradius.cosh();
        loop {
            let c = 1.0 + rng.random::<f64>() * (cosh_r - 1.0);
            let r = c.acosh();
            let angle = rng.random::<f64>() * 2.0 * PI;
            let w = C64::from_polar((0.5 * r).tanh(), angle);
            if self.contains(w) {
                return w;
            }
        }
    }
}

impl FuchsianGroup {
    /// Integral of `f` over the polygon with respect to hyperbolic area, by
    /// Gauss-Legendre quadrature on the fan of triangles from the centre
    /// (straight in the Klein model).
    pub fn integrate<F: Fn(C64) -> f64>(&self, f: F, order: usize) -> f64 {
        let (nodes, weights) = gauss_legendre(order);
        let klein: Vec<C64> = self.vertices.iter().map(|v| poincare_to_klein(*v)).collect();
        let mut total = 0.0;
        for i in 0..klein.len() {
            let a = klein[i];
            let b = klein[(i + 1) % klein.len()];
            let det = (a.re * b.im - a.im * b.re).abs();
            for (s, ws) in nodes.iter().zip(&weights) {
                for (t, wt) in nodes.iter().zip(&weights) {
                    let x = (a * (1.0 - t) + b * *t) * *s;
                    let density = (1.0 - x.norm_sqr()).powf(-1.5);
                    total += ws * wt * s * det * density * f(klein_to_poincare(x));
                }
            }
        }
        total
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (Golub-Welsch).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (0.5 * (eig.eigenvalues[i] + 1.0), eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Vertices of the Dirichlet polygon, computed as a half-plane intersection in
/// the Klein model (where the bisectors are straight lines).
fn dirichlet_vertices(pairings: &[SidePairing]) -> Result<Vec<C64>> {
    // Line j: Re(k * conj(c_j)) = |c_j|^2.
    let lines: Vec<(C64, f64)> = pairings.iter().map(|p| (p.center, p.center.norm_sqr())).collect();
    let mut verts: Vec<C64> = Vec::new();
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            let (n1, o1) = lines[i];
            let (n2, o2) = lines[j];
            let det = n1.re * n2.im - n1.im * n2.re;
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (o1 * n2.im - o2 * n1.im) / det;
            let y = (n1.re * o2 - n2.re * o1) / det;
            let k = C64::new(x, y);
            let feasible = lines
                .iter()
                .all(|(n, o)| k.re * n.re + k.im * n.im <= o + 1e-11);
            if !feasible {
                continue;
            }
            if k.norm() >= 1.0 - 1e-12 {
                return Err(Error::Config("fundamental polygon is not compact".into()));
            }
            if !verts.iter().any(|v| (*v - k).norm() < 1e-9) {
                verts.push(k);
            }
        }
    }
    if verts.len() < 3 {
        return Err(Error::Config("side pairings do not bound a polygon".into()));
    }
    verts.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    Ok(verts.into_iter().map(klein_to_poincare).collect())
}
