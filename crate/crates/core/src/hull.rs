//! Upper concave envelopes of height fields on index lattices.
//!
//! 1D uses a monotone-chain sweep. 2D lifts the samples to `(i, j, z)` and
//! builds their 3D convex hull incrementally (farthest point first), with
//! orientation tests done exactly on integers: lattice indices as they are,
//! heights rounded to a fixed scale of `2^40 / max|z|`. The upper faces are
//! then rasterized back onto the lattice, interpolating the original
//! floating-point heights.

use std::collections::HashMap;

/// Indices of the upper-hull vertices of the points `(k, ys[k])`, left to right.
pub fn upper_hull_1d(ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(ys.len());
    for k in 0..ys.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b unless it lies strictly above the chord a-k
            let cross = (b - a) as f64 * (ys[k] - ys[a]) - (ys[b] - ys[a]) * (k - a) as f64;
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Concave envelope of `(k, ys[k])` evaluated at every `k`.
pub fn upper_envelope_1d(ys: &[f64]) -> Vec<f64> {
    let hull = upper_hull_1d(ys);
    let mut out = ys.to_vec();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a) as f64;
        for (k, o) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (k - a) as f64 / len;
            *o = ys[a] * (1.0 - t) + ys[b] * t;
        }
    }
    out
}

type P3 = [i128; 3];

fn orient(a: &P3, b: &P3, c: &P3, d: &P3) -> i128 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

struct Face {
    v: [usize; 3],
    /// `nb[k]` is the face across edge `v[k] -> v[(k+1)%3]`.
    nb: [usize; 3],
    outside: Vec<usize>,
    alive: bool,
}

struct Hull<'a> {
    pts: &'a [P3],
    faces: Vec<Face>,
}

impl<'a> Hull<'a> {
    fn sees(&self, f: usize, p: usize) -> i128 {
        let v = self.faces[f].v;
        orient(&self.pts[v[0]], &self.pts[v[1]], &self.pts[v[2]], &self.pts[p])
    }

    fn edge_index(&self, f: usize, a: usize, b: usize) -> usize {
        let v = self.faces[f].v;
        (0..3)
            .find(|&k| v[k] == a && v[(k + 1) % 3] == b)
            .expect("adjacent faces share the edge")
    }

    fn assign(&mut self, candidates: &[usize], faces: &[usize]) {
        for &p in candidates {
            if let Some(&f) = faces.iter().find(|&&f| self.sees(f, p) > 0) {
                self.faces[f].outside.push(p);
            }
        }
    }

    fn add_point(&mut self, start: usize, p: usize) -> Vec<usize> {
        // visible faces by flood fill from a face the point sees
        let mut visible = vec![start];
        let mut mark: HashMap<usize, bool> = HashMap::new();
        mark.insert(start, true);
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new(); // (a, b, hidden face)
        let mut i = 0;
        while i < visible.len() {
            let f = visible[i];
            i += 1;
            for k in 0..3 {
                let g = self.faces[f].nb[k];
                match mark.get(&g) {
                    Some(true) => continue,
                    Some(false) => {}
                    None => {
                        let vis = self.sees(g, p) > 0;
                        mark.insert(g, vis);
                        if vis {
                            visible.push(g);
                            continue;
                        }
                    }
                }
                let v = self.faces[f].v;
                horizon.push((v[k], v[(k + 1) % 3], g));
            }
        }
        let mut orphans = Vec::new();
        for &f in &visible {
            self.faces[f].alive = false;
            orphans.append(&mut self.faces[f].outside);
        }
        let mut by_start: HashMap<usize, usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(horizon.len());
        for &(a, b, hidden) in &horizon {
            let id = self.faces.len();
            self.faces.push(Face { v: [a, b, p], nb: [hidden, usize::MAX, usize::MAX], outside: Vec::new(), alive: true });
            let k = self.edge_index(hidden, b, a);
            self.faces[hidden].nb[k] = id;
            by_start.insert(a, id);
            new_faces.push(id);
        }
        for &id in &new_faces {
            let b = self.faces[id].v[1];
            // edge b -> p borders the new face starting at b
            let next = by_start[&b];
            self.faces[id].nb[1] = next;
            self.faces[next].nb[2] = id;
        }
        orphans.retain(|&q| q != p);
        self.assign(&orphans, &new_faces);
        new_faces
    }
}

/// Concave envelope of a height field `z` on an `n0 × n1` index lattice
/// (row-major), relative to the lattice box.
pub fn upper_envelope_2d(n0: usize, n1: usize, z: &[f64]) -> Vec<f64> {
    assert_eq!(z.len(), n0 * n1);
    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if n0 < 2 || n1 < 2 || zmax == 0.0 {
        return z.to_vec();
    }
    let scale = (1u64 << 40) as f64 / zmax;
    let pts: Vec<P3> = (0..n0 * n1)
        .map(|k| [(k / n1) as i128, (k % n1) as i128, (z[k] * scale).round() as i128])
        .collect();

    // initial simplex: two opposite corners, a third corner, then the point
    // farthest from their plane
    let c0 = 0;
    let c1 = n0 * n1 - 1;
    let c2 = n1 - 1;
    let mut best = 0i128;
    let mut c3 = usize::MAX;
    for k in 0..pts.len() {
        let o = orient(&pts[c0], &pts[c1], &pts[c2], &pts[k]).abs();
        if o > best {
            best = o;
            c3 = k;
        }
    }
    if c3 == usize::MAX {
        // all samples coplanar: the field is affine
        return z.to_vec();
    }
    let (a, b, c, d) = if orient(&pts[c0], &pts[c1], &pts[c2], &pts[c3]) < 0 {
        (c0, c1, c2, c3)
    } else {
        (c0, c2, c1, c3)
    };
    // with orient(a,b,c,d) < 0 the faces below face outward
    let tri = [[a, b, c], [a, d, b], [b, d, c], [c, d, a]];
    let mut faces: Vec<Face> =
        tri.iter().map(|&v| Face { v, nb: [usize::MAX; 3], outside: Vec::new(), alive: true }).collect();
    for f in 0..4 {
        for k in 0..3 {
            let (x, y) = (faces[f].v[k], faces[f].v[(k + 1) % 3]);
            let g = (0..4)
                .find(|&g| g != f && (0..3).any(|m| faces[g].v[m] == y && faces[g].v[(m + 1) % 3] == x))
                .expect("tetrahedron is closed");
            faces[f].nb[k] = g;
        }
    }
    let mut hull = Hull { pts: &pts, faces };
    let rest: Vec<usize> = (0..pts.len()).filter(|&k| ![a, b, c, d].contains(&k)).collect();
    hull.assign(&rest, &[0, 1, 2, 3]);

    let mut stack: Vec<usize> = (0..4).collect();
    while let Some(f) = stack.pop() {
        if !hull.faces[f].alive || hull.faces[f].outside.is_empty() {
            continue;
        }
        let p = *hull.faces[f]
            .outside
            .iter()
            .max_by_key(|&&q| (hull.sees(f, q), std::cmp::Reverse(q)))
            .unwrap();
        let created = hull.add_point(f, p);
        stack.extend(created.into_iter().filter(|&g| !hull.faces[g].outside.is_empty()));
    }

    let mut out = vec![f64::NAN; z.len()];
    for face in hull.faces.iter().filter(|f| f.alive) {
        let [pa, pb, pc] = face.v.map(|k| pts[k]);
        let area = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        if area <= 0 {
            // lower or vertical face
            continue;
        }
        rasterize(&face.v, &pts, area, z, n1, &mut out);
    }
    for (o, &v) in out.iter_mut().zip(z) {
        if o.is_nan() {
            debug_assert!(false, "lattice node not covered by an upper face");
            *o = v;
        }
    }
    out
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

fn rasterize(v: &[usize; 3], pts: &[P3], area: i128, z: &[f64], n1: usize, out: &mut [f64]) {
    let p = v.map(|k| pts[k]);
    let imin = p.iter().map(|q| q[0]).min().unwrap();
    let imax = p.iter().map(|q| q[0]).max().unwrap();
    let total = area as f64;
    for i in imin..=imax {
        let mut jlo = i128::MIN;
        let mut jhi = i128::MAX;
        let mut empty = false;
        for k in 0..3 {
            let (s, e) = (p[k], p[(k + 1) % 3]);
            // inside: (e - s) × (q - s) >= 0, i.e. dx·(j - sj) - dj·(i - si) >= 0
            let dx = e[0] - s[0];
            let dj = e[1] - s[1];
            let rhs = dj * (i - s[0]) + dx * s[1];
            if dx > 0 {
                jlo = jlo.max(div_ceil(rhs, dx));
            } else if dx < 0 {
                jhi = jhi.min(div_floor(rhs, dx));
            } else if rhs > 0 {
                empty = true;
            }
        }
        if empty || jlo > jhi {
            continue;
        }
        for j in jlo..=jhi {
            let q = [i, j];
            let w = |s: &P3, e: &P3| (e[0] - s[0]) * (q[1] - s[1]) - (e[1] - s[1]) * (q[0] - s[0]);
            let wa = w(&p[1], &p[2]);
            let wb = w(&p[2], &p[0]);
            let wc = w(&p[0], &p[1]);
            let za = z[v[0]];
            let zb = z[v[1]];
            let zc = z[v[2]];
            let val = if wb == 0 && wc == 0 {
                za
            } else if wa == 0 && wc == 0 {
                zb
            } else if wa == 0 && wb == 0 {
                zc
            } else {
                (wa as f64 * za + wb as f64 * zb + wc as f64 * zc) / total
            };
            let k = i as usize * n1 + j as usize;
            // shared edges are visited twice; keep the larger (equal up to rounding)
            if out[k].is_nan() || val > out[k] {
                out[k] = val;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Envelope at each node by linear programming over all triangles of
    /// sample points would be cubic; instead check the two defining
    /// properties against every affine function through three samples.
    fn check_envelope_2d(n0: usize, n1: usize, z: &[f64], env: &[f64]) {
        for k in 0..z.len() {
            assert!(env[k] >= z[k] - 1e-9);
        }
        // discrete concavity along axes and diagonals
        let at = |i: usize, j: usize| env[i * n1 + j];
        for i in 1..n0 - 1 {
            for j in 1..n1 - 1 {
                let c = 2.0 * at(i, j);
                assert!(at(i + 1, j) + at(i - 1, j) - c <= 1e-9);
                assert!(at(i, j + 1) + at(i, j - 1) - c <= 1e-9);
                assert!(at(i + 1, j + 1) + at(i - 1, j - 1) - c <= 1e-9);
                assert!(at(i + 1, j - 1) + at(i - 1, j + 1) - c <= 1e-9);
            }
        }
    }

    #[test]
    fn one_dimensional_hull() {
        let ys = [0.0, 1.0, 0.5, 0.5, 2.0, 0.0];
        assert_eq!(upper_hull_1d(&ys), vec![0, 1, 4, 5]);
        let env = upper_envelope_1d(&ys);
        assert_eq!(env[1], 1.0);
        assert!((env[2] - (1.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(env[5], 0.0);
        let concave: Vec<f64> = (0..20).map(|k| -((k as f64) - 7.3).powi(2)).collect();
        assert_eq!(upper_envelope_1d(&concave), concave);
    }

    #[test]
    fn concave_field_is_fixed() {
        let (n0, n1) = (17, 23);
        let z: Vec<f64> = (0..n0 * n1)
            .map(|k| {
                let (i, j) = ((k / n1) as f64, (k % n1) as f64);
                -0.3 * (i - 8.0).powi(2) - 0.1 * (j - 5.0).powi(2) + 0.05 * (i - 8.0) * (j - 5.0)
            })
            .collect();
        let env = upper_envelope_2d(n0, n1, &z);
        for (a, b) in env.iter().zip(&z) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_and_flat_fields() {
        let z: Vec<f64> = (0..30).map(|k| 0.5 * (k / 6) as f64 - 0.25 * (k % 6) as f64).collect();
        assert_eq!(upper_envelope_2d(5, 6, &z), z);
        assert_eq!(upper_envelope_2d(5, 6, &vec![0.0; 30]), vec![0.0; 30]);
    }

    #[test]
    fn random_fields_against_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n0 = rng.gen_range(2..25);
            let n1 = rng.gen_range(2..25);
            let z: Vec<f64> = (0..n0 * n1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let env = upper_envelope_2d(n0, n1, &z);
            check_envelope_2d(n0, n1, &z, &env);
            // minimality: every node where the envelope is above the data is a
            // convex combination point, so the maximum is attained at a sample
            let zmax = z.iter().cloned().fold(f64::MIN, f64::max);
            let emax = env.iter().cloned().fold(f64::MIN, f64::max);
            assert!((zmax - emax).abs() < 1e-12);
        }
    }

    /// Envelope value at a node: the best interpolation over every sample
    /// triangle whose projection contains it.
    fn triangle_oracle(n0: usize, n1: usize, z: &[f64]) -> Vec<f64> {
        let n = n0 * n1;
        let xy = |k: usize| ((k / n1) as f64, (k % n1) as f64);
        let mut out = z.to_vec();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (pa, pb, pc) = (xy(a), xy(b), xy(c));
                    let area = (pb.0 - pa.0) * (pc.1 - pa.1) - (pb.1 - pa.1) * (pc.0 - pa.0);
                    if area == 0.0 {
                        continue;
                    }
                    for q in 0..n {
                        let pq = xy(q);
                        let w = |s: (f64, f64), e: (f64, f64)| {
                            ((e.0 - s.0) * (pq.1 - s.1) - (e.1 - s.1) * (pq.0 - s.0)) / area
                        };
                        let (wa, wb, wc) = (w(pb, pc), w(pc, pa), w(pa, pb));
                        if wa >= 0.0 && wb >= 0.0 && wc >= 0.0 {
                            out[q] = out[q].max(wa * z[a] + wb * z[b] + wc * z[c]);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_triangle_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let (n0, n1) = (rng.gen_range(2..6), rng.gen_range(2..6));
            let z: Vec<f64> = (0..n0 * n1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let env = upper_envelope_2d(n0, n1, &z);
            let oracle = triangle_oracle(n0, n1, &z);
            for (a, b) in env.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn pyramid_of_four_peaks() {
        // corners high, centre low: envelope is the bilinear-free plane through the corners
        let n = 9;
        let mut z = vec![-1.0; n * n];
        for &k in &[0, n - 1, n * (n - 1), n * n - 1] {
            z[k] = 1.0;
        }
        let env = upper_envelope_2d(n, n, &z);
        for v in env {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
