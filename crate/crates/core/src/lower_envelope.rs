//! Linear-time `min_j f[j] + c·(i - j)²` by the lower envelope of parabolas.

/// Scratch buffers reused across calls.
#[derive(Default)]
pub struct Scratch {
    v: Vec<usize>,
    z: Vec<f64>,
}

/// `out[i] = min_j f[j] + c·(i - j)²` for `c > 0`.
pub fn parabola_min(f: &[f64], c: f64, out: &mut [f64], s: &mut Scratch) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    debug_assert!(c > 0.0);
    if n == 0 {
        return;
    }
    s.v.clear();
    s.z.clear();
    s.v.push(0);
    s.z.push(f64::NEG_INFINITY);
    let key = |q: usize| f[q] + c * (q as f64) * (q as f64);
    for q in 1..n {
        loop {
            let p = *s.v.last().unwrap();
            let x = (key(q) - key(p)) / (2.0 * c * (q - p) as f64);
            if x <= *s.z.last().unwrap() {
                s.v.pop();
                s.z.pop();
                if s.v.is_empty() {
                    s.v.push(q);
                    s.z.push(f64::NEG_INFINITY);
                    break;
                }
            } else {
                s.v.push(q);
                s.z.push(x);
                break;
            }
        }
    }
    let mut k = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let x = i as f64;
        while k + 1 < s.v.len() && s.z[k + 1] < x {
            k += 1;
        }
        // ties at a breakpoint: take the smaller of the two neighbours
        let mut best = {
            let d = x - s.v[k] as f64;
            f[s.v[k]] + c * d * d
        };
        if k + 1 < s.v.len() {
            let d = x - s.v[k + 1] as f64;
            best = best.min(f[s.v[k + 1]] + c * d * d);
        }
        *o = best;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &[f64], c: f64) -> Vec<f64> {
        (0..f.len())
            .map(|i| {
                (0..f.len())
                    .map(|j| f[j] + c * (i as f64 - j as f64).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = Scratch::default();
        for _ in 0..50 {
            let n = rng.gen_range(1..200);
            let c = rng.gen_range(1e-4..3.0);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut out = vec![0.0; n];
            parabola_min(&f, c, &mut out, &mut s);
            let b = brute(&f, c);
            for (a, b) in out.iter().zip(&b) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_input_is_fixed() {
        let f = vec![2.5; 17];
        let mut out = vec![0.0; 17];
        parabola_min(&f, 0.3, &mut out, &mut Scratch::default());
        assert!(out.iter().all(|v| *v == 2.5));
    }
}
