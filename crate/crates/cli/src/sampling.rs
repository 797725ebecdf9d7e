use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent stream per purpose, so adding draws to one suite leaves the
/// others unchanged.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform points in the open ball of radius `radius`.
pub fn ball_points(rng: &mut ChaCha8Rng, n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s: f64 = x.iter().map(|v| v * v).sum();
            if s < 1.0 {
                break x.iter().map(|v| v * radius).collect();
            }
        })
        .collect()
}

/// Uniform unit vectors.
pub fn directions(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if s > 1e-3 && s < 1.0 {
                break x.iter().map(|v| v / s).collect();
            }
        })
        .collect()
}
