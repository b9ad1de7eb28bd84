use rayon::prelude::*;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f32 = 1e-8;

/// Dense adaptive-moment optimizer over a flat f32 parameter vector.
///
/// Each coordinate is updated independently, so the parallel update is
/// deterministic regardless of thread count.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    m: Vec<f32>,
    v: Vec<f32>,
    t: u64,
}

const CHUNK: usize = 1 << 14;

impl Adam {
    pub fn new(len: usize, lr: f32) -> Self {
        Self { lr, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f32], grads: &[f32]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = (1.0 - BETA1.powi(self.t as i32)) as f32;
        let c2 = (1.0 - BETA2.powi(self.t as i32)) as f32;
        let (b1, b2, lr) = (BETA1 as f32, BETA2 as f32, self.lr);
        params
            .par_chunks_mut(CHUNK)
            .zip(grads.par_chunks(CHUNK))
            .zip(self.m.par_chunks_mut(CHUNK))
            .zip(self.v.par_chunks_mut(CHUNK))
            .for_each(|(((p, g), m), v)| {
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    let mhat = m[i] / c1;
                    let vhat = v[i] / c2;
                    // Skipping a zero step keeps signed zeros intact.
                    if lr != 0.0 {
                        p[i] -= lr * mhat / (vhat.sqrt() + EPSILON);
                    }
                }
            });
    }
}
