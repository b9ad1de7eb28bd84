//! In-batch contrastive loss over cosine similarities and the grouped
//! binary cross-entropy loss, each with exact analytic gradients.

use super::TrainError;

/// Clip bound for predicted probabilities.
pub const BCE_EPS: f64 = 1e-7;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss with gradients for the query and document embeddings.
pub type ContrastiveOutput = (f64, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Loss and gradients of the in-batch contrastive objective
///
/// `L = -(1/B) Σ_i log( exp(s_ii) / Σ_j exp(s_ij) )`, `s_ij = cos(q_i, d_j)`,
///
/// i.e. softmax cross-entropy at temperature 1 over cosine similarities with
/// the matching document as the target.
pub fn contrastive_loss(
    zq: &[Vec<f64>],
    zd: &[Vec<f64>],
) -> Result<ContrastiveOutput, TrainError> {
    let b = zq.len();
    if b == 0 || zd.len() != b {
        return Err(TrainError::ShapeMismatch(format!("{} queries vs {} documents", b, zd.len())));
    }
    let dim = zq[0].len();
    if zq.iter().chain(zd).any(|v| v.len() != dim) {
        return Err(TrainError::ShapeMismatch("embedding widths differ".into()));
    }
    let nq: Vec<f64> = zq.iter().map(|v| norm(v)).collect();
    let nd: Vec<f64> = zd.iter().map(|v| norm(v)).collect();
    if let Some(i) = nq.iter().chain(&nd).position(|&n| n == 0.0) {
        return Err(TrainError::ZeroNormEmbedding(i));
    }
    let s: Vec<Vec<f64>> =
        (0..b).map(|i| (0..b).map(|j| dot(&zq[i], &zd[j]) / (nq[i] * nd[j])).collect()).collect();

    let bf = b as f64;
    let mut loss = 0.0;
    // g[i][j] = dL/ds_ij = (p_ij - δ_ij) / B
    let mut g = vec![vec![0.0; b]; b];
    for i in 0..b {
        // Shifting by s_ii keeps the diagonal term exactly exp(0) = 1; cosines
        // are bounded so the remaining exponentials cannot overflow.
        let e: Vec<f64> = s[i].iter().map(|&x| (x - s[i][i]).exp()).collect();
        let z: f64 = e.iter().sum();
        loss += z.ln();
        for j in 0..b {
            let p = e[j] / z;
            g[i][j] = (p - if i == j { 1.0 } else { 0.0 }) / bf;
        }
    }
    loss /= bf;

    let mut dq = vec![vec![0.0; dim]; b];
    let mut dd = vec![vec![0.0; dim]; b];
    for i in 0..b {
        for j in 0..b {
            let gij = g[i][j];
            if gij == 0.0 {
                continue;
            }
            let inv = 1.0 / (nq[i] * nd[j]);
            let sq = s[i][j] / (nq[i] * nq[i]);
            let sd = s[i][j] / (nd[j] * nd[j]);
            for k in 0..dim {
                dq[i][k] += gij * (zd[j][k] * inv - sq * zq[i][k]);
                dd[j][k] += gij * (zq[i][k] * inv - sd * zd[j][k]);
            }
        }
    }
    Ok((loss, dq, dd))
}

/// Per-example binary cross-entropy `-[y ln p + (1-y) ln(1-p)]`.
pub fn bce(y: f64, p: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Grouped BCE: `Σ_i Σ_j (1/(B·S_i)) ℓ(y_ij, ŷ_ij)` with ŷ clipped to
/// `[eps, 1-eps]`. Returns the loss and `dL/dŷ` per score.
pub fn bce_reranker_loss(
    scores: &[Vec<f64>],
    labels: &[Vec<f64>],
    eps: f64,
) -> Result<(f64, Vec<Vec<f64>>), TrainError> {
    if scores.len() != labels.len()
        || scores.iter().zip(labels).any(|(s, y)| s.len() != y.len() || s.is_empty())
    {
        return Err(TrainError::ShapeMismatch("score and label lists differ".into()));
    }
    let b = scores.len() as f64;
    let mut loss = 0.0;
    let grads = scores
        .iter()
        .zip(labels)
        .map(|(si, yi)| {
            let w = 1.0 / (b * si.len() as f64);
            si.iter()
                .zip(yi)
                .map(|(&s, &y)| {
                    let p = s.clamp(eps, 1.0 - eps);
                    loss += w * bce(y, p);
                    w * (p - y) / (p * (1.0 - p))
                })
                .collect()
        })
        .collect();
    Ok((loss, grads))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
