//! Linear soft-margin SVM trained by full-batch subgradient descent.
//!
//! Minimizes `(1/2)|w|^2 + C sum_i max(0, 1 - y_i (w . x_i + b))`, written in
//! the equivalent form `(lambda/2)|w|^2 + mean hinge` with `lambda = 1 / (C n)`.
//! The intercept is handled as the weight of a constant input of 1 and is
//! regularized with the rest. Steps are `1 / (lambda t)` followed by
//! projection onto the ball of radius `1 / sqrt(lambda)`; the returned
//! parameters average the iterates of the second half of the run.

pub(crate) fn fit(rows: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    let lambda = 1.0 / (c * n as f64);
    let signs: Vec<f64> = y.iter().map(|&t| if t > 0.5 { 1.0 } else { -1.0 }).collect();
    let radius = 1.0 / lambda.sqrt();

    // last coordinate is the intercept
    let mut w = vec![0.0; p + 1];
    let mut avg = vec![0.0; p + 1];
    let mut sub = vec![0.0; p + 1];
    let burn_in = iterations / 2;
    let mut averaged = 0usize;

    for t in 1..=iterations {
        let eta = 1.0 / (lambda * t as f64);
        sub.iter_mut().for_each(|v| *v = 0.0);
        for (x, &s) in rows.iter().zip(&signs) {
            let margin = s * (w[p] + x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            if margin < 1.0 {
                sub.iter_mut().zip(x).for_each(|(v, xi)| *v += s * xi);
                sub[p] += s;
            }
        }
        let shrink = 1.0 - eta * lambda;
        let scale = eta / n as f64;
        for (wi, si) in w.iter_mut().zip(&sub) {
            *wi = shrink * *wi + scale * si;
        }
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if wn > radius {
            w.iter_mut().for_each(|v| *v *= radius / wn);
        }
        if t > burn_in {
            averaged += 1;
            let k = averaged as f64;
            avg.iter_mut().zip(&w).for_each(|(a, v)| *a += (v - *a) / k);
        }
    }
    let b = avg.pop().unwrap_or(0.0);
    (avg, b)
}
