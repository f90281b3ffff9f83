//! Central finite-difference check of the transformer gradient.

use sentgraph_core::TokenSeq;

use crate::transformer::TinyTransformer;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`, zero when both vanish.
    pub rel_error: f64,
    /// Largest `|a − f| − (tol · max(|a|, |f|) + abs_floor)` over entries;
    /// positive means some entry is outside the elementwise bound.
    pub worst_excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.tensors.iter().all(|t| t.rel_error <= self.tol && t.worst_excess <= 0.0)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.rel_error).fold(0.0, f64::max)
    }
}

/// Mean per-token NLL of a batch, the quantity training minimizes.
pub fn batch_loss(model: &TinyTransformer<f64>, batch: &[TokenSeq]) -> f64 {
    let (l, c) = batch.iter().map(|s| model.sequence_loss(&s.tokens)).fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    l / c.max(1) as f64
}

/// Compares the backpropagated gradient of [`batch_loss`] with
/// `(L(θ + h e_i) − L(θ − h e_i)) / 2h` for every parameter (no dropout).
pub fn grad_check(model: &TinyTransformer<f64>, batch: &[TokenSeq], h: f64, tol: f64) -> GradCheckReport {
    const ABS_FLOOR: f64 = 1e-7;
    let mut analytic = vec![0.0; model.param_count()];
    let mut count = 0;
    for s in batch {
        let g = model.sequence_grad(&s.tokens, None);
        count += g.count;
        analytic.iter_mut().zip(&g.grad).for_each(|(a, b)| *a += b);
    }
    analytic.iter_mut().for_each(|a| *a /= count.max(1) as f64);

    let mut probe = model.clone();
    let mut tensors = Vec::new();
    for info in model.tensors() {
        let (mut diff2, mut a2, mut f2, mut worst) = (0.0, 0.0, 0.0, f64::NEG_INFINITY);
        for i in info.range() {
            let orig = probe.params[i];
            probe.params[i] = orig + h;
            let up = batch_loss(&probe, batch);
            probe.params[i] = orig - h;
            let down = batch_loss(&probe, batch);
            probe.params[i] = orig;
            let f = (up - down) / (2.0 * h);
            let a = analytic[i];
            diff2 += (a - f).powi(2);
            a2 += a * a;
            f2 += f * f;
            worst = worst.max((a - f).abs() - (tol * a.abs().max(f.abs()) + ABS_FLOOR));
        }
        let denom = a2.max(f2).sqrt();
        let rel_error = if denom < 1e-12 { diff2.sqrt() } else { diff2.sqrt() / denom };
        tensors.push(TensorCheck { name: info.name.clone(), rel_error, worst_excess: worst });
    }
    GradCheckReport { tensors, tol }
}
