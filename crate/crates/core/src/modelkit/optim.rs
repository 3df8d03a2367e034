/// Adam with decoupled weight decay, operating on flat `f32` parameter groups.
///
/// Update per parameter, with `t` the step count:
/// `p ← p·(1 − lr·wd)`, then `p ← p − lr·m̂/(√v̂ + ε)` where `m̂`, `v̂` are the
/// bias-corrected first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
}

impl AdamW {
    pub fn new(weight_decay: f64) -> Self {
        AdamW { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, step: 0 }
    }

    /// Advances the shared step counter; call once per optimizer step, before
    /// updating the groups.
    pub fn next_step(&mut self) {
        self.step += 1;
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&self, params: &mut [f32], grads: &[f32], m: &mut [f32], v: &mut [f32], lr: f64) {
        debug_assert!(self.step > 0, "next_step must precede update");
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let decay = (1.0 - lr * self.weight_decay) as f32;
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = f64::from(m[i]) / bc1;
            let v_hat = f64::from(v[i]) / bc2;
            params[i] = params[i] * decay - (lr * m_hat / (v_hat.sqrt() + self.eps)) as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // with bias correction the first step is lr·g/(|g| + ε) ≈ lr·sign(g)
        let mut opt = AdamW::new(0.0);
        opt.next_step();
        let mut p = [1.0f32, -2.0];
        let (mut m, mut v) = ([0.0f32; 2], [0.0f32; 2]);
        opt.update(&mut p, &[0.5, -3.0], &mut m, &mut v, 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 1.9).abs() < 1e-6);
    }

    #[test]
    fn decoupled_decay_without_gradient() {
        let mut opt = AdamW::new(0.5);
        opt.next_step();
        let mut p = [2.0f32];
        let (mut m, mut v) = ([0.0f32], [0.0f32]);
        opt.update(&mut p, &[0.0], &mut m, &mut v, 0.1);
        assert!((p[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-6);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut opt = AdamW::new(0.01);
        opt.next_step();
        let mut p = [0.3f32, -0.7];
        let (mut m, mut v) = ([0.0f32; 2], [0.0f32; 2]);
        opt.update(&mut p, &[1.0, 1.0], &mut m, &mut v, 0.0);
        assert_eq!(p, [0.3, -0.7]);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut opt = AdamW::new(0.0);
        let mut p = [5.0f32];
        let (mut m, mut v) = ([0.0f32], [0.0f32]);
        for _ in 0..2000 {
            opt.next_step();
            let g = [2.0 * (p[0] - 1.0)];
            opt.update(&mut p, &g, &mut m, &mut v, 0.01);
        }
        assert!((p[0] - 1.0).abs() < 1e-2);
    }
}
