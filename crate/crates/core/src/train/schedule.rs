/// Step decay: `base_lr * decay_factor ^ floor(epoch / decay_every)`.
pub fn lr_at(epoch: usize, base_lr: f64, decay_factor: f64, decay_every: usize) -> f64 {
    base_lr * decay_factor.powi((epoch / decay_every.max(1)) as i32)
}
