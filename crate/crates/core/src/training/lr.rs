pub const LR_INITIAL: f64 = 0.001;
pub const LR_FINAL: f64 = 0.00001;

/// Accuracy-driven learning rate, `max(lr_initial - acc * lr_initial * 0.9,
/// lr_final)`. Always rescales from `lr_initial`.
///
/// Evaluated as `lr_initial * (10 - 9 acc) / 10`, which is the same value in
/// exact arithmetic and lands exactly on `lr_initial / 10` at `acc = 1`.
pub fn update_learning_rate(acc: f64, lr_initial: f64, lr_final: f64) -> f64 {
    let acc = if acc.is_nan() { 0.0 } else { acc.clamp(0.0, 1.0) };
    (lr_initial * (10.0 - 9.0 * acc) / 10.0).max(lr_final)
}
