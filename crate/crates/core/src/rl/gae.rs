use super::RlError;

/// Generalized advantage estimates and the matching value targets.
///
/// `rewards[t]` is the reward (negated cost) received after step `t`;
/// `values` carries one extra bootstrap entry for the state after the last
/// step. `dones[t]` marks the end of an episode at step `t`, which cuts both
/// the bootstrap and the recursion there.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), RlError> {
    let t_len = rewards.len();
    if values.len() != t_len + 1 {
        return Err(RlError::Dimension { expected: t_len + 1, got: values.len() });
    }
    if dones.len() != t_len {
        return Err(RlError::Dimension { expected: t_len, got: dones.len() });
    }
    let mut adv = vec![0.0; t_len];
    let mut next = 0.0;
    for t in (0..t_len).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gamma * lambda * live * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Rescales to zero mean and unit variance; a constant vector becomes zero.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = if std > 1e-12 { (*a - mean) / (std + 1e-8) } else { 0.0 };
    }
}
