use rand::Rng;

use crate::deeponet::{OperatorDataset, Rows};
use crate::error::{Error, Result};
use crate::pde::{Batch, Pools};

/// Splits `total` rows across pools in proportion to `weights` (largest
/// remainder), giving every pool with positive weight at least one row.
fn allocate(total: usize, weights: &[f64]) -> Vec<usize> {
    let live = weights.iter().filter(|&&w| w > 0.0).count();
    let total = total.max(live);
    let sum: f64 = weights.iter().sum();
    let mut counts = vec![0usize; weights.len()];
    if sum <= 0.0 {
        return counts;
    }
    let spare = total - live;
    let mut rema: Vec<(f64, usize)> = Vec::new();
    let mut used = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let exact = spare as f64 * w / sum;
        counts[i] = 1 + exact.floor() as usize;
        used += exact.floor() as usize;
        rema.push((exact - exact.floor(), i));
    }
    // Stable order on ties keeps the split deterministic.
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(spare - used) {
        counts[i] += 1;
    }
    counts
}

fn draw<R: Rng + ?Sized>(pool: &OperatorDataset, count: usize, rng: &mut R) -> Rows {
    let idx: Vec<usize> = (0..count).map(|_| rng.random_range(0..pool.len())).collect();
    pool.gather(&idx)
}

fn empty_like(pool: &OperatorDataset) -> Rows {
    pool.gather(&[])
}

/// Draws `batch_size` rows uniformly with replacement.
///
/// Rows are split across the pools in proportion to their sizes, or, when
/// `constraint_fraction` is set, that share goes to the constraint pools
/// (ic, bc; split by size) and the rest to the physics pool.
pub fn sample_minibatch<R: Rng + ?Sized>(
    pools: &Pools,
    batch_size: usize,
    constraint_fraction: Option<f64>,
    rng: &mut R,
) -> Result<Batch> {
    let slots = [pools.ic.as_ref(), pools.bc.as_ref(), pools.physics.as_ref()];
    let template = slots
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::invalid("no pools to sample from"))?;
    for p in slots.iter().flatten() {
        if p.is_empty() {
            return Err(Error::invalid("cannot sample from an empty pool"));
        }
    }
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let size = |p: Option<&&OperatorDataset>| p.map_or(0.0, |d| d.len() as f64);
    let sizes = [size(slots[0].as_ref()), size(slots[1].as_ref()), size(slots[2].as_ref())];
    let counts = match (constraint_fraction, pools.physics.is_some()) {
        (Some(f), true) if sizes[0] + sizes[1] > 0.0 => {
            let c = ((batch_size as f64 * f).round() as usize).clamp(1, batch_size.saturating_sub(1).max(1));
            let split = allocate(c, &sizes[..2]);
            vec![split[0], split[1], batch_size.saturating_sub(c).max(1)]
        }
        _ => allocate(batch_size, &sizes),
    };
    let mut take = |slot: Option<&OperatorDataset>, n: usize| match slot {
        Some(p) if n > 0 => draw(p, n, rng),
        Some(p) => empty_like(p),
        None => {
            let mut r = empty_like(template);
            r.target = Some(vec![]);
            r.y = crate::tensor::Mat::zeros(0, template.d());
            r
        }
    };
    let ic = take(slots[0], counts[0]);
    let bc = take(slots[1], counts[1]);
    let physics = take(slots[2], counts[2]);
    Ok(Batch { ic, bc, physics })
}
