use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deeponet::{DeepOnetParams, FieldSample, OperatorDataset, Rows};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Archive};
use crate::pde::{build_pools, Batch, LossReport, PdeProblem, Pools, ProblemKind};
use crate::tensor::Mat;

use super::batch::sample_minibatch;
use super::config::TrainConfig;
use super::data::derive_seed;
use super::metrics::{save_metrics, MetricsRecord};

const INIT_STREAM: u64 = 0x696e_6974;
const POOL_STREAM: u64 = 0x706f_6f6c;
const BATCH_STREAM: u64 = 0x6261_7463;
const FULL_LOSS_CHUNK: usize = 16;

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub params: DeepOnetParams,
    pub metrics: Vec<MetricsRecord>,
    pub pools: Pools,
}

pub fn init_params(cfg: &TrainConfig) -> Result<DeepOnetParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, INIT_STREAM));
    DeepOnetParams::init(&cfg.branch_spec(), &cfg.trunk_spec(), &mut rng)
}

pub fn training_pools(cfg: &TrainConfig, train: &[FieldSample]) -> Result<Pools> {
    build_pools(&cfg.problem(), train, derive_seed(cfg.seed, POOL_STREAM))
}

/// Batch generator for iteration `iter`; independent of every other iteration.
pub fn batch_rng(cfg: &TrainConfig, iter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, BATCH_STREAM));
    rng.set_stream(iter);
    rng
}

pub fn checkpoint_archive(cfg: &TrainConfig, params: &DeepOnetParams, iteration: u64) -> Archive {
    let mut a = params.to_archive();
    a.set_meta("benchmark", cfg.benchmark);
    a.set_meta("iteration", iteration);
    a.set_meta("seed", cfg.seed);
    a
}

fn write_outputs(
    out: Option<&Path>,
    cfg: &TrainConfig,
    params: &DeepOnetParams,
    iteration: u64,
    metrics: &[MetricsRecord],
) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        checkpoint_archive(cfg, params, iteration).save(&dir.join(CHECKPOINT_FILE))?;
        save_metrics(metrics, &dir.join(METRICS_FILE))?;
    }
    Ok(())
}

fn empty_rows(m: usize, d: usize) -> Rows {
    Rows {
        u: Mat::zeros(0, m),
        y: Mat::zeros(0, d),
        target: Some(vec![]),
    }
}

/// Loss over every pool row, evaluated a few samples at a time and
/// recombined with row-count weights (equal to one full evaluation up to
/// rounding).
pub fn full_loss(problem: &PdeProblem, params: &DeepOnetParams, pools: &Pools) -> Result<LossReport> {
    let slots = [pools.ic.as_ref(), pools.bc.as_ref(), pools.physics.as_ref()];
    let first = slots.iter().flatten().next().ok_or_else(|| Error::invalid("no pools"))?;
    let (n, m, d) = (first.n(), first.m(), first.d());
    let totals: Vec<usize> = slots.iter().map(|p| p.map_or(0, |ds| ds.len())).collect();
    let take = |slot: Option<&OperatorDataset>, s0: usize, s1: usize| match slot {
        Some(p) => p.gather(&(p.sample_rows(s0).start..p.sample_rows(s1 - 1).end).collect::<Vec<_>>()),
        None => empty_rows(m, d),
    };
    let frac = |rows: usize, total: usize| if total == 0 { 0.0 } else { rows as f64 / total as f64 };
    // The diffusion-reaction initial-condition term shares the boundary pool's denominator.
    let ic_slot = if problem.kind == ProblemKind::DiffusionReaction { 1 } else { 0 };
    let mut acc = LossReport::default();
    let mut s0 = 0;
    while s0 < n {
        let s1 = (s0 + FULL_LOSS_CHUNK).min(n);
        let batch = Batch {
            ic: take(slots[0], s0, s1),
            bc: take(slots[1], s0, s1),
            physics: take(slots[2], s0, s1),
        };
        let rows = [batch.ic.len(), batch.bc.len(), batch.physics.len()];
        let rep = problem.loss(params, &batch)?;
        acc.ic += frac(rows[ic_slot], totals[ic_slot]) * rep.ic;
        acc.bc += frac(rows[1], totals[1]) * rep.bc;
        acc.physics += frac(rows[2], totals[2]) * rep.physics;
        s0 = s1;
    }
    acc.total = acc.ic + acc.bc + acc.physics;
    Ok(acc)
}

/// Every step allocates and frees the same few hundred-kilobyte buffers;
/// glibc would hand each one back to the kernel and fault it in again.
fn keep_large_allocations() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    {
        static ONCE: std::sync::Once = std::sync::Once::new();
        // SAFETY: mallopt only adjusts allocator tuning parameters.
        ONCE.call_once(|| unsafe {
            libc::mallopt(libc::M_MMAP_THRESHOLD, 256 << 20);
            libc::mallopt(libc::M_TRIM_THRESHOLD, 512 << 20);
        });
    }
}

/// Runs the training loop. With `out` set, the checkpoint and metrics are
/// written there; on a non-finite loss the last good parameters are saved
/// before the error is returned.
pub fn train(cfg: &TrainConfig, train_samples: &[FieldSample], out: Option<&Path>) -> Result<TrainResult> {
    cfg.validate()?;
    keep_large_allocations();
    let problem = cfg.problem();
    let pools = training_pools(cfg, train_samples)?;
    let mut params = init_params(cfg)?;
    let mut adam = AdamState::new(&params, cfg.base_lr);
    let mut metrics = Vec::new();
    let start = Instant::now();
    let elapsed = |s: &Instant| if cfg.wall_clock { s.elapsed().as_secs_f64() } else { 0.0 };

    for iter in 0..=cfg.iterations {
        let mut rng = batch_rng(cfg, iter);
        let batch = sample_minibatch(&pools, cfg.batch_size, cfg.constraint_fraction, &mut rng)?;
        let step = if iter < cfg.iterations {
            problem.loss_and_grad(&params, &batch).map(|(r, g)| (r, Some(g)))
        } else {
            problem.loss(&params, &batch).map(|r| (r, None))
        };
        let step = step.and_then(|v| {
            if v.0.total.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("loss at iteration {iter}")))
            }
        });
        let (report, grads) = match step {
            Ok(v) => v,
            Err(e) => {
                log::error!("training stopped at iteration {iter}: {e}");
                write_outputs(out, cfg, &params, iter, &metrics)?;
                return Err(e);
            }
        };
        if iter % cfg.log_every == 0 || iter == cfg.iterations {
            let rec = MetricsRecord::new(iter, &report, adam.lr(iter), elapsed(&start));
            log::info!(
                "iter {iter:>7}  loss {:.3e}  (ic {:.2e}, bc {:.2e}, physics {:.2e})",
                rec.total_loss,
                rec.ic_loss,
                rec.bc_loss,
                rec.physics_loss
            );
            metrics.push(rec);
        }
        if let Some(g) = grads {
            if let Err(e) = adam.update(&mut params, &g, iter) {
                write_outputs(out, cfg, &params, iter, &metrics)?;
                return Err(e);
            }
        }
    }
    write_outputs(out, cfg, &params, cfg.iterations, &metrics)?;
    Ok(TrainResult { params, metrics, pools })
}
