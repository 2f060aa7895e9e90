//! Replicate-level execution.
//!
//! Replicates are grouped into fixed-size chunks. Each chunk folds its
//! replicates into an accumulator in index order, and chunk accumulators are
//! merged in chunk order. Chunk boundaries do not depend on the worker count,
//! so floating-point reductions come out bit-identical for any thread pool,
//! and the sequential path produces exactly the parallel path's result.

/// Replicates per work item.
pub const CHUNK: u64 = 1024;

fn chunk_bounds(reps: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks).map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(reps)))
}

fn fold_chunk<A, E>(
    (start, end): (u64, u64),
    init: &(impl Fn() -> A + Sync),
    step: &(impl Fn(&mut A, u64) -> Result<(), E> + Sync),
) -> Result<A, E> {
    let mut acc = init();
    for r in start..end {
        step(&mut acc, r)?;
    }
    Ok(acc)
}

fn merge_in_order<A, E>(parts: impl IntoIterator<Item = Result<A, E>>, init: impl Fn() -> A, merge: impl Fn(A, A) -> A) -> Result<A, E> {
    let mut total = init();
    for part in parts {
        total = merge(total, part?);
    }
    Ok(total)
}

/// Folds replicates `0..reps` on the current thread.
pub fn fold_sequential<A, E, I, S, M>(reps: u64, init: I, step: S, merge: M) -> Result<A, E>
where
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<(), E> + Sync,
    M: Fn(A, A) -> A,
{
    let parts = chunk_bounds(reps).map(|b| fold_chunk(b, &init, &step));
    merge_in_order(parts, &init, merge)
}

/// Folds replicates `0..reps` on the ambient rayon pool.
#[cfg(feature = "parallel")]
pub fn fold_parallel<A, E, I, S, M>(reps: u64, init: I, step: S, merge: M) -> Result<A, E>
where
    A: Send,
    E: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<(), E> + Sync,
    M: Fn(A, A) -> A,
{
    use rayon::prelude::*;
    let bounds: Vec<(u64, u64)> = chunk_bounds(reps).collect();
    let parts: Vec<Result<A, E>> = bounds.into_par_iter().map(|b| fold_chunk(b, &init, &step)).collect();
    merge_in_order(parts, &init, merge)
}

/// Folds replicates with the build's default executor.
pub fn fold<A, E, I, S, M>(reps: u64, init: I, step: S, merge: M) -> Result<A, E>
where
    A: Send,
    E: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<(), E> + Sync,
    M: Fn(A, A) -> A,
{
    #[cfg(feature = "parallel")]
    {
        fold_parallel(reps, init, step, merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        fold_sequential(reps, init, step, merge)
    }
}

/// Runs `f` for every replicate and returns the results in replicate order.
pub fn collect<T, E, F>(reps: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync,
{
    fold(
        reps,
        Vec::new,
        |acc: &mut Vec<T>, r| {
            acc.push(f(r)?);
            Ok(())
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )
}
