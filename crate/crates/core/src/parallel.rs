//! Deterministic fan-out over independent work items.
//!
//! Worker count comes from `REPLAYGUARD_THREADS` (default: available
//! parallelism). Results are returned in item order, so the outcome is
//! identical for any thread count; only wall time changes.

/// Worker threads to use.
pub fn thread_count() -> usize {
    if let Ok(v) = std::env::var("REPLAYGUARD_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Apply `f` to every index in `0..n`, returning results in index order.
pub fn parallel_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let workers = thread_count().min(n.max(1));
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (off, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = Some(f(w * chunk + off));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("worker filled slot")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_item_order() {
        let out = parallel_map(100, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
        assert!(parallel_map(0, |i| i).is_empty());
    }
}
