use rayon::ThreadPool;

/// Runs `f` inside a pool capped at `workers` threads (`None` = all cores).
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(n) => pool(n).install(f),
    }
}

fn pool(n: usize) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .expect("thread pool construction")
}
