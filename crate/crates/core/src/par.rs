//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the top-level functions run on the
//! rayon pool; without it they are plain loops. Both paths produce identical
//! results because callers give every work item its own random stream.

/// Plain-loop implementations, always available.
pub mod sequential {
    pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
    where
        F: Fn(usize) -> R,
    {
        (0..n).map(f).collect()
    }

    pub fn map_mut<T, R, F>(items: &mut [T], f: F) -> Vec<R>
    where
        F: Fn(usize, &mut T) -> R,
    {
        items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }

    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA,
        B: FnOnce() -> RB,
    {
        (a(), b())
    }
}

/// Rayon-backed implementations.
#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn map_mut<T, R, F>(items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        items
            .par_iter_mut()
            .enumerate()
            .map(|(i, t)| f(i, t))
            .collect()
    }

    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        rayon::join(a, b)
    }
}

#[cfg(feature = "parallel")]
pub use parallel::{join, map_indexed, map_mut};

#[cfg(not(feature = "parallel"))]
pub use sequential::{join, map_indexed, map_mut};

/// Runs `trials` independent Monte-Carlo evaluations, indexed from zero.
pub fn monte_carlo<R, F>(trials: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    map_indexed(trials, f)
}
