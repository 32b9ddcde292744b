#![allow(dead_code)]

use std::sync::{Mutex, MutexGuard};

/// Serializes tests that hold an n = 20000 dense matrix (1.6 GB each).
static BIG: Mutex<()> = Mutex::new(());

pub fn big_instance_lock() -> MutexGuard<'static, ()> {
    BIG.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for x in v {
        s += x;
        k += 1;
    }
    s / k as f64
}
