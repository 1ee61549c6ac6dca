use std::sync::{Condvar, Mutex};

/// Counting semaphore capping concurrent backend calls.
pub struct Limiter {
    available: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(permits: usize) -> Self {
        Limiter {
            available: Mutex::new(permits),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit { limiter: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self
            .limiter
            .available
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.limiter.cv.notify_one();
    }
}
