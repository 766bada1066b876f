//! In-process collective operations for synchronous data-parallel shards.

use std::sync::{Arc, Condvar, Mutex};

use ued_agents::GradReducer;

struct CommState {
    generation: u64,
    arrived: usize,
    aborted: bool,
    slots: Vec<Vec<f64>>,
    result: Vec<f64>,
}

/// A sum all-reduce over `n` participants. Contributions are summed in rank
/// order, so every participant receives bitwise identical results.
pub struct ShardComm {
    n: usize,
    state: Mutex<CommState>,
    cv: Condvar,
}

impl ShardComm {
    pub fn new(n: usize) -> Arc<Self> {
        Arc::new(ShardComm {
            n,
            state: Mutex::new(CommState {
                generation: 0,
                arrived: 0,
                aborted: false,
                slots: vec![Vec::new(); n],
                result: Vec::new(),
            }),
            cv: Condvar::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Wakes all waiters; they panic with a "shard aborted" message.
    pub fn abort(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.aborted = true;
        self.cv.notify_all();
    }

    /// Blocks until all participants contributed, then returns the sum.
    pub fn all_reduce_sum(&self, rank: usize, data: &[f64]) -> Vec<f64> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if st.aborted {
            panic!("shard aborted");
        }
        st.slots[rank] = data.to_vec();
        st.arrived += 1;
        if st.arrived == self.n {
            let len = st.slots[0].len();
            assert!(st.slots.iter().all(|s| s.len() == len), "mismatched all-reduce lengths");
            let mut sum = vec![0.0; len];
            for s in &st.slots {
                sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            }
            st.result = sum;
            st.arrived = 0;
            st.generation += 1;
            self.cv.notify_all();
        } else {
            let g = st.generation;
            while st.generation == g && !st.aborted {
                st = self.cv.wait(st).unwrap_or_else(|e| e.into_inner());
            }
            if st.aborted && st.generation == g {
                panic!("shard aborted");
            }
        }
        st.result.clone()
    }
}

/// One participant's view of a [`ShardComm`].
#[derive(Clone)]
pub struct ShardHandle {
    pub comm: Arc<ShardComm>,
    pub rank: usize,
}

impl GradReducer for ShardHandle {
    fn mean_grads(&self, grads: &mut [f32]) {
        let data: Vec<f64> = grads.iter().map(|&g| g as f64).collect();
        let sum = self.comm.all_reduce_sum(self.rank, &data);
        let n = self.comm.size() as f64;
        grads.iter_mut().zip(sum).for_each(|(g, s)| *g = (s / n) as f32);
    }

    fn sum_moments(&self, local: [f64; 3]) -> [f64; 3] {
        let s = self.comm.all_reduce_sum(self.rank, &local);
        [s[0], s[1], s[2]]
    }
}

/// True iff `flag` holds on every participant.
pub fn all_true(reducer: &dyn GradReducer, flag: bool) -> bool {
    let [n, k, _] = reducer.sum_moments([1.0, flag as u8 as f64, 0.0]);
    k == n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_is_identical_everywhere() {
        let comm = ShardComm::new(3);
        let results: Vec<Vec<f64>> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..3)
                .map(|r| {
                    let c = comm.clone();
                    s.spawn(move || {
                        let mut out = Vec::new();
                        for round in 0..50 {
                            out.extend(c.all_reduce_sum(r, &[r as f64 + round as f64, 0.1 * r as f64]));
                        }
                        out
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(results[0], results[1]);
        assert_eq!(results[1], results[2]);
        assert_eq!(results[0][0], 3.0);
        assert_eq!(results[0][98], 3.0 + 3.0 * 49.0);
    }

    #[test]
    fn abort_releases_waiters() {
        let comm = ShardComm::new(2);
        let c = comm.clone();
        let h = std::thread::spawn(move || c.all_reduce_sum(0, &[1.0]));
        std::thread::sleep(std::time::Duration::from_millis(20));
        comm.abort();
        assert!(h.join().is_err());
    }
}
