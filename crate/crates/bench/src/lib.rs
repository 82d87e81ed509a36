//! Shared fixtures for the benchmarks.

use geomech_core::generators::gnp_dag;
use geomech_core::Dag;

pub const SEED: u64 = 0xBE7C;

/// Random DAG with expected out-degree about `degree`.
pub fn sparse_gnp(n: usize, degree: f64) -> Dag {
    let p = (degree / n.max(2) as f64).min(1.0);
    gnp_dag(n, p, SEED ^ n as u64).expect("valid parameters")
}

pub fn dense_gnp(n: usize) -> Dag {
    gnp_dag(n, 0.5, SEED ^ n as u64).expect("valid parameters")
}
