//! Shared fixtures for the benchmarks.

use urbanemf::LaunchConfig;

pub fn launch(m_dim: usize, max_diffractions: usize) -> LaunchConfig {
    LaunchConfig {
        m_dim,
        max_diffractions,
        ..LaunchConfig::default()
    }
}
