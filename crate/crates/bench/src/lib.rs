//! Shared fixtures for the benchmarks.

use bdcluster::{BdPair, BdTriple};

/// The benchmark pairs with a short label each.
pub fn pairs() -> Vec<(&'static str, BdPair)> {
    vec![
        ("gl5", BdPair::from_maps(5, &[(1, 2), (2, 3)], &[(1, 3), (2, 4)]).expect("valid pair")),
        ("cg5", BdPair::diagonal(BdTriple::cremmer_gervais(5))),
        ("n7", BdPair::diagonal(BdTriple::new(7, &[(1, 3), (2, 4), (4, 1)]).expect("valid triple"))),
    ]
}
