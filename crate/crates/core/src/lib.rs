pub mod analyses;
pub mod bench;
pub mod blockstore;
pub mod engine;
pub mod logformat;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/log-formats.md")]
    mod log_formats {}
    #[doc = include_str!("../../../book/src/block-store.md")]
    mod block_store {}
    #[doc = include_str!("../../../book/src/mapreduce.md")]
    mod mapreduce {}
    #[doc = include_str!("../../../book/src/chaining.md")]
    mod chaining {}
    #[doc = include_str!("../../../book/src/faults.md")]
    mod faults {}
    #[doc = include_str!("../../../book/src/caching.md")]
    mod caching {}
    #[doc = include_str!("../../../book/src/analyses.md")]
    mod analyses {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
