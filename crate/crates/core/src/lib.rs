pub mod error;
pub mod numerics;
pub mod model;
pub mod subspace;
pub mod p1;
pub mod p2;
pub mod baselines;
pub mod hd_relay;
pub mod oracles;
pub mod harness;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signal-model.md")]
    mod signal_model {}
    #[doc = include_str!("../../../book/src/zero-forcing.md")]
    mod zero_forcing {}
    #[doc = include_str!("../../../book/src/rate-region.md")]
    mod rate_region {}
    #[doc = include_str!("../../../book/src/sum-rate.md")]
    mod sum_rate {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
