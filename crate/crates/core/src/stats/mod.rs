//! Annealed correlations, Green–Kubo variance and CLT experiments.
//!
//! Observables are trigonometric polynomials. Correlations come either
//! from powers of the transfer operator acting on Fourier coefficients, or
//! from Monte Carlo over sampled words and uniform initial points.

mod clt;
mod correlation;
mod observable;
#[cfg(test)]
mod tests;

pub use clt::{
    berry_esseen_scaling, clt_experiment, green_kubo_variance, ks_distance, mann_kendall, BerryEsseen, BerryEsseenRow,
    CltReport, CltStatus, GreenKubo, GreenKuboOptions, GreenKuboStatus, MannKendall, TREND_LEVEL,
};
pub use correlation::{
    correlation_series, mixing_rate_fit, triple_correlation, CorrelationMethod, CorrelationSeries, FitStatus,
    MixingFit, StatsBudget, TripleCorrelation, OPERATOR_NOISE_FLOOR,
};
pub use observable::Observable;
