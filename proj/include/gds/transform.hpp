#pragma once

#include "gds/gaussian.hpp"
#include "gds/graph.hpp"

namespace gds {

/// Fourier transform of a distribution-valued signal: the law of U^T X.
/// For a Dirac input this is the classical graph Fourier transform.
GaussianMeasure gds_ft(const GaussianMeasure& mu, const SpectralDecomp& sd);

/// Inverse transform: the law of U X.
GaussianMeasure gds_ift(const GaussianMeasure& mu_hat, const SpectralDecomp& sd);

/// Convolutional filtering as the pushforward under the Chebyshev filter.
GaussianMeasure gds_filter(const GaussianMeasure& mu, const SpectralDecomp& sd,
                           const ChebFilter& f);

}  // namespace gds
