#include "gds/transform.hpp"

#include <string>

#include "gds/error.hpp"

namespace gds {

namespace {

void check_dim(const GaussianMeasure& mu, const SpectralDecomp& sd, const char* op) {
  if (mu.dim() != sd.size()) {
    throw ValidationError(std::string(op) + ": measure dimension " + std::to_string(mu.dim()) +
                          " does not match graph size " + std::to_string(sd.size()));
  }
}

}  // namespace

GaussianMeasure gds_ft(const GaussianMeasure& mu, const SpectralDecomp& sd) {
  check_dim(mu, sd, "gds_ft");
  return pushforward(sd.eigvecs.transpose(), mu);
}

GaussianMeasure gds_ift(const GaussianMeasure& mu_hat, const SpectralDecomp& sd) {
  check_dim(mu_hat, sd, "gds_ift");
  return pushforward(sd.eigvecs, mu_hat);
}

GaussianMeasure gds_filter(const GaussianMeasure& mu, const SpectralDecomp& sd,
                           const ChebFilter& f) {
  check_dim(mu, sd, "gds_filter");
  return pushforward(materialize_filter(sd, f), mu);
}

}  // namespace gds
