#pragma once

#include <cmath>

#include "actionlm/errors.hpp"
#include "actionlm/nn/tensor.hpp"

namespace actionlm::nn {

// Fixed sinusoidal position table:
//   PE[pos, 2i]   = sin(pos / 10000^(2i/d))
//   PE[pos, 2i+1] = cos(pos / 10000^(2i/d))
template <class Real>
Tensor<Real> sinusoidal_positions(long len, long d) {
  if (d % 2 != 0) throw ConfigError("sinusoidal_positions: dimension must be even, got " + std::to_string(d));
  Tensor<Real> pe({len, d});
  for (long pos = 0; pos < len; ++pos)
    for (long i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) / freq;
      pe.at(pos, i) = static_cast<Real>(std::sin(angle));
      pe.at(pos, i + 1) = static_cast<Real>(std::cos(angle));
    }
  return pe;
}

}  // namespace actionlm::nn
