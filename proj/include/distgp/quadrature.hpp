#pragma once

#include <cstddef>

#include "distgp/errors.hpp"

namespace distgp {

/// Composite Simpson rule on `nodes` equally spaced points (odd, >= 3).
template <typename F>
double simpson(F&& f, double lower, double upper, std::size_t nodes) {
  if (nodes < 3 || nodes % 2 == 0) {
    throw ParameterError("Simpson rule needs an odd node count >= 3");
  }
  const std::size_t intervals = nodes - 1;
  const double h = (upper - lower) / static_cast<double>(intervals);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i < intervals; ++i) {
    const double x = lower + h * static_cast<double>(i);
    if (i % 2 == 1) {
      odd += f(x);
    } else {
      even += f(x);
    }
  }
  return h / 3.0 * (f(lower) + 4.0 * odd + 2.0 * even + f(upper));
}

}  // namespace distgp
