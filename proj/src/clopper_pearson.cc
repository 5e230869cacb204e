#include <boost/math/special_functions/beta.hpp>
#include <stdexcept>

#include "testalloc/bandit_strategies.h"

namespace testalloc {

double clopper_pearson_upper(double positives, double trials,
                             double confidence_alpha) {
  if (!(confidence_alpha > 0.0 && confidence_alpha < 1.0)) {
    throw std::invalid_argument("confidence_alpha must lie in (0,1)");
  }
  if (positives < 0.0 || positives > trials) {
    throw std::invalid_argument("positives must lie in [0, trials]");
  }
  const double failures = trials - positives;
  if (failures <= 0.0) return 1.0;
  return boost::math::ibeta_inv(positives + 1.0, failures,
                                1.0 - confidence_alpha / 2.0);
}

}  // namespace testalloc
