#include "ctrlcost/moment_control.hpp"

#include <algorithm>

namespace ctrlcost {

int sample_count(const CVector<double>& exponents, double horizon, double per_efold, int minimum) {
  double fastest = 0.0;
  for (Eigen::Index n = 0; n < exponents.size(); ++n) fastest = std::max(fastest, std::abs(exponents(n).real()));
  const double needed = std::ceil(per_efold * fastest * horizon) + 1.0;
  return std::max(minimum, static_cast<int>(std::min(needed, 5.0e7)));
}

}  // namespace ctrlcost
