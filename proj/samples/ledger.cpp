// Gaussian projection filter on a bimodal inverse problem, with both ledgers.

#include <cstdio>

#include "bsl/bsl.hpp"

int main() {
  const auto r = bsl::bound_validate_gauss_proj(10, 1);
  std::printf("%4s %-10s %12s %12s %12s %12s\n", "step", "metric", "eps_tv", "distance", "set1", "set2");
  for (std::size_t i = 0; i < r.set1.rows.size(); ++i) {
    const auto& a = r.set1.rows[i];
    const auto& b = r.set2.rows[i];
    std::printf("%4zu %-10s %12.4e %12.4e %12.4e %12.4e\n", a.step, std::string(bsl::to_string(a.metric)).c_str(), r.eps_tv[a.step - 1],
                a.distance, a.bound, b.bound);
  }
  return r.set1.violations() + r.set2.violations() == 0 ? 0 : 2;
}
