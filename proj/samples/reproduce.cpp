// Two-prior experiment: prints posterior distance and bound per step.

#include <cstdio>

#include "bsl/bsl.hpp"

int main() {
  const auto r = bsl::reproduce(1, 20, 7);
  std::printf("y = %.6f (x* = %.6f)\n", r.y, r.x_star);
  std::printf("%4s %-10s %14s %14s\n", "step", "metric", "distance", "bound");
  for (const auto& row : r.record.rows)
    std::printf("%4zu %-10s %14.6e %14.6e\n", row.step, std::string(bsl::to_string(row.metric)).c_str(), row.distance, row.bound);
  std::printf("violations: %zu\n", r.record.violations());
  return r.record.violations() == 0 ? 0 : 2;
}
