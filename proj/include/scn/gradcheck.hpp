#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scn {

/// One gradient check outcome: the worst guarded relative error between
/// recorded gradients and central finite differences over every coordinate
/// of every parameter involved.
struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;

  double worst() const;
  bool all_below(double tol) const;
};

/// Runs the op-level checks (fully_connected, linear+add, conv2d, relu,
/// sigmoid, mse_loss) and an end-to-end tiny-SCN check on `instances`
/// independently seeded random instances each.
GradCheckReport run_gradient_suite(int instances, uint64_t seed,
                                   float eps = 1e-3f);

}  // namespace scn
