#pragma once

#include <cstdint>

namespace tinyssd {

// Central finite-difference audit of the analytic gradients: multibox loss
// w.r.t. raw predictions on randomized small instances, and the full toy
// network parameter gradients on a 16x16 model, both in double precision.
struct GradCheckReport {
  double max_rel_err_loss = 0.0;
  double max_rel_err_net = 0.0;

  double worst() const {
    return max_rel_err_loss > max_rel_err_net ? max_rel_err_loss
                                              : max_rel_err_net;
  }
  bool ok(double tolerance = 1e-3) const { return worst() < tolerance; }
};

GradCheckReport run_gradcheck(uint64_t seed, int loss_instances = 20);

}  // namespace tinyssd
