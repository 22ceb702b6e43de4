#pragma once

#include <functional>
#include <map>
#include <string>

#include "fgd/autodiff.hpp"
#include "fgd/params.hpp"

namespace fgd::nn {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
};

// Builds the loss twice per parameter component with central differences and
// compares against the tape gradients. The builder must construct the full
// forward pass from fresh leaves and return a scalar loss node.
using LossBuilder = std::function<int(Tape&, const std::map<std::string, int>&)>;

GradCheckResult grad_check(ParamStore& params, const LossBuilder& build, double step = 1e-5);

}  // namespace fgd::nn
