#include "fgd/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace fgd::nn {

namespace {
double eval_loss(ParamStore& params, const LossBuilder& build) {
    Tape tape;
    auto ids = register_params(tape, params);
    int loss = build(tape, ids);
    return tape.val(loss).data[0];
}
}  // namespace

GradCheckResult grad_check(ParamStore& params, const LossBuilder& build, double step) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

    Tape tape;
    auto ids = register_params(tape, params);
    int loss = build(tape, ids);
    tape.backward(loss);
    auto analytic = collect_grads(tape, ids);

    GradCheckResult result;
    for (auto& [name, p] : params) {
        const Tensor& g = analytic.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double orig = p.data[i];
            p.data[i] = orig + step;
            double lp = eval_loss(params, build);
            p.data[i] = orig - step;
            double lm = eval_loss(params, build);
            p.data[i] = orig;
            double numeric = (lp - lm) / (2.0 * step);
            double rel = std::abs(g.data[i] - numeric) / std::max(1.0, std::abs(numeric));
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst_param = name;
            }
        }
    }
    return result;
}

}  // namespace fgd::nn
