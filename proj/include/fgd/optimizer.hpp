#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fgd/params.hpp"
#include "fgd/tensor.hpp"

namespace fgd::nn {

struct Optimizer {
    enum class Kind { kSgd, kAdam };
    Kind kind = Kind::kAdam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static Optimizer sgd(double lr) { return Optimizer{Kind::kSgd, lr}; }
    static Optimizer adam(double lr) { return Optimizer{Kind::kAdam, lr}; }
};

// Holds the Adam moment estimates between steps. SGD keeps no state.
class OptState {
public:
    void step(ParamStore& params, const std::map<std::string, Tensor>& grads,
              const Optimizer& opt);
    void reset();

private:
    std::int64_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

// Single-tensor update, same math as OptState::step for stateless SGD.
void sgd_step(Tensor& param, const Tensor& grad, double lr);

}  // namespace fgd::nn
