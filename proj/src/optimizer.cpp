#include "fgd/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace fgd::nn {

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
    if (!param.same_shape(grad)) throw std::invalid_argument("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) param.data[i] -= lr * grad.data[i];
}

void OptState::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

void OptState::step(ParamStore& params, const std::map<std::string, Tensor>& grads,
                    const Optimizer& opt) {
    if (opt.lr <= 0.0) throw std::invalid_argument("optimizer: learning rate must be positive");
    if (opt.kind == Optimizer::Kind::kSgd) {
        for (auto& [name, p] : params) {
            auto it = grads.find(name);
            if (it == grads.end()) continue;
            sgd_step(p, it->second, opt.lr);
        }
        return;
    }

    ++t_;
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        auto it = grads.find(name);
        if (it == grads.end()) continue;
        const Tensor& g = it->second;
        if (!p.same_shape(g)) throw std::invalid_argument("adam: shape mismatch for " + name);
        Tensor& m = m_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        Tensor& v = v_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g.data[i];
            m.data[i] = opt.beta1 * m.data[i] + (1.0 - opt.beta1) * gi;
            v.data[i] = opt.beta2 * v.data[i] + (1.0 - opt.beta2) * gi * gi;
            double mhat = m.data[i] / bc1;
            double vhat = v.data[i] / bc2;
            p.data[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

}  // namespace fgd::nn
