#include "fgd/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fgd/errors.hpp"

namespace fgd::nn {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> s) {
    std::size_t n = shape_product(s);
    return Tensor{std::move(s), std::vector<double>(n, 0.0)};
}

Tensor Tensor::full(std::vector<std::size_t> s, double value) {
    std::size_t n = shape_product(s);
    return Tensor{std::move(s), std::vector<double>(n, value)};
}

Tensor Tensor::vec(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor{{n}, std::move(values)};
}

Tensor Tensor::mat(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
        throw std::invalid_argument("Tensor::mat: value count does not match rows*cols");
    return Tensor{{rows, cols}, std::move(values)};
}

Tensor Tensor::uniform_init(std::vector<std::size_t> s, std::size_t fan_in, Rng& rng) {
    Tensor t = zeros(std::move(s));
    double bound = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 1.0;
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw std::invalid_argument("Tensor::rows: tensor is not rank 2");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw std::invalid_argument("Tensor::cols: tensor is not rank 2");
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_finite(const Tensor& t, const char* where) {
    if (!all_finite(t)) throw NumericError(std::string("non-finite value in ") + where);
}

Tensor matvec(const Tensor& w, const Tensor& x) {
    if (w.rank() != 2 || x.rank() != 1 || w.shape[0] != x.shape[0])
        throw std::invalid_argument("matvec: shape mismatch");
    std::size_t k = w.shape[0], n = w.shape[1];
    Tensor y = Tensor::zeros({n});
    for (std::size_t i = 0; i < k; ++i) {
        double xi = x.data[i];
        if (xi == 0.0) continue;
        const double* row = w.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) y.data[j] += xi * row[j];
    }
    return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
        throw std::invalid_argument("matmul: shape mismatch");
    std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor y = Tensor::zeros({m, n});
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            double av = a.data[r * k + i];
            if (av == 0.0) continue;
            const double* brow = b.data.data() + i * n;
            double* yrow = y.data.data() + r * n;
            for (std::size_t j = 0; j < n; ++j) yrow[j] += av * brow[j];
        }
    }
    return y;
}

Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
    if (weights.rank() != 2) throw std::invalid_argument("dense_forward: weights must be rank 2");
    std::size_t n = weights.shape[1];
    if (!bias.data.empty() && (bias.rank() != 1 || bias.shape[0] != n))
        throw std::invalid_argument("dense_forward: bias shape mismatch");

    auto add_bias = [&](Tensor& y, std::size_t row) {
        if (bias.data.empty()) return;
        for (std::size_t j = 0; j < n; ++j) y.data[row * n + j] += bias.data[j];
    };

    if (x.rank() == 1) {
        if (x.shape[0] != weights.shape[0])
            throw std::invalid_argument("dense_forward: input dim mismatch");
        Tensor y = matvec(weights, x);
        add_bias(y, 0);
        return y;
    }
    if (x.rank() == 2) {
        if (x.shape[1] != weights.shape[0])
            throw std::invalid_argument("dense_forward: input dim mismatch");
        Tensor y = matmul(x, weights);
        for (std::size_t r = 0; r < y.shape[0]; ++r) add_bias(y, r);
        return y;
    }
    throw std::invalid_argument("dense_forward: input must be rank 1 or 2");
}

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 1 || logits.size() == 0)
        throw std::invalid_argument("softmax: logits must be a non-empty vector");
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    Tensor p = Tensor::zeros({logits.size()});
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p.data[i] = std::exp(logits.data[i] - m);
        z += p.data[i];
    }
    for (double& v : p.data) v /= z;
    return p;
}

double cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1) throw std::invalid_argument("cross_entropy: logits must be rank 1");
    if (label >= logits.size()) throw std::invalid_argument("cross_entropy: label out of range");
    // log-sum-exp form, no intermediate softmax
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    double z = 0.0;
    for (double v : logits.data) z += std::exp(v - m);
    return std::log(z) - (logits.data[label] - m);
}

double binary_cross_entropy(double p, int y) {
    if (y != 0 && y != 1) throw std::invalid_argument("binary_cross_entropy: y must be 0 or 1");
    if (!std::isfinite(p)) throw NumericError("binary_cross_entropy: non-finite probability");
    p = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
    return y ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace fgd::nn
