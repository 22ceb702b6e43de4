#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "fgd/rng.hpp"

namespace fgd::nn {

// Dense row-major tensor of doubles. Rank 1 and 2 are what the pipeline uses.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<std::size_t> s);
    static Tensor full(std::vector<std::size_t> s, double value);
    static Tensor vec(std::vector<double> values);
    static Tensor mat(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor scalar(double value) { return Tensor{{1}, {value}}; }
    // uniform(-s, s), s = 1/sqrt(fan_in)
    static Tensor uniform_init(std::vector<std::size_t> s, std::size_t fan_in, Rng& rng);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

bool all_finite(const Tensor& t);
void require_finite(const Tensor& t, const char* where);

// y = xW + b. x may be a single vector [k] or a batch [m,k]; W is [k,n],
// b is [n] (or empty for no bias).
Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);

// y[j] = sum_i x[i] * w[i,j]
Tensor matvec(const Tensor& w, const Tensor& x);
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& logits);
// -log softmax(logits)[label]
double cross_entropy(const Tensor& logits, std::size_t label);
// p is clamped into [1e-7, 1-1e-7] before the logs
double binary_cross_entropy(double p, int y);

inline constexpr double kProbClamp = 1e-7;

}  // namespace fgd::nn
