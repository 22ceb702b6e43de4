#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgd/tensor.hpp"

namespace fgd::nn {

// Reverse-mode tape over vector-valued nodes. A tape is built per training
// step and discarded; parameter tensors live outside it.
class Tape {
public:
    enum class Op : std::uint8_t {
        kLeaf,
        kMatVec,        // a: W [k,n], b: x [k] -> [n]
        kAdd,           // elementwise
        kMul,           // elementwise
        kAffine,        // c0 * x + c1, elementwise
        kSigmoid,
        kTanh,
        kConcat,        // [n] ++ [m]
        kMax2,          // elementwise max; ties route gradient to the left arg
        kSum,           // [n] -> [1]
        kTrigramMean,   // a: taps [3], b: bias [D]; aux0..2: window means [D]
        kCrossEntropy,  // a: logits; label + class weight in ilabel/c1
        kBceLogit,      // a: logit [1]; target in c0, weight in c1
    };

    int leaf(Tensor value, bool param = false);
    int matvec_op(int w, int x);
    int add(int a, int b);
    int mul(int a, int b);
    int affine(int a, double scale, double shift);
    int sigmoid(int a);
    int tanh_op(int a);
    int concat(int a, int b);
    int max2(int a, int b);
    int sum(int a);
    int trigram_mean(int taps, int bias, Tensor m0, Tensor m1, Tensor m2);
    int cross_entropy_loss(int logits, std::size_t label, double weight = 1.0);
    int bce_logit_loss(int logit, double target, double weight = 1.0);

    // Accumulates d(loss)/d(node) for every node; loss must be scalar.
    void backward(int loss_id);

    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    std::size_t size() const { return nodes_.size(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    struct Node {
        Op op;
        int a = -1, b = -1;
        std::size_t ilabel = 0;
        double c0 = 0.0, c1 = 0.0;
        Tensor value;
        Tensor grad;
        Tensor aux0, aux1, aux2;
    };

    int push(Node n);
    std::vector<Node> nodes_;
};

class ParamStore;

// Registers every parameter in the store as a tape leaf; returns name -> id.
std::map<std::string, int> register_params(Tape& tape, const ParamStore& params);
std::map<std::string, Tensor> collect_grads(const Tape& tape,
                                            const std::map<std::string, int>& ids);

}  // namespace fgd::nn
