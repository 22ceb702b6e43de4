#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fgd/cogroups.hpp"
#include "fgd/params.hpp"
#include "fgd/tensor.hpp"

namespace fgd::hinrnn {

// position -> node index of the network
struct NodeOrdering {
    std::vector<std::size_t> positions;
};

// Level-synchronous BFS rooted at the maximum-degree node; ties at the root
// and inside each frontier go to the lexicographically smallest reviewer id.
NodeOrdering order_nodes(const groups::CoReviewNetwork& net);

// rows[k] holds the edge bits of ordering position k+1 towards positions
// 0..k, i.e. the prefix vectors of the adjacency under the ordering.
struct EdgeSequence {
    std::size_t n = 0;
    std::vector<std::vector<std::uint8_t>> rows;
};

// Symmetric 0/1 matrix with zero diagonal, aligned to a node ordering.
struct CollabMatrix {
    std::size_t n = 0;
    std::vector<std::uint8_t> bits;  // n*n

    static CollabMatrix zeros(std::size_t n) {
        return CollabMatrix{n, std::vector<std::uint8_t>(n * n, 0)};
    }
    std::uint8_t at(std::size_t i, std::size_t j) const { return bits[i * n + j]; }
    void set_edge(std::size_t i, std::size_t j, std::uint8_t v) {
        if (i == j) return;
        bits[i * n + j] = v;
        bits[j * n + i] = v;
    }
    std::size_t degree(std::size_t i) const {
        std::size_t d = 0;
        for (std::size_t j = 0; j < n; ++j) d += at(i, j);
        return d;
    }
    std::size_t edge_count() const;
};

EdgeSequence to_sequence(const groups::CoReviewNetwork& net, const NodeOrdering& ordering);
CollabMatrix from_sequence(const EdgeSequence& seq);

// fraction of gold edges present in the prediction; 1.0 when gold has none
double edge_accuracy(const CollabMatrix& predicted, const CollabMatrix& gold);
// fraction of members left non-isolated by the prediction
double node_accuracy(const CollabMatrix& predicted);

// connected components (size >= 2) of a matrix, each sorted, in canonical order
std::vector<std::vector<std::size_t>> matrix_components(const CollabMatrix& m);

using VectorMap = std::map<std::string, std::vector<double>>;

struct ModelConfig {
    std::size_t graph_hidden = 128;
    std::size_t edge_hidden = 16;
    std::size_t input_embed = 64;
    std::size_t feat_dim = 101;
    std::size_t n_max = 0;        // largest group size the model was sized for
    bool feature_blind = false;   // zero the reviewer vector at the input
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    bool has_acc = false;
    double edge_acc = 0.0;
    double node_acc = 0.0;
};

struct TrainOptions {
    double lr = 0.003;
    int epochs = 3000;
    std::uint64_t seed = 1;
    int eval_every = 0;  // free-running accuracy on the training set every k epochs
    std::function<bool(const EpochStats&)> on_epoch;  // return false to stop early
};

struct InferResult {
    NodeOrdering ordering;
    CollabMatrix matrix;
};

// Two jointly trained GRUs: a graph-state GRU whose input is a projection of
// [previous edge vector (padded) ++ current reviewer vector], and an edge
// GRU, seeded from a projection of the graph state, that emits one edge
// probability per earlier node.
class Model {
public:
    static Model init(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    // One graph-GRU step. s_prev must already be padded to n_max-1 (all-ones
    // for the first position). Honors feature_blind.
    nn::Tensor step(const nn::Tensor& h_prev, const nn::Tensor& s_prev,
                    const nn::Tensor& v) const;

    // Edge probabilities for ordering position i (1-based, i >= 2): the edge
    // GRU runs free, feeding back its own thresholded bits.
    std::vector<double> predict_edges(const nn::Tensor& h_i, std::size_t i) const;

    // Teacher-forced joint training on the observed adjacency of each network.
    std::vector<EpochStats> train(const std::vector<groups::CoReviewNetwork>& networks,
                                  const VectorMap& vectors, const TrainOptions& opts);

    // Autoregressive reconstruction; edges kept at probability >= 0.5, or
    // Bernoulli-sampled when sample is true.
    InferResult infer(const groups::CoReviewNetwork& net, const VectorMap& vectors,
                      bool sample = false, std::uint64_t sample_seed = 0) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

private:
    Model() = default;
    ModelConfig cfg_;
    nn::ParamStore store_;
};

}  // namespace fgd::hinrnn
