#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgd/hin_rnn.hpp"
#include "fgd/params.hpp"
#include "fgd/tensor.hpp"

namespace fgd::classify {

inline constexpr int kGenuine = 0;
inline constexpr int kFraudster = 1;

// Indices of the minimum-degree stratum to drop, or empty when the guards
// hold the group together (all degrees equal, or fewer than 2 would remain).
// Single pass: the stratum is computed once per call, never peeled iteratively.
std::vector<std::size_t> deviant_indices(const hinrnn::CollabMatrix& matrix);

// members/matrix must be aligned; returns the kept member indices
std::vector<std::size_t> remove_deviants(const hinrnn::CollabMatrix& matrix);

// componentwise mean over member vectors; all vectors must share one dim
std::vector<double> group_vector(const std::vector<std::vector<double>>& member_vectors);

struct HeadParams {
    nn::Tensor w;  // [feat, 2]
    nn::Tensor b;  // [2]

    void put(nn::ParamStore& store) const;
    static HeadParams get(const nn::ParamStore& store);
};

struct HeadTrainConfig {
    double lr = 0.01;
    int epochs = 300;
    std::uint64_t seed = 1;
};

struct HeadEpochLog {
    int epoch;
    double loss;
    double accuracy;
};

// Dense feat -> 2 softmax head with cross-entropy. A single-class training
// set degenerates to a constant head (with a warning on stderr).
HeadParams train_head(const std::vector<std::vector<double>>& vectors,
                      const std::vector<int>& labels, const HeadTrainConfig& cfg,
                      std::vector<HeadEpochLog>* log = nullptr);

// argmax of the softmax; exact ties resolve to genuine
int classify(const std::vector<double>& vec, const HeadParams& head);
double fraud_score(const std::vector<double>& vec, const HeadParams& head);

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

// fraudster is the positive class; undefined ratios collapse to 0
Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& gold);

}  // namespace fgd::classify
