#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgd/corpus.hpp"

namespace fgd::data {

// Desk-scale corpus generator with planted fraud/genuine groups. Groups get
// disjoint reviewer and item pools, so the co-review components are exactly
// the planted groups. A camouflaged group carries one opposite-type member
// attached through two extra "bridge" items shared with a single insider,
// which makes it the minimum-degree node of the group.
struct SynthConfig {
    int n_groups = 40;
    int group_size_min = 3;
    int group_size_max = 5;
    double fraud_fraction = 0.5;
    double camouflage_rate = 0.0;  // chance a group (size >= 3) gets one opposite-type member

    int items_per_group = 3;  // co-reviewed by every regular member; must be >= 2

    // vocabulary split: per-type pools plus a shared pool
    int vocab_fraud = 150;
    int vocab_genuine = 150;
    int vocab_shared = 100;
    double shared_token_prob = 0.3;  // chance a token comes from the shared pool

    // chance a group's item rating is negative (1-2) rather than positive (4-5)
    double fraud_negative_prob = 0.9;
    double genuine_negative_prob = 0.1;

    int tokens_per_review_min = 12;
    int tokens_per_review_max = 28;
    int time_spread_days = 10;  // review dates inside a group span at most this

    std::uint64_t seed = 1;
};

Corpus generate_synthetic(const SynthConfig& cfg);

}  // namespace fgd::data
