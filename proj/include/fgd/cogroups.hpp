#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fgd/corpus.hpp"

namespace fgd::groups {

// One connected component of the co-review graph. Reviewers are sorted;
// edges are index pairs (i < j) into that order.
struct CoReviewNetwork {
    std::string group_id;
    std::vector<std::string> reviewers;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::size_t size() const { return reviewers.size(); }
    std::vector<std::vector<std::uint8_t>> adjacency() const;
};

// Reviewer pairs that rated at least min_items common items with the same
// rating, each pair of reviews within window_days of each other. Returned
// as sorted (id_a < id_b) pairs in canonical order.
std::vector<std::pair<std::string, std::string>> co_review_edges(const data::Corpus& corpus,
                                                                 int window_days = 28,
                                                                 int min_items = 2);

// Connected components of the edge set; isolated reviewers never appear.
// Components are ordered by smallest member id and named g000000, g000001...
std::vector<CoReviewNetwork> candidate_groups(
    const std::vector<std::pair<std::string, std::string>>& edges);

void save_candidate_groups(const std::vector<CoReviewNetwork>& nets, const std::string& path);
std::vector<CoReviewNetwork> load_candidate_groups(const std::string& path);

}  // namespace fgd::groups
