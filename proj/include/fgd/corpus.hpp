#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fgd::data {

inline constexpr const char* kFraudLabel = "fraudster";
inline constexpr const char* kGenuineLabel = "genuine";

struct Review {
    std::string review_id;
    std::string reviewer_id;
    std::string item_id;
    int rating = 0;  // 1..5
    int day = 0;     // days since civil epoch, parsed from ISO date
    std::string text;
    std::vector<std::string> tokens;
    std::optional<std::string> reviewer_label;
};

struct GoldGroup {
    std::string group_id;
    std::vector<std::string> reviewer_ids;
    std::string label;
};

struct Corpus {
    std::vector<Review> reviews;  // canonical order: sorted by review_id
    std::vector<GoldGroup> gold_groups;

    // explicit labels from the reviews file; gold-group membership can fill
    // gaps via reviewer_label_of
    std::map<std::string, std::string> reviewer_labels;

    std::vector<std::string> reviewer_ids() const;
    std::map<std::string, std::vector<std::size_t>> reviews_by_reviewer() const;
    std::optional<std::string> reviewer_label_of(const std::string& reviewer_id) const;
};

// ISO "YYYY-MM-DD" <-> day count (proleptic Gregorian, civil-days algorithm)
int parse_date(const std::string& iso);
std::string format_date(int day);

// lowercase, split on non-alphanumeric runs
std::vector<std::string> tokenize(std::string_view text);
// split on . ! ? — a review with no terminator is one sentence
std::vector<std::string> split_sentences(std::string_view text);

Corpus load_corpus(const std::string& reviews_path, const std::string& groups_path = "");
void save_corpus(const Corpus& corpus, const std::string& reviews_path,
                 const std::string& groups_path = "");

// Shuffles the ids with the given seed and cuts at round(ratio*n), clamped so
// both sides are non-empty. Ids are deduplicated and sorted before shuffling
// so the result depends only on the set, the ratio and the seed.
std::pair<std::vector<std::string>, std::vector<std::string>> split_group_ids(
    std::vector<std::string> group_ids, double ratio, std::uint64_t seed);

}  // namespace fgd::data
