#include "fgd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "fgd/errors.hpp"
#include "fgd/rng.hpp"
#include "json.hpp"

namespace fgd::data {

using nlohmann::json;

std::vector<std::string> Corpus::reviewer_ids() const {
    std::set<std::string> ids;
    for (const Review& r : reviews) ids.insert(r.reviewer_id);
    return {ids.begin(), ids.end()};
}

std::map<std::string, std::vector<std::size_t>> Corpus::reviews_by_reviewer() const {
    std::map<std::string, std::vector<std::size_t>> by;
    for (std::size_t i = 0; i < reviews.size(); ++i) by[reviews[i].reviewer_id].push_back(i);
    return by;
}

std::optional<std::string> Corpus::reviewer_label_of(const std::string& reviewer_id) const {
    auto it = reviewer_labels.find(reviewer_id);
    if (it != reviewer_labels.end()) return it->second;
    for (const GoldGroup& g : gold_groups)
        for (const std::string& r : g.reviewer_ids)
            if (r == reviewer_id) return g.label;
    return std::nullopt;
}

// days_from_civil, Hinnant's algorithm
static int days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    int era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                   static_cast<unsigned>(d) - 1u;
    unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

int parse_date(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw DataError("bad date (want YYYY-MM-DD): " + iso);
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(iso[i])))
            throw DataError("bad date (want YYYY-MM-DD): " + iso);
    int y = std::stoi(iso.substr(0, 4));
    int m = std::stoi(iso.substr(5, 2));
    int d = std::stoi(iso.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31) throw DataError("date out of range: " + iso);
    return days_from_civil(y, m, d);
}

std::string format_date(int day) {
    // civil_from_days, inverse of the above
    int z = day + 719468;
    int era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    int y = static_cast<int>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    unsigned d = doy - (153 * mp + 2) / 5 + 1;
    unsigned m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
    y += m <= 2;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (!tokenize(cur).empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!tokenize(cur).empty()) out.push_back(cur);
    if (out.empty() && !tokenize(text).empty()) out.emplace_back(text);
    return out;
}

namespace {

Review parse_review_line(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError("reviews line " + std::to_string(line_no) + ": " + e.what());
    }
    auto need = [&](const char* field) -> const json& {
        if (!j.contains(field))
            throw DataError("reviews line " + std::to_string(line_no) + ": missing field \"" +
                            field + "\"");
        return j.at(field);
    };
    Review r;
    try {
        r.review_id = need("review_id").get<std::string>();
        r.reviewer_id = need("reviewer_id").get<std::string>();
        r.item_id = need("item_id").get<std::string>();
        r.rating = need("rating").get<int>();
        r.day = parse_date(need("date").get<std::string>());
        r.text = need("text").get<std::string>();
        if (j.contains("reviewer_label"))
            r.reviewer_label = j.at("reviewer_label").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError("reviews line " + std::to_string(line_no) + ": " + e.what());
    }
    if (r.rating < 1 || r.rating > 5)
        throw DataError("reviews line " + std::to_string(line_no) + ": rating out of 1..5");
    r.tokens = tokenize(r.text);
    if (r.tokens.empty())
        throw DataError("reviews line " + std::to_string(line_no) + ": text has no tokens");
    if (r.reviewer_label && *r.reviewer_label != kFraudLabel && *r.reviewer_label != kGenuineLabel)
        throw DataError("reviews line " + std::to_string(line_no) + ": bad reviewer_label");
    return r;
}

}  // namespace

Corpus load_corpus(const std::string& reviews_path, const std::string& groups_path) {
    std::ifstream in(reviews_path, std::ios::binary);
    if (!in) throw DataError("cannot open reviews file: " + reviews_path);
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen_review_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Review r = parse_review_line(line, line_no);
        if (!seen_review_ids.insert(r.review_id).second)
            throw DataError("reviews line " + std::to_string(line_no) + ": duplicate review_id " +
                            r.review_id);
        if (r.reviewer_label) {
            auto [it, inserted] = corpus.reviewer_labels.emplace(r.reviewer_id, *r.reviewer_label);
            if (!inserted && it->second != *r.reviewer_label)
                throw DataError("reviews line " + std::to_string(line_no) +
                                ": conflicting labels for reviewer " + r.reviewer_id);
        }
        corpus.reviews.push_back(std::move(r));
    }
    std::sort(corpus.reviews.begin(), corpus.reviews.end(),
              [](const Review& a, const Review& b) { return a.review_id < b.review_id; });

    if (!groups_path.empty()) {
        std::ifstream gin(groups_path, std::ios::binary);
        if (!gin) throw DataError("cannot open groups file: " + groups_path);
        std::set<std::string> reviewers;
        for (const Review& r : corpus.reviews) reviewers.insert(r.reviewer_id);
        std::size_t gline = 0;
        std::set<std::string> seen_gids;
        while (std::getline(gin, line)) {
            ++gline;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
                GoldGroup g;
                g.group_id = j.at("group_id").get<std::string>();
                g.reviewer_ids = j.at("reviewer_ids").get<std::vector<std::string>>();
                g.label = j.at("label").get<std::string>();
                if (g.label != kFraudLabel && g.label != kGenuineLabel)
                    throw DataError("groups line " + std::to_string(gline) + ": bad label");
                if (!seen_gids.insert(g.group_id).second)
                    throw DataError("groups line " + std::to_string(gline) +
                                    ": duplicate group_id " + g.group_id);
                for (const std::string& rid : g.reviewer_ids)
                    if (!reviewers.count(rid))
                        throw DataError("groups line " + std::to_string(gline) +
                                        ": unknown reviewer " + rid);
                std::sort(g.reviewer_ids.begin(), g.reviewer_ids.end());
                corpus.gold_groups.push_back(std::move(g));
            } catch (const json::exception& e) {
                throw DataError("groups line " + std::to_string(gline) + ": " + e.what());
            }
        }
        std::sort(corpus.gold_groups.begin(), corpus.gold_groups.end(),
                  [](const GoldGroup& a, const GoldGroup& b) { return a.group_id < b.group_id; });
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& reviews_path,
                 const std::string& groups_path) {
    std::ofstream out(reviews_path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + reviews_path);
    for (const Review& r : corpus.reviews) {
        json j;
        j["review_id"] = r.review_id;
        j["reviewer_id"] = r.reviewer_id;
        j["item_id"] = r.item_id;
        j["rating"] = r.rating;
        j["date"] = format_date(r.day);
        j["text"] = r.text;
        if (r.reviewer_label) j["reviewer_label"] = *r.reviewer_label;
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + reviews_path);
    if (!groups_path.empty()) {
        std::ofstream gout(groups_path, std::ios::binary);
        if (!gout) throw DataError("cannot open for writing: " + groups_path);
        for (const GoldGroup& g : corpus.gold_groups) {
            json j;
            j["group_id"] = g.group_id;
            j["reviewer_ids"] = g.reviewer_ids;
            j["label"] = g.label;
            gout << j.dump() << "\n";
        }
        if (!gout) throw DataError("write failed: " + groups_path);
    }
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_group_ids(
    std::vector<std::string> group_ids, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("split: ratio must be in (0,1)");
    std::sort(group_ids.begin(), group_ids.end());
    group_ids.erase(std::unique(group_ids.begin(), group_ids.end()), group_ids.end());
    if (group_ids.size() < 2) throw DataError("split: need at least 2 groups");

    Rng rng(sub_seed(seed, "split"));
    rng.shuffle(group_ids);
    auto n = static_cast<std::size_t>(group_ids.size());
    auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    n_train = std::max<std::size_t>(1, std::min(n - 1, n_train));
    std::vector<std::string> train(group_ids.begin(), group_ids.begin() + static_cast<long>(n_train));
    std::vector<std::string> test(group_ids.begin() + static_cast<long>(n_train), group_ids.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

}  // namespace fgd::data
