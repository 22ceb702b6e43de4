#include "fgd/cogroups.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "fgd/errors.hpp"
#include "fgd/union_find.hpp"
#include "json.hpp"

namespace fgd::groups {

using nlohmann::json;

std::vector<std::vector<std::uint8_t>> CoReviewNetwork::adjacency() const {
    std::vector<std::vector<std::uint8_t>> a(size(), std::vector<std::uint8_t>(size(), 0));
    for (auto [i, j] : edges) {
        a[i][j] = 1;
        a[j][i] = 1;
    }
    return a;
}

std::vector<std::pair<std::string, std::string>> co_review_edges(const data::Corpus& corpus,
                                                                 int window_days, int min_items) {
    if (window_days < 0) throw std::invalid_argument("co_review_edges: negative window");
    if (min_items < 1) throw std::invalid_argument("co_review_edges: min_items must be >= 1");

    struct Entry {
        std::string reviewer;
        int rating;
        int day;
    };
    std::map<std::string, std::vector<Entry>> by_item;
    for (const data::Review& r : corpus.reviews)
        by_item[r.item_id].push_back({r.reviewer_id, r.rating, r.day});

    // distinct qualifying items per reviewer pair
    std::map<std::pair<std::string, std::string>, std::set<std::string>> qualifying;
    for (const auto& [item, entries] : by_item) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                const Entry& a = entries[i];
                const Entry& b = entries[j];
                if (a.reviewer == b.reviewer) continue;
                if (a.rating != b.rating) continue;
                if (std::abs(a.day - b.day) > window_days) continue;
                auto key = a.reviewer < b.reviewer ? std::make_pair(a.reviewer, b.reviewer)
                                                   : std::make_pair(b.reviewer, a.reviewer);
                qualifying[key].insert(item);
            }
        }
    }

    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [pair, items] : qualifying)
        if (items.size() >= static_cast<std::size_t>(min_items)) edges.push_back(pair);
    return edges;  // map iteration is already canonical
}

std::vector<CoReviewNetwork> candidate_groups(
    const std::vector<std::pair<std::string, std::string>>& edges) {
    std::map<std::string, std::size_t> index;
    std::vector<std::string> ids;
    for (const auto& [a, b] : edges) {
        for (const std::string& r : {a, b}) {
            if (index.emplace(r, ids.size()).second) ids.push_back(r);
        }
    }

    UnionFind uf(ids.size());
    for (const auto& [a, b] : edges) uf.unite(index.at(a), index.at(b));

    // bucket members by root, keyed by the smallest member id for ordering
    std::map<std::string, std::vector<std::string>> components;
    std::map<std::size_t, std::string> root_key;
    std::vector<std::string> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    for (const std::string& r : sorted_ids) {
        std::size_t root = uf.find(index.at(r));
        auto it = root_key.find(root);
        if (it == root_key.end()) it = root_key.emplace(root, r).first;
        components[it->second].push_back(r);
    }

    std::vector<CoReviewNetwork> nets;
    char buf[16];
    for (auto& [key, members] : components) {
        CoReviewNetwork net;
        std::snprintf(buf, sizeof(buf), "g%06zu", nets.size());
        net.group_id = buf;
        net.reviewers = members;  // already sorted: inserted in sorted order
        std::map<std::string, std::size_t> local;
        for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = i;
        for (const auto& [a, b] : edges) {
            auto ia = local.find(a);
            if (ia == local.end()) continue;
            auto ib = local.find(b);
            if (ib == local.end()) continue;
            auto lo = std::min(ia->second, ib->second);
            auto hi = std::max(ia->second, ib->second);
            net.edges.emplace_back(lo, hi);
        }
        std::sort(net.edges.begin(), net.edges.end());
        nets.push_back(std::move(net));
    }
    return nets;
}

void save_candidate_groups(const std::vector<CoReviewNetwork>& nets, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const CoReviewNetwork& net : nets) {
        json j;
        j["group_id"] = net.group_id;
        j["reviewer_ids"] = net.reviewers;
        json edges = json::array();
        for (auto [a, b] : net.edges)
            edges.push_back(json::array({net.reviewers[a], net.reviewers[b]}));
        j["edges"] = std::move(edges);
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<CoReviewNetwork> load_candidate_groups(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open candidate groups file: " + path);
    std::vector<CoReviewNetwork> nets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            CoReviewNetwork net;
            net.group_id = j.at("group_id").get<std::string>();
            net.reviewers = j.at("reviewer_ids").get<std::vector<std::string>>();
            std::map<std::string, std::size_t> local;
            for (std::size_t i = 0; i < net.reviewers.size(); ++i) local[net.reviewers[i]] = i;
            for (const auto& e : j.at("edges")) {
                std::string a = e.at(0).get<std::string>();
                std::string b = e.at(1).get<std::string>();
                auto lo = std::min(local.at(a), local.at(b));
                auto hi = std::max(local.at(a), local.at(b));
                net.edges.emplace_back(lo, hi);
            }
            std::sort(net.edges.begin(), net.edges.end());
            nets.push_back(std::move(net));
        } catch (const std::exception& e) {
            throw DataError("candidate groups line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return nets;
}

}  // namespace fgd::groups
