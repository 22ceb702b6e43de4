#include "fgd/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "fgd/errors.hpp"
#include "fgd/rng.hpp"

namespace fgd::data {

namespace {

void validate(const SynthConfig& cfg) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (cfg.n_groups < 1) throw DataError("synth: n_groups must be >= 1");
    if (cfg.group_size_min < 2 || cfg.group_size_max < cfg.group_size_min)
        throw DataError("synth: group sizes must satisfy 2 <= min <= max");
    if (!prob(cfg.fraud_fraction) || !prob(cfg.camouflage_rate) || !prob(cfg.shared_token_prob) ||
        !prob(cfg.fraud_negative_prob) || !prob(cfg.genuine_negative_prob))
        throw DataError("synth: probabilities must lie in [0,1]");
    if (cfg.items_per_group < 2)
        throw DataError("synth: infeasible config, need at least 2 items per group");
    if (cfg.vocab_fraud < 1 || cfg.vocab_genuine < 1 || cfg.vocab_shared < 1)
        throw DataError("synth: vocabulary pools must be non-empty");
    if (cfg.tokens_per_review_min < 1 || cfg.tokens_per_review_max < cfg.tokens_per_review_min)
        throw DataError("synth: bad tokens_per_review range");
    if (cfg.time_spread_days < 0 || cfg.time_spread_days > 28)
        throw DataError("synth: time_spread_days must be in [0,28]");
}

std::string idstr(const char* prefix, int n) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s%06d", prefix, n);
    return buf;
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& cfg) {
    validate(cfg);
    Rng rng(sub_seed(cfg.seed, "synth"));

    auto draw_token = [&](bool fraud_type) {
        if (rng.bernoulli(cfg.shared_token_prob))
            return "ws" + std::to_string(rng.index(static_cast<std::size_t>(cfg.vocab_shared)));
        if (fraud_type)
            return "wf" + std::to_string(rng.index(static_cast<std::size_t>(cfg.vocab_fraud)));
        return "wg" + std::to_string(rng.index(static_cast<std::size_t>(cfg.vocab_genuine)));
    };

    auto make_text = [&](bool fraud_type) {
        int n_tokens = static_cast<int>(
            rng.uniform_int(cfg.tokens_per_review_min, cfg.tokens_per_review_max));
        std::string text;
        int since_break = 0;
        for (int t = 0; t < n_tokens; ++t) {
            if (!text.empty()) text += " ";
            text += draw_token(fraud_type);
            if (++since_break >= 7 && t + 1 < n_tokens) {
                text += ".";
                since_break = 0;
            }
        }
        text += ".";
        return text;
    };

    Corpus corpus;
    int next_reviewer = 0, next_item = 0, next_review = 0;
    int base_day = parse_date("2012-01-01");

    for (int g = 0; g < cfg.n_groups; ++g) {
        int size = static_cast<int>(rng.uniform_int(cfg.group_size_min, cfg.group_size_max));
        bool fraud_group = rng.bernoulli(cfg.fraud_fraction);
        bool camouflaged = size >= 3 && rng.bernoulli(cfg.camouflage_rate);
        int group_day = base_day + static_cast<int>(rng.uniform_int(0, 1500));

        std::vector<std::string> members(static_cast<std::size_t>(size));
        for (auto& m : members) m = idstr("u", next_reviewer++);

        // last member is the planted deviant; member 0 is its bridge insider
        int deviant = camouflaged ? size - 1 : -1;

        auto rating_for_group = [&] {
            double neg_p = fraud_group ? cfg.fraud_negative_prob : cfg.genuine_negative_prob;
            if (rng.bernoulli(neg_p)) return static_cast<int>(rng.uniform_int(1, 2));
            return static_cast<int>(rng.uniform_int(4, 5));
        };

        struct Item {
            std::string id;
            int rating;
        };
        std::vector<Item> core(static_cast<std::size_t>(cfg.items_per_group));
        for (auto& it : core) it = {idstr("p", next_item++), rating_for_group()};
        std::vector<Item> bridge;
        if (deviant >= 0)
            for (int k = 0; k < 2; ++k) bridge.push_back({idstr("p", next_item++), rating_for_group()});

        auto emit = [&](int member, const Item& item) {
            Review r;
            r.review_id = idstr("v", next_review++);
            r.reviewer_id = members[static_cast<std::size_t>(member)];
            r.item_id = item.id;
            r.rating = item.rating;
            r.day = group_day + static_cast<int>(rng.uniform_int(0, cfg.time_spread_days));
            bool member_is_fraud = (member == deviant) ? !fraud_group : fraud_group;
            r.text = make_text(member_is_fraud);
            r.tokens = tokenize(r.text);
            r.reviewer_label = member_is_fraud ? kFraudLabel : kGenuineLabel;
            corpus.reviewer_labels[r.reviewer_id] = *r.reviewer_label;
            corpus.reviews.push_back(std::move(r));
        };

        for (int m = 0; m < size; ++m) {
            if (m == deviant) continue;
            for (const Item& it : core) emit(m, it);
        }
        if (deviant >= 0) {
            for (const Item& it : bridge) {
                emit(0, it);  // bridge insider
                emit(deviant, it);
            }
        }

        GoldGroup gg;
        gg.group_id = idstr("s", g);
        gg.reviewer_ids = members;
        std::sort(gg.reviewer_ids.begin(), gg.reviewer_ids.end());
        gg.label = fraud_group ? kFraudLabel : kGenuineLabel;
        corpus.gold_groups.push_back(std::move(gg));
    }

    std::sort(corpus.reviews.begin(), corpus.reviews.end(),
              [](const Review& a, const Review& b) { return a.review_id < b.review_id; });
    return corpus;
}

}  // namespace fgd::data
