#include <cmath>

#include "doctest.h"
#include "fgd/classifier.hpp"
#include "fgd/errors.hpp"
#include "fgd/gradcheck.hpp"
#include "fgd/rng.hpp"
#include "oracles.hpp"

using namespace fgd;
using namespace fgd::classify;
using hinrnn::CollabMatrix;
using nn::Tensor;

namespace {

CollabMatrix from_edges(std::size_t n,
                        const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    CollabMatrix m = CollabMatrix::zeros(n);
    for (auto [a, b] : edges) m.set_edge(a, b, 1);
    return m;
}

}  // namespace

TEST_CASE("remove_deviants drops the minimum-degree stratum once") {
    SUBCASE("pendant node is removed") {
        // triangle r1,r2,r3 plus pendant r4 on r1
        CollabMatrix m = from_edges(4, {{0, 1}, {0, 2}, {1, 2}, {0, 3}});
        auto kept = remove_deviants(m);
        CHECK(kept == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("equal degrees leave the group unchanged") {
        CollabMatrix m = from_edges(3, {{0, 1}, {0, 2}, {1, 2}});
        CHECK(remove_deviants(m) == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("pairs are never pruned") {
        CollabMatrix m = from_edges(2, {{0, 1}});
        CHECK(remove_deviants(m) == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("a stratum that would leave fewer than 2 is kept") {
        // star: removing all three leaves would leave just the hub
        CollabMatrix m = from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
        CHECK(remove_deviants(m).size() == 4);
    }
    SUBCASE("ties remove the whole stratum") {
        // two pendants hanging off a triangle
        CollabMatrix m = from_edges(5, {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 4}});
        auto kept = remove_deviants(m);
        CHECK(kept == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("pruning never empties a group or leaves a singleton") {
        Rng rng(19);
        for (int t = 0; t < 200; ++t) {
            std::size_t n = 2 + rng.index(7);
            CollabMatrix m = CollabMatrix::zeros(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (rng.bernoulli(0.4)) m.set_edge(i, j, 1);
            auto kept = remove_deviants(m);
            CHECK(kept.size() >= 2);
        }
    }
}

TEST_CASE("group_vector is the componentwise mean") {
    SUBCASE("identical members collapse to themselves") {
        std::vector<double> v{0.25, -1.0, 3.0};
        auto g = group_vector({v, v, v});
        CHECK(g == v);
    }
    SUBCASE("toy two-member mean") {
        auto g = group_vector({{0, 1}, {1, 0}});
        CHECK(g[0] == doctest::Approx(0.5));
        CHECK(g[1] == doctest::Approx(0.5));
    }
    SUBCASE("seven random members match a summation oracle") {
        Rng rng(23);
        std::vector<std::vector<double>> members;
        for (int i = 0; i < 7; ++i) {
            std::vector<double> v(5);
            for (double& x : v) x = rng.uniform(-2, 2);
            members.push_back(v);
        }
        auto g = group_vector(members);
        for (std::size_t k = 0; k < 5; ++k) {
            double s = 0;
            for (const auto& v : members) s += v[k];
            CHECK(std::abs(g[k] - s / 7.0) < 1e-12);
        }
        // permutation invariance
        std::reverse(members.begin(), members.end());
        CHECK(group_vector(members) == g);
    }
    SUBCASE("mean stays inside the componentwise min/max") {
        Rng rng(29);
        std::vector<std::vector<double>> members;
        for (int i = 0; i < 4; ++i) {
            std::vector<double> v(3);
            for (double& x : v) x = rng.uniform(-1, 1);
            members.push_back(v);
        }
        auto g = group_vector(members);
        for (std::size_t k = 0; k < 3; ++k) {
            double lo = members[0][k], hi = members[0][k];
            for (const auto& v : members) {
                lo = std::min(lo, v[k]);
                hi = std::max(hi, v[k]);
            }
            CHECK(g[k] >= lo);
            CHECK(g[k] <= hi);
        }
    }
    CHECK_THROWS_AS(group_vector({}), std::invalid_argument);
    CHECK_THROWS_AS(group_vector({{1.0}, {1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("train_head separates separable group vectors") {
    Rng rng(37);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> v(6);
        int label = i % 2;
        for (std::size_t k = 0; k < 6; ++k)
            v[k] = (label ? 0.8 : -0.8) + rng.uniform(-0.3, 0.3);
        xs.push_back(v);
        ys.push_back(label);
    }
    HeadTrainConfig cfg;
    cfg.epochs = 150;
    cfg.seed = 3;
    std::vector<HeadEpochLog> log;
    HeadParams head = train_head(xs, ys, cfg, &log);
    CHECK(log.back().accuracy >= 0.95);

    long correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (classify(xs[i], head) == ys[i]) ++correct;
    CHECK(static_cast<double>(correct) / xs.size() >= 0.95);

    SUBCASE("scores order with the logits") {
        std::vector<double> strong_fraud(6, 0.9), strong_genuine(6, -0.9);
        CHECK(fraud_score(strong_fraud, head) > fraud_score(strong_genuine, head));
        CHECK(classify(strong_fraud, head) == kFraudster);
    }
    SUBCASE("zero epochs returns the initialization") {
        HeadTrainConfig z;
        z.epochs = 0;
        z.seed = 3;
        HeadParams init = train_head(xs, ys, z);
        Rng r2(sub_seed(3, "head-init"));
        HeadParams expect{Tensor::uniform_init({6, 2}, 6, r2), Tensor::uniform_init({2}, 6, r2)};
        CHECK(init.w.data == expect.w.data);
        CHECK(init.b.data == expect.b.data);
    }
}

TEST_CASE("gradcheck of the classifier head") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        nn::ParamStore store;
        store.put("head.w", Tensor::uniform_init({5, 2}, 5, rng));
        store.put("head.b", Tensor::uniform_init({2}, 5, rng));
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform(-1, 1);
        auto res = nn::grad_check(store, [&](nn::Tape& t, const std::map<std::string, int>& ids) {
            int xv = t.leaf(Tensor::vec(x));
            int logits = t.add(t.matvec_op(ids.at("head.w"), xv), ids.at("head.b"));
            return t.cross_entropy_loss(logits, seed % 2, 1.3);
        });
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("single-class training degenerates to a constant head") {
    std::vector<std::vector<double>> xs{{1, 2}, {3, 4}};
    std::vector<int> ys{kFraudster, kFraudster};
    HeadParams head = train_head(xs, ys, HeadTrainConfig{});
    CHECK(classify({0, 0}, head) == kFraudster);
    CHECK(classify({-5, 9}, head) == kFraudster);
}

TEST_CASE("classify breaks exact ties toward genuine") {
    HeadParams zero{Tensor::zeros({3, 2}), Tensor::zeros({2})};
    CHECK(classify({1, 2, 3}, zero) == kGenuine);
    // determinism
    std::vector<double> v{0.3, -0.1, 0.2};
    Rng rng(5);
    HeadParams head{Tensor::uniform_init({3, 2}, 3, rng), Tensor::uniform_init({2}, 3, rng)};
    CHECK(classify(v, head) == classify(v, head));
}

TEST_CASE("evaluate matches a confusion-matrix oracle") {
    SUBCASE("perfect predictions") {
        Metrics m = evaluate({1, 1}, {1, 1});
        CHECK(m.precision == doctest::Approx(1.0));
        CHECK(m.recall == doctest::Approx(1.0));
        CHECK(m.f1 == doctest::Approx(1.0));
    }
    SUBCASE("one of each error") {
        Metrics m = evaluate({1, 1, 0}, {1, 0, 1});
        CHECK(m.precision == doctest::Approx(0.5));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(0.5));
    }
    SUBCASE("degenerate cases collapse to zero") {
        Metrics m = evaluate({0, 0}, {1, 1});
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.f1 == 0.0);
    }
    SUBCASE("random configurations, exact integer arithmetic") {
        Rng rng(41);
        for (int t = 0; t < 500; ++t) {
            std::size_t n = 1 + rng.index(30);
            std::vector<int> pred(n), gold(n);
            for (std::size_t i = 0; i < n; ++i) {
                pred[i] = rng.bernoulli(0.5) ? 1 : 0;
                gold[i] = rng.bernoulli(0.5) ? 1 : 0;
            }
            Metrics m = evaluate(pred, gold);
            auto c = oracles::count_confusion(pred, gold);
            CHECK(m.tp == c.tp);
            CHECK(m.fp == c.fp);
            CHECK(m.fn == c.fn);
            CHECK(m.tn == c.tn);
            double p = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
            double r = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 0.0;
            double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
            CHECK(std::abs(m.precision - p) < 1e-12);
            CHECK(std::abs(m.recall - r) < 1e-12);
            CHECK(std::abs(m.f1 - f) < 1e-12);
        }
    }
    CHECK_THROWS_AS(evaluate({}, {}), DataError);
    CHECK_THROWS_AS(evaluate({1}, {1, 0}), DataError);
}
