#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fgd/errors.hpp"
#include "fgd/gradcheck.hpp"
#include "fgd/hin_rnn.hpp"
#include "fgd/rng.hpp"
#include "oracles.hpp"

using namespace fgd;
using namespace fgd::hinrnn;
using groups::CoReviewNetwork;
using nn::Tensor;

namespace {

CoReviewNetwork make_net(std::vector<std::string> reviewers,
                         std::vector<std::pair<std::size_t, std::size_t>> edges,
                         const char* id = "g0") {
    CoReviewNetwork n;
    n.group_id = id;
    n.reviewers = std::move(reviewers);
    n.edges = std::move(edges);
    return n;
}

VectorMap flat_vectors(const CoReviewNetwork& net, std::size_t dim, std::uint64_t seed) {
    VectorMap m;
    Rng rng(seed);
    for (const auto& r : net.reviewers) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.uniform(-1, 1);
        m[r] = v;
    }
    return m;
}

// random connected graph on n labelled nodes
CoReviewNetwork random_connected(std::size_t n, double p, Rng& rng, const char* id = "r") {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    // random spanning tree, then extra edges
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(rng.index(i), i);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return make_net(names, edges, id);
}

ModelConfig small_cfg(std::size_t n_max, std::size_t feat, bool blind = false) {
    ModelConfig c;
    c.graph_hidden = 12;
    c.edge_hidden = 6;
    c.input_embed = 8;
    c.feat_dim = feat;
    c.n_max = n_max;
    c.feature_blind = blind;
    return c;
}

}  // namespace

TEST_CASE("order_nodes BFS policy") {
    SUBCASE("path roots at the middle node") {
        auto net = make_net({"a", "b", "c"}, {{0, 1}, {1, 2}});
        auto ord = order_nodes(net);
        std::vector<std::string> got;
        for (std::size_t p : ord.positions) got.push_back(net.reviewers[p]);
        CHECK(got == std::vector<std::string>{"b", "a", "c"});
    }
    SUBCASE("triangle falls back to lexicographic order") {
        auto net = make_net({"r1", "r2", "r3"}, {{0, 1}, {0, 2}, {1, 2}});
        auto ord = order_nodes(net);
        std::vector<std::string> got;
        for (std::size_t p : ord.positions) got.push_back(net.reviewers[p]);
        CHECK(got == std::vector<std::string>{"r1", "r2", "r3"});
    }
    SUBCASE("star roots at the hub") {
        auto net = make_net({"l1", "l2", "l3", "s"}, {{3, 0}, {3, 1}, {3, 2}});
        auto ord = order_nodes(net);
        std::vector<std::string> got;
        for (std::size_t p : ord.positions) got.push_back(net.reviewers[p]);
        CHECK(got == std::vector<std::string>{"s", "l1", "l2", "l3"});
    }
}

TEST_CASE("to_sequence reads prefix vectors off the adjacency") {
    SUBCASE("K3") {
        auto net = make_net({"a", "b", "c"}, {{0, 1}, {0, 2}, {1, 2}});
        auto seq = to_sequence(net, order_nodes(net));
        REQUIRE(seq.rows.size() == 2);
        CHECK(seq.rows[0] == std::vector<std::uint8_t>{1});
        CHECK(seq.rows[1] == std::vector<std::uint8_t>{1, 1});
    }
    SUBCASE("path ordered [b,a,c]") {
        auto net = make_net({"a", "b", "c"}, {{0, 1}, {1, 2}});
        auto seq = to_sequence(net, order_nodes(net));
        REQUIRE(seq.rows.size() == 2);
        CHECK(seq.rows[0] == std::vector<std::uint8_t>{1});       // a-b
        CHECK(seq.rows[1] == std::vector<std::uint8_t>{1, 0});    // c-b, not c-a
    }
    SUBCASE("single edge") {
        auto net = make_net({"a", "b"}, {{0, 1}});
        auto seq = to_sequence(net, order_nodes(net));
        REQUIRE(seq.rows.size() == 1);
        CHECK(seq.rows[0] == std::vector<std::uint8_t>{1});
    }
}

TEST_CASE("from_sequence inverts to_sequence") {
    SUBCASE("single edge matrix") {
        EdgeSequence seq;
        seq.n = 2;
        seq.rows = {{1}};
        CollabMatrix m = from_sequence(seq);
        CHECK(m.at(0, 1) == 1);
        CHECK(m.at(1, 0) == 1);
        CHECK(m.at(0, 0) == 0);
    }
    SUBCASE("empty-edge sequence gives the zero matrix") {
        EdgeSequence seq;
        seq.n = 3;
        seq.rows = {{0}, {0, 0}};
        CollabMatrix m = from_sequence(seq);
        CHECK(m.edge_count() == 0);
    }
    SUBCASE("ragged rows are rejected") {
        EdgeSequence seq;
        seq.n = 3;
        seq.rows = {{1}, {1}};
        CHECK_THROWS_AS(from_sequence(seq), std::invalid_argument);
    }
    SUBCASE("round-trip on 100 random graphs up to n=12") {
        Rng rng(77);
        for (int t = 0; t < 100; ++t) {
            std::size_t n = 2 + rng.index(11);
            auto net = random_connected(n, 0.3, rng);
            auto ord = order_nodes(net);
            auto seq = to_sequence(net, ord);
            CollabMatrix m = from_sequence(seq);
            // matrix must match the adjacency permuted by the ordering
            auto adj = net.adjacency();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    CHECK(m.at(i, j) == adj[ord.positions[i]][ord.positions[j]]);
            // and survive a second encode pass
            auto seq2 = to_sequence(net, ord);
            CHECK(seq2.rows == seq.rows);
        }
    }
}

TEST_CASE("step zero-parameter identities") {
    ModelConfig cfg = small_cfg(4, 3);
    Model m = Model::init(cfg, 1);
    for (auto& [name, t] : m.params())
        for (double& v : t.data) v = 0.0;

    Tensor h = Tensor::vec({0.2, -0.4, 0.8, 0.1, 0.0, 0.3, -0.2, 0.5, 0.9, -0.7, 0.4, 0.6});
    Tensor s = Tensor::full({3}, 1.0);
    Tensor v = Tensor::vec({0.5, -0.5, 0.25});
    Tensor out = m.step(h, s, v);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(0.5 * h.data[i]));

    Tensor h0 = Tensor::zeros({12});
    Tensor out0 = m.step(h0, s, v);
    for (double x : out0.data) CHECK(x == doctest::Approx(0.0));

    CHECK_THROWS_AS(m.step(h, Tensor::zeros({5}), v), std::invalid_argument);
}

TEST_CASE("predict_edges zero parameters give 0.5 everywhere") {
    ModelConfig cfg = small_cfg(5, 3);
    Model m = Model::init(cfg, 1);
    for (auto& [name, t] : m.params())
        for (double& v : t.data) v = 0.0;
    Tensor h = Tensor::zeros({12});
    auto p2 = m.predict_edges(h, 2);
    REQUIRE(p2.size() == 1);
    CHECK(p2[0] == doctest::Approx(0.5));
    auto p4 = m.predict_edges(h, 4);
    REQUIRE(p4.size() == 3);
    for (double p : p4) CHECK(p == doctest::Approx(0.5));
    CHECK_THROWS_AS(m.predict_edges(h, 1), std::invalid_argument);
}

TEST_CASE("step and predict_edges match an independently unrolled oracle") {
    ModelConfig cfg = small_cfg(5, 4);
    Model m = Model::init(cfg, 33);
    Rng rng(12);
    Tensor h_prev = Tensor::zeros({cfg.graph_hidden});
    for (double& v : h_prev.data) v = rng.uniform(-1, 1);
    Tensor s_prev = Tensor::vec({1, 0, 1, 0});
    Tensor feat = Tensor::vec({0.3, -0.2, 0.7, 0.1});

    // oracle: input projection + reference GRU, coded separately
    const auto& store = m.params();
    Tensor x = Tensor::zeros({8});
    for (std::size_t i = 0; i < 4; ++i) x.data[i] = s_prev.data[i];
    for (std::size_t i = 0; i < 4; ++i) x.data[4 + i] = feat.data[i];
    Tensor e = nn::matvec(store.at("hinrnn.in_proj.w"), x);
    for (std::size_t i = 0; i < e.size(); ++i) e.data[i] += store.at("hinrnn.in_proj.b").data[i];
    Tensor h_want = oracles::gru_reference(nn::gru_get(store, "hinrnn.graph"), e, h_prev);

    Tensor h_got = m.step(h_prev, s_prev, feat);
    REQUIRE(h_got.size() == h_want.size());
    for (std::size_t i = 0; i < h_got.size(); ++i)
        CHECK(std::abs(h_got.data[i] - h_want.data[i]) < 1e-10);

    // edge oracle: init projection, then free-running reference GRU unroll
    std::size_t i_pos = 4;
    Tensor eh = nn::matvec(store.at("hinrnn.edge_init.w"), h_got);
    for (std::size_t k = 0; k < eh.size(); ++k)
        eh.data[k] += store.at("hinrnn.edge_init.b").data[k];
    nn::GruCell edge = nn::gru_get(store, "hinrnn.edge");
    const Tensor& hw = store.at("hinrnn.head.w");
    double hb = store.at("hinrnn.head.b").data[0];
    std::vector<double> want;
    double prev = 1.0;
    for (std::size_t j = 0; j + 1 < i_pos; ++j) {
        eh = oracles::gru_reference(edge, Tensor::vec({prev}), eh);
        double logit = hb;
        for (std::size_t k = 0; k < eh.size(); ++k) logit += eh.data[k] * hw.data[k];
        double p = 1.0 / (1.0 + std::exp(-logit));
        want.push_back(p);
        prev = p >= 0.5 ? 1.0 : 0.0;
    }
    auto got = m.predict_edges(h_got, i_pos);
    REQUIRE(got.size() == want.size());
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(std::abs(got[j] - want[j]) < 1e-10);
}

TEST_CASE("training overfits a single K3") {
    auto net = make_net({"a", "b", "c"}, {{0, 1}, {0, 2}, {1, 2}}, "k3");
    VectorMap vecs = flat_vectors(net, 4, 5);
    Model m = Model::init(small_cfg(3, 4), 11);
    TrainOptions opts;
    opts.lr = 0.01;
    opts.epochs = 500;
    opts.seed = 3;
    opts.on_epoch = [&](const EpochStats& st) { return st.loss > 1e-3; };
    m.train({net}, vecs, opts);

    InferResult r = m.infer(net, vecs);
    CollabMatrix gold = from_sequence(to_sequence(net, r.ordering));
    CHECK(edge_accuracy(r.matrix, gold) == doctest::Approx(1.0));
    CHECK(node_accuracy(r.matrix) == doctest::Approx(1.0));

    SUBCASE("n=2 networks work at the boundary") {
        auto two = make_net({"x", "y"}, {{0, 1}}, "pair");
        VectorMap v2 = flat_vectors(two, 4, 6);
        InferResult r2 = m.infer(two, v2);
        CHECK(r2.matrix.n == 2);
        CHECK((r2.matrix.at(0, 1) == 0 || r2.matrix.at(0, 1) == 1));
    }
}

TEST_CASE("training is deterministic under the seed") {
    Rng rng(41);
    auto net1 = random_connected(5, 0.4, rng, "g1");
    auto net2 = random_connected(4, 0.5, rng, "g2");
    VectorMap vecs;
    for (const auto* n : {&net1, &net2}) {
        auto m = flat_vectors(*n, 6, 2);
        vecs.insert(m.begin(), m.end());
    }
    auto run = [&] {
        Model m = Model::init(small_cfg(5, 6), 9);
        TrainOptions opts;
        opts.lr = 0.005;
        opts.epochs = 40;
        opts.seed = 17;
        m.train({net1, net2}, vecs, opts);
        std::vector<double> flat;
        for (const auto& [name, t] : m.params())
            flat.insert(flat.end(), t.data.begin(), t.data.end());
        return flat;
    };
    CHECK(run() == run());
}

TEST_CASE("gradcheck of one training step") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ModelConfig cfg = small_cfg(4, 3);
        Model m = Model::init(cfg, seed);
        auto net = make_net({"a", "b", "c", "d"}, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
        VectorMap vecs = flat_vectors(net, 3, seed + 100);
        auto ord = order_nodes(net);
        auto targets = to_sequence(net, ord);

        auto res = nn::grad_check(
            m.params(),
            [&](nn::Tape& t, const std::map<std::string, int>& ids) {
                auto gv = nn::gru_vars(ids, "hinrnn.graph", t);
                auto ev = nn::gru_vars(ids, "hinrnn.edge", t);
                int h = t.leaf(Tensor::zeros({cfg.graph_hidden}));
                int loss = -1;
                for (std::size_t pos = 0; pos < net.size(); ++pos) {
                    Tensor s_prev = Tensor::zeros({cfg.n_max - 1});
                    if (pos == 0)
                        s_prev = Tensor::full({cfg.n_max - 1}, 1.0);
                    else if (pos >= 2)
                        for (std::size_t k = 0; k < targets.rows[pos - 2].size(); ++k)
                            s_prev.data[k] = targets.rows[pos - 2][k];
                    Tensor v = Tensor::vec(vecs.at(net.reviewers[ord.positions[pos]]));
                    int x = t.concat(t.leaf(s_prev), t.leaf(v));
                    int e = t.add(t.matvec_op(ids.at("hinrnn.in_proj.w"), x),
                                  ids.at("hinrnn.in_proj.b"));
                    h = nn::gru_tape_step(t, gv, e, h);
                    if (pos >= 1) {
                        int eh = t.add(t.matvec_op(ids.at("hinrnn.edge_init.w"), h),
                                       ids.at("hinrnn.edge_init.b"));
                        double prev = 1.0;
                        for (std::size_t j = 0; j < targets.rows[pos - 1].size(); ++j) {
                            eh = nn::gru_tape_step(t, ev, t.leaf(Tensor::vec({prev})), eh);
                            int logit = t.add(t.matvec_op(ids.at("hinrnn.head.w"), eh),
                                              ids.at("hinrnn.head.b"));
                            int l = t.bce_logit_loss(logit, targets.rows[pos - 1][j]);
                            loss = loss < 0 ? l : t.add(loss, l);
                            prev = targets.rows[pos - 1][j];
                        }
                    }
                }
                return loss;
            });
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("edge probabilities are sensitive to the reviewer vector") {
    ModelConfig cfg = small_cfg(4, 5);
    Model m = Model::init(cfg, 21);
    auto net = make_net({"a", "b", "c"}, {{0, 1}, {1, 2}});
    VectorMap vecs = flat_vectors(net, 5, 31);

    Tensor h0 = Tensor::zeros({cfg.graph_hidden});
    Tensor sos = Tensor::full({cfg.n_max - 1}, 1.0);
    Tensor h1 = m.step(h0, sos, Tensor::vec(vecs.at("a")));

    Tensor s1 = Tensor::zeros({cfg.n_max - 1});
    Tensor vb = Tensor::vec(vecs.at("b"));
    Tensor h2 = m.step(h1, s1, vb);
    auto base = m.predict_edges(h2, 2);

    Tensor vb2 = vb;
    vb2.data[0] += 0.5;
    Tensor h2b = m.step(h1, s1, vb2);
    auto shifted = m.predict_edges(h2b, 2);
    CHECK(std::abs(base[0] - shifted[0]) > 1e-9);

    SUBCASE("feature-blind mode ignores the vectors entirely") {
        ModelConfig bcfg = small_cfg(4, 5, true);
        Model bm = Model::init(bcfg, 21);
        VectorMap other = flat_vectors(net, 5, 99);
        InferResult r1 = bm.infer(net, vecs);
        InferResult r2 = bm.infer(net, other);
        CHECK(r1.matrix.bits == r2.matrix.bits);
    }
}

TEST_CASE("edge_accuracy and node_accuracy") {
    EdgeSequence seq;
    seq.n = 4;
    seq.rows = {{1}, {1, 1}, {0, 0, 1}};  // 4 edges
    CollabMatrix gold = from_sequence(seq);
    REQUIRE(gold.edge_count() == 4);

    CHECK(edge_accuracy(gold, gold) == doctest::Approx(1.0));
    CHECK(edge_accuracy(CollabMatrix::zeros(4), gold) == doctest::Approx(0.0));

    CollabMatrix three = gold;
    three.set_edge(3, 2, 0);  // drop one gold edge
    CHECK(edge_accuracy(three, gold) == doctest::Approx(0.75));

    CHECK(node_accuracy(gold) == doctest::Approx(1.0));
    CHECK(node_accuracy(CollabMatrix::zeros(4)) == doctest::Approx(0.0));
    CollabMatrix one_isolated = CollabMatrix::zeros(4);
    one_isolated.set_edge(0, 1, 1);
    one_isolated.set_edge(1, 2, 1);
    CHECK(node_accuracy(one_isolated) == doctest::Approx(0.75));

    CHECK_THROWS_AS(edge_accuracy(CollabMatrix::zeros(3), gold), std::invalid_argument);
}

TEST_CASE("matrix_components splits refined matrices") {
    CollabMatrix m = CollabMatrix::zeros(6);
    m.set_edge(0, 1, 1);
    m.set_edge(1, 2, 1);
    m.set_edge(4, 5, 1);  // node 3 isolated
    auto comps = matrix_components(m);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(comps[1] == std::vector<std::size_t>{4, 5});
}

TEST_CASE("model save/load round-trips inference") {
    Rng rng(3);
    auto net = random_connected(5, 0.5, rng);
    VectorMap vecs = flat_vectors(net, 4, 8);
    Model m = Model::init(small_cfg(5, 4), 77);

    auto dir = std::filesystem::temp_directory_path() / "fgd_hinrnn_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "model.ckpt").string();
    m.save(path);
    Model loaded = Model::load(path);
    CHECK(loaded.config().n_max == 5);
    CHECK(loaded.config().feat_dim == 4);

    InferResult a = m.infer(net, vecs);
    InferResult b = loaded.infer(net, vecs);
    CHECK(a.matrix.bits == b.matrix.bits);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train rejects bad inputs") {
    auto net = make_net({"a"}, {}, "solo");
    Model m = Model::init(small_cfg(3, 2), 1);
    VectorMap vecs{{"a", {0.0, 0.0}}};
    CHECK_THROWS_AS(m.train({net}, vecs, TrainOptions{}), std::invalid_argument);

    auto pair = make_net({"a", "b"}, {{0, 1}});
    VectorMap missing{{"a", {0.0, 0.0}}};
    TrainOptions opts;
    opts.epochs = 1;
    CHECK_THROWS_AS(m.train({pair}, missing, opts), DataError);
}
