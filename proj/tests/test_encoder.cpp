#include <cmath>

#include "doctest.h"
#include "fgd/autodiff.hpp"
#include "fgd/encoder.hpp"
#include "fgd/errors.hpp"
#include "fgd/gradcheck.hpp"
#include "fgd/rng.hpp"
#include "fgd/synth.hpp"
#include "oracles.hpp"

using namespace fgd;
using namespace fgd::encoder;
using nn::Tensor;

namespace {

Tensor random_mat(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t = Tensor::zeros({r, c});
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

// tiny embedding table mapping each listed word to a fixed vector
embed::EmbeddingTable toy_table(std::size_t dim,
                                const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    embed::EmbeddingTable t;
    t.dim = dim;
    for (const auto& [w, v] : rows) {
        t.index[w] = t.words.size();
        t.words.push_back(w);
        t.vectors.insert(t.vectors.end(), v.begin(), v.end());
    }
    t.finalize();
    return t;
}

}  // namespace

TEST_CASE("trigram_conv selector and boundary cases") {
    Rng rng(1);
    std::size_t d = 4;
    Tensor embs = random_mat(5, d, rng);

    SUBCASE("selector taps (0,1,0) pick the middle word") {
        Tensor taps = Tensor::vec({0, 1, 0});
        Tensor bias = Tensor::zeros({d});
        Tensor h = trigram_conv(embs, taps, bias);
        REQUIRE(h.shape[0] == 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < d; ++k)
                CHECK(h.at(i, k) == doctest::Approx(embs.at(i + 1, k)));
    }
    SUBCASE("three words give exactly one window") {
        Tensor three = random_mat(3, d, rng);
        Tensor h = trigram_conv(three, Tensor::vec({1, 1, 1}), Tensor::zeros({d}));
        CHECK(h.shape[0] == 1);
    }
    SUBCASE("random taps match a hand-unrolled sum") {
        Tensor taps = Tensor::vec({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        Tensor bias = Tensor::zeros({d});
        for (double& v : bias.data) v = rng.uniform(-1, 1);
        Tensor h = trigram_conv(embs, taps, bias);
        for (std::size_t i = 0; i + 2 < 5; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                double want = taps.data[0] * embs.at(i, k) + taps.data[1] * embs.at(i + 1, k) +
                              taps.data[2] * embs.at(i + 2, k) + bias.data[k];
                CHECK(std::abs(h.at(i, k) - want) < 1e-12);
            }
        }
    }
    SUBCASE("fewer than 3 rows is rejected") {
        Tensor two = random_mat(2, d, rng);
        CHECK_THROWS_AS(trigram_conv(two, Tensor::vec({1, 1, 1}), Tensor::zeros({d})),
                        std::invalid_argument);
    }
}

TEST_CASE("sentence_embed") {
    SUBCASE("all-zero windows give the zero vector") {
        Tensor h = Tensor::zeros({4, 3});
        Tensor e = sentence_embed(h);
        for (double v : e.data) CHECK(v == 0.0);
    }
    SUBCASE("single window is tanh of itself") {
        Tensor h = Tensor::mat(1, 2, {0.3, -1.2});
        Tensor e = sentence_embed(h);
        CHECK(e.data[0] == doctest::Approx(std::tanh(0.3)));
        CHECK(e.data[1] == doctest::Approx(std::tanh(-1.2)));
    }
    SUBCASE("two windows average before tanh") {
        Tensor h = Tensor::mat(2, 2, {0.5, 1.0, 1.5, -3.0});
        Tensor e = sentence_embed(h);
        CHECK(e.data[0] == doctest::Approx(std::tanh(1.0)));
        CHECK(e.data[1] == doctest::Approx(std::tanh(-1.0)));
    }
    SUBCASE("components stay strictly inside (-1,1)") {
        Tensor h = Tensor::mat(1, 2, {50.0, -50.0});
        Tensor e = sentence_embed(h);
        CHECK(e.data[0] < 1.0);
        CHECK(e.data[1] > -1.0);
    }
}

TEST_CASE("reviewer_embed max-pools sentences") {
    SUBCASE("single sentence is the identity") {
        Tensor s = Tensor::vec({0.1, -0.4});
        Tensor r = reviewer_embed({s});
        CHECK(r.data == s.data);
    }
    SUBCASE("componentwise max of two sentences") {
        Tensor r = reviewer_embed({Tensor::vec({0.1, -0.5}), Tensor::vec({-0.2, 0.9})});
        CHECK(r.data[0] == doctest::Approx(0.1));
        CHECK(r.data[1] == doctest::Approx(0.9));
    }
    SUBCASE("matches a brute-force max over 10 random sentences") {
        Rng rng(17);
        std::vector<Tensor> sents;
        for (int i = 0; i < 10; ++i) {
            Tensor s = Tensor::zeros({6});
            for (double& v : s.data) v = rng.uniform(-1, 1);
            sents.push_back(s);
        }
        Tensor r = reviewer_embed(sents);
        for (std::size_t k = 0; k < 6; ++k) {
            double want = sents[0].data[k];
            for (const Tensor& s : sents) want = std::max(want, s.data[k]);
            CHECK(r.data[k] == doctest::Approx(want));
        }
    }
    SUBCASE("permutation and duplication invariance") {
        Rng rng(18);
        std::vector<Tensor> sents;
        for (int i = 0; i < 5; ++i) {
            Tensor s = Tensor::zeros({4});
            for (double& v : s.data) v = rng.uniform(-1, 1);
            sents.push_back(s);
        }
        Tensor base = reviewer_embed(sents);
        std::reverse(sents.begin(), sents.end());
        CHECK(reviewer_embed(sents).data == base.data);
        sents.push_back(sents[2]);
        CHECK(reviewer_embed(sents).data == base.data);
    }
    CHECK_THROWS_AS(reviewer_embed({}), std::invalid_argument);
}

TEST_CASE("negative_ratio") {
    CHECK(negative_ratio({5, 5, 5}) == 0.0);
    CHECK(negative_ratio({1, 1}) == 1.0);
    CHECK(negative_ratio({1, 2, 4, 5}) == 0.5);
    CHECK_THROWS_AS(negative_ratio({}), std::invalid_argument);
    CHECK_THROWS_AS(negative_ratio({0, 3}), std::invalid_argument);

    // exactness against integer arithmetic on random rating lists
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        std::vector<int> ratings;
        int n = 1 + static_cast<int>(rng.index(12));
        long long neg = 0;
        for (int i = 0; i < n; ++i) {
            int r = 1 + static_cast<int>(rng.index(5));
            ratings.push_back(r);
            if (r <= 2) ++neg;
        }
        double want = static_cast<double>(neg) / n;
        CHECK(std::abs(negative_ratio(ratings) - want) < 1e-12);
    }
}

TEST_CASE("prep_reviewer implements the length cap and END padding") {
    embed::EmbeddingTable table = toy_table(
        2, {{"alpha", {1.0, 0.0}}, {"beta", {0.0, 1.0}}, {"gamma", {0.5, 0.5}}});

    data::Corpus c;
    data::Review r;
    r.review_id = "v1";
    r.reviewer_id = "u1";
    r.item_id = "p1";
    r.rating = 1;
    r.day = 0;
    r.text = "alpha beta";
    r.tokens = data::tokenize(r.text);
    c.reviews.push_back(r);

    // a review over the word cap is dropped entirely
    data::Review big = r;
    big.review_id = "v2";
    big.item_id = "p2";
    std::string long_text;
    for (int i = 0; i < 401; ++i) long_text += "gamma ";
    big.text = long_text;
    big.tokens = data::tokenize(big.text);
    c.reviews.push_back(big);

    PreppedReviewer prep = prep_reviewer(c, {0, 1});
    REQUIRE(prep.sentences.size() == 1);  // the long review contributed nothing
    CHECK(prep.ratings.size() == 2);      // but its rating still counts for NR
    CHECK(prep.sentences[0].n_real == 2);
    CHECK(prep.sentences[0].tokens.size() == kMaxReviewWords);

    // retained windows: [alpha beta END] and [beta END END]; the rest are all
    // padding and must not dilute the mean
    EncodedReviewer enc = encode_means(prep, table);
    REQUIRE(enc.sentences.size() == 1);
    const SentenceMeans& sm = enc.sentences[0];
    CHECK(sm.m0.data[0] == doctest::Approx(0.5));  // (alpha + beta)/2 in dim 0
    CHECK(sm.m0.data[1] == doctest::Approx(0.5));
    CHECK(sm.m1.data[0] == doctest::Approx(0.0));  // (beta + END)/2
    CHECK(sm.m1.data[1] == doctest::Approx(0.5));
    CHECK(sm.m2.data[0] == doctest::Approx(0.0));  // (END + END)/2
    CHECK(sm.m2.data[1] == doctest::Approx(0.0));

    // cross-check the fused means against the direct conv -> mean path
    Rng rng(3);
    EncoderParams params = EncoderParams::init(2, rng);
    Tensor embs = Tensor::zeros({kMaxReviewWords, 2});
    for (std::size_t i = 0; i < kMaxReviewWords; ++i) {
        auto v = table.lookup(prep.sentences[0].tokens[i]);
        embs.at(i, 0) = v[0];
        embs.at(i, 1) = v[1];
    }
    Tensor h = trigram_conv(embs, params.taps, params.bias);
    Tensor retained = Tensor::zeros({2, 2});  // windows starting inside the real words
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) retained.at(i, k) = h.at(i, k);
    Tensor direct = sentence_embed(retained);
    Tensor fused = reviewer_embedding(enc, params);
    CHECK(fused.data[0] == doctest::Approx(direct.data[0]).epsilon(1e-12));
    CHECK(fused.data[1] == doctest::Approx(direct.data[1]).epsilon(1e-12));
}

TEST_CASE("reviewer_vector composes the four stages") {
    embed::EmbeddingTable table =
        toy_table(2, {{"up", {0.8, -0.2}}, {"down", {-0.3, 0.6}}});
    data::Corpus c;
    auto add = [&](const char* id, const char* item, int rating, const char* text) {
        data::Review r;
        r.review_id = id;
        r.reviewer_id = "u1";
        r.item_id = item;
        r.rating = rating;
        r.day = 0;
        r.text = text;
        r.tokens = data::tokenize(text);
        c.reviews.push_back(r);
    };
    add("v1", "p1", 5, "up down up. down up down.");
    add("v2", "p2", 1, "down down up.");

    PreppedReviewer prep = prep_reviewer(c, {0, 1});
    EncodedReviewer enc = encode_means(prep, table);
    Rng rng(9);
    EncoderParams params = EncoderParams::init(2, rng);
    ReviewerVector rv = reviewer_vector(enc, params);

    REQUIRE(rv.values.size() == 3);
    CHECK(rv.values[2] == doctest::Approx(0.5));  // ratings 5 and 1

    // oracle: conv -> mean over retained windows -> tanh -> max over sentences
    std::vector<Tensor> sents;
    for (const PreppedSentence& ps : prep.sentences) {
        Tensor embs = Tensor::zeros({ps.tokens.size(), 2});
        for (std::size_t i = 0; i < ps.tokens.size(); ++i) {
            auto v = table.lookup(ps.tokens[i]);
            embs.at(i, 0) = v[0];
            embs.at(i, 1) = v[1];
        }
        Tensor h = trigram_conv(embs, params.taps, params.bias);
        std::size_t keep = 0;
        for (std::size_t i = 0; i + 2 < ps.tokens.size(); ++i)
            if (i < ps.n_real) ++keep;
        Tensor hk = Tensor::zeros({keep, 2});
        for (std::size_t i = 0; i < keep; ++i)
            for (std::size_t k = 0; k < 2; ++k) hk.at(i, k) = h.at(i, k);
        sents.push_back(sentence_embed(hk));
    }
    Tensor pooled = reviewer_embed(sents);
    CHECK(rv.values[0] == doctest::Approx(pooled.data[0]).epsilon(1e-12));
    CHECK(rv.values[1] == doctest::Approx(pooled.data[1]).epsilon(1e-12));

    SUBCASE("all-negative and all-positive rating edges") {
        data::Corpus c2;
        data::Review r;
        r.review_id = "v1";
        r.reviewer_id = "u2";
        r.item_id = "p1";
        r.rating = 1;
        r.day = 0;
        r.text = "up down up";
        r.tokens = data::tokenize(r.text);
        c2.reviews.push_back(r);
        PreppedReviewer p2 = prep_reviewer(c2, {0});
        ReviewerVector v2 = reviewer_vector(encode_means(p2, table), params);
        CHECK(v2.values.back() == 1.0);

        c2.reviews[0].rating = 5;
        PreppedReviewer p3 = prep_reviewer(c2, {0});
        ReviewerVector v3 = reviewer_vector(encode_means(p3, table), params);
        CHECK(v3.values.back() == 0.0);
    }
}

TEST_CASE("gradcheck of the full encoder forward pass") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        std::size_t d = 5;
        EncodedReviewer enc;
        enc.reviewer_id = "u";
        for (int s = 0; s < 3; ++s) {
            SentenceMeans sm{Tensor::zeros({d}), Tensor::zeros({d}), Tensor::zeros({d})};
            for (double& v : sm.m0.data) v = rng.uniform(-1, 1);
            for (double& v : sm.m1.data) v = rng.uniform(-1, 1);
            for (double& v : sm.m2.data) v = rng.uniform(-1, 1);
            enc.sentences.push_back(sm);
        }
        EncoderParams params = EncoderParams::init(d, rng);
        nn::ParamStore store;
        params.put(store);

        auto res = nn::grad_check(store, [&](nn::Tape& t, const std::map<std::string, int>& ids) {
            int pooled = -1;
            for (const SentenceMeans& sm : enc.sentences) {
                int e = t.tanh_op(t.trigram_mean(ids.at("encoder.taps"), ids.at("encoder.bias"),
                                                 sm.m0, sm.m1, sm.m2));
                pooled = pooled < 0 ? e : t.max2(pooled, e);
            }
            int logits =
                t.add(t.matvec_op(ids.at("encoder.head_w"), pooled), ids.at("encoder.head_b"));
            return t.cross_entropy_loss(logits, 1);
        });
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("train_encoder separates disjoint vocabularies") {
    data::SynthConfig scfg;
    scfg.n_groups = 16;
    scfg.group_size_min = 3;
    scfg.group_size_max = 4;
    scfg.shared_token_prob = 0.0;
    scfg.seed = 31;
    data::Corpus c = data::generate_synthetic(scfg);

    embed::CbowConfig ccfg;
    ccfg.dim = 16;
    ccfg.epochs = 6;
    ccfg.seed = 31;
    embed::EmbeddingTable table = embed::train_cbow(c, ccfg);

    auto by = c.reviews_by_reviewer();
    std::vector<EncodedReviewer> train;
    for (const auto& [rid, idxs] : by) {
        PreppedReviewer prep = prep_reviewer(c, idxs);
        REQUIRE(prep.usable());
        train.push_back(encode_means(prep, table));
        REQUIRE(train.back().label.has_value());
    }

    EncoderTrainConfig ecfg;
    ecfg.lr = 0.002;  // desk-scale corpus wants a larger step than the full-data default
    ecfg.epochs = 30;
    ecfg.seed = 7;
    std::vector<EpochLog> log;
    EncoderParams params = train_encoder(train, table.dim, ecfg, &log);
    REQUIRE(log.size() == 30);
    CHECK(log.back().accuracy >= 0.95);
    CHECK(log.back().loss < log.front().loss);

    SUBCASE("zero epochs returns the initialization") {
        EncoderTrainConfig zcfg;
        zcfg.epochs = 0;
        zcfg.seed = 7;
        EncoderParams init = train_encoder(train, table.dim, zcfg);
        Rng r2(sub_seed(7, "encoder-init"));
        EncoderParams expect = EncoderParams::init(table.dim, r2);
        CHECK(init.taps.data == expect.taps.data);
        CHECK(init.head_w.data == expect.head_w.data);
    }
    SUBCASE("missing labels are reported with reviewer ids") {
        auto broken = train;
        broken[0].label.reset();
        CHECK_THROWS_WITH_AS(train_encoder(broken, table.dim, ecfg),
                             doctest::Contains(broken[0].reviewer_id), DataError);
    }
}
