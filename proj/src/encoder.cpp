#include "fgd/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fgd/autodiff.hpp"
#include "fgd/errors.hpp"
#include "fgd/gru.hpp"
#include "fgd/optimizer.hpp"
#include "json.hpp"

namespace fgd::encoder {

using nlohmann::json;
using nn::Tensor;

EncoderParams EncoderParams::init(std::size_t dim, Rng& rng) {
    EncoderParams p;
    p.taps = Tensor::uniform_init({3}, 3, rng);
    p.bias = Tensor::uniform_init({dim}, 3, rng);
    p.head_w = Tensor::uniform_init({dim, 2}, dim, rng);
    p.head_b = Tensor::uniform_init({2}, dim, rng);
    return p;
}

void EncoderParams::put(nn::ParamStore& store) const {
    store.put("encoder.taps", taps);
    store.put("encoder.bias", bias);
    store.put("encoder.head_w", head_w);
    store.put("encoder.head_b", head_b);
}

EncoderParams EncoderParams::get(const nn::ParamStore& store) {
    EncoderParams p;
    p.taps = store.at("encoder.taps");
    p.bias = store.at("encoder.bias");
    p.head_w = store.at("encoder.head_w");
    p.head_b = store.at("encoder.head_b");
    return p;
}

PreppedReviewer prep_reviewer(const data::Corpus& corpus,
                              const std::vector<std::size_t>& review_indices) {
    PreppedReviewer out;
    for (std::size_t idx : review_indices) {
        const data::Review& r = corpus.reviews[idx];
        if (out.reviewer_id.empty()) out.reviewer_id = r.reviewer_id;
        out.ratings.push_back(r.rating);
        if (!out.label) out.label = r.reviewer_label;

        std::vector<std::vector<std::string>> sentences;
        std::size_t total = 0;
        for (const std::string& s : data::split_sentences(r.text)) {
            auto toks = data::tokenize(s);
            if (toks.empty()) continue;
            total += toks.size();
            sentences.push_back(std::move(toks));
        }
        if (sentences.empty() || total > kMaxReviewWords) continue;

        std::vector<PreppedSentence> prepped;
        for (auto& toks : sentences) {
            PreppedSentence ps;
            ps.n_real = toks.size();
            ps.tokens = std::move(toks);
            prepped.push_back(std::move(ps));
        }
        // review-level padding to the fixed word budget goes after the text
        for (std::size_t k = total; k < kMaxReviewWords; ++k)
            prepped.back().tokens.push_back(embed::kEndToken);
        // trigram windows need at least 3 tokens per sentence
        for (PreppedSentence& ps : prepped)
            while (ps.tokens.size() < 3) ps.tokens.push_back(embed::kEndToken);

        for (PreppedSentence& ps : prepped) out.sentences.push_back(std::move(ps));
    }
    return out;
}

nn::Tensor trigram_conv(const Tensor& embs, const Tensor& taps, const Tensor& bias) {
    if (embs.rank() != 2) throw std::invalid_argument("trigram_conv: embeddings must be [n, D]");
    if (taps.size() != 3) throw std::invalid_argument("trigram_conv: need exactly 3 taps");
    std::size_t n = embs.shape[0], d = embs.shape[1];
    if (bias.size() != d) throw std::invalid_argument("trigram_conv: bias dim mismatch");
    if (n < 3) throw std::invalid_argument("trigram_conv: sentence shorter than 3 after padding");
    Tensor h = Tensor::zeros({n - 2, d});
    for (std::size_t i = 0; i + 2 < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            h.at(i, k) = taps.data[0] * embs.at(i, k) + taps.data[1] * embs.at(i + 1, k) +
                         taps.data[2] * embs.at(i + 2, k) + bias.data[k];
        }
    }
    return h;
}

Tensor sentence_embed(const Tensor& h) {
    if (h.rank() != 2 || h.shape[0] == 0)
        throw std::invalid_argument("sentence_embed: need at least one window");
    std::size_t k = h.shape[0], d = h.shape[1];
    Tensor out = Tensor::zeros({d});
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) out.data[j] += h.at(i, j);
    double inv = 1.0 / static_cast<double>(k);
    for (double& v : out.data) v = std::tanh(v * inv);
    return out;
}

Tensor reviewer_embed(const std::vector<Tensor>& sentence_vectors) {
    if (sentence_vectors.empty())
        throw std::invalid_argument("reviewer_embed: reviewer has no usable sentences");
    Tensor out = sentence_vectors.front();
    for (std::size_t s = 1; s < sentence_vectors.size(); ++s)
        for (std::size_t j = 0; j < out.size(); ++j)
            out.data[j] = std::max(out.data[j], sentence_vectors[s].data[j]);
    return out;
}

double negative_ratio(const std::vector<int>& ratings) {
    if (ratings.empty()) throw std::invalid_argument("negative_ratio: empty ratings");
    long long neg = 0;
    for (int r : ratings) {
        if (r < 1 || r > 5) throw std::invalid_argument("negative_ratio: rating out of 1..5");
        if (r <= 2) ++neg;
    }
    return static_cast<double>(neg) / static_cast<double>(ratings.size());
}

EncodedReviewer encode_means(const PreppedReviewer& prep, const embed::EmbeddingTable& table) {
    EncodedReviewer enc;
    enc.reviewer_id = prep.reviewer_id;
    enc.label = prep.label;
    enc.neg_ratio = prep.ratings.empty() ? 0.0 : negative_ratio(prep.ratings);
    std::size_t d = table.dim;

    for (const PreppedSentence& ps : prep.sentences) {
        std::size_t n = ps.tokens.size();
        std::vector<std::vector<double>> embs;
        embs.reserve(n);
        for (const std::string& t : ps.tokens) embs.push_back(table.lookup(t));

        SentenceMeans sm{Tensor::zeros({d}), Tensor::zeros({d}), Tensor::zeros({d})};
        std::size_t retained = 0;
        for (std::size_t i = 0; i + 2 < n; ++i) {
            if (i >= ps.n_real) continue;  // window is all padding
            ++retained;
            for (std::size_t k = 0; k < d; ++k) {
                sm.m0.data[k] += embs[i][k];
                sm.m1.data[k] += embs[i + 1][k];
                sm.m2.data[k] += embs[i + 2][k];
            }
        }
        if (retained == 0) continue;
        double inv = 1.0 / static_cast<double>(retained);
        for (std::size_t k = 0; k < d; ++k) {
            sm.m0.data[k] *= inv;
            sm.m1.data[k] *= inv;
            sm.m2.data[k] *= inv;
        }
        enc.sentences.push_back(std::move(sm));
    }
    return enc;
}

Tensor reviewer_embedding(const EncodedReviewer& enc, const EncoderParams& params) {
    if (enc.sentences.empty())
        throw std::invalid_argument("reviewer_embedding: reviewer has no usable sentences");
    std::size_t d = params.dim();
    std::vector<Tensor> svecs;
    svecs.reserve(enc.sentences.size());
    for (const SentenceMeans& sm : enc.sentences) {
        Tensor e = Tensor::zeros({d});
        for (std::size_t k = 0; k < d; ++k)
            e.data[k] = std::tanh(params.taps.data[0] * sm.m0.data[k] +
                                  params.taps.data[1] * sm.m1.data[k] +
                                  params.taps.data[2] * sm.m2.data[k] + params.bias.data[k]);
        svecs.push_back(std::move(e));
    }
    return reviewer_embed(svecs);
}

ReviewerVector reviewer_vector(const EncodedReviewer& enc, const EncoderParams& params) {
    Tensor emb = reviewer_embedding(enc, params);
    ReviewerVector rv;
    rv.reviewer_id = enc.reviewer_id;
    rv.values = emb.data;
    rv.values.push_back(enc.neg_ratio);
    return rv;
}

namespace {

int build_reviewer_logits(nn::Tape& t, const std::map<std::string, int>& ids,
                          const EncodedReviewer& enc) {
    int pooled = -1;
    for (const SentenceMeans& sm : enc.sentences) {
        int e = t.tanh_op(t.trigram_mean(ids.at("encoder.taps"), ids.at("encoder.bias"),
                                         sm.m0, sm.m1, sm.m2));
        pooled = pooled < 0 ? e : t.max2(pooled, e);
    }
    return t.add(t.matvec_op(ids.at("encoder.head_w"), pooled), ids.at("encoder.head_b"));
}

}  // namespace

EncoderParams train_encoder(const std::vector<EncodedReviewer>& reviewers, std::size_t dim,
                            const EncoderTrainConfig& cfg, std::vector<EpochLog>* log) {
    std::vector<std::string> unlabeled;
    long long n_fraud = 0, n_genuine = 0;
    for (const EncodedReviewer& r : reviewers) {
        if (!r.label)
            unlabeled.push_back(r.reviewer_id);
        else if (*r.label == data::kFraudLabel)
            ++n_fraud;
        else
            ++n_genuine;
    }
    if (!unlabeled.empty()) {
        std::string msg = "train_encoder: missing labels for:";
        for (const std::string& id : unlabeled) msg += " " + id;
        throw DataError(msg);
    }
    if (reviewers.empty()) throw DataError("train_encoder: no training reviewers");

    Rng rng(sub_seed(cfg.seed, "encoder-init"));
    EncoderParams params = EncoderParams::init(dim, rng);
    if (cfg.epochs <= 0) return params;

    // inverse-frequency class weights
    double total = static_cast<double>(n_fraud + n_genuine);
    double w_fraud = n_fraud > 0 ? total / (2.0 * static_cast<double>(n_fraud)) : 0.0;
    double w_genuine = n_genuine > 0 ? total / (2.0 * static_cast<double>(n_genuine)) : 0.0;

    nn::ParamStore store;
    params.put(store);
    nn::OptState opt_state;
    nn::Optimizer opt = nn::Optimizer::adam(cfg.lr);
    Rng order_rng(sub_seed(cfg.seed, "encoder-order"));
    std::vector<std::size_t> order(reviewers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        long long correct = 0;
        for (std::size_t idx : order) {
            const EncodedReviewer& r = reviewers[idx];
            if (r.sentences.empty()) continue;
            std::size_t label = (*r.label == data::kFraudLabel) ? 1 : 0;
            double weight = label == 1 ? w_fraud : w_genuine;

            nn::Tape tape;
            auto ids = nn::register_params(tape, store);
            int logits = build_reviewer_logits(tape, ids, r);
            int loss = tape.cross_entropy_loss(logits, label, weight);
            tape.backward(loss);

            const Tensor& lv = tape.val(logits);
            std::size_t pred = lv.data[1] > lv.data[0] ? 1 : 0;
            if (pred == label) ++correct;
            loss_sum += tape.val(loss).data[0];
            opt_state.step(store, nn::collect_grads(tape, ids), opt);
        }
        if (log)
            log->push_back({epoch, loss_sum / static_cast<double>(reviewers.size()),
                            static_cast<double>(correct) / static_cast<double>(reviewers.size())});
    }
    return EncoderParams::get(store);
}

void save_reviewer_vectors(const std::vector<ReviewerVector>& vectors, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const ReviewerVector& rv : vectors) {
        json j;
        j["reviewer_id"] = rv.reviewer_id;
        j["vector"] = rv.values;
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<ReviewerVector> load_reviewer_vectors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open reviewer vectors file: " + path);
    std::vector<ReviewerVector> out;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ReviewerVector rv;
            rv.reviewer_id = j.at("reviewer_id").get<std::string>();
            rv.values = j.at("vector").get<std::vector<double>>();
            if (!seen.insert(rv.reviewer_id).second)
                throw DataError("duplicate reviewer " + rv.reviewer_id);
            out.push_back(std::move(rv));
        } catch (const std::exception& e) {
            throw DataError("reviewer vectors line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace fgd::encoder
