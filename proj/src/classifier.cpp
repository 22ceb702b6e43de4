#include "fgd/classifier.hpp"

#include <algorithm>
#include <iostream>

#include "fgd/autodiff.hpp"
#include "fgd/errors.hpp"
#include "fgd/optimizer.hpp"
#include "fgd/rng.hpp"

namespace fgd::classify {

using nn::Tensor;

std::vector<std::size_t> deviant_indices(const hinrnn::CollabMatrix& matrix) {
    std::size_t n = matrix.n;
    if (n < 3) return {};
    std::vector<std::size_t> degrees(n);
    for (std::size_t i = 0; i < n; ++i) degrees[i] = matrix.degree(i);
    std::size_t lo = *std::min_element(degrees.begin(), degrees.end());
    std::size_t hi = *std::max_element(degrees.begin(), degrees.end());
    if (lo == hi) return {};
    std::vector<std::size_t> stratum;
    for (std::size_t i = 0; i < n; ++i)
        if (degrees[i] == lo) stratum.push_back(i);
    if (n - stratum.size() < 2) return {};
    return stratum;
}

std::vector<std::size_t> remove_deviants(const hinrnn::CollabMatrix& matrix) {
    auto drop = deviant_indices(matrix);
    std::vector<std::size_t> kept;
    std::size_t d = 0;
    for (std::size_t i = 0; i < matrix.n; ++i) {
        if (d < drop.size() && drop[d] == i) {
            ++d;
            continue;
        }
        kept.push_back(i);
    }
    return kept;
}

std::vector<double> group_vector(const std::vector<std::vector<double>>& member_vectors) {
    if (member_vectors.empty()) throw std::invalid_argument("group_vector: no members");
    std::size_t dim = member_vectors.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& v : member_vectors) {
        if (v.size() != dim) throw std::invalid_argument("group_vector: mixed dimensions");
        for (std::size_t k = 0; k < dim; ++k) mean[k] += v[k];
    }
    double inv = 1.0 / static_cast<double>(member_vectors.size());
    for (double& v : mean) v *= inv;
    return mean;
}

void HeadParams::put(nn::ParamStore& store) const {
    store.put("head.w", w);
    store.put("head.b", b);
}

HeadParams HeadParams::get(const nn::ParamStore& store) {
    return HeadParams{store.at("head.w"), store.at("head.b")};
}

HeadParams train_head(const std::vector<std::vector<double>>& vectors,
                      const std::vector<int>& labels, const HeadTrainConfig& cfg,
                      std::vector<HeadEpochLog>* log) {
    if (vectors.empty() || vectors.size() != labels.size())
        throw DataError("train_head: need aligned non-empty vectors and labels");
    std::size_t dim = vectors.front().size();

    long long n_fraud = 0;
    for (int y : labels) {
        if (y != kGenuine && y != kFraudster) throw DataError("train_head: bad label");
        if (y == kFraudster) ++n_fraud;
    }
    long long n_genuine = static_cast<long long>(labels.size()) - n_fraud;
    if (n_fraud == 0 || n_genuine == 0) {
        std::cerr << "train_head: training set has a single class; using a constant head\n";
        HeadParams head{Tensor::zeros({dim, 2}), Tensor::zeros({2})};
        head.b.data[n_fraud > 0 ? kFraudster : kGenuine] = 1.0;
        return head;
    }

    Rng rng(sub_seed(cfg.seed, "head-init"));
    HeadParams head{Tensor::uniform_init({dim, 2}, dim, rng),
                    Tensor::uniform_init({2}, dim, rng)};
    if (cfg.epochs <= 0) return head;

    double total = static_cast<double>(labels.size());
    double w_fraud = total / (2.0 * static_cast<double>(n_fraud));
    double w_genuine = total / (2.0 * static_cast<double>(n_genuine));

    nn::ParamStore store;
    head.put(store);
    nn::OptState opt_state;
    nn::Optimizer opt = nn::Optimizer::adam(cfg.lr);
    Rng order_rng(sub_seed(cfg.seed, "head-order"));
    std::vector<std::size_t> order(vectors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        long long correct = 0;
        for (std::size_t idx : order) {
            nn::Tape tape;
            auto ids = nn::register_params(tape, store);
            int x = tape.leaf(Tensor::vec(vectors[idx]));
            int logits = tape.add(tape.matvec_op(ids.at("head.w"), x), ids.at("head.b"));
            auto label = static_cast<std::size_t>(labels[idx]);
            int loss = tape.cross_entropy_loss(logits, label,
                                               labels[idx] == kFraudster ? w_fraud : w_genuine);
            tape.backward(loss);
            const Tensor& lv = tape.val(logits);
            int pred = lv.data[kFraudster] > lv.data[kGenuine] ? kFraudster : kGenuine;
            if (pred == labels[idx]) ++correct;
            loss_sum += tape.val(loss).data[0];
            opt_state.step(store, nn::collect_grads(tape, ids), opt);
        }
        if (log)
            log->push_back({epoch, loss_sum / static_cast<double>(vectors.size()),
                            static_cast<double>(correct) / static_cast<double>(vectors.size())});
    }
    return HeadParams::get(store);
}

int classify(const std::vector<double>& vec, const HeadParams& head) {
    Tensor logits = nn::dense_forward(Tensor::vec(vec), head.w, head.b);
    return logits.data[kFraudster] > logits.data[kGenuine] ? kFraudster : kGenuine;
}

double fraud_score(const std::vector<double>& vec, const HeadParams& head) {
    Tensor logits = nn::dense_forward(Tensor::vec(vec), head.w, head.b);
    Tensor p = nn::softmax(logits);
    return p.data[kFraudster];
}

Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& gold) {
    if (predicted.empty() || predicted.size() != gold.size())
        throw DataError("evaluate: need aligned non-empty predictions and gold labels");
    Metrics m;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        bool p = predicted[i] == kFraudster;
        bool g = gold[i] == kFraudster;
        if (p && g) ++m.tp;
        else if (p && !g) ++m.fp;
        else if (!p && g) ++m.fn;
        else ++m.tn;
    }
    m.precision = (m.tp + m.fp) > 0
                      ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                      : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                                 : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

}  // namespace fgd::classify
