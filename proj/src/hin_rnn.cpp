#include "fgd/hin_rnn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "fgd/autodiff.hpp"
#include "fgd/errors.hpp"
#include "fgd/gru.hpp"
#include "fgd/optimizer.hpp"
#include "fgd/rng.hpp"
#include "fgd/union_find.hpp"

namespace fgd::hinrnn {

using nn::Tensor;

NodeOrdering order_nodes(const groups::CoReviewNetwork& net) {
    std::size_t n = net.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [a, b] : net.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }

    std::size_t root = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (adj[i].size() > adj[root].size() ||
            (adj[i].size() == adj[root].size() && net.reviewers[i] < net.reviewers[root]))
            root = i;
    }

    NodeOrdering ord;
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> frontier{root};
    seen[root] = true;
    auto by_id = [&](std::size_t a, std::size_t b) { return net.reviewers[a] < net.reviewers[b]; };
    while (!frontier.empty()) {
        std::sort(frontier.begin(), frontier.end(), by_id);
        std::vector<std::size_t> next;
        for (std::size_t u : frontier) {
            ord.positions.push_back(u);
            for (std::size_t v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    // disconnected leftovers (should not happen for candidate groups)
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) ord.positions.push_back(i);
    return ord;
}

std::size_t CollabMatrix::edge_count() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) c += at(i, j);
    return c;
}

EdgeSequence to_sequence(const groups::CoReviewNetwork& net, const NodeOrdering& ordering) {
    std::size_t n = net.size();
    if (ordering.positions.size() != n)
        throw std::invalid_argument("to_sequence: ordering does not cover the network");
    auto adj = net.adjacency();
    std::vector<std::size_t> pos_of(n);
    for (std::size_t p = 0; p < n; ++p) pos_of[ordering.positions[p]] = p;

    EdgeSequence seq;
    seq.n = n;
    for (std::size_t p = 1; p < n; ++p) {
        std::vector<std::uint8_t> row(p, 0);
        for (std::size_t q = 0; q < p; ++q)
            row[q] = adj[ordering.positions[p]][ordering.positions[q]];
        seq.rows.push_back(std::move(row));
    }
    return seq;
}

CollabMatrix from_sequence(const EdgeSequence& seq) {
    if (seq.rows.size() + 1 != seq.n && !(seq.n <= 1 && seq.rows.empty()))
        throw std::invalid_argument("from_sequence: row count does not match n");
    for (std::size_t k = 0; k < seq.rows.size(); ++k)
        if (seq.rows[k].size() != k + 1)
            throw std::invalid_argument("from_sequence: ragged row lengths");
    CollabMatrix m = CollabMatrix::zeros(seq.n);
    for (std::size_t k = 0; k < seq.rows.size(); ++k)
        for (std::size_t q = 0; q < seq.rows[k].size(); ++q)
            m.set_edge(k + 1, q, seq.rows[k][q]);
    return m;
}

double edge_accuracy(const CollabMatrix& predicted, const CollabMatrix& gold) {
    if (predicted.n != gold.n) throw std::invalid_argument("edge_accuracy: dimension mismatch");
    std::size_t total = 0, hit = 0;
    for (std::size_t i = 0; i < gold.n; ++i) {
        for (std::size_t j = i + 1; j < gold.n; ++j) {
            if (!gold.at(i, j)) continue;
            ++total;
            if (predicted.at(i, j)) ++hit;
        }
    }
    if (total == 0) return 1.0;
    return static_cast<double>(hit) / static_cast<double>(total);
}

double node_accuracy(const CollabMatrix& predicted) {
    if (predicted.n == 0) return 1.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < predicted.n; ++i)
        if (predicted.degree(i) > 0) ++kept;
    return static_cast<double>(kept) / static_cast<double>(predicted.n);
}

std::vector<std::vector<std::size_t>> matrix_components(const CollabMatrix& m) {
    UnionFind uf(m.n);
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j)
            if (m.at(i, j)) uf.unite(i, j);
    std::map<std::size_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < m.n; ++i) buckets[uf.find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, members] : buckets)
        if (members.size() >= 2) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

constexpr const char* kInW = "hinrnn.in_proj.w";
constexpr const char* kInB = "hinrnn.in_proj.b";
constexpr const char* kGraph = "hinrnn.graph";
constexpr const char* kEInitW = "hinrnn.edge_init.w";
constexpr const char* kEInitB = "hinrnn.edge_init.b";
constexpr const char* kEdge = "hinrnn.edge";
constexpr const char* kHeadW = "hinrnn.head.w";
constexpr const char* kHeadB = "hinrnn.head.b";
constexpr const char* kMeta = "hinrnn.meta";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Pads (or truncates to the most recent entries) an edge-bit row.
Tensor pad_row(const std::vector<std::uint8_t>& row, std::size_t width) {
    Tensor t = Tensor::zeros({width});
    std::size_t start = row.size() > width ? row.size() - width : 0;
    for (std::size_t k = start; k < row.size(); ++k) t.data[k - start] = row[k];
    return t;
}

struct PreparedNetwork {
    const groups::CoReviewNetwork* net;
    NodeOrdering ordering;
    EdgeSequence targets;
    std::vector<Tensor> feats;  // per position, already blind-zeroed if needed
};

}  // namespace

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.n_max < 2) throw std::invalid_argument("hinrnn: n_max must be at least 2");
    if (cfg.graph_hidden == 0 || cfg.edge_hidden == 0 || cfg.input_embed == 0 || cfg.feat_dim == 0)
        throw std::invalid_argument("hinrnn: zero-sized layer");
    Model m;
    m.cfg_ = cfg;
    Rng rng(sub_seed(seed, "hinrnn-init"));
    std::size_t in_dim = (cfg.n_max - 1) + cfg.feat_dim;
    m.store_.put(kInW, Tensor::uniform_init({in_dim, cfg.input_embed}, in_dim, rng));
    m.store_.put(kInB, Tensor::uniform_init({cfg.input_embed}, in_dim, rng));
    nn::gru_put(m.store_, kGraph, nn::GruCell::init(cfg.input_embed, cfg.graph_hidden, rng));
    m.store_.put(kEInitW,
                 Tensor::uniform_init({cfg.graph_hidden, cfg.edge_hidden}, cfg.graph_hidden, rng));
    m.store_.put(kEInitB, Tensor::uniform_init({cfg.edge_hidden}, cfg.graph_hidden, rng));
    nn::gru_put(m.store_, kEdge, nn::GruCell::init(1, cfg.edge_hidden, rng));
    m.store_.put(kHeadW, Tensor::uniform_init({cfg.edge_hidden, 1}, cfg.edge_hidden, rng));
    m.store_.put(kHeadB, Tensor::uniform_init({1}, cfg.edge_hidden, rng));
    return m;
}

Tensor Model::step(const Tensor& h_prev, const Tensor& s_prev, const Tensor& v) const {
    if (s_prev.size() != cfg_.n_max - 1)
        throw std::invalid_argument("hinrnn step: edge vector width mismatch");
    if (v.size() != cfg_.feat_dim)
        throw std::invalid_argument("hinrnn step: reviewer vector dim mismatch");
    Tensor feat = v;
    if (cfg_.feature_blind) feat = Tensor::zeros({cfg_.feat_dim});
    Tensor x = Tensor::zeros({s_prev.size() + feat.size()});
    std::copy(s_prev.data.begin(), s_prev.data.end(), x.data.begin());
    std::copy(feat.data.begin(), feat.data.end(),
              x.data.begin() + static_cast<long>(s_prev.size()));
    Tensor e = nn::matvec(store_.at(kInW), x);
    const Tensor& b = store_.at(kInB);
    for (std::size_t i = 0; i < e.size(); ++i) e.data[i] += b.data[i];
    return nn::gru_step(nn::gru_get(store_, kGraph), e, h_prev);
}

std::vector<double> Model::predict_edges(const Tensor& h_i, std::size_t i) const {
    if (i < 2) throw std::invalid_argument("predict_edges: position must be >= 2");
    nn::GruCell edge = nn::gru_get(store_, kEdge);
    Tensor eh = nn::matvec(store_.at(kEInitW), h_i);
    const Tensor& b = store_.at(kEInitB);
    for (std::size_t k = 0; k < eh.size(); ++k) eh.data[k] += b.data[k];

    std::size_t steps = std::min(i - 1, cfg_.n_max - 1);
    std::vector<double> probs(i - 1, 0.0);
    double prev_bit = 1.0;
    const Tensor& hw = store_.at(kHeadW);
    double hb = store_.at(kHeadB).data[0];
    std::size_t offset = (i - 1) - steps;  // older positions beyond the window stay 0
    for (std::size_t j = 0; j < steps; ++j) {
        eh = nn::gru_step(edge, Tensor::vec({prev_bit}), eh);
        double logit = hb;
        for (std::size_t k = 0; k < eh.size(); ++k) logit += eh.data[k] * hw.data[k];
        double p = sigmoid(logit);
        probs[offset + j] = p;
        prev_bit = p >= 0.5 ? 1.0 : 0.0;
    }
    return probs;
}

InferResult Model::infer(const groups::CoReviewNetwork& net, const VectorMap& vectors,
                         bool sample, std::uint64_t sample_seed) const {
    std::size_t n = net.size();
    if (n < 2) throw std::invalid_argument("hinrnn infer: network smaller than 2");
    if (n > cfg_.n_max)
        std::cerr << "hinrnn: group " << net.group_id << " has " << n
                  << " reviewers, larger than the trained width " << cfg_.n_max
                  << "; prefixes are truncated\n";

    InferResult res;
    res.ordering = order_nodes(net);
    Rng rng(sub_seed(sample_seed, "hinrnn-sample"));

    nn::GruCell graph = nn::gru_get(store_, kGraph);
    nn::GruCell edge = nn::gru_get(store_, kEdge);
    const Tensor& in_w = store_.at(kInW);
    const Tensor& in_b = store_.at(kInB);
    const Tensor& ei_w = store_.at(kEInitW);
    const Tensor& ei_b = store_.at(kEInitB);
    const Tensor& hw = store_.at(kHeadW);
    double hb = store_.at(kHeadB).data[0];

    EdgeSequence seq;
    seq.n = n;
    Tensor h = Tensor::zeros({cfg_.graph_hidden});
    std::vector<std::uint8_t> prev_row;
    for (std::size_t p = 0; p < n; ++p) {
        Tensor s_prev = p == 0 ? Tensor::full({cfg_.n_max - 1}, 1.0)
                               : pad_row(prev_row, cfg_.n_max - 1);
        const std::string& rid = net.reviewers[res.ordering.positions[p]];
        auto vit = vectors.find(rid);
        if (vit == vectors.end()) throw DataError("hinrnn infer: missing vector for " + rid);
        if (vit->second.size() != cfg_.feat_dim)
            throw DataError("hinrnn infer: vector dim mismatch for " + rid);
        Tensor v = Tensor::vec(vit->second);
        if (cfg_.feature_blind) v = Tensor::zeros({cfg_.feat_dim});

        Tensor x = Tensor::zeros({s_prev.size() + v.size()});
        std::copy(s_prev.data.begin(), s_prev.data.end(), x.data.begin());
        std::copy(v.data.begin(), v.data.end(), x.data.begin() + static_cast<long>(s_prev.size()));
        Tensor e = nn::matvec(in_w, x);
        for (std::size_t k = 0; k < e.size(); ++k) e.data[k] += in_b.data[k];
        h = nn::gru_step(graph, e, h);

        if (p >= 1) {
            Tensor eh = nn::matvec(ei_w, h);
            for (std::size_t k = 0; k < eh.size(); ++k) eh.data[k] += ei_b.data[k];
            std::vector<std::uint8_t> row(p, 0);
            std::size_t steps = std::min(p, cfg_.n_max - 1);
            std::size_t offset = p - steps;
            double prev_bit = 1.0;
            for (std::size_t j = 0; j < steps; ++j) {
                eh = nn::gru_step(edge, Tensor::vec({prev_bit}), eh);
                double logit = hb;
                for (std::size_t k = 0; k < eh.size(); ++k) logit += eh.data[k] * hw.data[k];
                double prob = sigmoid(logit);
                std::uint8_t bit = sample ? static_cast<std::uint8_t>(rng.bernoulli(prob))
                                          : static_cast<std::uint8_t>(prob >= 0.5);
                row[offset + j] = bit;
                prev_bit = bit;
            }
            seq.rows.push_back(std::move(row));
            prev_row = seq.rows.back();
        }
    }
    res.matrix = from_sequence(seq);
    return res;
}

std::vector<EpochStats> Model::train(const std::vector<groups::CoReviewNetwork>& networks,
                                     const VectorMap& vectors, const TrainOptions& opts) {
    if (networks.empty()) throw DataError("hinrnn train: no networks");
    std::vector<PreparedNetwork> prepared;
    for (const auto& net : networks) {
        if (net.size() < 2)
            throw std::invalid_argument("hinrnn train: network " + net.group_id +
                                        " has fewer than 2 reviewers");
        if (net.size() > cfg_.n_max)
            throw std::invalid_argument("hinrnn train: network " + net.group_id +
                                        " exceeds the configured n_max");
        PreparedNetwork p;
        p.net = &net;
        p.ordering = order_nodes(net);
        p.targets = to_sequence(net, p.ordering);
        for (std::size_t pos = 0; pos < net.size(); ++pos) {
            const std::string& rid = net.reviewers[p.ordering.positions[pos]];
            auto it = vectors.find(rid);
            if (it == vectors.end()) throw DataError("hinrnn train: missing vector for " + rid);
            if (it->second.size() != cfg_.feat_dim)
                throw DataError("hinrnn train: vector dim mismatch for " + rid);
            p.feats.push_back(cfg_.feature_blind ? Tensor::zeros({cfg_.feat_dim})
                                                 : Tensor::vec(it->second));
        }
        prepared.push_back(std::move(p));
    }

    nn::OptState opt_state;
    nn::Optimizer opt = nn::Optimizer::adam(opts.lr);
    Rng order_rng(sub_seed(opts.seed, "hinrnn-order"));
    std::vector<std::size_t> order(prepared.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<EpochStats> stats;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const PreparedNetwork& p = prepared[idx];
            std::size_t n = p.net->size();

            nn::Tape tape;
            tape.reserve(64 * n * n);
            auto ids = nn::register_params(tape, store_);
            auto gv = nn::gru_vars(ids, kGraph, tape);
            auto ev = nn::gru_vars(ids, kEdge, tape);

            int h = tape.leaf(Tensor::zeros({cfg_.graph_hidden}));
            int loss_acc = -1;
            std::size_t bits = 0;
            for (std::size_t pos = 0; pos < n; ++pos) {
                Tensor s_prev = pos == 0 ? Tensor::full({cfg_.n_max - 1}, 1.0)
                                         : pad_row(pos == 1 ? std::vector<std::uint8_t>{}
                                                            : p.targets.rows[pos - 2],
                                                   cfg_.n_max - 1);
                int x = tape.concat(tape.leaf(std::move(s_prev)), tape.leaf(p.feats[pos]));
                int e = tape.add(tape.matvec_op(ids.at(kInW), x), ids.at(kInB));
                h = nn::gru_tape_step(tape, gv, e, h);

                if (pos >= 1) {
                    const auto& target = p.targets.rows[pos - 1];
                    int eh = tape.add(tape.matvec_op(ids.at(kEInitW), h), ids.at(kEInitB));
                    double prev_bit = 1.0;
                    for (std::size_t j = 0; j < target.size(); ++j) {
                        eh = nn::gru_tape_step(tape, ev, tape.leaf(Tensor::vec({prev_bit})), eh);
                        int logit =
                            tape.add(tape.matvec_op(ids.at(kHeadW), eh), ids.at(kHeadB));
                        int l = tape.bce_logit_loss(logit, target[j]);
                        loss_acc = loss_acc < 0 ? l : tape.add(loss_acc, l);
                        prev_bit = target[j];
                        ++bits;
                    }
                }
            }
            int loss = tape.affine(loss_acc, 1.0 / static_cast<double>(bits), 0.0);
            tape.backward(loss);
            double lv = tape.val(loss).data[0];
            if (!std::isfinite(lv)) throw NumericError("hinrnn train: non-finite loss");
            loss_sum += lv;
            opt_state.step(store_, nn::collect_grads(tape, ids), opt);
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss = loss_sum / static_cast<double>(prepared.size());
        if (opts.eval_every > 0 && (epoch % opts.eval_every == 0 || epoch == opts.epochs)) {
            st.has_acc = true;
            double ea = 0.0, na = 0.0;
            for (const PreparedNetwork& p : prepared) {
                InferResult r = infer(*p.net, vectors);
                CollabMatrix gold = from_sequence(p.targets);
                ea += edge_accuracy(r.matrix, gold);
                na += node_accuracy(r.matrix);
            }
            st.edge_acc = ea / static_cast<double>(prepared.size());
            st.node_acc = na / static_cast<double>(prepared.size());
        }
        stats.push_back(st);
        if (opts.on_epoch && !opts.on_epoch(st)) break;
    }
    return stats;
}

void Model::save(const std::string& path) const {
    nn::ParamStore out = store_;
    out.put(kMeta, Tensor::vec({static_cast<double>(cfg_.n_max),
                                static_cast<double>(cfg_.graph_hidden),
                                static_cast<double>(cfg_.edge_hidden),
                                static_cast<double>(cfg_.input_embed),
                                static_cast<double>(cfg_.feat_dim),
                                cfg_.feature_blind ? 1.0 : 0.0}));
    out.save(path);
}

Model Model::load(const std::string& path) {
    nn::ParamStore in = nn::ParamStore::load(path);
    const Tensor& meta = in.at(kMeta);
    if (meta.size() != 6) throw DataError("hinrnn checkpoint: bad meta entry");
    Model m;
    m.cfg_.n_max = static_cast<std::size_t>(meta.data[0]);
    m.cfg_.graph_hidden = static_cast<std::size_t>(meta.data[1]);
    m.cfg_.edge_hidden = static_cast<std::size_t>(meta.data[2]);
    m.cfg_.input_embed = static_cast<std::size_t>(meta.data[3]);
    m.cfg_.feat_dim = static_cast<std::size_t>(meta.data[4]);
    m.cfg_.feature_blind = meta.data[5] != 0.0;
    in.erase(kMeta);
    m.store_ = std::move(in);
    return m;
}

}  // namespace fgd::hinrnn
