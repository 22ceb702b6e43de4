#include "fgd/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fgd/errors.hpp"
#include "fgd/rng.hpp"

namespace fgd::embed {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamped_log_sigmoid(double x) {
    double s = sigmoid(x);
    s = std::min(std::max(s, 1e-7), 1.0 - 1e-7);
    return std::log(s);
}
}  // namespace

std::vector<double> EmbeddingTable::lookup(const std::string& word) const {
    auto it = index.find(word);
    if (it != index.end()) {
        auto base = vectors.begin() + static_cast<long>(it->second * dim);
        return {base, base + static_cast<long>(dim)};
    }
    // deterministic fallback for out-of-vocabulary words
    Rng rng(mix64(fnv1a64(word) ^ 0xfeedbeefULL));
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    double scale = norm > 0.0 ? avg_norm / norm : 0.0;
    for (double& x : v) x *= scale;
    return v;
}

void EmbeddingTable::finalize() {
    auto it = index.find(kEndToken);
    if (it == index.end()) {
        index[kEndToken] = words.size();
        words.push_back(kEndToken);
        vectors.resize(words.size() * dim, 0.0);
        it = index.find(kEndToken);
    }
    std::fill_n(vectors.begin() + static_cast<long>(it->second * dim), dim, 0.0);

    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < words.size(); ++r) {
        if (words[r] == kEndToken) continue;
        double norm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            double v = vectors[r * dim + d];
            norm += v * v;
        }
        total += std::sqrt(norm);
        ++n;
    }
    avg_norm = n > 0 ? total / static_cast<double>(n) : 1.0;
}

EmbeddingTable train_cbow(const data::Corpus& corpus, const CbowConfig& cfg,
                          std::vector<double>* epoch_losses) {
    if (cfg.dim == 0 || cfg.window < 1 || cfg.epochs < 0 || cfg.lr <= 0 || cfg.negatives < 1 ||
        cfg.batch < 1)
        throw std::invalid_argument("train_cbow: bad config");

    // vocabulary: count, then order by (count desc, word asc)
    std::map<std::string, long long> counts;
    for (const data::Review& r : corpus.reviews)
        for (const std::string& t : r.tokens) ++counts[t];
    std::vector<std::pair<std::string, long long>> vocab(counts.begin(), counts.end());
    std::erase_if(vocab, [&](const auto& p) { return p.second < cfg.min_count; });
    if (vocab.empty()) throw DataError("train_cbow: empty vocabulary");
    std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    EmbeddingTable table;
    table.dim = cfg.dim;
    for (const auto& [w, c] : vocab) {
        table.index[w] = table.words.size();
        table.words.push_back(w);
    }
    std::size_t V = table.words.size(), D = cfg.dim;

    Rng rng(sub_seed(cfg.seed, "cbow"));
    table.vectors.assign(V * D, 0.0);
    for (double& v : table.vectors) v = rng.uniform(-0.5, 0.5) / static_cast<double>(D);
    std::vector<double> ctx_weights(V * D, 0.0);  // output-side vectors

    // cumulative count^0.75 for negative sampling
    std::vector<double> cum(V);
    double acc = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        acc += std::pow(static_cast<double>(counts.at(table.words[i])), 0.75);
        cum[i] = acc;
    }
    auto sample_negative = [&] {
        double u = rng.uniform() * acc;
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        return static_cast<std::size_t>(it - cum.begin());
    };

    // token id sequences, one per review
    std::vector<std::vector<std::size_t>> sequences;
    for (const data::Review& r : corpus.reviews) {
        std::vector<std::size_t> seq;
        for (const std::string& t : r.tokens) {
            auto it = table.index.find(t);
            if (it != table.index.end()) seq.push_back(it->second);
        }
        if (seq.size() >= 2) sequences.push_back(std::move(seq));
    }

    std::vector<double> mean(D), grad_mean(D);
    struct Pending {
        std::size_t row;
        std::vector<double> grad;
    };
    std::vector<Pending> batch_syn0, batch_syn1;
    long long batch_fill = 0;

    auto flush = [&] {
        for (const Pending& p : batch_syn0)
            for (std::size_t d = 0; d < D; ++d) table.vectors[p.row * D + d] -= cfg.lr * p.grad[d];
        for (const Pending& p : batch_syn1)
            for (std::size_t d = 0; d < D; ++d) ctx_weights[p.row * D + d] -= cfg.lr * p.grad[d];
        batch_syn0.clear();
        batch_syn1.clear();
        batch_fill = 0;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        long long loss_count = 0;
        for (const auto& seq : sequences) {
            for (std::size_t pos = 0; pos < seq.size(); ++pos) {
                std::size_t lo = pos >= static_cast<std::size_t>(cfg.window)
                                     ? pos - static_cast<std::size_t>(cfg.window)
                                     : 0;
                std::size_t hi = std::min(seq.size() - 1, pos + static_cast<std::size_t>(cfg.window));
                std::vector<std::size_t> context;
                for (std::size_t c = lo; c <= hi; ++c)
                    if (c != pos) context.push_back(seq[c]);
                if (context.empty()) continue;

                std::fill(mean.begin(), mean.end(), 0.0);
                for (std::size_t row : context)
                    for (std::size_t d = 0; d < D; ++d) mean[d] += table.vectors[row * D + d];
                double inv = 1.0 / static_cast<double>(context.size());
                for (double& v : mean) v *= inv;

                std::fill(grad_mean.begin(), grad_mean.end(), 0.0);
                double loss = 0.0;
                auto train_pair = [&](std::size_t target, double label) {
                    double dot = 0.0;
                    for (std::size_t d = 0; d < D; ++d) dot += mean[d] * ctx_weights[target * D + d];
                    double p = sigmoid(dot);
                    loss -= label > 0.5 ? clamped_log_sigmoid(dot) : clamped_log_sigmoid(-dot);
                    double g = p - label;
                    Pending pen{target, std::vector<double>(D)};
                    for (std::size_t d = 0; d < D; ++d) {
                        grad_mean[d] += g * ctx_weights[target * D + d];
                        pen.grad[d] = g * mean[d];
                    }
                    batch_syn1.push_back(std::move(pen));
                };

                train_pair(seq[pos], 1.0);
                for (int k = 0; k < cfg.negatives; ++k) {
                    std::size_t neg = sample_negative();
                    if (neg == seq[pos]) continue;
                    train_pair(neg, 0.0);
                }

                for (std::size_t row : context) {
                    Pending pen{row, std::vector<double>(D)};
                    for (std::size_t d = 0; d < D; ++d) pen.grad[d] = grad_mean[d] * inv;
                    batch_syn0.push_back(std::move(pen));
                }
                loss_sum += loss;
                ++loss_count;
                if (++batch_fill >= cfg.batch) flush();
            }
        }
        flush();
        if (epoch_losses)
            epoch_losses->push_back(loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                                   : 0.0);
    }

    table.finalize();
    return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embeddings file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("dim=", 0) != 0)
        throw DataError("embeddings file must start with dim=<D>: " + path);
    EmbeddingTable table;
    table.dim = static_cast<std::size_t>(std::stoul(header.substr(4)));
    if (table.dim == 0) throw DataError("embeddings dim must be positive");

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.size() != table.dim)
            throw DataError("embeddings line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.dim) + " values, got " +
                            std::to_string(vals.size()));
        if (!table.index.emplace(word, table.words.size()).second)
            throw DataError("embeddings line " + std::to_string(line_no) + ": duplicate word " +
                            word);
        table.words.push_back(word);
        table.vectors.insert(table.vectors.end(), vals.begin(), vals.end());
    }
    if (table.words.empty()) throw DataError("embeddings file has no vectors: " + path);
    table.finalize();
    return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "dim=" << table.dim << "\n";
    char buf[40];
    for (std::size_t r = 0; r < table.words.size(); ++r) {
        out << table.words[r];
        for (std::size_t d = 0; d < table.dim; ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.vectors[r * table.dim + d]);
            out << " " << buf;
        }
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace fgd::embed
