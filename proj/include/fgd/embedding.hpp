#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgd/corpus.hpp"

namespace fgd::embed {

inline constexpr const char* kEndToken = "END";

// Word vectors with a total lookup: in-vocabulary words map to their row,
// anything else gets a deterministic hash-seeded vector scaled to the average
// row norm. The padding token END is always present and embeds to zero.
struct EmbeddingTable {
    std::size_t dim = 100;
    std::vector<std::string> words;          // row order
    std::map<std::string, std::size_t> index;
    std::vector<double> vectors;             // words.size() * dim, row-major
    double avg_norm = 0.0;

    std::vector<double> lookup(const std::string& word) const;
    bool contains(const std::string& word) const { return index.count(word) > 0; }
    void finalize();  // recompute avg_norm, pin END to zero
};

struct CbowConfig {
    std::size_t dim = 100;
    int window = 2;
    int batch = 256;
    int epochs = 12;
    double lr = 0.05;
    int negatives = 5;
    int min_count = 1;
    std::uint64_t seed = 1;
};

// Negative-sampling CBOW over per-review token sequences. Single-threaded and
// fully deterministic under the seed. epoch_losses, when given, receives the
// mean loss of every epoch.
EmbeddingTable train_cbow(const data::Corpus& corpus, const CbowConfig& cfg,
                          std::vector<double>* epoch_losses = nullptr);

// Text format: first line "dim=<D>", then "word v1 ... vD" per line.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fgd::embed
