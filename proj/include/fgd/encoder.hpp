#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fgd/corpus.hpp"
#include "fgd/embedding.hpp"
#include "fgd/params.hpp"
#include "fgd/tensor.hpp"

namespace fgd::encoder {

inline constexpr std::size_t kMaxReviewWords = 400;

// One trigram filter of three scalar taps shared across all embedding
// dimensions, a per-dimension bias, and a 2-class head used only while
// training. The head is dropped once the reviewer embedding is extracted.
struct EncoderParams {
    nn::Tensor taps;    // [3]
    nn::Tensor bias;    // [D]
    nn::Tensor head_w;  // [D, 2]
    nn::Tensor head_b;  // [2]

    static EncoderParams init(std::size_t dim, Rng& rng);
    std::size_t dim() const { return bias.shape[0]; }

    void put(nn::ParamStore& store) const;
    static EncoderParams get(const nn::ParamStore& store);
};

// A sentence after padding: tokens includes the END padding, n_real counts
// the original words.
struct PreppedSentence {
    std::vector<std::string> tokens;
    std::size_t n_real = 0;
};

struct PreppedReviewer {
    std::string reviewer_id;
    std::vector<PreppedSentence> sentences;
    std::vector<int> ratings;
    std::optional<std::string> label;
    bool usable() const { return !sentences.empty(); }
};

// Aggregates a reviewer's reviews, splits sentences, applies the length cap
// and END padding. Reviews longer than kMaxReviewWords are skipped; shorter
// ones are padded (trailing ENDs attach to the last sentence); sentences are
// padded to at least 3 tokens.
PreppedReviewer prep_reviewer(const data::Corpus& corpus,
                              const std::vector<std::size_t>& review_indices);

// H_i = t0*e_i + t1*e_{i+1} + t2*e_{i+2} + bias, stride 1. embs is [n, D]
// with n >= 3; output is [n-2, D].
nn::Tensor trigram_conv(const nn::Tensor& embs, const nn::Tensor& taps, const nn::Tensor& bias);

// tanh of the positional mean of H ([k, D], k >= 1) -> [D]
nn::Tensor sentence_embed(const nn::Tensor& h);

// componentwise max over sentence vectors
nn::Tensor reviewer_embed(const std::vector<nn::Tensor>& sentence_vectors);

// fraction of ratings equal to 1 or 2
double negative_ratio(const std::vector<int>& ratings);

// Cached per-sentence window means: mean over retained windows of the
// window's first/second/third word embedding. A window is retained unless it
// is all padding. These make the sentence embedding affine in the taps:
// e_s = tanh(t0*m0 + t1*m1 + t2*m2 + bias).
struct SentenceMeans {
    nn::Tensor m0, m1, m2;  // each [D]
};

struct EncodedReviewer {
    std::string reviewer_id;
    std::vector<SentenceMeans> sentences;
    double neg_ratio = 0.0;
    std::optional<std::string> label;
};

EncodedReviewer encode_means(const PreppedReviewer& prep, const embed::EmbeddingTable& table);

// tanh(taps . means + bias) per sentence, then componentwise max
nn::Tensor reviewer_embedding(const EncodedReviewer& enc, const EncoderParams& params);

struct ReviewerVector {
    std::string reviewer_id;
    std::vector<double> values;  // D + 1, last component is the negative ratio
};

ReviewerVector reviewer_vector(const EncodedReviewer& enc, const EncoderParams& params);

struct EncoderTrainConfig {
    double lr = 1e-4;
    int epochs = 30;
    std::uint64_t seed = 1;
};

struct EpochLog {
    int epoch;
    double loss;
    double accuracy;
};

// Supervised fine-tuning on reviewer labels (fraudster=1, genuine=0) with
// inverse-frequency class weights. Every input must carry a label.
EncoderParams train_encoder(const std::vector<EncodedReviewer>& reviewers,
                            std::size_t dim, const EncoderTrainConfig& cfg,
                            std::vector<EpochLog>* log = nullptr);

void save_reviewer_vectors(const std::vector<ReviewerVector>& vectors, const std::string& path);
std::vector<ReviewerVector> load_reviewer_vectors(const std::string& path);

}  // namespace fgd::encoder
