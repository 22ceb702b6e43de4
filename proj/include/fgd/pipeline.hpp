#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgd/cogroups.hpp"
#include "fgd/corpus.hpp"
#include "fgd/synth.hpp"

namespace fgd::pipeline {

// Flat key=value configuration; one `include = <path>` pulls in another file
// (its keys are overridden by later lines). Unknown keys are rejected.
struct Config {
    std::string output_dir = "out";
    std::string reviews_path;     // default: <output_dir>/reviews.jsonl
    std::string groups_path;      // default: <output_dir>/groups.jsonl
    std::string embeddings_path;  // non-empty: load pretrained instead of training CBOW

    std::uint64_t seed = 1;
    double split_ratio = 0.8;
    int window_days = 28;
    int min_items = 2;

    std::size_t embed_dim = 100;
    int cbow_window = 2;
    int cbow_batch = 256;
    int cbow_epochs = 12;
    double cbow_lr = 0.05;
    int cbow_negatives = 5;
    int cbow_min_count = 1;

    double encoder_lr = 1e-4;
    int encoder_epochs = 30;

    double hinrnn_lr = 0.003;
    int hinrnn_epochs = 3000;
    std::size_t graph_hidden = 128;
    std::size_t edge_hidden = 16;
    std::size_t input_embed = 64;
    int hinrnn_eval_every = 100;

    double head_lr = 0.01;
    int head_epochs = 300;

    bool feature_blind = false;
    bool no_pruning = false;

    data::SynthConfig synth;

    static Config load(const std::string& path);
    void validate() const;
    std::string resolved_text() const;

    std::string reviews_file() const;
    std::string groups_file() const;
    std::string out(const std::string& name) const;
    // artifact-name suffixes: "_fb" after train-hinrnn/infer when
    // feature_blind, plus "_np" after classify/evaluate when no_pruning
    std::string model_tag() const { return feature_blind ? "_fb" : ""; }
    std::string variant_tag() const {
        return model_tag() + (no_pruning ? "_np" : "");
    }
};

struct SplitInfo {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    bool is_train(const std::string& group_id) const;
};

// candidate group id -> gold label (kFraudster/kGenuine); derived from the
// best-overlapping gold group, or by member majority when only reviewer
// labels exist. Unlabelable candidates are absent.
std::map<std::string, int> candidate_labels(const std::vector<groups::CoReviewNetwork>& candidates,
                                            const data::Corpus& corpus);

void cmd_synth(const Config& cfg);
void cmd_build_groups(const Config& cfg);
void cmd_train_encoder(const Config& cfg);
void cmd_train_hinrnn(const Config& cfg);
void cmd_infer(const Config& cfg);
void cmd_classify(const Config& cfg);
void cmd_evaluate(const Config& cfg);
void cmd_report(const Config& cfg);

// convenience for tests and tools
void run_stage(const std::string& stage, const Config& cfg);

}  // namespace fgd::pipeline
