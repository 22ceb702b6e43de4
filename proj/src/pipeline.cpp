#include "fgd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fgd/classifier.hpp"
#include "fgd/embedding.hpp"
#include "fgd/encoder.hpp"
#include "fgd/errors.hpp"
#include "fgd/hin_rnn.hpp"
#include "fgd/rng.hpp"
#include "json.hpp"

namespace fgd::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// configuration

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw DataError("config: bad boolean for " + key + ": " + v);
}

void apply_kv(Config& c, const std::string& key, const std::string& value);

void parse_file(Config& c, const std::string& path, int depth) {
    if (depth > 8) throw DataError("config: include depth exceeded at " + path);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw DataError("config: expected key=value, got: " + s);
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key == "include") {
            fs::path inc(value);
            if (inc.is_relative()) inc = fs::path(path).parent_path() / inc;
            parse_file(c, inc.string(), depth + 1);
        } else {
            apply_kv(c, key, value);
        }
    }
}

void apply_kv(Config& c, const std::string& key, const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
    auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
    auto as_double = [&] { return std::stod(value); };
    try {
        if (key == "output_dir") c.output_dir = value;
        else if (key == "reviews") c.reviews_path = value;
        else if (key == "groups") c.groups_path = value;
        else if (key == "embeddings") c.embeddings_path = value;
        else if (key == "seed") c.seed = as_u64();
        else if (key == "split_ratio") c.split_ratio = as_double();
        else if (key == "window_days") c.window_days = as_int();
        else if (key == "min_items") c.min_items = as_int();
        else if (key == "embed_dim") c.embed_dim = as_size();
        else if (key == "cbow_window") c.cbow_window = as_int();
        else if (key == "cbow_batch") c.cbow_batch = as_int();
        else if (key == "cbow_epochs") c.cbow_epochs = as_int();
        else if (key == "cbow_lr") c.cbow_lr = as_double();
        else if (key == "cbow_negatives") c.cbow_negatives = as_int();
        else if (key == "cbow_min_count") c.cbow_min_count = as_int();
        else if (key == "encoder_lr") c.encoder_lr = as_double();
        else if (key == "encoder_epochs") c.encoder_epochs = as_int();
        else if (key == "hinrnn_lr") c.hinrnn_lr = as_double();
        else if (key == "hinrnn_epochs") c.hinrnn_epochs = as_int();
        else if (key == "graph_hidden") c.graph_hidden = as_size();
        else if (key == "edge_hidden") c.edge_hidden = as_size();
        else if (key == "input_embed") c.input_embed = as_size();
        else if (key == "hinrnn_eval_every") c.hinrnn_eval_every = as_int();
        else if (key == "head_lr") c.head_lr = as_double();
        else if (key == "head_epochs") c.head_epochs = as_int();
        else if (key == "feature_blind") c.feature_blind = parse_bool(value, key);
        else if (key == "no_pruning") c.no_pruning = parse_bool(value, key);
        else if (key == "synth_groups") c.synth.n_groups = as_int();
        else if (key == "synth_size_min") c.synth.group_size_min = as_int();
        else if (key == "synth_size_max") c.synth.group_size_max = as_int();
        else if (key == "synth_fraud_fraction") c.synth.fraud_fraction = as_double();
        else if (key == "synth_camouflage") c.synth.camouflage_rate = as_double();
        else if (key == "synth_items_per_group") c.synth.items_per_group = as_int();
        else if (key == "synth_vocab_fraud") c.synth.vocab_fraud = as_int();
        else if (key == "synth_vocab_genuine") c.synth.vocab_genuine = as_int();
        else if (key == "synth_vocab_shared") c.synth.vocab_shared = as_int();
        else if (key == "synth_shared_token_prob") c.synth.shared_token_prob = as_double();
        else if (key == "synth_fraud_negative_prob") c.synth.fraud_negative_prob = as_double();
        else if (key == "synth_genuine_negative_prob") c.synth.genuine_negative_prob = as_double();
        else if (key == "synth_tokens_min") c.synth.tokens_per_review_min = as_int();
        else if (key == "synth_tokens_max") c.synth.tokens_per_review_max = as_int();
        else if (key == "synth_time_spread") c.synth.time_spread_days = as_int();
        else throw DataError("config: unknown key: " + key);
    } catch (const std::invalid_argument&) {
        throw DataError("config: bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw DataError("config: value out of range for " + key + ": " + value);
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Config Config::load(const std::string& path) {
    Config c;
    parse_file(c, path, 0);
    c.validate();
    return c;
}

void Config::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw DataError(std::string("config: ") + name + " must be positive");
    };
    positive(cbow_lr, "cbow_lr");
    positive(encoder_lr, "encoder_lr");
    positive(hinrnn_lr, "hinrnn_lr");
    positive(head_lr, "head_lr");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw DataError("config: split_ratio must be in (0,1)");
    if (window_days < 0) throw DataError("config: window_days must be >= 0");
    if (min_items < 1) throw DataError("config: min_items must be >= 1");
    if (embed_dim == 0 || graph_hidden == 0 || edge_hidden == 0 || input_embed == 0)
        throw DataError("config: layer sizes must be positive");
    if (cbow_epochs < 0 || encoder_epochs < 0 || hinrnn_epochs < 0 || head_epochs < 0)
        throw DataError("config: epoch counts must be >= 0");
    if (output_dir.empty()) throw DataError("config: output_dir must be set");
}

std::string Config::reviews_file() const {
    return reviews_path.empty() ? out("reviews.jsonl") : reviews_path;
}

std::string Config::groups_file() const {
    return groups_path.empty() ? out("groups.jsonl") : groups_path;
}

std::string Config::out(const std::string& name) const {
    return (fs::path(output_dir) / name).string();
}

std::string Config::resolved_text() const {
    std::ostringstream os;
    os << "output_dir = " << output_dir << "\n";
    os << "reviews = " << reviews_file() << "\n";
    os << "groups = " << groups_file() << "\n";
    os << "embeddings = " << embeddings_path << "\n";
    os << "seed = " << seed << "\n";
    os << "split_ratio = " << fmt_double(split_ratio) << "\n";
    os << "window_days = " << window_days << "\n";
    os << "min_items = " << min_items << "\n";
    os << "embed_dim = " << embed_dim << "\n";
    os << "cbow_window = " << cbow_window << "\n";
    os << "cbow_batch = " << cbow_batch << "\n";
    os << "cbow_epochs = " << cbow_epochs << "\n";
    os << "cbow_lr = " << fmt_double(cbow_lr) << "\n";
    os << "cbow_negatives = " << cbow_negatives << "\n";
    os << "cbow_min_count = " << cbow_min_count << "\n";
    os << "encoder_lr = " << fmt_double(encoder_lr) << "\n";
    os << "encoder_epochs = " << encoder_epochs << "\n";
    os << "hinrnn_lr = " << fmt_double(hinrnn_lr) << "\n";
    os << "hinrnn_epochs = " << hinrnn_epochs << "\n";
    os << "graph_hidden = " << graph_hidden << "\n";
    os << "edge_hidden = " << edge_hidden << "\n";
    os << "input_embed = " << input_embed << "\n";
    os << "hinrnn_eval_every = " << hinrnn_eval_every << "\n";
    os << "head_lr = " << fmt_double(head_lr) << "\n";
    os << "head_epochs = " << head_epochs << "\n";
    os << "feature_blind = " << (feature_blind ? "true" : "false") << "\n";
    os << "no_pruning = " << (no_pruning ? "true" : "false") << "\n";
    os << "synth_groups = " << synth.n_groups << "\n";
    os << "synth_size_min = " << synth.group_size_min << "\n";
    os << "synth_size_max = " << synth.group_size_max << "\n";
    os << "synth_fraud_fraction = " << fmt_double(synth.fraud_fraction) << "\n";
    os << "synth_camouflage = " << fmt_double(synth.camouflage_rate) << "\n";
    os << "synth_items_per_group = " << synth.items_per_group << "\n";
    os << "synth_vocab_fraud = " << synth.vocab_fraud << "\n";
    os << "synth_vocab_genuine = " << synth.vocab_genuine << "\n";
    os << "synth_vocab_shared = " << synth.vocab_shared << "\n";
    os << "synth_shared_token_prob = " << fmt_double(synth.shared_token_prob) << "\n";
    os << "synth_fraud_negative_prob = " << fmt_double(synth.fraud_negative_prob) << "\n";
    os << "synth_genuine_negative_prob = " << fmt_double(synth.genuine_negative_prob) << "\n";
    os << "synth_tokens_min = " << synth.tokens_per_review_min << "\n";
    os << "synth_tokens_max = " << synth.tokens_per_review_max << "\n";
    os << "synth_time_spread = " << synth.time_spread_days << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

void ensure_output_dir(const Config& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw DataError("cannot create output dir: " + cfg.output_dir);
}

void echo_config(const Config& cfg) {
    std::ofstream out(cfg.out("resolved_config.txt"), std::ios::binary);
    if (!out) throw DataError("cannot write resolved config");
    out << cfg.resolved_text();
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing " + path + " — run `pipeline " + producer + "` first");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << text;
    if (!out) throw DataError("write failed: " + path);
}

void save_split(const SplitInfo& split, const std::string& path) {
    json j;
    j["train"] = split.train_ids;
    j["test"] = split.test_ids;
    write_text(path, j.dump(2) + "\n");
}

SplitInfo load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open split file: " + path);
    json j = json::parse(in, nullptr, true);
    SplitInfo s;
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    return s;
}

struct GroupMatrix {
    std::string group_id;
    std::vector<std::string> ordering;  // reviewer ids by position
    hinrnn::CollabMatrix matrix;
};

void save_matrices(const std::vector<GroupMatrix>& mats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const GroupMatrix& gm : mats) {
        json j;
        j["group_id"] = gm.group_id;
        j["ordering"] = gm.ordering;
        json rows = json::array();
        for (std::size_t i = 0; i < gm.matrix.n; ++i) {
            json row = json::array();
            for (std::size_t k = 0; k < gm.matrix.n; ++k)
                row.push_back(static_cast<int>(gm.matrix.at(i, k)));
            rows.push_back(std::move(row));
        }
        j["matrix"] = std::move(rows);
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<GroupMatrix> load_matrices(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open matrices file: " + path);
    std::vector<GroupMatrix> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            GroupMatrix gm;
            gm.group_id = j.at("group_id").get<std::string>();
            gm.ordering = j.at("ordering").get<std::vector<std::string>>();
            auto rows = j.at("matrix");
            std::size_t n = rows.size();
            gm.matrix = hinrnn::CollabMatrix::zeros(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    if (rows.at(i).at(k).get<int>() != 0) gm.matrix.set_edge(i, k, 1);
            out.push_back(std::move(gm));
        } catch (const std::exception& e) {
            throw DataError("matrices line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

hinrnn::VectorMap load_vector_map(const std::string& path) {
    hinrnn::VectorMap map;
    for (auto& rv : encoder::load_reviewer_vectors(path)) map[rv.reviewer_id] = rv.values;
    return map;
}

std::string label_name(int label) {
    return label == classify::kFraudster ? data::kFraudLabel : data::kGenuineLabel;
}

struct CsvWriter {
    std::ofstream out;
    explicit CsvWriter(const std::string& path, const std::string& header) : out(path, std::ios::binary) {
        if (!out) throw DataError("cannot open for writing: " + path);
        out << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ",";
            out << cells[i];
        }
        out << "\n";
    }
};

}  // namespace

bool SplitInfo::is_train(const std::string& group_id) const {
    return std::binary_search(train_ids.begin(), train_ids.end(), group_id);
}

std::map<std::string, int> candidate_labels(const std::vector<groups::CoReviewNetwork>& candidates,
                                            const data::Corpus& corpus) {
    std::map<std::string, int> out;
    for (const auto& net : candidates) {
        std::set<std::string> members(net.reviewers.begin(), net.reviewers.end());
        if (!corpus.gold_groups.empty()) {
            std::size_t best = 0;
            std::string best_id;
            int best_label = classify::kGenuine;
            for (const data::GoldGroup& g : corpus.gold_groups) {
                std::size_t overlap = 0;
                for (const std::string& r : g.reviewer_ids) overlap += members.count(r);
                if (overlap > best || (overlap == best && overlap > 0 && g.group_id < best_id)) {
                    best = overlap;
                    best_id = g.group_id;
                    best_label = g.label == data::kFraudLabel ? classify::kFraudster
                                                              : classify::kGenuine;
                }
            }
            if (best > 0) out[net.group_id] = best_label;
        } else {
            long long fraud = 0, genuine = 0;
            for (const std::string& r : net.reviewers) {
                auto it = corpus.reviewer_labels.find(r);
                if (it == corpus.reviewer_labels.end()) continue;
                (it->second == data::kFraudLabel ? fraud : genuine)++;
            }
            if (fraud + genuine > 0)
                out[net.group_id] =
                    fraud > genuine ? classify::kFraudster : classify::kGenuine;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// stages

void cmd_synth(const Config& cfg) {
    ensure_output_dir(cfg);
    data::SynthConfig scfg = cfg.synth;
    scfg.seed = cfg.seed;
    data::Corpus corpus = data::generate_synthetic(scfg);
    data::save_corpus(corpus, cfg.reviews_file(), cfg.groups_file());
    echo_config(cfg);
    std::cout << "synth: wrote " << corpus.reviews.size() << " reviews, "
              << corpus.gold_groups.size() << " gold groups\n";
}

void cmd_build_groups(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.reviews_file(), "synth");
    data::Corpus corpus = data::load_corpus(cfg.reviews_file());
    auto edges = groups::co_review_edges(corpus, cfg.window_days, cfg.min_items);
    auto nets = groups::candidate_groups(edges);
    groups::save_candidate_groups(nets, cfg.out("candidate_groups.jsonl"));

    std::vector<std::string> ids;
    for (const auto& n : nets) ids.push_back(n.group_id);
    auto [train, test] = data::split_group_ids(ids, cfg.split_ratio, cfg.seed);
    save_split(SplitInfo{train, test}, cfg.out("split.json"));
    echo_config(cfg);
    std::cout << "build-groups: " << edges.size() << " edges, " << nets.size()
              << " candidate groups (" << train.size() << " train / " << test.size()
              << " test)\n";
}

void cmd_train_encoder(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.reviews_file(), "synth");
    require_artifact(cfg.out("candidate_groups.jsonl"), "build-groups");
    require_artifact(cfg.out("split.json"), "build-groups");
    data::Corpus corpus = data::load_corpus(cfg.reviews_file(), cfg.groups_file());
    auto nets = groups::load_candidate_groups(cfg.out("candidate_groups.jsonl"));
    SplitInfo split = load_split(cfg.out("split.json"));

    std::set<std::string> train_reviewers, all_reviewers;
    for (const auto& net : nets) {
        bool train = split.is_train(net.group_id);
        for (const std::string& r : net.reviewers) {
            all_reviewers.insert(r);
            if (train) train_reviewers.insert(r);
        }
    }
    if (train_reviewers.empty()) throw DataError("train-encoder: no reviewers in the train split");

    // embeddings: pretrained if configured, otherwise CBOW over train-split text
    embed::EmbeddingTable table;
    if (!cfg.embeddings_path.empty()) {
        table = embed::load_embeddings(cfg.embeddings_path);
        if (table.dim != cfg.embed_dim)
            std::cerr << "train-encoder: pretrained dim " << table.dim
                      << " overrides configured embed_dim\n";
    } else {
        data::Corpus train_corpus;
        for (const data::Review& r : corpus.reviews)
            if (train_reviewers.count(r.reviewer_id)) train_corpus.reviews.push_back(r);
        embed::CbowConfig ccfg;
        ccfg.dim = cfg.embed_dim;
        ccfg.window = cfg.cbow_window;
        ccfg.batch = cfg.cbow_batch;
        ccfg.epochs = cfg.cbow_epochs;
        ccfg.lr = cfg.cbow_lr;
        ccfg.negatives = cfg.cbow_negatives;
        ccfg.min_count = cfg.cbow_min_count;
        ccfg.seed = cfg.seed;
        std::vector<double> losses;
        table = embed::train_cbow(train_corpus, ccfg, &losses);
        embed::save_embeddings(table, cfg.out("embeddings.txt"));
        CsvWriter csv(cfg.out("cbow_log.csv"), "epoch,loss");
        for (std::size_t e = 0; e < losses.size(); ++e)
            csv.row({std::to_string(e + 1), fmt_double(losses[e])});
    }

    auto by_reviewer = corpus.reviews_by_reviewer();
    std::vector<encoder::EncodedReviewer> train_set;
    std::map<std::string, encoder::EncodedReviewer> encoded;
    for (const std::string& rid : all_reviewers) {
        auto it = by_reviewer.find(rid);
        if (it == by_reviewer.end()) continue;
        encoder::PreppedReviewer prep = encoder::prep_reviewer(corpus, it->second);
        if (!prep.usable()) {
            std::cerr << "train-encoder: dropping reviewer " << rid << " (no usable reviews)\n";
            continue;
        }
        encoder::EncodedReviewer enc = encoder::encode_means(prep, table);
        if (!enc.label) enc.label = corpus.reviewer_label_of(rid);
        if (train_reviewers.count(rid) && enc.label) train_set.push_back(enc);
        encoded.emplace(rid, std::move(enc));
    }
    if (train_set.empty()) throw DataError("train-encoder: no labeled reviewers in train split");

    encoder::EncoderTrainConfig ecfg;
    ecfg.lr = cfg.encoder_lr;
    ecfg.epochs = cfg.encoder_epochs;
    ecfg.seed = cfg.seed;
    std::vector<encoder::EpochLog> log;
    encoder::EncoderParams params = encoder::train_encoder(train_set, table.dim, ecfg, &log);

    nn::ParamStore store;
    params.put(store);
    store.save(cfg.out("encoder.ckpt"));
    CsvWriter csv(cfg.out("encoder_log.csv"), "epoch,loss,accuracy");
    for (const auto& e : log)
        csv.row({std::to_string(e.epoch), fmt_double(e.loss), fmt_double(e.accuracy)});

    std::vector<encoder::ReviewerVector> vectors;
    for (const auto& [rid, enc] : encoded)
        vectors.push_back(encoder::reviewer_vector(enc, params));
    encoder::save_reviewer_vectors(vectors, cfg.out("reviewer_vectors.jsonl"));
    echo_config(cfg);
    std::cout << "train-encoder: " << train_set.size() << " training reviewers, "
              << vectors.size() << " vectors written\n";
}

void cmd_train_hinrnn(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.out("candidate_groups.jsonl"), "build-groups");
    require_artifact(cfg.out("split.json"), "build-groups");
    require_artifact(cfg.out("reviewer_vectors.jsonl"), "train-encoder");
    auto nets = groups::load_candidate_groups(cfg.out("candidate_groups.jsonl"));
    SplitInfo split = load_split(cfg.out("split.json"));
    hinrnn::VectorMap vectors = load_vector_map(cfg.out("reviewer_vectors.jsonl"));

    std::vector<groups::CoReviewNetwork> train_nets;
    for (auto& net : nets)
        if (split.is_train(net.group_id)) train_nets.push_back(net);
    if (train_nets.empty()) throw DataError("train-hinrnn: no training networks");

    std::size_t n_max = 2;
    for (const auto& net : train_nets) n_max = std::max(n_max, net.size());
    std::size_t feat_dim = vectors.begin()->second.size();

    hinrnn::ModelConfig mcfg;
    mcfg.graph_hidden = cfg.graph_hidden;
    mcfg.edge_hidden = cfg.edge_hidden;
    mcfg.input_embed = cfg.input_embed;
    mcfg.feat_dim = feat_dim;
    mcfg.n_max = n_max;
    mcfg.feature_blind = cfg.feature_blind;
    hinrnn::Model model = hinrnn::Model::init(mcfg, cfg.seed);

    CsvWriter csv(cfg.out("hinrnn_log" + cfg.model_tag() + ".csv"),
                  "epoch,loss,edge_accuracy,node_accuracy");
    hinrnn::TrainOptions opts;
    opts.lr = cfg.hinrnn_lr;
    opts.epochs = cfg.hinrnn_epochs;
    opts.seed = cfg.seed;
    opts.eval_every = cfg.hinrnn_eval_every;
    opts.on_epoch = [&](const hinrnn::EpochStats& st) {
        csv.row({std::to_string(st.epoch), fmt_double(st.loss),
                 st.has_acc ? fmt_double(st.edge_acc) : "",
                 st.has_acc ? fmt_double(st.node_acc) : ""});
        return true;
    };
    model.train(train_nets, vectors, opts);
    model.save(cfg.out("hinrnn" + cfg.model_tag() + ".ckpt"));
    echo_config(cfg);
    std::cout << "train-hinrnn: trained on " << train_nets.size() << " networks (n_max=" << n_max
              << (cfg.feature_blind ? ", feature-blind" : "") << ")\n";
}

void cmd_infer(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.out("candidate_groups.jsonl"), "build-groups");
    require_artifact(cfg.out("split.json"), "build-groups");
    require_artifact(cfg.out("reviewer_vectors.jsonl"), "train-encoder");
    require_artifact(cfg.out("hinrnn" + cfg.model_tag() + ".ckpt"), "train-hinrnn");
    auto nets = groups::load_candidate_groups(cfg.out("candidate_groups.jsonl"));
    SplitInfo split = load_split(cfg.out("split.json"));
    hinrnn::VectorMap vectors = load_vector_map(cfg.out("reviewer_vectors.jsonl"));
    hinrnn::Model model = hinrnn::Model::load(cfg.out("hinrnn" + cfg.model_tag() + ".ckpt"));

    std::vector<GroupMatrix> mats;
    double ea_train = 0, na_train = 0, ea_test = 0, na_test = 0;
    std::size_t n_train = 0, n_test = 0;
    for (const auto& net : nets) {
        hinrnn::InferResult r = model.infer(net, vectors);
        GroupMatrix gm;
        gm.group_id = net.group_id;
        for (std::size_t p : r.ordering.positions) gm.ordering.push_back(net.reviewers[p]);
        gm.matrix = r.matrix;

        hinrnn::CollabMatrix gold = hinrnn::from_sequence(hinrnn::to_sequence(net, r.ordering));
        double ea = hinrnn::edge_accuracy(r.matrix, gold);
        double na = hinrnn::node_accuracy(r.matrix);
        if (split.is_train(net.group_id)) {
            ea_train += ea; na_train += na; ++n_train;
        } else {
            ea_test += ea; na_test += na; ++n_test;
        }
        mats.push_back(std::move(gm));
    }
    save_matrices(mats, cfg.out("matrices" + cfg.model_tag() + ".jsonl"));

    json j;
    auto block = [](double ea, double na, std::size_t n) {
        json b;
        b["edge_accuracy"] = n ? ea / static_cast<double>(n) : 0.0;
        b["node_accuracy"] = n ? na / static_cast<double>(n) : 0.0;
        b["n_groups"] = n;
        return b;
    };
    j["train"] = block(ea_train, na_train, n_train);
    j["test"] = block(ea_test, na_test, n_test);
    write_text(cfg.out("infer_metrics" + cfg.model_tag() + ".json"), j.dump(2) + "\n");
    echo_config(cfg);
    std::cout << "infer: " << mats.size() << " matrices written\n";
}

void cmd_classify(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.reviews_file(), "synth");
    require_artifact(cfg.out("candidate_groups.jsonl"), "build-groups");
    require_artifact(cfg.out("split.json"), "build-groups");
    require_artifact(cfg.out("reviewer_vectors.jsonl"), "train-encoder");
    require_artifact(cfg.out("matrices" + cfg.model_tag() + ".jsonl"), "infer");
    data::Corpus corpus =
        data::load_corpus(cfg.reviews_file(),
                          fs::exists(cfg.groups_file()) ? cfg.groups_file() : "");
    auto nets = groups::load_candidate_groups(cfg.out("candidate_groups.jsonl"));
    SplitInfo split = load_split(cfg.out("split.json"));
    hinrnn::VectorMap vectors = load_vector_map(cfg.out("reviewer_vectors.jsonl"));
    auto mats = load_matrices(cfg.out("matrices" + cfg.model_tag() + ".jsonl"));
    auto cand_labels = candidate_labels(nets, corpus);

    // final groups: connected components of each refined matrix
    struct FinalGroup {
        std::string id;
        std::string candidate_id;
        std::vector<std::string> members;        // full component
        std::vector<std::string> kept_members;   // after deviant removal
        std::vector<double> vec;
    };
    std::vector<FinalGroup> finals;
    for (const GroupMatrix& gm : mats) {
        auto comps = hinrnn::matrix_components(gm.matrix);
        for (std::size_t c = 0; c < comps.size(); ++c) {
            FinalGroup fg;
            fg.candidate_id = gm.group_id;
            fg.id = comps.size() == 1 ? gm.group_id
                                      : gm.group_id + "." + std::to_string(c);
            // submatrix of the component
            hinrnn::CollabMatrix sub = hinrnn::CollabMatrix::zeros(comps[c].size());
            for (std::size_t i = 0; i < comps[c].size(); ++i)
                for (std::size_t k = i + 1; k < comps[c].size(); ++k)
                    if (gm.matrix.at(comps[c][i], comps[c][k])) sub.set_edge(i, k, 1);
            std::vector<std::size_t> kept;
            if (cfg.no_pruning) {
                for (std::size_t i = 0; i < comps[c].size(); ++i) kept.push_back(i);
            } else {
                kept = classify::remove_deviants(sub);
            }
            for (std::size_t i : comps[c]) fg.members.push_back(gm.ordering.at(i));
            std::vector<std::vector<double>> member_vecs;
            for (std::size_t i : kept) {
                const std::string& rid = gm.ordering.at(comps[c][i]);
                fg.kept_members.push_back(rid);
                auto vit = vectors.find(rid);
                if (vit == vectors.end())
                    throw DataError("classify: missing vector for " + rid);
                member_vecs.push_back(vit->second);
            }
            std::sort(fg.members.begin(), fg.members.end());
            std::sort(fg.kept_members.begin(), fg.kept_members.end());
            fg.vec = classify::group_vector(member_vecs);
            finals.push_back(std::move(fg));
        }
    }
    if (finals.empty()) throw DataError("classify: no groups survived inference");

    std::vector<std::vector<double>> train_vecs;
    std::vector<int> train_labels;
    for (const FinalGroup& fg : finals) {
        if (!split.is_train(fg.candidate_id)) continue;
        auto it = cand_labels.find(fg.candidate_id);
        if (it == cand_labels.end()) continue;
        train_vecs.push_back(fg.vec);
        train_labels.push_back(it->second);
    }
    if (train_vecs.empty()) throw DataError("classify: no labeled training groups");

    classify::HeadTrainConfig hcfg;
    hcfg.lr = cfg.head_lr;
    hcfg.epochs = cfg.head_epochs;
    hcfg.seed = cfg.seed;
    std::vector<classify::HeadEpochLog> log;
    classify::HeadParams head = classify::train_head(train_vecs, train_labels, hcfg, &log);

    nn::ParamStore store;
    head.put(store);
    store.save(cfg.out("head" + cfg.variant_tag() + ".ckpt"));
    CsvWriter csv(cfg.out("head_log" + cfg.variant_tag() + ".csv"), "epoch,loss,accuracy");
    for (const auto& e : log)
        csv.row({std::to_string(e.epoch), fmt_double(e.loss), fmt_double(e.accuracy)});

    std::ofstream out(cfg.out("predictions" + cfg.variant_tag() + ".jsonl"), std::ios::binary);
    if (!out) throw DataError("cannot write predictions");
    for (const FinalGroup& fg : finals) {
        json j;
        j["group_id"] = fg.id;
        j["candidate_id"] = fg.candidate_id;
        j["pruned_reviewer_ids"] = fg.kept_members;
        j["label"] = label_name(classify::classify(fg.vec, head));
        j["score"] = classify::fraud_score(fg.vec, head);
        out << j.dump() << "\n";
    }
    echo_config(cfg);
    std::cout << "classify: " << finals.size() << " groups labeled ("
              << train_vecs.size() << " used for head training)\n";
}

void cmd_evaluate(const Config& cfg) {
    ensure_output_dir(cfg);
    require_artifact(cfg.reviews_file(), "synth");
    require_artifact(cfg.out("candidate_groups.jsonl"), "build-groups");
    require_artifact(cfg.out("split.json"), "build-groups");
    require_artifact(cfg.out("predictions" + cfg.variant_tag() + ".jsonl"), "classify");
    data::Corpus corpus =
        data::load_corpus(cfg.reviews_file(),
                          fs::exists(cfg.groups_file()) ? cfg.groups_file() : "");
    auto nets = groups::load_candidate_groups(cfg.out("candidate_groups.jsonl"));
    SplitInfo split = load_split(cfg.out("split.json"));
    auto cand_labels = candidate_labels(nets, corpus);

    std::ifstream in(cfg.out("predictions" + cfg.variant_tag() + ".jsonl"), std::ios::binary);
    std::vector<int> predicted, gold;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string cand = j.at("candidate_id").get<std::string>();
        if (split.is_train(cand)) continue;
        auto it = cand_labels.find(cand);
        if (it == cand_labels.end()) continue;
        predicted.push_back(j.at("label").get<std::string>() == data::kFraudLabel
                                ? classify::kFraudster
                                : classify::kGenuine);
        gold.push_back(it->second);
    }
    if (predicted.empty()) throw DataError("evaluate: no labeled test groups to score");

    classify::Metrics m = classify::evaluate(predicted, gold);
    json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["tn"] = m.tn;
    j["n_groups"] = predicted.size();
    write_text(cfg.out("metrics" + cfg.variant_tag() + ".json"), j.dump(2) + "\n");
    echo_config(cfg);
    std::cout << "evaluate: precision=" << m.precision << " recall=" << m.recall
              << " f1=" << m.f1 << " over " << predicted.size() << " test groups\n";
}

void cmd_report(const Config& cfg) {
    ensure_output_dir(cfg);
    json report;
    std::ostringstream table;

    std::vector<std::pair<std::string, json>> metric_files;
    for (const char* variant : {"", "_fb", "_np", "_fb_np"}) {
        std::string path = cfg.out(std::string("metrics") + variant + ".json");
        if (!fs::exists(path)) continue;
        std::ifstream in(path);
        json m = json::parse(in);
        metric_files.emplace_back(variant[0] ? variant + 1 : "default", m);
    }
    for (const char* variant : {"", "_fb"}) {
        std::string path = cfg.out(std::string("infer_metrics") + variant + ".json");
        if (!fs::exists(path)) continue;
        std::ifstream in(path);
        report["infer"][variant[0] ? variant + 1 : "default"] = json::parse(in);
    }

    if (metric_files.empty() && !report.contains("infer")) {
        std::cout << "report: nothing to report in " << cfg.output_dir << "\n";
        write_text(cfg.out("report.txt"), "nothing to report\n");
        return;
    }

    table << "variant      precision  recall     f1         groups\n";
    for (const auto& [name, m] : metric_files) {
        report["metrics"][name] = m;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-12s %-10.4f %-10.4f %-10.4f %lld\n", name.c_str(),
                      m.at("precision").get<double>(), m.at("recall").get<double>(),
                      m.at("f1").get<double>(),
                      static_cast<long long>(m.at("n_groups").get<double>()));
        table << buf;
    }
    if (metric_files.size() >= 2) {
        table << "\nablation deltas vs " << metric_files.front().first << ":\n";
        const json& base = metric_files.front().second;
        for (std::size_t i = 1; i < metric_files.size(); ++i) {
            const auto& [name, m] = metric_files[i];
            json d;
            d["precision"] = m.at("precision").get<double>() - base.at("precision").get<double>();
            d["recall"] = m.at("recall").get<double>() - base.at("recall").get<double>();
            d["f1"] = m.at("f1").get<double>() - base.at("f1").get<double>();
            report["ablation_deltas"][name] = d;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%-12s %+10.4f %+10.4f %+10.4f\n", name.c_str(),
                          d.at("precision").get<double>(), d.at("recall").get<double>(),
                          d.at("f1").get<double>());
            table << buf;
        }
    }
    if (report.contains("infer")) {
        table << "\nedge/node reconstruction (test split):\n";
        for (auto& [name, block] : report.at("infer").items()) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%-12s edge=%-8.4f node=%-8.4f\n", name.c_str(),
                          block.at("test").at("edge_accuracy").get<double>(),
                          block.at("test").at("node_accuracy").get<double>());
            table << buf;
        }
    }

    write_text(cfg.out("report.json"), report.dump(2) + "\n");
    write_text(cfg.out("report.txt"), table.str());
    std::cout << table.str();
}

void run_stage(const std::string& stage, const Config& cfg) {
    if (stage == "synth") cmd_synth(cfg);
    else if (stage == "build-groups") cmd_build_groups(cfg);
    else if (stage == "train-encoder") cmd_train_encoder(cfg);
    else if (stage == "train-hinrnn") cmd_train_hinrnn(cfg);
    else if (stage == "infer") cmd_infer(cfg);
    else if (stage == "classify") cmd_classify(cfg);
    else if (stage == "evaluate") cmd_evaluate(cfg);
    else if (stage == "report") cmd_report(cfg);
    else throw std::invalid_argument("unknown stage: " + stage);
}

}  // namespace fgd::pipeline
