#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slotcast/features.hpp"
#include "slotcast/market_data.hpp"
#include "slotcast/slotter.hpp"

namespace slotcast {

enum class ModelTag : int {
    Logit = 0,
    Knn,
    Cart,
    Bag,
    Adaboost,
    Gradboost,
    Rf,
    Ann,
    Svm,
    Svr,
    OlsStepwise,
    Mars,
    Lstm,
    CnnM1,
    CnnM2,
    CnnM3,
    CnnM4,
};

std::string to_string(ModelTag tag);
std::optional<ModelTag> model_from_string(std::string_view name);
const std::vector<ModelTag>& all_models();

// Everything a run needs, file-representable and echoed byte-exactly into the
// report bundle. Sections: [data], [run], [slots], [features], then one per
// model family.
struct ExperimentConfig {
    // [data]
    std::string source = "synth"; // "synth" | "csv"
    std::string ticks_csv;
    int synth_days = 520;
    SynthParams synth;

    // [run]
    CaseId case_id = CaseId::III;
    std::vector<ModelTag> models;
    std::uint64_t seed = 42;
    std::string out_dir = "out";

    SlotConfig slots;
    FeatureOptions features;

    // [logit]
    int logit_max_iterations = 100;
    // [knn]
    int knn_k = 3;
    // [cart]
    int cart_min_node = 5;
    int cart_max_depth = 30;
    double cart_min_impurity_decrease = 1e-7;
    // [bag]
    int bag_nbag_cls = 25;
    int bag_nbag_reg = 100;
    // [adaboost]
    int ada_rounds = 100;
    int ada_depth = 3;
    // [gradboost]
    int gb_rounds = 100;
    double gb_learn_rate = 0.1;
    int gb_depth = 4;
    // [rf]
    int rf_trees = 500;
    int rf_mtry = 3;
    // [ann]
    std::vector<int> ann_hidden = {1};
    double ann_learn_rate = 0.01;
    long ann_max_steps = 1000000;
    double ann_grad_tol = 1e-7;
    // [svm]
    double svm_c = 1.0;
    double svm_tol = 1e-3;
    // [svr]
    double svr_gamma = 0.1;
    double svr_epsilon = 0.1;
    double svr_c = 1.0;
    double svr_tol = 1e-3;
    // [ols]
    double ols_alpha = 0.05;
    double ols_vif_threshold = 10.0;
    // [mars]
    int mars_max_terms = 21;
    double mars_rsq_delta = 0.001;
    double mars_penalty = 3.0;
    // [lstm]
    int lstm_hidden = 50;
    int lstm_lookback = 4;
    int lstm_epochs = 100;
    int lstm_batch = 72;
    int lstm_split_index = 500;
    double lstm_learn_rate = 0.001;
    // [cnn]
    int cnn_rounds = 20;
    int cnn_epochs = 0; // 0 keeps the variant default
    int cnn_batch = 0;  // 0 keeps the variant default
    double cnn_learn_rate = 0.001;

    bool operator==(const ExperimentConfig&) const = default;
};

// Full default config running every model on synthetic data.
ExperimentConfig make_default_config(std::uint64_t seed = 42);

// Strict section/key parser: unknown keys, malformed values, a missing
// `models` or `seed`, or an empty model list all raise ConfigError with the
// line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path); // IoError when unreadable

// Canonical text form; parse_config(render_config(c)) == c for any valid c.
std::string render_config(const ExperimentConfig& config);

} // namespace slotcast
