#include "slotcast/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"

namespace slotcast {

namespace {

constexpr std::array<const char*, 17> kModelNames = {
    "logit", "knn",  "cart", "bag",          "adaboost", "gradboost", "rf",     "ann",  "svm",
    "svr",   "ols_stepwise", "mars", "lstm", "cnn_m1",   "cnn_m2",    "cnn_m3", "cnn_m4"};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

long long to_int(const std::string& v, int line) {
    long long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) fail(line, "expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v, int line) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        fail(line, "expected an unsigned integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& v, int line) {
    try {
        return parse_double(v, "value");
    } catch (const Error&) {
        fail(line, "expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(line, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : v) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

} // namespace

std::string to_string(ModelTag tag) { return kModelNames[static_cast<std::size_t>(tag)]; }

std::optional<ModelTag> model_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kModelNames.size(); ++i)
        if (name == kModelNames[i]) return static_cast<ModelTag>(i);
    return std::nullopt;
}

const std::vector<ModelTag>& all_models() {
    static const std::vector<ModelTag> all = [] {
        std::vector<ModelTag> v;
        for (std::size_t i = 0; i < kModelNames.size(); ++i) v.push_back(static_cast<ModelTag>(i));
        return v;
    }();
    return all;
}

ExperimentConfig make_default_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.models = all_models();
    cfg.seed = seed;
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.models.clear();
    bool saw_models = false, saw_seed = false;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(line_no, "empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");

        const std::string qual = section + "." + key;
        if (qual == "data.source") {
            if (value != "synth" && value != "csv") fail(line_no, "source must be synth or csv");
            cfg.source = value;
        } else if (qual == "data.ticks_csv") {
            cfg.ticks_csv = value;
        } else if (qual == "data.synth_days") {
            cfg.synth_days = static_cast<int>(to_int(value, line_no));
        } else if (qual == "data.start_price") {
            cfg.synth.start_price = to_double(value, line_no);
        } else if (qual == "data.drift") {
            cfg.synth.drift = to_double(value, line_no);
        } else if (qual == "data.volatility") {
            cfg.synth.volatility = to_double(value, line_no);
        } else if (qual == "data.jitter") {
            cfg.synth.jitter = to_double(value, line_no);
        } else if (qual == "data.volume_vol") {
            cfg.synth.volume_vol = to_double(value, line_no);
        } else if (qual == "data.base_volume") {
            cfg.synth.base_volume = to_int(value, line_no);
        } else if (qual == "data.index_start") {
            cfg.synth.index_start = to_double(value, line_no);
        } else if (qual == "data.index_drift") {
            cfg.synth.index_drift = to_double(value, line_no);
        } else if (qual == "data.index_volatility") {
            cfg.synth.index_volatility = to_double(value, line_no);
        } else if (qual == "data.index_jitter") {
            cfg.synth.index_jitter = to_double(value, line_no);
        } else if (qual == "data.drift_cycle_amp") {
            cfg.synth.drift_cycle_amp = to_double(value, line_no);
        } else if (qual == "data.drift_cycle_days") {
            cfg.synth.drift_cycle_days = static_cast<int>(to_int(value, line_no));
        } else if (qual == "data.start_date") {
            try {
                cfg.synth.start_date = parse_date(value);
            } catch (const Error&) {
                fail(line_no, "expected YYYY-MM-DD, got '" + value + "'");
            }
        } else if (qual == "data.open_minute") {
            cfg.synth.open_minute = static_cast<int>(to_int(value, line_no));
        } else if (qual == "data.close_minute") {
            cfg.synth.close_minute = static_cast<int>(to_int(value, line_no));
        } else if (qual == "data.tick_minutes") {
            cfg.synth.tick_minutes = static_cast<int>(to_int(value, line_no));
        } else if (qual == "run.case") {
            if (value == "I")
                cfg.case_id = CaseId::I;
            else if (value == "II")
                cfg.case_id = CaseId::II;
            else if (value == "III")
                cfg.case_id = CaseId::III;
            else
                fail(line_no, "case must be I, II or III");
        } else if (qual == "run.models") {
            saw_models = true;
            cfg.models.clear();
            if (value == "all") {
                cfg.models = all_models();
            } else {
                for (const std::string& name : split_list(value)) {
                    const auto tag = model_from_string(name);
                    if (!tag) fail(line_no, "unknown model '" + name + "'");
                    cfg.models.push_back(*tag);
                }
            }
        } else if (qual == "run.seed") {
            saw_seed = true;
            cfg.seed = to_u64(value, line_no);
        } else if (qual == "run.out_dir") {
            cfg.out_dir = value;
        } else if (qual == "slots.market_close") {
            cfg.slots.market_close = static_cast<int>(to_int(value, line_no));
        } else if (qual == "features.range_from_extremes") {
            cfg.features.range_from_extremes = to_bool(value, line_no);
        } else if (qual == "features.high_perc_from_extremes") {
            cfg.features.high_perc_from_extremes = to_bool(value, line_no);
        } else if (qual == "logit.max_iterations") {
            cfg.logit_max_iterations = static_cast<int>(to_int(value, line_no));
        } else if (qual == "knn.k") {
            cfg.knn_k = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cart.min_node") {
            cfg.cart_min_node = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cart.max_depth") {
            cfg.cart_max_depth = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cart.min_impurity_decrease") {
            cfg.cart_min_impurity_decrease = to_double(value, line_no);
        } else if (qual == "bag.nbag_cls") {
            cfg.bag_nbag_cls = static_cast<int>(to_int(value, line_no));
        } else if (qual == "bag.nbag_reg") {
            cfg.bag_nbag_reg = static_cast<int>(to_int(value, line_no));
        } else if (qual == "adaboost.rounds") {
            cfg.ada_rounds = static_cast<int>(to_int(value, line_no));
        } else if (qual == "adaboost.depth") {
            cfg.ada_depth = static_cast<int>(to_int(value, line_no));
        } else if (qual == "gradboost.rounds") {
            cfg.gb_rounds = static_cast<int>(to_int(value, line_no));
        } else if (qual == "gradboost.learn_rate") {
            cfg.gb_learn_rate = to_double(value, line_no);
        } else if (qual == "gradboost.depth") {
            cfg.gb_depth = static_cast<int>(to_int(value, line_no));
        } else if (qual == "rf.n_trees") {
            cfg.rf_trees = static_cast<int>(to_int(value, line_no));
        } else if (qual == "rf.mtry") {
            cfg.rf_mtry = static_cast<int>(to_int(value, line_no));
        } else if (qual == "ann.hidden") {
            cfg.ann_hidden.clear();
            for (const std::string& item : split_list(value))
                cfg.ann_hidden.push_back(static_cast<int>(to_int(item, line_no)));
            if (cfg.ann_hidden.empty()) fail(line_no, "ann.hidden needs at least one width");
        } else if (qual == "ann.learn_rate") {
            cfg.ann_learn_rate = to_double(value, line_no);
        } else if (qual == "ann.max_steps") {
            cfg.ann_max_steps = to_int(value, line_no);
        } else if (qual == "ann.grad_tol") {
            cfg.ann_grad_tol = to_double(value, line_no);
        } else if (qual == "svm.c") {
            cfg.svm_c = to_double(value, line_no);
        } else if (qual == "svm.tol") {
            cfg.svm_tol = to_double(value, line_no);
        } else if (qual == "svr.gamma") {
            cfg.svr_gamma = to_double(value, line_no);
        } else if (qual == "svr.epsilon") {
            cfg.svr_epsilon = to_double(value, line_no);
        } else if (qual == "svr.c") {
            cfg.svr_c = to_double(value, line_no);
        } else if (qual == "svr.tol") {
            cfg.svr_tol = to_double(value, line_no);
        } else if (qual == "ols.alpha") {
            cfg.ols_alpha = to_double(value, line_no);
        } else if (qual == "ols.vif_threshold") {
            cfg.ols_vif_threshold = to_double(value, line_no);
        } else if (qual == "mars.max_terms") {
            cfg.mars_max_terms = static_cast<int>(to_int(value, line_no));
        } else if (qual == "mars.rsq_delta") {
            cfg.mars_rsq_delta = to_double(value, line_no);
        } else if (qual == "mars.penalty") {
            cfg.mars_penalty = to_double(value, line_no);
        } else if (qual == "lstm.hidden") {
            cfg.lstm_hidden = static_cast<int>(to_int(value, line_no));
        } else if (qual == "lstm.lookback") {
            cfg.lstm_lookback = static_cast<int>(to_int(value, line_no));
        } else if (qual == "lstm.epochs") {
            cfg.lstm_epochs = static_cast<int>(to_int(value, line_no));
        } else if (qual == "lstm.batch") {
            cfg.lstm_batch = static_cast<int>(to_int(value, line_no));
        } else if (qual == "lstm.split_index") {
            cfg.lstm_split_index = static_cast<int>(to_int(value, line_no));
        } else if (qual == "lstm.learn_rate") {
            cfg.lstm_learn_rate = to_double(value, line_no);
        } else if (qual == "cnn.rounds") {
            cfg.cnn_rounds = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cnn.epochs") {
            cfg.cnn_epochs = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cnn.batch") {
            cfg.cnn_batch = static_cast<int>(to_int(value, line_no));
        } else if (qual == "cnn.learn_rate") {
            cfg.cnn_learn_rate = to_double(value, line_no);
        } else {
            fail(line_no, "unknown key '" + qual + "'");
        }
    }

    if (!saw_models) throw ConfigError("missing required key run.models");
    if (!saw_seed) throw ConfigError("missing required key run.seed");
    if (cfg.models.empty()) throw ConfigError("run.models must name at least one model");
    if (cfg.source == "csv" && cfg.ticks_csv.empty())
        throw ConfigError("source = csv requires data.ticks_csv");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
    auto kd = [&](const char* key, double v) { kv(key, double_to_string(v)); };
    auto ki = [&](const char* key, long long v) { kv(key, std::to_string(v)); };
    auto kb = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };

    out << "[data]\n";
    kv("source", cfg.source);
    kv("ticks_csv", cfg.ticks_csv);
    ki("synth_days", cfg.synth_days);
    kd("start_price", cfg.synth.start_price);
    kd("drift", cfg.synth.drift);
    kd("volatility", cfg.synth.volatility);
    kd("jitter", cfg.synth.jitter);
    kd("volume_vol", cfg.synth.volume_vol);
    ki("base_volume", cfg.synth.base_volume);
    kd("index_start", cfg.synth.index_start);
    kd("index_drift", cfg.synth.index_drift);
    kd("index_volatility", cfg.synth.index_volatility);
    kd("index_jitter", cfg.synth.index_jitter);
    kd("drift_cycle_amp", cfg.synth.drift_cycle_amp);
    ki("drift_cycle_days", cfg.synth.drift_cycle_days);
    kv("start_date", to_string(cfg.synth.start_date));
    ki("open_minute", cfg.synth.open_minute);
    ki("close_minute", cfg.synth.close_minute);
    ki("tick_minutes", cfg.synth.tick_minutes);

    out << "\n[run]\n";
    kv("case", cfg.case_id == CaseId::I ? "I" : cfg.case_id == CaseId::II ? "II" : "III");
    std::string models;
    for (ModelTag tag : cfg.models) {
        if (!models.empty()) models += ',';
        models += to_string(tag);
    }
    kv("models", models);
    kv("seed", std::to_string(cfg.seed));
    kv("out_dir", cfg.out_dir);

    out << "\n[slots]\n";
    ki("market_close", cfg.slots.market_close);

    out << "\n[features]\n";
    kb("range_from_extremes", cfg.features.range_from_extremes);
    kb("high_perc_from_extremes", cfg.features.high_perc_from_extremes);

    out << "\n[logit]\n";
    ki("max_iterations", cfg.logit_max_iterations);

    out << "\n[knn]\n";
    ki("k", cfg.knn_k);

    out << "\n[cart]\n";
    ki("min_node", cfg.cart_min_node);
    ki("max_depth", cfg.cart_max_depth);
    kd("min_impurity_decrease", cfg.cart_min_impurity_decrease);

    out << "\n[bag]\n";
    ki("nbag_cls", cfg.bag_nbag_cls);
    ki("nbag_reg", cfg.bag_nbag_reg);

    out << "\n[adaboost]\n";
    ki("rounds", cfg.ada_rounds);
    ki("depth", cfg.ada_depth);

    out << "\n[gradboost]\n";
    ki("rounds", cfg.gb_rounds);
    kd("learn_rate", cfg.gb_learn_rate);
    ki("depth", cfg.gb_depth);

    out << "\n[rf]\n";
    ki("n_trees", cfg.rf_trees);
    ki("mtry", cfg.rf_mtry);

    out << "\n[ann]\n";
    std::string hidden;
    for (int h : cfg.ann_hidden) {
        if (!hidden.empty()) hidden += ',';
        hidden += std::to_string(h);
    }
    kv("hidden", hidden);
    kd("learn_rate", cfg.ann_learn_rate);
    ki("max_steps", cfg.ann_max_steps);
    kd("grad_tol", cfg.ann_grad_tol);

    out << "\n[svm]\n";
    kd("c", cfg.svm_c);
    kd("tol", cfg.svm_tol);

    out << "\n[svr]\n";
    kd("gamma", cfg.svr_gamma);
    kd("epsilon", cfg.svr_epsilon);
    kd("c", cfg.svr_c);
    kd("tol", cfg.svr_tol);

    out << "\n[ols]\n";
    kd("alpha", cfg.ols_alpha);
    kd("vif_threshold", cfg.ols_vif_threshold);

    out << "\n[mars]\n";
    ki("max_terms", cfg.mars_max_terms);
    kd("rsq_delta", cfg.mars_rsq_delta);
    kd("penalty", cfg.mars_penalty);

    out << "\n[lstm]\n";
    ki("hidden", cfg.lstm_hidden);
    ki("lookback", cfg.lstm_lookback);
    ki("epochs", cfg.lstm_epochs);
    ki("batch", cfg.lstm_batch);
    ki("split_index", cfg.lstm_split_index);
    kd("learn_rate", cfg.lstm_learn_rate);

    out << "\n[cnn]\n";
    ki("rounds", cfg.cnn_rounds);
    ki("epochs", cfg.cnn_epochs);
    ki("batch", cfg.cnn_batch);
    kd("learn_rate", cfg.cnn_learn_rate);

    return out.str();
}

} // namespace slotcast
