#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slotcast/config.hpp"
#include "slotcast/deepnets.hpp"
#include "slotcast/evalsuite.hpp"
#include "slotcast/features.hpp"

namespace slotcast {

struct ClsReport {
    ConfusionMatrix train_cm, test_cm;
    ClsMetrics train, test;
    std::optional<double> auc;              // test split
    std::optional<RocCurve> roc;            // absent when the test split is single-class
    std::vector<LiftPoint> lift;            // empty when unavailable
};

struct OlsDiag {
    std::map<std::string, double> vif;      // before any drop
    std::vector<std::string> dropped;       // removed by the VIF loop, in drop order
    std::vector<std::string> selected;      // surviving stepwise predictors
    std::map<std::string, double> coefficients; // includes "(intercept)"
    std::optional<double> bp_statistic, bp_p_value;
    double dw_statistic = 0.0;
    std::string dw_verdict;                 // positive | none | negative
};

struct LstmReport {
    double rmse_train = 0.0, rmse_test = 0.0;
    std::optional<double> pearson_train, pearson_test;
    std::vector<double> epoch_train_loss, epoch_val_loss;
};

struct ModelReport {
    ModelTag tag = ModelTag::Logit;
    std::optional<ClsReport> cls;
    std::optional<RegMetrics> train_reg, test_reg;
    std::optional<OlsDiag> ols;
    std::optional<LstmReport> lstm;
    std::optional<MultiRoundReport> rounds;
    std::map<std::string, double> stats; // model-specific scalars (iterations, OOB, ...)
    double runtime_seconds = 0.0;        // sidecar only, never serialized
};

struct DatasetInfo {
    long n_bars = 0;
    long train_rows = 0, test_rows = 0;
    int dropped_rows = 0;
    SampleStamp train_input_min, train_target_max;
    SampleStamp test_input_min, test_target_max;
};

struct ReportBundle {
    std::string config_echo; // render_config of the effective config
    DatasetInfo data;
    std::map<std::string, ModelReport> models; // keyed by canonical tag name
    std::map<std::string, std::string> errors; // failed models, keyed likewise
    std::map<std::string, std::string> defaults_ledger;
};

std::string stamp_to_string(const SampleStamp& stamp); // "YYYY-MM-DD#slot"
SampleStamp stamp_from_string(const std::string& text);

// Full pipeline: data -> slots -> case split -> every requested model ->
// report emission into config.out_dir (bundle.json, summary and curve CSVs,
// timings sidecar). One model's failure lands in `errors` without aborting
// the rest. Deterministic for a fixed config.
ReportBundle run_experiment(const ExperimentConfig& config);

// Serialization is byte-deterministic: keys sorted, shortest round-trip
// numbers, runtimes and wall-clock values excluded.
std::string bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const std::string& text);

// Writes bundle.json (json) and/or the CSV table set (csv) into `dir`.
void emit_reports(const ReportBundle& bundle, const std::string& dir, bool csv, bool json);

} // namespace slotcast
