#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "slotcast/errors.hpp"
#include "slotcast/features.hpp"
#include "slotcast/runner.hpp"

using namespace slotcast;

namespace {

ExperimentConfig small_config(std::uint64_t seed) {
    ExperimentConfig cfg = make_default_config(seed);
    cfg.synth_days = 260;
    cfg.models = {ModelTag::Logit, ModelTag::Knn, ModelTag::Cart, ModelTag::OlsStepwise,
                  ModelTag::Mars};
    cfg.out_dir = "/tmp/slotcast_runner_test/out";
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("sample stamps round trip") {
    SampleStamp s;
    s.date = parse_date("2014-07-21");
    s.slot = SlotId::Evening;
    CHECK(stamp_to_string(s) == "2014-07-21#3");
    CHECK(stamp_from_string("2014-07-21#3") == s);
    CHECK_THROWS_AS(stamp_from_string("2014-07-21"), MalformedRow);
    CHECK_THROWS_AS(stamp_from_string("2014-07-21#4"), MalformedRow);
    CHECK_THROWS_AS(stamp_from_string("slot#1"), MalformedRow);
}

TEST_CASE("run_experiment produces a coherent bundle") {
    std::filesystem::remove_all("/tmp/slotcast_runner_test");
    const ExperimentConfig cfg = small_config(7);
    const ReportBundle bundle = run_experiment(cfg);

    CHECK(bundle.errors.empty());
    CHECK(bundle.models.size() == 5);
    CHECK(bundle.config_echo == render_config(cfg));
    CHECK(bundle.data.n_bars > 500);
    CHECK(bundle.data.train_rows > 100);
    CHECK(bundle.data.test_rows > 100);
    CHECK(bundle.data.train_target_max < bundle.data.test_input_min);

    // Classification artifacts for the classifiers.
    const ModelReport& logit = bundle.models.at("logit");
    REQUIRE(logit.cls.has_value());
    const long train_total = logit.cls->train_cm.tp + logit.cls->train_cm.fp
                           + logit.cls->train_cm.tn + logit.cls->train_cm.fn;
    CHECK(train_total == bundle.data.train_rows);
    CHECK(logit.cls->auc.has_value());
    CHECK(logit.stats.count("iterations") == 1);

    // Regression artifacts for the regressors.
    const ModelReport& ols = bundle.models.at("ols_stepwise");
    REQUIRE(ols.test_reg.has_value());
    REQUIRE(ols.ols.has_value());
    CHECK(ols.ols->vif.size() == kPredictorNames.size());
    CHECK(!ols.ols->dw_verdict.empty());
    CHECK(ols.test_reg->rmse > 0.0);

    // Emitted files.
    namespace fs = std::filesystem;
    CHECK(fs::exists(cfg.out_dir + "/bundle.json"));
    CHECK(fs::exists(cfg.out_dir + "/classification_summary.csv"));
    CHECK(fs::exists(cfg.out_dir + "/regression_summary.csv"));
    CHECK(fs::exists(cfg.out_dir + "/roc_logit.csv"));
    CHECK(fs::exists(cfg.out_dir + "/lift_cart.csv"));
    CHECK(fs::exists(cfg.out_dir + "/timings.csv"));

    const std::string cls_csv = slurp(cfg.out_dir + "/classification_summary.csv");
    CHECK(cls_csv.rfind("metric,", 0) == 0);
    CHECK(cls_csv.find("sensitivity,") != std::string::npos);
    CHECK(cls_csv.find("f1,") != std::string::npos);
    const std::string reg_csv = slurp(cfg.out_dir + "/regression_summary.csv");
    CHECK(reg_csv.find("rmse_to_mean_pct") != std::string::npos);

    // JSON round trip is byte exact.
    const std::string text = bundle_to_json(bundle);
    CHECK(bundle_to_json(bundle_from_json(text)) == text);
    CHECK(slurp(cfg.out_dir + "/bundle.json") == text);
    CHECK(text.find("runtime") == std::string::npos);
    CHECK(text.find("exec_seconds") == std::string::npos);

    // Same config, same bundle.
    const ReportBundle again = run_experiment(cfg);
    CHECK(bundle_to_json(again) == text);

    std::filesystem::remove_all("/tmp/slotcast_runner_test");
}

TEST_CASE("one failing model does not sink the run") {
    ExperimentConfig cfg = small_config(11);
    cfg.models = {ModelTag::Logit, ModelTag::Knn};
    cfg.knn_k = 0; // invalid on purpose
    cfg.out_dir = "/tmp/slotcast_runner_fail/out";
    const ReportBundle bundle = run_experiment(cfg);
    CHECK(bundle.models.count("logit") == 1);
    CHECK(bundle.models.count("knn") == 0);
    REQUIRE(bundle.errors.count("knn") == 1);
    CHECK(!bundle.errors.at("knn").empty());

    // The error report round-trips too.
    const std::string text = bundle_to_json(bundle);
    const ReportBundle back = bundle_from_json(text);
    CHECK(back.errors.at("knn") == bundle.errors.at("knn"));
    std::filesystem::remove_all("/tmp/slotcast_runner_fail");
}

TEST_CASE("config validation failures throw") {
    ExperimentConfig cfg = make_default_config(1);
    cfg.models.clear();
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    ExperimentConfig bad_source = make_default_config(1);
    bad_source.models = {ModelTag::Logit};
    bad_source.source = "oracle";
    CHECK_THROWS_AS(run_experiment(bad_source), ConfigError);

    // Too little data to derive any row fails the whole run ...
    ExperimentConfig starved = make_default_config(1);
    starved.models = {ModelTag::Logit};
    starved.synth_days = 1;
    starved.out_dir = "/tmp/slotcast_runner_starved";
    CHECK_THROWS_AS(run_experiment(starved), Error);

    // ... while a degenerate target is just a per-model failure.
    starved.synth_days = 2;
    const ReportBundle crumbs = run_experiment(starved);
    CHECK(crumbs.models.empty());
    CHECK(crumbs.errors.count("logit") == 1);
    std::filesystem::remove_all("/tmp/slotcast_runner_starved");
}

TEST_CASE("defaults ledger names the pinned settings") {
    ExperimentConfig cfg = small_config(3);
    cfg.models = {ModelTag::Logit};
    cfg.out_dir = "/tmp/slotcast_runner_ledger/out";
    const ReportBundle bundle = run_experiment(cfg);
    CHECK(!bundle.defaults_ledger.empty());
    CHECK(bundle.defaults_ledger.count("logit.ridge") == 1);
    std::filesystem::remove_all("/tmp/slotcast_runner_ledger");
}
