#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slotcast/config.hpp"
#include "slotcast/errors.hpp"
#include "slotcast/market_data.hpp"
#include "slotcast/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& seed_override, const std::string& models_override,
            const std::string& case_override) {
    using namespace slotcast;
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!seed_override.empty()) cfg.seed = std::stoull(seed_override);
    if (!models_override.empty()) {
        cfg.models.clear();
        std::stringstream ss(models_override);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "all") {
                cfg.models = all_models();
                continue;
            }
            const auto tag = model_from_string(item);
            if (!tag) throw ConfigError("unknown model: " + item);
            cfg.models.push_back(*tag);
        }
    }
    if (!case_override.empty()) {
        if (case_override == "I") cfg.case_id = CaseId::I;
        else if (case_override == "II") cfg.case_id = CaseId::II;
        else if (case_override == "III") cfg.case_id = CaseId::III;
        else throw ConfigError("unknown case: " + case_override);
    }

    const ReportBundle bundle = run_experiment(cfg);
    for (const auto& [model, message] : bundle.errors)
        std::cerr << "model " << model << " failed: " << message << "\n";
    std::cout << "wrote " << cfg.out_dir << "/bundle.json (" << bundle.models.size()
              << " models, " << bundle.errors.size() << " failures)\n";
    return bundle.errors.empty() ? 0 : 2;
}

int cmd_synth(std::uint64_t seed, int days, const std::string& out_path) {
    using namespace slotcast;
    const TickSeries ticks = synth_ticks(seed, days, SynthParams{});
    if (const auto parent = std::filesystem::path(out_path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    write_ticks_csv(ticks, out);
    std::cout << "wrote " << ticks.records.size() << " ticks to " << out_path << "\n";
    return 0;
}

int cmd_report(const std::string& bundle_path, const std::string& format,
               std::string out_dir) {
    using namespace slotcast;
    std::ifstream in(bundle_path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle: " + bundle_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const ReportBundle bundle = bundle_from_json(buf.str());
    if (out_dir.empty()) {
        const auto parent = std::filesystem::path(bundle_path).parent_path();
        out_dir = parent.empty() ? "." : parent.string();
    }
    emit_reports(bundle, out_dir, format == "csv", format == "json");
    std::cout << "rendered " << format << " reports to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slot-level market forecasting workbench"};
    app.require_subcommand(1);

    std::string config_path, out_override, seed_override, models_override, case_override;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "experiment config (INI)")->required();
    run->add_option("--out", out_override, "override output directory");
    run->add_option("--seed", seed_override, "override master seed");
    run->add_option("--models", models_override, "override model list (comma separated)");
    run->add_option("--case", case_override, "override evaluation case (I|II|III)");

    std::uint64_t synth_seed = 42;
    int synth_days = 520;
    std::string synth_out = "ticks.csv";
    auto* synth = app.add_subcommand("synth", "generate a synthetic tick CSV");
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--days", synth_days, "number of trading days")->required();
    synth->add_option("--out", synth_out, "output csv path")->required();

    std::string bundle_path, format = "csv", report_out;
    auto* report = app.add_subcommand("report", "render reports from a saved bundle");
    report->add_option("--bundle", bundle_path, "bundle.json produced by run")->required();
    report->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    report->add_option("--out", report_out, "output directory (default: bundle directory)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, out_override, seed_override, models_override,
                           case_override);
        }
        if (synth->parsed()) return cmd_synth(synth_seed, synth_days, synth_out);
        if (report->parsed()) return cmd_report(bundle_path, format, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
