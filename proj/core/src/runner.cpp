#include "slotcast/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"
#include "slotcast/kernel_models.hpp"
#include "slotcast/linmod.hpp"
#include "slotcast/mars.hpp"
#include "slotcast/rng.hpp"
#include "slotcast/shallow_nn.hpp"
#include "slotcast/trees.hpp"

namespace slotcast {

namespace {

using json = nlohmann::json;

json jnum(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0.0 ? "inf" : "-inf";
}

double read_num(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("unexpected numeric string '" + s + "' in bundle");
    }
    return j.get<double>();
}

void put_opt(json& obj, const char* key, const std::optional<double>& v) {
    if (v) obj[key] = jnum(*v);
}

std::optional<double> get_opt(const json& obj, const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    return read_num(obj.at(key));
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
}

} // namespace

std::string stamp_to_string(const SampleStamp& stamp) {
    return to_string(stamp.date) + "#" + std::to_string(static_cast<int>(stamp.slot));
}

SampleStamp stamp_from_string(const std::string& text) {
    const std::size_t hash = text.find('#');
    if (hash == std::string::npos) throw MalformedRow("bad stamp: " + text);
    SampleStamp s;
    s.date = parse_date(text.substr(0, hash));
    const std::string slot = text.substr(hash + 1);
    if (slot != "1" && slot != "2" && slot != "3") throw MalformedRow("bad slot in stamp: " + text);
    s.slot = static_cast<SlotId>(slot[0] - '0');
    return s;
}

// ----------------------------------------------------------- model fitting

namespace {

struct RunContext {
    const ExperimentConfig& cfg;
    const TickSeries& ticks;
    const std::vector<SlotBar>& bars;
    const Dataset& train_ds;
    const Dataset& test_ds;
    Eigen::MatrixXd x_train, x_test;     // raw predictor space
    Eigen::MatrixXd x_train_s, x_test_s; // min-max scaled on the train split
    Eigen::VectorXd y_train_reg, y_test_reg;
    Eigen::VectorXd y_train_cls_d, y_test_cls_d;
    std::vector<int> y_train_cls, y_test_cls;
    std::vector<std::string> names;
    Date cnn_cutoff;
};

ClsReport make_cls_report(const std::vector<int>& pred_train, const std::vector<int>& pred_test,
                          const Eigen::VectorXd& score_test, const RunContext& ctx) {
    ClsReport r;
    r.train_cm = ConfusionMatrix::from_labels(pred_train, ctx.y_train_cls);
    r.test_cm = ConfusionMatrix::from_labels(pred_test, ctx.y_test_cls);
    r.train = cls_metrics(r.train_cm);
    r.test = cls_metrics(r.test_cm);
    try {
        RocCurve roc = roc_auc(as_span(score_test), ctx.y_test_cls);
        r.auc = roc.auc;
        r.roc = std::move(roc);
    } catch (const SingleClass&) {
    }
    try {
        r.lift = lift_curve(as_span(score_test), ctx.y_test_cls);
    } catch (const SingleClass&) {
    }
    return r;
}

RegMetrics make_reg(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual) {
    return reg_metrics(as_span(pred), as_span(actual));
}

CartControls cart_controls(const ExperimentConfig& cfg) {
    return {cfg.cart_min_node, cfg.cart_max_depth, cfg.cart_min_impurity_decrease};
}

ModelReport fit_one(ModelTag tag, const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const std::uint64_t seed_m = mix_seed(cfg.seed, static_cast<std::uint64_t>(tag));
    ModelReport rep;
    rep.tag = tag;

    switch (tag) {
    case ModelTag::Logit: {
        const LogitFit fit = fit_logistic(ctx.x_train, ctx.y_train_cls, cfg.logit_max_iterations);
        rep.cls = make_cls_report(predict_logistic(fit, ctx.x_train),
                                  predict_logistic(fit, ctx.x_test),
                                  predict_logistic_prob(fit, ctx.x_test), ctx);
        rep.stats["iterations"] = fit.iterations;
        rep.stats["converged"] = fit.converged ? 1.0 : 0.0;
        rep.stats["separation_flagged"] = fit.separation_flagged ? 1.0 : 0.0;
        rep.stats["coef.(intercept)"] = fit.coefficients[0];
        for (std::size_t j = 0; j < ctx.names.size(); ++j)
            rep.stats["coef." + ctx.names[j]] = fit.coefficients[static_cast<long>(j) + 1];
        break;
    }
    case ModelTag::Knn: {
        const KnnModel model = knn_fit(ctx.x_train, ctx.y_train_cls, cfg.knn_k);
        rep.cls = make_cls_report(knn_classify(model, ctx.x_train), knn_classify(model, ctx.x_test),
                                  knn_vote_fraction(model, ctx.x_test), ctx);
        rep.stats["k"] = cfg.knn_k;
        break;
    }
    case ModelTag::Cart: {
        const CartControls cc = cart_controls(cfg);
        const CartTree tc =
            CartTree::fit(ctx.x_train, ctx.y_train_cls_d, TreeTask::Classification, cc);
        rep.cls = make_cls_report(tc.predict_classes(ctx.x_train), tc.predict_classes(ctx.x_test),
                                  tc.predict_values(ctx.x_test), ctx);
        rep.stats["cls_leaves"] = tc.leaf_count();
        rep.stats["cls_depth"] = tc.depth();
        const CartTree tr = CartTree::fit(ctx.x_train, ctx.y_train_reg, TreeTask::Regression, cc);
        rep.train_reg = make_reg(tr.predict_values(ctx.x_train), ctx.y_train_reg);
        rep.test_reg = make_reg(tr.predict_values(ctx.x_test), ctx.y_test_reg);
        rep.stats["reg_leaves"] = tr.leaf_count();
        rep.stats["reg_depth"] = tr.depth();
        break;
    }
    case ModelTag::Bag: {
        const CartControls cc = cart_controls(cfg);
        const Ensemble bc = fit_bagging(ctx.x_train, ctx.y_train_cls_d, TreeTask::Classification,
                                        cfg.bag_nbag_cls, seed_m, cc);
        rep.cls = make_cls_report(bc.predict_classes(ctx.x_train), bc.predict_classes(ctx.x_test),
                                  bc.predict_values(ctx.x_test), ctx);
        const Ensemble br = fit_bagging(ctx.x_train, ctx.y_train_reg, TreeTask::Regression,
                                        cfg.bag_nbag_reg, mix_seed(seed_m, 1), cc);
        rep.train_reg = make_reg(br.predict_values(ctx.x_train), ctx.y_train_reg);
        rep.test_reg = make_reg(br.predict_values(ctx.x_test), ctx.y_test_reg);
        rep.stats["nbag_cls"] = cfg.bag_nbag_cls;
        rep.stats["nbag_reg"] = cfg.bag_nbag_reg;
        break;
    }
    case ModelTag::Adaboost: {
        const Ensemble ada =
            fit_adaboost(ctx.x_train, ctx.y_train_cls, cfg.ada_rounds,
                         CartControls{cfg.cart_min_node, cfg.ada_depth,
                                      cfg.cart_min_impurity_decrease});
        rep.cls = make_cls_report(ada.predict_classes(ctx.x_train), ada.predict_classes(ctx.x_test),
                                  ada.predict_values(ctx.x_test), ctx);
        rep.stats["members"] = static_cast<double>(ada.members.size());
        rep.stats["degenerate"] = ada.degenerate ? 1.0 : 0.0;
        break;
    }
    case ModelTag::Gradboost: {
        const Ensemble gb = fit_gradboost(ctx.x_train, ctx.y_train_reg, cfg.gb_rounds,
                                          cfg.gb_learn_rate,
                                          CartControls{cfg.cart_min_node, cfg.gb_depth,
                                                       cfg.cart_min_impurity_decrease});
        rep.train_reg = make_reg(gb.predict_values(ctx.x_train), ctx.y_train_reg);
        rep.test_reg = make_reg(gb.predict_values(ctx.x_test), ctx.y_test_reg);
        rep.stats["rounds"] = cfg.gb_rounds;
        break;
    }
    case ModelTag::Rf: {
        const CartControls cc = cart_controls(cfg);
        const Ensemble fc = fit_random_forest(ctx.x_train, ctx.y_train_cls_d,
                                              TreeTask::Classification, cfg.rf_trees, cfg.rf_mtry,
                                              seed_m, cc);
        rep.cls = make_cls_report(fc.predict_classes(ctx.x_train), fc.predict_classes(ctx.x_test),
                                  fc.predict_values(ctx.x_test), ctx);
        if (std::isfinite(fc.oob_error_pct)) rep.stats["oob_error_pct"] = fc.oob_error_pct;
        const Ensemble fr = fit_random_forest(ctx.x_train, ctx.y_train_reg, TreeTask::Regression,
                                              cfg.rf_trees, cfg.rf_mtry, mix_seed(seed_m, 1), cc);
        rep.train_reg = make_reg(fr.predict_values(ctx.x_train), ctx.y_train_reg);
        rep.test_reg = make_reg(fr.predict_values(ctx.x_test), ctx.y_test_reg);
        if (std::isfinite(fr.oob_mse)) rep.stats["oob_mse"] = fr.oob_mse;
        break;
    }
    case ModelTag::Ann: {
        MlpSpec spec;
        spec.hidden = cfg.ann_hidden;
        spec.learn_rate = cfg.ann_learn_rate;
        spec.max_steps = cfg.ann_max_steps;
        spec.grad_tol = cfg.ann_grad_tol;
        spec.classify = true;
        spec.seed = seed_m;
        const MlpModel mc = mlp_fit(ctx.x_train_s, ctx.y_train_cls_d, spec);
        rep.cls = make_cls_report(mc.classify(ctx.x_train_s), mc.classify(ctx.x_test_s),
                                  mc.predict(ctx.x_test_s), ctx);
        rep.stats["cls_steps"] = static_cast<double>(mc.steps);
        rep.stats["cls_final_loss"] = mc.final_loss;
        rep.stats["cls_converged"] = mc.converged ? 1.0 : 0.0;
        spec.classify = false;
        spec.seed = mix_seed(seed_m, 1);
        const MlpModel mr = mlp_fit(ctx.x_train_s, ctx.y_train_reg, spec);
        rep.train_reg = make_reg(mr.predict(ctx.x_train_s), ctx.y_train_reg);
        rep.test_reg = make_reg(mr.predict(ctx.x_test_s), ctx.y_test_reg);
        rep.stats["reg_steps"] = static_cast<double>(mr.steps);
        rep.stats["reg_final_loss"] = mr.final_loss;
        rep.stats["reg_converged"] = mr.converged ? 1.0 : 0.0;
        break;
    }
    case ModelTag::Svm: {
        const SvmModel svm = fit_svm_classifier(ctx.x_train_s, ctx.y_train_cls, cfg.svm_c,
                                                cfg.svm_tol);
        rep.cls = make_cls_report(svm_predict(svm, ctx.x_train_s), svm_predict(svm, ctx.x_test_s),
                                  svm_decision(svm, ctx.x_test_s), ctx);
        rep.stats["sv_count"] = svm.sv_count;
        rep.stats["converged"] = svm.converged ? 1.0 : 0.0;
        rep.stats["bias"] = svm.bias;
        break;
    }
    case ModelTag::Svr: {
        const SvmModel svr = fit_svr(ctx.x_train_s, ctx.y_train_reg, cfg.svr_gamma,
                                     cfg.svr_epsilon, cfg.svr_c, cfg.svr_tol);
        rep.train_reg = make_reg(svr_predict(svr, ctx.x_train_s), ctx.y_train_reg);
        rep.test_reg = make_reg(svr_predict(svr, ctx.x_test_s), ctx.y_test_reg);
        rep.stats["sv_count"] = svr.sv_count;
        rep.stats["converged"] = svr.converged ? 1.0 : 0.0;
        rep.stats["bias"] = svr.bias;
        break;
    }
    case ModelTag::OlsStepwise: {
        OlsDiag diag;
        const Eigen::VectorXd v = vif(ctx.x_train);
        for (std::size_t j = 0; j < ctx.names.size(); ++j)
            diag.vif[ctx.names[j]] = v[static_cast<long>(j)];
        const CollinearityDrop drop =
            drop_collinear(ctx.x_train, ctx.names, cfg.ols_vif_threshold);
        for (const auto& [name, value] : drop.removed) diag.dropped.push_back(name);

        std::vector<std::string> kept_names;
        Eigen::MatrixXd xk_train(ctx.x_train.rows(), static_cast<long>(drop.kept.size()));
        for (std::size_t j = 0; j < drop.kept.size(); ++j) {
            kept_names.push_back(ctx.names[static_cast<std::size_t>(drop.kept[j])]);
            xk_train.col(static_cast<long>(j)) = ctx.x_train.col(drop.kept[j]);
        }
        const OlsFit fit =
            stepwise_select(xk_train, ctx.y_train_reg, kept_names, StepDirection::Both,
                            cfg.ols_alpha);
        diag.selected = fit.names;
        diag.coefficients["(intercept)"] = fit.coefficients[0];
        for (std::size_t j = 0; j < fit.names.size(); ++j)
            diag.coefficients[fit.names[j]] = fit.coefficients[static_cast<long>(j) + 1];

        // Column subsets for prediction and diagnostics.
        auto select_cols = [&](const Eigen::MatrixXd& x) {
            Eigen::MatrixXd out(x.rows(), static_cast<long>(fit.names.size()));
            for (std::size_t j = 0; j < fit.names.size(); ++j) {
                long src = -1;
                for (std::size_t k = 0; k < ctx.names.size(); ++k)
                    if (ctx.names[k] == fit.names[j]) src = static_cast<long>(k);
                out.col(static_cast<long>(j)) = x.col(src);
            }
            return out;
        };
        const Eigen::MatrixXd xs_train = select_cols(ctx.x_train);
        const Eigen::MatrixXd xs_test = select_cols(ctx.x_test);
        rep.train_reg = make_reg(fit.fitted, ctx.y_train_reg);
        rep.test_reg = make_reg(fit.predict(xs_test), ctx.y_test_reg);

        if (!fit.names.empty()) {
            const BreuschPagan bp = breusch_pagan(fit.residuals, xs_train);
            diag.bp_statistic = bp.statistic;
            diag.bp_p_value = bp.p_value;
        }
        const DurbinWatson dw = durbin_watson(fit.residuals);
        diag.dw_statistic = dw.statistic;
        diag.dw_verdict = dw.verdict == DwVerdict::PositiveAutocorrelation ? "positive"
                          : dw.verdict == DwVerdict::NegativeAutocorrelation ? "negative"
                                                                             : "none";
        rep.ols = std::move(diag);
        rep.stats["r2"] = fit.r2;
        rep.stats["adj_r2"] = fit.adj_r2;
        rep.stats["aic"] = fit.aic;
        rep.stats["f_stat"] = fit.f_stat;
        rep.stats["f_p_value"] = fit.f_p_value;
        break;
    }
    case ModelTag::Mars: {
        const MarsModel model =
            fit_mars(ctx.x_train, ctx.y_train_reg,
                     MarsControls{cfg.mars_max_terms, cfg.mars_rsq_delta, cfg.mars_penalty});
        rep.train_reg = make_reg(model.predict(ctx.x_train), ctx.y_train_reg);
        rep.test_reg = make_reg(model.predict(ctx.x_test), ctx.y_test_reg);
        rep.stats["terms"] = static_cast<double>(model.terms.size());
        rep.stats["forward_terms"] = model.forward_terms;
        rep.stats["pruned"] = model.pruned;
        rep.stats["r2"] = model.r2;
        rep.stats["gcv"] = model.gcv;
        rep.stats["grsq"] = model.grsq;
        break;
    }
    case ModelTag::Lstm: {
        LstmSpec spec;
        spec.hidden = cfg.lstm_hidden;
        spec.lookback = cfg.lstm_lookback;
        spec.epochs = cfg.lstm_epochs;
        spec.batch = cfg.lstm_batch;
        spec.split_index = cfg.lstm_split_index;
        spec.adam.learn_rate = cfg.lstm_learn_rate;
        spec.seed = seed_m;
        const LstmOutcome out = lstm_fit_eval(to_sequence_records(ctx.bars), spec);
        LstmReport lr;
        lr.rmse_train = out.rmse_train;
        lr.rmse_test = out.rmse_test;
        lr.pearson_train = out.pearson_train;
        lr.pearson_test = out.pearson_test;
        lr.epoch_train_loss = out.epoch_train_loss;
        lr.epoch_val_loss = out.epoch_val_loss;
        rep.lstm = std::move(lr);
        rep.stats["n_train"] = static_cast<double>(out.pred_train.size());
        rep.stats["n_test"] = static_cast<double>(out.pred_test.size());
        break;
    }
    case ModelTag::CnnM1:
    case ModelTag::CnnM2:
    case ModelTag::CnnM3:
    case ModelTag::CnnM4: {
        const CnnVariant variant = tag == ModelTag::CnnM1   ? CnnVariant::M1
                                   : tag == ModelTag::CnnM2 ? CnnVariant::M2
                                   : tag == ModelTag::CnnM3 ? CnnVariant::M3
                                                            : CnnVariant::M4;
        CnnSpec spec = make_cnn_spec(variant, seed_m);
        spec.rounds = cfg.cnn_rounds;
        if (cfg.cnn_epochs > 0) spec.epochs = cfg.cnn_epochs;
        if (cfg.cnn_batch > 0) spec.batch = cfg.cnn_batch;
        spec.adam.learn_rate = cfg.cnn_learn_rate;
        rep.rounds = cnn_fit_eval(to_daily_bars(ctx.ticks), ctx.cnn_cutoff, spec);
        rep.stats["train_frames"] = static_cast<double>(rep.rounds->train_stamps.size());
        rep.stats["eval_weeks"] = static_cast<double>(rep.rounds->eval_stamps.size());
        break;
    }
    }
    return rep;
}

std::map<std::string, std::string> build_defaults_ledger(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> led;
    auto d = [&](const std::string& key, double v) { led[key] = double_to_string(v); };
    auto i = [&](const std::string& key, long long v) { led[key] = std::to_string(v); };
    i("adaboost.depth", cfg.ada_depth);
    i("adaboost.rounds", cfg.ada_rounds);
    {
        std::string h;
        for (int w : cfg.ann_hidden) {
            if (!h.empty()) h += ',';
            h += std::to_string(w);
        }
        led["ann.hidden"] = h;
    }
    d("ann.grad_tol", cfg.ann_grad_tol);
    d("ann.init_range", 0.5);
    d("ann.learn_rate", cfg.ann_learn_rate);
    i("ann.max_steps", cfg.ann_max_steps);
    i("bag.nbag_cls", cfg.bag_nbag_cls);
    i("bag.nbag_reg", cfg.bag_nbag_reg);
    i("cart.max_depth", cfg.cart_max_depth);
    d("cart.min_impurity_decrease", cfg.cart_min_impurity_decrease);
    i("cart.min_node", cfg.cart_min_node);
    d("cnn.adam_learn_rate", cfg.cnn_learn_rate);
    i("cnn.rounds", cfg.cnn_rounds);
    led["cnn.dense_widths"] = "m1/m2:10 m3/m4:100";
    i("gradboost.depth", cfg.gb_depth);
    d("gradboost.learn_rate", cfg.gb_learn_rate);
    i("gradboost.rounds", cfg.gb_rounds);
    i("knn.k", cfg.knn_k);
    i("logit.max_iterations", cfg.logit_max_iterations);
    d("logit.ridge", 1e-10);
    d("logit.threshold", 0.5);
    i("lstm.batch", cfg.lstm_batch);
    i("lstm.epochs", cfg.lstm_epochs);
    i("lstm.hidden", cfg.lstm_hidden);
    d("lstm.learn_rate", cfg.lstm_learn_rate);
    i("lstm.lookback", cfg.lstm_lookback);
    i("lstm.split_index", cfg.lstm_split_index);
    i("mars.max_terms", cfg.mars_max_terms);
    d("mars.penalty", cfg.mars_penalty);
    d("mars.rsq_delta", cfg.mars_rsq_delta);
    d("ols.alpha", cfg.ols_alpha);
    d("ols.vif_threshold", cfg.ols_vif_threshold);
    i("rf.mtry", cfg.rf_mtry);
    i("rf.n_trees", cfg.rf_trees);
    d("svm.c", cfg.svm_c);
    d("svm.tol", cfg.svm_tol);
    d("svr.c", cfg.svr_c);
    d("svr.epsilon", cfg.svr_epsilon);
    d("svr.gamma", cfg.svr_gamma);
    d("svr.tol", cfg.svr_tol);
    return led;
}

} // namespace

// ----------------------------------------------------------- orchestration

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    if (cfg.models.empty()) throw ConfigError("run.models must name at least one model");

    TickSeries ticks;
    if (cfg.source == "synth") {
        ticks = synth_ticks(cfg.seed, cfg.synth_days, cfg.synth);
    } else if (cfg.source == "csv") {
        std::ifstream in(cfg.ticks_csv, std::ios::binary);
        if (!in) throw IoError("cannot open ticks csv: " + cfg.ticks_csv);
        ticks = parse_ticks(in);
    } else {
        throw ConfigError("unknown data source: " + cfg.source);
    }
    validate(ticks);

    const std::vector<SlotBar> bars = aggregate_slots(ticks, cfg.slots);
    auto [train_ds, test_ds] = case_split(bars, cfg.case_id, cfg.features);
    if (train_ds.rows.empty() || test_ds.rows.empty())
        throw TooFewRows("case split produced an empty block");

    RunContext ctx{cfg, ticks, bars, train_ds, test_ds};
    ctx.x_train = predictor_matrix(train_ds);
    ctx.x_test = predictor_matrix(test_ds);
    ScaleParams scale;
    ctx.x_train_s = fit_apply_min_max(ctx.x_train, ctx.x_train, scale);
    ctx.x_test_s = apply_min_max(ctx.x_test, scale);
    const long n_train = static_cast<long>(train_ds.size());
    const long n_test = static_cast<long>(test_ds.size());
    ctx.y_train_reg = Eigen::Map<const Eigen::VectorXd>(train_ds.target_reg.data(), n_train);
    ctx.y_test_reg = Eigen::Map<const Eigen::VectorXd>(test_ds.target_reg.data(), n_test);
    ctx.y_train_cls = train_ds.target_cls;
    ctx.y_test_cls = test_ds.target_cls;
    ctx.y_train_cls_d.resize(n_train);
    for (long i = 0; i < n_train; ++i) ctx.y_train_cls_d[i] = train_ds.target_cls[static_cast<std::size_t>(i)];
    ctx.y_test_cls_d.resize(n_test);
    for (long i = 0; i < n_test; ++i) ctx.y_test_cls_d[i] = test_ds.target_cls[static_cast<std::size_t>(i)];
    ctx.names.assign(kPredictorNames.begin(), kPredictorNames.end());
    ctx.cnn_cutoff = train_ds.target_at.back().date;

    ReportBundle bundle;
    bundle.config_echo = render_config(cfg);
    bundle.defaults_ledger = build_defaults_ledger(cfg);
    bundle.data.n_bars = static_cast<long>(bars.size());
    bundle.data.train_rows = n_train;
    bundle.data.test_rows = n_test;
    bundle.data.dropped_rows = train_ds.dropped_degenerate + test_ds.dropped_degenerate;
    bundle.data.train_input_min = train_ds.input_end.front();
    bundle.data.train_target_max = train_ds.target_at.back();
    bundle.data.test_input_min = test_ds.input_end.front();
    bundle.data.test_target_max = test_ds.target_at.back();

    for (ModelTag tag : cfg.models) {
        const std::string name = to_string(tag);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ModelReport rep = fit_one(tag, ctx);
            rep.runtime_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            bundle.models[name] = std::move(rep);
        } catch (const std::exception& e) {
            bundle.errors[name] = e.what();
        }
    }

    emit_reports(bundle, cfg.out_dir, true, true);

    // Wall-clock sidecar, deliberately outside the bundle.
    std::ofstream timings(std::filesystem::path(cfg.out_dir) / "timings.csv",
                          std::ios::binary);
    if (timings) {
        timings << "model,seconds\n";
        for (const auto& [name, rep] : bundle.models)
            timings << name << ',' << double_to_string(rep.runtime_seconds) << '\n';
    }
    return bundle;
}

// ----------------------------------------------------------- serialization

namespace {

json cm_side_to_json(const ConfusionMatrix& cm, const ClsMetrics& m) {
    json j;
    j["tp"] = cm.tp;
    j["fp"] = cm.fp;
    j["tn"] = cm.tn;
    j["fn"] = cm.fn;
    put_opt(j, "sensitivity", m.sensitivity);
    put_opt(j, "specificity", m.specificity);
    put_opt(j, "ppv", m.ppv);
    put_opt(j, "npv", m.npv);
    put_opt(j, "ca", m.ca);
    put_opt(j, "f1", m.f1);
    return j;
}

void cm_side_from_json(const json& j, ConfusionMatrix& cm, ClsMetrics& m) {
    cm.tp = j.at("tp").get<long>();
    cm.fp = j.at("fp").get<long>();
    cm.tn = j.at("tn").get<long>();
    cm.fn = j.at("fn").get<long>();
    m.sensitivity = get_opt(j, "sensitivity");
    m.specificity = get_opt(j, "specificity");
    m.ppv = get_opt(j, "ppv");
    m.npv = get_opt(j, "npv");
    m.ca = get_opt(j, "ca");
    m.f1 = get_opt(j, "f1");
}

json reg_to_json(const RegMetrics& m) {
    json j;
    j["rmse"] = jnum(m.rmse);
    j["mean_abs_actual"] = jnum(m.mean_abs_actual);
    put_opt(j, "rmse_ratio_pct", m.rmse_ratio_pct);
    put_opt(j, "pearson_r", m.pearson_r);
    put_opt(j, "r_t_stat", m.r_t_stat);
    j["mismatch_count"] = m.mismatch_count;
    j["mismatch_pct"] = jnum(m.mismatch_pct);
    return j;
}

RegMetrics reg_from_json(const json& j) {
    RegMetrics m;
    m.rmse = read_num(j.at("rmse"));
    m.mean_abs_actual = read_num(j.at("mean_abs_actual"));
    m.rmse_ratio_pct = get_opt(j, "rmse_ratio_pct");
    m.pearson_r = get_opt(j, "pearson_r");
    m.r_t_stat = get_opt(j, "r_t_stat");
    m.mismatch_count = j.at("mismatch_count").get<long>();
    m.mismatch_pct = read_num(j.at("mismatch_pct"));
    return m;
}

json round_cols_to_json(const CnnRound& c) {
    json j;
    j["overall"] = jnum(c.overall_rmse);
    json days = json::array();
    for (double v : c.day_rmse) days.push_back(jnum(v));
    j["days"] = days;
    return j;
}

CnnRound round_cols_from_json(const json& j) {
    CnnRound c;
    c.overall_rmse = read_num(j.at("overall"));
    const json& days = j.at("days");
    for (int k = 0; k < 5; ++k) c.day_rmse[static_cast<std::size_t>(k)] = read_num(days.at(k));
    return c;
}

json model_to_json(const ModelReport& rep) {
    json j;
    if (rep.cls) {
        json c;
        c["train"] = cm_side_to_json(rep.cls->train_cm, rep.cls->train);
        c["test"] = cm_side_to_json(rep.cls->test_cm, rep.cls->test);
        if (rep.cls->auc) c["auc"] = jnum(*rep.cls->auc);
        if (rep.cls->roc) {
            json pts = json::array();
            for (const RocPoint& p : rep.cls->roc->points)
                pts.push_back(json::array({jnum(p.fpr), jnum(p.tpr)}));
            c["roc"] = pts;
        }
        if (!rep.cls->lift.empty()) {
            json pts = json::array();
            for (const LiftPoint& p : rep.cls->lift)
                pts.push_back(json::array({jnum(p.depth), jnum(p.lift)}));
            c["lift"] = pts;
        }
        j["classification"] = c;
    }
    if (rep.train_reg || rep.test_reg) {
        json r;
        if (rep.train_reg) r["train"] = reg_to_json(*rep.train_reg);
        if (rep.test_reg) r["test"] = reg_to_json(*rep.test_reg);
        j["regression"] = r;
    }
    if (rep.ols) {
        json d;
        json vifs;
        for (const auto& [name, value] : rep.ols->vif) vifs[name] = jnum(value);
        d["vif"] = vifs;
        d["dropped"] = rep.ols->dropped;
        d["selected"] = rep.ols->selected;
        json coefs;
        for (const auto& [name, value] : rep.ols->coefficients) coefs[name] = jnum(value);
        d["coefficients"] = coefs;
        put_opt(d, "bp_statistic", rep.ols->bp_statistic);
        put_opt(d, "bp_p_value", rep.ols->bp_p_value);
        d["dw_statistic"] = jnum(rep.ols->dw_statistic);
        d["dw_verdict"] = rep.ols->dw_verdict;
        j["diagnostics"] = d;
    }
    if (rep.lstm) {
        json s;
        s["rmse_train"] = jnum(rep.lstm->rmse_train);
        s["rmse_test"] = jnum(rep.lstm->rmse_test);
        put_opt(s, "pearson_train", rep.lstm->pearson_train);
        put_opt(s, "pearson_test", rep.lstm->pearson_test);
        json tl = json::array(), vl = json::array();
        for (double v : rep.lstm->epoch_train_loss) tl.push_back(jnum(v));
        for (double v : rep.lstm->epoch_val_loss) vl.push_back(jnum(v));
        s["epoch_train_loss"] = tl;
        s["epoch_val_loss"] = vl;
        j["sequence"] = s;
    }
    if (rep.rounds) {
        json r;
        r["mean_abs_actual"] = jnum(rep.rounds->mean_abs_actual);
        json per = json::array();
        for (const CnnRound& c : rep.rounds->rounds) {
            json e = round_cols_to_json(c);
            e["round"] = c.round;
            per.push_back(e);
        }
        r["per_round"] = per;
        r["mean"] = round_cols_to_json(rep.rounds->mean);
        r["sd"] = round_cols_to_json(rep.rounds->sd);
        r["min"] = round_cols_to_json(rep.rounds->min);
        r["max"] = round_cols_to_json(rep.rounds->max);
        json ratio = json::array();
        for (double v : rep.rounds->rmse_to_mean) ratio.push_back(jnum(v));
        r["ratio"] = ratio;
        j["rounds"] = r;
    }
    if (!rep.stats.empty()) {
        json s;
        for (const auto& [key, value] : rep.stats) s[key] = jnum(value);
        j["stats"] = s;
    }
    return j;
}

ModelReport model_from_json(ModelTag tag, const json& j) {
    ModelReport rep;
    rep.tag = tag;
    if (j.contains("classification")) {
        const json& c = j.at("classification");
        ClsReport cr;
        cm_side_from_json(c.at("train"), cr.train_cm, cr.train);
        cm_side_from_json(c.at("test"), cr.test_cm, cr.test);
        if (c.contains("auc")) cr.auc = read_num(c.at("auc"));
        if (c.contains("roc")) {
            RocCurve roc;
            for (const json& p : c.at("roc"))
                roc.points.push_back({read_num(p.at(0)), read_num(p.at(1))});
            roc.auc = cr.auc.value_or(0.0);
            cr.roc = std::move(roc);
        }
        if (c.contains("lift"))
            for (const json& p : c.at("lift"))
                cr.lift.push_back({read_num(p.at(0)), read_num(p.at(1))});
        rep.cls = std::move(cr);
    }
    if (j.contains("regression")) {
        const json& r = j.at("regression");
        if (r.contains("train")) rep.train_reg = reg_from_json(r.at("train"));
        if (r.contains("test")) rep.test_reg = reg_from_json(r.at("test"));
    }
    if (j.contains("diagnostics")) {
        const json& d = j.at("diagnostics");
        OlsDiag diag;
        for (const auto& [name, value] : d.at("vif").items()) diag.vif[name] = read_num(value);
        diag.dropped = d.at("dropped").get<std::vector<std::string>>();
        diag.selected = d.at("selected").get<std::vector<std::string>>();
        for (const auto& [name, value] : d.at("coefficients").items())
            diag.coefficients[name] = read_num(value);
        diag.bp_statistic = get_opt(d, "bp_statistic");
        diag.bp_p_value = get_opt(d, "bp_p_value");
        diag.dw_statistic = read_num(d.at("dw_statistic"));
        diag.dw_verdict = d.at("dw_verdict").get<std::string>();
        rep.ols = std::move(diag);
    }
    if (j.contains("sequence")) {
        const json& s = j.at("sequence");
        LstmReport lr;
        lr.rmse_train = read_num(s.at("rmse_train"));
        lr.rmse_test = read_num(s.at("rmse_test"));
        lr.pearson_train = get_opt(s, "pearson_train");
        lr.pearson_test = get_opt(s, "pearson_test");
        for (const json& v : s.at("epoch_train_loss")) lr.epoch_train_loss.push_back(read_num(v));
        for (const json& v : s.at("epoch_val_loss")) lr.epoch_val_loss.push_back(read_num(v));
        rep.lstm = std::move(lr);
    }
    if (j.contains("rounds")) {
        const json& r = j.at("rounds");
        MultiRoundReport mr;
        mr.mean_abs_actual = read_num(r.at("mean_abs_actual"));
        for (const json& e : r.at("per_round")) {
            CnnRound c = round_cols_from_json(e);
            c.round = e.at("round").get<int>();
            mr.rounds.push_back(c);
        }
        mr.mean = round_cols_from_json(r.at("mean"));
        mr.sd = round_cols_from_json(r.at("sd"));
        mr.min = round_cols_from_json(r.at("min"));
        mr.max = round_cols_from_json(r.at("max"));
        const json& ratio = r.at("ratio");
        for (int k = 0; k < 6; ++k) mr.rmse_to_mean[static_cast<std::size_t>(k)] = read_num(ratio.at(k));
        rep.rounds = std::move(mr);
    }
    if (j.contains("stats"))
        for (const auto& [key, value] : j.at("stats").items()) rep.stats[key] = read_num(value);
    return rep;
}

} // namespace

std::string bundle_to_json(const ReportBundle& bundle) {
    json j;
    j["config_echo"] = bundle.config_echo;
    json data;
    data["n_bars"] = bundle.data.n_bars;
    data["train_rows"] = bundle.data.train_rows;
    data["test_rows"] = bundle.data.test_rows;
    data["dropped_rows"] = bundle.data.dropped_rows;
    data["train_input_min"] = stamp_to_string(bundle.data.train_input_min);
    data["train_target_max"] = stamp_to_string(bundle.data.train_target_max);
    data["test_input_min"] = stamp_to_string(bundle.data.test_input_min);
    data["test_target_max"] = stamp_to_string(bundle.data.test_target_max);
    j["data"] = data;
    j["defaults"] = bundle.defaults_ledger;
    j["errors"] = bundle.errors;
    json models;
    for (const auto& [name, rep] : bundle.models) models[name] = model_to_json(rep);
    j["models"] = models;
    return j.dump(2) + "\n";
}

ReportBundle bundle_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw MalformedRow(std::string("bundle json parse failure: ") + e.what());
    }
    ReportBundle bundle;
    bundle.config_echo = j.at("config_echo").get<std::string>();
    const json& data = j.at("data");
    bundle.data.n_bars = data.at("n_bars").get<long>();
    bundle.data.train_rows = data.at("train_rows").get<long>();
    bundle.data.test_rows = data.at("test_rows").get<long>();
    bundle.data.dropped_rows = data.at("dropped_rows").get<int>();
    bundle.data.train_input_min = stamp_from_string(data.at("train_input_min").get<std::string>());
    bundle.data.train_target_max = stamp_from_string(data.at("train_target_max").get<std::string>());
    bundle.data.test_input_min = stamp_from_string(data.at("test_input_min").get<std::string>());
    bundle.data.test_target_max = stamp_from_string(data.at("test_target_max").get<std::string>());
    bundle.defaults_ledger = j.at("defaults").get<std::map<std::string, std::string>>();
    bundle.errors = j.at("errors").get<std::map<std::string, std::string>>();
    for (const auto& [name, rep] : j.at("models").items()) {
        const auto tag = model_from_string(name);
        if (!tag) throw MalformedRow("unknown model in bundle: " + name);
        bundle.models[name] = model_from_json(*tag, rep);
    }
    return bundle;
}

// ----------------------------------------------------------------- output

void emit_reports(const ReportBundle& bundle, const std::string& dir, bool csv, bool json_out) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    auto open = [&](const std::string& fname) {
        std::ofstream f(std::filesystem::path(dir) / fname, std::ios::binary);
        if (!f) throw IoError("cannot write " + fname + " in " + dir);
        return f;
    };

    if (json_out) open("bundle.json") << bundle_to_json(bundle);
    if (!csv) return;

    std::vector<std::pair<std::string, ClsMetrics>> cls_rows;
    std::vector<std::pair<std::string, RegMetrics>> reg_rows;
    for (ModelTag tag : all_models()) {
        const auto it = bundle.models.find(to_string(tag));
        if (it == bundle.models.end()) continue;
        if (it->second.cls) cls_rows.emplace_back(it->first, it->second.cls->test);
        if (it->second.test_reg) reg_rows.emplace_back(it->first, *it->second.test_reg);
    }
    if (!cls_rows.empty()) {
        auto f = open("classification_summary.csv");
        write_summary_csv(summarize_classification(cls_rows), f);
    }
    if (!reg_rows.empty()) {
        auto f = open("regression_summary.csv");
        write_summary_csv(summarize_regression(reg_rows), f);
    }
    for (const auto& [name, rep] : bundle.models) {
        if (rep.cls && rep.cls->roc) {
            auto f = open("roc_" + name + ".csv");
            f << "x,y\n";
            for (const RocPoint& p : rep.cls->roc->points)
                f << double_to_string(p.fpr) << ',' << double_to_string(p.tpr) << '\n';
        }
        if (rep.cls && !rep.cls->lift.empty()) {
            auto f = open("lift_" + name + ".csv");
            f << "x,y\n";
            for (const LiftPoint& p : rep.cls->lift)
                f << double_to_string(p.depth) << ',' << double_to_string(p.lift) << '\n';
        }
        if (rep.rounds) {
            auto f = open("rounds_" + name + ".csv");
            write_rounds_csv(*rep.rounds, f);
        }
        if (rep.lstm) {
            auto f = open("lstm_curves.csv");
            f << "epoch,train_loss,val_loss\n";
            for (std::size_t e = 0; e < rep.lstm->epoch_train_loss.size(); ++e) {
                f << (e + 1) << ',' << double_to_string(rep.lstm->epoch_train_loss[e]) << ',';
                if (e < rep.lstm->epoch_val_loss.size())
                    f << double_to_string(rep.lstm->epoch_val_loss[e]);
                f << '\n';
            }
        }
    }
}

} // namespace slotcast
