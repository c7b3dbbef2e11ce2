#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/features.hpp"
#include "slotcast/market_data.hpp"
#include "slotcast/slotter.hpp"

namespace slotcast {

// ---------------------------------------------------------------- optimizer

struct AdamConfig {
    double learn_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::ArrayXd m, v;
    long t = 0;

    void init(long n) {
        m = Eigen::ArrayXd::Zero(n);
        v = Eigen::ArrayXd::Zero(n);
        t = 0;
    }
};

// One bias-corrected Adam update in place. Throws ShapeMismatch when the
// state, parameter and gradient sizes disagree.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               const AdamConfig& cfg);

// ------------------------------------------------------------------- LSTM

// Raw per-slot record fed to the sequence model: six variables per slot.
struct SlotSeqRecord {
    Date date;
    SlotId slot = SlotId::Morning;
    double open = 0.0;   // first_open
    double high = 0.0;   // high_max
    double low = 0.0;    // low_min
    double close = 0.0;  // first_close
    double volume = 0.0; // vol_mean
    double index = 0.0;  // index_mean
};

std::vector<SlotSeqRecord> to_sequence_records(std::span<const SlotBar> bars);

// Single-layer LSTM (gate order: input, forget, candidate, output) with a
// scalar dense head. Parameters live in one flat vector: W (4H x I), U
// (4H x H), gate bias (4H), dense weights (H), dense bias, in column-major
// chunks, initialized U(-0.5, 0.5).
class LstmNet {
public:
    LstmNet(int input_width, int hidden, std::uint64_t seed);

    int input_width() const { return input_; }
    int hidden() const { return hidden_; }
    long param_count() const { return params_.size(); }
    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    // seq is (time steps x input_width); returns the dense head output.
    double forward(const Eigen::MatrixXd& seq) const;

    // Mean loss over the batch (MAE or MSE) and its flat gradient.
    double loss_grad(const std::vector<Eigen::MatrixXd>& seqs, const Eigen::VectorXd& targets,
                     bool mae, Eigen::VectorXd& grad) const;

private:
    int input_ = 0;
    int hidden_ = 0;
    Eigen::VectorXd params_;
};

struct LstmSpec {
    int hidden = 50;
    int lookback = 4;    // slots per input sequence
    int epochs = 100;
    int batch = 72;
    int split_index = 500; // records before this index train, the rest test
    bool mae_loss = true;
    AdamConfig adam;
    std::uint64_t seed = 0;
};

struct LstmOutcome {
    LstmSpec spec;
    std::vector<double> epoch_train_loss; // scaled-space loss per epoch
    std::vector<double> epoch_val_loss;
    Eigen::VectorXd pred_train, actual_train; // descaled open values
    Eigen::VectorXd pred_test, actual_test;
    double rmse_train = 0.0, rmse_test = 0.0;
    std::optional<double> pearson_train, pearson_test;
    std::vector<std::pair<SampleStamp, SampleStamp>> train_stamps; // (input end, target)
    std::vector<std::pair<SampleStamp, SampleStamp>> test_stamps;
};

// Trains on the first split_index records (min-max scaling fit there only)
// and predicts the next-slot open for every sample. Test inputs may reach
// back across the boundary; targets never do. Requires at least
// split_index + 10 records.
LstmOutcome lstm_fit_eval(const std::vector<SlotSeqRecord>& records, const LstmSpec& spec);

// -------------------------------------------------------------------- CNN

enum class CnnVariant { M1, M2, M3, M4 };

// One-dimensional conv stack description. Tensors are (channels x length).
struct CnnArch {
    struct Conv {
        int in_ch = 1, out_ch = 1, kernel = 3; // valid padding, stride 1, ReLU
    };
    struct Pool {
        int size = 2; // max pool, stride = size, floor semantics
    };
    struct Layer {
        bool is_conv = true;
        Conv conv;
        Pool pool;
    };
    struct Branch {
        std::vector<int> channels; // input channel indices the branch consumes
        std::vector<Layer> layers;
    };
    struct Dense {
        int in = 0, out = 0;
        bool relu = true;
    };

    int input_channels = 1;
    int input_len = 5;
    std::vector<Branch> branches; // flatten + concatenation feeds the dense stack
    std::vector<Dense> dense;     // last layer is linear regardless of `relu`
};

CnnArch make_cnn_arch(CnnVariant variant);

class CnnNet {
public:
    CnnNet(const CnnArch& arch, std::uint64_t seed);

    const CnnArch& arch() const { return arch_; }
    long param_count() const { return params_.size(); }
    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    Eigen::VectorXd forward(const Eigen::MatrixXd& input) const;

    // Mean squared error over batch elements and outputs, plus flat gradient.
    double loss_grad(const std::vector<Eigen::MatrixXd>& inputs,
                     const std::vector<Eigen::VectorXd>& targets, Eigen::VectorXd& grad) const;

private:
    CnnArch arch_;
    Eigen::VectorXd params_;
};

// ------------------------------------------------------- weekly framing

enum class FrameVars { OpenOnly, AllFive };

// Trading-day grid padded to full Monday..Friday weeks. Leading partial weeks
// are dropped (nothing earlier to repeat); gaps and trailing partial weeks
// repeat the previous day's bar.
struct WeeklySeries {
    std::vector<Date> dates;      // one per grid day, length a multiple of 5
    Eigen::MatrixXd days;         // 5 x n_days: open, high, low, close, volume
    std::vector<bool> padded_day;
};

WeeklySeries build_weekly_series(const std::vector<DailyBar>& bars);

struct WeeklyFrame {
    Eigen::MatrixXd input;   // channels x (5 * history_weeks)
    Eigen::VectorXd target;  // next week's five opens
    Date input_end, target_start, target_end;
    bool padded = false;     // any padded day in input or target
};

// Stride-1 sliding samples: input = history_weeks * 5 consecutive days,
// target = the following five days' opens. Throws TooFewWeeks when no sample
// fits.
std::vector<WeeklyFrame> frame_weekly(const WeeklySeries& series, int history_weeks,
                                      FrameVars vars);

// ----------------------------------------------------- multi-round driver

struct CnnSpec {
    CnnVariant variant = CnnVariant::M1;
    int history_weeks = 1;             // M1: 1 week; M2..M4: 2 weeks
    FrameVars vars = FrameVars::OpenOnly;
    int epochs = 20;
    int batch = 4;
    AdamConfig adam;                   // learn_rate 0.001
    int rounds = 20;
    std::uint64_t seed = 0;
};

// Pinned defaults per variant (epochs, batch, framing).
CnnSpec make_cnn_spec(CnnVariant variant, std::uint64_t seed = 0);

struct CnnRound {
    int round = 0;
    double overall_rmse = 0.0;
    std::array<double, 5> day_rmse{}; // Monday .. Friday
    double exec_seconds = 0.0;
};

struct MultiRoundReport {
    std::vector<CnnRound> rounds;
    CnnRound mean, sd, min, max;          // column-wise summaries (sd uses n-1)
    std::array<double, 6> rmse_to_mean{}; // overall + Mon..Fri, fraction of mean |actual|
    double mean_abs_actual = 0.0;
    std::vector<std::pair<Date, Date>> train_stamps; // (input end, target start)
    std::vector<std::pair<Date, Date>> eval_stamps;
};

// Walk-forward by calendar week: trains once per round on frames whose target
// lies before the test block, then predicts each test week from realized
// history. Round r re-initializes and re-shuffles from sub-seed
// mix_seed(seed, r).
MultiRoundReport cnn_fit_eval(const std::vector<DailyBar>& bars, const Date& last_train_date,
                              const CnnSpec& spec);

// round,overall_rmse,mon..fri,exec_seconds rows followed by
// mean/sd/min/max/ratio summary rows (the ratio row leaves exec blank).
void write_rounds_csv(const MultiRoundReport& report, std::ostream& out);

} // namespace slotcast
