#include "slotcast/deepnets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"
#include "slotcast/rng.hpp"

namespace slotcast {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd uniform_init(long n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = rng.uniform(-0.5, 0.5);
    return v;
}

} // namespace

// ---------------------------------------------------------------- optimizer

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               const AdamConfig& cfg) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeMismatch("adam state size does not match parameter size");
    if (grads.size() != params.size())
        throw ShapeMismatch("gradient size does not match parameter size");
    state.t += 1;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads.array();
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.array().square();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    const Eigen::ArrayXd m_hat = state.m / bc1;
    const Eigen::ArrayXd v_hat = state.v / bc2;
    params.array() -= cfg.learn_rate * m_hat / (v_hat.sqrt() + cfg.eps);
}

// ------------------------------------------------------------------- LSTM

std::vector<SlotSeqRecord> to_sequence_records(std::span<const SlotBar> bars) {
    std::vector<SlotSeqRecord> out;
    out.reserve(bars.size());
    for (const SlotBar& b : bars) {
        SlotSeqRecord r;
        r.date = b.date;
        r.slot = b.slot;
        r.open = b.first_open;
        r.high = b.high_max;
        r.low = b.low_min;
        r.close = b.first_close;
        r.volume = b.vol_mean;
        r.index = b.index_mean;
        out.push_back(r);
    }
    return out;
}

namespace {

// Flat layout: W (4H x I), U (4H x H), b (4H), dense w (H), dense b (1).
struct LstmDims {
    int input = 0, hidden = 0;
    long w_off = 0, u_off = 0, b_off = 0, wd_off = 0, bd_off = 0, total = 0;
};

LstmDims lstm_dims(int input, int hidden) {
    LstmDims d;
    d.input = input;
    d.hidden = hidden;
    const long gh = 4L * hidden;
    d.w_off = 0;
    d.u_off = d.w_off + gh * input;
    d.b_off = d.u_off + gh * hidden;
    d.wd_off = d.b_off + gh;
    d.bd_off = d.wd_off + hidden;
    d.total = d.bd_off + 1;
    return d;
}

struct LstmStep {
    Eigen::VectorXd i, f, g, o, c, tanh_c, h;
};

// Runs the recurrence, filling per-step caches when requested.
double lstm_forward_impl(const Eigen::VectorXd& params, const LstmDims& d,
                         const Eigen::MatrixXd& seq, std::vector<LstmStep>* cache) {
    const long gh = 4L * d.hidden;
    Eigen::Map<const Eigen::MatrixXd> W(params.data() + d.w_off, gh, d.input);
    Eigen::Map<const Eigen::MatrixXd> U(params.data() + d.u_off, gh, d.hidden);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + d.b_off, gh);
    Eigen::Map<const Eigen::VectorXd> wd(params.data() + d.wd_off, d.hidden);
    const double bd = params[d.bd_off];

    Eigen::VectorXd h = Eigen::VectorXd::Zero(d.hidden);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d.hidden);
    const long steps = seq.rows();
    if (cache) cache->resize(static_cast<std::size_t>(steps));
    for (long t = 0; t < steps; ++t) {
        const Eigen::VectorXd z = W * seq.row(t).transpose() + U * h + b;
        LstmStep s;
        s.i = z.segment(0, d.hidden).unaryExpr([](double v) { return sigmoid(v); });
        s.f = z.segment(d.hidden, d.hidden).unaryExpr([](double v) { return sigmoid(v); });
        s.g = z.segment(2L * d.hidden, d.hidden).array().tanh();
        s.o = z.segment(3L * d.hidden, d.hidden).unaryExpr([](double v) { return sigmoid(v); });
        c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
        s.c = c;
        s.tanh_c = c.array().tanh();
        h = s.o.cwiseProduct(s.tanh_c);
        s.h = h;
        if (cache) (*cache)[static_cast<std::size_t>(t)] = std::move(s);
    }
    return wd.dot(h) + bd;
}

} // namespace

LstmNet::LstmNet(int input_width, int hidden, std::uint64_t seed)
    : input_(input_width), hidden_(hidden) {
    if (input_width < 1 || hidden < 1) throw BadParams("lstm dimensions must be positive");
    params_ = uniform_init(lstm_dims(input_width, hidden).total, seed);
}

double LstmNet::forward(const Eigen::MatrixXd& seq) const {
    if (seq.cols() != input_ || seq.rows() < 1)
        throw ShapeMismatch("lstm input must be (steps x input_width) with steps >= 1");
    return lstm_forward_impl(params_, lstm_dims(input_, hidden_), seq, nullptr);
}

double LstmNet::loss_grad(const std::vector<Eigen::MatrixXd>& seqs, const Eigen::VectorXd& targets,
                          bool mae, Eigen::VectorXd& grad) const {
    if (seqs.empty()) throw EmptyTrain("lstm loss requires at least one sequence");
    if (static_cast<long>(seqs.size()) != targets.size())
        throw LengthMismatch("sequence and target counts differ");
    const LstmDims d = lstm_dims(input_, hidden_);
    const long gh = 4L * d.hidden;
    Eigen::Map<const Eigen::MatrixXd> U(params_.data() + d.u_off, gh, d.hidden);
    Eigen::Map<const Eigen::VectorXd> wd(params_.data() + d.wd_off, d.hidden);

    grad = Eigen::VectorXd::Zero(d.total);
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + d.w_off, gh, d.input);
    Eigen::Map<Eigen::MatrixXd> dU(grad.data() + d.u_off, gh, d.hidden);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + d.b_off, gh);
    Eigen::Map<Eigen::VectorXd> dwd(grad.data() + d.wd_off, d.hidden);

    const double inv_n = 1.0 / static_cast<double>(seqs.size());
    double loss = 0.0;
    std::vector<LstmStep> steps;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const Eigen::MatrixXd& seq = seqs[s];
        if (seq.cols() != input_ || seq.rows() < 1)
            throw ShapeMismatch("lstm input must be (steps x input_width) with steps >= 1");
        const double pred = lstm_forward_impl(params_, d, seq, &steps);
        const double err = pred - targets[static_cast<long>(s)];
        double dy;
        if (mae) {
            loss += std::abs(err) * inv_n;
            dy = (err > 0.0 ? 1.0 : err < 0.0 ? -1.0 : 0.0) * inv_n;
        } else {
            loss += err * err * inv_n;
            dy = 2.0 * err * inv_n;
        }

        const long T = seq.rows();
        dwd += dy * steps[static_cast<std::size_t>(T - 1)].h;
        grad[d.bd_off] += dy;
        Eigen::VectorXd dh = dy * wd;
        Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(d.hidden);
        for (long t = T - 1; t >= 0; --t) {
            const LstmStep& st = steps[static_cast<std::size_t>(t)];
            const Eigen::VectorXd dout = dh.cwiseProduct(st.tanh_c);
            const Eigen::VectorXd dc =
                dc_next +
                dh.cwiseProduct(st.o).cwiseProduct(
                    (1.0 - st.tanh_c.array().square()).matrix());
            const Eigen::VectorXd di = dc.cwiseProduct(st.g);
            const Eigen::VectorXd dg = dc.cwiseProduct(st.i);
            const Eigen::VectorXd c_prev =
                t > 0 ? steps[static_cast<std::size_t>(t - 1)].c
                      : Eigen::VectorXd::Zero(d.hidden);
            const Eigen::VectorXd df = dc.cwiseProduct(c_prev);
            dc_next = dc.cwiseProduct(st.f);

            Eigen::VectorXd dz(gh);
            dz.segment(0, d.hidden) =
                di.array() * st.i.array() * (1.0 - st.i.array());
            dz.segment(d.hidden, d.hidden) =
                df.array() * st.f.array() * (1.0 - st.f.array());
            dz.segment(2L * d.hidden, d.hidden) =
                dg.array() * (1.0 - st.g.array().square());
            dz.segment(3L * d.hidden, d.hidden) =
                dout.array() * st.o.array() * (1.0 - st.o.array());

            const Eigen::VectorXd h_prev =
                t > 0 ? steps[static_cast<std::size_t>(t - 1)].h
                      : Eigen::VectorXd::Zero(d.hidden);
            dW += dz * seq.row(t);
            dU += dz * h_prev.transpose();
            db += dz;
            dh = U.transpose() * dz;
        }
    }
    return loss;
}

LstmOutcome lstm_fit_eval(const std::vector<SlotSeqRecord>& records, const LstmSpec& spec) {
    if (spec.hidden < 1 || spec.lookback < 1 || spec.epochs < 1 || spec.batch < 1 ||
        spec.split_index < 1 || spec.adam.learn_rate <= 0.0)
        throw BadParams("invalid lstm spec");
    const long n = static_cast<long>(records.size());
    if (n < spec.split_index + 10)
        throw TooFewRows("need at least split_index + 10 records");
    if (spec.split_index <= spec.lookback)
        throw TooFewRows("split index leaves no room for a lookback window");

    constexpr int kWidth = 6;
    const long split = spec.split_index;

    // Min-max scaling fit on the training block only.
    std::array<double, kWidth> mn{}, mx{};
    mn.fill(std::numeric_limits<double>::infinity());
    mx.fill(-std::numeric_limits<double>::infinity());
    auto fields = [](const SlotSeqRecord& r) {
        return std::array<double, kWidth>{r.open, r.high, r.low, r.close, r.volume, r.index};
    };
    for (long i = 0; i < split; ++i) {
        const auto f = fields(records[static_cast<std::size_t>(i)]);
        for (int j = 0; j < kWidth; ++j) {
            mn[static_cast<std::size_t>(j)] = std::min(mn[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)]);
            mx[static_cast<std::size_t>(j)] = std::max(mx[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)]);
        }
    }
    Eigen::MatrixXd scaled(n, kWidth);
    for (long i = 0; i < n; ++i) {
        const auto f = fields(records[static_cast<std::size_t>(i)]);
        for (int j = 0; j < kWidth; ++j) {
            const double lo = mn[static_cast<std::size_t>(j)], hi = mx[static_cast<std::size_t>(j)];
            scaled(i, j) = hi > lo ? (f[static_cast<std::size_t>(j)] - lo) / (hi - lo) : 0.0;
        }
    }
    const double open_lo = mn[0], open_span = mx[0] > mn[0] ? mx[0] - mn[0] : 1.0;

    // Sample i predicts record i + lookback from the preceding window.
    const long n_samples = n - spec.lookback;
    std::vector<Eigen::MatrixXd> seqs;
    seqs.reserve(static_cast<std::size_t>(n_samples));
    Eigen::VectorXd targets(n_samples);
    std::vector<long> train_idx, test_idx;
    for (long i = 0; i < n_samples; ++i) {
        seqs.push_back(scaled.middleRows(i, spec.lookback));
        const long ti = i + spec.lookback;
        targets[i] = scaled(ti, 0);
        (ti < split ? train_idx : test_idx).push_back(i);
    }
    if (train_idx.empty()) throw EmptyTrain("no training samples before the split index");

    LstmOutcome out;
    out.spec = spec;
    LstmNet net(kWidth, spec.hidden, mix_seed(spec.seed, 1));
    Rng shuffler(mix_seed(spec.seed, 2));
    AdamState adam;
    adam.init(net.param_count());

    std::vector<long> order = train_idx;
    Eigen::VectorXd grad;
    std::vector<Eigen::MatrixXd> batch_seqs;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        shuffler.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(spec.batch)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(spec.batch));
            batch_seqs.clear();
            Eigen::VectorXd batch_y(static_cast<long>(end - pos));
            for (std::size_t k = pos; k < end; ++k) {
                batch_seqs.push_back(seqs[static_cast<std::size_t>(order[k])]);
                batch_y[static_cast<long>(k - pos)] = targets[order[k]];
            }
            net.loss_grad(batch_seqs, batch_y, spec.mae_loss, grad);
            adam_step(adam, net.params(), grad, spec.adam);
        }
        auto mean_loss = [&](const std::vector<long>& idx) {
            double acc = 0.0;
            for (long i : idx) {
                const double err = net.forward(seqs[static_cast<std::size_t>(i)]) - targets[i];
                acc += spec.mae_loss ? std::abs(err) : err * err;
            }
            return idx.empty() ? 0.0 : acc / static_cast<double>(idx.size());
        };
        out.epoch_train_loss.push_back(mean_loss(train_idx));
        out.epoch_val_loss.push_back(mean_loss(test_idx));
    }

    auto collect = [&](const std::vector<long>& idx, Eigen::VectorXd& pred, Eigen::VectorXd& act,
                       std::vector<std::pair<SampleStamp, SampleStamp>>& stamps) {
        pred.resize(static_cast<long>(idx.size()));
        act.resize(static_cast<long>(idx.size()));
        double sq = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const long i = idx[k];
            const long ti = i + spec.lookback;
            pred[static_cast<long>(k)] =
                open_lo + net.forward(seqs[static_cast<std::size_t>(i)]) * open_span;
            act[static_cast<long>(k)] = records[static_cast<std::size_t>(ti)].open;
            sq += (pred[static_cast<long>(k)] - act[static_cast<long>(k)]) *
                  (pred[static_cast<long>(k)] - act[static_cast<long>(k)]);
            const SlotSeqRecord& last_in = records[static_cast<std::size_t>(ti - 1)];
            const SlotSeqRecord& tgt = records[static_cast<std::size_t>(ti)];
            stamps.emplace_back(SampleStamp{last_in.date, last_in.slot},
                                SampleStamp{tgt.date, tgt.slot});
        }
        return idx.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(idx.size()));
    };
    out.rmse_train = collect(train_idx, out.pred_train, out.actual_train, out.train_stamps);
    out.rmse_test = collect(test_idx, out.pred_test, out.actual_test, out.test_stamps);
    auto pearson = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> std::optional<double> {
        if (a.size() < 2) return std::nullopt;
        const Eigen::VectorXd da = a.array() - a.mean();
        const Eigen::VectorXd db = b.array() - b.mean();
        const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
        if (den <= 0.0) return std::nullopt;
        return da.dot(db) / den;
    };
    out.pearson_train = pearson(out.pred_train, out.actual_train);
    out.pearson_test = pearson(out.pred_test, out.actual_test);
    return out;
}

// -------------------------------------------------------------------- CNN

CnnArch make_cnn_arch(CnnVariant variant) {
    using Layer = CnnArch::Layer;
    auto conv = [](int in_ch, int out_ch, int kernel) {
        Layer l;
        l.is_conv = true;
        l.conv = {in_ch, out_ch, kernel};
        return l;
    };
    auto pool = [](int size) {
        Layer l;
        l.is_conv = false;
        l.pool = {size};
        return l;
    };

    CnnArch arch;
    switch (variant) {
    case CnnVariant::M1:
        arch.input_channels = 1;
        arch.input_len = 5;
        arch.branches.push_back({{0}, {conv(1, 16, 3), pool(2)}});
        arch.dense = {{16, 10, true}, {10, 5, false}};
        break;
    case CnnVariant::M2:
        arch.input_channels = 1;
        arch.input_len = 10;
        arch.branches.push_back({{0}, {conv(1, 16, 3), pool(2)}});
        arch.dense = {{64, 10, true}, {10, 5, false}};
        break;
    case CnnVariant::M3:
        arch.input_channels = 5;
        arch.input_len = 10;
        arch.branches.push_back(
            {{0, 1, 2, 3, 4},
             {conv(5, 32, 3), conv(32, 32, 3), pool(2), conv(32, 16, 3), pool(1)}});
        arch.dense = {{16, 100, true}, {100, 5, false}};
        break;
    case CnnVariant::M4:
        arch.input_channels = 5;
        arch.input_len = 10;
        for (int ch = 0; ch < 5; ++ch)
            arch.branches.push_back({{ch}, {conv(1, 16, 3), pool(2)}});
        arch.dense = {{320, 100, true}, {100, 5, false}};
        break;
    }
    return arch;
}

namespace {

struct ConvShape {
    int in_ch = 0, out_ch = 0, kernel = 0, in_len = 0, out_len = 0;
    long w_off = 0, b_off = 0;
};

struct PoolShape {
    int ch = 0, size = 0, in_len = 0, out_len = 0;
};

struct LayerShape {
    bool is_conv = true;
    ConvShape conv;
    PoolShape pool;
};

struct BranchShape {
    std::vector<LayerShape> layers;
    int flat = 0;
};

struct DenseShape {
    int in = 0, out = 0;
    bool relu = true;
    long w_off = 0, b_off = 0;
};

struct NetLayout {
    std::vector<BranchShape> branches;
    std::vector<DenseShape> dense;
    long total = 0;
    int out_dim = 0;
};

NetLayout make_layout(const CnnArch& arch) {
    if (arch.input_channels < 1 || arch.input_len < 1 || arch.branches.empty() ||
        arch.dense.empty())
        throw BadParams("cnn architecture is incomplete");
    NetLayout lay;
    long off = 0;
    int concat = 0;
    for (const CnnArch::Branch& br : arch.branches) {
        if (br.channels.empty()) throw BadParams("cnn branch consumes no channels");
        for (int ch : br.channels)
            if (ch < 0 || ch >= arch.input_channels)
                throw BadParams("cnn branch channel out of range");
        BranchShape bs;
        int ch = static_cast<int>(br.channels.size());
        int len = arch.input_len;
        for (const CnnArch::Layer& l : br.layers) {
            LayerShape ls;
            ls.is_conv = l.is_conv;
            if (l.is_conv) {
                if (l.conv.in_ch != ch) throw BadParams("conv input channels mismatch");
                if (l.conv.kernel < 1 || l.conv.kernel > len || l.conv.out_ch < 1)
                    throw BadParams("conv kernel does not fit its input");
                ls.conv.in_ch = ch;
                ls.conv.out_ch = l.conv.out_ch;
                ls.conv.kernel = l.conv.kernel;
                ls.conv.in_len = len;
                ls.conv.out_len = len - l.conv.kernel + 1;
                ls.conv.w_off = off;
                off += static_cast<long>(l.conv.out_ch) * ch * l.conv.kernel;
                ls.conv.b_off = off;
                off += l.conv.out_ch;
                ch = l.conv.out_ch;
                len = ls.conv.out_len;
            } else {
                if (l.pool.size < 1 || l.pool.size > len)
                    throw BadParams("pool size does not fit its input");
                ls.pool.ch = ch;
                ls.pool.size = l.pool.size;
                ls.pool.in_len = len;
                ls.pool.out_len = len / l.pool.size;
                if (ls.pool.out_len < 1) throw BadParams("pool output is empty");
                len = ls.pool.out_len;
            }
            bs.layers.push_back(ls);
        }
        bs.flat = ch * len;
        concat += bs.flat;
        lay.branches.push_back(std::move(bs));
    }
    int width = concat;
    for (const CnnArch::Dense& dn : arch.dense) {
        if (dn.in != width || dn.out < 1) throw BadParams("dense layer width mismatch");
        DenseShape ds;
        ds.in = dn.in;
        ds.out = dn.out;
        ds.relu = dn.relu;
        ds.w_off = off;
        off += static_cast<long>(dn.out) * dn.in;
        ds.b_off = off;
        off += dn.out;
        width = dn.out;
        lay.dense.push_back(ds);
    }
    lay.dense.back().relu = false;
    lay.total = off;
    lay.out_dim = width;
    return lay;
}

// Forward caches for one sample.
struct BranchCache {
    std::vector<Eigen::MatrixXd> patch;   // im2col input per conv layer
    std::vector<Eigen::MatrixXd> pre;     // pre-ReLU conv outputs
    std::vector<Eigen::MatrixXd> pooled;  // pool outputs
    std::vector<Eigen::MatrixXi> argmax;  // pool source column per output cell
    Eigen::MatrixXd out;                  // branch output tensor
};

struct NetCache {
    std::vector<BranchCache> branches;
    std::vector<Eigen::VectorXd> dense_in; // input of each dense layer
    std::vector<Eigen::VectorXd> pre;      // dense pre-activations
};

Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel) {
    const long ch = x.rows();
    const long out_len = x.cols() - kernel + 1;
    Eigen::MatrixXd p(ch * kernel, out_len);
    for (long j = 0; j < out_len; ++j)
        p.col(j) = Eigen::Map<const Eigen::VectorXd>(x.data() + j * ch, ch * kernel);
    return p;
}

Eigen::VectorXd cnn_forward_impl(const Eigen::VectorXd& params, const CnnArch& arch,
                                 const NetLayout& lay, const Eigen::MatrixXd& input,
                                 NetCache* cache) {
    if (input.rows() != arch.input_channels || input.cols() != arch.input_len)
        throw ShapeMismatch("cnn input must be (channels x length)");
    if (cache) {
        cache->branches.assign(lay.branches.size(), {});
        cache->dense_in.clear();
        cache->pre.clear();
    }
    Eigen::VectorXd flat(lay.dense.front().in);
    long cursor = 0;
    for (std::size_t bi = 0; bi < lay.branches.size(); ++bi) {
        const BranchShape& bs = lay.branches[bi];
        const CnnArch::Branch& br = arch.branches[bi];
        Eigen::MatrixXd cur(br.channels.size(), arch.input_len);
        for (std::size_t r = 0; r < br.channels.size(); ++r)
            cur.row(static_cast<long>(r)) = input.row(br.channels[r]);
        BranchCache* bc = cache ? &cache->branches[bi] : nullptr;
        for (const LayerShape& ls : bs.layers) {
            if (ls.is_conv) {
                Eigen::Map<const Eigen::MatrixXd> W(params.data() + ls.conv.w_off,
                                                    ls.conv.out_ch,
                                                    static_cast<long>(ls.conv.in_ch) * ls.conv.kernel);
                Eigen::Map<const Eigen::VectorXd> b(params.data() + ls.conv.b_off, ls.conv.out_ch);
                Eigen::MatrixXd patch = im2col(cur, ls.conv.kernel);
                Eigen::MatrixXd pre = (W * patch).colwise() + b;
                if (bc) {
                    bc->patch.push_back(patch);
                    bc->pre.push_back(pre);
                }
                cur = pre.cwiseMax(0.0);
            } else {
                Eigen::MatrixXd out(ls.pool.ch, ls.pool.out_len);
                Eigen::MatrixXi arg(ls.pool.ch, ls.pool.out_len);
                for (int c = 0; c < ls.pool.ch; ++c) {
                    for (int j = 0; j < ls.pool.out_len; ++j) {
                        const int base = j * ls.pool.size;
                        int best = base;
                        for (int k = 1; k < ls.pool.size; ++k)
                            if (cur(c, base + k) > cur(c, best)) best = base + k;
                        out(c, j) = cur(c, best);
                        arg(c, j) = best;
                    }
                }
                if (bc) {
                    bc->pooled.push_back(out);
                    bc->argmax.push_back(arg);
                }
                cur = out;
            }
        }
        if (bc) bc->out = cur;
        flat.segment(cursor, bs.flat) = Eigen::Map<const Eigen::VectorXd>(cur.data(), bs.flat);
        cursor += bs.flat;
    }

    Eigen::VectorXd act = flat;
    for (const DenseShape& ds : lay.dense) {
        Eigen::Map<const Eigen::MatrixXd> W(params.data() + ds.w_off, ds.out, ds.in);
        Eigen::Map<const Eigen::VectorXd> b(params.data() + ds.b_off, ds.out);
        Eigen::VectorXd pre = W * act + b;
        if (cache) {
            cache->dense_in.push_back(act);
            cache->pre.push_back(pre);
        }
        act = ds.relu ? pre.cwiseMax(0.0).eval() : pre;
    }
    return act;
}

} // namespace

CnnNet::CnnNet(const CnnArch& arch, std::uint64_t seed) : arch_(arch) {
    params_ = uniform_init(make_layout(arch).total, seed);
}

Eigen::VectorXd CnnNet::forward(const Eigen::MatrixXd& input) const {
    const NetLayout lay = make_layout(arch_);
    return cnn_forward_impl(params_, arch_, lay, input, nullptr);
}

double CnnNet::loss_grad(const std::vector<Eigen::MatrixXd>& inputs,
                         const std::vector<Eigen::VectorXd>& targets,
                         Eigen::VectorXd& grad) const {
    if (inputs.empty()) throw EmptyTrain("cnn loss requires at least one sample");
    if (inputs.size() != targets.size())
        throw LengthMismatch("input and target counts differ");
    const NetLayout lay = make_layout(arch_);
    grad = Eigen::VectorXd::Zero(lay.total);
    const double inv = 1.0 / (static_cast<double>(inputs.size()) * lay.out_dim);
    double loss = 0.0;
    NetCache cache;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        if (targets[s].size() != lay.out_dim)
            throw ShapeMismatch("cnn target width does not match the output layer");
        const Eigen::VectorXd out = cnn_forward_impl(params_, arch_, lay, inputs[s], &cache);
        const Eigen::VectorXd err = out - targets[s];
        loss += err.squaredNorm() * inv;

        // Dense stack, output first.
        Eigen::VectorXd delta = 2.0 * inv * err;
        for (long li = static_cast<long>(lay.dense.size()) - 1; li >= 0; --li) {
            const DenseShape& ds = lay.dense[static_cast<std::size_t>(li)];
            if (ds.relu) {
                const Eigen::VectorXd& pre = cache.pre[static_cast<std::size_t>(li)];
                for (int j = 0; j < ds.out; ++j)
                    if (pre[j] <= 0.0) delta[j] = 0.0;
            }
            Eigen::Map<Eigen::MatrixXd> dW(grad.data() + ds.w_off, ds.out, ds.in);
            Eigen::Map<Eigen::VectorXd> db(grad.data() + ds.b_off, ds.out);
            Eigen::Map<const Eigen::MatrixXd> W(params_.data() + ds.w_off, ds.out, ds.in);
            dW += delta * cache.dense_in[static_cast<std::size_t>(li)].transpose();
            db += delta;
            delta = (W.transpose() * delta).eval();
        }

        // Split the flatten gradient back across branches.
        long cursor = 0;
        for (std::size_t bi = 0; bi < lay.branches.size(); ++bi) {
            const BranchShape& bs = lay.branches[bi];
            const BranchCache& bc = cache.branches[bi];
            Eigen::MatrixXd dcur = Eigen::Map<const Eigen::MatrixXd>(
                delta.data() + cursor, bc.out.rows(), bc.out.cols());
            cursor += bs.flat;
            long conv_i = static_cast<long>(bc.pre.size()) - 1;
            long pool_i = static_cast<long>(bc.pooled.size()) - 1;
            for (long li = static_cast<long>(bs.layers.size()) - 1; li >= 0; --li) {
                const LayerShape& ls = bs.layers[static_cast<std::size_t>(li)];
                if (ls.is_conv) {
                    const Eigen::MatrixXd& pre = bc.pre[static_cast<std::size_t>(conv_i)];
                    Eigen::MatrixXd dpre = dcur;
                    for (long c = 0; c < dpre.rows(); ++c)
                        for (long j = 0; j < dpre.cols(); ++j)
                            if (pre(c, j) <= 0.0) dpre(c, j) = 0.0;
                    Eigen::Map<Eigen::MatrixXd> dW(
                        grad.data() + ls.conv.w_off, ls.conv.out_ch,
                        static_cast<long>(ls.conv.in_ch) * ls.conv.kernel);
                    Eigen::Map<Eigen::VectorXd> db(grad.data() + ls.conv.b_off, ls.conv.out_ch);
                    Eigen::Map<const Eigen::MatrixXd> W(
                        params_.data() + ls.conv.w_off, ls.conv.out_ch,
                        static_cast<long>(ls.conv.in_ch) * ls.conv.kernel);
                    const Eigen::MatrixXd& patch = bc.patch[static_cast<std::size_t>(conv_i)];
                    dW += dpre * patch.transpose();
                    db += dpre.rowwise().sum();
                    const Eigen::MatrixXd dpatch = W.transpose() * dpre;
                    Eigen::MatrixXd dinput =
                        Eigen::MatrixXd::Zero(ls.conv.in_ch, ls.conv.in_len);
                    for (long j = 0; j < dpatch.cols(); ++j)
                        Eigen::Map<Eigen::VectorXd>(dinput.data() + j * ls.conv.in_ch,
                                                    static_cast<long>(ls.conv.in_ch) *
                                                        ls.conv.kernel) +=
                            dpatch.col(j);
                    dcur = dinput;
                    --conv_i;
                } else {
                    const Eigen::MatrixXi& arg = bc.argmax[static_cast<std::size_t>(pool_i)];
                    Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(ls.pool.ch, ls.pool.in_len);
                    for (int c = 0; c < ls.pool.ch; ++c)
                        for (int j = 0; j < ls.pool.out_len; ++j)
                            dinput(c, arg(c, j)) += dcur(c, j);
                    dcur = dinput;
                    --pool_i;
                }
            }
        }
    }
    return loss;
}

// ------------------------------------------------------- weekly framing

WeeklySeries build_weekly_series(const std::vector<DailyBar>& bars) {
    if (bars.empty()) throw EmptySeries("no daily bars to frame");
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (is_weekend(bars[i].date))
            throw InvariantViolation("weekend bar at " + to_string(bars[i].date));
        if (i > 0 && !(bars[i - 1].date < bars[i].date))
            throw InvariantViolation("daily bars are not strictly increasing by date");
    }

    const Date first = bars.front().date;
    Date start = first;
    if (weekday(first) != 1) start = add_days(first, 8 - weekday(first));
    const Date last = bars.back().date;
    const Date fri = add_days(last, 5 - weekday(last));
    if (fri < start) throw TooFewWeeks("no complete Monday-to-Friday week in the data");

    WeeklySeries ws;
    std::vector<const DailyBar*> sources;
    std::size_t cursor = 0;
    const DailyBar* prev = nullptr;
    for (Date d = start; !(fri < d); d = add_days(d, 1)) {
        if (is_weekend(d)) continue;
        while (cursor < bars.size() && bars[cursor].date < d) prev = &bars[cursor++];
        const bool real = cursor < bars.size() && bars[cursor].date == d;
        const DailyBar* src = real ? &bars[cursor] : prev;
        if (!src) throw TooFewWeeks("no complete Monday-to-Friday week in the data");
        ws.dates.push_back(d);
        ws.padded_day.push_back(!real);
        sources.push_back(src);
        if (real) prev = &bars[cursor++];
    }
    ws.days.resize(5, static_cast<long>(sources.size()));
    for (long j = 0; j < static_cast<long>(sources.size()); ++j) {
        const DailyBar* src = sources[static_cast<std::size_t>(j)];
        ws.days.col(j) << src->open, src->high, src->low, src->close, src->volume;
    }
    return ws;
}

std::vector<WeeklyFrame> frame_weekly(const WeeklySeries& series, int history_weeks,
                                      FrameVars vars) {
    if (history_weeks < 1) throw BadParams("history_weeks must be at least 1");
    const long n = static_cast<long>(series.dates.size());
    const long in_len = 5L * history_weeks;
    const long need = in_len + 5;
    if (n < need) throw TooFewWeeks("not enough padded days for one frame");

    std::vector<WeeklyFrame> frames;
    frames.reserve(static_cast<std::size_t>(n - need + 1));
    for (long s = 0; s + need <= n; ++s) {
        WeeklyFrame f;
        if (vars == FrameVars::AllFive) {
            f.input = series.days.middleCols(s, in_len);
        } else {
            f.input = series.days.block(0, s, 1, in_len);
        }
        f.target = series.days.block(0, s + in_len, 1, 5).transpose();
        f.input_end = series.dates[static_cast<std::size_t>(s + in_len - 1)];
        f.target_start = series.dates[static_cast<std::size_t>(s + in_len)];
        f.target_end = series.dates[static_cast<std::size_t>(s + need - 1)];
        f.padded = false;
        for (long k = s; k < s + need; ++k)
            if (series.padded_day[static_cast<std::size_t>(k)]) f.padded = true;
        frames.push_back(std::move(f));
    }
    return frames;
}

// ----------------------------------------------------- multi-round driver

CnnSpec make_cnn_spec(CnnVariant variant, std::uint64_t seed) {
    CnnSpec spec;
    spec.variant = variant;
    spec.seed = seed;
    switch (variant) {
    case CnnVariant::M1:
        spec.history_weeks = 1;
        spec.vars = FrameVars::OpenOnly;
        spec.epochs = 20;
        spec.batch = 4;
        break;
    case CnnVariant::M2:
        spec.history_weeks = 2;
        spec.vars = FrameVars::OpenOnly;
        spec.epochs = 20;
        spec.batch = 4;
        break;
    case CnnVariant::M3:
    case CnnVariant::M4:
        spec.history_weeks = 2;
        spec.vars = FrameVars::AllFive;
        spec.epochs = 70;
        spec.batch = 16;
        break;
    }
    return spec;
}

MultiRoundReport cnn_fit_eval(const std::vector<DailyBar>& bars, const Date& last_train_date,
                              const CnnSpec& spec) {
    if (spec.rounds < 1 || spec.epochs < 1 || spec.batch < 1 || spec.history_weeks < 1 ||
        spec.adam.learn_rate <= 0.0)
        throw BadParams("invalid cnn spec");
    const CnnArch arch = make_cnn_arch(spec.variant);
    const int want_ch = spec.vars == FrameVars::AllFive ? 5 : 1;
    if (arch.input_len != 5 * spec.history_weeks || arch.input_channels != want_ch)
        throw BadParams("cnn spec framing does not match the architecture");

    const WeeklySeries grid = build_weekly_series(bars);
    const long n_days = static_cast<long>(grid.dates.size());

    // First fully-held-out week.
    long test_start = -1;
    for (long w = 0; w < n_days; w += 5) {
        if (last_train_date < grid.dates[static_cast<std::size_t>(w)]) {
            test_start = w;
            break;
        }
    }
    if (test_start < 0) throw TooFewWeeks("no test week after the training cutoff");
    if (test_start == 0) throw EmptyTrain("no training week before the cutoff");

    // Min-max scaling fit on the training day range only.
    Eigen::VectorXd lo(5), span(5);
    for (int r = 0; r < 5; ++r) {
        const auto row = grid.days.row(r).head(test_start);
        lo[r] = row.minCoeff();
        const double hi = row.maxCoeff();
        span[r] = hi > lo[r] ? hi - lo[r] : 1.0;
    }
    WeeklySeries scaled = grid;
    for (int r = 0; r < 5; ++r)
        scaled.days.row(r) = (grid.days.row(r).array() - lo[r]) / span[r];

    WeeklySeries train_part;
    train_part.dates.assign(grid.dates.begin(), grid.dates.begin() + test_start);
    train_part.padded_day.assign(grid.padded_day.begin(), grid.padded_day.begin() + test_start);
    train_part.days = scaled.days.leftCols(test_start);
    const std::vector<WeeklyFrame> train_frames =
        frame_weekly(train_part, spec.history_weeks, spec.vars);

    std::vector<Eigen::MatrixXd> train_x;
    std::vector<Eigen::VectorXd> train_y;
    MultiRoundReport rep;
    for (const WeeklyFrame& f : train_frames) {
        train_x.push_back(f.input);
        train_y.push_back(f.target);
        rep.train_stamps.emplace_back(f.input_end, f.target_start);
    }

    const long in_len = 5L * spec.history_weeks;
    std::vector<long> eval_weeks;
    for (long w = test_start; w + 5 <= n_days; w += 5) {
        eval_weeks.push_back(w);
        rep.eval_stamps.emplace_back(grid.dates[static_cast<std::size_t>(w - 1)],
                                     grid.dates[static_cast<std::size_t>(w)]);
    }
    if (eval_weeks.empty()) throw TooFewWeeks("no complete test week after the cutoff");

    double abs_sum = 0.0;
    long abs_n = 0;
    for (long w : eval_weeks)
        for (int dcol = 0; dcol < 5; ++dcol) {
            abs_sum += std::abs(grid.days(0, w + dcol));
            ++abs_n;
        }
    rep.mean_abs_actual = abs_sum / static_cast<double>(abs_n);

    for (int r = 0; r < spec.rounds; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t round_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(r));
        CnnNet net(arch, mix_seed(round_seed, 1));
        Rng shuffler(mix_seed(round_seed, 2));
        AdamState adam;
        adam.init(net.param_count());

        std::vector<long> order(train_x.size());
        std::iota(order.begin(), order.end(), 0L);
        Eigen::VectorXd grad;
        std::vector<Eigen::MatrixXd> bx;
        std::vector<Eigen::VectorXd> by;
        for (int epoch = 0; epoch < spec.epochs; ++epoch) {
            shuffler.shuffle(order);
            for (std::size_t pos = 0; pos < order.size();
                 pos += static_cast<std::size_t>(spec.batch)) {
                const std::size_t end =
                    std::min(order.size(), pos + static_cast<std::size_t>(spec.batch));
                bx.clear();
                by.clear();
                for (std::size_t k = pos; k < end; ++k) {
                    bx.push_back(train_x[static_cast<std::size_t>(order[k])]);
                    by.push_back(train_y[static_cast<std::size_t>(order[k])]);
                }
                net.loss_grad(bx, by, grad);
                adam_step(adam, net.params(), grad, spec.adam);
            }
        }

        // Walk forward over realized weeks; the model is not retrained.
        CnnRound round;
        round.round = r + 1;
        double total_sq = 0.0;
        std::array<double, 5> day_sq{};
        for (long w : eval_weeks) {
            Eigen::MatrixXd input;
            if (spec.vars == FrameVars::AllFive)
                input = scaled.days.middleCols(w - in_len, in_len);
            else
                input = scaled.days.block(0, w - in_len, 1, in_len);
            const Eigen::VectorXd pred_scaled = net.forward(input);
            for (int dcol = 0; dcol < 5; ++dcol) {
                const double pred = lo[0] + pred_scaled[dcol] * span[0];
                const double err = pred - grid.days(0, w + dcol);
                total_sq += err * err;
                day_sq[static_cast<std::size_t>(dcol)] += err * err;
            }
        }
        const double n_weeks = static_cast<double>(eval_weeks.size());
        round.overall_rmse = std::sqrt(total_sq / (5.0 * n_weeks));
        for (int dcol = 0; dcol < 5; ++dcol)
            round.day_rmse[static_cast<std::size_t>(dcol)] =
                std::sqrt(day_sq[static_cast<std::size_t>(dcol)] / n_weeks);
        round.exec_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.rounds.push_back(round);
    }

    // Column-wise summary rows.
    auto column = [&](int j, const CnnRound& c) -> double {
        if (j == 0) return c.overall_rmse;
        if (j <= 5) return c.day_rmse[static_cast<std::size_t>(j - 1)];
        return c.exec_seconds;
    };
    auto set_column = [](int j, CnnRound& c, double v) {
        if (j == 0)
            c.overall_rmse = v;
        else if (j <= 5)
            c.day_rmse[static_cast<std::size_t>(j - 1)] = v;
        else
            c.exec_seconds = v;
    };
    const double nr = static_cast<double>(rep.rounds.size());
    for (int j = 0; j < 7; ++j) {
        double sum = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (const CnnRound& c : rep.rounds) {
            const double v = column(j, c);
            sum += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        const double mean = sum / nr;
        double var = 0.0;
        for (const CnnRound& c : rep.rounds) var += (column(j, c) - mean) * (column(j, c) - mean);
        set_column(j, rep.mean, mean);
        set_column(j, rep.sd, nr > 1.5 ? std::sqrt(var / (nr - 1.0)) : 0.0);
        set_column(j, rep.min, mn);
        set_column(j, rep.max, mx);
        if (j < 6 && rep.mean_abs_actual > 0.0)
            rep.rmse_to_mean[static_cast<std::size_t>(j)] = mean / rep.mean_abs_actual;
    }
    return rep;
}

void write_rounds_csv(const MultiRoundReport& report, std::ostream& out) {
    out << "round,overall_rmse,mon,tue,wed,thu,fri,exec_seconds\n";
    auto row = [&](const std::string& label, const CnnRound& c) {
        out << label;
        out << ',' << double_to_string(c.overall_rmse);
        for (double v : c.day_rmse) out << ',' << double_to_string(v);
        out << ',' << double_to_string(c.exec_seconds) << '\n';
    };
    for (const CnnRound& c : report.rounds) row(std::to_string(c.round), c);
    row("mean", report.mean);
    row("sd", report.sd);
    row("min", report.min);
    row("max", report.max);
    out << "ratio";
    for (double v : report.rmse_to_mean) out << ',' << double_to_string(v);
    out << ",\n";
}

} // namespace slotcast
