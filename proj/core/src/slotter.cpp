#include "slotcast/slotter.hpp"

#include <algorithm>

#include "slotcast/errors.hpp"

namespace slotcast {

std::optional<SlotId> slot_window(int minute, const SlotConfig& cfg) {
    if (minute >= 540 && minute <= 690) return SlotId::Morning;
    if (minute >= 695 && minute <= 810) return SlotId::Afternoon;
    if (minute >= 815 && minute <= cfg.market_close) return SlotId::Evening;
    return std::nullopt;
}

std::vector<SlotBar> aggregate_slots(const TickSeries& series, const SlotConfig& cfg) {
    std::vector<SlotBar> bars;
    double low_sum = 0.0, vol_sum = 0.0, index_sum = 0.0;

    auto flush = [&](SlotBar& b) {
        b.low_mean = low_sum / b.n_ticks;
        b.vol_mean = vol_sum / b.n_ticks;
        b.index_mean = index_sum / b.n_ticks;
    };

    for (const auto& r : series.records) {
        const auto slot = slot_window(r.minute, cfg);
        if (!slot) continue;
        const bool fresh = bars.empty() || bars.back().date != r.date || bars.back().slot != *slot;
        if (fresh) {
            if (!bars.empty()) flush(bars.back());
            SlotBar b;
            b.date = r.date;
            b.slot = *slot;
            b.first_open = r.open;
            b.first_high = r.high;
            b.first_close = r.close;
            b.high_max = r.high;
            b.low_min = r.low;
            bars.push_back(b);
            low_sum = vol_sum = index_sum = 0.0;
        }
        SlotBar& b = bars.back();
        ++b.n_ticks;
        b.high_max = std::max(b.high_max, r.high);
        b.low_min = std::min(b.low_min, r.low);
        low_sum += r.low;
        vol_sum += static_cast<double>(r.volume);
        index_sum += r.index_level;
    }
    if (bars.empty()) throw EmptySeries("aggregate_slots: no ticks inside any slot window");
    flush(bars.back());
    return bars;
}

} // namespace slotcast
