#pragma once

#include <optional>
#include <vector>

#include "slotcast/market_data.hpp"

namespace slotcast {

// Intraday session thirds. Numeric codes 1/2/3 feed the `time` variable.
enum class SlotId : int { Morning = 1, Afternoon = 2, Evening = 3 };

struct SlotConfig {
    int market_close = 930; // end of the evening window, minute of day

    bool operator==(const SlotConfig&) const = default;
};

// Window bounds (minutes, inclusive): Morning 540..690, Afternoon 695..810,
// Evening 815..market_close. Total on minute-of-day: anything outside the
// session maps to nullopt.
std::optional<SlotId> slot_window(int minute, const SlotConfig& cfg = {});

// Per (date, slot) aggregate of the tick records that fall in the window.
struct SlotBar {
    Date date;
    SlotId slot = SlotId::Morning;
    int n_ticks = 0;
    double first_open = 0.0;  // open of the slot's first record
    double first_high = 0.0;  // high of the slot's first record
    double first_close = 0.0; // close of the slot's first record
    double high_max = 0.0;    // max high over the slot
    double low_min = 0.0;     // min low over the slot
    double low_mean = 0.0;    // mean low over the slot
    double vol_mean = 0.0;    // mean volume over the slot
    double index_mean = 0.0;  // mean index level over the slot
};

// Slot bars in (date, slot) order. Ticks outside all windows are skipped;
// a (date, slot) pair with no ticks simply yields no bar. Throws EmptySeries
// if no tick lands in any window.
std::vector<SlotBar> aggregate_slots(const TickSeries& series, const SlotConfig& cfg = {});

} // namespace slotcast
