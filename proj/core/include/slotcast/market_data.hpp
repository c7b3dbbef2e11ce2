#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "slotcast/date.hpp"

namespace slotcast {

// One 5-minute bar of the traded instrument plus the broad-market index level
// sampled at the same timestamp.
struct TickRecord {
    Date date;
    int minute = 0; // minute of day, 0..1439
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;
    double index_level = 0.0;

    bool operator==(const TickRecord&) const = default;
};

struct TickSeries {
    std::vector<TickRecord> records;

    bool operator==(const TickSeries&) const = default;
};

struct DailyBar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;

    bool operator==(const DailyBar&) const = default;
};

// Throws MalformedRow / InvariantViolation / DuplicateTimestamp with the
// offending 1-based row index in the message.
void validate(const TickSeries& series);

// CSV schema: header "date,time,open,high,low,close,volume,index", time as
// HH:MM, date as YYYY-MM-DD. Rows must be strictly increasing by (date, time).
TickSeries parse_ticks(std::istream& in);
void write_ticks_csv(const TickSeries& series, std::ostream& out);

struct SynthParams {
    double start_price = 100.0;
    double drift = 0.0005;       // per trading day, log scale
    double volatility = 0.01;    // overnight log-return sd
    double jitter = 0.0015;      // per-tick intraday log-return sd
    double volume_vol = 0.3;     // lognormal sd of per-tick volume
    std::int64_t base_volume = 100000;
    double index_start = 5900.0;
    double index_drift = 0.0003;
    double index_volatility = 0.008;
    double index_jitter = 0.001;
    // Optional slow drift regime: daily drift becomes
    // drift + drift_cycle_amp * sin(2*pi*d / drift_cycle_days).
    double drift_cycle_amp = 0.0;
    int drift_cycle_days = 0;
    Date start_date{2013, 1, 1};
    int open_minute = 540;  // 09:00
    int close_minute = 930; // 15:30
    int tick_minutes = 5;

    bool operator==(const SynthParams&) const = default;
};

// Deterministic synthetic tick series: `days` trading days (weekends skipped),
// geometric random walk with intraday drift accrual. With volatility = 0 and
// jitter = 0 every tick price equals start_price * exp(drift * (d + i/T)) for
// tick i of T on day d, so the first open of day d is start_price*exp(drift*d).
TickSeries synth_ticks(std::uint64_t seed, int days, const SynthParams& params = {});

// Aggregates ticks into daily OHLCV bars (open = first tick's open, close =
// last tick's close, high/low = extremes, volume = sum).
std::vector<DailyBar> to_daily_bars(const TickSeries& series);

} // namespace slotcast
