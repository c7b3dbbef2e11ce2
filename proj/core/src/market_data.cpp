#include "slotcast/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"
#include "slotcast/rng.hpp"

namespace slotcast {
namespace {

void check_record(const TickRecord& r, std::size_t row) {
    const std::string at = " at row " + std::to_string(row);
    if (!is_valid(r.date)) throw InvariantViolation("invalid date" + at);
    if (r.minute < 0 || r.minute >= 1440) throw InvariantViolation("minute out of range" + at);
    if (!(r.open > 0.0) || !(r.high > 0.0) || !(r.low > 0.0) || !(r.close > 0.0))
        throw InvariantViolation("non-positive price" + at);
    if (r.high < std::max(r.open, r.close) || r.low > std::min(r.open, r.close))
        throw InvariantViolation("OHLC bounds violated" + at);
    if (r.volume < 0) throw InvariantViolation("negative volume" + at);
    if (!(r.index_level > 0.0)) throw InvariantViolation("non-positive index level" + at);
}

int parse_minute(const std::string& s, std::size_t row) {
    int h = 0, m = 0;
    char colon = 0, tail = 0;
    if (std::sscanf(s.c_str(), "%d%c%d%c", &h, &colon, &m, &tail) != 3 || colon != ':'
        || h < 0 || h > 23 || m < 0 || m > 59) {
        throw MalformedRow("bad time '" + s + "' at row " + std::to_string(row));
    }
    return h * 60 + m;
}

} // namespace

void validate(const TickSeries& series) {
    for (std::size_t i = 0; i < series.records.size(); ++i) {
        check_record(series.records[i], i + 1);
        if (i > 0) {
            const auto& prev = series.records[i - 1];
            const auto& cur = series.records[i];
            const auto key_prev = std::pair(to_serial(prev.date), prev.minute);
            const auto key_cur = std::pair(to_serial(cur.date), cur.minute);
            if (key_cur == key_prev)
                throw DuplicateTimestamp("duplicate timestamp at row " + std::to_string(i + 1));
            if (key_cur < key_prev)
                throw InvariantViolation("records not sorted at row " + std::to_string(i + 1));
        }
    }
}

TickSeries parse_ticks(std::istream& in) {
    TickSeries series;
    std::string line;
    std::size_t row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (!saw_header) {
            if (fields.size() != 8 || fields[0] != "date")
                throw MalformedRow("expected header 'date,time,open,high,low,close,volume,index'");
            saw_header = true;
            continue;
        }
        if (fields.size() != 8)
            throw MalformedRow("expected 8 fields, got " + std::to_string(fields.size())
                               + " at row " + std::to_string(row));
        TickRecord r;
        r.date = parse_date(fields[0]);
        r.minute = parse_minute(fields[1], row);
        r.open = parse_double(fields[2], "open");
        r.high = parse_double(fields[3], "high");
        r.low = parse_double(fields[4], "low");
        r.close = parse_double(fields[5], "close");
        r.volume = parse_int(fields[6], "volume");
        r.index_level = parse_double(fields[7], "index");
        series.records.push_back(r);
    }
    validate(series);
    return series;
}

void write_ticks_csv(const TickSeries& series, std::ostream& out) {
    out << "date,time,open,high,low,close,volume,index\n";
    char hhmm[8];
    for (const auto& r : series.records) {
        std::snprintf(hhmm, sizeof hhmm, "%02d:%02d", r.minute / 60, r.minute % 60);
        out << to_string(r.date) << ',' << hhmm << ',' << double_to_string(r.open) << ','
            << double_to_string(r.high) << ',' << double_to_string(r.low) << ','
            << double_to_string(r.close) << ',' << r.volume << ','
            << double_to_string(r.index_level) << '\n';
    }
}

TickSeries synth_ticks(std::uint64_t seed, int days, const SynthParams& p) {
    if (days < 1) throw BadParams("synth_ticks: days >= 1 required");
    if (!(p.start_price > 0.0)) throw BadParams("synth_ticks: start_price must be positive");
    if (p.volatility < 0.0 || p.jitter < 0.0 || p.volume_vol < 0.0 || p.index_volatility < 0.0
        || p.index_jitter < 0.0)
        throw BadParams("synth_ticks: negative noise parameter");
    if (p.base_volume < 0) throw BadParams("synth_ticks: base_volume must be >= 0");
    if (!(p.index_start > 0.0)) throw BadParams("synth_ticks: index_start must be positive");
    if (p.tick_minutes < 1 || p.open_minute < 0 || p.close_minute <= p.open_minute
        || p.close_minute >= 1440)
        throw BadParams("synth_ticks: bad tick grid");
    if (p.drift_cycle_amp != 0.0 && p.drift_cycle_days <= 0)
        throw BadParams("synth_ticks: drift_cycle_days must be positive when amplitude set");

    const int ticks_per_day = (p.close_minute - p.open_minute) / p.tick_minutes + 1;
    Rng rng(seed);
    TickSeries series;
    series.records.reserve(static_cast<std::size_t>(days) * ticks_per_day);

    double log_price = std::log(p.start_price);
    double log_index = std::log(p.index_start);
    Date date = p.start_date;
    while (is_weekend(date)) date = add_days(date, 1);

    for (int d = 0; d < days; ++d) {
        double day_drift = p.drift;
        if (p.drift_cycle_days > 0)
            day_drift += p.drift_cycle_amp * std::sin(2.0 * M_PI * d / p.drift_cycle_days);
        const double tick_drift = day_drift / ticks_per_day;
        const double index_tick_drift = p.index_drift / ticks_per_day;

        for (int i = 0; i < ticks_per_day; ++i) {
            TickRecord r;
            r.date = date;
            r.minute = p.open_minute + i * p.tick_minutes;
            const double open = std::exp(log_price);
            log_price += tick_drift + p.jitter * rng.normal();
            const double close = std::exp(log_price);
            const double wick_up = p.jitter * rng.uniform01();
            const double wick_dn = p.jitter * rng.uniform01();
            r.open = open;
            r.close = close;
            r.high = std::max(open, close) * (1.0 + wick_up);
            r.low = std::min(open, close) / (1.0 + wick_dn);
            r.volume = static_cast<std::int64_t>(
                std::llround(p.base_volume * std::exp(p.volume_vol * rng.normal())));
            log_index += index_tick_drift + p.index_jitter * rng.normal();
            r.index_level = std::exp(log_index);
            series.records.push_back(r);
        }

        // Overnight gaps.
        log_price += p.volatility * rng.normal();
        log_index += p.index_volatility * rng.normal();
        date = add_days(date, 1);
        while (is_weekend(date)) date = add_days(date, 1);
    }
    return series;
}

std::vector<DailyBar> to_daily_bars(const TickSeries& series) {
    if (series.records.empty()) throw EmptySeries("to_daily_bars: empty series");
    std::vector<DailyBar> bars;
    for (const auto& r : series.records) {
        if (bars.empty() || bars.back().date != r.date) {
            bars.push_back(DailyBar{r.date, r.open, r.high, r.low, r.close, r.volume});
        } else {
            DailyBar& b = bars.back();
            b.high = std::max(b.high, r.high);
            b.low = std::min(b.low, r.low);
            b.close = r.close;
            b.volume += r.volume;
        }
    }
    return bars;
}

} // namespace slotcast
