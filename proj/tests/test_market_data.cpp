#include <doctest.h>

#include <cmath>
#include <sstream>

#include "slotcast/market_data.hpp"

using namespace slotcast;

namespace {

SynthParams noiseless() {
    SynthParams p;
    p.volatility = 0.0;
    p.jitter = 0.0;
    p.volume_vol = 0.0;
    p.index_volatility = 0.0;
    p.index_jitter = 0.0;
    return p;
}

} // namespace

TEST_CASE("synth noiseless prices follow the closed form") {
    const SynthParams p = noiseless();
    const TickSeries s = synth_ticks(1, 3, p);
    const int per_day = (p.close_minute - p.open_minute) / p.tick_minutes + 1;
    REQUIRE(s.records.size() == static_cast<std::size_t>(3 * per_day));
    for (int d = 0; d < 3; ++d) {
        for (int i = 0; i < per_day; ++i) {
            const auto& r = s.records[static_cast<std::size_t>(d * per_day + i)];
            const double expected =
                p.start_price * std::exp(p.drift * (d + static_cast<double>(i) / per_day));
            CHECK(r.open == doctest::Approx(expected).epsilon(1e-12));
            CHECK(r.high == doctest::Approx(std::max(r.open, r.close)));
            CHECK(r.low == doctest::Approx(std::min(r.open, r.close)));
            CHECK(r.volume == p.base_volume);
        }
    }
    // First open of day d is exactly start * exp(drift * d).
    const auto& day2 = s.records[static_cast<std::size_t>(2 * per_day)];
    CHECK(day2.open == doctest::Approx(p.start_price * std::exp(p.drift * 2)).epsilon(1e-12));
}

TEST_CASE("synth skips weekends and is seed deterministic") {
    const TickSeries a = synth_ticks(9, 30);
    const TickSeries b = synth_ticks(9, 30);
    CHECK(a == b);
    const TickSeries c = synth_ticks(10, 30);
    CHECK(a != c);
    for (const auto& r : a.records) CHECK(!is_weekend(r.date));
    CHECK_NOTHROW(validate(a));
    // 2013-01-01 is a Tuesday; 30 trading days span exactly 6 calendar weeks.
    CHECK(a.records.front().date == Date{2013, 1, 1});
    CHECK(a.records.back().date == Date{2013, 2, 11});
}

TEST_CASE("synth rejects bad parameters") {
    CHECK_THROWS_AS(synth_ticks(1, 0), BadParams);
    SynthParams p;
    p.start_price = -1;
    CHECK_THROWS_AS(synth_ticks(1, 5, p), BadParams);
    p = SynthParams{};
    p.jitter = -0.1;
    CHECK_THROWS_AS(synth_ticks(1, 5, p), BadParams);
    p = SynthParams{};
    p.close_minute = p.open_minute;
    CHECK_THROWS_AS(synth_ticks(1, 5, p), BadParams);
    p = SynthParams{};
    p.drift_cycle_amp = 0.01; // no cycle length
    CHECK_THROWS_AS(synth_ticks(1, 5, p), BadParams);
}

TEST_CASE("ticks csv round trip") {
    const TickSeries s = synth_ticks(4, 7);
    std::stringstream buf;
    write_ticks_csv(s, buf);
    const TickSeries back = parse_ticks(buf);
    REQUIRE(back.records.size() == s.records.size());
    CHECK(back == s);
}

TEST_CASE("parse_ticks rejects malformed input") {
    const std::string header = "date,time,open,high,low,close,volume,index\n";
    {
        std::stringstream in("nonsense\n");
        CHECK_THROWS_AS(parse_ticks(in), MalformedRow);
    }
    {
        std::stringstream in(header + "2013-01-01,09:00,100,101,99,100.5,10,5900\n"
                             + "2013-01-01,09:00,100,101,99,100.5,10,5900\n");
        CHECK_THROWS_AS(parse_ticks(in), DuplicateTimestamp);
    }
    {
        std::stringstream in(header + "2013-01-01,09:05,100,101,99,100.5,10,5900\n"
                             + "2013-01-01,09:00,100,101,99,100.5,10,5900\n");
        CHECK_THROWS_AS(parse_ticks(in), InvariantViolation);
    }
    {
        // high below close.
        std::stringstream in(header + "2013-01-01,09:00,100,100.1,99,100.5,10,5900\n");
        CHECK_THROWS_AS(parse_ticks(in), InvariantViolation);
    }
    {
        std::stringstream in(header + "2013-01-01,09:00,100,101,99,100.5,-3,5900\n");
        CHECK_THROWS_AS(parse_ticks(in), InvariantViolation);
    }
    {
        std::stringstream in(header + "2013-01-01,25:00,100,101,99,100.5,10,5900\n");
        CHECK_THROWS_AS(parse_ticks(in), MalformedRow);
    }
}

TEST_CASE("to_daily_bars aggregates OHLCV") {
    TickSeries s;
    s.records.push_back({Date{2013, 1, 1}, 540, 100, 102, 99, 101, 10, 5900});
    s.records.push_back({Date{2013, 1, 1}, 545, 101, 105, 100, 104, 20, 5901});
    s.records.push_back({Date{2013, 1, 2}, 540, 104, 104.5, 103, 103.5, 7, 5902});
    const auto bars = to_daily_bars(s);
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].open == 100);
    CHECK(bars[0].high == 105);
    CHECK(bars[0].low == 99);
    CHECK(bars[0].close == 104);
    CHECK(bars[0].volume == 30);
    CHECK(bars[1].date == Date{2013, 1, 2});
    CHECK(bars[1].volume == 7);
    CHECK_THROWS_AS(to_daily_bars(TickSeries{}), EmptySeries);
}

TEST_CASE("drift cycle bends the daily drift") {
    SynthParams p = noiseless();
    p.drift = 0.0;
    p.drift_cycle_amp = 0.02;
    p.drift_cycle_days = 8;
    const TickSeries s = synth_ticks(1, 8, p);
    const auto bars = to_daily_bars(s);
    // Day d gains amp * sin(2 pi d / 8) in log terms; days 1..3 rise (sin > 0
    // at d=1,2,3), days 5..7 fall.
    CHECK(bars[1].close > bars[1].open);
    CHECK(bars[2].close > bars[2].open);
    CHECK(bars[5].close < bars[5].open);
    CHECK(bars[6].close < bars[6].open);
}
