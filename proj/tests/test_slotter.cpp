#include <doctest.h>

#include "slotcast/slotter.hpp"

using namespace slotcast;

TEST_CASE("slot window boundaries") {
    const SlotConfig cfg;
    CHECK(!slot_window(539, cfg).has_value());
    CHECK(slot_window(540, cfg) == SlotId::Morning);
    CHECK(slot_window(690, cfg) == SlotId::Morning);
    CHECK(!slot_window(691, cfg).has_value());
    CHECK(!slot_window(694, cfg).has_value());
    CHECK(slot_window(695, cfg) == SlotId::Afternoon);
    CHECK(slot_window(810, cfg) == SlotId::Afternoon);
    CHECK(!slot_window(812, cfg).has_value());
    CHECK(slot_window(815, cfg) == SlotId::Evening);
    CHECK(slot_window(930, cfg) == SlotId::Evening);
    CHECK(!slot_window(931, cfg).has_value());

    SlotConfig longer;
    longer.market_close = 950;
    CHECK(slot_window(945, longer) == SlotId::Evening);
}

TEST_CASE("aggregate_slots per slot aggregates") {
    TickSeries s;
    const Date d{2013, 1, 1};
    // Two morning ticks, one afternoon tick, two evening ticks.
    s.records.push_back({d, 540, 100.0, 103.0, 99.0, 101.0, 10, 5900.0});
    s.records.push_back({d, 600, 101.0, 107.0, 98.0, 106.0, 30, 5910.0});
    s.records.push_back({d, 700, 106.0, 106.5, 105.0, 105.5, 12, 5800.0});
    s.records.push_back({d, 815, 105.5, 108.0, 105.0, 107.0, 8, 5850.0});
    s.records.push_back({d, 930, 107.0, 109.0, 106.0, 108.5, 16, 5750.0});

    const auto bars = aggregate_slots(s, SlotConfig{});
    REQUIRE(bars.size() == 3);

    const SlotBar& m = bars[0];
    CHECK(m.slot == SlotId::Morning);
    CHECK(m.n_ticks == 2);
    CHECK(m.first_open == 100.0);
    CHECK(m.first_high == 103.0);
    CHECK(m.first_close == 101.0);
    CHECK(m.high_max == 107.0);
    CHECK(m.low_min == 98.0);
    CHECK(m.low_mean == doctest::Approx(98.5));
    CHECK(m.vol_mean == doctest::Approx(20.0));
    CHECK(m.index_mean == doctest::Approx(5905.0));

    const SlotBar& a = bars[1];
    CHECK(a.slot == SlotId::Afternoon);
    CHECK(a.n_ticks == 1);
    CHECK(a.first_open == 106.0);

    const SlotBar& e = bars[2];
    CHECK(e.slot == SlotId::Evening);
    CHECK(e.n_ticks == 2);
    CHECK(e.high_max == 109.0);
    CHECK(e.index_mean == doctest::Approx(5800.0));
}

TEST_CASE("out of session ticks are skipped, empty slots yield no bar") {
    TickSeries s;
    const Date d{2013, 1, 2};
    s.records.push_back({d, 300, 100.0, 101.0, 99.0, 100.0, 5, 5900.0}); // pre-open
    s.records.push_back({d, 695, 100.0, 101.0, 99.0, 100.0, 5, 5900.0}); // afternoon only
    const auto bars = aggregate_slots(s, SlotConfig{});
    REQUIRE(bars.size() == 1);
    CHECK(bars[0].slot == SlotId::Afternoon);

    TickSeries none;
    none.records.push_back({d, 300, 100.0, 101.0, 99.0, 100.0, 5, 5900.0});
    CHECK_THROWS_AS(aggregate_slots(none, SlotConfig{}), EmptySeries);
}

TEST_CASE("a full synthetic day yields three slots per day in order") {
    const TickSeries s = synth_ticks(3, 5);
    const auto bars = aggregate_slots(s, SlotConfig{});
    REQUIRE(bars.size() == 15);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        CHECK(static_cast<int>(bars[i].slot) == static_cast<int>(i % 3) + 1);
        if (i >= 1 && i % 3 != 0) CHECK(bars[i].date == bars[i - 1].date);
        if (i >= 1 && i % 3 == 0) CHECK(bars[i].date > bars[i - 1].date);
    }
    // Morning covers 540..690 on a 5-minute grid: 31 ticks, etc.
    CHECK(bars[0].n_ticks == 31);
    CHECK(bars[1].n_ticks == 24);
    CHECK(bars[2].n_ticks == 24);
}
