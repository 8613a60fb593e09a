#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "../support/fixtures.hpp"
#include "ntl/error.hpp"
#include "ntl/ingest.hpp"

using namespace ntl;
using namespace ntl::ingest;
using namespace std::chrono;
using ntl::test::at;
using ntl::test::ymd;

TEST(IngestParse, EnergyRow) {
    const auto r = parse_energy_csv("meter_id,hour_start,energy_kwh\nmeter_60,2021-06-01T00:00:00Z,0.42\n");
    ASSERT_TRUE(r.errors.empty());
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0], (EnergyReading{"meter_60", at("2021-06-01T00:00:00Z"), 0.42, std::nullopt}));
}

TEST(IngestParse, EnergyWithReactiveAndOffsetTimestamps) {
    const auto r = parse_energy_csv(
        "meter_id,hour_start,energy_kwh,reactive_kvarh\nm,2021-06-01T02:00:00+02:00,1.5,0.25\nm,2021-06-01T01:00:00Z,1,\n");
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].hour_start, at("2021-06-01T00:00:00Z"));
    EXPECT_EQ(r.rows[0].reactive_kvarh, 0.25);
    EXPECT_FALSE(r.rows[1].reactive_kvarh);
}

TEST(IngestParse, HeaderOnlyIsEmpty) {
    EXPECT_TRUE(parse_energy_csv("meter_id,hour_start,energy_kwh\n").rows.empty());
    EXPECT_TRUE(parse_voltage_csv("meter_id,timestamp,voltage_v").rows.empty());
}

TEST(IngestParse, BadHeaderThrows) {
    EXPECT_THROW(parse_energy_csv("meter,hour,kwh\n"), ParseError);
    EXPECT_THROW(parse_energy_csv(""), ParseError);
    EXPECT_THROW(parse_voltage_csv("meter_id,hour_start,energy_kwh\n"), ParseError);
}

TEST(IngestParse, BadRowsAreCollectedWithLineNumbers) {
    const auto r = parse_energy_csv(
        "meter_id,hour_start,energy_kwh\n"
        "m,2021-06-01T00:00:00Z,-0.1\n"
        "m,not-a-time,0.1\n"
        "m,2021-06-01T01:00:00Z,abc\n"
        "m,2021-06-01T02:00:00Z\n"
        ",2021-06-01T03:00:00Z,0.1\n"
        "m,2021-06-01T04:00:00Z,0.3\n");
    ASSERT_EQ(r.rows.size(), 1u);
    ASSERT_EQ(r.errors.size(), 5u);
    EXPECT_EQ(r.errors[0].line, 2u);
    EXPECT_NE(r.errors[0].message.find("negative"), std::string::npos);
    EXPECT_EQ(r.errors[4].line, 6u);
}

TEST(IngestParse, VoltageRows) {
    const auto r = parse_voltage_csv(
        "meter_id,timestamp,voltage_v,phase\nmeter_60,2021-06-01T13:47:12Z,228.4,B\nm,2021-06-01T13:47:12Z,0,\n"
        "m,2021-06-01T13:47:12Z,-3,\n");
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].timestamp, at("2021-06-01T13:47:12Z"));
    EXPECT_EQ(r.rows[0].voltage_v, 228.4);
    EXPECT_EQ(r.rows[0].phase, grid::Phase::b);
    EXPECT_EQ(r.errors.size(), 2u);
}

TEST(IngestParse, WriteParseRoundTrip) {
    std::vector<EnergyReading> e{{"a", at("2021-06-01T00:00:00Z"), 1.0 / 3.0, 0.1},
                                 {"b,c", at("2021-06-01T01:00:00Z"), 0.0, std::nullopt}};
    EXPECT_EQ(parse_energy_csv(write_energy_csv(e)).rows, e);
    std::vector<VoltageReading> v{{"a", at("2021-06-01T00:17:03Z"), 229.12345678901234, std::nullopt},
                                  {"a", at("2021-06-01T00:47:03Z"), 231.0, grid::Phase::c}};
    EXPECT_EQ(parse_voltage_csv(write_voltage_csv(v)).rows, v);
}

TEST(IngestClean, DuplicateVoltageKeepsFirst) {
    std::vector<VoltageReading> v{{"m", at("2021-06-01T10:00:00Z"), 229.0, std::nullopt},
                                  {"m", at("2021-06-01T10:00:00Z"), 231.0, std::nullopt}};
    const auto r = clean({}, v);
    ASSERT_EQ(r.series.at("m").voltage.size(), 1u);
    EXPECT_EQ(r.series.at("m").voltage[0].voltage_v, 229.0);
    EXPECT_EQ(r.report.duplicates, 1u);
}

TEST(IngestClean, OutOfRangeAndMisalignedAreDropped) {
    std::vector<VoltageReading> v{{"m", at("2021-06-01T10:00:00Z"), 400.0, std::nullopt},
                                  {"m", at("2021-06-01T11:00:00Z"), 150.0, std::nullopt},
                                  {"m", at("2021-06-01T12:00:00Z"), 299.0, std::nullopt}};
    std::vector<EnergyReading> e{{"m", at("2021-06-01T10:30:00Z"), 0.5, std::nullopt},
                                 {"m", at("2021-06-01T11:00:00Z"), 0.5, std::nullopt}};
    const auto r = clean(e, v);
    EXPECT_EQ(r.report.out_of_range, 2u);
    EXPECT_EQ(r.report.misaligned, 1u);
    EXPECT_EQ(r.series.at("m").voltage.size(), 1u);
    EXPECT_EQ(r.series.at("m").energy.size(), 1u);
    EXPECT_EQ(r.report.retained + r.report.dropped(), e.size() + v.size());
}

TEST(IngestClean, NominalComesFromTheMeterBus) {
    CleaningRules rules;
    rules.nominal_by_meter["hv"] = 400.0;
    std::vector<VoltageReading> v{{"hv", at("2021-06-01T10:00:00Z"), 400.0, std::nullopt},
                                  {"lv", at("2021-06-01T10:00:00Z"), 400.0, std::nullopt}};
    const auto r = clean({}, v, rules);
    EXPECT_EQ(r.report.out_of_range, 1u);
    EXPECT_TRUE(r.series.count("hv"));
}

TEST(IngestClean, FiveMissingDaysMakeOneGap) {
    std::vector<VoltageReading> v;
    const auto first = ymd("2021-03-01");
    for (int d = 0; d < 30; ++d) {
        if (d >= 10 && d < 15) {
            continue;
        }
        v.push_back({"m", sys_seconds{first + days{d}} + hours{12}, 230.0, std::nullopt});
    }
    const auto r = clean({}, v);
    ASSERT_EQ(r.report.gaps.size(), 1u);
    EXPECT_EQ(r.report.gaps[0], (Gap{"m", Stream::voltage, first + days{10}, first + days{15}}));
}

TEST(IngestClean, SingleMissingDayIsBelowThreshold) {
    std::vector<EnergyReading> e;
    const auto first = ymd("2021-03-01");
    for (int d : {0, 1, 3, 4}) {
        e.push_back({"m", sys_seconds{first + days{d}}, 1.0, std::nullopt});
    }
    EXPECT_TRUE(clean(e, {}).report.gaps.empty());
    CleaningRules strict;
    strict.gap_min_days = 1;
    EXPECT_EQ(clean(e, {}, strict).report.gaps.size(), 1u);
}

TEST(IngestClean, MergeSumsCounts) {
    CleaningReport a{1, 2, 3, 4, 5, 6, {}};
    CleaningReport b{10, 20, 30, 40, 50, 60, {Gap{"m", Stream::energy, ymd("2021-01-01"), ymd("2021-01-05")}}};
    a.merge(b);
    EXPECT_EQ(a.energy_input, 11u);
    EXPECT_EQ(a.misaligned, 66u);
    EXPECT_EQ(a.gaps.size(), 1u);
    EXPECT_EQ(a.dropped(), 44u + 55u + 66u);
}

TEST(IngestPower, UnitIdentityAndPowerFactor) {
    MeterSeries s;
    s.energy = {{"m", at("2021-06-01T00:00:00Z"), 0.42, std::nullopt},
                {"m", at("2021-06-01T01:00:00Z"), 1.0, std::nullopt},
                {"m", at("2021-06-01T02:00:00Z"), 1.0, 0.7}};
    const auto p = hourly_power(s, 0.95);
    EXPECT_EQ(p.at(at("2021-06-01T00:00:00Z")).p_kw, 0.42);
    // tan(acos(0.95)) = sqrt(1 - 0.95^2) / 0.95
    EXPECT_NEAR(p.at(at("2021-06-01T01:00:00Z")).q_kvar, std::sqrt(1 - 0.95 * 0.95) / 0.95, 1e-12);
    EXPECT_NEAR(p.at(at("2021-06-01T01:00:00Z")).q_kvar, 0.3287, 5e-5);
    EXPECT_EQ(p.at(at("2021-06-01T02:00:00Z")).q_kvar, 0.7);
    EXPECT_EQ(hourly_power(s, 1.0).at(at("2021-06-01T01:00:00Z")).q_kvar, 0.0);
    EXPECT_THROW(hourly_power(s, 0.0), Error);
}

namespace {

struct Raw {
    std::vector<EnergyReading> energy;
    std::vector<VoltageReading> voltage;
};

// Messy streams: duplicates, shuffled order, off-hour energy rows,
// implausible voltages and multi-day holes.
Raw random_raw(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> hour(0, 24 * 20 - 1);
    Raw raw;
    const auto t0 = at("2021-02-01T00:00:00Z");
    for (int m = 0; m < 4; ++m) {
        const std::string id = "m" + std::to_string(m);
        const int hole = hour(rng);
        for (int k = 0; k < 200; ++k) {
            int h = hour(rng);
            if (h >= hole && h < hole + 24 * 3) {
                continue;
            }
            const auto base = t0 + hours{h};
            const auto shift = u(rng) < 0.1 ? minutes{30} : minutes{0};
            raw.energy.push_back({id, base + shift, 2.0 * u(rng), std::nullopt});
            if (u(rng) < 0.1) {
                raw.energy.push_back(raw.energy.back());
            }
            const double v = u(rng) < 0.05 ? 500.0 : 200.0 + 60.0 * u(rng);
            raw.voltage.push_back({id, base + seconds{static_cast<int>(3600 * u(rng))}, v, std::nullopt});
            if (u(rng) < 0.1) {
                raw.voltage.push_back(raw.voltage.back());
            }
        }
    }
    std::shuffle(raw.energy.begin(), raw.energy.end(), rng);
    std::shuffle(raw.voltage.begin(), raw.voltage.end(), rng);
    return raw;
}

}  // namespace

// Properties on random messy input: rows are conserved, the output is
// strictly ordered, never invents readings, hourly power is hour-aligned
// with at most 24 entries per day, and cleaning is idempotent.
TEST(IngestProperty, CleanInvariants) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 40; ++i) {
        const auto raw = random_raw(rng);
        const auto r = clean(raw.energy, raw.voltage);
        EXPECT_EQ(r.report.retained + r.report.dropped(), raw.energy.size() + raw.voltage.size());

        std::set<std::pair<std::string, Timestamp>> in_e, in_v;
        for (const auto& x : raw.energy) in_e.insert({x.meter_id, x.hour_start});
        for (const auto& x : raw.voltage) in_v.insert({x.meter_id, x.timestamp});

        for (const auto& [id, s] : r.series) {
            for (std::size_t k = 0; k < s.energy.size(); ++k) {
                EXPECT_TRUE(in_e.count({id, s.energy[k].hour_start}));
                if (k) EXPECT_LT(s.energy[k - 1].hour_start, s.energy[k].hour_start);
            }
            for (std::size_t k = 0; k < s.voltage.size(); ++k) {
                EXPECT_TRUE(in_v.count({id, s.voltage[k].timestamp}));
                if (k) EXPECT_LT(s.voltage[k - 1].timestamp, s.voltage[k].timestamp);
            }
            std::map<Date, int> per_day;
            for (const auto& [t, p] : hourly_power(s)) {
                EXPECT_EQ(t.time_since_epoch().count() % 3600, 0);
                ++per_day[floor<days>(t)];
            }
            for (const auto& [d, n] : per_day) EXPECT_LE(n, 24);
        }

        const auto [e2, v2] = flatten(r.series);
        const auto again = clean(e2, v2);
        ASSERT_EQ(again.series.size(), r.series.size());
        for (const auto& [id, s] : r.series) {
            EXPECT_EQ(again.series.at(id).energy, s.energy);
            EXPECT_EQ(again.series.at(id).voltage, s.voltage);
        }
        EXPECT_EQ(again.report.gaps, r.report.gaps);
        EXPECT_EQ(again.report.dropped(), 0u);
    }
}

// Property: cleaning meters separately and merging the reports gives the
// same counts as cleaning everything at once.
TEST(IngestProperty, ReportsMergeAcrossMeters) {
    std::mt19937_64 rng(23);
    const auto raw = random_raw(rng);
    const auto whole = clean(raw.energy, raw.voltage).report;
    CleaningReport merged;
    for (int m = 0; m < 4; ++m) {
        const std::string id = "m" + std::to_string(m);
        Raw part;
        for (const auto& x : raw.energy) if (x.meter_id == id) part.energy.push_back(x);
        for (const auto& x : raw.voltage) if (x.meter_id == id) part.voltage.push_back(x);
        merged.merge(clean(part.energy, part.voltage).report);
    }
    EXPECT_EQ(merged, whole);
}
