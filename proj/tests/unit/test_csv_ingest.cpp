#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "phasebal/csv.hpp"
#include "phasebal/error.hpp"
#include "phasebal/ingest.hpp"

using namespace phasebal;

namespace {

ErrorCode code_of(const std::string& text) {
    try {
        parse_measured_series(parse_csv(text));
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "accepted:\n" << text;
    return ErrorCode::InvalidArgument;
}

IngestReport analyze(const std::string& text) { return analyze_series(parse_measured_series(parse_csv(text))); }

}  // namespace

TEST(FormatNumber, SeventeenDigitsRoundTrip) {
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1.5), "1.5");
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(-230.0), "-230");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng) * std::pow(10.0, (i % 21) - 10);
        EXPECT_EQ(std::stod(format_number(x)), x);
    }
}

TEST(CsvTable, LayoutAndChecks) {
    CsvTable t({"a", "b"});
    t.add_row({"1", "x"});
    t.add_row({cell(2.5), cell(true)});
    EXPECT_EQ(t.str(), "a,b\n1,x\n2.5,1\n");
    EXPECT_THROW(t.add_row({"1"}), Error);
    EXPECT_THROW(t.add_row({"1,2", "3"}), Error);
    EXPECT_THROW(t.add_row({"1\n", "3"}), Error);
}

TEST(CsvParse, ToleratesCrlfAndMissingFinalNewline) {
    const ParsedCsv p = parse_csv("x,y\r\n1,2\r\n\n3,4");
    EXPECT_EQ(p.header, (std::vector<std::string>{"x", "y"}));
    ASSERT_EQ(p.rows.size(), 2u);
    EXPECT_EQ(p.rows[1], (std::vector<std::string>{"3", "4"}));
    try {
        parse_csv("x,y\n1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    }
    EXPECT_THROW(parse_csv(""), Error);
}

TEST(CsvFiles, AtomicWriteReplacesWholeFile) {
    const auto dir = std::filesystem::temp_directory_path() / "phasebal_csv_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "t.csv";
    write_file_atomic(path, "old,contents\n");
    CsvTable t({"k"});
    t.add_row({"v"});
    write_csv(path, t);
    EXPECT_EQ(read_csv(path).rows.at(0).at(0), "v");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) EXPECT_EQ(entry.path().filename(), "t.csv");
    try {
        write_file_atomic(dir / "t.csv" / "x.csv", "a\n");  // parent is a file
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
    try {
        read_csv(dir / "absent.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
    std::filesystem::remove_all(dir);
}

TEST(Ingest, IdenticalPhasesHaveNoSpread) {
    const IngestReport r = analyze(
        "timestamp,p_a_kw,p_b_kw,p_c_kw\n"
        "0,3,3,3\n1,7.25,7.25,7.25\n2,-4,-4,-4\n");
    for (const IngestRow& row : r.rows) {
        EXPECT_EQ(row.spread_kw, 0.0);
        EXPECT_LT(row.neutral_proxy_a, 1e-9);
        EXPECT_FALSE(row.power_factor);
    }
}

TEST(Ingest, SingleRowSpreadAndNeutralProxy) {
    const IngestReport r = analyze("timestamp,p_a_kw,p_b_kw,p_c_kw\n2019-06-01T19:00:00,20,10,10\n");
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].spread_kw, 10.0);
    EXPECT_EQ(r.rows[0].clock_hour, 19);
    // Only the 10 kW excess on phase A returns through the neutral.
    EXPECT_NEAR(r.rows[0].neutral_proxy_a, 10000.0 / 230.0, 1e-9);
    ASSERT_EQ(r.hourly.size(), 1u);
    EXPECT_EQ(r.hourly[0].hour, 19);
    EXPECT_EQ(r.hourly[0].max_spread_kw, 10.0);
}

TEST(Ingest, PowerFactorAndMeasuredNeutral) {
    const IngestReport r = analyze(
        "timestamp,p_a_kw,p_b_kw,p_c_kw,q_a_kvar,q_b_kvar,q_c_kvar,i_n_a\n"
        "2019-06-01 10:00,3,-4,0,4,3,0,12.5\n");
    ASSERT_TRUE(r.rows[0].power_factor);
    EXPECT_NEAR((*r.rows[0].power_factor)[0], 0.6, 1e-15);
    EXPECT_NEAR((*r.rows[0].power_factor)[1], -0.8, 1e-15);
    EXPECT_EQ((*r.rows[0].power_factor)[2], 1.0);
    ASSERT_TRUE(r.rows[0].neutral_measured_a);
    EXPECT_EQ(*r.rows[0].neutral_measured_a, 12.5);

    // Neutral proxy against a direct sum of phase currents.
    const double v = 230.0, pi = std::acos(-1.0);
    std::complex<double> sum;
    const double p[] = {3, -4, 0}, q[] = {4, 3, 0};
    for (int k = 0; k < 3; ++k) {
        const std::complex<double> vk = std::polar(v, -2.0 * pi * k / 3.0);
        sum += std::conj(std::complex<double>(p[k], q[k]) * 1000.0 / vk);
    }
    EXPECT_NEAR(r.rows[0].neutral_proxy_a, std::abs(sum), 1e-9);
}

TEST(Ingest, EveningSpreadPeaksAfterMiddaySolarDip) {
    // 15-minute samples. Phase A carries rooftop PV that cancels most of
    // its midday load; evening EV charging lands on phase A as well.
    std::ostringstream csv;
    csv << "timestamp,p_a_kw,p_b_kw,p_c_kw\n";
    std::vector<double> by_hour(24, 0.0);
    for (int h = 0; h < 24; ++h) {
        for (int m = 0; m < 60; m += 15) {
            double a = 10.0, b = 10.0, c = 10.0;
            if (h >= 10 && h < 15) a -= 4.0;   // solar dip: spread 4
            if (h >= 18 && h < 23) a += 9.0;   // evening charging: spread 9
            char stamp[32];
            std::snprintf(stamp, sizeof stamp, "2019-06-01T%02d:%02d:00", h, m);
            csv << stamp << ',' << a << ',' << b << ',' << c << '\n';
            by_hour[static_cast<std::size_t>(h)] = std::max({a, b, c}) - std::min({a, b, c});
        }
    }
    const IngestReport r = analyze(csv.str());
    ASSERT_EQ(r.rows.size(), 96u);
    ASSERT_EQ(r.hourly.size(), 24u);
    std::size_t peak = 0;
    for (std::size_t h = 0; h < 24; ++h) {
        EXPECT_EQ(r.hourly[h].samples, 4u);
        EXPECT_DOUBLE_EQ(r.hourly[h].mean_spread_kw, by_hour[h]);
        if (r.hourly[h].mean_spread_kw > r.hourly[peak].mean_spread_kw) peak = h;
    }
    EXPECT_GE(peak, 18u);
    EXPECT_LT(peak, 23u);
}

TEST(Ingest, SchemaErrors) {
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw\n0,1,1\n"), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw,p_d_kw\n0,1,1,1,1\n"), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw,q_a_kvar\n0,1,1,1,1\n"), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw\n0,1,x,1\n"), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw\nyesterday,1,1,1\n"), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_a_kw,p_b_kw,p_c_kw\n0,1,1,1,1\n"), ErrorCode::SchemaMismatch);
}

TEST(Ingest, TimestampsMustIncrease) {
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw\n1,1,1,1\n1,1,1,1\n"), ErrorCode::NonMonotonicTimestamps);
    EXPECT_EQ(code_of("timestamp,p_a_kw,p_b_kw,p_c_kw\n"
                      "2019-06-01T10:00:00,1,1,1\n2019-06-01T09:59:59,1,1,1\n"),
              ErrorCode::NonMonotonicTimestamps);
    // Day rollover keeps increasing.
    const IngestReport r = analyze("timestamp,p_a_kw,p_b_kw,p_c_kw\n"
                                   "2019-06-30T23:45,1,1,1\n2019-07-01T00:00,1,1,1\n");
    EXPECT_EQ(r.rows[1].clock_hour, 0);
}

TEST(Ingest, ReportTablesAreStable) {
    const IngestReport r = analyze("timestamp,p_a_kw,p_b_kw,p_c_kw\n5,2,1,1\n");
    EXPECT_EQ(ingest_rows_table(r).header(),
              (std::vector<std::string>{"timestamp", "clock_hour", "p_a_kw", "p_b_kw", "p_c_kw", "spread_kw", "pf_a",
                                        "pf_b", "pf_c", "neutral_proxy_a", "neutral_measured_a"}));
    EXPECT_EQ(ingest_hourly_table(r).str(), "clock_hour,samples,mean_spread_kw,max_spread_kw\n5,1,1,1\n");
}
