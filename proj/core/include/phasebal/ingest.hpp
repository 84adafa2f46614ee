#pragma once

// Per-phase imbalance statistics for measured substation time series.
//
// Input columns: timestamp, p_a_kw, p_b_kw, p_c_kw, then optionally
// q_a_kvar, q_b_kvar, q_c_kvar (all three or none) and i_n_a. Timestamps are
// either ISO 8601 local times ("2019-06-01T13:15:00", a space also works)
// or plain hours since an arbitrary origin.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "phasebal/csv.hpp"
#include "phasebal/types.hpp"

namespace phasebal {

struct MeasuredSeries {
    std::vector<std::string> timestamps;
    /// Seconds on a common axis, strictly increasing.
    std::vector<double> t_s;
    /// Hour of day 0..23 of each sample.
    std::vector<int> clock_hour;
    std::vector<PerPhase> p_kw;
    std::optional<std::vector<PerPhase>> q_kvar;
    std::optional<std::vector<double>> i_n_a;
};

/// Throws SchemaMismatch for missing/unknown columns or unparsable cells and
/// NonMonotonicTimestamps when a timestamp does not increase.
MeasuredSeries parse_measured_series(const ParsedCsv& csv, const std::string& origin = "<csv>");

struct IngestRow {
    std::string timestamp;
    int clock_hour = 0;
    PerPhase p_kw{};
    double spread_kw = 0.0;
    /// P / |S| per phase, signed with P; absent without Q columns.
    std::optional<PerPhase> power_factor;
    /// |Ia + Ib + Ic| assuming balanced nominal phase-to-neutral voltages.
    double neutral_proxy_a = 0.0;
    std::optional<double> neutral_measured_a;
};

struct HourlySpread {
    int hour = 0;
    std::size_t samples = 0;
    double mean_spread_kw = 0.0;
    double max_spread_kw = 0.0;
};

struct IngestReport {
    std::vector<IngestRow> rows;
    /// Only clock hours that have samples, ascending.
    std::vector<HourlySpread> hourly;
};

IngestReport analyze_series(const MeasuredSeries& series, double v_nominal_ln = 230.0);

CsvTable ingest_rows_table(const IngestReport& report);
CsvTable ingest_hourly_table(const IngestReport& report);

}  // namespace phasebal
