#include "phasebal/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "phasebal/error.hpp"

namespace phasebal {

namespace {

const std::vector<std::string> kRequired{"timestamp", "p_a_kw", "p_b_kw", "p_c_kw"};
const std::vector<std::string> kReactive{"q_a_kvar", "q_b_kvar", "q_c_kvar"};
const std::string kNeutralColumn = "i_n_a";

[[noreturn]] void schema_error(const std::string& origin, const std::string& what, const std::string& subject) {
    throw Error(ErrorCode::SchemaMismatch, origin + ": " + what, subject);
}

double parse_number(const std::string& text, const std::string& origin, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(value)) {
        schema_error(origin, "row " + std::to_string(row + 1) + ", column '" + column + "': '" + text + "' is not a number",
                 column);
    }
    return value;
}

// Seconds since the epoch and hour of day for an ISO 8601 local time, or
// the hour count itself for a bare number.
std::pair<double, int> parse_timestamp(const std::string& text, const std::string& origin, std::size_t row) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    char sep = 0;
    int consumed = 0;
    const int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
    if (n == 6 && (sep == 'T' || sep == ' ')) {
        std::string rest = text.substr(static_cast<std::size_t>(consumed));
        if (!rest.empty()) {
            if (rest.front() != ':') schema_error(origin, "row " + std::to_string(row + 1) + ": bad timestamp '" + text + "'", "timestamp");
            s = parse_number(rest.substr(1), origin, row, "timestamp");
        }
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                              std::chrono::day{static_cast<unsigned>(d)}};
        if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0.0 || s >= 61.0) {
            schema_error(origin, "row " + std::to_string(row + 1) + ": bad timestamp '" + text + "'", "timestamp");
        }
        const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
        return {static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + s, h};
    }
    const double hours = parse_number(text, origin, row, "timestamp");
    const double day_hour = std::fmod(std::floor(hours), 24.0);
    return {hours * 3600.0, static_cast<int>(day_hour < 0 ? day_hour + 24.0 : day_hour)};
}

}  // namespace

MeasuredSeries parse_measured_series(const ParsedCsv& csv, const std::string& origin) {
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(csv.header.begin(), csv.header.end(), name);
        if (it == csv.header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - csv.header.begin());
    };
    for (const std::string& col : csv.header) {
        const bool known = std::find(kRequired.begin(), kRequired.end(), col) != kRequired.end() ||
                           std::find(kReactive.begin(), kReactive.end(), col) != kReactive.end() ||
                           col == kNeutralColumn;
        if (!known) schema_error(origin, "unknown column '" + col + "'", col);
        if (std::count(csv.header.begin(), csv.header.end(), col) > 1) schema_error(origin, "duplicate column '" + col + "'", col);
    }
    std::array<std::size_t, 4> req{};
    for (std::size_t i = 0; i < kRequired.size(); ++i) {
        const auto at = find(kRequired[i]);
        if (!at) schema_error(origin, "missing column '" + kRequired[i] + "'", kRequired[i]);
        req[i] = *at;
    }
    std::size_t reactive_present = 0;
    std::array<std::size_t, 3> q_at{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (const auto at = find(kReactive[i])) {
            q_at[i] = *at;
            ++reactive_present;
        }
    }
    if (reactive_present != 0 && reactive_present != 3) {
        schema_error(origin, "reactive power needs all of q_a_kvar, q_b_kvar, q_c_kvar", "q_kvar");
    }
    const auto neutral_at = find(kNeutralColumn);

    MeasuredSeries out;
    if (reactive_present == 3) out.q_kvar.emplace();
    if (neutral_at) out.i_n_a.emplace();
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const auto [t, hour] = parse_timestamp(row[req[0]], origin, r);
        if (!out.t_s.empty() && !(t > out.t_s.back())) {
            throw Error(ErrorCode::NonMonotonicTimestamps,
                        origin + ": row " + std::to_string(r + 1) + " timestamp '" + row[req[0]] +
                            "' does not follow '" + out.timestamps.back() + "'",
                        row[req[0]]);
        }
        out.timestamps.push_back(row[req[0]]);
        out.t_s.push_back(t);
        out.clock_hour.push_back(hour);
        PerPhase p{};
        for (std::size_t i = 0; i < 3; ++i) p[i] = parse_number(row[req[i + 1]], origin, r, kRequired[i + 1]);
        out.p_kw.push_back(p);
        if (out.q_kvar) {
            PerPhase q{};
            for (std::size_t i = 0; i < 3; ++i) q[i] = parse_number(row[q_at[i]], origin, r, kReactive[i]);
            out.q_kvar->push_back(q);
        }
        if (out.i_n_a) out.i_n_a->push_back(parse_number(row[*neutral_at], origin, r, kNeutralColumn));
    }
    return out;
}

IngestReport analyze_series(const MeasuredSeries& series, double v_nominal_ln) {
    if (!(v_nominal_ln > 0.0)) throw Error(ErrorCode::InvalidArgument, "nominal voltage must be positive");
    IngestReport report;
    std::array<HourlySpread, 24> hours{};
    for (std::size_t r = 0; r < series.p_kw.size(); ++r) {
        IngestRow row;
        row.timestamp = series.timestamps[r];
        row.clock_hour = series.clock_hour[r];
        row.p_kw = series.p_kw[r];
        const auto [lo, hi] = std::minmax_element(row.p_kw.begin(), row.p_kw.end());
        row.spread_kw = *hi - *lo;

        PerPhase q{};
        if (series.q_kvar) {
            q = (*series.q_kvar)[r];
            PerPhase pf{};
            for (std::size_t i = 0; i < 3; ++i) {
                const double s = std::hypot(row.p_kw[i], q[i]);
                pf[i] = s > 0.0 ? row.p_kw[i] / s : 1.0;
            }
            row.power_factor = pf;
        }
        Complex sum{};
        for (const Phase p : kPhases) {
            const std::size_t i = index(p);
            const Complex v = std::polar(v_nominal_ln, nominal_angle_rad(p));
            sum += std::conj(Complex{row.p_kw[i], q[i]} * 1000.0 / v);
        }
        row.neutral_proxy_a = std::abs(sum);
        if (series.i_n_a) row.neutral_measured_a = (*series.i_n_a)[r];

        HourlySpread& h = hours[static_cast<std::size_t>(row.clock_hour)];
        h.mean_spread_kw += row.spread_kw;
        h.max_spread_kw = h.samples == 0 ? row.spread_kw : std::max(h.max_spread_kw, row.spread_kw);
        ++h.samples;
        report.rows.push_back(std::move(row));
    }
    for (int hour = 0; hour < 24; ++hour) {
        HourlySpread h = hours[static_cast<std::size_t>(hour)];
        if (h.samples == 0) continue;
        h.hour = hour;
        h.mean_spread_kw /= static_cast<double>(h.samples);
        report.hourly.push_back(h);
    }
    return report;
}

CsvTable ingest_rows_table(const IngestReport& report) {
    CsvTable t({"timestamp", "clock_hour", "p_a_kw", "p_b_kw", "p_c_kw", "spread_kw", "pf_a", "pf_b", "pf_c",
                "neutral_proxy_a", "neutral_measured_a"});
    for (const IngestRow& r : report.rows) {
        std::vector<std::string> cells{r.timestamp, cell(r.clock_hour), cell(r.p_kw[0]), cell(r.p_kw[1]),
                                       cell(r.p_kw[2]), cell(r.spread_kw)};
        for (std::size_t i = 0; i < 3; ++i) cells.push_back(r.power_factor ? cell((*r.power_factor)[i]) : "");
        cells.push_back(cell(r.neutral_proxy_a));
        cells.push_back(r.neutral_measured_a ? cell(*r.neutral_measured_a) : "");
        t.add_row(std::move(cells));
    }
    return t;
}

CsvTable ingest_hourly_table(const IngestReport& report) {
    CsvTable t({"clock_hour", "samples", "mean_spread_kw", "max_spread_kw"});
    for (const HourlySpread& h : report.hourly) {
        t.add_row({cell(h.hour), cell(h.samples), cell(h.mean_spread_kw), cell(h.max_spread_kw)});
    }
    return t;
}

}  // namespace phasebal
