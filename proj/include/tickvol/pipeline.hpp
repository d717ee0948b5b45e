#pragma once

// Tick ingestion, cleaning, last-tick aggregation and change summaries.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <zlib.h>

#include "tickvol/calendar.hpp"
#include "tickvol/error.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

enum class PriceUnit { dollars, cents };

inline PriceUnit parse_price_unit(std::string_view s) {
    if (s == "dollars") return PriceUnit::dollars;
    if (s == "cents") return PriceUnit::cents;
    throw InputError("price unit must be 'dollars' or 'cents', got '" + std::string(s) + "'");
}

/// Column mapping for tick CSV files. Columns are header names, or 0-based
/// indices written as integers.
struct CsvSchema {
    std::string timestamp = "timestamp";
    std::string price = "price";
    std::string date;              // optional column holding YYYY-MM-DD for time-only stamps
    PriceUnit unit = PriceUnit::dollars;
    char delimiter = ',';
    std::optional<bool> header;    // empty: detect from the first line
    std::int32_t default_day = 0;  // date of time-only stamps without a date column
};

struct IngestResult {
    TickSeries ticks;
    std::size_t rows = 0;         // data rows read
    std::size_t empty_price = 0;  // rows without a recorded price
    std::size_t malformed = 0;    // rows that did not parse
    std::optional<std::size_t> first_malformed_line;
    bool header = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// HH:MM[:SS[.fff...]] to milliseconds since midnight; digits past the
/// millisecond are truncated.
inline std::optional<std::int64_t> parse_clock(std::string_view s) {
    if (s.size() < 5 || s[2] != ':') return std::nullopt;
    const auto h = parse_int<int>(s.substr(0, 2));
    const auto m = parse_int<int>(s.substr(3, 2));
    if (!h || !m || !all_digits(s.substr(0, 2)) || !all_digits(s.substr(3, 2)) || *h > 24 || *m > 59)
        return std::nullopt;
    std::int64_t ms = (*h * 60LL + *m) * 60'000LL;
    s.remove_prefix(5);
    if (s.empty()) return ms;
    if (s.front() != ':' || s.size() < 3 || !all_digits(s.substr(1, 2))) return std::nullopt;
    const int sec = (s[1] - '0') * 10 + (s[2] - '0');
    if (sec > 60) return std::nullopt;
    ms += sec * 1000LL;
    s.remove_prefix(3);
    if (s.empty()) return ms;
    if (s.front() != '.' || s.size() < 2 || !all_digits(s.substr(1))) return std::nullopt;
    const std::string_view frac = s.substr(1);
    int scale = 100;
    for (std::size_t i = 0; i < frac.size() && i < 3; ++i, scale /= 10) ms += (frac[i] - '0') * scale;
    return ms;
}

// Epoch milliseconds, ISO 8601 date-time (with Z, +-HH:MM or no offset), or
// a bare clock time on `day`. Stamps without an offset are exchange-local.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s, std::optional<std::int32_t> day) {
    if (s.empty()) return std::nullopt;
    if (s.size() >= 10 && (all_digits(s) || (s.front() == '-' && all_digits(s.substr(1)))))
        return parse_int<std::int64_t>(s);
    if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
        std::int32_t d;
        try {
            d = calendar::parse_date(s.substr(0, 10));
        } catch (const InputError&) {
            return std::nullopt;
        }
        if (s.size() == 10) return calendar::from_exchange_local(d, 0);
        if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
        std::string_view rest = s.substr(11);
        std::optional<int> offset_min;
        if (!rest.empty() && (rest.back() == 'Z' || rest.back() == 'z')) {
            offset_min = 0;
            rest.remove_suffix(1);
        } else {
            const std::size_t sign = rest.find_last_of("+-");
            if (sign != std::string_view::npos && sign >= 5) {
                std::string_view off = rest.substr(sign + 1);
                int oh = 0, om = 0;
                if (off.size() == 5 && off[2] == ':' && all_digits(off.substr(0, 2)) && all_digits(off.substr(3))) {
                    oh = *parse_int<int>(off.substr(0, 2));
                    om = *parse_int<int>(off.substr(3));
                } else if (off.size() == 4 && all_digits(off)) {
                    oh = *parse_int<int>(off.substr(0, 2));
                    om = *parse_int<int>(off.substr(2));
                } else if (off.size() == 2 && all_digits(off)) {
                    oh = *parse_int<int>(off);
                } else {
                    return std::nullopt;
                }
                offset_min = (rest[sign] == '-' ? -1 : 1) * (oh * 60 + om);
                rest = rest.substr(0, sign);
            }
        }
        const auto ms = parse_clock(rest);
        if (!ms) return std::nullopt;
        if (!offset_min) return calendar::from_exchange_local(d, *ms);
        return d * calendar::kMsPerDay + *ms - *offset_min * 60'000LL;
    }
    const auto ms = parse_clock(s);
    if (!ms || !day) return std::nullopt;
    return calendar::from_exchange_local(*day, *ms);
}

/// Decimal string to integer hundredths (or units), rounding half away from zero.
inline std::optional<std::int64_t> parse_price(std::string_view s, PriceUnit unit) {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    const std::size_t dot = s.find('.');
    const std::string_view ip = s.substr(0, dot);
    const std::string_view fp = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
        return std::nullopt;
    if (ip.size() > 15) return std::nullopt;
    std::int64_t v = ip.empty() ? 0 : *parse_int<std::int64_t>(ip);
    std::size_t keep = unit == PriceUnit::dollars ? 2 : 0;
    for (std::size_t i = 0; i < keep; ++i) v = v * 10 + (i < fp.size() ? fp[i] - '0' : 0);
    if (fp.size() > keep && fp[keep] >= '5') ++v;
    return neg ? -v : v;
}

inline std::string read_all(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw InputError("cannot open '" + path + "'");
    std::string data;
    char buf[1 << 16];
    for (;;) {
        const int got = gzread(f, buf, sizeof buf);
        if (got < 0) {
            gzclose(f);
            throw InputError("cannot read '" + path + "'");
        }
        if (got == 0) break;
        data.append(buf, static_cast<std::size_t>(got));
    }
    gzclose(f);
    return data;
}

inline std::optional<std::size_t> column_index(const std::string& spec, const std::vector<std::string_view>& header) {
    if (spec.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == spec) return i;
    if (auto idx = parse_int<std::size_t>(spec)) return *idx;
    return std::nullopt;
}

}  // namespace detail

/// Parses tick CSV text. Rows are sorted stably by timestamp.
inline IngestResult parse_ticks(std::string_view text, const CsvSchema& schema) {
    IngestResult r;
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    {
        std::size_t start = 0, no = 0;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            ++no;
            std::string_view line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!detail::trim(line).empty()) lines.emplace_back(no, line);
            start = end + 1;
        }
    }
    if (lines.empty()) throw InputError("input contains no rows");

    std::size_t first = 0;
    std::vector<std::string_view> header_fields;
    const auto first_fields = detail::split(lines.front().second, schema.delimiter);
    bool header = schema.header.value_or(false);
    if (!schema.header) {
        // A header row is one whose named timestamp column exists, or whose
        // first field is not a timestamp.
        header = std::find(first_fields.begin(), first_fields.end(), schema.timestamp) != first_fields.end() ||
                 !detail::parse_timestamp(first_fields.front(), schema.default_day);
    }
    if (header) {
        header_fields = first_fields;
        first = 1;
    }
    r.header = header;
    const auto ts_col = detail::column_index(schema.timestamp, header_fields).value_or(0);
    const auto px_col = detail::column_index(schema.price, header_fields).value_or(1);
    const auto date_col = detail::column_index(schema.date, header_fields);
    if (header) {
        auto known = [&](const std::string& spec) {
            return spec.empty() || detail::column_index(spec, header_fields).has_value();
        };
        if (!known(schema.timestamp) || !known(schema.price) || !known(schema.date))
            throw InputError("schema columns not found in header", lines.front().first);
    }

    struct Row {
        std::int64_t ts, price;
    };
    std::vector<Row> rows;
    rows.reserve(lines.size());
    for (std::size_t i = first; i < lines.size(); ++i) {
        ++r.rows;
        const auto f = detail::split(lines[i].second, schema.delimiter);
        auto bad = [&] {
            ++r.malformed;
            if (!r.first_malformed_line) r.first_malformed_line = lines[i].first;
        };
        if (ts_col >= f.size()) {
            bad();
            continue;
        }
        std::optional<std::int32_t> day = schema.default_day;
        if (date_col) {
            if (*date_col >= f.size()) {
                bad();
                continue;
            }
            try {
                day = calendar::parse_date(f[*date_col]);
            } catch (const InputError&) {
                bad();
                continue;
            }
        }
        const auto ts = detail::parse_timestamp(f[ts_col], day);
        if (!ts) {
            bad();
            continue;
        }
        if (px_col >= f.size() || f[px_col].empty() || f[px_col] == "NA" || f[px_col] == "NaN") {
            ++r.empty_price;
            continue;
        }
        const auto px = detail::parse_price(f[px_col], schema.unit);
        if (!px) {
            bad();
            continue;
        }
        rows.push_back({*ts, *px});
    }
    if (rows.empty() && r.malformed > 0)
        throw InputError("no parseable rows", r.first_malformed_line);
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (const auto& row : rows) {
        const auto lt = calendar::to_exchange_local(row.ts);
        r.ticks.push_back(row.ts, row.price, lt.day, lt.ms);
    }
    return r;
}

/// Reads a tick CSV file, gzip-compressed or plain.
inline IngestResult ingest_csv(const std::string& path, const CsvSchema& schema = {}) {
    return parse_ticks(detail::read_all(path), schema);
}

/// Writes ticks as `timestamp,price` with ISO 8601 exchange-local stamps, plus
/// a trailing date column when `date_name` is given.
inline void write_ticks_csv(std::ostream& os, const TickSeries& t, PriceUnit unit = PriceUnit::dollars,
                            const std::string& ts_name = "timestamp", const std::string& px_name = "price",
                            const std::string& date_name = "") {
    os << ts_name << ',' << px_name;
    if (!date_name.empty()) os << ',' << date_name;
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto lt = calendar::to_exchange_local(t.timestamps[i]);
        const int off = calendar::eastern_offset_hours(t.timestamps[i]);
        const std::int64_t ms = lt.ms;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lld.%03lld%c%02d:00", calendar::format_date(lt.day).c_str(),
                      static_cast<long long>(ms / 3'600'000), static_cast<long long>(ms / 60'000 % 60),
                      static_cast<long long>(ms / 1000 % 60), static_cast<long long>(ms % 1000),
                      off < 0 ? '-' : '+', std::abs(off));
        os << buf << ',';
        const std::int64_t p = t.prices[i];
        if (unit == PriceUnit::cents) {
            os << p;
        } else {
            std::snprintf(buf, sizeof buf, "%s%lld.%02lld", p < 0 ? "-" : "", static_cast<long long>(std::abs(p) / 100),
                          static_cast<long long>(std::abs(p) % 100));
            os << buf;
        }
        if (!date_name.empty()) os << ',' << calendar::format_date(lt.day);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

struct CleanOptions {
    double mad_multiple = 10.0;
    std::size_t window = 201;  // centered, including the point under test
    bool median = false;       // median center and median absolute deviation
};

struct CleaningReport {
    std::size_t input = 0;
    std::size_t out_of_hours = 0;
    std::size_t nonpositive_price = 0;
    std::size_t outliers = 0;
    std::size_t output = 0;
    std::size_t outlier_passes = 0;
    std::vector<std::string> warnings;
};

struct CleanResult {
    TickSeries ticks;
    CleaningReport report;
};

namespace detail {

inline double median_of(std::vector<double>& v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)));
}

// Flags outliers among the prices of one day.
inline std::vector<bool> outlier_flags(std::span<const std::int64_t> p, const CleanOptions& opt) {
    const std::size_t n = p.size();
    std::vector<bool> flag(n, false);
    if (n < 2) return flag;
    const std::size_t half = opt.window / 2;
    const bool full_day = n < opt.window;
    std::vector<double> nb, dev;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = full_day ? 0 : (i >= half ? i - half : 0);
        const std::size_t hi = full_day ? n - 1 : std::min(n - 1, i + half);
        nb.clear();
        for (std::size_t j = lo; j <= hi; ++j)
            if (j != i) nb.push_back(static_cast<double>(p[j]));
        double center, spread;
        if (opt.median) {
            dev = nb;
            center = median_of(dev);
            for (std::size_t k = 0; k < nb.size(); ++k) dev[k] = std::abs(nb[k] - center);
            spread = median_of(dev);
        } else {
            center = std::accumulate(nb.begin(), nb.end(), 0.0) / static_cast<double>(nb.size());
            spread = 0.0;
            for (double v : nb) spread += std::abs(v - center);
            spread /= static_cast<double>(nb.size());
        }
        flag[i] = std::abs(static_cast<double>(p[i]) - center) > opt.mad_multiple * spread;
    }
    return flag;
}

inline TickSeries select(const TickSeries& t, const std::vector<bool>& keep) {
    TickSeries out;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (keep[i]) out.push_back(t.timestamps[i], t.prices[i], t.day[i], t.local_ms[i]);
    return out;
}

// [begin, end) index ranges of consecutive equal days.
inline std::vector<std::pair<std::size_t, std::size_t>> day_ranges(const TickSeries& t) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t b = 0;
    for (std::size_t i = 1; i <= t.size(); ++i) {
        if (i == t.size() || t.day[i] != t.day[b]) {
            out.emplace_back(b, i);
            b = i;
        }
    }
    return out;
}

}  // namespace detail

/// Drops ticks outside 09:30:00-16:00:00 exchange time, ticks with
/// nonpositive prices, and outliers relative to their neighbors. The outlier
/// rule is repeated on the survivors until nothing more is dropped, which
/// makes cleaning idempotent.
inline CleanResult clean(const TickSeries& ticks, const CleanOptions& opt = {}) {
    if (ticks.size() == 0) throw InputError("no ticks to clean");
    if (opt.window < 3 || opt.window % 2 == 0) throw DomainError("outlier window must be odd and at least 3");
    CleanResult r;
    r.report.input = ticks.size();
    std::vector<bool> keep(ticks.size(), true);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        if (ticks.local_ms[i] < kSessionOpenMs || ticks.local_ms[i] > kSessionCloseMs) {
            keep[i] = false;
            ++r.report.out_of_hours;
        } else if (ticks.prices[i] <= 0) {
            keep[i] = false;
            ++r.report.nonpositive_price;
        }
    }
    TickSeries cur = detail::select(ticks, keep);
    for (const auto& [b, e] : detail::day_ranges(cur)) {
        if (e - b < opt.window)
            r.report.warnings.push_back(calendar::format_date(cur.day[b]) + ": " + std::to_string(e - b) +
                                        " ticks, outlier rule used the whole day as window");
    }
    for (;;) {
        std::vector<bool> k(cur.size(), true);
        std::size_t dropped = 0;
        for (const auto& [b, e] : detail::day_ranges(cur)) {
            const auto flags = detail::outlier_flags(std::span(cur.prices).subspan(b, e - b), opt);
            for (std::size_t i = 0; i < flags.size(); ++i)
                if (flags[i]) {
                    k[b + i] = false;
                    ++dropped;
                }
        }
        ++r.report.outlier_passes;
        if (dropped == 0) break;
        r.report.outliers += dropped;
        cur = detail::select(cur, k);
    }
    r.report.output = cur.size();
    r.ticks = std::move(cur);
    return r;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Last-tick prices of one day on the fixed grid. `offset_ms` counts from 09:30:00.
struct GridPrices {
    std::int32_t day = 0;
    std::vector<std::int64_t> offset_ms;
    std::vector<std::int64_t> prices;
};

inline std::int64_t frequency_ms(double frequency) {
    if (!(frequency > 0.0) || !std::isfinite(frequency)) throw DomainError("frequency must be positive");
    const double ms = frequency * 1000.0;
    const auto r = static_cast<std::int64_t>(std::llround(ms));
    if (r < 1 || std::abs(ms - static_cast<double>(r)) > 1e-6 * std::max(1.0, ms))
        throw DomainError("frequency must be a whole number of milliseconds");
    return r;
}

/// Grid prices per day. Grid points before the day's first trade are dropped.
inline std::vector<GridPrices> grid_prices(const TickSeries& ticks, double frequency) {
    const std::int64_t step = frequency_ms(frequency);
    const std::int64_t span = kSessionCloseMs - kSessionOpenMs;
    std::vector<GridPrices> out;
    for (const auto& [b, e] : detail::day_ranges(ticks)) {
        GridPrices g;
        g.day = ticks.day[b];
        std::size_t i = b;
        std::optional<std::int64_t> last;
        for (std::int64_t off = 0; off <= span; off += step) {
            const std::int64_t at = kSessionOpenMs + off;
            while (i < e && ticks.local_ms[i] <= at) last = ticks.prices[i++];
            if (!last) continue;
            g.offset_ms.push_back(off);
            g.prices.push_back(*last);
        }
        out.push_back(std::move(g));
    }
    return out;
}

struct AggregateResult {
    std::vector<ChangeSeries> days;
    std::vector<std::string> warnings;
    std::size_t skipped_days = 0;
};

/// Changes between consecutive grid prices, one series per day. Each change is
/// stamped with the later grid point. Days with fewer than two grid points are
/// skipped with a warning.
inline AggregateResult aggregate_last_tick(const TickSeries& ticks, double frequency) {
    for (std::size_t i = 1; i < ticks.size(); ++i)
        if (ticks.timestamps[i] < ticks.timestamps[i - 1]) throw DomainError("ticks are not sorted by time");
    AggregateResult r;
    for (const auto& g : grid_prices(ticks, frequency)) {
        if (g.prices.size() < 2) {
            ++r.skipped_days;
            r.warnings.push_back(calendar::format_date(g.day) + ": fewer than two grid points, day skipped");
            continue;
        }
        ChangeSeries c;
        c.day = g.day;
        c.frequency = frequency;
        for (std::size_t k = 1; k < g.prices.size(); ++k)
            c.push_back(static_cast<int>(g.prices[k] - g.prices[k - 1]), static_cast<double>(g.offset_ms[k]) / 1000.0);
        r.days.push_back(std::move(c));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Summaries and change files
// ---------------------------------------------------------------------------

struct ChangeSummary {
    std::size_t n = 0;
    std::map<int, std::size_t> counts;
    double zero_share = 0.0;
    double within10_share = 0.0;  // share with |y| <= 10

    double share(int k) const {
        const auto it = counts.find(k);
        return it == counts.end() || n == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
    }
};

inline ChangeSummary summarize_changes(std::span<const ChangeSeries> days) {
    ChangeSummary s;
    std::size_t within = 0;
    for (const auto& d : days)
        for (int v : d.changes) {
            ++s.counts[v];
            ++s.n;
            if (v >= -10 && v <= 10) ++within;
        }
    if (s.n == 0) throw DomainError("no changes to summarize");
    s.zero_share = s.share(0);
    s.within10_share = static_cast<double>(within) / static_cast<double>(s.n);
    return s;
}

inline ChangeSummary summarize_changes(const ChangeSeries& y) {
    return summarize_changes(std::span<const ChangeSeries>(&y, 1));
}

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// `day,time_of_day_s,change_cents` rows.
inline void write_changes_csv(std::ostream& os, std::span<const ChangeSeries> days) {
    os << "day,time_of_day_s,change_cents\n";
    for (const auto& d : days) {
        const std::string date = calendar::format_date(d.day);
        for (std::size_t i = 0; i < d.size(); ++i)
            os << date << ',' << format_double(d.time_of_day[i]) << ',' << d.changes[i] << '\n';
    }
}

/// Reads change rows back, one series per day in order of first appearance.
/// The frequency of each day is its smallest spacing of time stamps, unless
/// `frequency` is given.
inline std::vector<ChangeSeries> parse_changes(std::string_view text, std::optional<double> frequency = std::nullopt) {
    std::vector<ChangeSeries> days;
    std::map<std::int32_t, std::size_t> index;
    std::size_t start = 0, no = 0;
    bool seen_header = false;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++no;
        const std::string_view line = detail::trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (!seen_header && !f.empty() && f[0] == "day") {
            seen_header = true;
            continue;
        }
        seen_header = true;
        if (f.size() != 3) throw InputError("expected day,time_of_day_s,change_cents", no);
        std::int32_t day;
        try {
            day = calendar::parse_date(f[0]);
        } catch (const InputError&) {
            throw InputError("bad day '" + std::string(f[0]) + "'", no);
        }
        double tod = 0.0;
        const auto [p, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), tod);
        const auto change = detail::parse_int<int>(f[2]);
        if (ec != std::errc() || p != f[1].data() + f[1].size() || !change || !(tod >= 0.0 && tod <= kSessionSeconds))
            throw InputError("malformed change row", no);
        auto it = index.find(day);
        if (it == index.end()) {
            it = index.emplace(day, days.size()).first;
            days.emplace_back();
            days.back().day = day;
        }
        ChangeSeries& d = days[it->second];
        if (!d.empty() && !(tod > d.time_of_day.back()))
            throw InputError("time_of_day not increasing within a day", no);
        d.push_back(*change, tod);
    }
    if (days.empty()) throw InputError("no change rows");
    for (auto& d : days) {
        if (frequency) {
            d.frequency = *frequency;
            continue;
        }
        double f = d.time_of_day.front() > 0.0 ? d.time_of_day.front() : kSessionSeconds;
        for (std::size_t i = 1; i < d.size(); ++i) f = std::min(f, d.time_of_day[i] - d.time_of_day[i - 1]);
        d.frequency = f;
    }
    return days;
}

inline std::vector<ChangeSeries> read_changes_csv(const std::string& path,
                                                  std::optional<double> frequency = std::nullopt) {
    return parse_changes(detail::read_all(path), frequency);
}

}  // namespace tickvol
