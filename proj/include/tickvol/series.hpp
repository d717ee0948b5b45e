#pragma once

// Tick and price-change containers.

#include <cstdint>
#include <vector>

namespace tickvol {

inline constexpr std::int64_t kSessionOpenMs = 34'200'000;   // 09:30:00 exchange time
inline constexpr std::int64_t kSessionCloseMs = 57'600'000;  // 16:00:00 exchange time
inline constexpr double kSessionSeconds = 23'400.0;

/// Raw trades of one instrument. Timestamps are UTC epoch milliseconds, prices
/// integer cents, and `day` the exchange-local trading day (days since epoch).
struct TickSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<std::int64_t> prices;
    std::vector<std::int32_t> day;
    // Milliseconds since exchange-local midnight, aligned with `timestamps`.
    std::vector<std::int64_t> local_ms;

    std::size_t size() const { return timestamps.size(); }

    void push_back(std::int64_t ts, std::int64_t price, std::int32_t d, std::int64_t ms) {
        timestamps.push_back(ts);
        prices.push_back(price);
        day.push_back(d);
        local_ms.push_back(ms);
    }
};

/// Integer price changes of one trading day at a fixed frequency. Each change
/// is stamped with the end of its interval in seconds since 09:30:00.
struct ChangeSeries {
    std::vector<int> changes;
    std::vector<double> time_of_day;
    std::int32_t day = 0;
    double frequency = 1.0;

    std::size_t size() const { return changes.size(); }
    bool empty() const { return changes.empty(); }

    void push_back(int change, double tod) {
        changes.push_back(change);
        time_of_day.push_back(tod);
    }
};

}  // namespace tickvol
