#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "ntl/ranking.hpp"
#include "ntl/time.hpp"

namespace ntl::test {

/// Daily ΔV_min series built to carry one pattern label under the default
/// PatternParams (threshold 0.1, p_hi 0.5, tail 21 days, min_hot 5).
struct LabelledSeries {
    ranking::PatternKind kind;
    std::optional<Date> marker;  // expected ceased/onset date
    std::vector<Date> days;
    std::vector<std::optional<double>> values;
};

namespace detail {

inline double cold(std::mt19937_64& rng) {
    // Up to and including the threshold, which is not hot.
    std::uniform_real_distribution<double> u(-0.06, 0.1);
    const double v = u(rng);
    return std::bernoulli_distribution(0.05)(rng) ? 0.1 : v;
}

inline double hot(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.1001, 0.3)(rng);
}

}  // namespace detail

/// Random length 120..240 days, a few missing cells that never touch the
/// hot days a label depends on.
inline LabelledSeries make_series(ranking::PatternKind kind, std::mt19937_64& rng) {
    using ranking::PatternKind;
    const int n = std::uniform_int_distribution<int>(120, 240)(rng);
    const Date first = *parse_date("2021-01-04") + std::chrono::days{std::uniform_int_distribution<int>(0, 300)(rng)};
    std::vector<bool> is_hot(static_cast<std::size_t>(n), false);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::optional<int> marker;

    switch (kind) {
        case PatternKind::quiet:
            break;
        case PatternKind::persistent:
            // At least 70% of each half hot.
            for (int i = 0; i < n; ++i) is_hot[static_cast<std::size_t>(i)] = u(rng) < 0.85;
            for (int half = 0; half < 2; ++half) {
                const int lo = half == 0 ? 0 : (n + 1) / 2;
                const int hi = half == 0 ? (n + 1) / 2 : n;
                int need = static_cast<int>(0.7 * (hi - lo)) + 1;
                for (int i = lo; i < hi; ++i) need -= is_hot[static_cast<std::size_t>(i)] ? 1 : 0;
                for (int i = lo; i < hi && need > 0; ++i) {
                    if (!is_hot[static_cast<std::size_t>(i)]) {
                        is_hot[static_cast<std::size_t>(i)] = true;
                        --need;
                    }
                }
            }
            break;
        case PatternKind::ceased: {
            // Hot run inside the first third, silent afterwards.
            const int head = n / 3;
            const int count = std::uniform_int_distribution<int>(6, head / 2)(rng);
            std::vector<int> idx(static_cast<std::size_t>(head));
            for (int i = 0; i < head; ++i) idx[static_cast<std::size_t>(i)] = i;
            std::shuffle(idx.begin(), idx.end(), rng);
            for (int k = 0; k < count; ++k) is_hot[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = true;
            for (int i = head - 1; i >= 0; --i) {
                if (is_hot[static_cast<std::size_t>(i)]) {
                    marker = i;
                    break;
                }
            }
            break;
        }
        case PatternKind::onset: {
            // Silent until the final 60 days, then mostly hot up to the end.
            const int start = n - 60 + std::uniform_int_distribution<int>(0, 20)(rng);
            for (int i = start; i < n; ++i) is_hot[static_cast<std::size_t>(i)] = u(rng) < 0.6;
            is_hot[static_cast<std::size_t>(start)] = true;
            is_hot[static_cast<std::size_t>(n - 1)] = true;
            for (int i = start; i < start + 5; ++i) is_hot[static_cast<std::size_t>(i)] = true;
            marker = start;
            break;
        }
        case PatternKind::intermittent: {
            // Sparse hot days everywhere, touching both ends of the window.
            for (int i = 0; i < n; ++i) is_hot[static_cast<std::size_t>(i)] = u(rng) < 0.12;
            is_hot[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 15)(rng))] = true;
            is_hot[static_cast<std::size_t>(n - 1 - std::uniform_int_distribution<int>(0, 15)(rng))] = true;
            break;
        }
    }

    LabelledSeries s;
    s.kind = kind;
    if (marker) s.marker = first + std::chrono::days{*marker};
    for (int i = 0; i < n; ++i) {
        s.days.push_back(first + std::chrono::days{i});
        const bool h = is_hot[static_cast<std::size_t>(i)];
        // Missing cells only replace cold days away from the window ends.
        if (!h && i > 0 && i < n - 1 && u(rng) < 0.05) {
            s.values.emplace_back();
        } else {
            s.values.emplace_back(h ? detail::hot(rng) : detail::cold(rng));
        }
    }
    return s;
}

}  // namespace ntl::test
