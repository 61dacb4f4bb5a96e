// Copyright 2026 The qdent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <numeric>
#include <ostream>

#include <omp.h>

#include "qdent/correlation.hpp"
#include "qdent/errors.hpp"

namespace qdent {

namespace {

CorrelationHistogram empty_histogram(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                     std::int64_t bin_width_ps, std::int64_t max_delay_ps) {
    if (bin_width_ps <= 0) throw InputError("bin width must be positive");
    if (max_delay_ps < 0) throw InputError("max delay must be non-negative");
    if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end())) {
        throw InputError("correlator input streams must be time-sorted");
    }
    CorrelationHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.max_delay_ps = max_delay_ps;
    h.half_bins = max_delay_ps / bin_width_ps + 1;
    h.counts.assign(static_cast<std::size_t>(2 * h.half_bins), 0);
    h.clicks_a = a.size();
    h.clicks_b = b.size();
    return h;
}

// Bins every pair for a in a[begin, end). `counts` indexes from -half_bins.
void correlate_shard(std::span<const std::int64_t> a, std::size_t begin, std::size_t end,
                     std::span<const std::int64_t> b, std::int64_t bin_width,
                     std::int64_t max_delay, std::int64_t half_bins, std::uint64_t* counts) {
    if (begin >= end) return;
    const std::int64_t offset = half_bins * bin_width;
    auto lo = static_cast<std::size_t>(
        std::lower_bound(b.begin(), b.end(), a[begin] - max_delay) - b.begin());
    const std::size_t nb = b.size();
    for (std::size_t i = begin; i < end; ++i) {
        const std::int64_t ta = a[i];
        while (lo < nb && b[lo] < ta - max_delay) ++lo;
        for (std::size_t j = lo; j < nb; ++j) {
            const std::int64_t d = b[j] - ta;
            if (d > max_delay) break;
            ++counts[(d + offset) / bin_width];
        }
    }
}

}  // namespace

std::uint64_t CorrelationHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CorrelationHistogram& CorrelationHistogram::operator+=(const CorrelationHistogram& o) {
    if (o.bin_width_ps != bin_width_ps || o.half_bins != half_bins) {
        throw InputError("cannot merge histograms with different binning");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    clicks_a += o.clicks_a;
    clicks_b += o.clicks_b;
    n_pulses += o.n_pulses;
    return *this;
}

CorrelationHistogram build_histogram_serial(std::span<const std::int64_t> stream_a,
                                            std::span<const std::int64_t> stream_b,
                                            std::int64_t bin_width_ps, std::int64_t max_delay_ps) {
    CorrelationHistogram h = empty_histogram(stream_a, stream_b, bin_width_ps, max_delay_ps);
    correlate_shard(stream_a, 0, stream_a.size(), stream_b, bin_width_ps, max_delay_ps, h.half_bins,
                    h.counts.data());
    return h;
}

CorrelationHistogram build_histogram(std::span<const std::int64_t> stream_a,
                                     std::span<const std::int64_t> stream_b,
                                     std::int64_t bin_width_ps, std::int64_t max_delay_ps) {
    CorrelationHistogram h = empty_histogram(stream_a, stream_b, bin_width_ps, max_delay_ps);
    const int threads = omp_get_max_threads();
    if (threads <= 1 || stream_a.size() < 4096) {
        correlate_shard(stream_a, 0, stream_a.size(), stream_b, bin_width_ps, max_delay_ps,
                        h.half_bins, h.counts.data());
        return h;
    }
    const std::size_t n = stream_a.size();
    const auto shards = static_cast<std::int64_t>(threads) * 4;
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(h.counts.size(), 0);
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t s = 0; s < shards; ++s) {
            const std::size_t begin = n * static_cast<std::size_t>(s) / static_cast<std::size_t>(shards);
            const std::size_t end =
                n * static_cast<std::size_t>(s + 1) / static_cast<std::size_t>(shards);
            correlate_shard(stream_a, begin, end, stream_b, bin_width_ps, max_delay_ps, h.half_bins,
                            local.data());
        }
#pragma omp critical(qdent_histogram_merge)
        for (std::size_t i = 0; i < local.size(); ++i) h.counts[i] += local[i];
    }
    return h;
}

void write_histogram_csv(std::ostream& os, const CorrelationHistogram& h) {
    os << "delay_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        // Integer-valued bin centre when the width is even, lower edge + w/2 otherwise.
        os << h.bin_lower_ps(i) + h.bin_width_ps / 2 << ',' << h.counts[i] << '\n';
    }
}

}  // namespace qdent
