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

#include <array>
#include <cstring>
#include <fstream>
#include <ostream>

#include "qdent/emitter.hpp"
#include "qdent/errors.hpp"

namespace qdent {

namespace {

constexpr std::size_t kHeaderSize = 64;
constexpr std::size_t kRecordSize = 9;
constexpr char kMagic[8] = {'Q', 'D', 'E', 'V', 'T', '0', '1', '\0'};
constexpr std::uint32_t kVersion = 1;

// Header layout (little-endian):
//   0  magic[8]   "QDEVT01\0"
//   8  u32        version
//  12  u8         mode
//  13  u8         polarizer setting, X arm
//  14  u8         polarizer setting, XX arm
//  15  u8         reserved
//  16  u64        pulse count
//  24  u64        parameter digest
//  32  u64        record count
//  40  i64        repetition period in ps
//  48  reserved, zero

template <class T>
void put_le(unsigned char* dst, T value) {
    auto u = static_cast<std::uint64_t>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<unsigned char>(u >> (8 * i));
}

template <class T>
T get_le(const unsigned char* src) {
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(src[i]) << (8 * i);
    return static_cast<T>(u);
}

}  // namespace

void write_event_file(const std::filesystem::path& path, const DetectionEventStream& stream) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open event file for writing: " + path.string());

    std::array<unsigned char, kHeaderSize> header{};
    std::memcpy(header.data(), kMagic, sizeof kMagic);
    put_le<std::uint32_t>(header.data() + 8, kVersion);
    header[12] = static_cast<unsigned char>(stream.meta.config.mode);
    header[13] = static_cast<unsigned char>(stream.meta.config.setting_x);
    header[14] = static_cast<unsigned char>(stream.meta.config.setting_xx);
    put_le<std::uint64_t>(header.data() + 16, stream.meta.n_pulses);
    put_le<std::uint64_t>(header.data() + 24, stream.meta.params_digest);
    put_le<std::uint64_t>(header.data() + 32, stream.events.size());
    put_le<std::int64_t>(header.data() + 40, stream.meta.rep_period_ps);
    os.write(reinterpret_cast<const char*>(header.data()), header.size());

    std::vector<unsigned char> buf;
    buf.reserve(kRecordSize * 4096);
    auto flush = [&] {
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    };
    for (const auto& e : stream.events) {
        unsigned char rec[kRecordSize];
        rec[0] = static_cast<unsigned char>(e.channel);
        put_le<std::int64_t>(rec + 1, e.timestamp_ps);
        buf.insert(buf.end(), rec, rec + kRecordSize);
        if (buf.size() >= kRecordSize * 4096) flush();
    }
    flush();
    if (!os) throw InputError("failed writing event file: " + path.string());
}

DetectionEventStream read_event_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open event file: " + path.string());

    std::array<unsigned char, kHeaderSize> header{};
    if (!is.read(reinterpret_cast<char*>(header.data()), header.size())) {
        throw InputError("truncated event file header: " + path.string());
    }
    if (std::memcmp(header.data(), kMagic, sizeof kMagic) != 0) {
        throw InputError("not an event stream file (bad magic): " + path.string());
    }
    if (get_le<std::uint32_t>(header.data() + 8) != kVersion) {
        throw InputError("unsupported event file version");
    }
    DetectionEventStream s;
    if (header[12] > static_cast<unsigned char>(MeasurementMode::kPolarized) || header[13] > 5 ||
        header[14] > 5) {
        throw InputError("corrupt event file header");
    }
    s.meta.config.mode = static_cast<MeasurementMode>(header[12]);
    s.meta.config.setting_x = static_cast<Basis>(header[13]);
    s.meta.config.setting_xx = static_cast<Basis>(header[14]);
    s.meta.n_pulses = get_le<std::uint64_t>(header.data() + 16);
    s.meta.params_digest = get_le<std::uint64_t>(header.data() + 24);
    const auto n = get_le<std::uint64_t>(header.data() + 32);
    s.meta.rep_period_ps = get_le<std::int64_t>(header.data() + 40);

    std::vector<unsigned char> body(n * kRecordSize);
    if (!is.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()))) {
        throw InputError("truncated event file body: " + path.string());
    }
    s.events.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const unsigned char* rec = body.data() + i * kRecordSize;
        if (rec[0] >= kNumChannels) throw InputError("corrupt channel id in event file");
        s.events[i] = {get_le<std::int64_t>(rec + 1), static_cast<Channel>(rec[0])};
    }
    return s;
}

void write_event_csv(std::ostream& os, const DetectionEventStream& stream) {
    os << "channel,timestamp_ps\n";
    for (const auto& e : stream.events) os << channel_name(e.channel) << ',' << e.timestamp_ps << '\n';
}

}  // namespace qdent
