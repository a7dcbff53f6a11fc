#pragma once

// File helpers, the CSV log writer, and the binary frame-table container.
//
// Frame file layout (little-endian):
//   magic        8 bytes  "LKAFRM\0\1"
//   version      u32      frame_schema_version
//   period       f64
//   start_time   f64
//   n_frames     u64
//   n_channels   u32
//   meta_len     u32, then meta_len bytes of SettingMeta JSON
//   per channel: name_len u32, name bytes
//   frame_valid  n_frames bytes (0/1)
//   per channel: present n_frames bytes (0/1), values n_frames f64

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

static_assert(std::endian::native == std::endian::little, "frame files assume a little-endian host");

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::string data;
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) throw io_error("cannot read '" + path.string() + "'");
    data.resize(static_cast<std::size_t>(size));
    in.seekg(0);
    in.read(data.data(), size);
    if (!in) throw io_error("short read on '" + path.string() + "'");
    return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw io_error("write failed on '" + path.string() + "'");
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw io_error("cannot create output directory '" + dir.string() + "'");
}

inline json read_json_file(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw input_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

/// Writes a log in the ingest CSV format. Records sharing a timestamp share a
/// row; timestamps are printed with 4 decimals (0.1 ms resolution), values
/// in shortest round-trip form.
inline std::string raw_log_to_csv(const RawLog& log) {
    std::string out = "time";
    for (const auto& n : log.signal_names) {
        out += ',';
        out += n;
    }
    out += '\n';
    std::vector<const RawRecord*> row(log.signal_names.size(), nullptr);
    std::size_t i = 0;
    char tbuf[32];
    while (i < log.records.size()) {
        const double t = log.records[i].timestamp;
        std::fill(row.begin(), row.end(), nullptr);
        std::size_t j = i;
        // a signal repeated at one timestamp starts a new row
        while (j < log.records.size() && log.records[j].timestamp == t && !row[log.records[j].signal]) {
            row[log.records[j].signal] = &log.records[j];
            ++j;
        }
        const int len = std::snprintf(tbuf, sizeof tbuf, "%.4f", t);
        out.append(tbuf, static_cast<std::size_t>(len));
        for (const auto* r : row) {
            out += ',';
            if (r) append_double(out, r->value);
        }
        out += '\n';
        i = j;
    }
    return out;
}

inline constexpr std::uint32_t frame_schema_version = 1;
inline constexpr char frame_magic[8] = {'L', 'K', 'A', 'F', 'R', 'M', '\0', '\1'};

namespace detail {

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw input_error("frame file is truncated");
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_frames(const FrameTable& t) {
    std::string out(frame_magic, sizeof frame_magic);
    detail::put<std::uint32_t>(out, frame_schema_version);
    detail::put<double>(out, t.period);
    detail::put<double>(out, t.start_time);
    detail::put<std::uint64_t>(out, t.frame_count());
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.channels.size()));
    const std::string meta = json(t.metadata).dump();
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    for (const auto& n : t.names) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(n.size()));
        out += n;
    }
    out.append(reinterpret_cast<const char*>(t.frame_valid.data()), t.frame_valid.size());
    for (const auto& c : t.channels) {
        out.append(reinterpret_cast<const char*>(c.present.data()), c.present.size());
        out.append(reinterpret_cast<const char*>(c.values.data()), c.values.size() * sizeof(double));
    }
    return out;
}

inline FrameTable deserialize_frames(std::string_view data) {
    if (data.size() < sizeof frame_magic || std::memcmp(data.data(), frame_magic, sizeof frame_magic) != 0)
        throw input_error("not a frame file (bad magic)");
    detail::Reader r(data.substr(sizeof frame_magic));
    const auto version = r.get<std::uint32_t>();
    if (version != frame_schema_version)
        throw version_error("frame file schema version " + std::to_string(version) + ", expected " +
                            std::to_string(frame_schema_version));
    FrameTable t;
    t.period = r.get<double>();
    t.start_time = r.get<double>();
    const auto n = static_cast<std::size_t>(r.get<std::uint64_t>());
    const auto n_channels = r.get<std::uint32_t>();
    const auto meta_len = r.get<std::uint32_t>();
    try {
        t.metadata = json::parse(r.bytes(meta_len)).get<SettingMeta>();
    } catch (const json::exception& e) {
        throw input_error(std::string("frame file metadata: ") + e.what());
    }
    for (std::uint32_t c = 0; c < n_channels; ++c) t.names.emplace_back(r.bytes(r.get<std::uint32_t>()));
    const auto valid = r.bytes(n);
    t.frame_valid.assign(valid.begin(), valid.end());
    t.channels.resize(n_channels);
    for (auto& c : t.channels) {
        const auto present = r.bytes(n);
        c.present.assign(present.begin(), present.end());
        const auto vals = r.bytes(n * sizeof(double));
        c.values.resize(n);
        std::memcpy(c.values.data(), vals.data(), vals.size());
    }
    if (!r.done()) throw input_error("trailing bytes after frame data");
    if (auto v = validate_frame_table(t); !v.empty()) throw input_error("frame file invalid: " + v.front().detail);
    return t;
}

inline void write_frames(const std::filesystem::path& path, const FrameTable& t) {
    write_file(path, serialize_frames(t));
}

inline FrameTable read_frames(const std::filesystem::path& path) { return deserialize_frames(read_file(path)); }

} // namespace lka
