#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "junglekit/core/errors.hpp"
#include "junglekit/wire.hpp"

namespace junglekit {

/// Append-only file of applied snapshots. Each record is a 4-byte
/// little-endian length followed by that many bytes of JSON.
///
/// Opening replays every complete record; a torn record at the tail (crash
/// mid-append) is cut off so later appends stay aligned.
class SnapshotLog {
 public:
  explicit SnapshotLog(std::filesystem::path path) : path_(std::move(path)) {
    replayed_ = read_records();
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw ConfigError("cannot open snapshot log '" + path_.string() + "' for append");
  }

  const std::filesystem::path& path() const noexcept { return path_; }

  /// Snapshots found on disk when the log was opened, in file order.
  const std::vector<Snapshot>& replayed() const noexcept { return replayed_; }

  void append(const Snapshot& s) {
    const std::string payload = json(s).dump();
    const auto n = static_cast<std::uint32_t>(payload.size());
    const char header[4] = {static_cast<char>(n & 0xFF), static_cast<char>((n >> 8) & 0xFF),
                            static_cast<char>((n >> 16) & 0xFF), static_cast<char>((n >> 24) & 0xFF)};
    out_.write(header, 4);
    out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out_.flush();
    if (!out_) throw std::runtime_error("snapshot log write failed: " + path_.string());
  }

 private:
  std::vector<Snapshot> read_records() {
    std::vector<Snapshot> records;
    if (!std::filesystem::exists(path_)) return records;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw ConfigError("cannot read snapshot log '" + path_.string() + "'");
    std::uintmax_t good = 0;
    std::string payload;
    while (true) {
      unsigned char header[4];
      if (!in.read(reinterpret_cast<char*>(header), 4)) break;
      const std::uint32_t n = header[0] | (header[1] << 8) | (header[2] << 16) |
                              (static_cast<std::uint32_t>(header[3]) << 24);
      payload.resize(n);
      if (!in.read(payload.data(), n)) break;
      try {
        records.push_back(json::parse(payload).get<Snapshot>());
      } catch (const std::exception&) {
        break;
      }
      good += 4 + n;
    }
    in.close();
    if (good != std::filesystem::file_size(path_)) std::filesystem::resize_file(path_, good);
    return records;
  }

  std::filesystem::path path_;
  std::vector<Snapshot> replayed_;
  std::ofstream out_;
};

}  // namespace junglekit
