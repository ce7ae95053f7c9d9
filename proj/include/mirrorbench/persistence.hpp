#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mirrorbench/core.hpp"

namespace mirrorbench {

/// Wraps a record body as one file line: {"body":<body>,"crc":"xxxxxxxx"}
/// where the crc is zlib crc32 over the serialized body bytes. The seal is
/// what lets a resume distinguish a torn tail write from real corruption.
std::string seal_record(const json& body);

/// Verifies one sealed line and returns its body; throws on any mismatch.
json unseal_line(const std::string& line);

/// Append-only sealed-line writer. Every append flushes, so records survive
/// the process being killed right after the call returns.
class RecordWriter {
 public:
  /// append=false truncates instead of continuing an existing file.
  explicit RecordWriter(const std::string& path, bool append = true);

  void append(const json& body);
  std::size_t lines_written() const { return lines_written_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t lines_written_ = 0;
};

struct ScanOutcome {
  std::vector<json> bodies;  // verified record bodies in file order
  bool dropped_tail = false;  // an unverifiable final line was discarded
};

/// Reads a sealed file back. An unverifiable LAST line is a torn write from
/// an interrupted run and is dropped (unless tolerate_tail is false); an
/// unverifiable line anywhere else is corruption and throws with the line
/// number. A missing file throws.
ScanOutcome scan_records(const std::string& path, bool tolerate_tail = true);

/// Rewrites the file keeping only verified lines whose body satisfies keep,
/// preserving their exact bytes and order, then atomically replaces the
/// original (tmp + rename). A torn tail line is dropped. Returns the number
/// of lines kept.
std::size_t compact_records(const std::string& path, const std::function<bool(const json&)>& keep);

}  // namespace mirrorbench
