#include "mirrorbench/persistence.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <zlib.h>

namespace mirrorbench {

namespace {

std::string crc_hex(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return std::string(buf);
}

}  // namespace

std::string seal_record(const json& body) {
  const std::string payload = body.dump();
  json envelope;
  envelope["body"] = body;
  envelope["crc"] = crc_hex(payload);
  return envelope.dump();
}

json unseal_line(const std::string& line) {
  json envelope;
  try {
    envelope = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("unparseable sealed line: ") + e.what());
  }
  if (!envelope.is_object() || envelope.size() != 2 || !envelope.contains("body") ||
      !envelope.contains("crc") || !envelope["crc"].is_string()) {
    throw std::runtime_error("sealed line is not a {body, crc} envelope");
  }
  const auto stored = envelope["crc"].get<std::string>();
  const auto computed = crc_hex(envelope["body"].dump());
  if (stored != computed) {
    throw std::runtime_error("crc mismatch: stored " + stored + ", computed " + computed);
  }
  return envelope["body"];
}

RecordWriter::RecordWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void RecordWriter::append(const json& body) {
  out_ << seal_record(body) << '\n';
  if (!out_.flush()) throw std::runtime_error("write failed: " + path_);
  ++lines_written_;
}

ScanOutcome scan_records(const std::string& path, bool tolerate_tail) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sealed file: " + path);
  ScanOutcome outcome;
  std::string line;
  std::size_t line_no = 0;
  bool pending_error = false;
  std::string pending_message;
  while (std::getline(in, line)) {
    ++line_no;
    if (pending_error) {
      // The bad line was not the last one: that is corruption, not a torn
      // tail.
      throw std::runtime_error(pending_message);
    }
    try {
      outcome.bodies.push_back(unseal_line(line));
    } catch (const std::runtime_error& e) {
      pending_error = true;
      pending_message = path + ":" + std::to_string(line_no) + ": " + e.what();
    }
  }
  if (pending_error) {
    if (!tolerate_tail) throw std::runtime_error(pending_message);
    outcome.dropped_tail = true;
  }
  return outcome;
}

std::size_t compact_records(const std::string& path,
                            const std::function<bool(const json&)>& keep) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sealed file: " + path);

  // First pass mirrors scan_records line handling; kept lines preserve their
  // original bytes so a compacted file stays byte-identical to one that was
  // never interrupted.
  std::vector<std::string> kept;
  std::string line;
  std::size_t line_no = 0;
  bool pending_error = false;
  std::string pending_message;
  while (std::getline(in, line)) {
    ++line_no;
    if (pending_error) throw std::runtime_error(pending_message);
    try {
      json body = unseal_line(line);
      if (keep(body)) kept.push_back(line);
    } catch (const std::runtime_error& e) {
      pending_error = true;
      pending_message = path + ":" + std::to_string(line_no) + ": " + e.what();
    }
  }
  in.close();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    for (const auto& l : kept) out << l << '\n';
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return kept.size();
}

}  // namespace mirrorbench
