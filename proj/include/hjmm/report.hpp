#pragma once

// CSV reports. Every file opens with '#' metadata lines; the timestamp sits on
// its own line so that two runs can be compared with that line removed.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hjmm/errors.hpp"

#ifndef HJMM_VERSION
#define HJMM_VERSION "0.0.0"
#endif

namespace hjmm {

inline constexpr const char* kTimestampPrefix = "# timestamp: ";

// shortest round-trip representation
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

inline std::string join(const std::vector<double>& v, char sep = ';') {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += fmt(v[i]);
  }
  return s;
}

struct ReportMeta {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;  // tolerances and the like
  bool timestamp = true;
};

class CsvReport {
 public:
  CsvReport(const std::string& path, const ReportMeta& meta) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path);
    out_ << "# hjmm_lab report\n";
    out_ << "# command: " << meta.command << "\n";
    out_ << "# version: hjmm " << HJMM_VERSION << "\n";
    out_ << "# config_hash: " << meta.config_hash << "\n";
    out_ << "# seed: " << meta.seed << "\n";
    for (const auto& [k, v] : meta.extra) out_ << "# " << k << ": " << v << "\n";
    if (meta.timestamp) out_ << kTimestampPrefix << now() << "\n";
  }

  void comment(const std::string& s) { out_ << "# " << s << "\n"; }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostream& stream() { return out_; }

  static std::string now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

 private:
  std::ofstream out_;
};

// file contents with the timestamp line removed
inline std::string strip_timestamp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream os;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(kTimestampPrefix, 0) != 0) os << line << '\n';
  return os.str();
}

}  // namespace hjmm
