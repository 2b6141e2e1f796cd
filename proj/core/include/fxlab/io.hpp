#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fxlab/error.hpp"

namespace fxlab {

// Deterministic shortest-ish decimal rendering; 12 significant digits is
// enough for report bodies to be stable and readable.
inline std::string fmt_g(double x, int sig = 12) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig, x);
  return buf;
}

// Full-precision rendering that survives a text round trip bit-exactly.
inline std::string fmt_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Write temp file next to `path`, then rename over it.
inline void write_file_atomic(const std::string& path,
                              const std::string& body) {
  std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out << body;
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

// Minimal CSV assembly. Fields containing separators or quotes are quoted.
class CsvBuilder {
 public:
  CsvBuilder& row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) body_ += ',';
      body_ += escape(fields[i]);
    }
    body_ += '\n';
    return *this;
  }

  const std::string& body() const { return body_; }

  void write(const std::string& path) const { write_file_atomic(path, body_); }

 private:
  static std::string escape(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
    return out;
  }

  std::string body_;
};

}  // namespace fxlab
