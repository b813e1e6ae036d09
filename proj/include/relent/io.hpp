#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "relent/errors.hpp"
#include "relent/grid.hpp"

namespace relent {

/// 17 significant digits: doubles round-trip bit-exactly through the CSVs.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// CSV sink; the first line carries the config hash and seed, the second the
/// column names.
class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, std::uint64_t config_hash, std::uint64_t seed,
          const std::string& columns) {
    out_.open(path);
    if (!out_) throw Error("cannot open output file " + path.string());
    out_ << "# config=" << hex64(config_hash) << " seed=" << seed << "\n";
    out_ << columns << "\n";
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      out_ << fmt17(v);
      first = false;
    }
    out_ << '\n';
  }

  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

/// Writes a density field as `x[,y],density` rows.
inline void write_density_csv(const std::filesystem::path& path, const DensityField& f,
                              std::uint64_t config_hash, std::uint64_t seed) {
  CsvFile csv(path, config_hash, seed, f.dim == 1 ? "x,density" : "x,y,density");
  if (f.dim == 1) {
    for (int i = 0; i < f.gx.n; ++i) csv.row({f.gx.center(i), f.at(i)});
  } else {
    for (int i = 0; i < f.gx.n; ++i)
      for (int j = 0; j < f.gy.n; ++j) csv.row({f.gx.center(i), f.gy.center(j), f.at(i, j)});
  }
}

}  // namespace relent
