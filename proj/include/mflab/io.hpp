#pragma once

#include "mflab/pde.hpp"

#include <json.hpp>
#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

inline std::uint32_t crc32_of(const void* data, std::size_t bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (bytes > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    bytes -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// Every artifact carries the resolved config hash and the seed.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("io: cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("io: write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, nlohmann::json j, const Provenance& prov) {
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  write_text(path, j.dump(2) + "\n");
}

// CSV with a '#' provenance line, a header row and full-precision numeric rows.
class CsvWriter {
 public:
  CsvWriter(const Provenance& prov, const std::string& header) {
    os_ << "# config_hash=" << prov.config_hash << " seed=" << prov.seed << "\n" << header << "\n";
    os_.precision(17);
  }

  template <class... Ts>
  void row(const Ts&... cols) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cols, first = false), ...);
    os_ << "\n";
  }
  void raw_row(const std::string& line) { os_ << line << "\n"; }

  std::string str() const { return os_.str(); }
  void save(const std::filesystem::path& path) const { write_text(path, os_.str()); }

 private:
  std::ostringstream os_;
};

// Binary snapshots (raw little-endian doubles, n^3 each) plus a JSON manifest with crc32 checksums and a
// per-snapshot diagnostics CSV.
inline void write_density_series(const DensityTimeSeries& series, const std::filesystem::path& dir,
                                 const Provenance& prov) {
  std::filesystem::create_directories(dir);
  nlohmann::json snaps = nlohmann::json::array();
  CsvWriter diag(prov, "t,mass,l1,l1_5,l2,l4,linf,min,log_moment");
  for (std::size_t k = 0; k < series.snapshots.size(); ++k) {
    const auto& mu = series.snapshots[k];
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%04zu.bin", k);
    const std::size_t bytes = mu.values.size() * sizeof(double);
    std::ofstream os(dir / name, std::ios::binary);
    os.write(reinterpret_cast<const char*>(mu.values.data()), static_cast<std::streamsize>(bytes));
    if (!os) throw std::runtime_error("io: snapshot write failed");
    const auto& d = series.snapshot_diagnostics[k];
    snaps.push_back({{"t", mu.t}, {"file", name}, {"crc32", hex32(crc32_of(mu.values.data(), bytes))}, {"mass", d.mass}});
    diag.row(d.t, d.mass, d.l1, d.l1_5, d.l2, d.l4, d.linf, d.min_value, d.log_moment);
  }
  write_json(dir / "manifest.json",
             {{"n", series.geom.n}, {"L", series.geom.L}, {"layout", "row-major [i][j][k], x_i = -L/2 + i L/n, float64"},
              {"snapshots", snaps}},
             prov);
  diag.save(dir / "diagnostics.csv");
}

inline GridDensity read_snapshot(const std::filesystem::path& manifest_path, std::size_t k) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("io: cannot open " + manifest_path.string());
  const auto m = nlohmann::json::parse(is);
  const auto& s = m.at("snapshots").at(k);
  GridDensity mu(GridGeometry{m.at("n").get<int>(), m.at("L").get<double>()}, s.at("t").get<double>());
  std::ifstream bin(manifest_path.parent_path() / s.at("file").get<std::string>(), std::ios::binary);
  const std::size_t bytes = mu.values.size() * sizeof(double);
  bin.read(reinterpret_cast<char*>(mu.values.data()), static_cast<std::streamsize>(bytes));
  if (!bin) throw std::runtime_error("io: truncated snapshot file");
  if (hex32(crc32_of(mu.values.data(), bytes)) != s.at("crc32").get<std::string>())
    throw std::runtime_error("io: snapshot checksum mismatch");
  return mu;
}

}  // namespace mflab
