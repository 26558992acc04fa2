/*
 * Copyright 2026 The repalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "repalign/actstore.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace repalign {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'A', 'C', 'T', 'V'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint_le(4, what)); }
  std::uint64_t u64(const char* what) { return uint_le(8, what); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const unsigned char* cursor() const {
    return reinterpret_cast<const unsigned char*>(bytes_.data()) + pos_;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      fail(ErrorKind::format, path_.string() + ": header truncated reading " + what);
  }
  std::uint64_t uint_le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::string& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_finite(const MatrixF& values) {
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      if (!std::isfinite(values(r, c)))
        fail(ErrorKind::data, "non-finite activation at (row " + std::to_string(r) +
                                  ", col " + std::to_string(c) + ")");
}

// Row-major scan so that the first offending entry is reported in file order.
void check_finite_row_major(std::span<const float> data, std::size_t cols) {
  for (std::size_t k = 0; k < data.size(); ++k)
    if (!std::isfinite(data[k]))
      fail(ErrorKind::data, "non-finite activation at (row " + std::to_string(k / cols) +
                                ", col " + std::to_string(k % cols) + ")");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_float(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ActivationMatrix load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::format, path.string() + ": empty CSV");
  const std::size_t units = split_csv(line).size();
  std::vector<float> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != units)
      fail(ErrorKind::format, path.string() + ": row " + std::to_string(rows) + " has " +
                                  std::to_string(cells.size()) + " fields, expected " +
                                  std::to_string(units));
    for (const auto& cell : cells) {
      float v = 0.0f;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        // from_chars rejects "inf"/"nan" spellings with a sign on some libs; fall back.
        char* end = nullptr;
        const std::string tmp(cell);
        v = std::strtof(tmp.c_str(), &end);
        if (tmp.empty() || end != tmp.c_str() + tmp.size())
          fail(ErrorKind::format, path.string() + ": bad number '" + cell + "'");
      }
      data.push_back(v);
    }
    ++rows;
  }
  check_finite_row_major(data, units);
  return ActivationMatrix::from_row_major(path.stem().string(), "", rows, units, data);
}

}  // namespace

ActivationMatrix::ActivationMatrix(std::string layer, std::string net, MatrixF values)
    : layer_(std::move(layer)), net_(std::move(net)), values_(std::move(values)) {
  require(values_.rows() >= 2, ErrorKind::data,
          "activation matrix needs at least 2 samples, got " + std::to_string(values_.rows()));
  require(values_.cols() >= 1, ErrorKind::data, "activation matrix needs at least 1 unit");
  check_finite(values_);
}

ActivationMatrix ActivationMatrix::from_row_major(std::string layer, std::string net,
                                                  std::size_t samples, std::size_t units,
                                                  std::span<const float> data) {
  require(data.size() == samples * units, ErrorKind::argument,
          "buffer size does not match samples x units");
  check_finite_row_major(data, units);
  MatrixF values(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(units));
  for (std::size_t r = 0; r < samples; ++r)
    for (std::size_t c = 0; c < units; ++c)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * units + c];
  return ActivationMatrix(std::move(layer), std::move(net), std::move(values));
}

std::vector<float> ActivationMatrix::row_major() const {
  std::vector<float> out(samples() * units());
  for (std::size_t r = 0; r < samples(); ++r)
    for (std::size_t c = 0; c < units(); ++c)
      out[r * units() + c] = values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

void write_actv_raw(const fs::path& path, const std::string& layer, const std::string& net,
                    std::size_t rows, std::size_t cols, std::span<const float> row_major) {
  require(row_major.size() == rows * cols, ErrorKind::argument,
          "ACTV payload size does not match header");
  std::string out;
  out.reserve(40 + layer.size() + net.size() + 4 * row_major.size());
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(layer.size()));
  out += layer;
  put_u32(out, static_cast<std::uint32_t>(net.size()));
  out += net;
  put_u64(out, rows);
  put_u64(out, cols);
  for (float v : row_major) put_u32(out, std::bit_cast<std::uint32_t>(v));

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorKind::io, "short write to " + path.string());
}

void write_actv(const fs::path& path, const ActivationMatrix& acts) {
  write_actv_raw(path, acts.layer(), acts.net(), acts.samples(), acts.units(), acts.row_major());
}

RawActv read_actv_raw(const fs::path& path) {
  const std::string bytes = slurp(path);
  Reader rd(bytes, path);
  const std::string magic = rd.str(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    fail(ErrorKind::format, path.string() + ": bad magic, not an ACTV file");
  const std::uint32_t version = rd.u32("version");
  if (version != kVersion)
    fail(ErrorKind::format, path.string() + ": unsupported ACTV version " + std::to_string(version));
  RawActv raw;
  raw.layer = rd.str(rd.u32("name_len"), "layer name");
  raw.net = rd.str(rd.u32("netid_len"), "net id");
  raw.rows = rd.u64("M");
  raw.cols = rd.u64("U");
  if (raw.cols != 0 && raw.rows > (std::uint64_t(1) << 62) / raw.cols)
    fail(ErrorKind::format, path.string() + ": implausible shape");
  const std::uint64_t count = raw.rows * raw.cols;
  const std::uint64_t want = count * 4;
  if (rd.remaining() < want)
    fail(ErrorKind::truncation, path.string() + ": payload has " + std::to_string(rd.remaining()) +
                                    " bytes, header declares " + std::to_string(want));
  if (rd.remaining() > want)
    fail(ErrorKind::format, path.string() + ": " + std::to_string(rd.remaining() - want) +
                                " trailing bytes after payload");
  raw.data.resize(count);
  const unsigned char* p = rd.cursor();
  for (std::uint64_t k = 0; k < count; ++k, p += 4) {
    const std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                               (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
    raw.data[k] = std::bit_cast<float>(bits);
  }
  return raw;
}

void write_activation_csv(const fs::path& path, const ActivationMatrix& acts) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
  for (std::size_t c = 0; c < acts.units(); ++c) f << (c ? "," : "") << "u" << c;
  f << "\n";
  const auto& v = acts.values();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) f << (c ? "," : "") << format_float(v(r, c));
    f << "\n";
  }
}

ActivationMatrix load_activations(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(ErrorKind::io, "cannot open " + path.string());
  char head[4] = {0, 0, 0, 0};
  probe.read(head, 4);
  const bool is_actv = probe.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0;
  probe.close();
  if (!is_actv) {
    if (path.extension() == ".csv") return load_csv(path);
    fail(ErrorKind::format, path.string() + ": bad magic, not an ACTV file");
  }
  RawActv raw = read_actv_raw(path);
  check_finite_row_major(raw.data, raw.cols);
  return ActivationMatrix::from_row_major(std::move(raw.layer), std::move(raw.net), raw.rows,
                                          raw.cols, raw.data);
}

std::vector<std::size_t> subsample_rows(std::size_t total, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::argument, "subsample size must be positive");
  require(n <= total, ErrorKind::argument,
          "cannot draw " + std::to_string(n) + " rows from " + std::to_string(total));
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

ActivationMatrix subsample(const ActivationMatrix& acts, std::size_t n, std::uint64_t seed) {
  const auto rows = subsample_rows(acts.samples(), n, seed);
  MatrixF out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(acts.units()));
  for (std::size_t r = 0; r < n; ++r)
    out.row(static_cast<Eigen::Index>(r)) = acts.values().row(static_cast<Eigen::Index>(rows[r]));
  return ActivationMatrix(acts.layer(), acts.net(), std::move(out));
}

namespace {

void fill_shape(CatalogEntry& e) {
  std::ifstream probe(e.path, std::ios::binary);
  if (!probe) fail(ErrorKind::data, "catalog entry " + e.net + "/" + e.layer +
                                        ": missing file " + e.path.string());
  char head[4] = {0, 0, 0, 0};
  probe.read(head, 4);
  if (probe.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0) {
    // Header-only read: version, two strings, then shape.
    auto u32 = [&] {
      unsigned char b[4] = {0, 0, 0, 0};
      probe.read(reinterpret_cast<char*>(b), 4);
      return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
             (std::uint32_t(b[3]) << 24);
    };
    auto u64 = [&] {
      std::uint64_t lo = u32();
      std::uint64_t hi = u32();
      return lo | (hi << 32);
    };
    u32();
    probe.seekg(u32(), std::ios::cur);
    probe.seekg(u32(), std::ios::cur);
    e.samples = u64();
    e.units = u64();
    if (!probe) fail(ErrorKind::format, e.path.string() + ": header truncated");
  } else {
    const auto acts = load_activations(e.path);
    e.samples = acts.samples();
    e.units = acts.units();
  }
}

}  // namespace

LayerCatalog LayerCatalog::from_entries(std::vector<CatalogEntry> entries) {
  LayerCatalog cat;
  cat.entries_ = std::move(entries);
  for (auto& e : cat.entries_)
    if (e.samples == 0 || e.units == 0) fill_shape(e);
  cat.validate();
  return cat;
}

LayerCatalog LayerCatalog::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open catalog " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::format, path.string() + ": catalog must be a JSON array");
  std::vector<CatalogEntry> entries;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("net") || !item.contains("layer") ||
        !item.contains("path"))
      fail(ErrorKind::format, path.string() + ": catalog entries need net, layer, path");
    CatalogEntry e;
    e.net = item.at("net").get<std::string>();
    e.layer = item.at("layer").get<std::string>();
    fs::path p = item.at("path").get<std::string>();
    e.path = p.is_absolute() ? p : path.parent_path() / p;
    entries.push_back(std::move(e));
  }
  return from_entries(std::move(entries));
}

void LayerCatalog::save(const fs::path& path) const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : entries_) {
    std::string p = e.path.string();
    if (path.has_parent_path() && e.path.parent_path() == path.parent_path())
      p = e.path.filename().string();
    doc.push_back({{"net", e.net}, {"layer", e.layer}, {"path", p}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
  f << doc.dump(2) << "\n";
}

void LayerCatalog::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries_) {
    if (!seen.insert({e.net, e.layer}).second)
      fail(ErrorKind::data, "catalog lists " + e.net + "/" + e.layer + " twice");
    for (const auto& o : entries_) {
      if (o.layer == e.layer && o.units != e.units)
        fail(ErrorKind::data, "layer " + e.layer + " has width " + std::to_string(e.units) +
                                  " in " + e.net + " but " + std::to_string(o.units) + " in " +
                                  o.net);
    }
  }
}

const CatalogEntry& LayerCatalog::find(const std::string& net, const std::string& layer) const {
  for (const auto& e : entries_)
    if (e.net == net && e.layer == layer) return e;
  fail(ErrorKind::data, "catalog has no entry for net '" + net + "' layer '" + layer + "'");
}

std::vector<std::string> LayerCatalog::nets() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.net) == out.end()) out.push_back(e.net);
  return out;
}

std::vector<std::string> LayerCatalog::layers() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.layer) == out.end()) out.push_back(e.layer);
  return out;
}

ActivationMatrix LayerCatalog::load(const std::string& net, const std::string& layer) const {
  const auto& e = find(net, layer);
  auto acts = load_activations(e.path);
  if (acts.net() == net && acts.layer() == layer) return acts;
  // CSV files carry no names; the catalog is authoritative.
  MatrixF values = acts.values();
  return ActivationMatrix(layer, net, std::move(values));
}

}  // namespace repalign
