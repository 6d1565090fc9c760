// Copyright 2026 The aretrim Authors
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

#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aretrim/core.hpp"

namespace aretrim {

enum class DatasetFormat { kCsv, kBinary };

namespace detail {

constexpr char kDatasetMagic[4] = {'A', 'T', 'D', 'S'};

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline void put_f64_le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double v = 0.0;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || b == e)
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": '" + tok + "' is not a number");
  return v;
}

}  // namespace detail

// Writes content to a temporary sibling and renames into place.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (std::size_t t = 0; t < data.size(); ++t) {
    for (int i = 0; i < data.dim(); ++i) {
      if (i) out.push_back(',');
      out += detail::format_double(data[t][i]);
    }
    out.push_back('\n');
  }
  return out;
}

inline Dataset dataset_from_csv(const std::string& text) {
  std::vector<Vec> rows;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Vec row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const std::string tok = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(detail::parse_double(tok, line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(width) +
                               " values, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset file is empty");
  return Dataset(std::move(rows));
}

// Binary layout: "ATDS", u32 LE T, u32 LE d, then T*d doubles, LE IEEE-754.
inline std::string dataset_to_binary(const Dataset& data) {
  std::string out;
  out.append(detail::kDatasetMagic, 4);
  detail::put_u32_le(out, static_cast<std::uint32_t>(data.size()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(data.dim()));
  for (std::size_t t = 0; t < data.size(); ++t)
    for (int i = 0; i < data.dim(); ++i) detail::put_f64_le(out, data[t][i]);
  return out;
}

inline Dataset dataset_from_binary(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), detail::kDatasetMagic, 4) != 0)
    throw std::runtime_error("not a binary dataset file (bad magic)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t n = detail::get_u32_le(p + 4);
  const std::uint32_t d = detail::get_u32_le(p + 8);
  if (bytes.size() != 12 + std::size_t(n) * d * 8)
    throw std::runtime_error("binary dataset file is truncated");
  std::vector<Vec> rows(n, Vec(d));
  const unsigned char* q = p + 12;
  for (std::uint32_t t = 0; t < n; ++t)
    for (std::uint32_t i = 0; i < d; ++i, q += 8)
      rows[t][i] = detail::get_f64_le(q);
  return Dataset(std::move(rows));
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            DatasetFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == DatasetFormat::kCsv ? dataset_from_csv(bytes)
                                         : dataset_from_binary(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& data,
                         DatasetFormat format) {
  atomic_write(path, format == DatasetFormat::kCsv ? dataset_to_csv(data)
                                                   : dataset_to_binary(data));
}

// Model text format: {dim, num_components, weights[], components[{mean[], var[]}]}.
inline std::string gmm_to_json(const Gmm& model) {
  nlohmann::ordered_json j;
  j["dim"] = model.dim();
  j["num_components"] = model.num_components();
  j["weights"] = model.weights;
  j["components"] = nlohmann::ordered_json::array();
  for (const auto& c : model.components)
    j["components"].push_back({{"mean", c.mean}, {"var", c.var}});
  return j.dump(2) + "\n";
}

inline Gmm gmm_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  Gmm model;
  const int dim = j.at("dim").get<int>();
  const int k = j.at("num_components").get<int>();
  model.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& jc : j.at("components")) {
    DiagGaussian g;
    g.mean = jc.at("mean").get<Vec>();
    g.var = jc.at("var").get<Vec>();
    model.components.push_back(std::move(g));
  }
  if (model.num_components() != k)
    throw std::runtime_error("model file: num_components disagrees with components[]");
  if (model.dim() != dim)
    throw std::runtime_error("model file: dim disagrees with component vectors");
  // Readers are stricter than arithmetic: a hand-edited file must still
  // describe a normalized mixture.
  check_gmm(model, 1e-9);
  return model;
}

inline Gmm load_gmm(const std::filesystem::path& path) {
  try {
    return gmm_from_json(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void save_gmm(const std::filesystem::path& path, const Gmm& model) {
  atomic_write(path, gmm_to_json(model));
}

// Sidecar outlier mask: one 0/1 per line, 1 = outlier.
inline void save_mask(const std::filesystem::path& path, const Mask& mask) {
  std::string out;
  for (auto b : mask) {
    out.push_back(b ? '1' : '0');
    out.push_back('\n');
  }
  atomic_write(path, out);
}

inline Mask load_mask(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Mask mask;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0")
      mask.push_back(0);
    else if (line == "1")
      mask.push_back(1);
    else
      throw std::runtime_error(path.string() + ": line " +
                               std::to_string(line_no) + " is not 0 or 1");
  }
  return mask;
}

}  // namespace aretrim
