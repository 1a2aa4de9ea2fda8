// Copyright 2026 The AdaRC Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adarc/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "adarc/binary_io.hpp"

namespace adarc {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kFeaturesVersion = 1;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

long long parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument(where + ": expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

const Mask* Dataset::mask(const std::string& name) const {
  auto it = masks.find(name);
  return it == masks.end() ? nullptr : &it->second;
}

void Dataset::validate() const {
  const NodeId n = num_nodes();
  detail::require(features.rows() == n, "dataset: feature rows (" +
                                            std::to_string(features.rows()) +
                                            ") != node count (" + std::to_string(n) + ")");
  detail::require(labels.size() == n, "dataset: label count does not match node count");
  detail::require(num_classes >= 1, "dataset: num_classes must be positive");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    detail::require(labels[i] >= 0 && labels[i] < num_classes,
                    "dataset: label " + std::to_string(labels[i]) + " at node " +
                        std::to_string(i) + " outside [0, " +
                        std::to_string(num_classes) + ")");
  }
  for (const auto& [name, m] : masks) {
    detail::require(static_cast<NodeId>(m.size()) == n,
                    "dataset: mask '" + name + "' has wrong length");
  }
}

Dataset with_graph(const Dataset& dataset, Graph graph) {
  Dataset out;
  out.graph = std::move(graph);
  out.features = dataset.features;
  out.labels = dataset.labels;
  out.num_classes = dataset.num_classes;
  out.masks = dataset.masks;
  out.validate();
  return out;
}

void round_features_to_f32(Matrix& features) {
  features = features.cast<float>().cast<double>();
}

void write_features_bin(const Matrix& features, const fs::path& path) {
  auto out = open_out(path);
  out.write("ADRC", 4);
  binary::write_u32(out, kFeaturesVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(features.rows()));
  binary::write_u32(out, static_cast<std::uint32_t>(features.cols()));
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows =
      features.cast<float>();
  out.write(reinterpret_cast<const char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(float)));
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

Matrix read_features_bin(const fs::path& path) {
  auto in = open_in(path);
  const std::string what = path.string();
  binary::expect_magic(in, "ADRC", what);
  const std::uint32_t version = binary::read_u32(in, what);
  if (version != kFeaturesVersion) {
    throw InvalidArgument(what + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t n = binary::read_u32(in, what);
  const std::uint32_t d = binary::read_u32(in, what);
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, d);
  const auto bytes = static_cast<std::streamsize>(rows.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(rows.data()), bytes)) {
    throw InvalidArgument(what + ": truncated payload");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw InvalidArgument(what + ": trailing bytes after payload");
  }
  return rows.cast<double>();
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "edges.csv");
    for (const Edge& e : dataset.graph.edges()) out << e.u << ',' << e.v << '\n';
  }
  write_features_bin(dataset.features, dir / "features.bin");
  {
    auto out = open_out(dir / "labels.csv");
    for (Eigen::Index i = 0; i < dataset.labels.size(); ++i) out << dataset.labels[i] << '\n';
  }
  const fs::path masks_path = dir / "masks.csv";
  if (dataset.masks.empty()) {
    fs::remove(masks_path);
    return;
  }
  auto out = open_out(masks_path);
  bool first = true;
  for (const auto& [name, m] : dataset.masks) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  out << '\n';
  for (NodeId i = 0; i < dataset.num_nodes(); ++i) {
    first = true;
    for (const auto& [name, m] : dataset.masks) {
      out << (first ? "" : ",") << (m[i] ? 1 : 0);
      first = false;
    }
    out << '\n';
  }
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  ds.features = read_features_bin(dir / "features.bin");
  const auto n = static_cast<NodeId>(ds.features.rows());

  std::vector<Edge> edges;
  {
    auto in = open_in(dir / "edges.csv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const std::string where = "edges.csv:" + std::to_string(line_no);
      auto fields = split_fields(line);
      if (fields.size() != 2) throw InvalidArgument(where + ": expected two columns");
      edges.push_back({static_cast<NodeId>(parse_int(fields[0], where)),
                       static_cast<NodeId>(parse_int(fields[1], where))});
    }
  }
  ds.graph = build_graph(edges, n);

  std::vector<int> labels;
  {
    auto in = open_in(dir / "labels.csv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      labels.push_back(static_cast<int>(parse_int(line, "labels.csv:" + std::to_string(line_no))));
    }
  }
  ds.labels = Eigen::Map<const LabelVector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  ds.num_classes = ds.labels.size() > 0 ? ds.labels.maxCoeff() + 1 : 0;

  const fs::path masks_path = dir / "masks.csv";
  if (fs::exists(masks_path)) {
    auto in = open_in(masks_path);
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("masks.csv: missing header");
    std::vector<std::string> names;
    for (auto f : split_fields(header)) names.emplace_back(f);
    for (const auto& name : names) ds.masks[name] = Mask(static_cast<std::size_t>(n), false);
    std::string line;
    NodeId row = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const std::string where = "masks.csv:" + std::to_string(row + 2);
      auto fields = split_fields(line);
      if (fields.size() != names.size()) throw InvalidArgument(where + ": wrong column count");
      if (row >= n) throw InvalidArgument(where + ": more rows than nodes");
      for (std::size_t c = 0; c < names.size(); ++c) {
        ds.masks[names[c]][row] = parse_int(fields[c], where) != 0;
      }
      ++row;
    }
    if (row != n) throw InvalidArgument("masks.csv: expected " + std::to_string(n) + " rows");
  }
  ds.validate();
  return ds;
}

}  // namespace adarc
