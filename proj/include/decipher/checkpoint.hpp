// Copyright 2026 The decipher Authors
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

// Text checkpoint container:
//
//   decipher-checkpoint
//   version 1
//   config <key> <value>          (one line per ModelConfig field)
//   tensor <name> <rows> <cols>
//   <rows*cols values, row-major, whitespace separated>
//   ...
//   end
//
// Values are written with 17 significant digits so doubles round-trip.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "decipher/error.hpp"
#include "decipher/seq2seq.hpp"

namespace decipher {

inline constexpr int kCheckpointVersion = 1;

template <typename Scalar>
void write_checkpoint(std::ostream& out, const ModelParams<Scalar>& params, const ModelConfig& config) {
  out.precision(17);
  out << "decipher-checkpoint\nversion " << kCheckpointVersion << '\n';
  out << "config embedding_dim " << config.embedding_dim << '\n'
      << "config hidden_dim " << config.hidden_dim << '\n'
      << "config universal_size " << config.universal_size << '\n'
      << "config lambda " << config.lambda << '\n'
      << "config norm_ratio " << config.norm_ratio << '\n'
      << "config regularizer " << to_string(config.regularizer) << '\n'
      << "config samples " << config.samples << '\n'
      << "config max_decode_length " << config.max_decode_length << '\n'
      << "config lost_symbols " << config.lost_symbols << '\n'
      << "config known_symbols " << config.known_symbols << '\n';
  params.for_each([&](std::string_view name, const MatrixT<Scalar>& m) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << static_cast<double>(m(r, c));
      out << '\n';
    }
  });
  out << "end\n";
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<Scalar>& params,
                     const ModelConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, params, config);
  if (!out) throw InputError("checkpoint write failed for '" + path.string() + "'");
}

template <typename Scalar = double>
std::pair<ModelParams<Scalar>, ModelConfig> read_checkpoint(std::istream& in) {
  std::string word;
  if (!(in >> word) || word != "decipher-checkpoint") throw InputError("not a checkpoint file");
  int version = 0;
  if (!(in >> word >> version) || word != "version") throw InputError("checkpoint missing version");
  if (version != kCheckpointVersion)
    throw InputError("unsupported checkpoint version " + std::to_string(version));

  ModelConfig cfg;
  std::map<std::string, std::pair<std::pair<long, long>, std::vector<double>>> tensors;
  while (in >> word) {
    if (word == "end") break;
    if (word == "config") {
      std::string key, value;
      in >> key >> value;
      if (key == "embedding_dim") cfg.embedding_dim = std::stoi(value);
      else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
      else if (key == "universal_size") cfg.universal_size = std::stoi(value);
      else if (key == "lambda") cfg.lambda = std::stod(value);
      else if (key == "norm_ratio") cfg.norm_ratio = std::stod(value);
      else if (key == "regularizer") cfg.regularizer = parse_regularizer(value);
      else if (key == "samples") cfg.samples = std::stoi(value);
      else if (key == "max_decode_length") cfg.max_decode_length = std::stoi(value);
      else if (key == "lost_symbols") cfg.lost_symbols = std::stoi(value);
      else if (key == "known_symbols") cfg.known_symbols = std::stoi(value);
      else throw InputError("unknown checkpoint config key '" + key + "'");
    } else if (word == "tensor") {
      std::string name;
      long rows = 0, cols = 0;
      if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0) throw InputError("bad tensor header");
      std::vector<double> values(static_cast<std::size_t>(rows * cols));
      for (auto& v : values)
        if (!(in >> v)) throw InputError("truncated tensor '" + name + "'");
      tensors[name] = {{rows, cols}, std::move(values)};
    } else {
      throw InputError("unexpected checkpoint token '" + word + "'");
    }
  }
  if (word != "end") throw InputError("checkpoint missing end marker");

  auto params = shaped_params<Scalar>(cfg);
  params.for_each([&](std::string_view name, MatrixT<Scalar>& m) {
    auto it = tensors.find(std::string(name));
    if (it == tensors.end()) throw InputError("checkpoint missing tensor '" + std::string(name) + "'");
    const auto [rows, cols] = it->second.first;
    if (rows != m.rows() || cols != m.cols())
      throw InputError("checkpoint tensor '" + std::string(name) + "' has the wrong shape");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = static_cast<Scalar>(it->second.second[static_cast<std::size_t>(r * cols + c)]);
  });
  return {std::move(params), cfg};
}

template <typename Scalar = double>
std::pair<ModelParams<Scalar>, ModelConfig> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint<Scalar>(in);
}

}  // namespace decipher
