// core/src/synthdata.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "subemb/synthdata.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "subemb/serialize_util.h"

namespace subemb {

using nlohmann::json;

void DatasetConfig::Validate() const {
  if (n_train_identities < 1 || n_test_identities < 1)
    throw ConfigError("DatasetConfig: identity counts must be >= 1");
  if (samples_per_identity < 1)
    throw ConfigError("DatasetConfig: samples_per_identity must be >= 1");
  if (observation_dim < 2)
    throw ConfigError("DatasetConfig: observation_dim must be >= 2");
  if (noise_scale < 0.0)
    throw ConfigError("DatasetConfig: noise_scale must be >= 0");
  if (apply_probability < 0.0 || apply_probability > 1.0)
    throw ConfigError("DatasetConfig: apply_probability must be in [0, 1]");
  if (attribute_count < 0)
    throw ConfigError("DatasetConfig: attribute_count must be >= 0");
  if (corruption.blur_radius_min < 0 ||
      corruption.blur_radius_max < corruption.blur_radius_min)
    throw ConfigError("DatasetConfig: bad blur radius range");
  if (corruption.occlude_fraction_min < 0.0 ||
      corruption.occlude_fraction_max < corruption.occlude_fraction_min ||
      corruption.occlude_fraction_max >= 1.0)
    throw ConfigError("DatasetConfig: occlusion fraction must be in [0, 1)");
  if (corruption.occlude_blocks < 1)
    throw ConfigError("DatasetConfig: occlude_blocks must be >= 1");
  if (corruption.pose_angle_min_deg < 0.0 ||
      corruption.pose_angle_max_deg < corruption.pose_angle_min_deg)
    throw ConfigError("DatasetConfig: bad pose angle range");
  if (format != "csv" && format != "binary")
    throw ConfigError("DatasetConfig: format must be 'csv' or 'binary'");
}

Mat GenIdentities(int count, int dim, RngStream rng) {
  Mat protos(count, dim);
  for (int i = 0; i < count; ++i) {
    RngStream row_rng = rng.Derive(static_cast<uint64_t>(i));
    auto row = protos.Row(i);
    double norm_sq = 0.0;
    for (int d = 0; d < dim; ++d) {
      row[d] = row_rng.Normal();
      norm_sq += row[d] * row[d];
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (int d = 0; d < dim; ++d) row[d] *= inv;
  }
  return protos;
}

VariationSample SampleClean(std::span<const double> prototype,
                            double noise_scale, int n_variations,
                            RngStream rng) {
  VariationSample s;
  s.u.assign(n_variations, 1);
  s.x.assign(prototype.begin(), prototype.end());
  if (noise_scale > 0.0) {
    // Per-coordinate sigma noise_scale / sqrt(dim): the noise vector has
    // expected norm noise_scale regardless of dimension.
    const double sigma = noise_scale / std::sqrt(double(prototype.size()));
    for (double &x : s.x) x += sigma * rng.Normal();
  }
  s.x = L2Normalize(s.x);
  return s;
}

void CorruptBlur(VariationSample *sample, int radius) {
  if (radius < 0) throw ConfigError("CorruptBlur: negative radius");
  if (radius == 0) return;
  const int n = static_cast<int>(sample->x.size());
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(n - 1, i + radius);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += sample->x[j];
    out[i] = acc / (hi - lo + 1);
  }
  sample->x = L2Normalize(out);
  sample->u[kBlurVariation] = 0;
}

void CorruptOcclude(VariationSample *sample, double block_fraction, int blocks,
                    RngStream *rng) {
  if (block_fraction >= 1.0)
    throw ConfigError("CorruptOcclude: block fraction must be < 1");
  if (block_fraction < 0.0)
    throw ConfigError("CorruptOcclude: negative block fraction");
  if (block_fraction == 0.0 || blocks == 0) return;
  const int n = static_cast<int>(sample->x.size());
  const int block_len =
      static_cast<int>(std::llround(block_fraction * n));
  if (block_len == 0) return;
  for (int b = 0; b < blocks; ++b) {
    const int start = rng->UniformInt(0, n - block_len);
    for (int i = start; i < start + block_len; ++i) sample->x[i] = 0.0;
  }
  sample->x = L2Normalize(sample->x);
  sample->u[kOccludeVariation] = 0;
}

RotationPlane MakeRotationPlane(int dim, RngStream rng) {
  RotationPlane plane;
  plane.e1.resize(dim);
  plane.e2.resize(dim);
  for (int d = 0; d < dim; ++d) plane.e1[d] = rng.Normal();
  plane.e1 = L2Normalize(plane.e1);
  for (int d = 0; d < dim; ++d) plane.e2[d] = rng.Normal();
  // Gram-Schmidt against e1.
  const double proj = Dot(plane.e2, plane.e1);
  Axpy(-proj, plane.e1, plane.e2);
  plane.e2 = L2Normalize(plane.e2);
  return plane;
}

void CorruptPose(VariationSample *sample, double angle_rad,
                 const RotationPlane &plane) {
  if (angle_rad == 0.0) return;
  if (plane.e1.size() != sample->x.size())
    throw DimensionError("CorruptPose: plane dimension mismatch");
  const double c1 = Dot(sample->x, plane.e1);
  const double c2 = Dot(sample->x, plane.e2);
  const double cs = std::cos(angle_rad);
  const double sn = std::sin(angle_rad);
  const double r1 = c1 * cs - c2 * sn;
  const double r2 = c1 * sn + c2 * cs;
  Axpy(r1 - c1, plane.e1, sample->x);
  Axpy(r2 - c2, plane.e2, sample->x);
  sample->x = L2Normalize(sample->x);
  sample->u[kPoseVariation] = 0;
}

void Augment(VariationSample *sample, const CorruptionRanges &ranges,
             double probability, const RotationPlane &plane, RngStream rng,
             const std::array<bool, kAugmentableVariations> &enabled) {
  if (enabled[kBlurVariation] && rng.Uniform() < probability) {
    const int radius =
        rng.UniformInt(ranges.blur_radius_min, ranges.blur_radius_max);
    CorruptBlur(sample, radius);
  }
  if (enabled[kOccludeVariation] && rng.Uniform() < probability) {
    const double fraction =
        rng.Uniform(ranges.occlude_fraction_min, ranges.occlude_fraction_max);
    CorruptOcclude(sample, fraction, ranges.occlude_blocks, &rng);
  }
  if (enabled[kPoseVariation] && rng.Uniform() < probability) {
    const double angle_deg =
        rng.Uniform(ranges.pose_angle_min_deg, ranges.pose_angle_max_deg);
    CorruptPose(sample, angle_deg * M_PI / 180.0, plane);
  }
}

Mat MakeAttributeFunctionals(int count, int dim, RngStream rng) {
  Mat f(count, dim);
  for (int t = 0; t < count; ++t) {
    auto row = f.Row(t);
    for (int d = 0; d < dim; ++d) row[d] = rng.Normal();
    const double n = Norm(row);
    for (double &x : row) x /= n;
  }
  return f;
}

std::vector<int> MineAttributeLabels(std::span<const double> prototype,
                                     const Mat &functionals) {
  if (functionals.NumRows() > 0 &&
      functionals.NumCols() != static_cast<int>(prototype.size()))
    throw DimensionError("MineAttributeLabels: dimension mismatch");
  std::vector<int> labels(functionals.NumRows());
  for (int t = 0; t < functionals.NumRows(); ++t)
    labels[t] = Dot(functionals.Row(t), prototype) >= 0.0 ? 1 : 0;
  return labels;
}

namespace {

std::vector<VariationSample> BuildSplit(const DatasetConfig &cfg,
                                        const Mat &protos,
                                        const Mat &functionals,
                                        const RotationPlane &plane,
                                        RngStream split_rng, bool corrupt) {
  std::vector<VariationSample> out;
  out.reserve(static_cast<size_t>(protos.NumRows()) * cfg.samples_per_identity);
  for (int id = 0; id < protos.NumRows(); ++id) {
    const std::vector<int> attrs =
        MineAttributeLabels(protos.Row(id), functionals);
    for (int s = 0; s < cfg.samples_per_identity; ++s) {
      RngStream rng = split_rng.Derive(static_cast<uint64_t>(id))
                          .Derive(static_cast<uint64_t>(s));
      VariationSample sample = SampleClean(protos.Row(id), cfg.noise_scale,
                                           cfg.NumVariations(),
                                           rng.Derive("noise"));
      sample.identity = id;
      for (int t = 0; t < cfg.attribute_count; ++t)
        sample.u[kAugmentableVariations + t] = attrs[t];
      if (corrupt)
        Augment(&sample, cfg.corruption, cfg.apply_probability, plane,
                rng.Derive("corrupt"));
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace

Dataset MakeDataset(const DatasetConfig &config) {
  config.Validate();
  Dataset ds;
  ds.config = config;
  RngStream root(config.seed, "dataset");
  ds.plane = MakeRotationPlane(config.observation_dim, root.Derive("pose-plane"));
  const Mat train_protos = GenIdentities(
      config.n_train_identities, config.observation_dim,
      root.Derive("identities-train"));
  const Mat test_protos = GenIdentities(
      config.n_test_identities, config.observation_dim,
      root.Derive("identities-test"));
  const Mat functionals = MakeAttributeFunctionals(
      config.attribute_count, config.observation_dim, root.Derive("attributes"));
  ds.train = BuildSplit(config, train_protos, functionals, ds.plane,
                        root.Derive("samples-train"), /*corrupt=*/false);
  ds.test = BuildSplit(config, test_protos, functionals, ds.plane,
                       root.Derive("samples-test"), /*corrupt=*/true);
  return ds;
}

namespace {

json ConfigToJson(const DatasetConfig &c) {
  return json{{"n_train_identities", c.n_train_identities},
              {"n_test_identities", c.n_test_identities},
              {"samples_per_identity", c.samples_per_identity},
              {"observation_dim", c.observation_dim},
              {"noise_scale", c.noise_scale},
              {"apply_probability", c.apply_probability},
              {"attribute_count", c.attribute_count},
              {"seed", c.seed},
              {"format", c.format},
              {"corruption",
               {{"blur_radius_min", c.corruption.blur_radius_min},
                {"blur_radius_max", c.corruption.blur_radius_max},
                {"occlude_fraction_min", c.corruption.occlude_fraction_min},
                {"occlude_fraction_max", c.corruption.occlude_fraction_max},
                {"occlude_blocks", c.corruption.occlude_blocks},
                {"pose_angle_min_deg", c.corruption.pose_angle_min_deg},
                {"pose_angle_max_deg", c.corruption.pose_angle_max_deg}}}};
}

DatasetConfig ConfigFromJson(const json &j) {
  DatasetConfig c;
  c.n_train_identities = j.at("n_train_identities").get<int>();
  c.n_test_identities = j.at("n_test_identities").get<int>();
  c.samples_per_identity = j.at("samples_per_identity").get<int>();
  c.observation_dim = j.at("observation_dim").get<int>();
  c.noise_scale = j.at("noise_scale").get<double>();
  c.apply_probability = j.at("apply_probability").get<double>();
  c.attribute_count = j.at("attribute_count").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.format = j.at("format").get<std::string>();
  const json &k = j.at("corruption");
  c.corruption.blur_radius_min = k.at("blur_radius_min").get<int>();
  c.corruption.blur_radius_max = k.at("blur_radius_max").get<int>();
  c.corruption.occlude_fraction_min =
      k.at("occlude_fraction_min").get<double>();
  c.corruption.occlude_fraction_max =
      k.at("occlude_fraction_max").get<double>();
  c.corruption.occlude_blocks = k.at("occlude_blocks").get<int>();
  c.corruption.pose_angle_min_deg = k.at("pose_angle_min_deg").get<double>();
  c.corruption.pose_angle_max_deg = k.at("pose_angle_max_deg").get<double>();
  return c;
}

void WriteSplitCsv(const std::string &path,
                   const std::vector<VariationSample> &rows, int n_variations,
                   int dim) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  for (const VariationSample &s : rows) {
    out << s.identity;
    for (int t = 0; t < n_variations; ++t) out << ',' << s.u[t];
    char buf[32];
    for (int d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", s.x[d]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<VariationSample> ReadSplitCsv(const std::string &path,
                                          int n_variations, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<VariationSample> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    VariationSample s;
    s.u.resize(n_variations);
    s.x.resize(dim);
    const char *p = line.c_str();
    char *end = nullptr;
    auto next_field = [&](const char *what) -> double {
      const double v = std::strtod(p, &end);
      if (end == p)
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": malformed field (" + what + ")");
      p = *end == ',' ? end + 1 : end;
      return v;
    };
    s.identity = static_cast<int>(next_field("identity"));
    for (int t = 0; t < n_variations; ++t)
      s.u[t] = static_cast<int>(next_field("label"));
    for (int d = 0; d < dim; ++d) s.x[d] = next_field("value");
    rows.push_back(std::move(s));
  }
  return rows;
}

void WriteSplitBinary(const std::string &path,
                      const std::vector<VariationSample> &rows,
                      int n_variations, int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  WriteU64(out, rows.size());
  for (const VariationSample &s : rows) {
    WriteU64(out, static_cast<uint64_t>(s.identity));
    for (int t = 0; t < n_variations; ++t)
      WriteU64(out, static_cast<uint64_t>(s.u[t]));
    for (int d = 0; d < dim; ++d) WriteF64(out, s.x[d]);
  }
}

std::vector<VariationSample> ReadSplitBinary(const std::string &path,
                                             int n_variations, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  const uint64_t count = ReadU64(in);
  std::vector<VariationSample> rows(count);
  for (uint64_t i = 0; i < count; ++i) {
    rows[i].identity = static_cast<int>(ReadU64(in));
    rows[i].u.resize(n_variations);
    for (int t = 0; t < n_variations; ++t)
      rows[i].u[t] = static_cast<int>(ReadU64(in));
    rows[i].x.resize(dim);
    for (int d = 0; d < dim; ++d) rows[i].x[d] = ReadF64(in);
  }
  if (!in) throw ConfigError("truncated dataset file " + path);
  return rows;
}

}  // namespace

void SaveDataset(const Dataset &dataset, const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string ext = dataset.config.format == "csv" ? ".csv" : ".bin";

  json manifest = {
      {"kind", "subemb-dataset"},
      {"version", 1},
      {"config", ConfigToJson(dataset.config)},
      {"n_variations", dataset.NumVariations()},
      {"variation_names",
       json::array({"blur", "occlude", "pose", "attr"})},
      {"train_file", "train" + ext},
      {"test_file", "test" + ext},
      {"train_count", dataset.train.size()},
      {"test_count", dataset.test.size()},
      {"rotation_plane", {{"e1", dataset.plane.e1}, {"e2", dataset.plane.e2}}},
  };
  {
    std::ofstream out(fs::path(dir) / "dataset.json");
    if (!out) throw ConfigError("cannot write dataset manifest in " + dir);
    out << manifest.dump(2) << '\n';
  }

  const int nv = dataset.NumVariations();
  const int dim = dataset.config.observation_dim;
  const std::string train_path = (fs::path(dir) / ("train" + ext)).string();
  const std::string test_path = (fs::path(dir) / ("test" + ext)).string();
  if (dataset.config.format == "csv") {
    WriteSplitCsv(train_path, dataset.train, nv, dim);
    WriteSplitCsv(test_path, dataset.test, nv, dim);
  } else {
    WriteSplitBinary(train_path, dataset.train, nv, dim);
    WriteSplitBinary(test_path, dataset.test, nv, dim);
  }
}

Dataset LoadDataset(const std::string &dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "dataset.json");
  if (!in) throw ConfigError("no dataset.json in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception &e) {
    throw ConfigError("malformed dataset.json: " + std::string(e.what()));
  }
  if (manifest.value("kind", "") != "subemb-dataset")
    throw ConfigError("not a dataset manifest: " + dir);

  Dataset ds;
  ds.config = ConfigFromJson(manifest.at("config"));
  ds.plane.e1 = manifest.at("rotation_plane").at("e1").get<Vec>();
  ds.plane.e2 = manifest.at("rotation_plane").at("e2").get<Vec>();
  const int nv = manifest.at("n_variations").get<int>();
  if (nv != ds.config.NumVariations())
    throw ConfigError("dataset manifest variation count mismatch");
  const int dim = ds.config.observation_dim;
  const std::string train_path =
      (fs::path(dir) / manifest.at("train_file").get<std::string>()).string();
  const std::string test_path =
      (fs::path(dir) / manifest.at("test_file").get<std::string>()).string();
  if (ds.config.format == "csv") {
    ds.train = ReadSplitCsv(train_path, nv, dim);
    ds.test = ReadSplitCsv(test_path, nv, dim);
  } else {
    ds.train = ReadSplitBinary(train_path, nv, dim);
    ds.test = ReadSplitBinary(test_path, nv, dim);
  }
  if (ds.train.size() != manifest.at("train_count").get<size_t>() ||
      ds.test.size() != manifest.at("test_count").get<size_t>())
    throw ConfigError("dataset row counts disagree with manifest");
  return ds;
}

}  // namespace subemb
