/*
 * Copyright 2026 The AnaXNet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// On-disk formats. All integers and floats are little-endian.
//
//   features.bin   "ANAXFEAT" u32 version, u32 N, u32 k, u32 d, then N*k*d f32
//   labels.bin     "ANAXLABL" u32 version, u32 N, u32 k, u32 M, then N*k*M bytes in {0,1}
//   mask.bin       "ANAXMASK" u32 version, u32 N, u32 k, then N*k bytes in {0,1}
//   adjacency.bin  "ANAXADJM" u32 version, u32 k, f64 tau, then raw, binary, normalized (k*k f64 each)
//   model.bin      "ANAXMODL" u32 version, u32 k, u32 d, u32 M, u32 layers, u32 dims[layers],
//                  then every graph layer weight followed by the classifier (f64)
//
// A dataset directory also holds meta.json with the names, ids and split of
// every image. A checkpoint with zero graph layers is the baseline-fc variant.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "anaxnet/adjacency.hpp"
#include "anaxnet/error.hpp"
#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"
#include "anaxnet/model.hpp"

namespace anaxnet {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "' (expected train, val or test)");
}

/// Label descriptions L1-L9 of the chest X-ray finding vocabulary.
inline const std::vector<std::string>& default_label_names() {
  static const std::vector<std::string> names = {
      "Lung Opacity",  "Pleural Effusion", "Atelectasis",
      "Enlarged Cardiac Silhouette", "Pulmonary Edema/Hazy Opacity", "Pneumothorax",
      "Consolidation", "Fluid Overload/Heart Failure", "Pneumonia"};
  return names;
}

/// The 18 anatomical regions of a frontal chest X-ray.
inline const std::vector<std::string>& default_region_names() {
  static const std::vector<std::string> names = {
      "right lung",         "right apical zone",       "right upper lung zone", "right mid lung zone",
      "right lower lung zone", "right hilar structures", "right costophrenic angle", "left lung",
      "left apical zone",   "left upper lung zone",    "left mid lung zone",    "left lower lung zone",
      "left hilar structures", "left costophrenic angle", "mediastinum",        "upper mediastinum",
      "cardiac silhouette", "trachea"};
  return names;
}

/// Anatomical names when k = 18, otherwise region_1..region_k.
inline std::vector<std::string> region_names_for(std::size_t k) {
  if (k == default_region_names().size()) return default_region_names();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("region_" + std::to_string(i + 1));
  return out;
}

/// The first M finding names when M <= 9, otherwise label_1..label_M.
inline std::vector<std::string> label_names_for(std::size_t m) {
  const auto& names = default_label_names();
  if (m <= names.size()) return {names.begin(), names.begin() + static_cast<std::ptrdiff_t>(m)};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back("label_" + std::to_string(i + 1));
  return out;
}

struct DatasetManifest {
  std::uint32_t version = kFormatVersion;
  std::size_t regions = 0;
  std::size_t features = 0;
  std::size_t labels = 0;
  std::vector<std::string> region_names;
  std::vector<std::string> label_names;
  std::vector<std::string> image_ids;
  std::vector<Split> splits;  // parallel to image_ids

  std::size_t images() const { return image_ids.size(); }

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (auto x : splits) n += x == s ? 1 : 0;
    return n;
  }

  void validate() const {
    if (region_names.size() != regions) throw DataError("manifest: " + std::to_string(region_names.size()) + " region names for k=" + std::to_string(regions));
    if (label_names.size() != labels) throw DataError("manifest: " + std::to_string(label_names.size()) + " label names for M=" + std::to_string(labels));
    if (splits.size() != image_ids.size()) throw DataError("manifest: every image needs exactly one split");
    std::set<std::string> seen(image_ids.begin(), image_ids.end());
    if (seen.size() != image_ids.size()) throw DataError("manifest: duplicate image ids");
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct ImageRecord {
  std::string id;
  Matrix features;  // k x d
  PresenceMask mask;
  LabelTensor labels;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ImageRecord> records;
};

namespace detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (double v : m.data()) f64(v);
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("failed writing " + path.string());
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  static ByteReader open(const std::filesystem::path& path) { return {read_file(path), path.filename().string()}; }

  void expect_magic(std::string_view m) {
    const auto* p = take(m.size(), "magic");
    if (std::memcmp(p, m.data(), m.size()) != 0) throw FormatError(name_ + ": bad magic bytes (expected " + std::string(m) + ")");
  }

  void expect_version() {
    const auto v = u32("version");
    if (v != kFormatVersion) {
      throw FormatError(name_ + ": unsupported version " + std::to_string(v) + " (expected " + std::to_string(kFormatVersion) + ")");
    }
  }

  std::uint8_t u8(const char* what) { return *take(1, what); }

  std::uint32_t u32(const char* what) {
    const auto* p = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64(const char* what) {
    const auto* p = take(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  Matrix matrix(std::size_t rows, std::size_t cols, const char* what) {
    if (cols != 0 && rows > (bytes_.size() - pos_) / 8 / cols) {
      throw FormatError(name_ + ": truncated payload while reading " + what);
    }
    Matrix m(rows, cols);
    for (double& v : m.data()) v = f64(what);
    return m;
  }

  /// Fails fast when fewer than n bytes remain, before any allocation sized by n.
  void require(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(name_ + ": truncated payload while reading " + what);
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw FormatError(name_ + ": " + std::to_string(bytes_.size() - pos_) + " unexpected trailing bytes");
    }
  }

  const std::string& name() const { return name_; }

 private:
  const std::uint8_t* take(std::size_t n, const char* what) {
    require(n, what);
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::vector<std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

inline std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw DataError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

inline void check_record(const DatasetManifest& man, const ImageRecord& rec) {
  if (rec.features.rows() != man.regions || rec.features.cols() != man.features) {
    throw DataError("record " + rec.id + ": features " + rec.features.shape() + " do not match k=" +
                    std::to_string(man.regions) + ", d=" + std::to_string(man.features));
  }
  if (rec.mask.size() != man.regions) throw DataError("record " + rec.id + ": mask length does not match k");
  for (auto b : rec.mask)
    if (b > 1) throw DataError("record " + rec.id + ": mask byte not in {0,1}");
  if (rec.labels.regions() != man.regions || rec.labels.labels() != man.labels) {
    throw DataError("record " + rec.id + ": labels " + rec.labels.shape() + " do not match manifest");
  }
}

}  // namespace detail

inline nlohmann::json manifest_to_json(const DatasetManifest& man) {
  nlohmann::json j;
  j["version"] = man.version;
  j["N"] = man.images();
  j["k"] = man.regions;
  j["d"] = man.features;
  j["M"] = man.labels;
  j["region_names"] = man.region_names;
  j["label_names"] = man.label_names;
  j["image_ids"] = man.image_ids;
  nlohmann::json splits = nlohmann::json::object();
  for (std::size_t i = 0; i < man.images(); ++i) splits[man.image_ids[i]] = to_string(man.splits[i]);
  j["splits"] = splits;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::string& source = "meta.json") {
  DatasetManifest man;
  try {
    man.version = j.at("version").get<std::uint32_t>();
    if (man.version != kFormatVersion) {
      throw FormatError(source + ": unsupported version " + std::to_string(man.version));
    }
    man.regions = j.at("k").get<std::size_t>();
    man.features = j.at("d").get<std::size_t>();
    man.labels = j.at("M").get<std::size_t>();
    man.region_names = j.at("region_names").get<std::vector<std::string>>();
    man.label_names = j.at("label_names").get<std::vector<std::string>>();
    man.image_ids = j.at("image_ids").get<std::vector<std::string>>();
    if (j.at("N").get<std::size_t>() != man.image_ids.size()) throw FormatError(source + ": N does not match image_ids");
    const auto& splits = j.at("splits");
    for (const auto& id : man.image_ids) {
      if (!splits.contains(id)) throw FormatError(source + ": image " + id + " has no split");
      man.splits.push_back(parse_split(splits.at(id).get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(source + ": " + e.what());
  }
  man.validate();
  return man;
}

/**
 * Writes meta.json, features.bin, labels.bin and mask.bin into `dir`.
 * Features are stored as 32-bit floats. Output bytes depend only on the input.
 */
inline void write_dataset(const DatasetManifest& man, const std::vector<ImageRecord>& records,
                          const std::filesystem::path& dir) {
  man.validate();
  if (records.size() != man.images()) throw DataError("write_dataset: record count does not match manifest");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id != man.image_ids[i]) throw DataError("write_dataset: record order does not match manifest image_ids");
    detail::check_record(man, records[i]);
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const auto n = detail::narrow(man.images(), "N");
  const auto k = detail::narrow(man.regions, "k");

  detail::ByteWriter feat;
  feat.magic("ANAXFEAT");
  feat.u32(kFormatVersion);
  feat.u32(n);
  feat.u32(k);
  feat.u32(detail::narrow(man.features, "d"));
  for (const auto& r : records)
    for (double v : r.features.data()) feat.f32(static_cast<float>(v));
  feat.write_to(dir / "features.bin");

  detail::ByteWriter lab;
  lab.magic("ANAXLABL");
  lab.u32(kFormatVersion);
  lab.u32(n);
  lab.u32(k);
  lab.u32(detail::narrow(man.labels, "M"));
  for (const auto& r : records)
    for (auto b : r.labels.bits()) lab.u8(b);
  lab.write_to(dir / "labels.bin");

  detail::ByteWriter mask;
  mask.magic("ANAXMASK");
  mask.u32(kFormatVersion);
  mask.u32(n);
  mask.u32(k);
  for (const auto& r : records)
    for (auto b : r.mask) mask.u8(b);
  mask.write_to(dir / "mask.bin");

  std::ofstream meta(dir / "meta.json", std::ios::binary | std::ios::trunc);
  if (!meta) throw IoError("cannot open " + (dir / "meta.json").string() + " for writing");
  meta << manifest_to_json(man).dump(2) << "\n";
  if (!meta) throw IoError("failed writing meta.json");
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "meta.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("meta.json: " + std::string(e.what()));
  }
  return manifest_from_json(j);
}

/**
 * Loads the manifest and the records of one split (all records when `split`
 * is empty), in manifest order. Feature rows of absent regions are zeroed.
 */
inline Dataset load_dataset(const std::filesystem::path& dir, std::optional<Split> split = std::nullopt) {
  Dataset ds;
  ds.manifest = load_manifest(dir);
  const auto& man = ds.manifest;
  const std::size_t n = man.images(), k = man.regions, d = man.features, m = man.labels;

  auto check_dim = [](detail::ByteReader& r, std::size_t expected, const char* what) {
    const auto v = r.u32(what);
    if (v != expected) {
      throw FormatError(r.name() + ": header " + what + "=" + std::to_string(v) + " but meta.json says " + std::to_string(expected));
    }
  };

  auto feat = detail::ByteReader::open(dir / "features.bin");
  feat.expect_magic("ANAXFEAT");
  feat.expect_version();
  check_dim(feat, n, "N");
  check_dim(feat, k, "k");
  check_dim(feat, d, "d");
  feat.require(n * k * d * 4, "features");

  auto lab = detail::ByteReader::open(dir / "labels.bin");
  lab.expect_magic("ANAXLABL");
  lab.expect_version();
  check_dim(lab, n, "N");
  check_dim(lab, k, "k");
  check_dim(lab, m, "M");
  lab.require(n * k * m, "labels");

  auto mask = detail::ByteReader::open(dir / "mask.bin");
  mask.expect_magic("ANAXMASK");
  mask.expect_version();
  check_dim(mask, n, "N");
  check_dim(mask, k, "k");
  mask.require(n * k, "mask");

  for (std::size_t i = 0; i < n; ++i) {
    ImageRecord rec;
    rec.id = man.image_ids[i];
    rec.features = Matrix(k, d);
    for (double& v : rec.features.data()) v = static_cast<double>(feat.f32("features"));
    std::vector<std::uint8_t> bits(k * m);
    for (auto& b : bits) {
      b = lab.u8("labels");
      if (b > 1) throw DataError("labels.bin: image " + rec.id + " has label byte " + std::to_string(b) + " (expected 0 or 1)");
    }
    rec.labels = LabelTensor(k, m, std::move(bits));
    rec.mask.resize(k);
    for (auto& b : rec.mask) {
      b = mask.u8("mask");
      if (b > 1) throw DataError("mask.bin: image " + rec.id + " has mask byte " + std::to_string(b) + " (expected 0 or 1)");
    }
    if (split && man.splits[i] != *split) continue;
    rec.features = apply_mask(rec.features, rec.mask);
    ds.records.push_back(std::move(rec));
  }
  feat.expect_end();
  lab.expect_end();
  mask.expect_end();
  return ds;
}

inline void write_adjacency(const AdjacencyMatrix& adj, const std::filesystem::path& path) {
  const std::size_t k = adj.regions();
  if (!adj.binary.same_shape(adj.raw) || !adj.normalized.same_shape(adj.raw) || adj.raw.rows() != adj.raw.cols()) {
    throw ShapeError("adjacency blocks must all be k x k");
  }
  detail::ByteWriter w;
  w.magic("ANAXADJM");
  w.u32(kFormatVersion);
  w.u32(detail::narrow(k, "k"));
  w.f64(adj.tau);
  w.matrix(adj.raw);
  w.matrix(adj.binary);
  w.matrix(adj.normalized);
  w.write_to(path);
}

inline AdjacencyMatrix read_adjacency(const std::filesystem::path& path) {
  auto r = detail::ByteReader::open(path);
  r.expect_magic("ANAXADJM");
  r.expect_version();
  const std::size_t k = r.u32("k");
  AdjacencyMatrix adj;
  adj.tau = r.f64("tau");
  adj.raw = r.matrix(k, k, "raw");
  adj.binary = r.matrix(k, k, "binary");
  adj.normalized = r.matrix(k, k, "normalized");
  r.expect_end();
  return adj;
}

inline std::vector<std::uint8_t> checkpoint_bytes(const ModelParams& params, const ModelConfig& config) {
  config.validate();
  const bool baseline = config.variant == ModelVariant::baseline_fc;
  if (baseline != (params.variant() == ModelVariant::baseline_fc)) throw ContractError("checkpoint: config variant does not match parameters");
  const auto dims = baseline ? std::vector<std::size_t>{} : config.gcn_dims;
  if (params.gcn.size() != dims.size()) throw ContractError("checkpoint: layer count does not match config");
  std::size_t in = config.features;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (params.gcn[l].rows() != in || params.gcn[l].cols() != dims[l]) {
      throw ContractError("checkpoint: layer " + std::to_string(l) + " has shape " + params.gcn[l].shape());
    }
    in = dims[l];
  }
  const std::size_t classifier_rows = baseline ? config.features : 2 * config.features;
  if (params.classifier.rows() != classifier_rows || params.classifier.cols() != config.labels) {
    throw ContractError("checkpoint: classifier has shape " + params.classifier.shape());
  }

  detail::ByteWriter w;
  w.magic("ANAXMODL");
  w.u32(kFormatVersion);
  w.u32(detail::narrow(config.regions, "k"));
  w.u32(detail::narrow(config.features, "d"));
  w.u32(detail::narrow(config.labels, "M"));
  w.u32(detail::narrow(dims.size(), "layer count"));
  for (auto dim : dims) w.u32(detail::narrow(dim, "layer dim"));
  for (const auto& layer : params.gcn) w.matrix(layer);
  w.matrix(params.classifier);
  return w.bytes();
}

inline void save_checkpoint(const ModelParams& params, const ModelConfig& config, const std::filesystem::path& path) {
  const auto bytes = checkpoint_bytes(params, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

/// The seed is not part of the file; the loaded config carries seed 0.
inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::open(path);
  r.expect_magic("ANAXMODL");
  r.expect_version();
  Checkpoint ck;
  ck.config.regions = r.u32("k");
  ck.config.features = r.u32("d");
  ck.config.labels = r.u32("M");
  const std::size_t layers = r.u32("layer count");
  r.require(layers * 4, "layer dims");
  ck.config.gcn_dims.clear();
  for (std::size_t l = 0; l < layers; ++l) ck.config.gcn_dims.push_back(r.u32("layer dim"));
  ck.config.variant = layers == 0 ? ModelVariant::baseline_fc : ModelVariant::anaxnet;
  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(r.name() + ": " + e.what());
  }
  std::size_t in = ck.config.features;
  for (auto dim : ck.config.gcn_dims) {
    ck.params.gcn.push_back(r.matrix(in, dim, "graph layer"));
    in = dim;
  }
  const std::size_t classifier_rows = layers == 0 ? ck.config.features : 2 * ck.config.features;
  ck.params.classifier = r.matrix(classifier_rows, ck.config.labels, "classifier");
  r.expect_end();
  return ck;
}

}  // namespace anaxnet
