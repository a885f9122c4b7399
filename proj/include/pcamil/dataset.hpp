#ifndef PCAMIL_DATASET_HPP
#define PCAMIL_DATASET_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcamil/binary_io.hpp"
#include "pcamil/types.hpp"

namespace pcamil {

inline constexpr std::string_view kBagMagic = "MILB";
inline constexpr std::uint32_t kBagVersion = 1;
inline constexpr std::string_view kManifestHeader = "patient_id,label,side,bag_path";

// Bag file layout: "MILB", u32 version, u32 N, u32 d, then N*d binary32
// values in patch-major order. All integers and floats little-endian.

inline void write_feature_bag(const FeatureBag& bag, const std::filesystem::path& path) {
  binary::Writer w;
  w.magic(kBagMagic);
  w.u32(kBagVersion);
  w.u32(static_cast<std::uint32_t>(bag.features.rows()));
  w.u32(static_cast<std::uint32_t>(bag.features.cols()));
  for (Eigen::Index i = 0; i < bag.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < bag.features.cols(); ++j) w.f32(bag.features(i, j));
  }
  w.save(path);
}

/// The bag file carries no id; the caller names the bag (usually from the
/// manifest record), defaulting to the file stem.
inline FeatureBag read_feature_bag(const std::filesystem::path& path, std::string patient_id = {}) {
  auto r = binary::Reader::open(path);
  r.expect_header(kBagMagic, kBagVersion);
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  r.require(n * d * sizeof(float), "payload");
  FeatureBag bag;
  bag.patient_id = patient_id.empty() ? path.stem().string() : std::move(patient_id);
  bag.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteEntry, "'" + path.string() + "' entry (" + std::to_string(i) +
                                                   "," + std::to_string(j) + ") is not finite");
      }
      bag.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return bag;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses a manifest CSV. Relative bag paths are resolved against the
/// manifest's directory.
inline DatasetManifest load_manifest(const std::filesystem::path& path,
                                     SplitTag split = SplitTag::Train) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest '" + path.string() + "'");
  const auto base = path.parent_path();

  DatasetManifest manifest;
  manifest.split_tag = split;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kManifestHeader) {
        throw Error(ErrorCode::MalformedRow, "line 1: header must be '" + std::string(kManifestHeader) + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const auto where = "line " + std::to_string(line_no);
    if (cells.size() != 4) {
      throw Error(ErrorCode::MalformedRow, where + ": expected 4 fields, got " + std::to_string(cells.size()));
    }
    PatientRecord rec;
    rec.patient_id = detail::trim(cells[0]);
    if (rec.patient_id.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty patient_id");
    const auto label = parse_label(detail::trim(cells[1]));
    if (!label) throw Error(ErrorCode::UnknownLabel, where + ": '" + cells[1] + "'");
    const auto side = parse_side(detail::trim(cells[2]));
    if (!side) throw Error(ErrorCode::UnknownSide, where + ": '" + cells[2] + "'");
    rec.label = *label;
    rec.side = *side;
    const std::filesystem::path bag_path = detail::trim(cells[3]);
    if (bag_path.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty bag_path");
    rec.bag_path = bag_path.is_absolute() ? bag_path : base / bag_path;
    if (!seen.insert(rec.patient_id).second) {
      throw Error(ErrorCode::DuplicatePatientId, where + ": '" + rec.patient_id + "'");
    }
    manifest.records.push_back(std::move(rec));
  }
  if (line_no == 0) throw Error(ErrorCode::MalformedRow, "line 1: missing header");
  if (manifest.records.empty()) {
    throw Error(ErrorCode::InconsistentDataset, "manifest '" + path.string() + "' has no records");
  }
  return manifest;
}

inline void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest '" + path.string() + "'");
  out << kManifestHeader << '\n';
  const auto base = path.parent_path();
  for (const auto& r : manifest.records) {
    auto rel = r.bag_path.lexically_relative(base);
    if (rel.empty()) rel = r.bag_path;
    out << r.patient_id << ',' << to_string(r.label) << ',' << to_string(r.side) << ','
        << rel.generic_string() << '\n';
  }
}

/// Reads every bag of a manifest and checks dataset-wide consistency
/// (finite, N >= 2, one shared feature dimension).
inline std::vector<FeatureBag> load_bags(const DatasetManifest& manifest) {
  std::vector<FeatureBag> bags;
  bags.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    if (!std::filesystem::exists(r.bag_path)) {
      throw Error(ErrorCode::MissingFile, "bag for '" + r.patient_id + "' not found at '" +
                                              r.bag_path.string() + "'");
    }
    bags.push_back(read_feature_bag(r.bag_path, r.patient_id));
    bags.back().validate();
    if (bags.back().feature_dim() != bags.front().feature_dim()) {
      throw Error(ErrorCode::InconsistentDataset,
                  "bag '" + r.patient_id + "' has d=" + std::to_string(bags.back().feature_dim()) +
                      ", dataset uses d=" + std::to_string(bags.front().feature_dim()));
    }
  }
  return bags;
}

}  // namespace pcamil

#endif  // PCAMIL_DATASET_HPP
