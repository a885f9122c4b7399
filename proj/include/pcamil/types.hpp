#ifndef PCAMIL_TYPES_HPP
#define PCAMIL_TYPES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcamil/error.hpp"

namespace pcamil {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// MSI is the positive class for every metric.
enum class Label { MSI, MSS };

enum class Side { Left, Right, Undefined };

inline constexpr int as_target(Label l) { return l == Label::MSI ? 1 : 0; }

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::optional<Label> parse_label(std::string_view s) {
  const auto l = lowercase(s);
  if (l == "msi") return Label::MSI;
  if (l == "mss") return Label::MSS;
  return std::nullopt;
}

inline std::optional<Side> parse_side(std::string_view s) {
  const auto l = lowercase(s);
  if (l == "left") return Side::Left;
  if (l == "right") return Side::Right;
  if (l == "undefined") return Side::Undefined;
  return std::nullopt;
}

inline constexpr std::string_view to_string(Label l) { return l == Label::MSI ? "MSI" : "MSS"; }

inline constexpr std::string_view to_string(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Undefined: return "undefined";
  }
  return "undefined";
}

/// One patient's patch-feature matrix: row i is the flattened feature vector
/// of patch i.
struct FeatureBag {
  std::string patient_id;
  RowMatrixF features;

  std::size_t n_patches() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws unless N >= 2, d >= 2 and every entry is finite.
  void validate() const {
    if (features.rows() < 2 || features.cols() < 2) {
      throw Error(ErrorCode::InconsistentDataset,
                  "bag '" + patient_id + "' must have at least 2 patches and 2 features");
    }
    if (!features.allFinite()) {
      throw Error(ErrorCode::NonFiniteEntry, "bag '" + patient_id + "' contains NaN/Inf");
    }
  }
};

struct PatientRecord {
  std::string patient_id;
  Label label = Label::MSS;
  Side side = Side::Undefined;
  std::filesystem::path bag_path;
};

enum class SplitTag { Train, Test };

struct DatasetManifest {
  std::vector<PatientRecord> records;
  SplitTag split_tag = SplitTag::Train;

  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [l](const PatientRecord& r) { return r.label == l; }));
  }
};

}  // namespace pcamil

#endif  // PCAMIL_TYPES_HPP
