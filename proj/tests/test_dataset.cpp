#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pcamil/dataset.hpp"
#include "pcamil/pca_embed.hpp"
#include "pcamil/synthetic.hpp"
#include "test_util.hpp"

namespace pcamil {
namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

TEST(Manifest, ParsesTwoRows) {
  testutil::TempDir dir("manifest_ok");
  write_text(dir / "m.csv", "patient_id,label,side,bag_path\nA,MSI,right,a.milb\nB,mss,Left,/abs/b.milb\n");
  const auto m = load_manifest(dir / "m.csv");
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].label, Label::MSI);
  EXPECT_EQ(m.records[0].side, Side::Right);
  EXPECT_EQ(m.records[0].bag_path, dir.path() / "a.milb");
  EXPECT_EQ(m.records[1].label, Label::MSS);
  EXPECT_EQ(m.records[1].side, Side::Left);
  EXPECT_EQ(m.records[1].bag_path, std::filesystem::path("/abs/b.milb"));
}

TEST(Manifest, LabelIsCaseInsensitive) {
  testutil::TempDir dir("manifest_case");
  write_text(dir / "m.csv", "patient_id,label,side,bag_path\nA,msi,undefined,a.milb\n");
  const auto m = load_manifest(dir / "m.csv");
  EXPECT_EQ(m.records[0].label, Label::MSI);
  EXPECT_EQ(m.records[0].side, Side::Undefined);
}

TEST(Manifest, Errors) {
  testutil::TempDir dir("manifest_err");
  const std::string h = "patient_id,label,side,bag_path\n";
  write_text(dir / "dup.csv", h + "A,MSI,right,a\nA,MSS,left,b\n");
  write_text(dir / "label.csv", h + "A,MSX,right,a\n");
  write_text(dir / "side.csv", h + "A,MSI,middle,a\n");
  write_text(dir / "short.csv", h + "A,MSI,right\n");
  write_text(dir / "header.csv", "id,label,side,path\nA,MSI,right,a\n");
  write_text(dir / "empty.csv", h);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "dup.csv"); }), ErrorCode::DuplicatePatientId);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "label.csv"); }), ErrorCode::UnknownLabel);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "side.csv"); }), ErrorCode::UnknownSide);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "short.csv"); }), ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "header.csv"); }), ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "empty.csv"); }), ErrorCode::InconsistentDataset);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "nope.csv"); }), ErrorCode::MissingFile);
}

TEST(Manifest, MalformedRowReportsLineNumber) {
  testutil::TempDir dir("manifest_line");
  write_text(dir / "m.csv", "patient_id,label,side,bag_path\nA,MSI,right,a\nB,MSS\n");
  try {
    load_manifest(dir / "m.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(FeatureBagIo, RoundTripIsBitExact) {
  testutil::TempDir dir("bag_rt");
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g(0.f, 10.f);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureBag bag;
    bag.patient_id = "P";
    bag.features.resize(2 + trial % 7, 2 + trial % 11);
    for (Eigen::Index i = 0; i < bag.features.size(); ++i) bag.features.data()[i] = g(rng);
    write_feature_bag(bag, dir / "b.milb");
    const auto back = read_feature_bag(dir / "b.milb", "P");
    ASSERT_EQ(back.features.rows(), bag.features.rows());
    ASSERT_EQ(back.features.cols(), bag.features.cols());
    EXPECT_EQ(std::memcmp(back.features.data(), bag.features.data(), sizeof(float) * bag.features.size()), 0);
  }
}

TEST(FeatureBagIo, HeaderLayoutIsLittleEndian) {
  testutil::TempDir dir("bag_layout");
  FeatureBag bag;
  bag.features.resize(2, 3);
  bag.features << 1.f, 2.f, 3.f, 4.f, 5.f, 6.f;
  write_feature_bag(bag, dir / "b.milb");
  std::ifstream in(dir / "b.milb", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 16u + 6 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MILB");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 3);
  // 1.0f = 0x3F800000
  EXPECT_EQ(bytes[16], 0x00);
  EXPECT_EQ(bytes[19], 0x3F);
  EXPECT_EQ(bytes[18], 0x80);
}

TEST(FeatureBagIo, Errors) {
  testutil::TempDir dir("bag_err");
  write_text(dir / "magic.milb", std::string("XXXX\x01\0\0\0", 8));
  EXPECT_EQ(code_of([&] { read_feature_bag(dir / "magic.milb"); }), ErrorCode::BadMagic);

  write_text(dir / "version.milb", std::string("MILB\x02\0\0\0\x02\0\0\0\x02\0\0\0", 16));
  EXPECT_EQ(code_of([&] { read_feature_bag(dir / "version.milb"); }), ErrorCode::VersionMismatch);

  binary::Writer w;
  w.magic("MILB");
  w.u32(1);
  w.u32(10);
  w.u32(10);
  for (int i = 0; i < 50; ++i) w.f32(1.f);
  w.save(dir / "trunc.milb");
  EXPECT_EQ(code_of([&] { read_feature_bag(dir / "trunc.milb"); }), ErrorCode::TruncatedPayload);

  binary::Writer nan;
  nan.magic("MILB");
  nan.u32(1);
  nan.u32(2);
  nan.u32(2);
  for (float v : {1.f, std::nanf(""), 2.f, 3.f}) nan.f32(v);
  nan.save(dir / "nan.milb");
  EXPECT_EQ(code_of([&] { read_feature_bag(dir / "nan.milb"); }), ErrorCode::NonFiniteEntry);
}

TEST(LoadBags, RejectsMixedDimensionsAndTinyBags) {
  testutil::TempDir dir("bags_mixed");
  FeatureBag a, b, c;
  a.features = RowMatrixF::Ones(3, 4);
  b.features = RowMatrixF::Ones(3, 5);
  c.features = RowMatrixF::Ones(1, 4);
  write_feature_bag(a, dir / "a.milb");
  write_feature_bag(b, dir / "b.milb");
  write_feature_bag(c, dir / "c.milb");
  write_text(dir / "mixed.csv", "patient_id,label,side,bag_path\nA,MSI,right,a.milb\nB,MSS,left,b.milb\n");
  write_text(dir / "tiny.csv", "patient_id,label,side,bag_path\nC,MSI,right,c.milb\n");
  write_text(dir / "missing.csv", "patient_id,label,side,bag_path\nD,MSI,right,d.milb\n");
  EXPECT_EQ(code_of([&] { load_bags(load_manifest(dir / "mixed.csv")); }), ErrorCode::InconsistentDataset);
  EXPECT_EQ(code_of([&] { load_bags(load_manifest(dir / "tiny.csv")); }), ErrorCode::InconsistentDataset);
  EXPECT_EQ(code_of([&] { load_bags(load_manifest(dir / "missing.csv")); }), ErrorCode::MissingFile);
}

TEST(EigenCache, RoundTrip) {
  testutil::TempDir dir("mile");
  EigenBasis b;
  b.patient_id = "P";
  b.eigenvalues = Eigen::Vector2d(3.5, 0.25);
  b.vectors = Eigen::MatrixXd::Identity(2, 4);
  write_eigen_basis(b, dir / "p.mile");
  const auto back = read_eigen_basis(dir / "p.mile");
  EXPECT_EQ(back.eigenvalues, b.eigenvalues);
  EXPECT_EQ(back.vectors, b.vectors);
  EXPECT_EQ(back.patient_id, "p");
  EXPECT_EQ(code_of([&] { read_feature_bag(dir / "p.mile"); }), ErrorCode::BadMagic);
}

TEST(Synthetic, ExactMsiCount) {
  SynthConfig cfg;
  cfg.n_patients = 60;
  cfg.msi_fraction = 0.18;
  const auto cohort = generate_cohort(cfg, SplitTag::Train);
  const auto msi = std::count_if(cohort.begin(), cohort.end(), [](auto& p) { return p.record.label == Label::MSI; });
  EXPECT_EQ(msi, 11);  // round(10.8)
  for (const auto& p : cohort) {
    EXPECT_GE(p.bag.n_patches(), cfg.patches_min);
    EXPECT_LE(p.bag.n_patches(), cfg.patches_max);
    EXPECT_EQ(p.bag.feature_dim(), cfg.feature_dim);
  }
}

TEST(Synthetic, DeterministicFiles) {
  testutil::TempDir a("synth_a"), b("synth_b");
  SynthConfig cfg;
  cfg.n_patients = 12;
  const auto ma = generate_synthetic(cfg, SplitTag::Train, a.path());
  generate_synthetic(cfg, SplitTag::Train, b.path());
  EXPECT_EQ(testutil::read_file(a / "train.csv"), testutil::read_file(b / "train.csv"));
  for (const auto& r : ma.records) {
    const auto name = r.bag_path.filename();
    EXPECT_EQ(testutil::read_file(a / "bags" / name), testutil::read_file(b / "bags" / name));
  }
  // the written manifest loads and validates
  const auto loaded = load_manifest(a / "train.csv");
  EXPECT_EQ(load_bags(loaded).size(), 12u);
}

TEST(Synthetic, SplitsShareBasisButNotPatients) {
  SynthConfig cfg;
  cfg.n_patients = 10;
  const auto tr = generate_cohort(cfg, SplitTag::Train);
  const auto te = generate_cohort(cfg, SplitTag::Test);
  EXPECT_NE(tr[0].bag.features.rows() * 1000 + tr[0].bag.features(0, 0),
            te[0].bag.features.rows() * 1000 + te[0].bag.features(0, 0));
  const auto b = class_bases(cfg);
  EXPECT_LT((b.msi.transpose() * b.msi - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
  EXPECT_LT((b.mss.transpose() * b.mss - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
  EXPECT_GT((b.msi - b.mss).norm(), 1.0);
}

TEST(Synthetic, RightSidedMsiFraction) {
  SynthConfig cfg;
  cfg.n_patients = 2000;
  cfg.patches_min = 6;
  cfg.patches_max = 6;
  cfg.feature_dim = 8;
  cfg.signal_rank = 2;
  const auto cohort = generate_cohort(cfg, SplitTag::Train);
  double msi = 0, right_msi = 0;
  for (const auto& p : cohort) {
    if (p.record.label != Label::MSI) continue;
    msi += 1;
    right_msi += p.record.side == Side::Right;
  }
  EXPECT_NEAR(right_msi / msi, 0.87, 0.03);
}

TEST(Synthetic, InvalidConfig) {
  SynthConfig cfg;
  cfg.signal_rank = cfg.patches_min - 1;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg = SynthConfig{};
  cfg.msi_fraction = 1.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg = SynthConfig{};
  cfg.p_right_given_mss = 1.5;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
}

// Top-r eigenvectors of MSI bags align better with the MSI basis than with
// the MSS basis, averaged over 100 bags.
TEST(Synthetic, SignalLivesInPrincipalSubspace) {
  SynthConfig cfg;
  cfg.n_patients = 200;
  const auto bases = class_bases(cfg);
  const auto cohort = generate_cohort(cfg, SplitTag::Train);
  double diff = 0.0;
  int counted = 0;
  for (const auto& p : cohort) {
    if (p.record.label != Label::MSI) continue;
    const auto e = patient_embedding(p.bag, cfg.signal_rank);
    diff += (e.vectors * bases.msi).cwiseAbs().mean() - (e.vectors * bases.mss).cwiseAbs().mean();
    ++counted;
  }
  ASSERT_GE(counted, 30);
  EXPECT_GT(diff / counted, 0.0);
}

}  // namespace
}  // namespace pcamil
