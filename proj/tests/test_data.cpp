#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include <unistd.h>

#include "ausam/data.hpp"
#include "ausam/optimizers.hpp"

using namespace ausam;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ausam_test_data_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

std::vector<unsigned char> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols) {
  std::vector<unsigned char> b;
  put_be32(b, 0x803);
  put_be32(b, n);
  put_be32(b, rows);
  put_be32(b, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) b.push_back(static_cast<unsigned char>((i * 37) % 256));
  return b;
}

std::vector<unsigned char> idx_labels(std::vector<unsigned char> labels) {
  std::vector<unsigned char> b;
  put_be32(b, 0x801);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

}  // namespace

TEST(TwoMoons, NoiselessPointsLieOnTheirCircles) {
  const Dataset d = make_two_moons(200, 0.0, 1);
  ASSERT_EQ(d.size(), 200u);
  EXPECT_NO_THROW(d.validate());
  std::size_t ones = 0;
  for (const Sample& s : d.samples) {
    const double x = s.features[0], y = s.features[1];
    if (s.label == 0) {
      EXPECT_NEAR(std::hypot(x, y), 1.0, 1e-12);
      EXPECT_GE(y, -1e-12);
    } else {
      ++ones;
      EXPECT_NEAR(std::hypot(x - 1.0, y - 0.5), 1.0, 1e-12);
      EXPECT_LE(y, 0.5 + 1e-12);
    }
  }
  EXPECT_EQ(ones, 100u);
}

TEST(TwoMoons, DeterministicPerSeed) {
  const Dataset a = make_two_moons(64, 0.2, 5), b = make_two_moons(64, 0.2, 5), c = make_two_moons(64, 0.2, 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].features, b.samples[i].features);
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
    differs = differs || a.samples[i].features != c.samples[i].features;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(make_two_moons(7, 0.1, 1), ValidationError);
}

TEST(TwoMoons, SmallMlpFitsLowNoiseTrainingSet) {
  const Dataset d = make_two_moons(200, 0.1, 3);
  const Model m(Mlp{{2, 16, 16, 2}});
  ParamVector w = init_params(m, 3);
  OptimizerConfig cfg;
  cfg.base_lr = 0.1;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.total_epochs = 100;
  cfg.schedule = Schedule::constant;
  OptimizerState st = OptimizerState::zeros(m.param_count());
  for (std::uint32_t e = 0; e < cfg.total_epochs; ++e) {
    st.epoch = e;
    for (const MiniBatch& b : epoch_batches(d, 20, 3, e)) {
      auto r = sgd_step(m, w, b, cfg, st);
      w = r.w;
      st = r.state;
    }
  }
  std::size_t correct = 0;
  for (const Sample& s : d.samples) correct += m.predict(w, s) == static_cast<std::size_t>(s.label);
  EXPECT_GT(static_cast<double>(correct) / d.size(), 0.95);
}

TEST(QuadraticProblemGen, ConditionOneIsScaledIdentity) {
  const auto q = make_quadratic_problem(4, 1.0, 7);
  const auto& A = std::get<Quadratic>(q.model.architecture()).A;
  EXPECT_LE((A - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(q.tau, 1.0, 1e-12);
}

TEST(QuadraticProblemGen, EigenvalueRatioAndCentredOffsets) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto q = make_quadratic_problem(6, 25.0, seed, 32);
    const auto& A = std::get<Quadratic>(q.model.architecture()).A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EXPECT_NEAR(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff(), 25.0, 1e-8);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
    for (const Sample& s : q.data.samples) mean += s.features;
    EXPECT_LE(mean.norm() / 32.0, 1e-14);
    EXPECT_LE(batch_gradient(q.model, q.minimizer, q.data.all()).norm(), 1e-10);
  }
  const auto one = make_quadratic_problem(1, 5.0, 2);
  EXPECT_NEAR(one.tau, 1.0, 1e-15);
  EXPECT_THROW(make_quadratic_problem(3, 0.5, 1), ValidationError);
}

TEST(Csv, LoadsRowsAndLabels) {
  const fs::path p = scratch("three.csv");
  std::ofstream(p) << "a,b,label\n0.5,1,0\n-2,3.25,1\n\n7,8e-1,1\n";
  const Dataset d = load_csv(p, CsvSchema{"label", 2});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.feature_dim, 2u);
  EXPECT_EQ(d.samples[1].features, Eigen::Vector2d(-2, 3.25));
  EXPECT_EQ(d.samples[2].label, 1.0);
  EXPECT_EQ(d.samples[2].id, 2u);
}

TEST(Csv, ErrorsNameTheLine) {
  const fs::path p = scratch("ragged.csv");
  std::ofstream(p) << "a,b,label\n1,2,0\n1,2\n";
  try {
    (void)load_csv(p, CsvSchema{"label", 2});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("ragged.csv:3"), std::string::npos) << e.what();
  }
  const fs::path q = scratch("badlabel.csv");
  std::ofstream(q) << "a,label\n1,0\n2,5\n";
  EXPECT_THROW(load_csv(q, CsvSchema{"label", 2}), FormatError);
  const fs::path r = scratch("text.csv");
  std::ofstream(r) << "a,label\nx,0\n";
  EXPECT_THROW(load_csv(r, CsvSchema{"label", 2}), FormatError);
  EXPECT_THROW(load_csv(scratch("missing.csv"), CsvSchema{}), FormatError);
}

TEST(Csv, RoundTripIsExact) {
  const Dataset d = make_two_moons(50, 0.3, 8);
  const fs::path p = scratch("moons.csv");
  write_csv(p, d);
  const Dataset back = load_csv(p, CsvSchema{"label", 2});
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].features, d.samples[i].features);
    EXPECT_EQ(back.samples[i].label, d.samples[i].label);
  }
}

TEST(Idx, ReadsFixture) {
  const fs::path img = scratch("img.idx"), lab = scratch("lab.idx");
  write_bytes(img, idx_images(3, 2, 2));
  write_bytes(lab, idx_labels({4, 0, 9}));
  const Dataset d = load_idx(img, lab, 100);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.feature_dim, 4u);
  EXPECT_EQ(d.classes, 10u);
  EXPECT_DOUBLE_EQ(d.samples[0].features[1], 37.0 / 255.0);
  EXPECT_DOUBLE_EQ(d.samples[2].label, 9.0);
  EXPECT_EQ(load_idx(img, lab, 2).size(), 2u);
}

TEST(Idx, RejectsBadInput) {
  const fs::path img = scratch("img2.idx"), lab = scratch("lab2.idx");
  write_bytes(img, idx_images(3, 2, 2));
  write_bytes(lab, idx_labels({1, 2}));
  EXPECT_THROW(load_idx(img, lab, 10), FormatError);  // count mismatch
  write_bytes(lab, idx_labels({1, 2, 3}));
  EXPECT_THROW(load_idx(img, lab, 0), ValidationError);
  EXPECT_THROW(load_idx(lab, img, 3), FormatError);  // swapped magic
  auto cut = idx_images(3, 2, 2);
  cut.resize(cut.size() - 1);
  write_bytes(img, cut);
  EXPECT_THROW(load_idx(img, lab, 3), FormatError);
}

TEST(EpochBatches, SizesAndPartition) {
  const Dataset d = make_two_moons(10, 0.0, 1);
  const auto bs = epoch_batches(d, 3, 11, 0);
  ASSERT_EQ(bs.size(), 4u);
  EXPECT_EQ(bs[0].size(), 3u);
  EXPECT_EQ(bs[3].size(), 1u);
  EXPECT_THROW(epoch_batches(d, 0, 1, 0), ValidationError);
  EXPECT_THROW(epoch_batches(d, 11, 1, 0), ValidationError);

  for (std::uint32_t epoch = 0; epoch < 20; ++epoch) {
    const Dataset big = make_two_moons(98, 0.1, epoch);
    std::multiset<SampleId> seen;
    for (const MiniBatch& b : epoch_batches(big, 1 + epoch % 13, 5, epoch))
      for (SampleId id : b.ids()) seen.insert(id);
    ASSERT_EQ(seen.size(), 98u);
    SampleId expect = 0;
    for (SampleId id : seen) EXPECT_EQ(id, expect++);
  }
}

TEST(EpochBatches, DeterministicAndEpochDependent) {
  const Dataset d = make_two_moons(40, 0.0, 1);
  const auto a = epoch_batches(d, 8, 2, 3), b = epoch_batches(d, 8, 2, 3), c = epoch_batches(d, 8, 2, 4);
  EXPECT_EQ(a[0].ids(), b[0].ids());
  EXPECT_NE(a[0].ids(), c[0].ids());
}

TEST(SplitHead, RenumbersBothParts) {
  const Dataset d = make_two_moons(20, 0.0, 1);
  const auto [eval_set, train] = split_head(d, 0.25);
  EXPECT_EQ(eval_set.size(), 5u);
  EXPECT_EQ(train.size(), 15u);
  EXPECT_NO_THROW(eval_set.validate());
  EXPECT_NO_THROW(train.validate());
  EXPECT_EQ(train.samples[0].features, d.samples[5].features);
}
