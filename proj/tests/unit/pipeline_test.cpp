#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "sot/coding.hpp"
#include "sot/dictionary.hpp"
#include "sot/error.hpp"
#include "sot/model_io.hpp"
#include "sot/patches.hpp"
#include "sot/pipeline.hpp"

namespace sot {
namespace {

FitConfig small_config() {
  FitConfig c;
  c.patch_size = 4;
  c.sample_count = 300;
  c.dict_size = 16;
  c.outer_iters = 4;
  c.seed = 11;
  return c;
}

void expect_models_equal(const TransferModel& a, const TransferModel& b) {
  EXPECT_EQ(a.config, b.config);
  EXPECT_EQ(a.channels, b.channels);
  EXPECT_EQ(a.dx, b.dx);
  EXPECT_EQ(a.dy, b.dy);
  EXPECT_EQ(a.code_x, b.code_x);
  EXPECT_EQ(a.code_y, b.code_y);
  EXPECT_EQ(a.dist_x.raw, b.dist_x.raw);
  EXPECT_EQ(a.dist_x.prob, b.dist_x.prob);
  EXPECT_EQ(a.dist_y.raw, b.dist_y.raw);
  EXPECT_EQ(a.dist_y.prob, b.dist_y.prob);
  EXPECT_EQ(a.cost.entries, b.cost.entries);
  EXPECT_EQ(a.plan.entries, b.plan.entries);
  EXPECT_EQ(a.plan.row_marginal, b.plan.row_marginal);
  EXPECT_EQ(a.plan.col_marginal, b.plan.col_marginal);
  EXPECT_EQ(a.plan.iterations, b.plan.iterations);
  EXPECT_EQ(a.plan.marginal_error, b.plan.marginal_error);
  EXPECT_EQ(a.plan.converged, b.plan.converged);
  EXPECT_EQ(a.history, b.history);
}

class PipelineFit : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    content_ = new Image(testing::natural_image(32, 32, 3, 1));
    reference_ = new Image(testing::red_tinted(testing::natural_image(32, 32, 3, 2)));
    model_ = new TransferModel(fit(*content_, *reference_, small_config()));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete content_;
    delete reference_;
  }
  static Image* content_;
  static Image* reference_;
  static TransferModel* model_;
};

Image* PipelineFit::content_ = nullptr;
Image* PipelineFit::reference_ = nullptr;
TransferModel* PipelineFit::model_ = nullptr;

TEST_F(PipelineFit, ShapesAreConsistent) {
  const TransferModel& m = *model_;
  EXPECT_EQ(m.channels, 3);
  EXPECT_EQ(m.dx.dim(), 48);
  EXPECT_EQ(m.dx.size(), 16);
  EXPECT_EQ(m.dy.size(), 16);
  EXPECT_EQ(m.code_x.column_count(), 300);
  EXPECT_EQ(m.plan.entries.rows(), 16);
  EXPECT_EQ(m.plan.entries.cols(), 16);
  EXPECT_EQ(m.plan.row_marginal, m.dist_x.prob);
  EXPECT_EQ(m.plan.col_marginal, m.dist_y.prob);
  EXPECT_LE(m.plan.marginal_error, 1e-6);
  EXPECT_NEAR(m.plan.entries.sum(), 1.0, 1e-9);
}

TEST_F(PipelineFit, HistoryIsBoundedFiniteAndNonnegative) {
  const auto& h = model_->history;
  ASSERT_FALSE(h.empty());
  EXPECT_LE(h.size(), 4u);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const LossRecord& r = h[i];
    EXPECT_EQ(r.iteration, static_cast<int>(i));
    for (double v : {r.e_sp_x, r.e_sp_y, r.e_ot_a, r.e_ot_b, r.e_c}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST_F(PipelineFit, FinalRecordMatchesModelState) {
  const TransferModel& m = *model_;
  const LossRecord& last = m.history.back();
  EXPECT_NEAR(last.e_c, transport_cost(m.cost, m.plan), 1e-9 * (1 + last.e_c));
  EXPECT_EQ(m.cost.entries, cost_matrix(m.dx, m.dy).entries);
}

TEST_F(PipelineFit, Deterministic) {
  const TransferModel again = fit(*content_, *reference_, small_config());
  expect_models_equal(*model_, again);
}

TEST_F(PipelineFit, SeedChangesTheModel) {
  FitConfig c = small_config();
  c.seed = 12;
  EXPECT_NE(fit(*content_, *reference_, c).dx, model_->dx);
}

TEST_F(PipelineFit, SaveLoadRoundTripIsBitwise) {
  testing::TempDir dir;
  save_model(*model_, dir / "model.sot");
  expect_models_equal(*model_, load_model(dir / "model.sot"));
  EXPECT_FALSE(std::filesystem::exists(dir / "model.sot.tmp"));
}

TEST_F(PipelineFit, EveryTruncationIsAParseError) {
  const std::string bytes = encode_model(*model_);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{8}, std::size_t{11}, bytes.size() / 3,
                          bytes.size() / 2, bytes.size() - 1}) {
    try {
      decode_model(bytes.substr(0, cut));
      FAIL() << "truncation at " << cut << " decoded";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse_error);
      EXPECT_LE(e.offset(), cut);
    }
  }
}

TEST_F(PipelineFit, TrailingBytesAreRejected) {
  EXPECT_THROW(decode_model(encode_model(*model_) + "x"), ParseError);
}

TEST_F(PipelineFit, VersionMismatchIsUnsupported) {
  std::string bytes = encode_model(*model_);
  bytes[8] = static_cast<char>(kModelFormatVersion + 1);
  try {
    decode_model(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_version);
  }
}

TEST_F(PipelineFit, BadMagicIsParseError) {
  std::string bytes = encode_model(*model_);
  bytes[0] = 'X';
  try {
    decode_model(bytes);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(ModelIo, MissingFileIsIoError) {
  try {
    load_model("/nonexistent/model.sot");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
  }
}

TEST(Pipeline, SweepsNeverIncreaseTheirObjective) {
  const Image content = testing::natural_image(32, 32, 1, 3);
  const Image reference = testing::natural_image(32, 32, 1, 4);
  FitMonitor monitor;
  int sweeps = 0;
  monitor.on_sweep = [&](int, Side, const SweepResult& r) {
    ++sweeps;
    EXPECT_LE(r.objective_after_updates, r.objective_before * (1.0 + 1e-9));
  };
  FitConfig c = small_config();
  c.rel_loss_stop = 1e-12;
  fit(content, reference, c, monitor);
  EXPECT_EQ(sweeps, 2 * c.outer_iters);
}

TEST(Pipeline, UnequalDictionarySizes) {
  FitConfig c = small_config();
  c.reference_dict_size = 10;
  c.outer_iters = 2;
  const TransferModel m = fit(testing::natural_image(24, 24, 3, 5), testing::natural_image(20, 28, 3, 6), c);
  EXPECT_EQ(m.dy.size(), 10);
  EXPECT_EQ(m.plan.entries.rows(), 16);
  EXPECT_EQ(m.plan.entries.cols(), 10);
}

TEST(Pipeline, ExactTransportSelfFitHasZeroCost) {
  FitConfig c = small_config();
  c.exact_ot = true;
  const Image img = testing::natural_image(32, 32, 3, 7);
  const TransferModel m = fit(img, img, c);
  EXPECT_EQ(m.dx, m.dy);
  EXPECT_LT(m.history.back().e_c, 1e-6);
}

TEST(Pipeline, StopsEarlyWhenLossesSettle) {
  FitConfig c = small_config();
  c.outer_iters = 30;
  c.rel_loss_stop = 0.5;
  const TransferModel m = fit(testing::natural_image(32, 32, 1, 8), testing::natural_image(32, 32, 1, 9), c);
  EXPECT_LT(m.history.size(), 30u);
}

TEST(Pipeline, RejectsInvalidInput) {
  FitConfig c = small_config();
  const Image rgb = testing::natural_image(16, 16, 3, 10);
  const Image gray = testing::natural_image(16, 16, 1, 11);
  EXPECT_THROW(fit(rgb, gray, c), Error);
  c.outer_iters = 0;
  EXPECT_THROW(fit(rgb, rgb, c), Error);
  c = small_config();
  c.patch_size = 20;
  EXPECT_THROW(fit(rgb, rgb, c), Error);
  c = small_config();
  c.dict_size = 400;
  EXPECT_THROW(fit(rgb, rgb, c), Error);
}

TEST(Pipeline, RecodingOnFixedDictionaryStaysWithinOmpSlack) {
  // With the dictionary held fixed after a sweep, re-coding must not be worse
  // than the stale codes by more than the per-patch stop tolerance.
  const Image img = testing::natural_image(40, 40, 3, 12);
  const PatchSet patches = sample_random(img, 4, 500, 1);
  const double kappa = 1e-5;
  Dictionary dict = init_from_samples(patches, 24, 2);
  auto [d0, code] = sign_fix(dict, encode_all(dict, patches, 8, kappa));
  dict = d0;
  for (int iter = 0; iter < 5; ++iter) {
    const AtomDistribution dist = distribution(code);
    const Eigen::MatrixXd plan = dist.prob * dist.prob.transpose();
    SweepOptions opts;
    opts.seed = static_cast<std::uint64_t>(iter);
    opts.correlation_threshold = 2.0;
    const SweepResult s = sweep(dict, patches, code, dist.raw, plan, dict, opts);
    if (!s.replaced.empty()) break;
    const double stale = (patches.matrix - code.reconstruct(s.dictionary)).squaredNorm();
    const SparseCode fresh = encode_all_warm(s.dictionary, patches, 8, kappa, code);
    const double recoded = (patches.matrix - fresh.reconstruct(s.dictionary)).squaredNorm();
    EXPECT_LE(recoded, stale + static_cast<double>(patches.count()) * kappa);
    const SparseCode greedy = encode_all(s.dictionary, patches, 8, kappa);
    EXPECT_LE(recoded, (patches.matrix - greedy.reconstruct(s.dictionary)).squaredNorm());
    auto [d1, c1] = sign_fix(s.dictionary, fresh);
    dict = d1;
    code = c1;
  }
}

TEST(LossCsv, HeaderAndRows) {
  testing::TempDir dir;
  write_loss_csv({LossRecord{0, 1.0, 2.0, 3.0, 4.0, 5.0}, LossRecord{1, 0.5, 1.5, 2.5, 3.5, 4.5}}, dir / "loss.csv");
  std::ifstream in(dir / "loss.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "iter,E_sp_x,E_sp_y,E_ot_a,E_ot_b,E_c");
  EXPECT_EQ(first, "0,1,2,3,4,5");
  EXPECT_EQ(second.substr(0, 6), "1,0.5,");
}

}  // namespace
}  // namespace sot
