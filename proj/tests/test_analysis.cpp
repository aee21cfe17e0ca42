#include "support.hpp"

#include "swatnn/analysis.hpp"
#include "swatnn/config.hpp"
#include "swatnn/error.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace swatnn;
using swatnn::testing::random_matrix;

namespace {

AutoencoderConfig tiny_config() {
  AutoencoderConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  return c;
}

bool same_up_to_sign(const Vector& a, const Vector& b, double tol) {
  return std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff()) < tol;
}

std::vector<ParetoPoint> brute_force_front(const std::vector<ParetoPoint>& pts) {
  std::vector<ParetoPoint> out;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts)
      if (q.mse <= p.mse && q.nonzeros <= p.nonzeros && (q.mse < p.mse || q.nonzeros < p.nonzeros)) dominated = true;
    if (!dominated) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return std::tie(a.nonzeros, a.mse, a.index) < std::tie(b.nonzeros, b.mse, b.index);
  });
  return out;
}

}  // namespace

TEST_CASE("pca finds a dominant axis") {
  Rng rng(1);
  Matrix s(100, 6);
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = (j == 0 ? 3.0 : 1e-3) * rng.normal();
  const PcaResult r = pca_top2(s);
  CHECK(std::abs(r.v1(0)) > 0.99);
  CHECK(r.v1(0) > 0.0);
  CHECK(std::abs(r.v1.dot(r.v2)) < 1e-8);
}

TEST_CASE("pca of a symmetric pair") {
  Vector u(4);
  u << 0.5, -2.0, 1.0, 0.25;
  Matrix s(2, 4);
  s.row(0) = u.transpose();
  s.row(1) = -u.transpose();
  const PcaResult r = pca_top2(s);
  CHECK((r.v1 - (-u / u.norm())).norm() < 1e-9);  // largest coordinate made positive
  CHECK(r.rank_deficient);
  CHECK(std::abs(r.v2.norm() - 1.0) < 1e-12);
  CHECK(std::abs(r.v1.dot(r.v2)) < 1e-8);
}

TEST_CASE("pca agrees with a dense eigensolver") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3 + trial, n = 50 + 10 * trial;
    Matrix s(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) s(i, j) = rng.normal() * (4.0 / (1.0 + j)) + 0.3 * j;
    // Mix coordinates so the axes are not the eigenvectors.
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, d, d));
    s = s * Matrix(qr.householderQ());
    const Matrix c = s.rowwise() - s.colwise().mean();
    const Eigen::SelfAdjointEigenSolver<Matrix> es(c.transpose() * c / (n - 1));
    const Vector e1 = es.eigenvectors().col(d - 1), e2 = es.eigenvectors().col(d - 2);
    const PcaResult r = pca_top2(s);
    CHECK(same_up_to_sign(r.v1, e1, 1e-6));
    CHECK(same_up_to_sign(r.v2, e2, 1e-6));
    CHECK(r.lambda1 == doctest::Approx(es.eigenvalues()(d - 1)).epsilon(1e-8));
    CHECK(r.lambda2 == doctest::Approx(es.eigenvalues()(d - 2)).epsilon(1e-8));
    CHECK(std::abs(r.v1.dot(r.v2)) < 1e-8);
    Eigen::Index arg;
    r.v1.cwiseAbs().maxCoeff(&arg);
    CHECK(r.v1(arg) > 0.0);
  }
  CHECK_THROWS_AS(pca_top2(Matrix::Zero(1, 3)), Error);
}

TEST_CASE("offset embedding uses row-major directions") {
  Matrix z = Matrix::Zero(2, 3);
  Vector v1 = Vector::Zero(6), v2 = Vector::Zero(6);
  v1(1) = 1.0;  // row 0, col 1
  v2(3) = 1.0;  // row 1, col 0
  const Matrix o = offset_embedding(z, v1, 2.0, v2, -1.0);
  CHECK(o(0, 1) == 2.0);
  CHECK(o(1, 0) == -1.0);
  CHECK(o.cwiseAbs().sum() == 3.0);
}

TEST_CASE("smoothness probe grid contract") {
  const AutoencoderModel model(tiny_config(), 4);
  SmoothnessConfig cfg;
  cfg.n_neighbors = 20;
  cfg.n_inputs = 64;
  cfg.grid_step = 1.0;
  cfg.seed = 9;
  const SmoothnessGrid g = smoothness_probe(model, 2, cfg);
  CHECK(g.alphas.size() == 7);
  CHECK(g.alphas.front() == -3.0);
  CHECK(g.alphas.back() == 3.0);
  CHECK(g.mse.rows() == 7);
  CHECK(g.mse.cols() == 7);
  CHECK(g.mse(3, 3) == 0.0);
  CHECK(g.mse.allFinite());
  CHECK((g.mse.array() >= 0.0).all());
  CHECK(std::abs(g.v1.norm() - 1.0) < 1e-12);
  CHECK(std::abs(g.v2.norm() - 1.0) < 1e-12);
  CHECK(std::abs(g.v1.dot(g.v2)) < 1e-8);
  CHECK(g.base.rows() == 5);

  cfg.threads = 3;
  const SmoothnessGrid g3 = smoothness_probe(model, 2, cfg);
  CHECK(g3.mse == g.mse);
  CHECK_THROWS_AS(smoothness_probe(model, 3, cfg), Error);
}

TEST_CASE("pareto examples and brute-force oracle") {
  auto run = [](std::vector<std::pair<double, int>> v) {
    std::vector<ParetoPoint> p;
    for (std::size_t i = 0; i < v.size(); ++i) p.push_back({v[i].first, v[i].second, static_cast<int>(i)});
    return pareto_extract(p);
  };
  CHECK(run({{1, 5}, {2, 3}, {3, 1}}).size() == 3);
  const auto two = run({{1, 5}, {1, 6}});
  REQUIRE(two.size() == 1);
  CHECK(two[0].index == 0);

  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ParetoPoint> pts(static_cast<std::size_t>(rng.uniform_int(1, 25)));
    for (std::size_t i = 0; i < pts.size(); ++i)
      pts[i] = {static_cast<double>(rng.uniform_int(0, 8)) / 4.0, rng.uniform_int(0, 10), static_cast<int>(i)};
    const auto got = pareto_extract(pts), want = brute_force_front(pts);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].mse == want[i].mse);
    }
  }
}

TEST_CASE("split and compose are exact for every cut") {
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  const Matrix xs = sample_inputs(3, 64, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mlp deep = sample_deep_mlp(seed, 9, {2, 5}, 2, 1);
    CHECK(deep.depth() == 9);
    const Matrix y = eval_mlp(deep, xs, hard);
    for (int cut = 1; cut < 9; ++cut) {
      const auto [front, back] = split_mlp(deep, cut);
      CHECK(front.depth() + back.depth() == 9);
      CHECK(front.output_dim == deep.layers[static_cast<std::size_t>(cut - 1)].width());
      CHECK(back.input_dim == front.output_dim);
      CHECK((eval_mlp(back, eval_mlp(front, xs, hard), hard) - y).cwiseAbs().maxCoeff() < 1e-14);
      const Mlp joined = compose_mlps(front, back);
      CHECK(joined.depth() == 9);
      CHECK((eval_mlp(joined, xs, hard) - y).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS_AS(split_mlp(deep, 0), Error);
    CHECK_THROWS_AS(split_mlp(deep, 9), Error);
  }
}

TEST_CASE("compress runs end to end") {
  const AutoencoderModel model(tiny_config(), 8);
  const Mlp deep = sample_deep_mlp(2, 4, {2, 4}, 2, 1);
  CompressConfig cfg;
  cfg.cuts = {2};
  cfg.target_depths = {1, 2};
  cfg.search.steps = 5;
  cfg.train_inputs = 64;
  cfg.test_inputs = 32;
  const CompressReport r = compress(deep, model, cfg);
  CHECK(r.parts.size() == 2);
  CHECK(r.compressed.input_dim == 2);
  CHECK(r.compressed.output_dim == 1);
  CHECK(r.compressed_depth == r.compressed.depth());
  CHECK(r.original_depth == 4);
  CHECK(r.interface_mse.size() == 1);
  CHECK(std::isfinite(r.output_mse));
  for (const auto& p : r.parts) CHECK(p.trajectory.size() == 5);

  CompressConfig bad = cfg;
  bad.target_depths = {1};
  CHECK_THROWS_AS(compress(deep, model, bad), Error);
  bad = cfg;
  bad.cuts = {4};
  CHECK_THROWS_AS(compress(deep, model, bad), Error);
  // Interface wider than the layout's boundary size.
  const Mlp wide = sample_deep_mlp(3, 3, {6, 6}, 2, 1);
  bad = cfg;
  bad.cuts = {1};
  CHECK_THROWS_AS(compress(wide, model, bad), Error);
}

TEST_CASE("report tables") {
  const auto dir = std::filesystem::temp_directory_path() / "swatnn_test_report";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Json doc = {{"kind", "search"},
                    {"task", "linear"},
                    {"selected", 1},
                    {"runs",
                     {{{"label", "decoder1"}, {"train_mse", 0.2}, {"test_mse", 0.25}, {"nonzeros", 9}, {"diverged", false}},
                      {{"label", "decoder2"}, {"train_mse", 0.1}, {"test_mse", 0.12}, {"nonzeros", 14}, {"diverged", false}},
                      {{"label", "decoder3"}, {"train_mse", 0.3}, {"test_mse", 0.5}, {"nonzeros", 20}, {"diverged", false}}}}};
  write_json_file((dir / "result.json").string(), doc);
  write_report({(dir / "result.json").string()}, dir.string());
  auto lines = [&](const char* name) {
    std::ifstream in(dir / name);
    std::vector<std::string> v;
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
  };
  CHECK(lines("summary.csv").size() == 4);
  const auto best = lines("best.csv");
  REQUIRE(best.size() == 2);
  CHECK(best[1].find("decoder2") != std::string::npos);
  CHECK(lines("pareto.csv").size() == 3);
  CHECK_THROWS_AS(write_report({(dir / "missing.json").string()}, dir.string()), Error);
  std::filesystem::remove_all(dir);
}
