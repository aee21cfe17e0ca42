#include "support.hpp"

#include "swatnn/error.hpp"
#include "swatnn/latentopt.hpp"

#include <doctest.h>

#include <cmath>

using namespace swatnn;
using swatnn::testing::numeric_grad;
using swatnn::testing::random_matrix;
using swatnn::testing::random_vector;
using swatnn::testing::rel_error;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

AutoencoderConfig tiny_config() {
  AutoencoderConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  return c;
}

TaskDataset small_task(const std::string& name, int train = 64, int test = 32) {
  TaskSpec spec = find_task(name);
  spec.train_count = train;
  spec.test_count = test;
  return generate(spec);
}

// Plain re-derivation of the data term from its definition.
double data_term_oracle(const AutoencoderModel& model, int k, const Embedding& z, double t_s, const Matrix& xs,
                        const Matrix& ys, long epoch, const SearchConfig& cfg) {
  const auto& layout = model.config().layout;
  Mlp m = unpack(decode(model, k, z, static_cast<int>(xs.cols()), static_cast<int>(ys.cols())), layout, k, false);
  auto mask = [&](Matrix& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Vector one(1);
      one(0) = w.data()[i];
      w.data()[i] = soft_weight_mask(one, t_s, cfg.penalties.soft_scale, MaskMode::Soft)(0);
    }
  };
  for (auto& l : m.layers) mask(l.weights);
  mask(m.output_weights);
  EvalConfig ec;
  ec.temperature = temperature(epoch, cfg.anneal);
  ec.mask_sharpness = cfg.penalties.soft_scale;
  ec.neuron_threshold = cfg.penalties.t_n;
  return (eval_mlp(m, xs, ec) - ys).array().square().mean();
}

}  // namespace

TEST_CASE("temperature schedule") {
  const AnnealSchedule s;
  CHECK(temperature(0, s) == 1.0);
  CHECK(temperature(3000, s) == 0.01);
  CHECK(temperature(1500, s) == 0.5);
  CHECK(temperature(100000, s) == 0.01);
  CHECK(temperature(2990, s) == doctest::Approx(0.01).epsilon(1e-9));
  CHECK_THROWS_AS(temperature(-1, s), Error);
  // Linear in between.
  for (long e = 0; e < 2970; e += 37) CHECK(std::abs(temperature(e, s) - (1.0 - e / 3000.0)) < 1e-15);
}

TEST_CASE("sparsity penalty examples") {
  PenaltyConfig c;
  for (int n : {1, 4, 17}) CHECK(sparsity_penalty(Vector::Zero(n), 0.0, c) == doctest::Approx(0.01 * n * 0.5));
  Vector w(1);
  w << 0.1;
  CHECK(sparsity_penalty(w, 0.1, c) == doctest::Approx(0.015).epsilon(1e-15));

  // Direct summation oracle.
  Rng rng(2);
  const Vector v = random_vector(rng, 30);
  double expect = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) expect += 0.1 * std::abs(v(i)) + 0.01 * sigmoid(-20.0 * (std::abs(v(i)) - 0.3));
  CHECK(sparsity_penalty(v, 0.3, c) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("soft weight mask examples") {
  Vector w(2);
  w << 0.05, -0.2;
  const Vector h = soft_weight_mask(w, 0.1, 20.0, MaskMode::Hard);
  CHECK(h(0) == 0.0);
  CHECK(h(1) == -0.2);
  Vector e(2);
  e << 0.1, -0.1;
  const Vector s = soft_weight_mask(e, 0.1, 20.0, MaskMode::Soft);
  CHECK(s(0) == 0.05);
  CHECK(s(1) == -0.05);

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double t_s = rng.uniform(0.0, 0.5);
    Vector x(1);
    x << (rng.uniform(0.0, 1.0) < 0.5 ? -1 : 1) * (t_s + 0.5 + rng.uniform(0.0, 4.0));
    const double soft = soft_weight_mask(x, t_s, 20.0, MaskMode::Soft)(0);
    const double hard = soft_weight_mask(x, t_s, 20.0, MaskMode::Hard)(0);
    CHECK(std::abs(soft - hard) < 1e-4 * std::abs(x(0)));
  }
}

TEST_CASE("compactness penalty examples") {
  CHECK(compactness_penalty({Vector::Ones(4), Vector::Ones(3)}, 0.4, 1e-3) == doctest::Approx(1e-3));
  CHECK(compactness_penalty({Vector::Zero(5)}, 0.4, 1e-3) == 0.0);
  Vector m(2);
  m << 0.0, 1.0;
  CHECK(compactness_penalty({m}, 0.4, 0.1) == doctest::Approx(-0.5 * 0.4 + 0.5 * 0.1).epsilon(1e-15));
}

TEST_CASE("graph penalties agree with plain forms and finite differences") {
  Rng rng(4);
  for (bool aggregate : {false, true}) {
    PenaltyConfig c;
    c.aggregate_soft_count = aggregate;
    c.soft_scale = aggregate ? 0.5 : 20.0;
    const Matrix w1 = random_matrix(rng, 2, 3), w2 = random_matrix(rng, 3, 1);
    const double t_s = 0.17;
    ad::Tape t;
    ad::Var a = t.variable(w1), b = t.variable(w2), ts = t.variable(Matrix::Constant(1, 1, t_s));
    ad::Var p = sparsity_penalty(std::vector<ad::Var>{a, b}, ts, c);
    Vector flat(9);
    flat << Eigen::Map<const Vector>(w1.data(), 6), Eigen::Map<const Vector>(w2.data(), 3);
    CHECK(p.scalar() == doctest::Approx(sparsity_penalty(flat, t_s, c)).epsilon(1e-14));
    t.backward(p);
    auto f_w1 = [&](const Matrix& x) {
      Vector v(9);
      v << Eigen::Map<const Vector>(x.data(), 6), Eigen::Map<const Vector>(w2.data(), 3);
      return sparsity_penalty(v, t_s, c);
    };
    auto f_ts = [&](const Matrix& x) { return sparsity_penalty(flat, x(0, 0), c); };
    CHECK(rel_error(t.grad(a), numeric_grad(f_w1, w1)) < 1e-4);
    CHECK(rel_error(t.grad(ts), numeric_grad(f_ts, Matrix::Constant(1, 1, t_s))) < 1e-4);
  }

  const Matrix m1 = random_matrix(rng, 1, 5, 0.0, 1.0), m2 = random_matrix(rng, 1, 3, 0.0, 1.0);
  ad::Tape t;
  ad::Var a = t.variable(m1), b = t.variable(m2);
  ad::Var p = compactness_penalty(std::vector<ad::Var>{a, b}, 0.4, 1e-3);
  CHECK(p.scalar() == doctest::Approx(compactness_penalty({m1.transpose(), m2.transpose()}, 0.4, 1e-3)).epsilon(1e-14));
  t.backward(p);
  auto f = [&](const Matrix& x) { return compactness_penalty({x.transpose(), m2.transpose()}, 0.4, 1e-3); };
  CHECK(rel_error(t.grad(a), numeric_grad(f, m1)) < 1e-4);

  const Matrix w = random_matrix(rng, 3, 3);
  ad::Tape u;
  ad::Var wv = u.variable(w), tv = u.variable(Matrix::Constant(1, 1, 0.2));
  u.backward(ad::sum(soft_weight_mask(wv, tv, 20.0)));
  auto g = [&](const Matrix& x) {
    return soft_weight_mask(Eigen::Map<const Vector>(x.data(), 9), 0.2, 20.0, MaskMode::Soft).sum();
  };
  CHECK(rel_error(u.grad(wv), numeric_grad(g, w)) < 1e-6);
}

TEST_CASE("penalty presets") {
  CHECK(penalty_preset(PenaltyLevel::None).lambda_s == 0.0);
  CHECK(penalty_preset(PenaltyLevel::None).alpha == 0.0);
  CHECK(penalty_preset(PenaltyLevel::Small).lambda_s == 1e-5);
  CHECK(penalty_preset(PenaltyLevel::Small).alpha == 0.1);
  CHECK(penalty_preset(PenaltyLevel::Small).beta == 1e-4);
  CHECK(penalty_preset(PenaltyLevel::Medium).lambda_s == 1e-4);
  CHECK(penalty_preset(PenaltyLevel::Medium).alpha == 0.4);
  CHECK(penalty_preset(PenaltyLevel::Medium).beta == 1e-3);
  CHECK(penalty_preset(PenaltyLevel::Large).lambda_s == 1e-3);
  CHECK(penalty_preset(PenaltyLevel::Large).alpha == 0.4);
  CHECK(penalty_preset(PenaltyLevel::Large).beta == 0.1);
  for (auto l : {PenaltyLevel::None, PenaltyLevel::Small, PenaltyLevel::Medium, PenaltyLevel::Large})
    CHECK(penalty_level_from_name(penalty_level_name(l)) == l);
  CHECK_THROWS_AS(penalty_level_from_name("huge"), Error);
}

TEST_CASE("search loss terms") {
  const AutoencoderModel model(tiny_config(), 3);
  const TaskDataset d = small_task("linear");
  Rng rng(8);
  const Matrix z = random_matrix(rng, 5, 16, -1.0, 1.0);
  SearchConfig cfg;
  for (int k = 1; k <= 2; ++k) {
    const double oracle = data_term_oracle(model, k, z, 0.05, d.x_train, d.y_train, 700, cfg);
    CHECK(search_loss(model, k, z, 0.05, d.x_train, d.y_train, 700, cfg) == doctest::Approx(oracle).epsilon(1e-12));

    SearchConfig pen = cfg;
    pen.penalties = penalty_preset(PenaltyLevel::Large);
    ad::Tape t2;
    BoundModel bm2(t2, model, false);
    const SearchLoss l = search_loss_graph(bm2, k, t2.constant(z), t2.constant_scalar(0.05), d.x_train, d.y_train,
                                           700, pen);
    CHECK(l.total.scalar() == doctest::Approx(l.data.scalar() + 1e-3 * l.sparsity.scalar() + l.compactness.scalar()));
    CHECK(l.data.scalar() == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("perfect fit with zero penalties gives zero loss") {
  const AutoencoderModel model(tiny_config(), 3);
  Rng rng(12);
  const Matrix z = random_matrix(rng, 5, 16, -1.0, 1.0);
  const Matrix xs = random_matrix(rng, 40, 2);
  SearchConfig cfg;
  // Targets produced by the same soft-masked network evaluation.
  const auto& layout = model.config().layout;
  Mlp m = unpack(decode(model, 2, z), layout, 2, false);
  for (auto* w : {&m.layers[0].weights, &m.layers[1].weights, &m.output_weights})
    for (Eigen::Index i = 0; i < w->size(); ++i)
      w->data()[i] *= sigmoid(20.0 * (std::abs(w->data()[i]) - 0.05));
  EvalConfig ec;
  ec.temperature = 1.0;
  const Matrix ys = eval_mlp(m, xs, ec);
  CHECK(search_loss(model, 2, z, 0.05, xs, ys, 0, cfg) < 1e-28);
}

TEST_CASE("search loss gradient in z and t_s matches finite differences") {
  AutoencoderConfig ac = tiny_config();
  ac.d_model = 32;
  ac.n_heads = 4;
  ac.n_layers = 2;
  const AutoencoderModel model(ac, 17);
  const TaskDataset d = small_task("sphere", 24, 8);
  Rng rng(19);
  const Matrix z = random_matrix(rng, 5, 32, -1.0, 1.0);
  SearchConfig cfg;
  cfg.penalties = penalty_preset(PenaltyLevel::Medium);
  const double t_s = 0.05;
  for (int k = 1; k <= 2; ++k) {
    ad::Tape t;
    BoundModel bm(t, model, false);
    ad::Var zv = t.variable(z), tv = t.variable(Matrix::Constant(1, 1, t_s));
    t.backward(search_loss_graph(bm, k, zv, tv, d.x_train, d.y_train, 250, cfg).total);
    auto fz = [&](const Matrix& x) { return search_loss(model, k, x, t_s, d.x_train, d.y_train, 250, cfg); };
    auto ft = [&](const Matrix& x) { return search_loss(model, k, z, x(0, 0), d.x_train, d.y_train, 250, cfg); };
    CHECK(rel_error(t.grad(zv), numeric_grad(fz, z)) < 1e-3);
    CHECK(rel_error(t.grad(tv), numeric_grad(ft, Matrix::Constant(1, 1, t_s))) < 1e-3);
  }
}

TEST_CASE("selection rule fixtures") {
  using C = Candidate;
  CHECK(select_best(std::vector<C>{{1.0, 10}, {1.04, 5}, {2.0, 2}}) == 1);
  CHECK(select_best(std::vector<C>{{0.3, 7}}) == 0);
  CHECK(select_best(std::vector<C>{{1.0, 9}, {1.2, 1}}) == 0);
  // Exactly on the band edge is inside.
  CHECK(select_best(std::vector<C>{{1.0, 9}, {1.05, 1}}) == 1);
  CHECK(select_best(std::vector<C>{{0.2, 9}, {0.21, 1}}) == 1);
  CHECK(select_best(std::vector<C>{{1.0, 9}, {1.0500001, 1}}) == 0);
  // Ties on nonzeros go to lower MSE, then lower index.
  CHECK(select_best(std::vector<C>{{1.0, 4}, {1.01, 3}, {1.02, 3}}) == 1);
  CHECK(select_best(std::vector<C>{{1.0, 4}, {1.0, 4}}) == 0);
  // Diverged and non-finite entries are ignored.
  CHECK(select_best(std::vector<C>{{0.1, 1, true}, {1.0, 9}, {1.02, 4}}) == 2);
  CHECK(select_best(std::vector<C>{{NAN, 1}, {1.0, 9}}) == 1);
  CHECK_THROWS_AS(select_best(std::vector<C>{{0.1, 1, true}}), Error);
  CHECK_THROWS_AS(select_best(std::vector<C>{}), Error);
  // Tolerance zero keeps only the minimum.
  CHECK(select_best(std::vector<C>{{1.0, 9}, {1.0000001, 1}}, 0.0) == 0);
}

TEST_CASE("selection matches a brute-force oracle on random tables") {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Candidate> c(static_cast<std::size_t>(rng.uniform_int(1, 8)));
    for (auto& x : c) {
      x.mse = std::round(rng.uniform(1.0, 1.3) * 100.0) / 100.0;
      x.nonzeros = rng.uniform_int(0, 6);
      x.diverged = rng.uniform(0.0, 1.0) < 0.15;
    }
    double best = INFINITY;
    for (const auto& x : c)
      if (!x.diverged) best = std::min(best, x.mse);
    if (!std::isfinite(best)) {
      CHECK_THROWS_AS(select_best(c), Error);
      continue;
    }
    int pick = -1;
    for (int i = 0; i < static_cast<int>(c.size()); ++i) {
      const auto& x = c[static_cast<std::size_t>(i)];
      if (x.diverged || x.mse > best * 1.05 + 1e-12) continue;
      if (pick < 0) {
        pick = i;
        continue;
      }
      const auto& p = c[static_cast<std::size_t>(pick)];
      if (x.nonzeros < p.nonzeros || (x.nonzeros == p.nonzeros && x.mse < p.mse)) pick = i;
    }
    CHECK(select_best(c) == pick);
  }
}

TEST_CASE("harden zeroes small weights and prunes inactive neurons") {
  RepLayout layout;
  Mlp m = sample_random_mlp(layout, 5, {.depth_range = {2, 2}, .width_range = {5, 5}});
  m.layers[0].weights(0, 0) = 0.01;
  m.layers[0].weights(1, 2) = -0.02;
  m.layers[1].neuron_mask(3) = 0.0;
  const MatRep r = pack(m, layout);
  const Mlp h = harden(r, layout, 2, 0.05, 0.5);
  CHECK(h.layers[0].weights(0, 0) == 0.0);
  CHECK(h.layers[0].weights(1, 2) == 0.0);
  CHECK(h.layers[1].width() == 4);
  CHECK(active_neurons(h) == std::vector<int>{5, 4});
  const int full = static_cast<int>((m.layers[0].weights.array().abs() >= 0.05).count()) +
                   static_cast<int>((m.layers[1].weights.array().abs() >= 0.05).count()) - 5 +
                   static_cast<int>((m.output_weights.array().abs() >= 0.05).count()) - 1;
  CHECK(nonzero_weights(h) == full);
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  Mlp zeroed = unpack(r, layout, 2, true);
  zeroed.layers[0].weights(0, 0) = 0.0;
  zeroed.layers[0].weights(1, 2) = 0.0;
  const Matrix xs = sample_inputs(1, 16, 2);
  CHECK(rel_error(eval_mlp(h, xs, hard), eval_mlp(zeroed, xs, hard), 1.0) < 1e-14);
}

TEST_CASE("search is deterministic, thread-invariant and reports every decoder") {
  const AutoencoderModel model(tiny_config(), 6);
  const TaskDataset d = small_task("linear");
  SearchConfig cfg;
  cfg.steps = 15;
  cfg.seed = 4;
  cfg.penalties = penalty_preset(PenaltyLevel::Medium);
  const SearchResult a = run_search(model, d, cfg);
  cfg.threads = 2;
  const SearchResult b = run_search(model, d, cfg);
  REQUIRE(a.per_decoder.size() == 2);
  CHECK(a.selected == b.selected);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.per_decoder[i].decoder == static_cast<int>(i) + 1);
    CHECK(a.per_decoder[i].z == b.per_decoder[i].z);
    CHECK(a.per_decoder[i].trajectory == b.per_decoder[i].trajectory);
    CHECK(a.per_decoder[i].trajectory.size() == 15);
    CHECK(a.per_decoder[i].mlp.depth() == static_cast<int>(i) + 1);
    CHECK(a.per_decoder[i].t_s >= 0.0);
    CHECK(a.per_decoder[i].t_s <= 1.0);
    CHECK(a.per_decoder[i].test_mse == doctest::Approx(mse(a.per_decoder[i].mlp, d.x_test, d.y_test)));
  }
  CHECK(a.selected == select_best(a.per_decoder, cfg.selection_tolerance));

  // Zero steps leaves z at its seeded start; more steps lower the objective here.
  cfg.steps = 0;
  const DecoderResult z0 = search_decoder(model, d, cfg, 1);
  CHECK(z0.steps_run == 0);
  cfg.steps = 60;
  cfg.penalties = PenaltyConfig{};
  const DecoderResult r = search_decoder(model, d, cfg, 1);
  CHECK(r.trajectory.back() < r.trajectory.front());
}

TEST_CASE("divergence stops the search and keeps a finite point") {
  const AutoencoderModel model(tiny_config(), 6);
  const TaskDataset d = small_task("sphere");
  SearchConfig cfg;
  cfg.steps = 50;
  cfg.lr = 1e3;
  // The decoder head is bounded, so the threshold is set below the first loss.
  cfg.divergence_threshold = 1e-6;
  const DecoderResult r = search_decoder(model, d, cfg, 2);
  CHECK(r.diverged);
  CHECK(r.steps_run < 50);
  CHECK(r.z.allFinite());
  SearchConfig bad;
  bad.decoder_set = {3};
  CHECK_THROWS_AS(bad.validate(2), Error);
}
