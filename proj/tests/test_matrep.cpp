#include "support.hpp"

#include "swatnn/error.hpp"
#include "swatnn/matrep.hpp"

#include <doctest.h>

#include <sstream>

using namespace swatnn;
using swatnn::testing::random_matrix;

TEST_CASE("layout column arithmetic") {
  RepLayout l;
  CHECK(l.columns() == 26);
  CHECK(l.hidden_block(1) == 9);
  CHECK(l.bias_column(0) == 5);
  CHECK(l.activation_column(1) == 15);
  CHECK(l.output_block() == 18);
  CHECK(l.output_bias_column() == 23);
  CHECK(l.mask_column(1) == 25);
  RepLayout bad;
  bad.input_dim_max = 6;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("padding rows of a narrow input block are invalid") {
  RepLayout layout;
  layout.max_neurons = 3;
  layout.input_dim_max = 2;
  layout.output_dim_max = 1;
  SampleOptions o;
  o.depth_range = {1, 1};
  o.width_range = {1, 3};
  const Mlp m = sample_random_mlp(layout, 4, o);
  const MatRep r = pack(m, layout);
  CHECK(r.validity.rows() == 3);
  CHECK(r.validity.block(2, layout.hidden_block(0), 1, layout.max_neurons).isZero());
  CHECK((r.values.array() * (1.0 - r.validity.array())).isZero(0.0));
}

TEST_CASE("inactive neurons show up as zero indicators") {
  RepLayout layout;
  Mlp m = sample_random_mlp(layout, 1, {.depth_range = {2, 2}, .width_range = {3, 3}});
  m.layers[0].neuron_mask(1) = 0.0;
  const MatRep r = pack(m, layout);
  CHECK(r.values(1, layout.mask_column(0)) == 0.0);
  CHECK(r.values(0, layout.mask_column(0)) == 1.0);
  CHECK(unpack(r, layout, 2, true) == m);
}

TEST_CASE("pack rejects networks that exceed the layout") {
  RepLayout layout;
  CHECK_THROWS_AS(pack(sample_random_mlp(RepLayout{.max_neurons = 6, .input_dim_max = 2}, 3,
                                         {.depth_range = {1, 1}, .width_range = {6, 6}}),
                       layout),
                  Error);
  CHECK_THROWS_AS(pack(sample_random_mlp(RepLayout{.max_hidden_layers = 3}, 3, {.depth_range = {3, 3}}), layout),
                  Error);
}

TEST_CASE("unpack thresholds masks and one-hots activation rows") {
  RepLayout layout;
  Mlp m = sample_random_mlp(layout, 8, {.depth_range = {1, 1}, .width_range = {5, 5}});
  MatRep r = pack(m, layout);
  r.values.col(layout.mask_column(0)).setConstant(0.7);
  r.values.block(0, layout.activation_column(0), 1, 3) << 0.2, 0.5, 0.3;
  const Mlp u = unpack(r, layout, 1, true);
  CHECK((u.layers[0].neuron_mask.array() == 1.0).all());
  CHECK(argmax_activation(u.layers[0].act_logits.row(0)) == ActivationKind::Tanh);
  CHECK(u.layers[0].act_logits(0, 1) == kSaturatedLogit);
  CHECK(u.layers[0].act_logits(0, 0) == 0.0);

  const Mlp s = unpack(r, layout, 1, false);
  CHECK(s.layers[0].act_logits(0, 0) == 0.2);
  r.values(0, layout.mask_column(0)) = 1.7;
  CHECK(unpack(r, layout, 1, false).layers[0].neuron_mask(0) == 1.0);
}

TEST_CASE("round trip is exact over random hard networks") {
  RepLayout layout;
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  SampleOptions opts;
  opts.input_dim_range = {1, 5};
  opts.output_dim_range = {1, 5};
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Mlp m = sample_random_mlp(layout, seed, opts);
    const Mlp u = unpack(pack(m, layout), layout, m.depth(), true);
    REQUIRE(u == m);
    Rng rng(seed, "x");
    const Matrix xs = random_matrix(rng, 8, m.input_dim);
    CHECK((eval_mlp(u, xs, hard).array() == eval_mlp(m, xs, hard).array()).all());
    // pack is also a left inverse of unpack on packed networks.
    const MatRep r = pack(m, layout);
    const MatRep r2 = pack(u, layout);
    CHECK(r.values == r2.values);
    CHECK(r.validity == r2.validity);
  }
}

TEST_CASE("sampling is deterministic and respects ranges") {
  RepLayout layout;
  CHECK(sample_random_mlp(layout, 77) == sample_random_mlp(layout, 77));
  CHECK_FALSE(sample_random_mlp(layout, 77) == sample_random_mlp(layout, 78));
  double lo = 0.0, hi = 0.0, blo = 0.0, bhi = 0.0;
  long count = 0;
  for (std::uint64_t s = 0; count < 10000; ++s) {
    const Mlp m = sample_random_mlp(layout, s);
    for (const auto& l : m.layers) {
      lo = std::min(lo, l.weights.minCoeff());
      hi = std::max(hi, l.weights.maxCoeff());
      blo = std::min(blo, l.biases.minCoeff());
      bhi = std::max(bhi, l.biases.maxCoeff());
      count += l.weights.size();
    }
    count += m.output_weights.size();
  }
  CHECK(lo >= -5.0);
  CHECK(hi <= 5.0);
  CHECK(lo < -4.9);
  CHECK(hi > 4.9);
  CHECK(blo >= -1.0);
  CHECK(bhi <= 1.0);

  for (std::uint64_t s = 0; s < 50; ++s) {
    const Mlp m = sample_random_mlp(layout, s, {.width_range = {3, 3}});
    for (const auto& l : m.layers) {
      CHECK(l.width() == 3);
      CHECK((l.neuron_mask.array() == 1.0).all());
    }
  }
}

TEST_CASE("structural validity matches a packed full-width network") {
  RepLayout layout;
  const Mlp m = sample_random_mlp(layout, 12, {.depth_range = {2, 2}, .width_range = {5, 5}});
  CHECK(pack(m, layout).validity == structural_validity(layout, 2, 2, 1));
}

TEST_CASE("graph unpack agrees with soft unpack") {
  RepLayout layout;
  Rng rng(6);
  for (int k = 1; k <= 2; ++k) {
    MatRep r;
    r.values = random_matrix(rng, 5, layout.columns(), -2.0, 2.0);
    r.validity = structural_validity(layout, k, 2, 1);
    r.values.col(layout.mask_column(0)) = r.values.col(layout.mask_column(0)).cwiseAbs().cwiseMin(1.0);
    r.values.col(layout.mask_column(1)) = r.values.col(layout.mask_column(1)).cwiseAbs().cwiseMin(1.0);
    ad::Tape t;
    const Mlp g = mlp_values(unpack_vars(t.constant(r.values), layout, k, 2, 1));
    CHECK(g == unpack(r, layout, k, false));
  }
}

TEST_CASE("binary codec round trip and corruption") {
  RepLayout layout;
  const MatRep r = pack(sample_random_mlp(layout, 31), layout);
  std::stringstream ss;
  write_matrep(ss, r, layout);
  RepLayout back;
  const MatRep r2 = read_matrep(ss, &back);
  CHECK(back == layout);
  CHECK(r2.values == r.values);
  CHECK(r2.validity == r.validity);

  std::string bytes;
  {
    std::stringstream s2;
    write_matrep(s2, r, layout);
    bytes = s2.str();
  }
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(read_matrep(bad), Error);
  std::stringstream trunc(bytes.substr(0, 20));
  CHECK_THROWS_AS(read_matrep(trunc), Error);
}
