#include <cmath>
#include <random>

#include "doctest.h"
#include "opca/batch_pca.hpp"
#include "opca/bottleneck.hpp"
#include "opca/errors.hpp"
#include "test_support.hpp"

using namespace opca;
using namespace opca::testing;

namespace {

LatentTensor random_latent(std::size_t b, const LatentShape& s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  LatentTensor t(b, s.channels, s.height, s.width);
  for (double& x : t.values) x = normal(rng);
  return t;
}

BottleneckConfig config(LayoutMode mode, std::size_t q, std::uint64_t seed = 0) {
  BottleneckConfig c;
  c.mode = mode;
  c.num_components = q;
  c.seed = seed;
  return c;
}

double half_sq_loss(const BottleneckLayout& layout, const LatentTensor& h, const LatentTensor& target) {
  const LatentTensor out = bottleneck_forward(layout, h);
  double s = 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) s += 0.5 * (out.values[i] - target.values[i]) * (out.values[i] - target.values[i]);
  return s;
}

}  // namespace

TEST_CASE("bottleneck_forward") {
  std::mt19937_64 rng(1);

  SUBCASE("full rank is the identity in both layouts") {
    const LatentShape shape{3, 2, 2};
    for (LayoutMode mode : {LayoutMode::single_vector, LayoutMode::multi_patch}) {
      const std::size_t q = mode == LayoutMode::single_vector ? 12 : 3;
      BottleneckLayout layout = BottleneckLayout::create(shape, config(mode, q, 5));
      bottleneck_update(layout, random_latent(4, shape, rng));
      const LatentTensor h = random_latent(5, shape, rng);
      const LatentTensor out = bottleneck_forward(layout, h);
      CHECK(out.same_shape(h));
      CHECK(max_abs_diff(out.values, h.values) < 1e-9);
    }
  }
  SUBCASE("per-sample axis projection") {
    const LatentShape shape{2, 1, 1};
    BottleneckLayout layout(LayoutMode::single_vector, shape, {make_state(DenseMatrix{{1}, {0}})});
    LatentTensor h(2, 2, 1, 1);
    h.values = {3, 4, -1, 2};
    CHECK(bottleneck_forward(layout, h).values == Vector{3, 0, -1, 0});
  }
  SUBCASE("multi-patch quantizes each position with its own basis") {
    const LatentShape shape{2, 1, 2};
    BottleneckLayout layout(LayoutMode::multi_patch, shape,
                            {make_state(DenseMatrix{{1}, {0}}), make_state(DenseMatrix{{0}, {1}})});
    LatentTensor h(1, 2, 1, 2);
    // NCHW: channel 0 = (a0, a1), channel 1 = (b0, b1) over positions 0, 1.
    h.values = {1, 2, 3, 4};
    // Position 0 keeps channel 0, position 1 keeps channel 1.
    CHECK(bottleneck_forward(layout, h).values == Vector{1, 0, 0, 4});
  }
  SUBCASE("shape mismatch") {
    const BottleneckLayout layout = BottleneckLayout::create({2, 2, 2}, config(LayoutMode::multi_patch, 1));
    CHECK_THROWS_AS(bottleneck_forward(layout, LatentTensor(1, 2, 2, 1)), InputError);
    CHECK_THROWS_AS(bottleneck_update(const_cast<BottleneckLayout&>(layout), LatentTensor(1, 3, 2, 2)), InputError);
  }
  SUBCASE("forward never mutates the layout") {
    const LatentShape shape{4, 2, 1};
    BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::multi_patch, 2, 3));
    bottleneck_update(layout, random_latent(6, shape, rng));
    const BottleneckLayout snapshot = layout;
    for (int i = 0; i < 5; ++i) {
      bottleneck_forward(layout, random_latent(3, shape, rng));
      stop_gradient_backward(layout, random_latent(3, shape, rng));
    }
    CHECK(layout == snapshot);
  }
}

TEST_CASE("layout construction invariants") {
  CHECK_THROWS_AS(BottleneckLayout(LayoutMode::multi_patch, LatentShape{2, 1, 2}, {init_state(2, 1, 0)}), InputError);
  CHECK_THROWS_AS(BottleneckLayout(LayoutMode::single_vector, LatentShape{2, 1, 2}, {init_state(2, 1, 0)}), InputError);
  CHECK_THROWS_AS(
      BottleneckLayout(LayoutMode::multi_patch, LatentShape{3, 1, 2}, {init_state(3, 1, 0), init_state(3, 2, 0)}),
      InputError);
  const BottleneckLayout ok = BottleneckLayout::create({3, 2, 2}, config(LayoutMode::multi_patch, 2, 10));
  CHECK(ok.states().size() == 4);
  CHECK(ok.states()[2] == init_state(3, 2, 12));
}

TEST_CASE("bottleneck_update") {
  std::mt19937_64 rng(2);

  SUBCASE("zero-variance batches produce no basis change after the first mean update") {
    const LatentShape shape{3, 2, 1};
    BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::multi_patch, 2, 1));
    LatentTensor constant(8, 3, 2, 1);
    for (std::size_t i = 0; i < constant.values.size(); ++i) constant.values[i] = 0.25 * static_cast<double>(i % 6);
    for (std::size_t b = 1; b < 8; ++b)
      for (std::size_t i = 0; i < 6; ++i) constant.values[b * 6 + i] = constant.values[i];
    bottleneck_update(layout, constant);
    const BottleneckLayout after_first = layout;
    const BottleneckUpdateStats st = bottleneck_update(layout, constant);
    CHECK(st.mean_delta_norm < 1e-14);
    for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(layout.states()[k].basis, after_first.states()[k].basis) < 1e-12);
  }

  SUBCASE("positions with different statistics learn different subspaces") {
    const LatentShape shape{4, 1, 2};
    BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::multi_patch, 1, 7));
    std::normal_distribution<double> normal;
    for (int step = 0; step < 3000; ++step) {
      LatentTensor h(32, 4, 1, 2);
      for (std::size_t b = 0; b < 32; ++b) {
        for (std::size_t c = 0; c < 4; ++c) {
          // Position 0 dominated by channel 0, position 1 by channel 1.
          h.at(b, c, 0, 0) = (c == 0 ? 3.0 : 0.5) * normal(rng);
          h.at(b, c, 0, 1) = (c == 1 ? 3.0 : 0.5) * normal(rng);
        }
      }
      bottleneck_update(layout, h);
    }
    const DenseMatrix& c0 = layout.states()[0].basis;
    const DenseMatrix& c1 = layout.states()[1].basis;
    CHECK(principal_angles(c0, c1)[0] > 0.5);
    CHECK(principal_angles(c0, DenseMatrix::identity(4).left_cols(1))[0] < 0.1);
    DenseMatrix e2(4, 1);
    e2(1, 0) = 1.0;
    CHECK(principal_angles(c1, e2)[0] < 0.1);
  }

  SUBCASE("failed update leaves every state untouched") {
    const LatentShape shape{2, 1, 2};
    OjaConfig hot;
    hot.schedule.eta0 = 5.0;
    hot.ortho_period = 2;
    hot.track_mean = false;
    BottleneckLayout layout(LayoutMode::multi_patch, shape,
                            {make_state(DenseMatrix{{1}, {0}}, hot), make_state(DenseMatrix{{1}, {0}}, hot)});
    const BottleneckLayout before = layout;
    LatentTensor h(1, 2, 1, 2);
    h.values = {0.0, 1.0, 0.0, 5.0};  // position 0 is benign, position 1 blows the drift bound
    CHECK_THROWS_AS(bottleneck_update(layout, h), NumericalError);
    CHECK(layout == before);
  }
}

TEST_CASE("stop_gradient_backward") {
  std::mt19937_64 rng(3);

  SUBCASE("full rank passes gradients through") {
    const LatentShape shape{4, 1, 1};
    const BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::single_vector, 4, 2));
    const LatentTensor g = random_latent(3, shape, rng);
    CHECK(max_abs_diff(stop_gradient_backward(layout, g).values, g.values) < 1e-9);
  }
  SUBCASE("gradients orthogonal to the span vanish") {
    const LatentShape shape{3, 1, 1};
    BottleneckLayout layout(LayoutMode::single_vector, shape, {make_state(DenseMatrix::identity(3).left_cols(2))});
    LatentTensor g(1, 3, 1, 1);
    g.values = {0, 0, 2.5};
    CHECK(max_abs_diff(stop_gradient_backward(layout, g).values, Vector{0, 0, 0}) < 1e-9);
  }
  SUBCASE("basis vectors are fixed points of the projector") {
    const LatentShape shape{6, 1, 1};
    const BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::single_vector, 3, 4));
    for (std::size_t q = 0; q < 3; ++q) {
      LatentTensor g(1, 6, 1, 1);
      g.values = layout.states()[0].basis.col(q);
      CHECK(max_abs_diff(stop_gradient_backward(layout, g).values, g.values) < 1e-9);
    }
  }
  SUBCASE("straight-through mode copies the gradient") {
    const LatentShape shape{3, 1, 1};
    BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::single_vector, 1, 4));
    layout.set_backward_mode(BackwardMode::straight_through);
    const LatentTensor g = random_latent(2, shape, rng);
    CHECK(stop_gradient_backward(layout, g) == g);
  }
  SUBCASE("matches central finite differences") {
    for (LayoutMode mode : {LayoutMode::single_vector, LayoutMode::multi_patch}) {
      const LatentShape shape{3, 2, 2};
      const std::size_t q = mode == LayoutMode::single_vector ? 5 : 2;
      BottleneckLayout layout = BottleneckLayout::create(shape, config(mode, q, 11));
      bottleneck_update(layout, random_latent(8, shape, rng));
      const LatentTensor h = random_latent(2, shape, rng);
      const LatentTensor target = random_latent(2, shape, rng);

      LatentTensor residual = bottleneck_forward(layout, h);
      for (std::size_t i = 0; i < residual.values.size(); ++i) residual.values[i] -= target.values[i];
      const LatentTensor analytic = stop_gradient_backward(layout, residual);

      const double step = 1e-5;
      for (std::size_t i = 0; i < h.values.size(); ++i) {
        LatentTensor hp = h, hm = h;
        hp.values[i] += step;
        hm.values[i] -= step;
        const double numeric = (half_sq_loss(layout, hp, target) - half_sq_loss(layout, hm, target)) / (2 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic.values[i]), 1e-6});
        CHECK(std::abs(numeric - analytic.values[i]) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("multi_patch with one position is bitwise single_vector") {
  std::mt19937_64 rng(4);
  const LatentShape shape{5, 1, 1};
  BottleneckLayout single = BottleneckLayout::create(shape, config(LayoutMode::single_vector, 3, 21));
  BottleneckLayout multi = BottleneckLayout::create(shape, config(LayoutMode::multi_patch, 3, 21));
  CHECK(single.states()[0] == multi.states()[0]);
  for (int step = 0; step < 25; ++step) {
    const LatentTensor h = random_latent(4, shape, rng);
    bottleneck_update(single, h);
    bottleneck_update(multi, h);
    CHECK(single.states()[0] == multi.states()[0]);
    CHECK(bottleneck_forward(single, h) == bottleneck_forward(multi, h));
    CHECK(stop_gradient_backward(single, h) == stop_gradient_backward(multi, h));
  }
}

TEST_CASE("sort and truncate a layout") {
  std::mt19937_64 rng(5);
  const LatentShape shape{4, 1, 2};
  BottleneckLayout layout = BottleneckLayout::create(shape, config(LayoutMode::multi_patch, 3, 1));
  for (int i = 0; i < 20; ++i) bottleneck_update(layout, random_latent(16, shape, rng));
  const LatentTensor data = random_latent(64, shape, rng);
  const BottleneckLayout sorted = sort_components(layout, data);
  for (std::size_t k = 0; k < 2; ++k) {
    const Vector var = explained_variance(sorted.states()[k], gather_block(sorted, data, k));
    CHECK(var[0] >= var[1]);
    CHECK(var[1] >= var[2]);
  }
  CHECK(bottleneck_forward(sorted, data).values.size() == data.values.size());
  CHECK(max_abs_diff(bottleneck_forward(sorted, data).values, bottleneck_forward(layout, data).values) < 1e-9);
  const BottleneckLayout cut = truncate(sorted, 1);
  CHECK(cut.num_components() == 1);
  CHECK_THROWS_AS(truncate(sorted, 4), InputError);
}
