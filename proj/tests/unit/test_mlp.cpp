#include <doctest.h>

#include <cmath>
#include <vector>

#include "causalsynth/errors.hpp"
#include "causalsynth/nn/mlp.hpp"
#include "support/gradcheck.hpp"

using namespace causalsynth;
using namespace causalsynth::nn;

namespace {

// Straightforward loop implementation kept independent of the Eigen path.
std::vector<double> reference_forward(const MlpSpec& spec, const MlpParams& p, std::vector<double> a) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> z(layer.weight.rows());
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      double acc = layer.bias(r);
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) acc += layer.weight(r, c) * a[c];
      z[r] = acc;
    }
    if (l + 1 < p.layers.size()) {
      for (double& v : z) {
        switch (spec.activation) {
          case Activation::relu: v = v > 0 ? v : 0; break;
          case Activation::tanh: v = std::tanh(v); break;
          case Activation::elu: v = v > 0 ? v : std::exp(v) - 1.0; break;
        }
      }
    }
    a = z;
  }
  return a;
}

MlpSpec random_spec(Rng& rng) {
  MlpSpec spec;
  const int depth = 1 + static_cast<int>(uniform_index(rng, 3));
  for (int i = 0; i < depth; ++i) spec.layer_widths.push_back(1 + static_cast<int>(uniform_index(rng, 8)));
  spec.output_dim = 1 + static_cast<int>(uniform_index(rng, 8));
  spec.activation = static_cast<Activation>(uniform_index(rng, 3));
  return spec;
}

bool near_relu_kink(const MlpSpec& spec, const MlpParams& p, const std::vector<double>& x) {
  if (spec.activation != Activation::relu) return false;
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
    Eigen::VectorXd z = p.layers[l].weight * a + p.layers[l].bias;
    if (z.cwiseAbs().minCoeff() < 1e-3) return true;
    a = z.cwiseMax(0.0);
  }
  return false;
}

}  // namespace

TEST_CASE("mlp_forward: zero parameters give a zero output") {
  MlpSpec spec{{3, 5}, Activation::tanh, 2};
  const MlpParams p = zeros_like(spec);
  const std::vector<double> x{0.3, -1.2, 4.0};
  const Eigen::VectorXd y = mlp_forward(spec, p, x);
  CHECK(y.size() == 2);
  CHECK(y.isZero(0.0));
}

TEST_CASE("mlp_forward: single identity layer") {
  MlpSpec spec{{2}, Activation::relu, 2};
  MlpParams p = zeros_like(spec);
  p.layers[0].weight = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<double> x{1.0, 2.0};
  const Eigen::VectorXd y = mlp_forward(spec, p, x);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 2.0);
}

TEST_CASE("mlp_forward: fixed two-layer tanh net matches frozen values") {
  MlpSpec spec{{3, 4}, Activation::tanh, 2};
  MlpParams p = zeros_like(spec);
  p.layers[0].weight << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6, -0.7, 0.8, 0.9, 0.15, -0.25, 0.35;
  p.layers[0].bias << 0.01, -0.02, 0.03, -0.04;
  p.layers[1].weight << 0.2, -0.1, 0.05, 0.3, -0.4, 0.25, 0.6, -0.15;
  p.layers[1].bias << 0.5, -0.5;
  const Eigen::VectorXd y = mlp_forward(spec, p, std::vector<double>{1.0, -2.0, 0.5});
  // Computed independently with numpy.
  CHECK(y(0) == doctest::Approx(0.83749066788468329).epsilon(1e-12));
  CHECK(y(1) == doctest::Approx(-1.5804578554355).epsilon(1e-12));
}

TEST_CASE("mlp_forward: random nets match the loop reference") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const MlpSpec spec = random_spec(rng);
    const MlpParams p = init_params(spec, rng);
    std::vector<double> x(spec.input_dim());
    for (double& v : x) v = standard_normal(rng);
    const Eigen::VectorXd y = mlp_forward(spec, p, x);
    const std::vector<double> ref = reference_forward(spec, p, x);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y(static_cast<Eigen::Index>(i)) == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("mlp_forward: dimension mismatch is a shape error") {
  MlpSpec spec{{3}, Activation::relu, 1};
  const MlpParams p = zeros_like(spec);
  CHECK_THROWS_AS(mlp_forward(spec, p, std::vector<double>{1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(mlp_backward(spec, p, std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0}),
                  ShapeError);
}

TEST_CASE("mlp_backward: zero upstream gives zero gradient") {
  Rng rng(3);
  MlpSpec spec{{4, 6, 5}, Activation::elu, 3};
  const MlpParams p = init_params(spec, rng);
  const MlpParams g = mlp_backward(spec, p, std::vector<double>{1, 2, 3, 4}, std::vector<double>{0, 0, 0});
  CHECK(g.all_zero());
}

TEST_CASE("mlp_backward: linear scalar output") {
  MlpSpec spec{{3}, Activation::relu, 1};
  Rng rng(9);
  const MlpParams p = init_params(spec, rng);
  const std::vector<double> x{0.5, -1.5, 2.0};
  const MlpParams g = mlp_backward(spec, p, x, std::vector<double>{1.0});
  for (int i = 0; i < 3; ++i) CHECK(g.layers[0].weight(0, i) == x[i]);
  CHECK(g.layers[0].bias(0) == 1.0);
}

TEST_CASE("mlp_backward: matches central finite differences on random nets") {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    Rng rng(1000 + seed);
    const MlpSpec spec = random_spec(rng);
    const MlpParams p = init_params(spec, rng);
    std::vector<double> x(spec.input_dim()), up(spec.output_dim);
    for (double& v : x) v = standard_normal(rng);
    for (double& v : up) v = standard_normal(rng);
    if (near_relu_kink(spec, p, x)) continue;
    ++checked;
    const std::vector<double> analytic = mlp_backward(spec, p, x, up).flatten();
    auto objective = [&](const std::vector<double>& flat) {
      MlpParams q = p;
      q.unflatten(flat);
      const Eigen::VectorXd y = mlp_forward(spec, q, x);
      double s = 0.0;
      for (int i = 0; i < spec.output_dim; ++i) s += y(i) * up[i];
      return s;
    };
    const auto numeric = testsupport::central_differences(objective, p.flatten());
    CHECK(testsupport::max_relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("init_params: Glorot bounds and zero bias") {
  MlpSpec spec{{10, 20}, Activation::relu, 5};
  Rng rng(1);
  const MlpParams p = init_params(spec, rng);
  const double limit0 = std::sqrt(6.0 / 30.0);
  CHECK(p.layers[0].weight.cwiseAbs().maxCoeff() <= limit0);
  CHECK(p.layers[0].bias.isZero(0.0));
  CHECK(p.all_finite());
}
