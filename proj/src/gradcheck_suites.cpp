#include "dragan/gradcheck_suites.hpp"

#include <stdexcept>

#include "dragan/losses.hpp"
#include "dragan/models.hpp"

namespace dragan {

namespace {

using V = Var<double>;
using Vs = std::vector<V>;
using D = Tensor<double>;

// Projects an op's output onto a fixed random direction so every output
// entry contributes a distinct weight to the checked scalar.
struct Probe {
  RngState rng;
  explicit Probe(uint64_t seed) : rng(seed) {}

  ScalarFn wrap(std::function<V(const Vs&)> op, const Shape& out_shape) {
    const V dir = constant(random_tensor(out_shape, rng, -1.0, 1.0));
    return [op = std::move(op), dir](const Vs& in) { return sum(mul(op(in), dir)); };
  }
};

class Suite {
 public:
  Suite(uint64_t seed, double tol) : rng_(seed), probe_(derive_seed(seed, 1)), tol_(tol) {}

  D rand(const Shape& s, double lo = -1.0, double hi = 1.0, double margin = 0.0) {
    return random_tensor(s, rng_, lo, hi, margin);
  }

  void op(const std::string& name, std::function<V(const Vs&)> f, const std::vector<D>& inputs,
          const Shape& out_shape, int64_t max_entries = 0) {
    run(name, probe_.wrap(std::move(f), out_shape), inputs, max_entries);
  }

  void run(const std::string& name, const ScalarFn& fn, const std::vector<D>& inputs, int64_t max_entries = 0) {
    results_.push_back(check_gradients(name, fn, inputs, tol_, 1e-5, max_entries, rng_.next_u64()));
  }

  std::vector<GradcheckResult> take() { return std::move(results_); }

 private:
  RngState rng_;
  Probe probe_;
  double tol_;
  std::vector<GradcheckResult> results_;
};

void ops_suite(Suite& s) {
  const Shape x4{2, 3, 4, 5};
  s.op("add", [](const Vs& v) { return add(v[0], v[1]); }, {s.rand(x4), s.rand(x4)}, x4);
  s.op("sub", [](const Vs& v) { return sub(v[0], v[1]); }, {s.rand(x4), s.rand(x4)}, x4);
  s.op("mul", [](const Vs& v) { return mul(v[0], v[1]); }, {s.rand(x4), s.rand(x4)}, x4);
  s.op("neg", [](const Vs& v) { return neg(v[0]); }, {s.rand(x4)}, x4);
  s.op("scale", [](const Vs& v) { return scale(v[0], 1.7); }, {s.rand(x4)}, x4);
  s.op("add_scalar", [](const Vs& v) { return add_scalar(v[0], -0.3); }, {s.rand(x4)}, x4);
  s.op("sigmoid", [](const Vs& v) { return sigmoid(v[0]); }, {s.rand(x4, -3, 3)}, x4);
  s.op("tanh", [](const Vs& v) { return tanh(v[0]); }, {s.rand(x4, -2, 2)}, x4);
  s.op("relu", [](const Vs& v) { return relu(v[0]); }, {s.rand(x4, -1, 1, 0.05)}, x4);
  s.op("leaky_relu", [](const Vs& v) { return leaky_relu(v[0], 0.2); }, {s.rand(x4, -1, 1, 0.05)}, x4);
  s.op("sqrt", [](const Vs& v) { return sqrt(v[0]); }, {s.rand(x4, 0.5, 2.0)}, x4);
  s.op("reciprocal", [](const Vs& v) { return reciprocal(v[0]); }, {s.rand(x4, 0.5, 2.0)}, x4);

  // Compositions exercise the second-order rules through create_graph paths
  // of the first-order ones.
  s.op("sigmoid_mul_tanh", [](const Vs& v) { return mul(sigmoid(v[0]), tanh(v[1])); }, {s.rand(x4), s.rand(x4)},
       x4);

  const Shape xc{2, 3, 6, 5};
  s.op("conv2d_3x3_s1", [](const Vs& v) { return conv2d(v[0], v[1], 1, 1, v[2]); },
       {s.rand(xc), s.rand({4, 3, 3, 3}), s.rand({4})}, {2, 4, 6, 5});
  s.op("conv2d_3x3_s2", [](const Vs& v) { return conv2d(v[0], v[1], 2, 1, v[2]); },
       {s.rand(xc), s.rand({4, 3, 3, 3}), s.rand({4})}, {2, 4, 3, 3});
  s.op("conv2d_1x1", [](const Vs& v) { return conv2d(v[0], v[1], 1, 0, v[2]); },
       {s.rand(xc), s.rand({4, 3, 1, 1}), s.rand({4})}, {2, 4, 6, 5});
  s.op("conv2d_3x3_valid", [](const Vs& v) { return conv2d(v[0], v[1], 1, 0); }, {s.rand(xc), s.rand({2, 3, 3, 3})},
       {2, 2, 4, 3});
  s.op("conv2d_input_grad",
       [](const Vs& v) { return conv2d_input_grad(v[0], v[1], ConvGeometry{2, 1}, 6, 5); },
       {s.rand({2, 4, 3, 3}), s.rand({4, 3, 3, 3})}, xc);
  s.op("conv2d_weight_grad",
       [](const Vs& v) { return conv2d_weight_grad(v[0], v[1], ConvGeometry{1, 1}, 3, 3); },
       {s.rand(xc), s.rand({2, 4, 6, 5})}, {4, 3, 3, 3});
  s.op("channel_expand", [](const Vs& v) { return channel_expand(v[0], Shape{2, 3, 2, 2}); }, {s.rand({3})},
       {2, 3, 2, 2});
  s.op("channel_sum", [](const Vs& v) { return channel_sum(v[0]); }, {s.rand(x4)}, {3});

  s.op("concat_channels", [](const Vs& v) { return concat_channels(v[0], v[1]); },
       {s.rand({2, 3, 4, 4}), s.rand({2, 2, 4, 4})}, {2, 5, 4, 4});
  s.op("slice_channels", [](const Vs& v) { return slice_channels(v[0], 1, 2); }, {s.rand(x4)}, {2, 2, 4, 5});
  s.op("pad_channels", [](const Vs& v) { return pad_channels(v[0], 2, 6); }, {s.rand(x4)}, {2, 6, 4, 5});

  s.op("resize_up2", [](const Vs& v) { return resize_bilinear(v[0], 8, 10); }, {s.rand(x4)}, {2, 3, 8, 10});
  s.op("resize_down2", [](const Vs& v) { return resize_bilinear(v[0], 2, 3); }, {s.rand({2, 3, 4, 6})},
       {2, 3, 2, 3});
  s.op("resize_odd", [](const Vs& v) { return resize_bilinear(v[0], 7, 3); }, {s.rand(x4)}, {2, 3, 7, 3});
  s.op("resize_adjoint", [](const Vs& v) { return resize_bilinear_adjoint(v[0], 4, 5); }, {s.rand({2, 3, 7, 9})},
       x4);

  s.op("matmul", [](const Vs& v) { return matmul(v[0], v[1]); }, {s.rand({3, 4}), s.rand({4, 5})}, {3, 5});
  s.op("transpose", [](const Vs& v) { return transpose(v[0]); }, {s.rand({3, 4})}, {4, 3});
  s.op("fully_connected", [](const Vs& v) { return fully_connected(v[0], v[1], v[2]); },
       {s.rand({3, 6}), s.rand({4, 6}), s.rand({4})}, {3, 4});
  s.op("fully_connected_scalar_bias", [](const Vs& v) { return fully_connected(v[0], v[1], v[2]); },
       {s.rand({3, 6}), s.rand({1, 6}), s.rand({1})}, {3, 1});

  s.op("reshape", [](const Vs& v) { return reshape(v[0], Shape{6, 20}); }, {s.rand(x4)}, {6, 20});
  s.op("flatten", [](const Vs& v) { return flatten(v[0]); }, {s.rand(x4)}, {2, 60});
  s.op("sum", [](const Vs& v) { return sum(v[0]); }, {s.rand(x4)}, {1});
  s.op("mean", [](const Vs& v) { return mean(v[0]); }, {s.rand(x4)}, {1});
  s.op("expand_scalar", [](const Vs& v) { return expand_scalar(v[0], Shape{2, 3}); }, {s.rand({1})}, {2, 3});
  s.op("sum_per_sample", [](const Vs& v) { return sum_per_sample(v[0]); }, {s.rand(x4)}, {2});
  s.op("expand_per_sample", [](const Vs& v) { return expand_per_sample(v[0], Shape{2, 3, 2}); }, {s.rand({2})},
       {2, 3, 2});
  s.op("l2_norm_per_sample", [](const Vs& v) { return l2_norm_per_sample(v[0]); }, {s.rand(x4)}, {2});

  static const std::vector<int> labels{2, 0, 3};
  s.run("softmax_cross_entropy",
        [](const Vs& v) { return softmax_cross_entropy(v[0], std::span<const int>(labels)); }, {s.rand({3, 4}, -2, 2)});
}

void blocks_suite(Suite& s, uint64_t seed) {
  RngState rng(derive_seed(seed, 2));
  const auto unit = ResidualUnit<double>::create(3, Activation::relu, rng);
  const auto unit_leaky = ResidualUnit<double>::create(3, Activation::leaky_relu, rng);
  const Shape x{2, 3, 5, 4};
  auto residual = [](const ResidualUnit<double>& proto) {
    return [proto](const Vs& v) {
      ResidualUnit<double> u = proto;
      u.conv1.weight = v[1];
      u.conv1.bias = v[2];
      u.conv2.weight = v[3];
      u.conv2.bias = v[4];
      return residual_unit_forward(v[0], u);
    };
  };
  const std::vector<D> res_in{s.rand(x), unit.conv1.weight.value(), unit.conv1.bias.value(), s.rand({3, 3, 3, 3}),
                              s.rand({3})};
  s.op("residual_unit_relu", residual(unit), res_in, x);
  s.op("residual_unit_leaky", residual(unit_leaky), res_in, x);

  auto fuse = [](const Vs& v) {
    DraModule<double> m;
    m.reduce.weight = v[2];
    m.reduce.bias = v[3];
    m.reduce.padding = 0;
    return dense_fuse(v[0], v[1], m);
  };
  const Shape fd{2, 5, 4, 4}, fe{2, 3, 4, 4};
  s.op("dense_fuse", fuse, {s.rand(fd), s.rand(fe), s.rand({3, 8, 1, 1}), s.rand({3})}, fe);
  s.op("residual_attention", [](const Vs& v) { return residual_attention(v[0], v[1]); },
       {s.rand(fe), s.rand(fe, -3, 3)}, fe);
  s.op("dra_module", [fuse](const Vs& v) { return residual_attention(fuse(v), v[1]); },
       {s.rand(fd), s.rand(fe, -2, 2), s.rand({3, 8, 1, 1}), s.rand({3})}, fe);
  s.op("attach_pictogram", [](const Vs& v) { return attach_pictogram(v[0], v[1]); },
       {s.rand({2, 4, 4, 4}), s.rand({2, 3, 8, 8})}, {2, 7, 4, 4});
}

void gp_suite(Suite& s, uint64_t seed) {
  // Two-layer dense critic with a smooth hidden activation.
  const Shape xs{3, 2, 3, 3};
  const D x_hat = s.rand(xs);
  auto mlp = [x_hat](const Vs& v) {
    const CriticFn<double> critic = [&](const V& x) {
      const V h = sigmoid(fully_connected(flatten(x), v[0], v[1]));
      return fully_connected(h, v[2], v[3]);
    };
    return scale(gradient_penalty(critic, constant(x_hat)), 10.0);
  };
  s.run("gradient_penalty_mlp", mlp, {s.rand({5, 18}), s.rand({5}), s.rand({1, 5}, -2, 2), s.rand({1})});

  // Conv critic of the same shape as the real ones: stride-2 stem, leaky
  // relu, one residual unit, dense head.
  RngState rng(derive_seed(seed, 3));
  CriticConfig cc;
  cc.width = 3;
  cc.conditioned = true;
  const Critic<double> proto = Critic<double>::create(6, 1, cc, rng);
  const Shape img{2, 3, 6, 6};
  const D picto = s.rand(img);
  std::vector<D> inputs;
  for (const auto& p : proto.parameters()) inputs.push_back(p.var.value());
  const size_t n_params = inputs.size();
  const D real = s.rand(img), fake = s.rand(img), eps = s.rand({2}, 0.0, 1.0);
  auto conv_gp = [proto, picto, real, fake, eps, n_params](const Vs& v) {
    Critic<double> c = proto;
    bind_parameters(c, Vs(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_params)));
    const V p = constant(picto);
    const CriticFn<double> critic = [&](const V& x) { return c.forward(x, p); };
    return critic_loss(critic, constant(real), constant(fake), 10.0, eps).total;
  };
  s.run("critic_loss_conv", conv_gp, inputs);
}

void generator_suite(Suite& s, uint64_t seed) {
  GeneratorConfig cfg;
  cfg.resolution = 16;
  cfg.base_width = 4;
  cfg.scales = 2;
  const Generator<double> proto = Generator<double>::create(cfg, derive_seed(seed, 4));
  const Shape img{1, 3, 16, 16};
  const D x = s.rand(img), pa = s.rand(img), pb = s.rand(img);
  std::vector<D> inputs;
  for (const auto& p : proto.parameters()) inputs.push_back(p.var.value());
  const size_t n_params = inputs.size();
  inputs.push_back(x);

  // Multi-scale outputs plus the cycle reconstruction, projected on fixed
  // directions.
  RngState dirs(derive_seed(seed, 5));
  const V d8 = constant(random_tensor({1, 3, 8, 8}, dirs));
  const V d16 = constant(random_tensor(img, dirs));
  auto fn = [proto, pa, pb, n_params, d8, d16](const Vs& v) {
    Generator<double> g = proto;
    bind_parameters(g, Vs(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_params)));
    const V image = v[n_params];
    const auto out = generator_forward(image, constant(pb), g);
    const V rec = generator_forward(out.full(), constant(pa), g).full();
    return add(add(sum(mul(out.images[0], d8)), sum(mul(out.images[1], d16))), cycle_loss(image, rec));
  };
  s.run("tiny_generator_end_to_end", fn, inputs, 24);
}

}  // namespace

GradcheckScope parse_gradcheck_scope(const std::string& name) {
  if (name == "ops") return GradcheckScope::ops;
  if (name == "blocks") return GradcheckScope::blocks;
  if (name == "gp") return GradcheckScope::gp;
  if (name == "generator") return GradcheckScope::generator;
  throw std::invalid_argument("unknown gradcheck scope '" + name + "' (expected ops, blocks, gp or generator)");
}

std::string to_string(GradcheckScope scope) {
  switch (scope) {
    case GradcheckScope::ops: return "ops";
    case GradcheckScope::blocks: return "blocks";
    case GradcheckScope::gp: return "gp";
    case GradcheckScope::generator: return "generator";
  }
  return "?";
}

double gradcheck_tolerance(GradcheckScope scope) {
  return scope == GradcheckScope::ops || scope == GradcheckScope::blocks ? 1e-5 : 1e-4;
}

std::vector<GradcheckResult> run_gradcheck_suite(GradcheckScope scope, uint64_t seed) {
  Suite s(seed, gradcheck_tolerance(scope));
  switch (scope) {
    case GradcheckScope::ops: ops_suite(s); break;
    case GradcheckScope::blocks: blocks_suite(s, seed); break;
    case GradcheckScope::gp: gp_suite(s, seed); break;
    case GradcheckScope::generator: generator_suite(s, seed); break;
  }
  return s.take();
}

}  // namespace dragan
