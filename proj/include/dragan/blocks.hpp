#pragma once

// Reusable network blocks: convolution layers, residual units and the Dense
// Residual Attention fusion (dense concatenation + 1x1 reduction, followed
// by parameter-free sigmoid gating), plus per-scale pictogram attachment.

#include <string>
#include <vector>

#include "dragan/ops.hpp"
#include "dragan/rng.hpp"

namespace dragan {

template <typename T>
struct NamedParameter {
  std::string name;
  Var<T> var;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

enum class Activation { relu, leaky_relu };

template <typename T>
Var<T> activate(const Var<T>& x, Activation act) {
  return act == Activation::relu ? relu(x) : leaky_relu(x, T(0.2));
}

template <typename T>
struct ConvLayer {
  Var<T> weight;  // [Cout, Cin, k, k]
  Var<T> bias;    // [Cout]
  int stride = 1;
  int padding = 1;

  /// He-uniform weights scaled by `gain`; zero bias.
  static ConvLayer create(int64_t cin, int64_t cout, int kernel, int stride, RngState& rng, double gain = 1.0);

  int64_t in_channels() const { return weight.shape()[1]; }
  int64_t out_channels() const { return weight.shape()[0]; }
  Var<T> forward(const Var<T>& x) const { return conv2d(x, weight, stride, padding, bias); }
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  /// f(name, Var<T>&) over the parameters in census order.
  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

/// x + conv2(act(conv1(x))), both convs 3x3 / stride 1 / same padding.
template <typename T>
struct ResidualUnit {
  ConvLayer<T> conv1;
  ConvLayer<T> conv2;
  Activation act = Activation::relu;

  static ResidualUnit create(int64_t channels, Activation act, RngState& rng);
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  template <class F>
  void visit(const std::string& prefix, F&& f) {
    conv1.visit(prefix + ".conv1", f);
    conv2.visit(prefix + ".conv2", f);
  }
};

/// The only trainable part of a DRA module: a 1x1 conv mapping Cd + Ce
/// channels down to Ce.
template <typename T>
struct DraModule {
  ConvLayer<T> reduce;

  static DraModule create(int64_t decoder_channels, int64_t encoder_channels, RngState& rng);
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  template <class F>
  void visit(const std::string& prefix, F&& f) {
    reduce.visit(prefix + ".reduce", f);
  }
};

template <typename T>
Var<T> residual_unit_forward(const Var<T>& x, const ResidualUnit<T>& unit);

/// F_c = conv1x1([F_d, F_e]); output has the encoder's channel count.
template <typename T>
Var<T> dense_fuse(const Var<T>& decoder_features, const Var<T>& encoder_features, const DraModule<T>& dra);

/// F_a = F_c + sigmoid(F_e) * F_c. No parameters.
template <typename T>
Var<T> residual_attention(const Var<T>& fused, const Var<T>& encoder_features);

/// [F_a, p] with p bilinearly resized to F_a's spatial size (identity at
/// full resolution).
template <typename T>
Var<T> attach_pictogram(const Var<T>& features, const Var<T>& pictogram);

template <typename T>
int64_t parameter_count(const ParameterList<T>& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.var.numel();
  return n;
}

}  // namespace dragan
