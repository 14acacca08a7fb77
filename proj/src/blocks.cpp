#include "dragan/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace dragan {

template <typename T>
ConvLayer<T> ConvLayer<T>::create(int64_t cin, int64_t cout, int kernel, int stride, RngState& rng, double gain) {
  const int64_t fan_in = cin * kernel * kernel;
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor<T> w({cout, cin, kernel, kernel});
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  ConvLayer layer;
  layer.weight = Var<T>(std::move(w), true);
  layer.bias = Var<T>(Tensor<T>::zeros({cout}), true);
  layer.stride = stride;
  layer.padding = kernel == 3 ? 1 : 0;
  return layer;
}

template <typename T>
void ConvLayer<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
ResidualUnit<T> ResidualUnit<T>::create(int64_t channels, Activation act, RngState& rng) {
  ResidualUnit u;
  u.conv1 = ConvLayer<T>::create(channels, channels, 3, 1, rng);
  // The residual branch starts small so a fresh unit is close to identity.
  u.conv2 = ConvLayer<T>::create(channels, channels, 3, 1, rng, 0.1);
  u.act = act;
  return u;
}

template <typename T>
void ResidualUnit<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

template <typename T>
DraModule<T> DraModule<T>::create(int64_t decoder_channels, int64_t encoder_channels, RngState& rng) {
  DraModule m;
  m.reduce = ConvLayer<T>::create(decoder_channels + encoder_channels, encoder_channels, 1, 1, rng);
  return m;
}

template <typename T>
void DraModule<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  reduce.collect(prefix + ".reduce", out);
}

template <typename T>
Var<T> residual_unit_forward(const Var<T>& x, const ResidualUnit<T>& unit) {
  if (x.value().rank() != 4 || x.shape()[1] != unit.conv1.in_channels()) {
    throw std::invalid_argument("residual unit expects " + std::to_string(unit.conv1.in_channels()) +
                                " channels, got " + shape_str(x.shape()));
  }
  return add(x, unit.conv2.forward(activate(unit.conv1.forward(x), unit.act)));
}

template <typename T>
Var<T> dense_fuse(const Var<T>& decoder_features, const Var<T>& encoder_features, const DraModule<T>& dra) {
  const int64_t cd = decoder_features.shape().at(1), ce = encoder_features.shape().at(1);
  if (dra.reduce.in_channels() != cd + ce || dra.reduce.out_channels() != ce) {
    throw std::invalid_argument("dense_fuse: module maps " + std::to_string(dra.reduce.in_channels()) + "->" +
                                std::to_string(dra.reduce.out_channels()) + " channels but inputs give Cd=" +
                                std::to_string(cd) + ", Ce=" + std::to_string(ce));
  }
  return dra.reduce.forward(concat_channels(decoder_features, encoder_features));
}

template <typename T>
Var<T> residual_attention(const Var<T>& fused, const Var<T>& encoder_features) {
  if (fused.shape() != encoder_features.shape()) {
    throw std::invalid_argument("residual_attention: shape mismatch " + shape_str(fused.shape()) + " vs " +
                                shape_str(encoder_features.shape()));
  }
  return add(fused, mul(sigmoid(encoder_features), fused));
}

template <typename T>
Var<T> attach_pictogram(const Var<T>& features, const Var<T>& pictogram) {
  if (features.value().rank() != 4 || pictogram.value().rank() != 4 ||
      features.shape()[0] != pictogram.shape()[0]) {
    throw std::invalid_argument("attach_pictogram: incompatible shapes " + shape_str(features.shape()) + " and " +
                                shape_str(pictogram.shape()));
  }
  const int64_t h = features.shape()[2], w = features.shape()[3];
  const Var<T> p = (pictogram.shape()[2] == h && pictogram.shape()[3] == w) ? pictogram
                                                                           : resize_bilinear(pictogram, h, w);
  return concat_channels(features, p);
}

#define DRAGAN_BLOCKS(T)                                                                   \
  template struct ConvLayer<T>;                                                            \
  template struct ResidualUnit<T>;                                                         \
  template struct DraModule<T>;                                                            \
  template Var<T> residual_unit_forward<T>(const Var<T>&, const ResidualUnit<T>&);         \
  template Var<T> dense_fuse<T>(const Var<T>&, const Var<T>&, const DraModule<T>&);        \
  template Var<T> residual_attention<T>(const Var<T>&, const Var<T>&);                     \
  template Var<T> attach_pictogram<T>(const Var<T>&, const Var<T>&);

DRAGAN_BLOCKS(float)
DRAGAN_BLOCKS(double)

}  // namespace dragan
