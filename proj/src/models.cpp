#include "dragan/models.hpp"

#include <cmath>
#include <stdexcept>

namespace dragan {

void GeneratorConfig::validate() const {
  if (scales < 1 || scales > 6) throw std::invalid_argument("scales must be in [1, 6]");
  if (base_width < 1) throw std::invalid_argument("base_width must be positive");
  if (resolution < (1 << scales) || resolution % (1 << (scales - 1)) != 0) {
    throw std::invalid_argument("resolution " + std::to_string(resolution) + " is not divisible by 2^(scales-1)");
  }
}

int64_t census_total(const Census& census) {
  int64_t n = 0;
  for (const auto& [name, shape] : census) n += shape_numel(shape);
  return n;
}

// Generator ------------------------------------------------------------------

template <typename T>
Generator<T> Generator<T>::create(const GeneratorConfig& config, uint64_t seed) {
  config.validate();
  RngState rng(derive_seed(seed, 0x6E6));
  Generator g;
  g.config = config;
  const int s = config.scales;
  const int64_t picto = config.pictogram_concat_enabled ? 3 : 0;

  g.stem = ConvLayer<T>::create(6, config.channels_at(0), 3, 1, rng);
  for (int l = 0; l < s; ++l) {
    if (l > 0) g.down.push_back(ConvLayer<T>::create(config.channels_at(l - 1), config.channels_at(l), 3, 2, rng));
    g.enc_res.push_back(ResidualUnit<T>::create(config.channels_at(l), Activation::relu, rng));
  }
  g.up.resize(static_cast<size_t>(s));
  g.dec_res.resize(static_cast<size_t>(s));
  g.heads.resize(static_cast<size_t>(s));
  if (config.dra_enabled) g.dra.resize(static_cast<size_t>(s));
  // Decoder runs coarse to fine; build in that order so the parameter
  // stream follows the data flow.
  for (int l = s - 1; l >= 0; --l) {
    const int64_t c = config.channels_at(l);
    const auto li = static_cast<size_t>(l);
    if (l < s - 1) g.up[li] = ConvLayer<T>::create(config.channels_at(l + 1) + picto, c, 3, 1, rng);
    g.dec_res[li] = ResidualUnit<T>::create(c, Activation::relu, rng);
    if (config.dra_enabled) g.dra[li] = DraModule<T>::create(c, c, rng);
    g.heads[li] = ConvLayer<T>::create(c + picto, 3, 3, 1, rng, 0.5);
  }
  return g;
}

template <typename T>
ParameterList<T> Generator<T>::parameters() const {
  ParameterList<T> out;
  const_cast<Generator&>(*this).visit([&](const std::string& name, Var<T>& v) { out.push_back({name, v}); });
  return out;
}

template <typename T>
GeneratorOutput<T> generator_forward(const Var<T>& image, const Var<T>& pictogram, const Generator<T>& g) {
  const GeneratorConfig& cfg = g.config;
  const Shape expect{image.shape().empty() ? 0 : image.shape()[0], 3, cfg.resolution, cfg.resolution};
  if (image.shape() != expect || pictogram.shape() != expect) {
    throw std::invalid_argument("generator expects image and pictogram of shape [N,3," +
                                std::to_string(cfg.resolution) + "," + std::to_string(cfg.resolution) + "], got " +
                                shape_str(image.shape()) + " and " + shape_str(pictogram.shape()));
  }
  const int s = cfg.scales;
  std::vector<Var<T>> enc(static_cast<size_t>(s));
  Var<T> h = relu(g.stem.forward(concat_channels(image, pictogram)));
  for (int l = 0; l < s; ++l) {
    if (l > 0) h = relu(g.down[static_cast<size_t>(l - 1)].forward(h));
    h = residual_unit_forward(h, g.enc_res[static_cast<size_t>(l)]);
    enc[static_cast<size_t>(l)] = h;
  }

  GeneratorOutput<T> out;
  Var<T> prev;
  for (int l = s - 1; l >= 0; --l) {
    const auto li = static_cast<size_t>(l);
    Var<T> dec;
    if (l == s - 1) {
      dec = residual_unit_forward(enc[li], g.dec_res[li]);
    } else {
      const int size = cfg.size_at(l);
      Var<T> upsampled = resize_bilinear(prev, size, size);
      dec = residual_unit_forward(relu(g.up[li].forward(upsampled)), g.dec_res[li]);
    }
    Var<T> features = dec;
    if (cfg.dra_enabled) {
      features = residual_attention(dense_fuse(dec, enc[li], g.dra[li]), enc[li]);
    }
    if (cfg.pictogram_concat_enabled) features = attach_pictogram(features, pictogram);
    out.images.push_back(tanh(g.heads[li].forward(features)));
    prev = features;
  }
  return out;
}

template <typename T>
Var<T> cycle_map(const Var<T>& image, const Var<T>& pictogram_a, const Var<T>& pictogram_b, const Generator<T>& g) {
  const Var<T> transferred = generator_forward(image, pictogram_b, g).full();
  return generator_forward(transferred, pictogram_a, g).full();
}

// Critics --------------------------------------------------------------------

template <typename T>
Critic<T> Critic<T>::create(int input_size, int residual_units, const CriticConfig& config, RngState& rng) {
  if (input_size < 2 || input_size % 2 != 0) throw std::invalid_argument("critic input size must be even");
  Critic c;
  c.input_size = input_size;
  c.conditioned = config.conditioned;
  const int64_t in_ch = config.conditioned ? 6 : 3;
  c.stem = ConvLayer<T>::create(in_ch, config.width, 3, 2, rng);
  for (int i = 0; i < residual_units; ++i) {
    c.units.push_back(ResidualUnit<T>::create(config.width, Activation::leaky_relu, rng));
  }
  const int64_t half = input_size / 2;
  const int64_t d = static_cast<int64_t>(config.width) * half * half;
  Tensor<T> w({1, d});
  const double bound = std::sqrt(3.0 / static_cast<double>(d));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  c.fc_weight = Var<T>(std::move(w), true);
  c.fc_bias = Var<T>(Tensor<T>::zeros({1}), true);
  return c;
}

template <typename T>
void Critic<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  stem.collect(prefix + ".stem", out);
  for (size_t i = 0; i < units.size(); ++i) units[i].collect(prefix + ".res" + std::to_string(i), out);
  out.push_back({prefix + ".fc.weight", fc_weight});
  out.push_back({prefix + ".fc.bias", fc_bias});
}

template <typename T>
ParameterList<T> Critic<T>::parameters() const {
  ParameterList<T> out;
  collect("D" + std::to_string(input_size), out);
  return out;
}

template <typename T>
Var<T> Critic<T>::forward(const Var<T>& images, const Var<T>& pictogram) const {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != input_size || s[3] != input_size) {
    throw std::invalid_argument("critic at " + std::to_string(input_size) + "px got images " + shape_str(s));
  }
  Var<T> x = images;
  if (conditioned) {
    if (!pictogram.defined()) throw std::invalid_argument("conditioned critic needs the target pictogram");
    x = attach_pictogram(images, pictogram);
  }
  Var<T> h = leaky_relu(stem.forward(x), T(0.2));
  for (const auto& u : units) h = residual_unit_forward(h, u);
  return fully_connected(flatten(h), fc_weight, fc_bias);
}

template <typename T>
CriticStack<T> CriticStack<T>::create(const GeneratorConfig& gen, const CriticConfig& config, uint64_t seed) {
  gen.validate();
  CriticStack stack;
  for (int l = gen.scales - 1; l >= 0; --l) {
    RngState rng(derive_seed(seed, 0xD00 + static_cast<uint64_t>(l)));
    stack.critics.push_back(Critic<T>::create(gen.size_at(l), critic_depth(l, gen.scales), config, rng));
  }
  return stack;
}

template <typename T>
const Critic<T>& CriticStack<T>::at_size(int size) const {
  for (const auto& c : critics) {
    if (c.input_size == size) return c;
  }
  throw std::invalid_argument("no critic for scale " + std::to_string(size));
}

template <typename T>
Critic<T>& CriticStack<T>::at_size(int size) {
  return const_cast<Critic<T>&>(std::as_const(*this).at_size(size));
}

template <typename T>
ParameterList<T> CriticStack<T>::parameters() const {
  ParameterList<T> out;
  for (const auto& c : critics) c.collect("D" + std::to_string(c.input_size), out);
  return out;
}

template <typename T>
Var<T> critic_forward(const Var<T>& image, const CriticStack<T>& stack, int size, const Var<T>& pictogram) {
  return stack.at_size(size).forward(image, pictogram);
}

#define DRAGAN_MODELS(T)                                                                              \
  template struct Generator<T>;                                                                       \
  template struct Critic<T>;                                                                          \
  template struct CriticStack<T>;                                                                     \
  template GeneratorOutput<T> generator_forward<T>(const Var<T>&, const Var<T>&, const Generator<T>&); \
  template Var<T> critic_forward<T>(const Var<T>&, const CriticStack<T>&, int, const Var<T>&);         \
  template Var<T> cycle_map<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Generator<T>&);

DRAGAN_MODELS(float)
DRAGAN_MODELS(double)

}  // namespace dragan
