#pragma once

// Encoder-decoder generator with one DRA module and one auxiliary output
// head per scale, and the per-scale critics that judge those outputs.
//
// Scales are indexed by level: level 0 is full resolution, level l has
// resolution >> l. Generator outputs and critic stacks are ordered from the
// coarsest level to the finest (20, 40, 80 for the default config).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dragan/blocks.hpp"

namespace dragan {

struct GeneratorConfig {
  int resolution = 80;
  int base_width = 32;
  int scales = 3;
  bool dra_enabled = true;
  bool multiscale_enabled = true;
  bool pictogram_concat_enabled = true;

  /// Spatial size at a level (0 = full resolution).
  int size_at(int level) const { return resolution >> level; }
  int64_t channels_at(int level) const { return static_cast<int64_t>(base_width) << level; }
  /// Throws std::invalid_argument if the resolution is not divisible by 2^(scales-1).
  void validate() const;
};

struct CriticConfig {
  int width = 32;
  /// Critics also see the target pictogram (resized to their scale) as three
  /// extra input channels.
  bool conditioned = true;
};

template <typename T>
struct Generator {
  GeneratorConfig config;
  ConvLayer<T> stem;                       // [x, p] (6 ch) -> C_0 at level 0
  std::vector<ConvLayer<T>> down;          // index l-1: C_{l-1} -> C_l, stride 2
  std::vector<ResidualUnit<T>> enc_res;    // per level
  std::vector<ConvLayer<T>> up;            // index l: into C_l after 2x upsampling (l < scales-1)
  std::vector<ResidualUnit<T>> dec_res;    // per level
  std::vector<DraModule<T>> dra;           // per level; empty when DRA is disabled
  std::vector<ConvLayer<T>> heads;         // per level, -> 3 channels (tanh)

  static Generator create(const GeneratorConfig& config, uint64_t seed);
  ParameterList<T> parameters() const;

  /// f(name, Var<T>&) over every parameter, in census order.
  template <class F>
  void visit(F&& f) {
    const int s = config.scales;
    auto tag = [this](int l) { return std::to_string(config.size_at(l)); };
    stem.visit("G.enc" + tag(0) + ".stem", f);
    for (int l = 0; l < s; ++l) {
      if (l > 0) down[static_cast<size_t>(l - 1)].visit("G.enc" + tag(l) + ".down", f);
      enc_res[static_cast<size_t>(l)].visit("G.enc" + tag(l) + ".res", f);
    }
    for (int l = s - 1; l >= 0; --l) {
      const auto li = static_cast<size_t>(l);
      if (l < s - 1) up[li].visit("G.dec" + tag(l) + ".up", f);
      dec_res[li].visit("G.dec" + tag(l) + ".res", f);
      if (config.dra_enabled) dra[li].visit("G.dec" + tag(l) + ".dra", f);
      heads[li].visit("G.dec" + tag(l) + ".head", f);
    }
  }
};

template <typename T>
struct GeneratorOutput {
  std::vector<Var<T>> images;  // coarsest first
  const Var<T>& full() const { return images.back(); }
};

template <typename T>
struct Critic {
  int input_size = 0;
  bool conditioned = false;
  ConvLayer<T> stem;  // stride 2
  std::vector<ResidualUnit<T>> units;
  Var<T> fc_weight;   // [1, D]
  Var<T> fc_bias;     // [1]

  static Critic create(int input_size, int residual_units, const CriticConfig& config, RngState& rng);
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  ParameterList<T> parameters() const;
  template <class F>
  void visit(const std::string& prefix, F&& f) {
    stem.visit(prefix + ".stem", f);
    for (size_t i = 0; i < units.size(); ++i) units[i].visit(prefix + ".res" + std::to_string(i), f);
    f(prefix + ".fc.weight", fc_weight);
    f(prefix + ".fc.bias", fc_bias);
  }
  template <class F>
  void visit(F&& f) {
    visit("D" + std::to_string(input_size), f);
  }
  /// Unbounded score per sample, [N, 1]. `pictogram` is required when conditioned.
  Var<T> forward(const Var<T>& images, const Var<T>& pictogram = {}) const;
};

template <typename T>
struct CriticStack {
  std::vector<Critic<T>> critics;  // coarsest first, one per generator scale

  static CriticStack create(const GeneratorConfig& gen, const CriticConfig& config, uint64_t seed);
  const Critic<T>& at_size(int size) const;
  Critic<T>& at_size(int size);
  ParameterList<T> parameters() const;
  template <class F>
  void visit(F&& f) {
    for (auto& c : critics) c.visit("D" + std::to_string(c.input_size), f);
  }
};

/// Replaces a model's parameter handles, in census order, with `vars`.
/// Used to differentiate a model with respect to externally owned leaves.
template <typename T, class Model>
void bind_parameters(Model& model, const std::vector<Var<T>>& vars) {
  size_t i = 0;
  model.visit([&](const std::string& name, Var<T>& slot) {
    if (i >= vars.size() || vars[i].shape() != slot.shape()) {
      throw std::invalid_argument("bind_parameters: mismatch at " + name);
    }
    slot = vars[i++];
  });
  if (i != vars.size()) throw std::invalid_argument("bind_parameters: too many values");
}

/// Residual-unit count for the critic at `level` of a `scales`-level model:
/// the finest scale gets the deepest critic.
inline int critic_depth(int level, int scales) { return scales - level; }

template <typename T>
GeneratorOutput<T> generator_forward(const Var<T>& image, const Var<T>& pictogram, const Generator<T>& g);

template <typename T>
Var<T> critic_forward(const Var<T>& image, const CriticStack<T>& stack, int size, const Var<T>& pictogram = {});

/// G(G(x | p_b) | p_a) at full resolution, with one parameter set serving both passes.
template <typename T>
Var<T> cycle_map(const Var<T>& image, const Var<T>& pictogram_a, const Var<T>& pictogram_b, const Generator<T>& g);

using Census = std::vector<std::pair<std::string, Shape>>;

template <typename T>
Census parameter_census(const ParameterList<T>& params) {
  Census c;
  c.reserve(params.size());
  for (const auto& p : params) c.emplace_back(p.name, p.var.shape());
  return c;
}

int64_t census_total(const Census& census);

}  // namespace dragan
