/*
 * Copyright 2026 The AdaCoF-CPP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adacof/synthnet.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "adacof/errors.hpp"
#include "adacof/nn.hpp"
#include "adacof/parallel.hpp"

namespace adacof {
namespace {

std::atomic<std::uint64_t> g_next_param_id{1};

constexpr std::array<Head, kHeadCount> kHeads{Head::weights_fwd, Head::alpha_fwd, Head::beta_fwd,
                                              Head::weights_bwd, Head::alpha_bwd, Head::beta_bwd,
                                              Head::occlusion};

std::string enc_name(int l, const char* what) { return "enc" + std::to_string(l) + "." + what; }
std::string dec_name(int l, const char* what) { return "dec" + std::to_string(l) + "." + what; }
std::string head_param(Head h, const char* layer, const char* what) {
  return "head." + std::string(head_name(h)) + "." + layer + "." + what;
}

bool is_weight_head(Head h) { return h == Head::weights_fwd || h == Head::weights_bwd; }

// Channels entering decoder level l: the upsampled deeper features plus the skip.
int dec_in_channels(const ModelConfig& c, int l) {
  const int deeper = (l == c.depth - 1) ? c.widths[c.depth - 1] : c.widths[l + 1];
  return deeper + c.widths[l];
}

int upsampled_channels(const ModelConfig& c, int l) {
  return (l == c.depth - 1) ? c.widths[c.depth - 1] : c.widths[l + 1];
}

}  // namespace

void ModelConfig::validate() const {
  if (kernel_size < 1) throw ConfigError("kernel size F must be >= 1");
  if (dilation < 0) throw ConfigError("dilation d must be >= 0");
  if (depth < 1 || depth > 8) throw ConfigError("depth must be in [1, 8]");
  if (widths.size() != static_cast<std::size_t>(depth)) {
    throw ConfigError("expected " + std::to_string(depth) + " channel widths, got " +
                      std::to_string(widths.size()));
  }
  for (int w : widths) {
    if (w <= 0) throw ConfigError("channel widths must be positive");
  }
  if (head_width <= 0) throw ConfigError("head width must be positive");
  if (frame_channels != 1 && frame_channels != 3) throw ConfigError("frames must have 1 or 3 channels");
}

std::string_view head_name(Head head) {
  switch (head) {
    case Head::weights_fwd: return "weights_fwd";
    case Head::alpha_fwd: return "alpha_fwd";
    case Head::beta_fwd: return "beta_fwd";
    case Head::weights_bwd: return "weights_bwd";
    case Head::alpha_bwd: return "alpha_bwd";
    case Head::beta_bwd: return "beta_bwd";
    case Head::occlusion: return "occlusion";
  }
  return "unknown";
}

std::size_t head_channels(const ModelConfig& config, Head head) {
  const int f = config.effective_kernel_size();
  switch (head) {
    case Head::weights_fwd:
    case Head::weights_bwd:
      return static_cast<std::size_t>(f) * f;
    case Head::occlusion:
      return 1;
    default:
      return offset_channels(config.warp_mode, f);
  }
}

template <typename T>
ParameterSet<T>::ParameterSet() : id_(g_next_param_id++) {}

template <typename T>
ParameterSet<T>::ParameterSet(const ParameterSet& other)
    : entries_(other.entries_), id_(g_next_param_id++) {}

template <typename T>
ParameterSet<T>::ParameterSet(ParameterSet&& other) noexcept
    : entries_(std::move(other.entries_)), id_(other.id_), revision_(other.revision_) {
  other.id_ = g_next_param_id++;
  other.revision_ = 0;
}

template <typename T>
ParameterSet<T>& ParameterSet<T>::operator=(const ParameterSet& other) {
  if (this != &other) {
    entries_ = other.entries_;
    ++revision_;
  }
  return *this;
}

template <typename T>
ParameterSet<T>& ParameterSet<T>::operator=(ParameterSet&& other) noexcept {
  if (this != &other) {
    entries_ = std::move(other.entries_);
    ++revision_;
    other.entries_.clear();
    ++other.revision_;
  }
  return *this;
}

template <typename T>
void ParameterSet<T>::add(std::string name, BasicTensor<T> value) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ConfigError("duplicate parameter name " + name);
  }
  entries_.push_back({std::move(name), std::move(value)});
  ++revision_;
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <typename T>
BasicTensor<T>& ParameterSet<T>::mutable_value(std::size_t i) {
  ++revision_;
  return entries_.at(i).value;
}

template <typename T>
std::size_t ParameterSet<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw ConfigError("no parameter named " + std::string(name));
}

template <typename T>
const BasicTensor<T>& ParameterSet<T>::get(std::string_view name) const {
  return entries_[index_of(name)].value;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::zeros_like() const {
  ParameterSet out;
  for (const auto& e : entries_) out.add(e.name, BasicTensor<T>(e.value.shape()));
  return out;
}

template <typename T>
bool ParameterSet<T>::congruent_with(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].value.shape() != other.entries_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

template <typename T>
void ParameterSet<T>::accumulate(const ParameterSet& other) {
  if (!congruent_with(other)) throw ConfigError("accumulate: parameter sets are not congruent");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].value += other.entries_[i].value;
  ++revision_;
}

template <typename T>
void ParameterSet<T>::scale(T factor) {
  for (auto& e : entries_) e.value *= factor;
  ++revision_;
}

template <typename T>
ParameterSet<T> init_parameters(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ParameterSet<T> params;
  auto conv = [&](const std::string& prefix, int in, int out, bool zero) {
    const auto fan_in = static_cast<double>(in * 9);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    BasicTensor<T> w({static_cast<std::size_t>(out), static_cast<std::size_t>(in), 3, 3});
    if (!zero) {
      for (auto& v : w.values()) v = static_cast<T>(normal(rng));
    }
    params.add(prefix + ".weight", std::move(w));
    params.add(prefix + ".bias", BasicTensor<T>({static_cast<std::size_t>(out)}));
  };

  int in = 2 * config.frame_channels;
  for (int l = 0; l < config.depth; ++l) {
    conv("enc" + std::to_string(l), in, config.widths[l], false);
    in = config.widths[l];
  }
  conv("bottleneck", config.widths[config.depth - 1], config.widths[config.depth - 1], false);
  for (int l = config.depth - 1; l >= 0; --l) {
    conv("dec" + std::to_string(l), dec_in_channels(config, l), config.widths[l], false);
  }
  for (Head h : kHeads) {
    const std::string prefix = "head." + std::string(head_name(h));
    conv(prefix + ".hidden", config.widths[0], config.head_width, false);
    conv(prefix + ".out", config.head_width, static_cast<int>(head_channels(config, h)), true);
  }
  return params;
}

template <typename T>
BasicTensor<T> stack_frames(const BasicTensor<T>& first, const BasicTensor<T>& second) {
  require_same_shape(first.shape(), second.shape(), "stack_frames");
  return nn::concat_channels(first, second);
}

template <typename T>
ModelOutput<T> model_forward(const ParameterSet<T>& params, const ModelConfig& config,
                             const BasicTensor<T>& frames, Tape<T>* tape) {
  config.validate();
  if (frames.rank() != 3 || frames.dim(0) != static_cast<std::size_t>(2 * config.frame_channels)) {
    throw ConfigError("model input must be 2C×H×W with C=" + std::to_string(config.frame_channels) +
                      ", got " + shape_to_string(frames.shape()));
  }
  const std::size_t h = frames.dim(1);
  const std::size_t w = frames.dim(2);
  const std::size_t m = config.size_multiple();
  if (h == 0 || w == 0 || h % m != 0 || w % m != 0) {
    throw ConfigError("input " + std::to_string(h) + "x" + std::to_string(w) +
                      " is not divisible by 2^depth = " + std::to_string(m));
  }

  Tape<T> local;
  Tape<T>& t = tape ? *tape : local;
  t = Tape<T>{};
  t.params_id = params.id();
  t.params_revision = params.revision();
  t.config = config;
  t.input_shape = frames.shape();
  const auto depth = static_cast<std::size_t>(config.depth);
  t.enc_in.resize(depth);
  t.enc_pre.resize(depth);
  t.skips.resize(depth);
  t.dec_up_shape.resize(depth);
  t.dec_in.resize(depth);
  t.dec_pre.resize(depth);

  BasicTensor<T> x = frames;
  for (int l = 0; l < config.depth; ++l) {
    auto pre = nn::conv2d(x, params.get(enc_name(l, "weight")), params.get(enc_name(l, "bias")));
    auto act = nn::relu(pre);
    t.enc_in[l] = std::move(x);
    t.enc_pre[l] = std::move(pre);
    x = nn::avg_pool2(act);
    t.skips[l] = std::move(act);
  }
  t.bottleneck_pre = nn::conv2d(x, params.get("bottleneck.weight"), params.get("bottleneck.bias"));
  t.bottleneck_in = std::move(x);
  BasicTensor<T> y = nn::relu(t.bottleneck_pre);
  for (int l = config.depth - 1; l >= 0; --l) {
    t.dec_up_shape[l] = y.shape();
    auto cat = nn::concat_channels(nn::upsample2(y), t.skips[l]);
    t.dec_pre[l] = nn::conv2d(cat, params.get(dec_name(l, "weight")), params.get(dec_name(l, "bias")));
    t.dec_in[l] = std::move(cat);
    y = nn::relu(t.dec_pre[l]);
  }
  t.features = std::move(y);

  parallel_for(0, kHeadCount, [&](std::size_t i) {
    const Head head = kHeads[i];
    t.head_pre[i] = nn::conv2d(t.features, params.get(head_param(head, "hidden", "weight")),
                               params.get(head_param(head, "hidden", "bias")));
    t.head_hidden[i] = nn::relu(t.head_pre[i]);
    auto z = nn::conv2d(t.head_hidden[i], params.get(head_param(head, "out", "weight")),
                        params.get(head_param(head, "out", "bias")));
    if (is_weight_head(head)) {
      t.head_out[i] = nn::softmax_channels(z);
    } else if (head == Head::occlusion) {
      t.head_out[i] = nn::sigmoid(z);
    } else {
      t.head_out[i] = std::move(z);
    }
  });

  const int f = config.effective_kernel_size();
  auto out_of = [&](Head head) -> const BasicTensor<T>& { return t.head_out[static_cast<std::size_t>(head)]; };
  ModelOutput<T>& out = t.output;
  out.raw_fwd = RawHeads<T>{out_of(Head::weights_fwd), out_of(Head::alpha_fwd), out_of(Head::beta_fwd), f, config.dilation};
  out.raw_bwd = RawHeads<T>{out_of(Head::weights_bwd), out_of(Head::alpha_bwd), out_of(Head::beta_bwd), f, config.dilation};
  out.fwd = make_mode_params(config.warp_mode, out.raw_fwd);
  out.bwd = make_mode_params(config.warp_mode, out.raw_bwd);
  out.occlusion = OcclusionMap<T>{out_of(Head::occlusion)};
  t.valid = true;
  return t.output;
}

template <typename T>
ParameterSet<T> model_backward(const Tape<T>& tape, const ParameterSet<T>& params,
                               const OutputGrads<T>& upstream) {
  if (!tape.valid) throw UsageError("model_backward: tape was never recorded");
  if (tape.params_id != params.id() || tape.params_revision != params.revision()) {
    throw UsageError("model_backward: tape was recorded against different or since-modified parameters");
  }
  const ModelConfig& config = tape.config;
  const auto& out = tape.output;
  const RawHeads<T> raw_fwd = make_mode_params_vjp(config.warp_mode, out.raw_fwd, upstream.fwd);
  const RawHeads<T> raw_bwd = make_mode_params_vjp(config.warp_mode, out.raw_bwd, upstream.bwd);

  std::array<BasicTensor<T>, kHeadCount> dz;
  dz[0] = nn::softmax_channels_vjp(tape.head_out[0], raw_fwd.weights);
  dz[1] = raw_fwd.alpha;
  dz[2] = raw_fwd.beta;
  dz[3] = nn::softmax_channels_vjp(tape.head_out[3], raw_bwd.weights);
  dz[4] = raw_bwd.alpha;
  dz[5] = raw_bwd.beta;
  if (upstream.occlusion.empty()) {
    dz[6] = BasicTensor<T>(tape.head_out[6].shape());
  } else {
    require_same_shape(upstream.occlusion.shape(), tape.head_out[6].shape(), "occlusion gradient");
    dz[6] = nn::sigmoid_vjp(tape.head_out[6], upstream.occlusion);
  }

  ParameterSet<T> grads = params.zeros_like();
  auto set = [&](const std::string& name, BasicTensor<T> g) {
    grads.mutable_value(grads.index_of(name)) = std::move(g);
  };

  struct HeadGrads {
    BasicTensor<T> hidden_w, hidden_b, out_w, out_b, features;
  };
  std::array<HeadGrads, kHeadCount> hg;
  parallel_for(0, kHeadCount, [&](std::size_t i) {
    const Head head = kHeads[i];
    auto g_out = nn::conv2d_vjp(tape.head_hidden[i], params.get(head_param(head, "out", "weight")), dz[i]);
    auto d_pre = nn::relu_vjp(tape.head_pre[i], g_out.input);
    auto g_hidden = nn::conv2d_vjp(tape.features, params.get(head_param(head, "hidden", "weight")), d_pre);
    hg[i] = {std::move(g_hidden.weight), std::move(g_hidden.bias), std::move(g_out.weight),
             std::move(g_out.bias), std::move(g_hidden.input)};
  });

  BasicTensor<T> dy(tape.features.shape());
  for (std::size_t i = 0; i < kHeadCount; ++i) {
    const Head head = kHeads[i];
    set(head_param(head, "hidden", "weight"), std::move(hg[i].hidden_w));
    set(head_param(head, "hidden", "bias"), std::move(hg[i].hidden_b));
    set(head_param(head, "out", "weight"), std::move(hg[i].out_w));
    set(head_param(head, "out", "bias"), std::move(hg[i].out_b));
    dy += hg[i].features;
  }

  std::vector<BasicTensor<T>> d_skip(static_cast<std::size_t>(config.depth));
  for (int l = 0; l < config.depth; ++l) {
    auto d_pre = nn::relu_vjp(tape.dec_pre[l], dy);
    auto g = nn::conv2d_vjp(tape.dec_in[l], params.get(dec_name(l, "weight")), d_pre);
    set(dec_name(l, "weight"), std::move(g.weight));
    set(dec_name(l, "bias"), std::move(g.bias));
    auto [d_up, d_sk] = nn::split_channels(g.input, static_cast<std::size_t>(upsampled_channels(config, l)));
    d_skip[l] = std::move(d_sk);
    dy = nn::upsample2_vjp(tape.dec_up_shape[l], d_up);
  }

  {
    auto d_pre = nn::relu_vjp(tape.bottleneck_pre, dy);
    auto g = nn::conv2d_vjp(tape.bottleneck_in, params.get("bottleneck.weight"), d_pre);
    set("bottleneck.weight", std::move(g.weight));
    set("bottleneck.bias", std::move(g.bias));
    dy = std::move(g.input);
  }

  for (int l = config.depth - 1; l >= 0; --l) {
    auto d_act = nn::avg_pool2_vjp(tape.skips[l].shape(), dy);
    d_act += d_skip[l];
    auto d_pre = nn::relu_vjp(tape.enc_pre[l], d_act);
    auto g = nn::conv2d_vjp(tape.enc_in[l], params.get(enc_name(l, "weight")), d_pre, l > 0);
    set(enc_name(l, "weight"), std::move(g.weight));
    set(enc_name(l, "bias"), std::move(g.bias));
    dy = std::move(g.input);
  }
  return grads;
}

template <typename T>
Synthesis<T> synthesize(const ParameterSet<T>& params, const ModelConfig& config,
                        const BasicTensor<T>& first, const BasicTensor<T>& second,
                        SynthesisTape<T>* tape) {
  Synthesis<T> s;
  s.params = model_forward(params, config, stack_frames(first, second), tape ? &tape->model : nullptr);
  for (const auto* p : {&s.params.fwd, &s.params.bwd}) {
    if (!p->weights.all_finite() || !p->alpha.all_finite() || !p->beta.all_finite()) {
      throw NumericError("network produced non-finite warp parameters");
    }
  }
  if (!s.params.occlusion.values.all_finite()) throw NumericError("network produced a non-finite occlusion map");
  s.warped_first = forward_warp(first, s.params.fwd);
  s.warped_second = forward_warp(second, s.params.bwd);
  s.output = occlusion_blend(s.warped_first, s.warped_second, s.params.occlusion, config.use_occlusion);
  if (tape) {
    tape->first = first;
    tape->second = second;
    tape->result = s;
  }
  return s;
}

template <typename T>
ParameterSet<T> synthesize_backward(const SynthesisTape<T>& tape, const ParameterSet<T>& params,
                                    const BasicTensor<T>& grad_output) {
  if (!tape.model.valid) throw UsageError("synthesize_backward: tape was never recorded");
  const auto& r = tape.result;
  const bool occ = tape.model.config.use_occlusion;
  auto gb = occlusion_blend_vjp(r.warped_first, r.warped_second, r.params.occlusion, grad_output, occ);
  OutputGrads<T> up;
  up.fwd = backward_warp_vjp(tape.first, r.params.fwd, gb.fwd, false);
  up.bwd = backward_warp_vjp(tape.second, r.params.bwd, gb.bwd, false);
  up.occlusion = std::move(gb.v);
  return model_backward(tape.model, params, up);
}

template <typename T>
ParameterSet<T> batch_backward(std::span<const SynthesisTape<T>> tapes, const ParameterSet<T>& params,
                               std::span<const BasicTensor<T>> grad_outputs) {
  if (tapes.size() != grad_outputs.size()) throw ConfigError("batch_backward: tape/gradient count mismatch");
  std::vector<ParameterSet<T>> per_sample(tapes.size());
  parallel_for(0, tapes.size(), [&](std::size_t i) {
    per_sample[i] = synthesize_backward(tapes[i], params, grad_outputs[i]);
  });
  ParameterSet<T> total = params.zeros_like();
  for (const auto& g : per_sample) total.accumulate(g);
  return total;
}

#define ADACOF_INSTANTIATE_NET(T)                                                                 \
  template class ParameterSet<T>;                                                                 \
  template ParameterSet<T> init_parameters<T>(const ModelConfig&);                                \
  template BasicTensor<T> stack_frames(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template ModelOutput<T> model_forward(const ParameterSet<T>&, const ModelConfig&,               \
                                        const BasicTensor<T>&, Tape<T>*);                         \
  template ParameterSet<T> model_backward(const Tape<T>&, const ParameterSet<T>&,                 \
                                          const OutputGrads<T>&);                                 \
  template Synthesis<T> synthesize(const ParameterSet<T>&, const ModelConfig&,                    \
                                   const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                   SynthesisTape<T>*);                                            \
  template ParameterSet<T> synthesize_backward(const SynthesisTape<T>&, const ParameterSet<T>&,   \
                                               const BasicTensor<T>&);                            \
  template ParameterSet<T> batch_backward(std::span<const SynthesisTape<T>>,                      \
                                          const ParameterSet<T>&,                                 \
                                          std::span<const BasicTensor<T>>);

ADACOF_INSTANTIATE_NET(float)
ADACOF_INSTANTIATE_NET(double)

#undef ADACOF_INSTANTIATE_NET

}  // namespace adacof
