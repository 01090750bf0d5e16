// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_NN_KERNELS_HPP
#define GFTLATENT_NN_KERNELS_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/byte_io.hpp"
#include "gftlatent/error.hpp"
#include "gftlatent/gft.hpp"

namespace gftl {

/// M x D feature matrix (rows are points, columns channels).
using FeatureMatrix = Eigen::MatrixXd;

inline void check_features(const FeatureMatrix& f, const char* what) {
  if (f.rows() < 1 || f.cols() < 1) throw config_error(std::string(what) + " is empty");
  if (!f.allFinite()) throw numeric_error(std::string(what) + " has non-finite entries");
}

// ============================================================================
// Channel-wise attention
// ============================================================================

struct AttentionParams {
  Eigen::MatrixXd w_query;
  Eigen::MatrixXd w_key;
  Eigen::MatrixXd w_value;

  Eigen::Index channels() const noexcept { return w_query.rows(); }
};

struct AttentionGradients {
  Eigen::MatrixXd features;
  Eigen::MatrixXd w_query;
  Eigen::MatrixXd w_key;
  Eigen::MatrixXd w_value;
};

/// Softmax over the first index: every column of the result sums to 1.
inline Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    const double peak = scores.col(j).maxCoeff();
    out.col(j) = (scores.col(j).array() - peak).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

namespace detail {

struct AttentionTape {
  Eigen::MatrixXd q, k, v, a;
};

inline AttentionTape attention_tape(const FeatureMatrix& f, const AttentionParams& p) {
  check_features(f, "attention input");
  const Eigen::Index d = f.cols();
  for (const auto* w : {&p.w_query, &p.w_key, &p.w_value}) {
    if (w->rows() != d || w->cols() != d) {
      throw config_error("attention weights must be " + std::to_string(d) + "x" +
                         std::to_string(d));
    }
    if (!w->allFinite()) throw numeric_error("attention weights have non-finite entries");
  }
  AttentionTape t;
  t.q = f * p.w_query;
  t.k = f * p.w_key;
  t.v = f * p.w_value;
  t.a = column_softmax(t.k.transpose() * t.q);
  return t;
}

}  // namespace detail

/// Channel attention: Q, K, V = F W^Q, F W^K, F W^V; A = softmax(K^T Q)
/// column-wise; output V A. No 1/sqrt(d) scaling is applied to the scores.
inline FeatureMatrix channel_attention(const FeatureMatrix& f, const AttentionParams& p) {
  const auto t = detail::attention_tape(f, p);
  return t.v * t.a;
}

/// Attention output added element-wise to the caller's positionally embedded
/// features.
inline FeatureMatrix attention_fusion(const FeatureMatrix& f, const FeatureMatrix& embedded,
                                      const AttentionParams& p) {
  if (embedded.rows() != f.rows() || embedded.cols() != f.cols()) {
    throw config_error("embedded features must match the attention input shape");
  }
  return embedded + channel_attention(f, p);
}

/// Backward pass of channel_attention for upstream gradient dL/d(output).
inline AttentionGradients channel_attention_grad(const FeatureMatrix& f, const AttentionParams& p,
                                                 const Eigen::MatrixXd& upstream) {
  const auto t = detail::attention_tape(f, p);
  if (upstream.rows() != f.rows() || upstream.cols() != f.cols()) {
    throw config_error("upstream gradient shape does not match attention output");
  }
  const Eigen::MatrixXd d_v = upstream * t.a.transpose();
  const Eigen::MatrixXd d_a = t.v.transpose() * upstream;
  // Column softmax Jacobian: dS_j = A_j .* (dA_j - <A_j, dA_j>).
  Eigen::MatrixXd d_s(t.a.rows(), t.a.cols());
  for (Eigen::Index j = 0; j < t.a.cols(); ++j) {
    const double inner = t.a.col(j).dot(d_a.col(j));
    d_s.col(j) = t.a.col(j).cwiseProduct(d_a.col(j).array().matrix() -
                                         Eigen::VectorXd::Constant(t.a.rows(), inner));
  }
  const Eigen::MatrixXd d_k = t.q * d_s.transpose();
  const Eigen::MatrixXd d_q = t.k * d_s;

  AttentionGradients g;
  g.w_query = f.transpose() * d_q;
  g.w_key = f.transpose() * d_k;
  g.w_value = f.transpose() * d_v;
  g.features = d_q * p.w_query.transpose() + d_k * p.w_key.transpose() +
               d_v * p.w_value.transpose();
  return g;
}

// ============================================================================
// Latent dimension reducer (encoder / decoder MLP)
// ============================================================================

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  bool relu = false;

  Eigen::Index in_width() const noexcept { return weight.cols(); }
  Eigen::Index out_width() const noexcept { return weight.rows(); }
};

struct MlpParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  Eigen::Index input_width() const { return encoder.front().in_width(); }
  Eigen::Index latent_width() const { return encoder.back().out_width(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* stack : {&encoder, &decoder}) {
      for (const auto& l : *stack) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    }
    return n;
  }
};

/// Two-layer encoder (in -> 2*latent -> latent) and two-layer decoder
/// (latent -> 2*latent -> in), ReLU on the hidden layers only. Weights are
/// He-initialized from the seed; biases start at zero.
inline MlpParams make_mlp(Eigen::Index input_width, Eigen::Index latent_width, std::uint64_t seed) {
  if (input_width < 1 || latent_width < 1) throw config_error("MLP widths must be positive");
  std::mt19937_64 rng(seed);
  auto layer = [&](Eigen::Index in, Eigen::Index out, bool relu) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    DenseLayer l;
    l.weight.resize(out, in);
    for (Eigen::Index j = 0; j < in; ++j) {
      for (Eigen::Index i = 0; i < out; ++i) l.weight(i, j) = dist(rng);
    }
    l.bias = Eigen::VectorXd::Zero(out);
    l.relu = relu;
    return l;
  };
  const Eigen::Index hidden = 2 * latent_width;
  MlpParams p;
  p.encoder.push_back(layer(input_width, hidden, true));
  p.encoder.push_back(layer(hidden, latent_width, false));
  p.decoder.push_back(layer(latent_width, hidden, true));
  p.decoder.push_back(layer(hidden, input_width, false));
  return p;
}

/// Reducer for 3K-wide latents: 96 -> 32, 192 -> 64.
inline MlpParams make_latent_reducer(Eigen::Index latent_vector_width, std::uint64_t seed) {
  if (latent_vector_width % 3 != 0) throw config_error("latent width must be a multiple of 3");
  return make_mlp(latent_vector_width, latent_vector_width / 3, seed);
}

struct MlpOutput {
  Eigen::VectorXd latent;
  Eigen::VectorXd reconstruction;
};

struct MlpGradients {
  MlpParams params;       // same layout as the model, holding gradients
  Eigen::VectorXd input;  // dL/dx
};

namespace detail {

// Pre-activation and activation of each layer, input first.
struct MlpTape {
  std::vector<Eigen::VectorXd> activations;  // size = layers + 1
  std::vector<Eigen::VectorXd> preacts;      // size = layers
};

inline std::vector<const DenseLayer*> layer_chain(const MlpParams& p) {
  std::vector<const DenseLayer*> out;
  for (const auto& l : p.encoder) out.push_back(&l);
  for (const auto& l : p.decoder) out.push_back(&l);
  return out;
}

inline MlpTape mlp_tape(const Eigen::VectorXd& x, const MlpParams& p) {
  if (p.encoder.empty() || p.decoder.empty()) throw config_error("MLP has no layers");
  if (x.size() != p.input_width()) {
    throw config_error("MLP input has width " + std::to_string(x.size()) + ", expected " +
                       std::to_string(p.input_width()));
  }
  MlpTape t;
  t.activations.push_back(x);
  for (const DenseLayer* l : layer_chain(p)) {
    if (l->in_width() != t.activations.back().size()) throw config_error("MLP layer widths do not chain");
    Eigen::VectorXd z = l->weight * t.activations.back() + l->bias;
    t.preacts.push_back(z);
    t.activations.push_back(l->relu ? Eigen::VectorXd(z.cwiseMax(0.0)) : z);
  }
  return t;
}

}  // namespace detail

inline MlpOutput mlp_forward(const Eigen::VectorXd& x, const MlpParams& p) {
  const auto t = detail::mlp_tape(x, p);
  return {t.activations[p.encoder.size()], t.activations.back()};
}

/// Backpropagates dL/d(reconstruction) and, optionally, dL/d(latent).
inline MlpGradients mlp_backward(const Eigen::VectorXd& x, const MlpParams& p,
                                 const Eigen::VectorXd& d_reconstruction,
                                 const Eigen::VectorXd* d_latent = nullptr) {
  const auto t = detail::mlp_tape(x, p);
  const auto chain = detail::layer_chain(p);
  if (d_reconstruction.size() != t.activations.back().size()) {
    throw config_error("reconstruction gradient has the wrong width");
  }
  MlpGradients g;
  g.params = p;
  std::vector<DenseLayer*> out_chain;
  for (auto& l : g.params.encoder) out_chain.push_back(&l);
  for (auto& l : g.params.decoder) out_chain.push_back(&l);

  Eigen::VectorXd delta = d_reconstruction;
  for (std::size_t li = chain.size(); li-- > 0;) {
    if (li + 1 == p.encoder.size() && d_latent) {
      if (d_latent->size() != delta.size()) throw config_error("latent gradient has the wrong width");
      delta += *d_latent;
    }
    if (chain[li]->relu) {
      delta = delta.cwiseProduct((t.preacts[li].array() > 0.0).cast<double>().matrix());
    }
    out_chain[li]->weight = delta * t.activations[li].transpose();
    out_chain[li]->bias = delta;
    delta = chain[li]->weight.transpose() * delta;
  }
  g.input = delta;
  return g;
}

/// Mean absolute reconstruction error over all samples and entries.
inline double mlp_l1_loss(std::span<const Eigen::VectorXd> samples, const MlpParams& p) {
  double total = 0.0;
  for (const auto& x : samples) total += (mlp_forward(x, p).reconstruction - x).cwiseAbs().sum();
  return total / (static_cast<double>(samples.size()) * static_cast<double>(p.input_width()));
}

/// Gradient of mlp_l1_loss with respect to every parameter.
inline MlpParams mlp_l1_loss_grad(std::span<const Eigen::VectorXd> samples, const MlpParams& p) {
  MlpParams total;
  const double scale = 1.0 / (static_cast<double>(samples.size()) * static_cast<double>(p.input_width()));
  bool first = true;
  for (const auto& x : samples) {
    const Eigen::VectorXd r = mlp_forward(x, p).reconstruction - x;
    const Eigen::VectorXd d = r.unaryExpr([](double e) { return (e > 0.0) - (e < 0.0); }).cast<double>() * scale;
    MlpGradients g = mlp_backward(x, p, d);
    if (first) {
      total = std::move(g.params);
      first = false;
      continue;
    }
    for (std::size_t i = 0; i < total.encoder.size(); ++i) {
      total.encoder[i].weight += g.params.encoder[i].weight;
      total.encoder[i].bias += g.params.encoder[i].bias;
    }
    for (std::size_t i = 0; i < total.decoder.size(); ++i) {
      total.decoder[i].weight += g.params.decoder[i].weight;
      total.decoder[i].bias += g.params.decoder[i].bias;
    }
  }
  return total;
}

struct MlpTrainConfig {
  int steps = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Eigen::Index latent_width = 0;  // 0: one third of the input width
};

struct MlpTrainResult {
  MlpParams params;                 // lowest-loss parameters visited
  std::vector<double> loss_history; // loss before each step, then final
  double initial_loss = 0.0;
  double best_loss = 0.0;
};

/// Full-batch gradient descent on the mean L1 reconstruction error.
inline MlpTrainResult mlp_train(std::span<const Eigen::VectorXd> samples, const MlpTrainConfig& cfg) {
  if (samples.empty()) throw config_error("mlp_train needs at least one sample");
  const Eigen::Index width = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != width) throw config_error("mlp_train samples differ in width");
    if (!s.allFinite()) throw numeric_error("mlp_train sample has non-finite entries");
  }
  const Eigen::Index latent = cfg.latent_width > 0 ? cfg.latent_width : std::max<Eigen::Index>(1, width / 3);

  MlpTrainResult result;
  MlpParams p = make_mlp(width, latent, cfg.seed);
  result.initial_loss = mlp_l1_loss(samples, p);
  result.best_loss = result.initial_loss;
  result.params = p;
  result.loss_history.push_back(result.initial_loss);

  for (int step = 0; step < cfg.steps && result.loss_history.back() > 0.0; ++step) {
    const MlpParams g = mlp_l1_loss_grad(samples, p);
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
      p.encoder[i].weight -= cfg.learning_rate * g.encoder[i].weight;
      p.encoder[i].bias -= cfg.learning_rate * g.encoder[i].bias;
    }
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
      p.decoder[i].weight -= cfg.learning_rate * g.decoder[i].weight;
      p.decoder[i].bias -= cfg.learning_rate * g.decoder[i].bias;
    }
    const double loss = mlp_l1_loss(samples, p);
    result.loss_history.push_back(loss);
    if (loss < result.best_loss) {
      result.best_loss = loss;
      result.params = p;
    }
  }
  return result;
}

// ----------------------------------------------------------------------------
// JSGP parameter checkpoints
//
//   "JSGP", u8 version (1), u32 matrix count, then per matrix:
//   u32 rows, u32 cols, rows*cols f64 row-major.
// Each dense layer contributes its weight matrix followed by its bias as an
// out x 1 matrix, encoder layers first. The encoder/decoder split is at the
// layer midpoint; every layer except the last of each half uses ReLU.
// ----------------------------------------------------------------------------

inline constexpr std::uint8_t kJsgpVersion = 1;

inline void save_checkpoint(const MlpParams& p, std::ostream& os) {
  const auto chain = detail::layer_chain(p);
  if (p.encoder.size() != p.decoder.size()) {
    throw config_error("checkpoint format needs equally deep encoder and decoder");
  }
  os.write("JSGP", 4);
  byte_io::write_le<std::uint8_t>(os, kJsgpVersion);
  byte_io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(2 * chain.size()));
  auto put = [&](const Eigen::MatrixXd& m) {
    byte_io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
    byte_io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) byte_io::write_le(os, m(i, j));
    }
  };
  for (const DenseLayer* l : chain) {
    put(l->weight);
    put(l->bias);
  }
}

inline MlpParams load_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "JSGP", 4) != 0) {
    throw parse_error("bad magic: not a JSGP checkpoint");
  }
  const auto version = byte_io::read_le<std::uint8_t>(is, "version");
  if (version != kJsgpVersion) throw parse_error("unsupported JSGP version " + std::to_string(version));
  const auto matrices = byte_io::read_le<std::uint32_t>(is, "matrix count");
  if (matrices == 0 || matrices % 4 != 0) {
    throw parse_error("JSGP matrix count " + std::to_string(matrices) +
                      " is not an even number of weight/bias pairs");
  }
  auto get = [&]() {
    const auto rows = byte_io::read_le<std::uint32_t>(is, "rows");
    const auto cols = byte_io::read_le<std::uint32_t>(is, "cols");
    if (static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 28)) {
      throw parse_error("JSGP matrix too large");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = byte_io::read_le<double>(is, "weights");
    }
    return m;
  };
  const std::size_t layers = matrices / 2;
  MlpParams p;
  for (std::size_t li = 0; li < layers; ++li) {
    DenseLayer l;
    l.weight = get();
    Eigen::MatrixXd b = get();
    if (b.cols() != 1 || b.rows() != l.weight.rows()) throw parse_error("JSGP bias shape mismatch");
    l.bias = b.col(0);
    const bool last_of_half = li + 1 == layers / 2 || li + 1 == layers;
    l.relu = !last_of_half;
    (li < layers / 2 ? p.encoder : p.decoder).push_back(std::move(l));
  }
  const auto chain = detail::layer_chain(p);
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (chain[i]->in_width() != chain[i - 1]->out_width()) throw parse_error("JSGP layer widths do not chain");
  }
  return p;
}

inline void save_checkpoint(const MlpParams& p, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path.string() + "' for writing");
  save_checkpoint(p, os);
  if (!os.flush()) throw io_error("write to '" + path.string() + "' failed");
}

inline MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path.string() + "' for reading");
  return load_checkpoint(is);
}

// ============================================================================
// Joint L1 loss
// ============================================================================

struct LossReport {
  double l_y = 0.0;
  double l_u = 0.0;
  double l_v = 0.0;
  double l_joint = 0.0;
};

/// Weights luma 6:1:1 against the chroma channels.
inline double joint_weighting(double y, double u, double v) { return (6.0 * y + u + v) / 8.0; }

/// Per-channel mean absolute error and their 6:1:1 combination.
inline LossReport joint_l1(const AttrMatrix& pred, const AttrMatrix& target) {
  if (pred.rows() != target.rows()) throw config_error("joint_l1 shapes differ");
  if (pred.rows() == 0) throw config_error("joint_l1 needs at least one point");
  const Eigen::RowVector3d mae = (pred - target).cwiseAbs().colwise().mean();
  return {mae[0], mae[1], mae[2], joint_weighting(mae[0], mae[1], mae[2])};
}

}  // namespace gftl

#endif  // GFTLATENT_NN_KERNELS_HPP
