#pragma once

#include <zlib.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/features.hpp"
#include "rlhh/instance.hpp"

namespace rlhh {

/// Fully connected ReLU network with a linear output layer. All weights live
/// in one flat vector; layer l stores its (out x in) matrix column-major,
/// followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ArgumentError("network needs at least an input and an output layer");
    for (int s : sizes_)
      if (s < 1) throw ArgumentError("layer sizes must be positive");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(total);
      total += static_cast<std::size_t>(sizes_[l + 1]) * static_cast<std::size_t>(sizes_[l] + 1);
    }
    theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  }

  /// He-normal weights, zero biases.
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < layers(); ++l) {
      const double scale = std::sqrt(2.0 / sizes_[l]);
      auto w = weight(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal() * scale;
      bias(l).setZero();
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t layers() const { return offsets_.size(); }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t l) {
    return {theta_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const {
    return {theta_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l) {
    return {theta_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]};
  }
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const {
    return {theta_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]};
  }

  /// Scores for a batch stored column-wise (one sample per column).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    check_input(x.rows());
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers(); ++l) {
      Eigen::MatrixXd z = weight(l) * a;
      z.colwise() += bias(l);
      a = l + 1 < layers() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  Eigen::VectorXd forward(std::span<const double> x) const {
    return forward(Eigen::Map<const Eigen::MatrixXd>(x.data(), static_cast<Eigen::Index>(x.size()), 1)).col(0);
  }

  /// L = Σ_i (y_i - Q(x_i)[a_i])², gradient written to `grad` (same layout as parameters).
  double loss_and_gradient(const Eigen::MatrixXd& x, std::span<const int> actions, std::span<const double> y,
                           Eigen::VectorXd& grad) const {
    check_input(x.rows());
    const auto n = x.cols();
    if (static_cast<Eigen::Index>(actions.size()) != n || static_cast<Eigen::Index>(y.size()) != n)
      throw ArgumentError("batch arrays disagree in length");
    std::vector<Eigen::MatrixXd> act{x};
    for (std::size_t l = 0; l < layers(); ++l) {
      Eigen::MatrixXd z = weight(l) * act.back();
      z.colwise() += bias(l);
      act.push_back(l + 1 < layers() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    }
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(outputs(), n);
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = actions[static_cast<std::size_t>(i)];
      if (a < 0 || a >= outputs()) throw ArgumentError("action index out of range");
      const double err = act.back()(a, i) - y[static_cast<std::size_t>(i)];
      loss += err * err;
      delta(a, i) = 2 * err;
    }
    grad = Eigen::VectorXd::Zero(theta_.size());
    for (std::size_t l = layers(); l-- > 0;) {
      Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]);
      gw.noalias() = delta * act[l].transpose();
      gb = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = weight(l).transpose() * delta;
        delta = back.cwiseProduct((act[l].array() > 0.0).cast<double>().matrix());
      }
    }
    return loss;
  }

  bool operator==(const Mlp& o) const {
    return sizes_ == o.sizes_ && theta_.size() == o.theta_.size() && theta_ == o.theta_;
  }

 private:
  void check_input(Eigen::Index rows) const {
    if (rows != inputs())
      throw ArgumentError("input has " + std::to_string(rows) + " features, network expects " + std::to_string(inputs()));
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd theta_;
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    if (m_.size() != theta.size()) {
      m_ = Eigen::VectorXd::Zero(theta.size());
      v_ = Eigen::VectorXd::Zero(theta.size());
      t_ = 0;
    }
    ++t_;
    m_ = b1_ * m_ + (1 - b1_) * grad;
    v_ = b2_ * v_ + (1 - b2_) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1 - std::pow(b2_, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_, b1_, b2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

/// Running per-feature mean and variance (Welford). Once frozen, updates are ignored.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  explicit FeatureScaler(int n) : mean_(static_cast<std::size_t>(n), 0.0), m2_(static_cast<std::size_t>(n), 0.0) {}

  void update(std::span<const double> x) {
    if (frozen_) return;
    check(x.size());
    ++count_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / static_cast<double>(count_);
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }

  std::vector<double> transform(std::span<const double> x) const {
    check(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double var = count_ > 1 ? m2_[i] / static_cast<double>(count_) : 0.0;
      const double sd = std::sqrt(var);
      out[i] = (x[i] - mean_[i]) / (sd > 1e-12 ? sd : 1.0);
    }
    return out;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  long count() const { return count_; }
  std::size_t size() const { return mean_.size(); }

  nlohmann::json to_json() const { return {{"count", count_}, {"mean", mean_}, {"m2", m2_}, {"frozen", frozen_}}; }
  static FeatureScaler from_json(const nlohmann::json& j) {
    FeatureScaler s;
    s.count_ = j.at("count").get<long>();
    s.mean_ = j.at("mean").get<std::vector<double>>();
    s.m2_ = j.at("m2").get<std::vector<double>>();
    s.frozen_ = j.at("frozen").get<bool>();
    if (s.mean_.size() != s.m2_.size()) throw FormatError("scaler arrays disagree in length");
    return s;
  }
  bool operator==(const FeatureScaler&) const = default;

 private:
  void check(std::size_t n) const {
    if (n != mean_.size()) throw ArgumentError("scaler expects " + std::to_string(mean_.size()) + " features, got " + std::to_string(n));
  }

  std::vector<double> mean_, m2_;
  long count_ = 0;
  bool frozen_ = false;
};

struct DdqnConfig {
  double gamma = 0.99;
  double learning_rate = 1e-3;
  int batch_size = 64;
  std::size_t buffer_capacity = 100'000;
  int target_sync = 200;  ///< gradient steps between target synchronizations
  std::vector<int> hidden = {128, 128};
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.3;  ///< share of episodes over which epsilon decays
  bool double_q = true;           ///< false selects the plain max-target rule (ablation)

  nlohmann::json to_json() const {
    return {{"gamma", gamma},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"buffer_capacity", buffer_capacity},
            {"target_sync", target_sync},
            {"hidden", hidden},
            {"epsilon_start", epsilon_start},
            {"epsilon_end", epsilon_end},
            {"epsilon_fraction", epsilon_fraction},
            {"double_q", double_q}};
  }
  /// Fields absent from `j` keep their defaults; unknown fields are rejected.
  static DdqnConfig from_json(const nlohmann::json& j, const std::string& path = "ddqn") {
    DdqnConfig c;
    if (!j.is_object()) throw FormatError(path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      const std::string where = path + "." + k;
      try {
        if (k == "gamma") c.gamma = v.get<double>();
        else if (k == "learning_rate") c.learning_rate = v.get<double>();
        else if (k == "batch_size") c.batch_size = v.get<int>();
        else if (k == "buffer_capacity") c.buffer_capacity = v.get<std::size_t>();
        else if (k == "target_sync") c.target_sync = v.get<int>();
        else if (k == "hidden") c.hidden = v.get<std::vector<int>>();
        else if (k == "epsilon_start") c.epsilon_start = v.get<double>();
        else if (k == "epsilon_end") c.epsilon_end = v.get<double>();
        else if (k == "epsilon_fraction") c.epsilon_fraction = v.get<double>();
        else if (k == "double_q") c.double_q = v.get<bool>();
        else throw FormatError(where + ": unknown field");
      } catch (const nlohmann::json::exception&) {
        throw FormatError(where + ": wrong type");
      }
    }
    if (c.gamma < 0 || c.gamma > 1) throw FormatError(path + ".gamma: must lie in [0, 1]");
    if (c.batch_size < 1) throw FormatError(path + ".batch_size: must be positive");
    if (c.buffer_capacity < 1) throw FormatError(path + ".buffer_capacity: must be positive");
    if (c.target_sync < 1) throw FormatError(path + ".target_sync: must be positive");
    if (c.learning_rate <= 0) throw FormatError(path + ".learning_rate: must be positive");
    for (int h : c.hidden)
      if (h < 1) throw FormatError(path + ".hidden: layer sizes must be positive");
    return c;
  }
};

/// A trained Q-function with its input standardization and provenance.
struct QModel {
  ProblemKind kind = ProblemKind::Vrptw;
  Mlp network;
  FeatureScaler scaler;
  DdqnConfig config;
  int features() const { return network.inputs(); }

  Eigen::VectorXd scores(std::span<const double> raw) const { return network.forward(scaler.transform(raw)); }
  int greedy(std::span<const double> raw) const { return argmax(scores(raw)); }

  /// Throws unless the model was trained for `run_kind`.
  void require(ProblemKind run_kind) const {
    if (run_kind != kind || features() != feature_count(run_kind))
      throw FormatError("model expects " + std::string(to_string(kind)) + " with " + std::to_string(features()) +
                        " features, run is " + std::string(to_string(run_kind)) + " with " +
                        std::to_string(feature_count(run_kind)));
  }
};

inline constexpr std::string_view kModelHeader = "RLHH-MODEL v1";

inline std::uint32_t crc32_of(std::string_view s) {
  return static_cast<std::uint32_t>(::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

inline std::string serialize_model(const QModel& m) {
  const auto& theta = m.network.parameters();
  nlohmann::json j = {{"kind", std::string(to_string(m.kind))},
                      {"features", m.features()},
                      {"layers", m.network.sizes()},
                      {"weights", std::vector<double>(theta.data(), theta.data() + theta.size())},
                      {"scaler", m.scaler.to_json()},
                      {"hyperparameters", m.config.to_json()}};
  const std::string payload = j.dump();
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", crc32_of(payload));
  return std::string(kModelHeader) + "\ncrc32 " + crc + "\n" + payload + "\n";
}

inline QModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string header, crc_line, payload;
  if (!std::getline(in, header)) throw FormatError("empty model file");
  if (header.rfind("RLHH-MODEL ", 0) != 0) throw FormatError("not a model file");
  if (header != kModelHeader) throw VersionError("unsupported model version '" + header.substr(11) + "'");
  if (!std::getline(in, crc_line) || crc_line.rfind("crc32 ", 0) != 0) throw FormatError("missing checksum line");
  std::getline(in, payload);
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", crc32_of(payload));
  if (crc_line.substr(6) != crc) throw ChecksumError("model checksum mismatch");
  QModel m;
  try {
    const auto j = nlohmann::json::parse(payload);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "VRPTW") m.kind = ProblemKind::Vrptw;
    else if (kind == "BDSP") m.kind = ProblemKind::Bdsp;
    else throw FormatError("unknown problem kind '" + kind + "'");
    m.network = Mlp(j.at("layers").get<std::vector<int>>());
    const auto w = j.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != m.network.parameters().size()) throw FormatError("weight count does not match layers");
    m.network.parameters() = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.scaler = FeatureScaler::from_json(j.at("scaler"));
    m.config = DdqnConfig::from_json(j.at("hyperparameters"), "hyperparameters");
    if (j.at("features").get<int>() != m.features() || m.scaler.size() != static_cast<std::size_t>(m.features()))
      throw FormatError("feature length metadata is inconsistent");
    if (m.features() != feature_count(m.kind))
      throw FormatError("model has " + std::to_string(m.features()) + " features but " + kind + " uses " +
                        std::to_string(feature_count(m.kind)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model payload: ") + e.what());
  }
  return m;
}

inline void save_model(const QModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_model(m);
  if (!out) throw IoError("write failed for " + path.string());
}

inline QModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace rlhh
