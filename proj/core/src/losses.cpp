#include "odepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace odepth {

double softplus(double m) { return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))); }

namespace {

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

}  // namespace

LossResult ranking_loss(const ScoreMap& z, std::span<const OrdinalPair> pairs, PairReduction reduction) {
  if (z.channels != 1) throw InvalidArgument("ranking_loss: expected a single-channel score map");
  LossResult out;
  out.gradient.assign(z.values.size(), 0.0);
  auto index = [&](PixelCoord p) {
    if (p.row < 0 || p.col < 0 || p.row >= z.height || p.col >= z.width) {
      throw InvalidArgument("ranking_loss: pair coordinate (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                            ") outside the score map");
    }
    return static_cast<std::size_t>(p.row) * z.width + p.col;
  };

  const double scale = reduction == PairReduction::kMean && !pairs.empty() ? 1.0 / pairs.size() : 1.0;
  for (const OrdinalPair& pair : pairs) {
    const std::size_t i = index(pair.i);
    const std::size_t j = index(pair.j);
    const double zi = z.values[i];
    const double zj = z.values[j];
    double gi = 0.0;
    switch (pair.r) {
      case 1:
        out.value += softplus(zj - zi);
        gi = -sigmoid(zj - zi);
        break;
      case -1:
        out.value += softplus(zi - zj);
        gi = sigmoid(zi - zj);
        break;
      case 0:
        out.value += (zj - zi) * (zj - zi);
        gi = -2.0 * (zj - zi);
        break;
      default:
        throw InvalidArgument("ranking_loss: relation must be -1, 0 or +1");
    }
    out.gradient[i] += scale * gi;
    out.gradient[j] -= scale * gi;
  }
  out.value *= scale;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double shift = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - shift);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

LossResult infogain_loss(const ScoreMap& logits, const LabelMap& labels, const InfoGainMatrix& h) {
  const int bins = logits.channels;
  if (h.bins() != bins) throw InvalidArgument("infogain_loss: H dimension does not match the logit channels");
  if (labels.height != logits.height || labels.width != logits.width ||
      labels.labels.size() != logits.plane() || labels.mask.size() != logits.plane()) {
    throw InvalidArgument("infogain_loss: label map does not match the logits");
  }
  const std::size_t plane = logits.plane();
  std::size_t valid = 0;
  for (std::size_t i = 0; i < plane; ++i) valid += labels.mask[i] ? 1 : 0;
  if (valid == 0) throw InvalidArgument("infogain_loss: no valid pixels");

  LossResult out;
  out.gradient.assign(logits.values.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(valid);
  std::vector<double> z(bins);
  for (std::size_t i = 0; i < plane; ++i) {
    if (!labels.mask[i]) continue;
    const int truth = labels.labels[i];
    if (truth < 1 || truth > bins) throw InvalidArgument("infogain_loss: label outside [1, B]");
    for (int d = 0; d < bins; ++d) z[d] = logits.values[d * plane + i];
    const double shift = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (int d = 0; d < bins; ++d) sum += std::exp(z[d] - shift);
    const double log_norm = shift + std::log(sum);

    double pixel_loss = 0.0;
    const double row_sum = h.row_sum(truth);
    for (int d = 0; d < bins; ++d) {
      const double log_p = z[d] - log_norm;
      const double weight = h(truth, d + 1);
      pixel_loss -= weight * log_p;
      out.gradient[d * plane + i] = inv_n * (row_sum * std::exp(log_p) - weight);
    }
    out.value += pixel_loss;
  }
  out.value *= inv_n;
  return out;
}

LossResult l2_regression_loss(const ScoreMap& pred, const DepthMap& target) {
  if (pred.channels != 1 || pred.height != target.height() || pred.width != target.width()) {
    throw InvalidArgument("l2_regression_loss: prediction and target are not aligned");
  }
  const std::size_t n = target.valid_count();
  if (n == 0) throw InvalidArgument("l2_regression_loss: no valid pixels");
  LossResult out;
  out.gradient.assign(pred.values.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto values = target.values();
  const auto mask = target.mask();
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    if (!mask[i]) continue;
    const double diff = pred.values[i] - values[i];
    out.value += diff * diff;
    out.gradient[i] = 2.0 * diff * inv_n;
  }
  out.value *= inv_n;
  return out;
}

}  // namespace odepth
