#include "odepth/metrics.hpp"

#include <cmath>
#include "json.hpp"
#include <sstream>

namespace odepth {

namespace {

void finalize(MetricsReport& r) {
  const double t = static_cast<double>(r.count);
  r.rms = std::sqrt(r.sums.sq_err / t);
  r.rel = r.sums.rel_err / t;
  r.log10 = r.sums.log10_err / t;
  r.rmslog = std::sqrt(r.sums.sq_log_err / t);
  r.delta1 = static_cast<double>(r.sums.within[0]) / t;
  r.delta2 = static_cast<double>(r.sums.within[1]) / t;
  r.delta3 = static_cast<double>(r.sums.within[2]) / t;
}

}  // namespace

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, std::span<const std::uint8_t> extra_mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw InvalidArgument("evaluate: prediction and ground truth are not aligned");
  }
  if (!extra_mask.empty() && extra_mask.size() != gt.pixel_count()) {
    throw InvalidArgument("evaluate: extra mask has the wrong size");
  }
  constexpr double kThresholds[3] = {1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};
  MetricsReport r;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.valid(x, y) || !pred.valid(x, y)) continue;
      if (!extra_mask.empty() && !extra_mask[static_cast<std::size_t>(y) * gt.width() + x]) continue;
      const double g = gt.at(x, y);
      const double p = pred.at(x, y);
      if (!(g > 0.0) || !(p > 0.0) || !std::isfinite(g) || !std::isfinite(p)) {
        throw InvalidArgument("evaluate: non-positive depth at (" + std::to_string(x) + "," + std::to_string(y) + ")");
      }
      const double diff = g - p;
      const double log_diff = std::log(g) - std::log(p);
      r.sums.sq_err += diff * diff;
      r.sums.rel_err += std::abs(diff) / g;
      r.sums.log10_err += std::abs(std::log10(g) - std::log10(p));
      r.sums.sq_log_err += log_diff * log_diff;
      const double ratio = std::max(g / p, p / g);
      for (int n = 0; n < 3; ++n) {
        if (ratio < kThresholds[n]) ++r.sums.within[n];
      }
      ++r.count;
    }
  }
  if (r.count == 0) throw InvalidArgument("evaluate: no jointly valid pixels");
  finalize(r);
  return r;
}

MetricsReport aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidArgument("aggregate: no reports");
  MetricsReport r;
  for (const MetricsReport& part : reports) {
    r.sums.sq_err += part.sums.sq_err;
    r.sums.rel_err += part.sums.rel_err;
    r.sums.log10_err += part.sums.log10_err;
    r.sums.sq_log_err += part.sums.sq_log_err;
    for (int n = 0; n < 3; ++n) r.sums.within[n] += part.sums.within[n];
    r.count += part.count;
  }
  if (r.count == 0) throw InvalidArgument("aggregate: reports cover no pixels");
  finalize(r);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["rms"] = rms;
  j["rel"] = rel;
  j["log10"] = log10;
  j["rmslog"] = rmslog;
  j["delta1"] = delta1;
  j["delta2"] = delta2;
  j["delta3"] = delta3;
  j["count"] = count;
  return j.dump(2);
}

std::string MetricsReport::csv_header() { return "rms,rel,log10,rmslog,delta1,delta2,delta3,count"; }

std::string MetricsReport::to_csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << rms << ',' << rel << ',' << log10 << ',' << rmslog << ',' << delta1 << ',' << delta2 << ',' << delta3 << ','
      << count;
  return out.str();
}

}  // namespace odepth
