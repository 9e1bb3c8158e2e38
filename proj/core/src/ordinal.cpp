#include "odepth/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "odepth/image_io.hpp"

namespace odepth {

void validate(const PairSampleConfig& cfg) {
  if (cfg.count < 1) throw InvalidArgument("pairs: count must be >= 1");
  if (!(cfg.equal_threshold >= 0.0)) throw InvalidArgument("pairs: equal_threshold must be >= 0");
}

int relation_from_values(double vi, double vj, double tau, Closeness closeness) {
  if (std::abs(vi - vj) <= tau) return 0;
  const bool i_closer = closeness == Closeness::kLargerIsCloser ? vi > vj : vi < vj;
  return i_closer ? 1 : -1;
}

std::vector<OrdinalPair> sample_pairs(const DepthMap& disparity, const PairSampleConfig& cfg) {
  validate(cfg);
  std::vector<PixelCoord> valid;
  for (int y = 0; y < disparity.height(); ++y) {
    for (int x = 0; x < disparity.width(); ++x) {
      if (disparity.valid(x, y)) valid.push_back({y, x});
    }
  }
  if (valid.size() < 2) throw InvalidArgument("sample_pairs: need at least two valid pixels");

  const double n = static_cast<double>(valid.size());
  const bool reject_duplicates = n * (n - 1.0) / 2.0 >= static_cast<double>(cfg.count);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;

  std::vector<OrdinalPair> pairs;
  pairs.reserve(static_cast<std::size_t>(cfg.count));
  while (pairs.size() < static_cast<std::size_t>(cfg.count)) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (a == b) continue;
    if (reject_duplicates && !seen.insert(std::minmax(a, b)).second) continue;
    const PixelCoord pi = valid[a];
    const PixelCoord pj = valid[b];
    const int r = relation_from_values(disparity.at(pi.col, pi.row), disparity.at(pj.col, pj.row), cfg.equal_threshold,
                                       Closeness::kLargerIsCloser);
    pairs.push_back({pi, pj, r});
  }
  return pairs;
}

double whdr(const DepthMap& pred, std::span<const OrdinalPair> pairs, double pred_threshold) {
  if (pairs.empty()) throw InvalidArgument("whdr: no pairs");
  auto check = [&](PixelCoord p) {
    if (p.row < 0 || p.col < 0 || p.row >= pred.height() || p.col >= pred.width() || !pred.valid(p.col, p.row)) {
      throw InvalidArgument("whdr: pair coordinate (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                            ") is not a valid prediction pixel");
    }
  };
  std::size_t disagreements = 0;
  for (const OrdinalPair& pair : pairs) {
    check(pair.i);
    check(pair.j);
    const int predicted = relation_from_values(pred.at(pair.i.col, pair.i.row), pred.at(pair.j.col, pair.j.row),
                                               pred_threshold, Closeness::kSmallerIsCloser);
    if (predicted != pair.r) ++disagreements;
  }
  return static_cast<double>(disagreements) / static_cast<double>(pairs.size());
}

void save_pairs_csv(std::span<const OrdinalPair> pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrc::kWriteFailed, "cannot write " + path.string());
  for (const OrdinalPair& p : pairs) {
    out << p.i.row << ',' << p.i.col << ',' << p.j.row << ',' << p.j.col << ',' << p.r << '\n';
  }
  if (!out) throw IoError(IoErrc::kWriteFailed, "cannot write " + path.string());
}

std::vector<OrdinalPair> load_pairs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::kUnreadable, "cannot read " + path.string());
  std::vector<OrdinalPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    OrdinalPair p;
    char c1, c2, c3, c4;
    if (!(fields >> p.i.row >> c1 >> p.i.col >> c2 >> p.j.row >> c3 >> p.j.col >> c4 >> p.r) || c1 != ',' ||
        c2 != ',' || c3 != ',' || c4 != ',' || p.r < -1 || p.r > 1) {
      throw IoError(IoErrc::kMalformedPayload, path.string() + ":" + std::to_string(line_no) + ": bad pair row");
    }
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace odepth
