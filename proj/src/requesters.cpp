#include "usagelog/requesters.hpp"

#include <algorithm>
#include <cmath>

#include "usagelog/crypto.hpp"
#include "usagelog/error.hpp"

namespace usagelog {

PowerLawFit fit_tail(const std::vector<std::size_t>& counts, std::size_t k) {
  PowerLawFit fit;
  fit.cutoff_k = k;
  if (k >= counts.size()) return fit;
  const std::size_t m = counts.size() - k;
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r <= m; r *= 2) {
    xs.push_back(std::log(static_cast<double>(r)));
    ys.push_back(std::log(static_cast<double>(std::max<std::size_t>(counts[k + r - 1], 1))));
  }
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.r2 = syy <= 1e-300 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

PowerLawFit fit_power_law(const std::vector<std::size_t>& counts, const FitOptions& options) {
  if (counts.size() < 3) return fit_tail(counts, 0);
  const std::size_t last = std::min(options.k_max, counts.size() - 3);
  PowerLawFit best;
  best.r2 = -1;
  for (std::size_t k = 0; k <= last; ++k) {
    PowerLawFit f = fit_tail(counts, k);
    if (f.r2 >= options.r2_threshold) {
      f.threshold_met = true;
      return f;
    }
    if (f.r2 > best.r2) best = f;
  }
  best.threshold_met = false;
  return best;
}

RequesterStats analyze_requesters(std::map<std::string, std::size_t> histogram,
                                  const FitOptions& options) {
  std::erase_if(histogram, [](const auto& kv) { return kv.second == 0; });
  if (histogram.size() < 10)
    throw Error(ErrorCode::TooFewRequesters,
                "need at least 10 distinct requesters, found " + std::to_string(histogram.size()));
  RequesterStats s;
  s.histogram = std::move(histogram);
  for (const auto& [r, c] : s.histogram) {
    s.ranked.push_back({r, c, false});
    s.total_events += c;
  }
  std::stable_sort(s.ranked.begin(), s.ranked.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  std::vector<std::size_t> counts;
  counts.reserve(s.ranked.size());
  for (const auto& rc : s.ranked) counts.push_back(rc.count);
  s.fit = fit_power_law(counts, options);
  for (std::size_t i = 0; i < s.fit.cutoff_k; ++i) {
    s.ranked[i].flagged = true;
    s.flagged.insert(s.ranked[i].requester);
  }
  std::vector<std::size_t> sorted(counts.rbegin(), counts.rend());
  const std::size_t n = sorted.size();
  s.median_count = n % 2 ? static_cast<double>(sorted[n / 2])
                         : (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
  return s;
}

std::string requester_of(const UsageEvent& e) {
  return e.requester.identifiers.empty() ? std::string() : e.requester.identifiers.front();
}

std::map<std::string, std::size_t> requester_histogram(const std::vector<UsageEvent>& events) {
  std::map<std::string, std::size_t> h;
  for (const auto& e : events) ++h[requester_of(e)];
  return h;
}

std::string to_string(WeightMode m) {
  switch (m) {
    case WeightMode::None: return "none";
    case WeightMode::Filter: return "filter";
    case WeightMode::InverseFrequency: return "invfreq";
  }
  return "none";
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "none") return WeightMode::None;
  if (text == "filter") return WeightMode::Filter;
  if (text == "invfreq" || text == "inverse-frequency") return WeightMode::InverseFrequency;
  throw Error(ErrorCode::InvalidArgument, "unknown weight mode '" + std::string(text) + "'");
}

std::map<std::string, double> requester_weights(const RequesterStats& stats, WeightMode mode) {
  std::map<std::string, double> w;
  for (const auto& [r, c] : stats.histogram) {
    switch (mode) {
      case WeightMode::None: w[r] = 1.0; break;
      case WeightMode::Filter: w[r] = stats.flagged.count(r) ? 0.0 : 1.0; break;
      case WeightMode::InverseFrequency:
        w[r] = std::min(1.0, stats.median_count / static_cast<double>(c));
        break;
    }
  }
  return w;
}

std::string pseudonymize(std::string_view requester_id, std::string_view secret_key) {
  if (secret_key.empty()) throw Error(ErrorCode::EmptyKey, "pseudonymization key is empty");
  const auto mac = crypto::hmac_sha256(secret_key, requester_id);
  return "urn:x-session:" + crypto::hex(mac).substr(0, 28);
}

}  // namespace usagelog
