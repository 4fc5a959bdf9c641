#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ausam/checkpoint.hpp"
#include "ausam/error.hpp"
#include "ausam/model.hpp"

namespace ausam {

struct SamplerConfig {
  double alpha = 0.5;   // fraction of each mini-batch that is selected
  double s_min = 0.1;   // lower normalization bound
  double s_max = 0.5;   // upper normalization bound after warm-up
  std::uint32_t e_start = 10;  // warm-up horizon in epochs
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("sampler.alpha must be in (0, 1]");
    if (!(s_min > 0.0)) throw ValidationError("sampler.s_min must be > 0");
    if (!(s_max >= s_min)) throw ValidationError("sampler.s_max must be >= sampler.s_min");
    if (e_start == 0) throw ValidationError("sampler.e_start must be >= 1");
  }
};

// Number of samples taken from a batch of size k: ceil(alpha * k), clamped to
// [1, k]. Products within 1e-9 of an integer are treated as that integer so
// that e.g. 0.7 * 10 selects 7, not 8.
inline std::size_t subset_size(double alpha, std::size_t k) {
  const double x = alpha * static_cast<double>(k);
  const double r = std::round(x);
  const double n = std::abs(x - r) < 1e-9 ? r : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, k);
}

// Per-sample running mean of the loss change caused by the perturbation.
class AdlpTable {
 public:
  struct Entry {
    double mean = 0.0;
    std::uint32_t count = 0;
  };

  void push(SampleId id, double dlp) {
    if (!std::isfinite(dlp) || dlp < 0.0) {
      throw ValidationError("dlp for sample " + std::to_string(id) + " must be finite and >= 0");
    }
    Entry& e = entries_[id];
    ++e.count;
    e.mean += (dlp - e.mean) / static_cast<double>(e.count);
    total_sum_ += dlp;
    ++total_count_;
  }

  [[nodiscard]] std::optional<Entry> find(SampleId id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] double mean(SampleId id) const {
    auto e = find(id);
    return e ? e->mean : 0.0;
  }

  [[nodiscard]] std::uint32_t count(SampleId id) const {
    auto e = find(id);
    return e ? e->count : 0;
  }

  // Mean over every DLP ever pushed; nullopt while the table is empty.
  [[nodiscard]] std::optional<double> global_mean() const {
    if (total_count_ == 0) return std::nullopt;
    return total_sum_ / static_cast<double>(total_count_);
  }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] const std::map<SampleId, Entry>& entries() const { return entries_; }

  // Raw score used for sampling: own mean if seen, else the global mean.
  // Returns nullopt only when the table is empty.
  [[nodiscard]] std::optional<double> score(SampleId id) const {
    if (auto e = find(id)) return e->mean;
    return global_mean();
  }

  // Record stream, ids ascending: u64 id | f64 mean | u32 count, little-endian.
  void write(std::ostream& os) const {
    for (const auto& [id, e] : entries_) {
      le::put_u64(os, id);
      le::put_f64(os, e.mean);
      le::put_u32(os, e.count);
    }
    if (!os) throw Error("failed writing ADLP table");
  }

  static AdlpTable read(std::istream& is) {
    AdlpTable t;
    std::array<unsigned char, kRecordSize> rec{};
    while (true) {
      is.read(reinterpret_cast<char*>(rec.data()), rec.size());
      const auto got = is.gcount();
      if (got == 0) break;
      if (got != static_cast<std::streamsize>(rec.size())) throw FormatError("ADLP table: truncated record");
      const SampleId id = le::get_uint(rec.data(), 8);
      const double mean = le::get_f64(rec.data() + 8);
      const auto count = static_cast<std::uint32_t>(le::get_uint(rec.data() + 16, 4));
      if (!std::isfinite(mean) || mean < 0.0 || count == 0) {
        throw FormatError("ADLP table: invalid record for id " + std::to_string(id));
      }
      if (!t.entries_.emplace(id, Entry{mean, count}).second) {
        throw FormatError("ADLP table: duplicate id " + std::to_string(id));
      }
      t.total_sum_ += mean * count;
      t.total_count_ += count;
    }
    return t;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write(os);
  }

  static AdlpTable load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    return read(is);
  }

  static constexpr std::size_t kRecordSize = 20;

 private:
  std::map<SampleId, Entry> entries_;
  double total_sum_ = 0.0;
  std::uint64_t total_count_ = 0;
};

// Upper normalization bound during warm-up: rises linearly from s_min at
// epoch 0 to s_max at epoch e_start, constant afterwards.
inline double effective_smax(const SamplerConfig& cfg, std::uint32_t epoch) {
  if (epoch >= cfg.e_start) return cfg.s_max;
  const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.e_start);
  return cfg.s_min + (cfg.s_max - cfg.s_min) * frac;
}

// Min-max normalization of raw scores into [lo, hi]. A constant input maps
// to lo everywhere.
inline std::vector<double> normalize_scores(std::span<const double> raw, double lo, double hi) {
  if (raw.empty()) throw ValidationError("normalize_scores: empty input");
  for (double r : raw)
    if (!std::isfinite(r)) throw ValidationError("normalize_scores: non-finite score");
  const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
  const double gmin = *mn;
  const double gmax = *mx;
  std::vector<double> out(raw.size(), lo);
  if (gmax == gmin) return out;
  const double scale = (hi - lo) / (gmax - gmin);
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = lo + (raw[i] - gmin) * scale;
  // pin the extremes so rounding cannot leave [lo, hi]
  out[static_cast<std::size_t>(mn - raw.begin())] = lo;
  out[static_cast<std::size_t>(mx - raw.begin())] = hi;
  return out;
}

struct ScoreVector {
  std::vector<double> raw;
  std::vector<double> normalized;
  std::vector<double> prob;
};

inline ScoreVector scores_from_normalized(std::vector<double> raw, std::vector<double> normalized) {
  ScoreVector sv;
  sv.raw = std::move(raw);
  sv.normalized = std::move(normalized);
  const double total = std::accumulate(sv.normalized.begin(), sv.normalized.end(), 0.0);
  sv.prob.resize(sv.normalized.size());
  for (std::size_t i = 0; i < sv.prob.size(); ++i) sv.prob[i] = sv.normalized[i] / total;
  return sv;
}

// Selection probabilities for the samples of one batch (in batch order).
inline ScoreVector batch_probabilities(const AdlpTable& table, std::span<const SampleId> ids,
                                       const SamplerConfig& cfg, std::uint32_t epoch) {
  if (ids.empty()) throw ValidationError("batch_probabilities: empty batch");
  std::vector<double> raw(ids.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) raw[i] = table.score(ids[i]).value_or(0.0);
  auto normalized = normalize_scores(raw, cfg.s_min, effective_smax(cfg, epoch));
  return scores_from_normalized(std::move(raw), std::move(normalized));
}

inline ScoreVector uniform_probabilities(std::size_t k) {
  if (k == 0) throw ValidationError("uniform_probabilities: empty batch");
  return scores_from_normalized(std::vector<double>(k, 0.0), std::vector<double>(k, 1.0));
}

// Weighted sampling without replacement by exponential keys: each position
// draws u in (0, 1] and gets key -ln(u)/p; the n smallest keys win. The
// first winner is position i with probability exactly p_i. Returns positions
// in ascending order. When n equals the batch size no random numbers are
// drawn.
template <class Rng>
std::vector<std::size_t> sample_subset(std::span<const double> probs, std::size_t n, Rng& rng) {
  const std::size_t k = probs.size();
  if (n == 0) throw ValidationError("sample_subset: n must be >= 1");
  if (n > k) {
    throw ValidationError("sample_subset: n=" + std::to_string(n) + " exceeds batch size " + std::to_string(k));
  }
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  if (n == k) return pos;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> keys(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double u = 1.0 - unif(rng);  // (0, 1]
    keys[i] = probs[i] > 0.0 ? -std::log(u) / probs[i] : std::numeric_limits<double>::infinity();
  }
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n), pos.end(),
                    [&](std::size_t a, std::size_t b) { return keys[a] < keys[b] || (keys[a] == keys[b] && a < b); });
  pos.resize(n);
  std::sort(pos.begin(), pos.end());
  return pos;
}

// Per-position inclusion rates with the given total: rate_i = min(1, c p_i)
// with c chosen so the rates sum to `total` (capped entries are fixed at 1 and
// the rest re-scaled). This is the proportional-to-probability stand-in for
// the selection marginals of a draw of `total` samples.
inline std::vector<double> selection_rates(std::span<const double> probs, double total) {
  const std::size_t k = probs.size();
  if (total < 0.0 || total > static_cast<double>(k)) throw ValidationError("selection_rates: total out of range");
  std::vector<double> rates(k, 0.0);
  std::vector<bool> capped(k, false);
  double budget = total;
  for (std::size_t round = 0; round <= k; ++round) {
    double mass = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      if (!capped[i]) mass += probs[i];
    if (mass <= 0.0) break;
    bool changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (capped[i]) continue;
      rates[i] = budget * probs[i] / mass;
      if (rates[i] > 1.0) {
        capped[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
    budget = total;
    for (std::size_t i = 0; i < k; ++i) {
      if (capped[i]) {
        rates[i] = 1.0;
        budget -= 1.0;
      }
    }
  }
  return rates;
}

enum class SelectionRule { adlp, uniform };

// Selection state of one training run: the ADLP table, its configuration and
// a private RNG stream.
class Sampler {
 public:
  Sampler(SamplerConfig cfg, SelectionRule rule = SelectionRule::adlp)
      : cfg_(cfg), rule_(rule), rng_(cfg.seed) {
    cfg_.validate();
  }

  [[nodiscard]] const SamplerConfig& config() const { return cfg_; }
  [[nodiscard]] SelectionRule rule() const { return rule_; }
  [[nodiscard]] const AdlpTable& table() const { return table_; }
  AdlpTable& table() { return table_; }
  std::mt19937_64& rng() { return rng_; }

  [[nodiscard]] std::size_t subset_size(std::size_t k) const { return ausam::subset_size(cfg_.alpha, k); }

  [[nodiscard]] ScoreVector probabilities(std::span<const SampleId> ids, std::uint32_t epoch) const {
    if (rule_ == SelectionRule::uniform) return uniform_probabilities(ids.size());
    return batch_probabilities(table_, ids, cfg_, epoch);
  }

  std::vector<std::size_t> select(const ScoreVector& sv, std::size_t n) {
    return sample_subset(std::span<const double>(sv.prob), n, rng_);
  }

  void record(SampleId id, double dlp) { table_.push(id, dlp); }

 private:
  SamplerConfig cfg_;
  SelectionRule rule_;
  AdlpTable table_;
  std::mt19937_64 rng_;
};

}  // namespace ausam
