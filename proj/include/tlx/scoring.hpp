#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tlx/dimensions.hpp"
#include "tlx/error.hpp"
#include "tlx/numeric.hpp"

namespace tlx {

/// How Phase 1 comparisons are scoped.
///   classic    - the six task dimensions only (15 pairs)
///   xr_grouped - task pairs, then technology pairs (15 + 10)
///   xr_full    - every dimension against every other (55)
enum class WeightingMode { classic, xr_grouped, xr_full };

inline std::string_view to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::classic: return "classic";
    case WeightingMode::xr_grouped: return "xr_grouped";
    case WeightingMode::xr_full: return "xr_full";
  }
  return "classic";
}

inline WeightingMode parse_weighting_mode(std::string_view s) {
  if (s == "classic") return WeightingMode::classic;
  if (s == "xr_grouped") return WeightingMode::xr_grouped;
  if (s == "xr_full") return WeightingMode::xr_full;
  throw Error(ErrorKind::invalid_mode, "unknown weighting mode '" + std::string(s) + "'");
}

inline WeightingMode default_mode(Variant v) {
  return v == Variant::classic6 ? WeightingMode::classic : WeightingMode::xr_grouped;
}

inline bool is_compatible(Variant v, WeightingMode m) {
  return v == Variant::classic6 ? m == WeightingMode::classic : m != WeightingMode::classic;
}

inline void require_compatible(Variant v, WeightingMode m) {
  if (!is_compatible(v, m)) {
    throw Error(ErrorKind::invalid_mode, "weighting mode '" + std::string(to_string(m)) +
                                             "' is not valid for dimension set '" +
                                             std::string(to_string(v)) + "'");
  }
}

using DimensionPair = std::pair<std::string, std::string>;

/// One forced-choice answer from the weighting phase.
struct PairwiseChoice {
  DimensionPair pair;
  std::string chosen;

  friend bool operator==(const PairwiseChoice&, const PairwiseChoice&) = default;
};

/// Per-dimension win counts. Every dimension in the weighting scope has an
/// entry, including those that were never chosen.
using WeightVector = std::map<std::string, int, std::less<>>;

/// Per-dimension ratings on the 0..100 scale, in steps of 5.
using RatingVector = std::map<std::string, int, std::less<>>;

struct WorkloadScore {
  WeightingMode mode = WeightingMode::classic;
  Ratio raw_task;
  Ratio weighted_task;
  std::optional<Ratio> weighted_technology;

  friend bool operator==(const WorkloadScore&, const WorkloadScore&) = default;
};

inline constexpr int kRatingMax = 100;
inline constexpr int kRatingStep = 5;

inline constexpr std::int64_t pair_count(std::int64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// The dimension groups that are weighted independently under `mode`.
inline std::vector<std::vector<std::string>> weighting_scopes(const DimensionSet& dims,
                                                              WeightingMode mode) {
  require_compatible(dims.variant(), mode);
  switch (mode) {
    case WeightingMode::classic: return {dims.ids(DimensionGroup::task)};
    case WeightingMode::xr_grouped:
      return {dims.ids(DimensionGroup::task), dims.ids(DimensionGroup::technology)};
    case WeightingMode::xr_full: return {dims.ids()};
  }
  return {};
}

/// Every unordered pair of `ids`, in index-lexicographic order.
inline std::vector<DimensionPair> all_pairs(std::span<const std::string> ids) {
  std::vector<DimensionPair> out;
  out.reserve(static_cast<std::size_t>(pair_count(static_cast<std::int64_t>(ids.size()))));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) out.emplace_back(ids[i], ids[j]);
  }
  return out;
}

namespace detail {

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

inline DimensionPair unordered(const DimensionPair& p) {
  return p.first < p.second ? p : DimensionPair{p.second, p.first};
}

inline std::string describe(const DimensionPair& p) { return p.first + "/" + p.second; }

}  // namespace detail

/// Phase 1 presentation sequence. Without a seed the order is canonical;
/// with a seed each scope is shuffled independently (task pairs still come
/// before technology pairs in grouped mode), as are the two sides of a pair.
inline std::vector<DimensionPair> generate_pairs(const DimensionSet& dims, WeightingMode mode,
                                                 std::optional<std::uint64_t> seed = std::nullopt) {
  std::vector<DimensionPair> out;
  std::optional<std::mt19937_64> rng;
  if (seed) rng.emplace(*seed);
  for (const auto& scope : weighting_scopes(dims, mode)) {
    auto pairs = all_pairs(scope);
    if (rng) {
      detail::seeded_shuffle(pairs, *rng);
      for (auto& p : pairs) {
        if (uniform_below(*rng, 2) == 1) std::swap(p.first, p.second);
      }
    }
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

/// Counts wins per dimension. The choices must cover exactly the pair set of
/// `generate_pairs(dims, mode)`, in any order and either orientation; every
/// problem found is listed in the thrown error's details.
inline WeightVector tally_weights(std::span<const PairwiseChoice> choices, const DimensionSet& dims,
                                  WeightingMode mode) {
  const auto scopes = weighting_scopes(dims, mode);

  WeightVector weights;
  std::vector<DimensionPair> canonical;
  std::set<DimensionPair> expected;
  for (const auto& scope : scopes) {
    for (const auto& id : scope) weights.emplace(id, 0);
    for (auto& p : all_pairs(scope)) {
      expected.insert(detail::unordered(p));
      canonical.push_back(std::move(p));
    }
  }

  std::vector<std::string> problems;
  std::set<DimensionPair> seen;
  for (const auto& c : choices) {
    const auto& [a, b] = c.pair;
    const auto label = detail::describe(c.pair);
    if (!dims.contains(a) || !dims.contains(b)) {
      problems.push_back("unknown dimension in pair " + label);
      continue;
    }
    if (a == b) {
      problems.push_back("self pair " + label);
      continue;
    }
    const auto key = detail::unordered(c.pair);
    if (!expected.contains(key)) {
      problems.push_back("pair " + label + " is not compared under mode " +
                         std::string(to_string(mode)));
      continue;
    }
    if (c.chosen != a && c.chosen != b) {
      problems.push_back("choice '" + c.chosen + "' is not a member of pair " + label);
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back("duplicate pair " + label);
      continue;
    }
    ++weights[c.chosen];
  }
  for (const auto& p : canonical) {
    if (!seen.contains(detail::unordered(p))) problems.push_back("missing pair " + detail::describe(p));
  }
  if (!problems.empty()) {
    std::string msg = "invalid pairwise choices: " + problems.front();
    if (problems.size() > 1) msg += " (and " + std::to_string(problems.size() - 1) + " more)";
    throw Error(ErrorKind::validation, std::move(msg), std::move(problems));
  }
  return weights;
}

/// Checks scale discretization and that `ratings` covers `dims` exactly.
inline void validate_ratings(const RatingVector& ratings, const DimensionSet& dims) {
  std::vector<std::string> problems;
  for (const auto& [id, value] : ratings) {
    if (!dims.contains(id)) {
      problems.push_back("unknown dimension '" + id + "'");
    } else if (value < 0 || value > kRatingMax) {
      problems.push_back("rating for '" + id + "' out of range: " + std::to_string(value));
    } else if (value % kRatingStep != 0) {
      problems.push_back("rating for '" + id + "' is not a multiple of 5: " +
                         std::to_string(value));
    }
  }
  for (const auto& d : dims) {
    if (!ratings.contains(d.id)) problems.push_back("missing rating for '" + std::string(d.id) + "'");
  }
  if (!problems.empty()) {
    auto msg = "invalid ratings: " + problems.front();
    throw Error(ErrorKind::validation, std::move(msg), std::move(problems));
  }
}

namespace detail {

inline int rating_for(const RatingVector& ratings, const std::string& id) {
  const auto it = ratings.find(id);
  if (it == ratings.end()) throw Error(ErrorKind::validation, "missing rating for '" + id + "'");
  return it->second;
}

inline int weight_for(const WeightVector& weights, const std::string& id) {
  const auto it = weights.find(id);
  if (it == weights.end()) throw Error(ErrorKind::validation, "missing weight for '" + id + "'");
  return it->second;
}

}  // namespace detail

/// Σ weight·rating / C(n,2) over the dimensions in `group`.
inline Ratio compute_weighted_score(const WeightVector& weights, const RatingVector& ratings,
                                    std::span<const std::string> group) {
  const auto divisor = pair_count(static_cast<std::int64_t>(group.size()));
  if (divisor == 0) throw Error(ErrorKind::validation, "weighted score needs at least two dimensions");
  std::int64_t weight_sum = 0;
  std::int64_t total = 0;
  for (const auto& id : group) {
    const int w = detail::weight_for(weights, id);
    weight_sum += w;
    total += static_cast<std::int64_t>(w) * detail::rating_for(ratings, id);
  }
  if (weight_sum != divisor) {
    throw Error(ErrorKind::inconsistent_weights,
                "weights sum to " + std::to_string(weight_sum) + ", expected " +
                    std::to_string(divisor));
  }
  return {total, divisor};
}

/// Unweighted mean of the group's ratings.
inline Ratio compute_raw_score(const RatingVector& ratings, std::span<const std::string> group) {
  if (group.empty()) throw Error(ErrorKind::validation, "raw score of an empty group");
  std::int64_t total = 0;
  for (const auto& id : group) total += detail::rating_for(ratings, id);
  return {total, static_cast<std::int64_t>(group.size())};
}

/// Both phases combined into the reported score.
inline WorkloadScore score_session(std::span<const PairwiseChoice> choices,
                                   const RatingVector& ratings, const DimensionSet& dims,
                                   WeightingMode mode) {
  const auto weights = tally_weights(choices, dims, mode);
  validate_ratings(ratings, dims);

  const auto task = dims.ids(DimensionGroup::task);
  WorkloadScore score;
  score.mode = mode;
  score.raw_task = compute_raw_score(ratings, task);

  switch (mode) {
    case WeightingMode::classic:
      score.weighted_task = compute_weighted_score(weights, ratings, task);
      break;
    case WeightingMode::xr_grouped:
      score.weighted_task = compute_weighted_score(weights, ratings, task);
      score.weighted_technology =
          compute_weighted_score(weights, ratings, dims.ids(DimensionGroup::technology));
      break;
    case WeightingMode::xr_full: {
      score.weighted_task = compute_weighted_score(weights, ratings, dims.ids());
      // Technology sub-score renormalized by the technology weights' own sum.
      std::int64_t sum = 0;
      std::int64_t total = 0;
      for (const auto& id : dims.ids(DimensionGroup::technology)) {
        const int w = weights.at(id);
        sum += w;
        total += static_cast<std::int64_t>(w) * ratings.at(id);
      }
      score.weighted_technology = sum == 0 ? Ratio{0, 1} : Ratio{total, sum};
      break;
    }
  }
  return score;
}

}  // namespace tlx
