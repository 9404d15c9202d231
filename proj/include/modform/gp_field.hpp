#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "modform/grid_env.hpp"

namespace modform {

struct GpHyperparams {
  double length_scale = 1.0;     // cells, > 0
  double signal_variance = 1.0;  // > 0
  double noise_variance = 0.0;   // >= 0
  double prior_mean = 0.0;

  friend bool operator==(const GpHyperparams&, const GpHyperparams&) = default;
};

// Squared-exponential covariance over Euclidean cell distance; the noise
// term contributes only on the diagonal (a == b).
double kernel(Cell a, Cell b, const GpHyperparams& hp);

// Differential entropy of a Gaussian with the given variance, in nats.
// variance <= 0 maps to -infinity.
double entropy_from_variance(double variance);

struct Observation {
  Cell cell;
  double value = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Posterior {
  std::vector<double> means;
  std::vector<double> variances;
};

struct PosteriorPoint {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

// Lower-triangular Cholesky factor stored packed, supporting append of one
// trailing row per new observation.
class CholeskyFactor {
 public:
  int size() const { return n_; }
  void clear();

  // Factor a full row-major n x n matrix with `jitter` added to the diagonal.
  bool factor(const std::vector<double>& matrix, int n, double jitter);
  // Extend by one row/column: cov = covariances against existing points,
  // self = the new diagonal entry (jitter added internally).
  bool append(std::span<const double> cov, double self, double jitter);

  void solve_lower(std::span<double> b) const;    // L y = b in place
  void solve_lower_t(std::span<double> b) const;  // L^T x = y in place
  double log_det() const;                         // log |L L^T|

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * (i + 1) / 2 + j; }
  std::vector<double> data_;
  int n_ = 0;
};

}  // namespace detail

// Gaussian-process belief over the field: a hyperparameter set plus the
// ordered observed set, with a cached factorization of the observed-set
// covariance. Value semantics; copy freely, mutate under exclusive access.
class GpState {
 public:
  GpState() : GpState(GpHyperparams{}) {}
  explicit GpState(GpHyperparams hp);

  const GpHyperparams& hyperparams() const { return hp_; }
  const std::vector<Observation>& observations() const { return observed_; }
  bool is_observed(Cell c) const { return observed_index_.contains(cell_key(c)); }

  // Conditions on (c, value). Re-observing an already-observed cell is a
  // no-op, keeping the covariance matrix nonsingular when noise is zero.
  void observe(Cell c, double value);

  PosteriorPoint posterior_at(Cell c) const;
  Posterior posterior(std::span<const Cell> query) const;

  // 1/2 ln(2*pi*e*var(c|O)); -infinity when the posterior variance is zero.
  double cell_entropy(Cell c) const;

  std::string to_json() const;
  static GpState from_json(std::string_view text);

 private:
  void refresh_alpha();
  void rebuild();

  GpHyperparams hp_;
  std::vector<Observation> observed_;
  std::unordered_map<std::uint64_t, int> observed_index_;
  detail::CholeskyFactor chol_;
  std::vector<double> alpha_;  // K^-1 (x_O - prior_mean)
  double jitter_ = 0.0;
};

// Candidate grid for exhaustive maximum-likelihood hyperparameter search.
// Candidates are enumerated length_scale-major, then signal, then noise; ties
// in likelihood keep the earliest candidate.
struct HyperparamGrid {
  std::vector<double> length_scales;
  std::vector<double> signal_variances;
  std::vector<double> noise_variances;
  // When > 0 and the training set is larger, the likelihood is evaluated on a
  // seeded subsample of this size (prior mean still uses the full set).
  int max_training = 0;
};

std::vector<double> log_spaced(double lo, double hi, int count);

// Exhaustive grid search maximizing the GP log marginal likelihood.
// Throws on fewer than 2 points, duplicate cells, or if every candidate's
// covariance is singular at maximum jitter.
GpHyperparams fit_hyperparameters(const std::vector<Observation>& training,
                                  const HyperparamGrid& grid, std::uint64_t seed);

// Frozen per-cell conditional entropy of a GP snapshot over a map, memoized
// on demand. The snapshot must outlive the field and stay unmutated.
class EntropyField {
 public:
  EntropyField(const GpState& gp, const GridMap& map);

  double at(Cell c) const;
  void compute_all() const;
  const GridMap& map() const { return *map_; }

 private:
  const GpState* gp_;
  const GridMap* map_;
  mutable std::vector<double> values_;
  mutable std::vector<std::uint8_t> known_;
};

}  // namespace modform
