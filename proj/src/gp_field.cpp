#include "modform/gp_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "modform/rng.hpp"

namespace modform {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jitter ladder applied to the diagonal when a factorization fails.
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

double squared_distance(Cell a, Cell b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

double kernel(Cell a, Cell b, const GpHyperparams& hp) {
  double k = hp.signal_variance *
             std::exp(-squared_distance(a, b) / (2.0 * hp.length_scale * hp.length_scale));
  if (a == b) k += hp.noise_variance;
  return k;
}

namespace {

// Cross-covariance between a query measurement and a recorded one: the noise
// draws are independent, so the noise term never applies even when the query
// coincides with an observed cell.
double cross_kernel(Cell a, Cell b, const GpHyperparams& hp) {
  return hp.signal_variance *
         std::exp(-squared_distance(a, b) / (2.0 * hp.length_scale * hp.length_scale));
}

}  // namespace

double entropy_from_variance(double variance) {
  if (variance <= 0.0) return -kInf;
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

namespace detail {

void CholeskyFactor::clear() {
  data_.clear();
  n_ = 0;
}

bool CholeskyFactor::factor(const std::vector<double>& matrix, int n, double jitter) {
  clear();
  data_.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    std::span<const double> row(matrix.data() + static_cast<std::size_t>(i) * n, i + 1);
    if (!append(row.first(i), row[i] + jitter, 0.0)) {
      clear();
      return false;
    }
  }
  return true;
}

bool CholeskyFactor::append(std::span<const double> cov, double self, double jitter) {
  if (static_cast<int>(cov.size()) != n_)
    throw std::invalid_argument("CholeskyFactor::append: size mismatch");
  std::vector<double> row(cov.begin(), cov.end());
  solve_lower(row);
  double d = self + jitter;
  for (double v : row) d -= v * v;
  if (!(d > 0.0) || !std::isfinite(d)) return false;
  data_.insert(data_.end(), row.begin(), row.end());
  data_.push_back(std::sqrt(d));
  ++n_;
  return true;
}

void CholeskyFactor::solve_lower(std::span<double> b) const {
  const double* L = data_.data();
  for (int i = 0; i < static_cast<int>(b.size()); ++i) {
    const double* row = L + idx(i, 0);
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= row[j] * b[j];
    b[i] = s / row[i];
  }
}

void CholeskyFactor::solve_lower_t(std::span<double> b) const {
  const int n = static_cast<int>(b.size());
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= data_[idx(j, i)] * b[j];
    b[i] = s / data_[idx(i, i)];
  }
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += std::log(data_[idx(i, i)]);
  return 2.0 * s;
}

}  // namespace detail

GpState::GpState(GpHyperparams hp) : hp_(hp) {
  if (!(hp_.length_scale > 0.0)) throw std::invalid_argument("GpState: length_scale must be > 0");
  if (!(hp_.signal_variance > 0.0))
    throw std::invalid_argument("GpState: signal_variance must be > 0");
  if (hp_.noise_variance < 0.0)
    throw std::invalid_argument("GpState: noise_variance must be >= 0");
}

void GpState::observe(Cell c, double value) {
  if (is_observed(c)) return;

  std::vector<double> cov(observed_.size());
  for (std::size_t i = 0; i < observed_.size(); ++i) cov[i] = kernel(c, observed_[i].cell, hp_);
  const double self = kernel(c, c, hp_);

  if (!chol_.append(cov, self, jitter_)) {
    observed_.push_back(Observation{c, value});
    observed_index_.emplace(cell_key(c), static_cast<int>(observed_.size()) - 1);
    rebuild();
    return;
  }
  observed_.push_back(Observation{c, value});
  observed_index_.emplace(cell_key(c), static_cast<int>(observed_.size()) - 1);
  refresh_alpha();
}

void GpState::rebuild() {
  const int n = static_cast<int>(observed_.size());
  std::vector<double> K(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K[static_cast<std::size_t>(i) * n + j] = kernel(observed_[i].cell, observed_[j].cell, hp_);

  for (double jitter : kJitterLadder) {
    if (jitter < jitter_) continue;
    if (chol_.factor(K, n, jitter)) {
      jitter_ = jitter;
      refresh_alpha();
      return;
    }
  }
  throw std::runtime_error("GpState: covariance factorization failed at maximum jitter");
}

void GpState::refresh_alpha() {
  alpha_.resize(observed_.size());
  for (std::size_t i = 0; i < observed_.size(); ++i)
    alpha_[i] = observed_[i].value - hp_.prior_mean;
  chol_.solve_lower(alpha_);
  chol_.solve_lower_t(alpha_);
}

PosteriorPoint GpState::posterior_at(Cell c) const {
  const double self = kernel(c, c, hp_);
  if (observed_.empty()) return PosteriorPoint{hp_.prior_mean, self};

  std::vector<double> k(observed_.size());
  for (std::size_t i = 0; i < observed_.size(); ++i) k[i] = cross_kernel(c, observed_[i].cell, hp_);

  double mean = hp_.prior_mean;
  for (std::size_t i = 0; i < k.size(); ++i) mean += k[i] * alpha_[i];

  chol_.solve_lower(k);
  double var = self;
  for (double v : k) var -= v * v;
  // Snap solve-precision residue at exact interpolation points to zero.
  if (var < 1e-11 * self) var = 0.0;
  return PosteriorPoint{mean, var};
}

Posterior GpState::posterior(std::span<const Cell> query) const {
  Posterior out;
  out.means.reserve(query.size());
  out.variances.reserve(query.size());
  for (Cell c : query) {
    const PosteriorPoint p = posterior_at(c);
    out.means.push_back(p.mean);
    out.variances.push_back(p.variance);
  }
  return out;
}

double GpState::cell_entropy(Cell c) const {
  return entropy_from_variance(posterior_at(c).variance);
}

std::string GpState::to_json() const {
  nlohmann::json j;
  j["length_scale"] = hp_.length_scale;
  j["signal_variance"] = hp_.signal_variance;
  j["noise_variance"] = hp_.noise_variance;
  j["prior_mean"] = hp_.prior_mean;
  nlohmann::json obs = nlohmann::json::array();
  for (const Observation& o : observed_) obs.push_back({o.cell.x, o.cell.y, o.value});
  j["observations"] = std::move(obs);
  return j.dump();
}

GpState GpState::from_json(std::string_view text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GpHyperparams hp;
  hp.length_scale = j.at("length_scale").get<double>();
  hp.signal_variance = j.at("signal_variance").get<double>();
  hp.noise_variance = j.at("noise_variance").get<double>();
  hp.prior_mean = j.at("prior_mean").get<double>();
  GpState state(hp);
  for (const auto& o : j.at("observations")) {
    if (!o.is_array() || o.size() != 3)
      throw std::invalid_argument("GpState::from_json: observation must be [x, y, value]");
    state.observe(Cell{o[0].get<int>(), o[1].get<int>()}, o[2].get<double>());
  }
  return state;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1)
    throw std::invalid_argument("log_spaced: requires 0 < lo <= hi, count >= 1");
  std::vector<double> out;
  out.reserve(count);
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(std::log(lo) + step * i));
  return out;
}

namespace {

// Log marginal likelihood of `training` under hp, or nullopt if the
// covariance cannot be factored even at maximum jitter.
std::optional<double> log_marginal_likelihood(const std::vector<Observation>& training,
                                              const GpHyperparams& hp) {
  const int n = static_cast<int>(training.size());
  std::vector<double> K(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K[static_cast<std::size_t>(i) * n + j] = kernel(training[i].cell, training[j].cell, hp);

  detail::CholeskyFactor chol;
  bool ok = false;
  for (double jitter : kJitterLadder) {
    if (chol.factor(K, n, jitter)) {
      ok = true;
      break;
    }
  }
  if (!ok) return std::nullopt;

  std::vector<double> y(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) y[i] = training[i].value - hp.prior_mean;
  std::vector<double> z = y;
  chol.solve_lower(z);
  double quad = 0.0;
  for (double v : z) quad += v * v;
  return -0.5 * quad - 0.5 * chol.log_det() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

GpHyperparams fit_hyperparameters(const std::vector<Observation>& training,
                                  const HyperparamGrid& grid, std::uint64_t seed) {
  if (training.size() < 2)
    throw std::invalid_argument("fit_hyperparameters: need at least 2 training points");
  {
    std::unordered_map<std::uint64_t, int> seen;
    for (const Observation& o : training)
      if (!seen.emplace(cell_key(o.cell), 1).second)
        throw std::invalid_argument("fit_hyperparameters: duplicate training cells");
  }
  if (grid.length_scales.empty() || grid.signal_variances.empty() || grid.noise_variances.empty())
    throw std::invalid_argument("fit_hyperparameters: empty candidate grid");

  double mean = 0.0;
  for (const Observation& o : training) mean += o.value;
  mean /= static_cast<double>(training.size());

  // Likelihood sample: full set, or a seeded subsample when capped.
  std::vector<Observation> sample = training;
  if (grid.max_training > 0 && static_cast<int>(sample.size()) > grid.max_training) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < grid.max_training; ++i) {
      const std::size_t j = i + uniform_index(rng, sample.size() - i);
      std::swap(sample[i], sample[j]);
    }
    sample.resize(grid.max_training);
  }

  std::optional<GpHyperparams> best;
  double best_lml = -kInf;
  for (double ls : grid.length_scales) {
    for (double sv : grid.signal_variances) {
      for (double nv : grid.noise_variances) {
        GpHyperparams hp{ls, sv, nv, mean};
        const std::optional<double> lml = log_marginal_likelihood(sample, hp);
        if (!lml) continue;
        if (!best || *lml > best_lml) {
          best = hp;
          best_lml = *lml;
        }
      }
    }
  }
  if (!best)
    throw std::runtime_error(
        "fit_hyperparameters: every candidate covariance is singular at maximum jitter");
  return *best;
}

EntropyField::EntropyField(const GpState& gp, const GridMap& map)
    : gp_(&gp),
      map_(&map),
      values_(map.cell_count(), 0.0),
      known_(map.cell_count(), 0) {}

double EntropyField::at(Cell c) const {
  const std::size_t i = map_->index(c);
  if (!known_[i]) {
    values_[i] = gp_->cell_entropy(c);
    known_[i] = 1;
  }
  return values_[i];
}

void EntropyField::compute_all() const {
  for (std::size_t i = 0; i < map_->cell_count(); ++i) {
    if (!known_[i]) {
      values_[i] = gp_->cell_entropy(map_->cell_at(i));
      known_[i] = 1;
    }
  }
}

}  // namespace modform
