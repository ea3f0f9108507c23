#include "odt/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "odt/eval.hpp"

namespace odt {

namespace {
constexpr std::uint64_t kSuggestStream = 0x747065ULL;  // "tpe"
constexpr std::uint64_t kCvStream = 0x6376ULL;         // "cv"
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

long param_int(const ParamMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::out_of_range("missing parameter: " + name);
  if (auto* v = std::get_if<long>(&it->second)) return *v;
  throw std::invalid_argument("parameter " + name + " is not an integer");
}

double param_real(const ParamMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::out_of_range("missing parameter: " + name);
  if (auto* v = std::get_if<double>(&it->second)) return *v;
  if (auto* v = std::get_if<long>(&it->second)) return static_cast<double>(*v);
  throw std::invalid_argument("parameter " + name + " is not numeric");
}

const std::string& param_str(const ParamMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::out_of_range("missing parameter: " + name);
  if (auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw std::invalid_argument("parameter " + name + " is not a string");
}

nlohmann::ordered_json param_map_to_json(const ParamMap& p) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, value] : p) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

ParamMap param_map_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("parameter map must be a JSON object");
  ParamMap p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    if (v.is_number_integer())
      p[it.key()] = v.get<long>();
    else if (v.is_number_float())
      p[it.key()] = v.get<double>();
    else if (v.is_string())
      p[it.key()] = v.get<std::string>();
    else
      throw std::invalid_argument("parameter " + it.key() + " has an unsupported JSON type");
  }
  return p;
}

Dimension Dimension::uniform_int(std::string name, long lo, long hi) {
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::uniform_int;
  d.lo = static_cast<double>(lo);
  d.hi = static_cast<double>(hi);
  return d;
}

Dimension Dimension::uniform_real(std::string name, double lo, double hi) {
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::uniform_real;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Dimension Dimension::log_uniform_real(std::string name, double lo, double hi) {
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::log_uniform_real;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Dimension Dimension::categorical(std::string name, std::vector<std::string> options) {
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::categorical;
  d.options = std::move(options);
  return d;
}

Dimension& Dimension::when(std::string parent_name, std::vector<std::string> values) {
  parent = std::move(parent_name);
  parent_values = std::move(values);
  return *this;
}

const Dimension* SearchSpace::find(const std::string& name) const {
  for (const auto& d : dims)
    if (d.name == name) return &d;
  return nullptr;
}

void SearchSpace::validate() const {
  if (dims.empty()) throw std::invalid_argument("search space has no dimensions");
  std::set<std::string> seen;
  for (const auto& d : dims) {
    if (d.name.empty()) throw std::invalid_argument("dimension with empty name");
    if (!seen.insert(d.name).second) throw std::invalid_argument("duplicate dimension: " + d.name);
    if (d.kind == Dimension::Kind::categorical) {
      if (d.options.empty()) throw std::invalid_argument("categorical " + d.name + " has no options");
    } else {
      if (!(d.lo < d.hi)) throw std::invalid_argument("dimension " + d.name + " needs lo < hi");
      if (d.kind == Dimension::Kind::log_uniform_real && d.lo <= 0.0)
        throw std::invalid_argument("log-uniform " + d.name + " needs lo > 0");
    }
    if (!d.parent.empty()) {
      if (!seen.count(d.parent))
        throw std::invalid_argument("dimension " + d.name + " conditions on " + d.parent +
                                    ", which is not declared before it");
      const Dimension* p = find(d.parent);
      if (p->kind != Dimension::Kind::categorical)
        throw std::invalid_argument("dimension " + d.name + " conditions on non-categorical " + d.parent);
      if (d.parent_values.empty())
        throw std::invalid_argument("dimension " + d.name + " has an empty parent-value gate");
    }
  }
}

namespace {

bool dim_active(const Dimension& d, const ParamMap& chosen) {
  if (d.parent.empty()) return true;
  auto it = chosen.find(d.parent);
  if (it == chosen.end()) return false;
  const auto* v = std::get_if<std::string>(&it->second);
  if (!v) return false;
  return std::find(d.parent_values.begin(), d.parent_values.end(), *v) != d.parent_values.end();
}

ParamValue draw_prior(const Dimension& d, Rng& rng) {
  switch (d.kind) {
    case Dimension::Kind::uniform_int:
      return rng.uniform_int(static_cast<long>(d.lo), static_cast<long>(d.hi));
    case Dimension::Kind::uniform_real:
      return rng.uniform(d.lo, d.hi);
    case Dimension::Kind::log_uniform_real:
      return std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
    case Dimension::Kind::categorical:
      return d.options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(d.options.size()) - 1))];
  }
  throw std::logic_error("unreachable dimension kind");
}

// Parzen density for one numeric dimension: Gaussian mixture over observed
// points with bandwidth max(range * 0.1, nearest-neighbour distance); falls
// back to the uniform prior density when no observations exist. Works in
// transformed space (log for log-uniform dimensions).
struct NumericDensity {
  std::vector<double> centers;
  std::vector<double> sigma;
  double t_lo = 0, t_hi = 0;

  NumericDensity(const Dimension& d, const std::vector<double>& raw) {
    const bool log_space = d.kind == Dimension::Kind::log_uniform_real;
    t_lo = log_space ? std::log(d.lo) : d.lo;
    t_hi = log_space ? std::log(d.hi) : d.hi;
    for (double x : raw) centers.push_back(log_space ? std::log(x) : x);
    const double floor = (t_hi - t_lo) * 0.1;
    sigma.resize(centers.size(), floor);
    for (std::size_t i = 0; i < centers.size(); ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < centers.size(); ++j)
        if (j != i) nn = std::min(nn, std::abs(centers[i] - centers[j]));
      if (std::isfinite(nn)) sigma[i] = std::max(floor, nn);
    }
  }

  bool empty() const { return centers.empty(); }

  double sample_t(Rng& rng) const {
    auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(centers.size()) - 1));
    double t = rng.normal(centers[i], sigma[i]);
    return std::clamp(t, t_lo, t_hi);
  }

  double log_pdf_t(double t) const {
    if (centers.empty()) return -std::log(t_hi - t_lo);  // uniform prior over the range
    double acc = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      double z = (t - centers[i]) / sigma[i];
      acc += std::exp(-0.5 * z * z) / (sigma[i] * kSqrt2Pi);
    }
    return std::log(acc / static_cast<double>(centers.size()) + 1e-300);
  }
};

struct CategoricalDensity {
  std::vector<double> probs;  // Laplace-smoothed over options

  CategoricalDensity(const Dimension& d, const std::vector<std::string>& observed) {
    const auto V = d.options.size();
    std::vector<double> counts(V, 0.0);
    for (const auto& o : observed) {
      auto it = std::find(d.options.begin(), d.options.end(), o);
      if (it != d.options.end()) counts[static_cast<std::size_t>(it - d.options.begin())] += 1.0;
    }
    const double total = static_cast<double>(observed.size() + V);
    probs.resize(V);
    for (std::size_t i = 0; i < V; ++i) probs[i] = (counts[i] + 1.0) / total;
  }

  std::size_t sample(Rng& rng) const { return static_cast<std::size_t>(rng.categorical(probs)); }
  double log_pdf(std::size_t idx) const { return std::log(probs[idx]); }
};

std::vector<double> numeric_observations(const std::vector<const TrialRecord*>& trials, const Dimension& d) {
  std::vector<double> xs;
  for (const auto* t : trials) {
    auto it = t->config.find(d.name);
    if (it == t->config.end()) continue;
    if (auto* v = std::get_if<double>(&it->second))
      xs.push_back(*v);
    else if (auto* v = std::get_if<long>(&it->second))
      xs.push_back(static_cast<double>(*v));
  }
  return xs;
}

std::vector<std::string> categorical_observations(const std::vector<const TrialRecord*>& trials,
                                                  const Dimension& d) {
  std::vector<std::string> xs;
  for (const auto* t : trials) {
    auto it = t->config.find(d.name);
    if (it == t->config.end()) continue;
    if (auto* v = std::get_if<std::string>(&it->second)) xs.push_back(*v);
  }
  return xs;
}

long quantize(const Dimension& d, double t) {
  long v = std::lround(t);
  v = std::max(v, static_cast<long>(d.lo));
  v = std::min(v, static_cast<long>(d.hi));
  return v;
}

}  // namespace

ParamMap sample_prior(const SearchSpace& space, Rng& rng) {
  ParamMap out;
  for (const auto& d : space.dims) {
    if (!dim_active(d, out)) continue;
    out[d.name] = draw_prior(d, rng);
  }
  return out;
}

void validate_tpe_params(const TpeParams& p) {
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw std::invalid_argument("tpe: gamma must lie in (0,1)");
  if (p.n_candidates < 1) throw std::invalid_argument("tpe: n_candidates must be >= 1");
  if (p.n_startup < 0) throw std::invalid_argument("tpe: n_startup must be >= 0");
}

ParamMap tpe_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space,
                     const TpeParams& params) {
  space.validate();
  validate_tpe_params(params);
  Rng rng(derive_seed(params.seed, kSuggestStream, history.size()));

  std::vector<const TrialRecord*> ok;
  for (const auto& t : history)
    if (t.status == "ok") ok.push_back(&t);
  if (static_cast<int>(ok.size()) < params.n_startup) return sample_prior(space, rng);

  std::stable_sort(ok.begin(), ok.end(),
                   [](const TrialRecord* a, const TrialRecord* b) { return a->objective < b->objective; });
  const auto n_good = static_cast<std::size_t>(
      std::max(1L, std::lround(std::ceil(params.gamma * static_cast<double>(ok.size())))));
  std::vector<const TrialRecord*> good(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(std::min(n_good, ok.size())));
  std::vector<const TrialRecord*> bad(ok.begin() + static_cast<std::ptrdiff_t>(std::min(n_good, ok.size())), ok.end());
  if (bad.empty()) bad = ok;

  ParamMap best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < params.n_candidates; ++c) {
    ParamMap cand;
    double score = 0.0;
    for (const auto& d : space.dims) {
      if (!dim_active(d, cand)) continue;
      if (d.kind == Dimension::Kind::categorical) {
        CategoricalDensity l(d, categorical_observations(good, d));
        CategoricalDensity g(d, categorical_observations(bad, d));
        std::size_t idx = l.sample(rng);
        cand[d.name] = d.options[idx];
        score += l.log_pdf(idx) - g.log_pdf(idx);
      } else {
        NumericDensity l(d, numeric_observations(good, d));
        NumericDensity g(d, numeric_observations(bad, d));
        if (l.empty()) {
          // No history for this conditional branch: fall back to the prior.
          cand[d.name] = draw_prior(d, rng);
          continue;
        }
        double t = l.sample_t(rng);
        score += l.log_pdf_t(t) - g.log_pdf_t(t);
        if (d.kind == Dimension::Kind::uniform_int)
          cand[d.name] = quantize(d, t);
        else if (d.kind == Dimension::Kind::log_uniform_real)
          cand[d.name] = std::clamp(std::exp(t), d.lo, d.hi);
        else
          cand[d.name] = std::clamp(t, d.lo, d.hi);
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

double kfold_cv(const LabeledDataset& d, const std::function<std::unique_ptr<Classifier>()>& make, int k,
                std::uint64_t seed) {
  auto fold = stratified_fold_assignment(d.y, k, seed);
  double acc_sum = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows, test_rows;
    for (std::size_t i = 0; i < fold.size(); ++i)
      (fold[i] == f ? test_rows : train_rows).push_back(static_cast<int>(i));
    auto train = take_rows(d, train_rows);
    auto test = take_rows(d, test_rows);
    auto model = make();
    model->fit(train, derive_seed(seed, kCvStream, static_cast<std::uint64_t>(f)));
    int correct = 0;
    for (Eigen::Index i = 0; i < test.X.rows(); ++i)
      if (model->predict(test.X.row(i)) == test.y[static_cast<std::size_t>(i)]) ++correct;
    acc_sum += static_cast<double>(correct) / static_cast<double>(test.rows());
  }
  return acc_sum / static_cast<double>(k);
}

OptimizeResult optimize(const SearchSpace& space, const LabeledDataset& d, const ModelFactory& factory,
                        int max_iterations, const TpeParams& params, int cv_k) {
  space.validate();
  validate_tpe_params(params);
  if (max_iterations < 1) throw std::invalid_argument("optimize: max_iterations must be >= 1");

  OptimizeResult res;
  for (int i = 0; i < max_iterations; ++i) {
    TrialRecord t;
    t.index = i;
    t.config = tpe_suggest(res.trials, space, params);
    try {
      auto make = [&]() { return factory(t.config); };
      double acc = kfold_cv(d, make, cv_k, derive_seed(params.seed, kCvStream, static_cast<std::uint64_t>(i)));
      t.objective = -acc;
      t.status = "ok";
    } catch (const std::exception& e) {
      t.objective = 0.0;  // accuracy-0 penalty
      t.status = "failed";
      t.error = e.what();
    }
    res.trials.push_back(std::move(t));
    const auto& rec = res.trials.back();
    if (rec.status == "ok" && (res.best_index < 0 || rec.objective < res.best_objective)) {
      res.best_index = rec.index;
      res.best_objective = rec.objective;
      res.best_config = rec.config;
    }
  }
  if (res.best_index < 0)
    throw AllTrialsFailed("hyperparameter optimization failed: all " + std::to_string(max_iterations) +
                              " trials raised errors (first: " + res.trials.front().error + ")",
                          res.trials);
  return res;
}

nlohmann::ordered_json trial_to_json(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["index"] = t.index;
  j["config"] = param_map_to_json(t.config);
  j["objective"] = t.objective;
  j["status"] = t.status;
  if (!t.error.empty()) j["error"] = t.error;
  j["wall_time"] = t.wall_time;
  return j;
}

}  // namespace odt
