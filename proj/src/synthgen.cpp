#include "odt/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

namespace {
constexpr std::uint64_t kCensusStream = 0x63656e737573ULL;  // "census"
constexpr std::uint64_t kTripsStream = 0x7472697073ULL;     // "trips"
constexpr std::array<const char*, 3> kTercileNames = {"low_density", "mid_density", "high_density"};
}  // namespace

std::string to_string(DemandProcess p) {
  return p == DemandProcess::kPoisson ? "poisson" : "negative_binomial";
}

DemandProcess demand_process_from_string(const std::string& s) {
  if (s == "poisson") return DemandProcess::kPoisson;
  if (s == "negative_binomial") return DemandProcess::kNegativeBinomial;
  throw std::invalid_argument("unknown demand process: " + s);
}

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.n_zones < 3) throw std::invalid_argument("n_zones must be >= 3");
  if (cfg.n_days < 1) throw std::invalid_argument("n_days must be >= 1");
  if (!std::isfinite(cfg.kernel_exponent) || cfg.kernel_exponent < 0.0)
    throw std::invalid_argument("kernel_exponent must be finite and >= 0");
  for (std::size_t v = 0; v < kCensusVars.size(); ++v) {
    const auto& t = cfg.target_stats[v];
    const std::string name = kCensusVars[v];
    if (!(t.min <= t.mean && t.mean <= t.max))
      throw std::invalid_argument("target stats for " + name + " must satisfy min <= mean <= max");
    if (t.std < 0.0) throw std::invalid_argument("target std for " + name + " must be >= 0");
    // A distribution on [min, max] with the given mean cannot have std above
    // the Bhatia-Davis bound sqrt((mean - min) * (max - mean)).
    double bound = std::sqrt((t.mean - t.min) * (t.max - t.mean));
    if (t.std > bound)
      throw std::invalid_argument("infeasible target stats for " + name + ": std " + std::to_string(t.std) +
                                  " exceeds the range bound " + std::to_string(bound));
  }
  for (std::size_t i = 0; i < cfg.zone_types.size(); ++i) {
    const auto& z = cfg.zone_types[i];
    const std::string name = kTercileNames[i];
    if (z.mu < 0.0) throw std::invalid_argument(name + ".mu must be >= 0");
    if (cfg.process == DemandProcess::kNegativeBinomial && z.dispersion <= 0.0)
      throw std::invalid_argument(name + ".dispersion must be > 0");
    if (z.activity < 0.0 || z.activity > 1.0) throw std::invalid_argument(name + ".activity must be in [0,1]");
    if (z.min_trips < 0 || z.max_trips < z.min_trips)
      throw std::invalid_argument(name + ": need 0 <= min_trips <= max_trips");
    if (z.burst_prob < 0.0 || z.burst_prob > 1.0)
      throw std::invalid_argument(name + ".burst_prob must be in [0,1]");
    if (z.burst_prob > 0.0 && z.burst_size < 1)
      throw std::invalid_argument(name + ".burst_size must be >= 1 when burst_prob > 0");
    double total = 0.0;
    for (double p : cfg.party_size_probs[i]) {
      if (p < 0.0) throw std::invalid_argument(name + " party-size probabilities must be >= 0");
      total += p;
    }
    if (total <= 0.0) throw std::invalid_argument(name + " party-size probabilities must not all be zero");
  }
}

ZoneRegistry generate_census(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  const int n = cfg.n_zones;
  std::array<std::vector<double>, 5> cols;
  for (std::size_t v = 0; v < kCensusVars.size(); ++v) {
    const auto& t = cfg.target_stats[v];
    Rng rng(derive_seed(cfg.seed, kCensusStream, v));
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& xi : x) xi = std::clamp(rng.normal(t.mean, t.std), t.min, t.max);
    // Clipping biases the mean; a few recentre-and-clip passes pull it back.
    for (int pass = 0; pass < 3; ++pass) {
      double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
      for (auto& xi : x) xi = std::clamp(xi + (t.mean - mean), t.min, t.max);
    }
    cols[v] = std::move(x);
  }
  ZoneRegistry reg;
  for (int z = 0; z < n; ++z) {
    char id[32];
    std::snprintf(id, sizeof(id), "DA%04d", z + 1);
    ZoneProfile p;
    p.da_id = id;
    p.population_density = cols[0][static_cast<std::size_t>(z)];
    p.median_income = cols[1][static_cast<std::size_t>(z)];
    p.avg_household_size = cols[2][static_cast<std::size_t>(z)];
    p.pct_male = cols[3][static_cast<std::size_t>(z)];
    p.pct_working_age = cols[4][static_cast<std::size_t>(z)];
    reg.upsert(p);
  }
  return reg;
}

std::vector<int> density_terciles(const std::vector<double>& density) {
  const int n = static_cast<int>(density.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return density[static_cast<std::size_t>(a)] < density[static_cast<std::size_t>(b)]; });
  std::vector<int> terc(static_cast<std::size_t>(n), 2);
  const int third = n / 3;
  for (int i = 0; i < third; ++i) terc[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
  for (int i = third; i < 2 * third; ++i) terc[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return terc;
}

namespace {

struct Party {
  int dest;
  int size;
};

int draw_destination(Rng& rng, const std::vector<double>& cdf) {
  double u = rng.uniform();
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  auto idx = static_cast<int>(it - cdf.begin());
  return std::min(idx, static_cast<int>(cdf.size()) - 1);
}

// Splits `total` trips into parties with distinct destinations whose sizes sum
// exactly to total: redraw the whole partition when a drawn size overshoots the
// remainder, falling back to size truncation after max_tries attempts.
std::vector<Party> partition_parties(int total, Rng& rng, const std::vector<double>& cdf,
                                     const std::vector<int>& terc,
                                     const std::array<std::array<double, 5>, 3>& tables, int max_tries = 200) {
  const int n_zones = static_cast<int>(cdf.size());
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    int remaining = total;
    std::set<int> used;
    std::vector<Party> out;
    bool ok = true;
    while (remaining > 0) {
      if (static_cast<int>(used.size()) == n_zones) {
        ok = false;
        break;
      }
      int dest = draw_destination(rng, cdf);
      if (used.count(dest)) continue;
      const auto& tbl = tables[static_cast<std::size_t>(terc[static_cast<std::size_t>(dest)])];
      int size = 1 + rng.categorical(tbl.data(), 5);
      if (size > remaining) {
        ok = false;
        break;
      }
      used.insert(dest);
      out.push_back({dest, size});
      remaining -= size;
    }
    if (ok) return out;
  }
  int remaining = total;
  std::set<int> used;
  std::vector<Party> out;
  while (remaining > 0) {
    if (static_cast<int>(used.size()) == n_zones) used.clear();  // allow repeat pairs rather than stall
    int dest = draw_destination(rng, cdf);
    if (used.count(dest)) continue;
    const auto& tbl = tables[static_cast<std::size_t>(terc[static_cast<std::size_t>(dest)])];
    int size = std::min(1 + rng.categorical(tbl.data(), 5), remaining);
    used.insert(dest);
    out.push_back({dest, size});
    remaining -= size;
  }
  return out;
}

}  // namespace

std::vector<TripRecord> generate_trips(const SynthConfig& cfg, const ZoneRegistry& census) {
  validate_synth_config(cfg);
  const int n = static_cast<int>(census.size());
  if (n < 3) throw std::invalid_argument("census must hold at least 3 zones");
  std::vector<double> density(static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) density[static_cast<std::size_t>(z)] = census.zones()[static_cast<std::size_t>(z)].population_density;
  auto terc = density_terciles(density);

  std::vector<double> cdf(static_cast<std::size_t>(n));
  double total_w = 0.0;
  for (int z = 0; z < n; ++z) {
    double w = std::pow(density[static_cast<std::size_t>(z)], cfg.kernel_exponent);
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("destination kernel weight is not finite for zone " + census.zones()[static_cast<std::size_t>(z)].da_id);
    total_w += w;
    cdf[static_cast<std::size_t>(z)] = total_w;
  }
  if (total_w <= 0.0) {
    for (int z = 0; z < n; ++z) cdf[static_cast<std::size_t>(z)] = static_cast<double>(z + 1) / n;
  } else {
    for (auto& c : cdf) c /= total_w;
  }
  cdf.back() = 1.0;

  ServiceCalendar cal(cfg.start_date, cfg.n_days);
  std::vector<TripRecord> trips;
  for (int z = 0; z < n; ++z) {
    const auto& p = cfg.zone_types[static_cast<std::size_t>(terc[static_cast<std::size_t>(z)])];
    if (p.mu <= 0.0) continue;
    for (int d = 0; d < cfg.n_days; ++d) {
      Rng rng(derive_seed(cfg.seed, kTripsStream,
                          static_cast<std::uint64_t>(z) * static_cast<std::uint64_t>(cfg.n_days) +
                              static_cast<std::uint64_t>(d)));
      if (rng.uniform() >= p.activity) continue;
      int raw = cfg.process == DemandProcess::kNegativeBinomial ? rng.negative_binomial(p.mu, p.dispersion)
                                                                : rng.poisson(p.mu);
      int x = std::clamp(raw, p.min_trips, p.max_trips);
      if (p.burst_prob > 0.0 && rng.uniform() < p.burst_prob) x = p.burst_size;
      if (x <= 0) continue;
      Date date = cal.date_at(d);
      for (const auto& party : partition_parties(x, rng, cdf, terc, cfg.party_size_probs)) {
        TripRecord t;
        t.origin_da = census.zones()[static_cast<std::size_t>(z)].da_id;
        t.dest_da = census.zones()[static_cast<std::size_t>(party.dest)].da_id;
        t.date = date;
        t.riders = 1;
        for (int s = 0; s < party.size; ++s) trips.push_back(t);
      }
    }
  }
  return trips;
}

CsvTable census_to_csv(const ZoneRegistry& reg) {
  CsvTable t;
  t.header = {"da_id", "population_density", "median_income", "avg_household_size", "pct_male", "pct_working_age"};
  for (const auto& p : reg.zones()) {
    t.rows.push_back({p.da_id, format_double(p.population_density), format_double(p.median_income),
                      format_double(p.avg_household_size), format_double(p.pct_male),
                      format_double(p.pct_working_age)});
  }
  return t;
}

CsvTable trips_to_csv(const std::vector<TripRecord>& trips) {
  CsvTable t;
  t.header = {"origin_da", "dest_da", "date", "riders"};
  for (const auto& r : trips) {
    t.rows.push_back({r.origin_da, r.dest_da, format_date(r.date), std::to_string(r.riders)});
  }
  return t;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_zones"] = cfg.n_zones;
  j["n_days"] = cfg.n_days;
  j["seed"] = cfg.seed;
  j["start_date"] = format_date(cfg.start_date);
  j["kernel_exponent"] = cfg.kernel_exponent;
  j["process"] = to_string(cfg.process);
  nlohmann::ordered_json stats;
  for (std::size_t v = 0; v < kCensusVars.size(); ++v) {
    const auto& t = cfg.target_stats[v];
    stats[kCensusVars[v]] = {{"min", t.min}, {"max", t.max}, {"mean", t.mean}, {"std", t.std}};
  }
  j["target_stats"] = std::move(stats);
  nlohmann::ordered_json types;
  nlohmann::ordered_json party;
  for (std::size_t i = 0; i < kTercileNames.size(); ++i) {
    const auto& z = cfg.zone_types[i];
    types[kTercileNames[i]] = {{"mu", z.mu},           {"dispersion", z.dispersion},
                               {"activity", z.activity}, {"min_trips", z.min_trips},
                               {"max_trips", z.max_trips}, {"burst_prob", z.burst_prob},
                               {"burst_size", z.burst_size}};
    party[kTercileNames[i]] = cfg.party_size_probs[i];
  }
  j["zone_types"] = std::move(types);
  j["party_size_probs"] = std::move(party);
  return j;
}

namespace {

void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::invalid_argument("unknown key in " + where + ": " + it.key());
  }
}

}  // namespace

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  if (!j.is_object()) throw std::invalid_argument("synth config must be a JSON object");
  require_keys(j, {"n_zones", "n_days", "seed", "start_date", "kernel_exponent", "process", "target_stats",
                   "zone_types", "party_size_probs"},
               "synth config");
  if (j.contains("n_zones")) cfg.n_zones = j.at("n_zones").get<int>();
  if (j.contains("n_days")) cfg.n_days = j.at("n_days").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("start_date")) {
    auto d = parse_date(j.at("start_date").get<std::string>());
    if (!d) throw std::invalid_argument("start_date is not a valid yyyy-mm-dd date");
    cfg.start_date = *d;
  }
  if (j.contains("kernel_exponent")) cfg.kernel_exponent = j.at("kernel_exponent").get<double>();
  if (j.contains("process")) cfg.process = demand_process_from_string(j.at("process").get<std::string>());
  if (j.contains("target_stats")) {
    const auto& stats = j.at("target_stats");
    require_keys(stats, {kCensusVars.begin(), kCensusVars.end()}, "target_stats");
    for (std::size_t v = 0; v < kCensusVars.size(); ++v) {
      if (!stats.contains(kCensusVars[v])) continue;
      const auto& s = stats.at(kCensusVars[v]);
      require_keys(s, {"min", "max", "mean", "std"}, std::string("target_stats.") + kCensusVars[v]);
      auto& t = cfg.target_stats[v];
      if (s.contains("min")) t.min = s.at("min").get<double>();
      if (s.contains("max")) t.max = s.at("max").get<double>();
      if (s.contains("mean")) t.mean = s.at("mean").get<double>();
      if (s.contains("std")) t.std = s.at("std").get<double>();
    }
  }
  if (j.contains("zone_types")) {
    const auto& types = j.at("zone_types");
    require_keys(types, {kTercileNames.begin(), kTercileNames.end()}, "zone_types");
    for (std::size_t i = 0; i < kTercileNames.size(); ++i) {
      if (!types.contains(kTercileNames[i])) continue;
      const auto& s = types.at(kTercileNames[i]);
      require_keys(s, {"mu", "dispersion", "activity", "min_trips", "max_trips", "burst_prob", "burst_size"},
                   std::string("zone_types.") + kTercileNames[i]);
      auto& z = cfg.zone_types[i];
      if (s.contains("mu")) z.mu = s.at("mu").get<double>();
      if (s.contains("dispersion")) z.dispersion = s.at("dispersion").get<double>();
      if (s.contains("activity")) z.activity = s.at("activity").get<double>();
      if (s.contains("min_trips")) z.min_trips = s.at("min_trips").get<int>();
      if (s.contains("max_trips")) z.max_trips = s.at("max_trips").get<int>();
      if (s.contains("burst_prob")) z.burst_prob = s.at("burst_prob").get<double>();
      if (s.contains("burst_size")) z.burst_size = s.at("burst_size").get<int>();
    }
  }
  if (j.contains("party_size_probs")) {
    const auto& party = j.at("party_size_probs");
    require_keys(party, {kTercileNames.begin(), kTercileNames.end()}, "party_size_probs");
    for (std::size_t i = 0; i < kTercileNames.size(); ++i) {
      if (!party.contains(kTercileNames[i])) continue;
      auto vec = party.at(kTercileNames[i]).get<std::vector<double>>();
      if (vec.size() != 5)
        throw std::invalid_argument(std::string("party_size_probs.") + kTercileNames[i] + " must list 5 sizes");
      std::copy(vec.begin(), vec.end(), cfg.party_size_probs[i].begin());
    }
  }
  validate_synth_config(cfg);
  return cfg;
}

}  // namespace odt
