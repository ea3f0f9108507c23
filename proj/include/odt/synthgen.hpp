#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "odt/calendar.hpp"
#include "odt/core.hpp"
#include "odt/csv.hpp"

namespace odt {

struct VariableStats {
  double min = 0, max = 0, mean = 0, std = 0;
};

enum class DemandProcess { kPoisson, kNegativeBinomial };

std::string to_string(DemandProcess p);
DemandProcess demand_process_from_string(const std::string& s);

// Per density-tercile demand parameters. `mu` is the mean daily production of
// an active zone; draws are clipped into [min_trips, max_trips], and with
// probability burst_prob the day is replaced by a fixed burst of burst_size
// trips (a small-group surge; clipping does not apply to the burst).
struct ZoneTypeParams {
  double mu = 0;
  double dispersion = 1.0;  // negative-binomial dispersion r; unused for poisson
  double activity = 0;      // probability the zone generates trips on a given day
  int min_trips = 1;
  int max_trips = 1;
  double burst_prob = 0;
  int burst_size = 3;
};

// Census variable order is fixed; it doubles as the RNG stream order.
inline constexpr std::array<const char*, 5> kCensusVars = {
    "population_density", "median_income", "avg_household_size", "pct_male", "pct_working_age"};

struct SynthConfig {
  int n_zones = 80;
  int n_days = 254;
  std::uint64_t seed = 0;
  Date start_date{2018, 9, 18};
  double kernel_exponent = 1.0;  // destination weight = density^exponent
  DemandProcess process = DemandProcess::kNegativeBinomial;
  std::array<VariableStats, 5> target_stats = {{
      {63.2, 8139.8, 1700.7, 1628.02},  // population_density
      {24640.0, 87296.0, 49506.2, 13522.32},
      {1.5, 2.8, 2.2, 0.30},
      {37.2, 56.8, 47.2, 4.24},
      {38.9, 80.7, 63.5, 8.52},
  }};
  // Ascending-density terciles: low-density zones behave commercial-like (high
  // outflow), high-density zones residential-like (sparse outflow with bursts).
  std::array<ZoneTypeParams, 3> zone_types = {{
      {8.6, 50.0, 0.214, 7, 11, 0.0, 3},  // low_density
      {4.4, 40.0, 0.279, 3, 5, 0.0, 3},   // mid_density
      {1.0, 1.0, 0.399, 1, 1, 0.18, 3},   // high_density
  }};
  // Party-size probabilities (sizes 1..5) by destination tercile.
  std::array<std::array<double, 5>, 3> party_size_probs = {{
      {0.93, 0.06, 0.01, 0.00, 0.00},
      {0.10, 0.86, 0.03, 0.01, 0.00},
      {0.03, 0.28, 0.40, 0.19, 0.10},
  }};
};

/// Throws std::invalid_argument on the first violated invariant, naming the
/// offending field (including infeasible target stats where the requested std
/// exceeds the Bhatia-Davis bound for the [min, max] range).
void validate_synth_config(const SynthConfig& cfg);

/// Zone ids DA0001..DA<n>, demographics drawn per target_stats.
ZoneRegistry generate_census(const SynthConfig& cfg);

/// Ascending-density tercile index (0 = low, 1 = mid, 2 = high) per zone.
std::vector<int> density_terciles(const std::vector<double>& density);

std::vector<TripRecord> generate_trips(const SynthConfig& cfg, const ZoneRegistry& census);

CsvTable census_to_csv(const ZoneRegistry& reg);
CsvTable trips_to_csv(const std::vector<TripRecord>& trips);

nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace odt
