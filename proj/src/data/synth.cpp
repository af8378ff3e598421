#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"

#include "stgin/csv.hpp"
#include "stgin/data.hpp"
#include "stgin/errors.hpp"
#include "stgin/random.hpp"

namespace stgin {

void SynthConfig::validate() const {
  if (nodes == 0) throw ValidationError("synth: nodes must be at least 1");
  if (days == 0) throw ValidationError("synth: days must be at least 1");
  if (!(step_minutes > 0.0) || std::fmod(1440.0, step_minutes) != 0.0) {
    throw ValidationError("synth: step_minutes must divide a day");
  }
  if (!(segment_m > 0.0) || !(segment_jitter_m >= 0.0) || segment_jitter_m >= segment_m) {
    throw ValidationError("synth: segment jitter must be smaller than the segment length");
  }
  if (!(coupling >= 0.0 && coupling < 1.0)) throw ValidationError("synth: coupling must be in [0, 1)");
  if (!(ar_phi >= 0.0 && ar_phi < 1.0)) throw ValidationError("synth: ar_phi must be in [0, 1)");
  if (lag_steps == 0) throw ValidationError("synth: lag_steps must be at least 1");
  if (disturbance < 0.0 || noise < 0.0 || incident_rate < 0.0 || incident_depth < 0.0 ||
      node_offset < 0.0 || phase_jitter_steps < 0.0) {
    throw ValidationError("synth: spreads, noise and rates must be nonnegative");
  }
}

SynthData synthesize(const SynthConfig& c) {
  c.validate();
  random::Engine rng(c.seed);
  const std::size_t n = c.nodes;
  const auto per_day = static_cast<std::size_t>(1440.0 / c.step_minutes);
  const std::size_t steps = per_day * c.days;
  SynthData out;

  double position = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    out.positions.push_back(position);
    position += c.segment_m + random::uniform(rng, -c.segment_jitter_m, c.segment_jitter_m);
  }
  const double circumference = position;
  out.distances = Tensor({n, n});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      double d = out.positions[b] - out.positions[a];
      if (d < 0.0) d += circumference;
      out.distances(a, b) = d;
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    out.offsets.push_back(random::uniform(rng, -c.node_offset, c.node_offset));
    out.phases.push_back(random::uniform(rng, -c.phase_jitter_steps, c.phase_jitter_steps));
  }

  // Disturbance z is unit-variance when the own-noise η is.
  const double own = std::sqrt(1.0 - c.coupling * c.coupling);
  const double innovation = std::sqrt(1.0 - c.ar_phi * c.ar_phi);
  Tensor eta({steps, n});
  Tensor z({steps, n});
  for (std::size_t a = 0; a < n; ++a) eta(0, a) = random::normal(rng);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t a = 0; a < n; ++a) {
      eta(t, a) = c.ar_phi * eta(t - 1, a) + innovation * random::normal(rng);
    }
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t down = (a + 1) % n;
      const double inherited = t >= c.lag_steps && n > 1 ? z(t - c.lag_steps, down) : 0.0;
      z(t, a) = n > 1 ? c.coupling * inherited + own * eta(t, a) : eta(t, a);
    }
  }

  Tensor dip({steps, n});
  const double start_prob = c.incident_rate / static_cast<double>(per_day);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t t = 0; t < steps; ++t) {
      if (start_prob <= 0.0 || random::uniform01(rng) >= start_prob) continue;
      out.incidents.push_back({a, t});
      // Triangular dip reaching full depth halfway through.
      const double half = static_cast<double>(c.incident_steps) / 2.0;
      for (std::size_t k = 0; k < c.incident_steps && t + k < steps; ++k) {
        const double shape = 1.0 - std::abs(static_cast<double>(k) + 0.5 - half) / half;
        dip(t + k, a) = std::max(dip(t + k, a), c.incident_depth * shape);
      }
    }
  }

  out.speeds = Tensor({steps, n});
  for (std::size_t t = 0; t < steps; ++t) {
    const double tod = static_cast<double>(t % per_day);
    for (std::size_t a = 0; a < n; ++a) {
      const double angle = 2.0 * std::numbers::pi * (tod - out.phases[a]) / static_cast<double>(per_day);
      double v = c.base_speed + out.offsets[a] + c.daily_amplitude * std::sin(angle) +
                 c.disturbance * z(t, a) - dip(t, a);
      if (c.noise > 0.0) v += c.noise * random::normal(rng);
      out.speeds(t, a) = std::max(v, c.min_speed);
    }
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthConfig& c, const SynthData& data) {
  std::filesystem::create_directories(dir);
  csv::write_matrix(dir / "speeds.csv", data.speeds);
  csv::write_matrix(dir / "distances.csv", data.distances);
  nlohmann::ordered_json j;
  j["generator"] = "stgin-synth";
  j["nodes"] = c.nodes;
  j["days"] = c.days;
  j["step_minutes"] = c.step_minutes;
  j["seed"] = c.seed;
  j["segment_m"] = c.segment_m;
  j["segment_jitter_m"] = c.segment_jitter_m;
  j["base_speed"] = c.base_speed;
  j["node_offset"] = c.node_offset;
  j["daily_amplitude"] = c.daily_amplitude;
  j["phase_jitter_steps"] = c.phase_jitter_steps;
  j["disturbance"] = c.disturbance;
  j["coupling"] = c.coupling;
  j["lag_steps"] = c.lag_steps;
  j["ar_phi"] = c.ar_phi;
  j["noise"] = c.noise;
  j["incident_rate"] = c.incident_rate;
  j["incident_depth"] = c.incident_depth;
  j["incident_steps"] = c.incident_steps;
  j["min_speed"] = c.min_speed;
  j["positions_m"] = data.positions;
  j["node_offsets"] = data.offsets;
  j["phase_steps"] = data.phases;
  auto& incidents = j["incidents"] = nlohmann::ordered_json::array();
  for (const auto& i : data.incidents) incidents.push_back({{"node", i.node}, {"start", i.start}});
  std::ofstream out(dir / "truth.json");
  if (!out) throw FormatError("cannot write " + (dir / "truth.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace stgin
