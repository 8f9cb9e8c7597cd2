#include "snkf/scenario_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace snkf::io {

namespace {

using nlohmann::json;

json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ValidationError({"document is not valid JSON"});
  return j;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const char* where, std::vector<std::string>& violations) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) violations.push_back(std::string("unknown field in ") + where + ": " + key);
  }
}

double require_number(const json& obj, const char* key, const char* where,
                      std::vector<std::string>& violations) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    violations.push_back(std::string("missing or non-numeric field in ") + where + ": " + key);
    return 0.0;
  }
  return obj[key].get<double>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open file: " + path});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

Scenario parse_scenario(const std::string& text, bool allow_zero_receiver_noise) {
  const json j = parse_text(text);
  std::vector<std::string> violations;
  if (!j.is_object()) throw ValidationError({"scenario document must be an object"});
  reject_unknown(j, {"a", "sigma_w2", "sigma_n2", "sensors", "channels"}, "scenario", violations);

  SystemModel model;
  model.a = require_number(j, "a", "scenario", violations);
  model.sigma_w2 = require_number(j, "sigma_w2", "scenario", violations);
  NoiseModel noise;
  noise.sigma_n2 = require_number(j, "sigma_n2", "scenario", violations);

  SensorSet sensors;
  if (!j.contains("sensors") || !j["sensors"].is_array()) {
    violations.push_back("missing or non-array field in scenario: sensors");
  } else {
    for (const auto& s : j["sensors"]) {
      if (!s.is_object()) {
        violations.push_back("sensor entries must be objects");
        continue;
      }
      reject_unknown(s, {"c", "sigma_v2"}, "sensor", violations);
      Sensor sen;
      sen.c = require_number(s, "c", "sensor", violations);
      sen.sigma_v2 = require_number(s, "sigma_v2", "sensor", violations);
      sensors.sensors.push_back(sen);
    }
  }

  std::vector<double> mags;
  std::vector<std::complex<double>> gains;
  if (!j.contains("channels") || !j["channels"].is_array()) {
    violations.push_back("missing or non-array field in scenario: channels");
  } else {
    for (const auto& c : j["channels"]) {
      if (c.is_number()) {
        mags.push_back(c.get<double>());
      } else if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number()) {
        gains.emplace_back(c[0].get<double>(), c[1].get<double>());
      } else {
        violations.push_back("channel entries must be a magnitude or a [re, im] pair");
      }
    }
    if (!mags.empty() && !gains.empty())
      violations.push_back("channels must be uniformly magnitudes or uniformly [re, im] pairs");
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  ChannelRealization channels = gains.empty()
                                    ? ChannelRealization::from_magnitudes(std::move(mags))
                                    : ChannelRealization::from_complex(std::move(gains));
  return validate_scenario(model, std::move(sensors), std::move(channels), noise,
                           allow_zero_receiver_noise);
}

Scenario load_scenario(const std::string& path, bool allow_zero_receiver_noise) {
  return parse_scenario(read_file(path), allow_zero_receiver_noise);
}

nocsi::ChannelStatistics parse_statistics(const std::string& text) {
  const json j = parse_text(text);
  std::vector<std::string> violations;
  if (!j.is_object()) throw ValidationError({"statistics document must be an object"});
  reject_unknown(j, {"sensors"}, "statistics", violations);

  nocsi::ChannelStatistics stats;
  if (!j.contains("sensors") || !j["sensors"].is_array()) {
    violations.push_back("missing or non-array field in statistics: sensors");
  } else {
    for (const auto& s : j["sensors"]) {
      if (!s.is_object()) {
        violations.push_back("statistics entries must be objects");
        continue;
      }
      reject_unknown(s, {"mean_re", "mean_im", "var_re", "var_im", "e2_re", "e2_im"},
                     "statistics sensor", violations);
      nocsi::ComponentStats cs = nocsi::ComponentStats::from_gaussian(
          require_number(s, "mean_re", "statistics sensor", violations),
          require_number(s, "mean_im", "statistics sensor", violations),
          require_number(s, "var_re", "statistics sensor", violations),
          require_number(s, "var_im", "statistics sensor", violations));
      if (s.contains("e2_re")) cs.e2_re = require_number(s, "e2_re", "statistics sensor", violations);
      if (s.contains("e2_im")) cs.e2_im = require_number(s, "e2_im", "statistics sensor", violations);
      stats.per_sensor.push_back(cs);
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  for (const auto& cs : stats.per_sensor) cs.validate();
  return stats;
}

nocsi::ChannelStatistics load_statistics(const std::string& path) {
  return parse_statistics(read_file(path));
}

std::string solution_to_json(const alloc::AllocationSolution& solution) {
  json j;
  j["alphas_sq"] = solution.alphas_sq;
  j["powers"] = solution.powers;
  j["total_power"] = solution.total_power;
  j["lambda"] = solution.lambda;
  if (solution.mu) j["mu"] = *solution.mu;
  if (solution.active_count) j["M1"] = *solution.active_count;
  j["constraint_value"] = solution.constraint_value;
  return j.dump(2) + "\n";
}

}  // namespace snkf::io
