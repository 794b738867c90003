#include "cda/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <json.hpp>

#include "cda/csv.hpp"
#include "cda/errors.hpp"

namespace cda {

using nlohmann::json;

namespace {

json gbt_json(const GbtConfig& g) {
  return {{"depths", g.depths},
          {"n_trees", g.n_trees},
          {"learning_rates", g.learning_rates},
          {"min_samples_leaf", g.min_samples_leaf},
          {"validation_fraction", g.validation_fraction}};
}

GbtConfig gbt_from(const json& j, GbtConfig g) {
  if (j.contains("depths")) g.depths = j.at("depths").get<std::vector<int>>();
  if (j.contains("n_trees")) g.n_trees = j.at("n_trees").get<std::vector<int>>();
  if (j.contains("learning_rates")) g.learning_rates = j.at("learning_rates").get<std::vector<double>>();
  if (j.contains("min_samples_leaf")) g.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (j.contains("validation_fraction")) g.validation_fraction = j.at("validation_fraction").get<double>();
  return g;
}

json canonical(const RunConfig& c, bool with_output) {
  json models = json::array(), targets = json::array();
  for (auto m : c.models) models.push_back(std::string(to_string(m)));
  for (auto t : c.targets) targets.push_back(std::string(to_string(t)));
  const auto& s = c.simulation;
  json j{{"seed", c.seed},
         {"n_splits", c.n_splits},
         {"models", models},
         {"targets", targets},
         {"gbt", {{"cep", gbt_json(c.gbt_cep)}, {"ae", gbt_json(c.gbt_ae)}}},
         {"cadence", std::string(to_string(c.cadence))},
         {"pool", std::string(to_string(c.pool))},
         {"feature_mask", to_string(c.feature_mask)},
         {"cemh_grouping", std::string(to_string(c.cemh_grouping))},
         {"simulation",
          {{"markets", s.markets},
           {"buyers", s.buyers},
           {"sellers", s.sellers},
           {"rounds", s.rounds},
           {"actions_per_round", s.actions_per_round},
           {"value_min", s.value_min},
           {"value_max", s.value_max},
           {"include_large", s.include_large}}}};
  if (with_output) j["output_dir"] = c.output_dir;
  return j;
}

void check_grid(const GbtConfig& g, const char* name) {
  auto fail = [&](const std::string& what) { throw ConfigError(std::string("gbt.") + name + ": " + what); };
  if (g.depths.empty() || g.n_trees.empty() || g.learning_rates.empty()) fail("grid lists must be nonempty");
  for (int d : g.depths)
    if (d < 1) fail("depths must be positive");
  for (int n : g.n_trees)
    if (n < 1) fail("n_trees must be positive");
  for (double lr : g.learning_rates)
    if (!(lr > 0 && lr <= 1)) fail("learning rates must lie in (0, 1]");
  if (g.min_samples_leaf < 1) fail("min_samples_leaf must be positive");
  if (!(g.validation_fraction > 0 && g.validation_fraction < 1)) fail("validation_fraction must lie in (0, 1)");
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::validate() const {
  if (n_splits < 1) throw ConfigError("n_splits must be positive");
  if (models.empty()) throw ConfigError("model roster is empty");
  if (targets.empty()) throw ConfigError("target list is empty");
  check_grid(gbt_cep, "cep");
  check_grid(gbt_ae, "ae");
  const auto& s = simulation;
  if (s.markets < 1 || s.rounds < 1 || s.actions_per_round < 1) throw ConfigError("simulation sizes must be positive");
  if (s.buyers < 1 || s.sellers < 1) throw ConfigError("simulation needs at least one buyer and one seller");
  const int traders = s.include_large ? std::max(16, s.buyers + s.sellers) : s.buyers + s.sellers;
  if (s.actions_per_round < traders) throw ConfigError("simulation actions_per_round must be at least the number of traders");
  if (s.value_min > s.value_max) throw ConfigError("simulation value range is empty");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical(*this, false).dump())));
  return buf;
}

std::string RunConfig::to_json() const { return canonical(*this, true).dump(2) + "\n"; }

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("gbt"))
      for (const auto& [target, grid] : j.at("gbt").items()) {
        if (target != "ae" && target != "cep") throw ConfigError("unknown gbt target '" + target + "'");
        for (const auto& [key, value] : grid.items())
          if (!canonical(RunConfig{}, false).at("gbt").at("cep").contains(key))
            throw ConfigError("unknown gbt key '" + key + "'");
      }
    static const std::set<std::string> known{"seed",         "n_splits",      "models",     "targets",
                                             "gbt",          "cadence",       "pool",       "feature_mask",
                                             "cemh_grouping", "output_dir",   "simulation"};
    for (const auto& [key, value] : j.items())
      if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n_splits")) c.n_splits = j.at("n_splits").get<int>();
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(parse_model_kind(m.get<std::string>()));
    }
    if (j.contains("targets")) {
      c.targets.clear();
      for (const auto& t : j.at("targets")) c.targets.push_back(parse_target(t.get<std::string>()));
    }
    if (j.contains("gbt")) {
      const auto& g = j.at("gbt");
      if (g.contains("cep")) c.gbt_cep = gbt_from(g.at("cep"), c.gbt_cep);
      if (g.contains("ae")) c.gbt_ae = gbt_from(g.at("ae"), c.gbt_ae);
    }
    if (j.contains("cadence")) c.cadence = parse_cadence(j.at("cadence").get<std::string>());
    if (j.contains("pool")) c.pool = parse_pool_policy(j.at("pool").get<std::string>());
    if (j.contains("feature_mask")) c.feature_mask = parse_feature_mask(j.at("feature_mask").get<std::string>());
    if (j.contains("cemh_grouping")) c.cemh_grouping = parse_cemh_grouping(j.at("cemh_grouping").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      auto& d = c.simulation;
      for (auto [key, field] : {std::pair{"markets", &d.markets}, {"buyers", &d.buyers}, {"sellers", &d.sellers},
                                {"rounds", &d.rounds}, {"actions_per_round", &d.actions_per_round},
                                {"value_min", &d.value_min}, {"value_max", &d.value_max}})
        if (s.contains(key)) *field = s.at(key).get<int>();
      if (s.contains("include_large")) d.include_large = s.at("include_large").get<bool>();
      for (const auto& [key, value] : s.items())
        if (!canonical(RunConfig{}, false).at("simulation").contains(key))
          throw ConfigError("unknown simulation key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config " + path.string());
  }
  return from_json(text);
}

FitOptions RunConfig::fit_options(TargetKind target) const {
  FitOptions o;
  o.mask = feature_mask;
  o.cemh_grouping = cemh_grouping;
  o.gbt = target == TargetKind::AE ? gbt_ae : gbt_cep;
  o.gbt.seed = seed;
  return o;
}

}  // namespace cda
