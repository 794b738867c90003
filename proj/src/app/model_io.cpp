#include "cda/model_io.hpp"

#include <json.hpp>

#include "cda/errors.hpp"

namespace cda {

using nlohmann::json;

namespace {

json key_json(const GroupKey& k) { return json::array({k.feedback, k.price_rule, k.n_bucket}); }

GroupKey key_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

json mask_json(const FeatureMask& m) {
  return {{"orderbook", m.orderbook},
          {"deal_price", m.deal_price},
          {"treatment", m.treatment},
          {"round", m.round},
          {"n_deals", m.n_deals}};
}

FeatureMask mask_from(const json& j) {
  FeatureMask m;
  m.orderbook = j.at("orderbook").get<bool>();
  m.deal_price = j.at("deal_price").get<bool>();
  m.treatment = j.at("treatment").get<bool>();
  m.round = j.at("round").get<bool>();
  m.n_deals = j.at("n_deals").get<bool>();
  return m;
}

json params_json(const GroupedScalars& g) {
  json groups = json::array();
  for (const auto& [key, rounds] : g.values) {
    json r = json::array();
    for (const auto& [round, v] : rounds) r.push_back(json::array({round, v}));
    groups.push_back({{"key", key_json(key)}, {"rounds", r}});
  }
  return {{"type", "grouped_scalars"},
          {"global", g.global},
          {"use_feedback", g.use_feedback},
          {"use_price_rule", g.use_price_rule},
          {"use_n", g.use_n},
          {"use_round", g.use_round},
          {"groups", groups}};
}

json params_json(const GroupedLinear& g) {
  json groups = json::array();
  for (const auto& [key, rounds] : g.coef) {
    json r = json::array();
    for (const auto& [round, v] : rounds) r.push_back({{"round", round}, {"coef", v}});
    groups.push_back({{"key", key_json(key)}, {"rounds", r}});
  }
  return {{"type", "grouped_linear"},
          {"columns", g.columns},
          {"intercept", g.intercept},
          {"use_feedback", g.use_feedback},
          {"global", g.global},
          {"groups", groups}};
}

json params_json(const GbtModel& g) {
  json trees = json::array();
  for (const auto& t : g.ensemble.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    trees.push_back(nodes);
  }
  return {{"type", "gbt"},
          {"columns", g.columns},
          {"max_depth", g.params.max_depth},
          {"n_trees", g.params.n_trees},
          {"learning_rate", g.params.learning_rate},
          {"min_samples_leaf", g.params.min_samples_leaf},
          {"loss", std::string(to_string(g.ensemble.loss))},
          {"quantile", g.ensemble.quantile},
          {"base_score", g.ensemble.base_score},
          {"ensemble_learning_rate", g.ensemble.learning_rate},
          {"split_gain", g.ensemble.split_gain},
          {"trees", trees}};
}

json params_json(const TreatmentMeans& t) {
  json by = json::array();
  for (const auto& [label, sc] : t.by_treatment) by.push_back({{"treatment", label}, {"sum", sc.first}, {"count", sc.second}});
  return {{"type", "treatment_means"}, {"leave_one_out", t.leave_one_out}, {"treatments", by}};
}

json params_json(const std::monostate&) { return {{"type", "none"}}; }

GroupedScalars scalars_from(const json& j) {
  GroupedScalars g;
  g.global = j.at("global").get<double>();
  g.use_feedback = j.at("use_feedback").get<bool>();
  g.use_price_rule = j.at("use_price_rule").get<bool>();
  g.use_n = j.at("use_n").get<bool>();
  g.use_round = j.at("use_round").get<bool>();
  for (const auto& grp : j.at("groups")) {
    auto& rounds = g.values[key_from(grp.at("key"))];
    for (const auto& r : grp.at("rounds")) rounds[r.at(0).get<int>()] = r.at(1).get<double>();
  }
  return g;
}

GroupedLinear linear_from(const json& j) {
  GroupedLinear g;
  g.columns = j.at("columns").get<std::vector<std::string>>();
  g.intercept = j.at("intercept").get<bool>();
  g.use_feedback = j.at("use_feedback").get<bool>();
  g.global = j.at("global").get<std::vector<double>>();
  for (const auto& grp : j.at("groups")) {
    auto& rounds = g.coef[key_from(grp.at("key"))];
    for (const auto& r : grp.at("rounds")) rounds[r.at("round").get<int>()] = r.at("coef").get<std::vector<double>>();
  }
  return g;
}

GbtModel gbt_from(const json& j) {
  GbtModel g;
  g.columns = j.at("columns").get<std::vector<std::string>>();
  g.params.max_depth = j.at("max_depth").get<int>();
  g.params.n_trees = j.at("n_trees").get<int>();
  g.params.learning_rate = j.at("learning_rate").get<double>();
  g.params.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  g.ensemble.loss = parse_gbt_loss(j.at("loss").get<std::string>());
  g.ensemble.quantile = j.at("quantile").get<double>();
  g.ensemble.base_score = j.at("base_score").get<double>();
  g.ensemble.learning_rate = j.at("ensemble_learning_rate").get<double>();
  g.ensemble.split_gain = j.at("split_gain").get<std::vector<double>>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t)
      tree.nodes.push_back(
          {n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(), n.at(4).get<double>()});
    g.ensemble.trees.push_back(std::move(tree));
  }
  return g;
}

TreatmentMeans means_from(const json& j) {
  TreatmentMeans t;
  t.leave_one_out = j.at("leave_one_out").get<bool>();
  for (const auto& e : j.at("treatments"))
    t.by_treatment[e.at("treatment").get<std::string>()] = {e.at("sum").get<double>(), e.at("count").get<std::size_t>()};
  return t;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  json j{{"format_version", kModelFormatVersion},
         {"kind", std::string(to_string(model.kind))},
         {"target", std::string(to_string(model.target))},
         {"mask", mask_json(model.mask)},
         {"fallback", model.fallback},
         {"params", std::visit([](const auto& p) { return params_json(p); }, model.params)}};
  return j.dump();
}

FittedModel model_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw SchemaError("unsupported model format version " + std::to_string(version));
    FittedModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.target = parse_target(j.at("target").get<std::string>());
    m.mask = mask_from(j.at("mask"));
    m.fallback = j.at("fallback").get<std::string>();
    const auto& p = j.at("params");
    const auto type = p.at("type").get<std::string>();
    if (type == "grouped_scalars") m.params = scalars_from(p);
    else if (type == "grouped_linear") m.params = linear_from(p);
    else if (type == "gbt") m.params = gbt_from(p);
    else if (type == "treatment_means") m.params = means_from(p);
    else if (type != "none") throw SchemaError("unknown model parameter type '" + type + "'");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace cda
