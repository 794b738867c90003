#include "cda/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cda/errors.hpp"
#include "cda/linear.hpp"
#include "cda/quantile.hpp"
#include "cda/rng.hpp"

namespace cda {

std::string_view to_string(TargetKind t) { return t == TargetKind::AE ? "AE" : "CEP"; }

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::EMH: return "EMH";
    case ModelKind::CEMH: return "CEMH";
    case ModelKind::OBRLM: return "OB-RLM";
    case ModelKind::GBT: return "GBT";
    case ModelKind::TreatmentMean: return "Treatment-Mean";
    case ModelKind::BookMidpoint: return "Book-Midpoint";
  }
  return "?";
}

TargetKind parse_target(std::string_view s) {
  if (s == "AE" || s == "ae") return TargetKind::AE;
  if (s == "CEP" || s == "cep") return TargetKind::CEP;
  throw ConfigError("unknown target '" + std::string(s) + "'");
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "EMH") return ModelKind::EMH;
  if (s == "CEMH") return ModelKind::CEMH;
  if (s == "OB-RLM" || s == "OBRLM") return ModelKind::OBRLM;
  if (s == "GBT") return ModelKind::GBT;
  if (s == "Treatment-Mean" || s == "TreatmentMean") return ModelKind::TreatmentMean;
  if (s == "Book-Midpoint" || s == "BookMidpoint") return ModelKind::BookMidpoint;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

std::string to_string(const FeatureMask& m) {
  std::vector<std::string> parts;
  if (m.orderbook) parts.emplace_back("orderbook");
  if (m.deal_price) parts.emplace_back("deal_price");
  if (m.treatment) parts.emplace_back("treatment");
  if (m.round) parts.emplace_back("round");
  if (m.n_deals) parts.emplace_back("n_deals");
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

FeatureMask parse_feature_mask(std::string_view s) {
  if (s == "full") return FeatureMask::full();
  if (s == "orderbook_only") return FeatureMask::orderbook_only();
  if (s == "no_deal_price") return FeatureMask::no_deal_price();
  FeatureMask m{false, false, false, false, false};
  std::stringstream ss{std::string(s)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part == "orderbook") m.orderbook = true;
    else if (part == "deal_price") m.deal_price = true;
    else if (part == "treatment") m.treatment = true;
    else if (part == "round") m.round = true;
    else if (part == "n_deals") m.n_deals = true;
    else if (!part.empty()) throw ConfigError("unknown feature family '" + part + "'");
  }
  return m;
}

std::string_view to_string(CemhGrouping g) {
  return g == CemhGrouping::TreatmentN ? "treatment_n" : "treatment_n_round";
}

CemhGrouping parse_cemh_grouping(std::string_view s) {
  if (s == "treatment_n") return CemhGrouping::TreatmentN;
  if (s == "treatment_n_round") return CemhGrouping::TreatmentNRound;
  throw ConfigError("unknown CEMH grouping '" + std::string(s) + "'");
}

GbtConfig GbtConfig::default_for(TargetKind target) {
  GbtConfig c;
  if (target == TargetKind::AE) c.depths = {6, 8, 10};
  return c;
}

int n_bucket(int n_deals) { return std::min(n_deals, kNDealsCap); }

std::optional<double> target_of(const FeatureRow& row, TargetKind target) {
  return target == TargetKind::AE ? row.ae_round : row.cep_mid;
}

double TreatmentMeans::mean_for(const std::string& treatment) const {
  double sum = 0;
  std::size_t count = 0;
  if (leave_one_out) {
    for (const auto& [label, sc] : by_treatment) {
      if (label == treatment) continue;
      sum += sc.first;
      count += sc.second;
    }
  } else if (const auto it = by_treatment.find(treatment); it != by_treatment.end()) {
    sum = it->second.first;
    count = it->second.second;
  } else {
    for (const auto& [label, sc] : by_treatment) {
      sum += sc.first;
      count += sc.second;
    }
  }
  if (count == 0) throw MissingInput("no training rounds for treatment mean of '" + treatment + "'");
  return sum / static_cast<double>(count);
}

namespace {

double clip_ae(double v) { return std::clamp(v, 0.0, 1.0); }
double clip_cep(double v) { return std::max(v, 0.0); }

GroupKey key_for(const FeatureRow& row, bool feedback, bool price_rule, bool n) {
  GroupKey k;
  if (feedback) k.feedback = static_cast<int>(row.treatment.feedback);
  if (price_rule) k.price_rule = static_cast<int>(row.treatment.price_rule);
  if (n) k.n_bucket = n_bucket(row.n_deals);
  return k;
}

// Value stored for the greatest round <= `round`.
template <typename T>
const T* lookup_round(const std::map<int, T>& by_round, int round) {
  auto it = by_round.upper_bound(round);
  if (it == by_round.begin()) return nullptr;
  return &std::prev(it)->second;
}

double huber_ratio(const std::vector<double>& x, const std::vector<double>& y) {
  Eigen::MatrixXd xm(static_cast<Eigen::Index>(x.size()), 1);
  Eigen::VectorXd ym(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm(static_cast<Eigen::Index>(i), 0) = x[i];
    ym(static_cast<Eigen::Index>(i)) = y[i];
  }
  const auto fit = fit_huber(xm, ym);
  return fit.coef(0);
}

FittedModel fit_cemh_cep(std::span<const FeatureRow> train, const FitOptions& options) {
  GroupedScalars g;
  g.use_feedback = g.use_price_rule = options.mask.treatment;
  g.use_n = options.mask.n_deals;
  g.use_round = options.mask.round && options.cemh_grouping == CemhGrouping::TreatmentNRound;

  std::map<GroupKey, std::vector<const FeatureRow*>> groups;
  std::vector<double> all_x, all_y;
  for (const auto& row : train) {
    if (!row.cep_mid || !row.last_deal_price) continue;
    groups[key_for(row, g.use_feedback, g.use_price_rule, g.use_n)].push_back(&row);
    all_x.push_back(*row.last_deal_price);
    all_y.push_back(*row.cep_mid);
  }
  if (all_x.empty()) throw MissingInput("no training rows with a realized price and a CEP target");
  g.global = huber_ratio(all_x, all_y);

  for (const auto& [key, rows] : groups) {
    std::set<int> rounds;
    if (g.use_round) {
      for (const auto* r : rows) rounds.insert(r->round);
    } else {
      rounds.insert(0);
    }
    for (int r : rounds) {
      std::vector<double> x, y;
      for (const auto* row : rows) {
        if (g.use_round && row->round > r) continue;
        x.push_back(*row->last_deal_price);
        y.push_back(*row->cep_mid);
      }
      g.values[key][r] = huber_ratio(x, y);
    }
  }

  FittedModel m;
  m.kind = ModelKind::CEMH;
  m.target = TargetKind::CEP;
  m.mask = options.mask;
  m.params = std::move(g);
  m.fallback = "unseen group: global coefficient";
  return m;
}

FittedModel fit_cemh_ae(std::span<const FeatureRow> train, const FitOptions& options) {
  GroupedScalars g;
  g.use_feedback = g.use_price_rule = options.mask.treatment;
  g.use_n = options.mask.n_deals;
  g.use_round = options.mask.round;

  std::map<GroupKey, std::map<int, std::vector<double>>> groups;
  std::vector<double> all;
  for (const auto& row : train) {
    if (!row.ae_round) continue;
    groups[key_for(row, g.use_feedback, g.use_price_rule, g.use_n)][g.use_round ? row.round : 0].push_back(
        *row.ae_round);
    all.push_back(*row.ae_round);
  }
  if (all.empty()) throw MissingInput("no training rows with an AE target");
  g.global = median(all);
  for (auto& [key, by_round] : groups)
    for (auto& [r, values] : by_round) g.values[key][r] = median(std::move(values));

  FittedModel m;
  m.kind = ModelKind::CEMH;
  m.target = TargetKind::AE;
  m.mask = options.mask;
  m.params = std::move(g);
  m.fallback = "unseen group: global median";
  return m;
}

std::vector<std::string> obrlm_columns(TargetKind target, const FeatureMask& mask) {
  std::vector<std::string> cols;
  for (int side = 0; side < 2; ++side)
    for (std::size_t i = 0; i < kDeciles; ++i)
      cols.push_back(std::string(side == 0 ? "bid_d" : "ask_d") + std::to_string(i));
  if (target == TargetKind::AE) {
    if (mask.deal_price) cols.emplace_back("deal_price");
    if (mask.n_deals) cols.emplace_back("n_deals");
  }
  return cols;
}

std::vector<double> obrlm_design_row(const FeatureRow& row, TargetKind target, const FeatureMask& mask) {
  std::vector<double> x;
  x.reserve(kBookEntries + 3);
  if (target == TargetKind::CEP) {
    const auto book = row.raw_book();
    x.assign(book.begin(), book.end());
    return x;
  }
  x.push_back(1.0);
  const auto book = row.normalized_book();
  x.insert(x.end(), book.begin(), book.end());
  if (mask.deal_price) x.push_back(row.normalized_deal_price());
  if (mask.n_deals) x.push_back(static_cast<double>(row.n_deals));
  return x;
}

std::vector<double> fit_linear(const std::vector<const FeatureRow*>& rows, TargetKind target, const FeatureMask& mask) {
  const auto p = obrlm_design_row(*rows.front(), target, mask).size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto d = obrlm_design_row(*rows[i], target, mask);
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[j];
    y(static_cast<Eigen::Index>(i)) = *target_of(*rows[i], target);
  }
  const auto fit = target == TargetKind::CEP ? fit_huber(x, y) : fit_least_squares(x, y);
  return {fit.coef.data(), fit.coef.data() + fit.coef.size()};
}

}  // namespace

double predict_emh(const FeatureRow& row, TargetKind target) {
  if (target == TargetKind::AE) return 1.0;
  if (!row.last_deal_price) throw NoRealizedPrice("EMH needs a realized price; none yet in round " +
                                                  std::to_string(row.round));
  return *row.last_deal_price;
}

FittedModel make_emh(TargetKind target) {
  FittedModel m;
  m.kind = ModelKind::EMH;
  m.target = target;
  m.fallback = "none";
  return m;
}

FittedModel fit_cemh(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options) {
  return target == TargetKind::CEP ? fit_cemh_cep(train, options) : fit_cemh_ae(train, options);
}

FittedModel fit_obrlm(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options) {
  GroupedLinear g;
  g.columns = obrlm_columns(target, options.mask);
  g.intercept = target == TargetKind::AE;
  g.use_feedback = target == TargetKind::AE && options.mask.treatment;
  const std::size_t p = g.columns.size() + (g.intercept ? 1 : 0);

  std::map<GroupKey, std::vector<const FeatureRow*>> groups;
  std::vector<const FeatureRow*> all;
  for (const auto& row : train) {
    if (!row.has_book() || !target_of(row, target)) continue;
    groups[key_for(row, g.use_feedback, false, false)].push_back(&row);
    all.push_back(&row);
  }
  if (all.empty()) throw MissingInput("no training rows with both book sides and a target");
  g.global = fit_linear(all, target, options.mask);

  for (const auto& [key, rows] : groups) {
    std::set<int> rounds;
    for (const auto* r : rows) rounds.insert(r->round);
    for (int r : rounds) {
      std::vector<const FeatureRow*> part;
      for (const auto* row : rows)
        if (row->round <= r) part.push_back(row);
      if (part.size() < p + 1) continue;  // too few rows; prediction falls back
      g.coef[key][r] = fit_linear(part, target, options.mask);
    }
  }

  FittedModel m;
  m.kind = ModelKind::OBRLM;
  m.target = target;
  m.mask = options.mask;
  m.params = std::move(g);
  m.fallback = "unfitted partition: latest earlier round of the group, then the pooled fit";
  return m;
}

std::vector<std::string> gbt_columns(const FeatureMask& mask) {
  std::vector<std::string> cols;
  if (mask.orderbook)
    for (int side = 0; side < 2; ++side)
      for (std::size_t i = 0; i < kDeciles; ++i)
        cols.push_back(std::string(side == 0 ? "bid_d" : "ask_d") + std::to_string(i));
  if (mask.treatment) {
    for (int f = 0; f < kFeedbackLevels; ++f)
      cols.push_back("feedback_" + std::string(to_string(static_cast<FeedbackSetting>(f))));
    for (int r = 0; r < kPriceRuleLevels; ++r)
      cols.push_back("price_rule_" + std::string(to_string(static_cast<PriceRule>(r))));
  }
  if (mask.round) cols.emplace_back("round");
  if (mask.n_deals) cols.emplace_back("n_deals");
  return cols;
}

namespace {

// Normalized values of a rescaled market differ from the originals only by
// rounding; snapping them to a 2^-30 grid lets both grow the same trees.
double snap(double v) { return std::nearbyint(v * 0x1p30) * 0x1p-30; }

}  // namespace

std::vector<double> gbt_inputs(const FeatureRow& row, const FeatureMask& mask) {
  std::vector<double> x;
  x.reserve(kBookEntries + 9);
  if (mask.orderbook) {
    for (double v : row.normalized_book()) x.push_back(snap(v));
  }
  if (mask.treatment) {
    for (int f = 0; f < kFeedbackLevels; ++f) x.push_back(static_cast<int>(row.treatment.feedback) == f ? 1.0 : 0.0);
    for (int r = 0; r < kPriceRuleLevels; ++r) x.push_back(static_cast<int>(row.treatment.price_rule) == r ? 1.0 : 0.0);
  }
  if (mask.round) x.push_back(static_cast<double>(row.round));
  if (mask.n_deals) x.push_back(static_cast<double>(row.n_deals));
  return x;
}

namespace {

double gbt_target(const FeatureRow& row, TargetKind target) {
  const double y = *target_of(row, target);
  return target == TargetKind::CEP ? snap(normalize(y, *row.norm)) : y;
}

GbtParams select_gbt_params(const DenseMatrix& x, const std::vector<double>& y, GbtLoss loss, const GbtConfig& cfg) {
  GbtParams best;
  best.min_samples_leaf = cfg.min_samples_leaf;
  best.max_depth = cfg.depths.front();
  best.n_trees = cfg.n_trees.front();
  best.learning_rate = cfg.learning_rates.front();
  const bool grid = cfg.depths.size() * cfg.n_trees.size() * cfg.learning_rates.size() > 1;
  if (!grid || y.size() < 10) return best;

  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(cfg.seed, 0x6b7));
  rng.shuffle(std::span<std::size_t>(idx));
  const auto n_valid = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(y.size())));
  std::vector<std::size_t> valid_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> fit_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end());
  std::sort(valid_idx.begin(), valid_idx.end());
  std::sort(fit_idx.begin(), fit_idx.end());

  const auto x_fit = x.subset(fit_idx);
  const auto x_valid = x.subset(valid_idx);
  std::vector<double> y_fit, y_valid;
  for (auto i : fit_idx) y_fit.push_back(y[i]);
  for (auto i : valid_idx) y_valid.push_back(y[i]);

  const int max_trees = *std::max_element(cfg.n_trees.begin(), cfg.n_trees.end());
  double best_loss = std::numeric_limits<double>::infinity();
  for (int depth : cfg.depths) {
    for (double lr : cfg.learning_rates) {
      GbtParams p{depth, max_trees, lr, cfg.min_samples_leaf};
      const auto fit = fit_gbt_trees(x_fit, y_fit, loss, p, Validation{x_valid, y_valid});
      for (int trees : cfg.n_trees) {
        // Boosting may stop early; the ensemble is then the same for all larger sizes.
        double l = 0;
        if (fit.valid_loss.empty()) {
          for (std::size_t i = 0; i < y_valid.size(); ++i) l += gbt_loss(loss, y_valid[i], fit.model.base_score);
          l /= static_cast<double>(y_valid.size());
        } else {
          const auto at = std::min<std::size_t>(static_cast<std::size_t>(trees), fit.valid_loss.size()) - 1;
          l = fit.valid_loss[at];
        }
        if (l < best_loss) {
          best_loss = l;
          best = {depth, trees, lr, cfg.min_samples_leaf};
        }
      }
    }
  }
  return best;
}

}  // namespace

FittedModel fit_gbt(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options) {
  std::vector<const FeatureRow*> rows;
  for (const auto& row : train)
    if (row.has_book() && target_of(row, target)) rows.push_back(&row);
  if (rows.empty()) throw MissingInput("no training rows with both book sides and a target");

  GbtModel g;
  g.columns = gbt_columns(options.mask);
  DenseMatrix x(rows.size(), g.columns.size());
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto in = gbt_inputs(*rows[i], options.mask);
    std::copy(in.begin(), in.end(), x.row(i).begin());
    y[i] = gbt_target(*rows[i], target);
  }
  const auto loss = target == TargetKind::CEP ? GbtLoss::Pinball : GbtLoss::Squared;
  g.params = select_gbt_params(x, y, loss, options.gbt);
  g.ensemble = fit_gbt_trees(x, y, loss, g.params).model;

  FittedModel m;
  m.kind = ModelKind::GBT;
  m.target = target;
  m.mask = options.mask;
  m.params = std::move(g);
  m.fallback = "unseen categorical level: all-zero dummies";
  return m;
}

FittedModel fit_treatment_mean(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options) {
  TreatmentMeans t;
  t.leave_one_out = options.treatment_mean_loto;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& row : train) {
    const auto y = target_of(row, target);
    if (!y) continue;
    if (!seen.insert({row.market_id, row.round}).second) continue;
    auto& sc = t.by_treatment[treatment_label(row.treatment)];
    sc.first += *y;
    ++sc.second;
  }
  if (seen.empty()) throw MissingInput("no training rounds with a target");
  FittedModel m;
  m.kind = ModelKind::TreatmentMean;
  m.target = target;
  m.mask = options.mask;
  m.params = std::move(t);
  m.fallback = options.treatment_mean_loto ? "leave-one-treatment-out: mean of the other treatments"
                                           : "unseen treatment: mean over all training rounds";
  return m;
}

FittedModel fit_book_midpoint(std::span<const FeatureRow> train, const FitOptions& options) {
  auto m = fit_treatment_mean(train, TargetKind::CEP, options);
  m.kind = ModelKind::BookMidpoint;
  m.fallback = "one empty side: the other side; both empty: treatment mean";
  return m;
}

FittedModel fit_model(ModelKind kind, std::span<const FeatureRow> train, TargetKind target, const FitOptions& options) {
  switch (kind) {
    case ModelKind::EMH: return make_emh(target);
    case ModelKind::CEMH: return fit_cemh(train, target, options);
    case ModelKind::OBRLM: return fit_obrlm(train, target, options);
    case ModelKind::GBT: return fit_gbt(train, target, options);
    case ModelKind::TreatmentMean: return fit_treatment_mean(train, target, options);
    case ModelKind::BookMidpoint:
      if (target != TargetKind::CEP) throw ConfigError("Book-Midpoint predicts CEP only");
      return fit_book_midpoint(train, options);
  }
  throw ConfigError("unknown model kind");
}

double baseline_book_midpoint(const FeatureRow& row, double fallback) {
  if (row.bids && row.asks) return (row.bids->values[kDeciles - 1] + row.asks->values[0]) / 2;
  if (row.bids) return row.bids->values[kDeciles - 1];
  if (row.asks) return row.asks->values[0];
  return fallback;
}

double predict(const FittedModel& model, const FeatureRow& row) {
  const bool ae = model.target == TargetKind::AE;
  switch (model.kind) {
    case ModelKind::EMH:
      return predict_emh(row, model.target);

    case ModelKind::CEMH: {
      const auto& g = std::get<GroupedScalars>(model.params);
      if (!ae && !row.last_deal_price)
        throw NoRealizedPrice("CEMH needs a realized price; none yet in round " + std::to_string(row.round));
      double v = g.global;
      const auto it = g.values.find(key_for(row, g.use_feedback, g.use_price_rule, g.use_n));
      if (it != g.values.end()) {
        if (const double* hit = lookup_round(it->second, g.use_round ? row.round : 0)) v = *hit;
      }
      return ae ? clip_ae(v) : clip_cep(v * *row.last_deal_price);
    }

    case ModelKind::OBRLM:
    case ModelKind::GBT:
      if (!row.has_book()) throw MissingInput("orderbook");
      return predict_from_inputs(model, row, model_inputs(model, row));

    case ModelKind::TreatmentMean: {
      const double v = std::get<TreatmentMeans>(model.params).mean_for(treatment_label(row.treatment));
      return ae ? clip_ae(v) : clip_cep(v);
    }

    case ModelKind::BookMidpoint: {
      const auto& t = std::get<TreatmentMeans>(model.params);
      if (!row.bids && !row.asks) return t.mean_for(treatment_label(row.treatment));
      return baseline_book_midpoint(row, 0.0);
    }
  }
  throw ConfigError("unknown model kind");
}

std::vector<std::string> input_columns(const FittedModel& model) {
  if (const auto* g = std::get_if<GroupedLinear>(&model.params)) return g->columns;
  if (const auto* g = std::get_if<GbtModel>(&model.params)) return g->columns;
  return {};
}

std::vector<double> model_inputs(const FittedModel& model, const FeatureRow& row) {
  if (model.kind == ModelKind::GBT) return gbt_inputs(row, model.mask);
  if (model.kind == ModelKind::OBRLM) {
    auto x = obrlm_design_row(row, model.target, model.mask);
    if (std::get<GroupedLinear>(model.params).intercept) x.erase(x.begin());
    return x;
  }
  return {};
}

double predict_from_inputs(const FittedModel& model, const FeatureRow& row, std::span<const double> inputs) {
  const bool ae = model.target == TargetKind::AE;
  if (model.kind == ModelKind::GBT) {
    const double v = std::get<GbtModel>(model.params).ensemble.predict(inputs);
    if (ae) return clip_ae(v);
    if (!row.norm) throw MissingInput("normalization constants");
    return clip_cep(denormalize(v, *row.norm));
  }
  if (model.kind != ModelKind::OBRLM) throw ConfigError("model has no named inputs");
  const auto& g = std::get<GroupedLinear>(model.params);
  const std::vector<double>* coef = &g.global;
  const auto it = g.coef.find(key_for(row, g.use_feedback, false, false));
  if (it != g.coef.end()) {
    if (const auto* hit = lookup_round(it->second, row.round)) coef = hit;
  }
  const std::size_t offset = g.intercept ? 1 : 0;
  double v = g.intercept ? (*coef)[0] : 0.0;
  for (std::size_t j = 0; j < inputs.size(); ++j) v += (*coef)[j + offset] * inputs[j];
  return ae ? clip_ae(v) : clip_cep(v);
}

std::optional<double> try_predict(const FittedModel& model, const FeatureRow& row) {
  try {
    return predict(model, row);
  } catch (const NoRealizedPrice&) {
    return std::nullopt;
  } catch (const MissingInput&) {
    return std::nullopt;
  }
}

}  // namespace cda
