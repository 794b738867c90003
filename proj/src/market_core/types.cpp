#include "cda/types.hpp"

#include <algorithm>

#include "cda/errors.hpp"

namespace cda {

std::string_view to_string(FeedbackSetting f) {
  switch (f) {
    case FeedbackSetting::BlackBox: return "BlackBox";
    case FeedbackSetting::Full: return "Full";
    case FeedbackSetting::Same: return "Same";
    case FeedbackSetting::Other: return "Other";
  }
  return "?";
}

std::string_view to_string(PriceRule r) {
  switch (r) {
    case PriceRule::First: return "First";
    case PriceRule::Random: return "Random";
    case PriceRule::MMK: return "MMK";
  }
  return "?";
}

std::string_view to_string(SizeClass s) { return s == SizeClass::Large ? "Large" : "Small"; }

FeedbackSetting parse_feedback(std::string_view s) {
  if (s == "BlackBox" || s == "BB" || s == "Black Box") return FeedbackSetting::BlackBox;
  if (s == "Full") return FeedbackSetting::Full;
  if (s == "Same") return FeedbackSetting::Same;
  if (s == "Other") return FeedbackSetting::Other;
  throw SchemaError("unknown feedback setting '" + std::string(s) + "'");
}

PriceRule parse_price_rule(std::string_view s) {
  if (s == "First") return PriceRule::First;
  if (s == "Random") return PriceRule::Random;
  if (s == "MMK") return PriceRule::MMK;
  throw SchemaError("unknown price rule '" + std::string(s) + "'");
}

SizeClass parse_size_class(std::string_view s) {
  if (s == "Small") return SizeClass::Small;
  if (s == "Large") return SizeClass::Large;
  throw SchemaError("unknown size class '" + std::string(s) + "'");
}

std::string treatment_label(const Treatment& t) {
  std::string out(to_string(t.feedback));
  out += '/';
  out += to_string(t.price_rule);
  out += '/';
  out += to_string(t.size);
  return out;
}

ReservationProfile ReservationProfile::from_values(const std::vector<Money>& budgets,
                                                   const std::vector<Money>& costs) {
  ReservationProfile p;
  for (std::size_t i = 0; i < budgets.size(); ++i)
    p.buyers.push_back({"B" + std::to_string(i + 1), budgets[i]});
  for (std::size_t j = 0; j < costs.size(); ++j)
    p.sellers.push_back({"S" + std::to_string(j + 1), costs[j]});
  return p;
}

std::vector<Money> ReservationProfile::buyer_budgets() const {
  std::vector<Money> out;
  out.reserve(buyers.size());
  for (const auto& b : buyers) out.push_back(b.value);
  return out;
}

std::vector<Money> ReservationProfile::seller_costs() const {
  std::vector<Money> out;
  out.reserve(sellers.size());
  for (const auto& s : sellers) out.push_back(s.value);
  return out;
}

ReservationProfile ReservationProfile::restricted_to(const std::set<TraderId>& ids) const {
  if (ids.empty()) return *this;
  ReservationProfile out;
  for (const auto& b : buyers)
    if (ids.contains(b.id)) out.buyers.push_back(b);
  for (const auto& s : sellers)
    if (ids.contains(s.id)) out.sellers.push_back(s);
  return out;
}

ReservationProfile ReservationProfile::scaled(double factor) const {
  ReservationProfile out = *this;
  for (auto& b : out.buyers) b.value *= factor;
  for (auto& s : out.sellers) s.value *= factor;
  return out;
}

MarketLog MarketLog::scaled(double factor) const {
  MarketLog out = *this;
  for (auto& r : out.rounds) {
    for (auto& e : r.events) e.price *= factor;
    for (auto& d : r.deals) {
      d.price *= factor;
      d.buyer_price *= factor;
      d.seller_price *= factor;
    }
  }
  if (out.profile) out.profile = out.profile->scaled(factor);
  return out;
}

bool operator==(const Valuation& a, const Valuation& b) { return a.id == b.id && a.value == b.value; }

bool operator==(const ReservationProfile& a, const ReservationProfile& b) {
  return a.buyers == b.buyers && a.sellers == b.sellers;
}

bool operator==(const MarketLog& a, const MarketLog& b) {
  return a.market_id == b.market_id && a.treatment == b.treatment && a.rounds == b.rounds &&
         a.profile == b.profile;
}

}  // namespace cda
