#include "cda/corpus.hpp"

#include <map>
#include <set>

#include "cda/errors.hpp"

namespace cda {

const std::vector<std::string> kEventsHeader{"market_id", "round", "time", "actor_id", "side", "price"};
const std::vector<std::string> kDealsHeader{"market_id", "round",       "time",        "buyer_id",
                                            "seller_id", "price",       "buyer_price", "seller_price"};
const std::vector<std::string> kValuationsHeader{"market_id", "actor_id", "side", "reservation_value"};
const std::vector<std::string> kTreatmentsHeader{"market_id", "feedback_setting", "price_rule"};

std::string_view to_string(Provenance p) { return p == Provenance::Synthetic ? "synthetic" : "ingested"; }

CorpusPaths CorpusPaths::in(const std::filesystem::path& dir) {
  CorpusPaths p{dir / "events.csv", dir / "deals.csv", dir / "valuations.csv", dir / "treatments.csv"};
  if (!std::filesystem::exists(p.valuations)) p.valuations.clear();
  return p;
}

namespace {

Side parse_side(const CsvTable& t, const CsvRow& row, std::size_t col) {
  const auto& s = row.fields.at(col);
  if (s == "B") return Side::Bid;
  if (s == "S") return Side::Ask;
  throw SchemaError(t.where(row) + ": column 'side' expects B or S, got '" + s + "'");
}

int parse_round(const CsvTable& t, const CsvRow& row) {
  const auto r = field_int(t, row, 1);
  if (r < 1) throw SchemaError(t.where(row) + ": round must be at least 1");
  return static_cast<int>(r);
}

void require_id(const CsvTable& t, const CsvRow& row, std::size_t col) {
  if (row.fields.at(col).empty()) throw SchemaError(t.where(row) + ": empty '" + t.header.at(col) + "'");
}

struct Builder {
  std::map<int, RoundLog> rounds;
  std::map<int, double> last_time;  // monotonicity of events per round
  std::map<int, double> last_deal_time;
  std::set<TraderId> actors;
  std::map<TraderId, Side> sides;
};

void skip(IngestReport& report, const IngestOptions& options, const std::string& note) {
  if (options.strict) throw IntegrityError(note + " (strict mode)");
  ++report.skipped_rows;
  report.notes.push_back(note);
}

}  // namespace

Corpus ingest(const CorpusPaths& paths, const IngestOptions& options, IngestReport* report_out) {
  IngestReport report;
  Corpus corpus;
  corpus.provenance = Provenance::Ingested;

  std::vector<std::string> order;
  std::map<std::string, Builder> markets;

  auto count_blank = [&](const CsvTable& t) {
    if (t.blank_lines) skip(report, options, t.path.string() + ": " + std::to_string(t.blank_lines) + " blank line(s)");
  };

  const auto events = read_csv(paths.events, kEventsHeader);
  count_blank(events);
  for (const auto& row : events.rows) {
    for (std::size_t c : {0u, 3u}) require_id(events, row, c);
    const auto& id = row.fields[0];
    auto [it, inserted] = markets.try_emplace(id);
    if (inserted) order.push_back(id);
    auto& b = it->second;
    OrderEvent e;
    e.round = parse_round(events, row);
    e.time = field_double(events, row, 2);
    e.actor_id = row.fields[3];
    e.side = parse_side(events, row, 4);
    e.price = field_double(events, row, 5);
    if (auto lt = b.last_time.find(e.round); lt != b.last_time.end() && e.time < lt->second)
      throw IntegrityError(events.where(row) + ": time " + row.fields[2] + " precedes the previous event of round " +
                           std::to_string(e.round));
    b.last_time[e.round] = e.time;
    if (auto [s, fresh] = b.sides.emplace(e.actor_id, e.side); !fresh && s->second != e.side)
      throw IntegrityError(events.where(row) + ": trader '" + e.actor_id + "' quotes on both sides");
    b.actors.insert(e.actor_id);
    auto& round = b.rounds[e.round];
    round.round = e.round;
    round.active_traders.insert(e.actor_id);
    round.events.push_back(std::move(e));
  }

  const auto deals = read_csv(paths.deals, kDealsHeader);
  count_blank(deals);
  for (const auto& row : deals.rows) {
    for (std::size_t c : {0u, 3u, 4u}) require_id(deals, row, c);
    const auto it = markets.find(row.fields[0]);
    if (it == markets.end())
      throw IntegrityError(deals.where(row) + ": deal in market '" + row.fields[0] + "' which has no events");
    auto& b = it->second;
    Deal d;
    d.round = parse_round(deals, row);
    d.time = field_double(deals, row, 2);
    d.buyer_id = row.fields[3];
    d.seller_id = row.fields[4];
    d.price = field_double(deals, row, 5);
    d.buyer_price = field_double(deals, row, 6);
    d.seller_price = field_double(deals, row, 7);
    for (const auto& [who, side] : {std::pair{&d.buyer_id, Side::Bid}, std::pair{&d.seller_id, Side::Ask}}) {
      const auto s = b.sides.find(*who);
      if (s == b.sides.end())
        throw IntegrityError(deals.where(row) + ": unknown " + (side == Side::Bid ? "buyer" : "seller") + " '" +
                             *who + "'");
      if (s->second != side)
        throw IntegrityError(deals.where(row) + ": trader '" + *who + "' trades on the wrong side");
    }
    if (auto lt = b.last_deal_time.find(d.round); lt != b.last_deal_time.end() && d.time < lt->second)
      throw IntegrityError(deals.where(row) + ": time " + row.fields[2] + " precedes the previous deal of round " +
                           std::to_string(d.round));
    b.last_deal_time[d.round] = d.time;
    auto& round = b.rounds[d.round];
    round.round = d.round;
    round.deals.push_back(std::move(d));
  }

  std::map<std::string, ReservationProfile> profiles;
  if (!paths.valuations.empty()) {
    const auto vals = read_csv(paths.valuations, kValuationsHeader);
    count_blank(vals);
    std::map<std::string, std::set<TraderId>> seen;
    for (const auto& row : vals.rows) {
      for (std::size_t c : {0u, 1u}) require_id(vals, row, c);
      const auto it = markets.find(row.fields[0]);
      if (it == markets.end()) {
        skip(report, options, vals.where(row) + ": valuation for market '" + row.fields[0] + "' without events");
        continue;
      }
      const auto side = parse_side(vals, row, 2);
      if (!seen[row.fields[0]].insert(row.fields[1]).second)
        throw IntegrityError(vals.where(row) + ": duplicate valuation for trader '" + row.fields[1] + "'");
      if (auto s = it->second.sides.find(row.fields[1]); s != it->second.sides.end() && s->second != side)
        throw IntegrityError(vals.where(row) + ": trader '" + row.fields[1] + "' has a valuation on the other side");
      auto& profile = profiles[row.fields[0]];
      (side == Side::Bid ? profile.buyers : profile.sellers).push_back({row.fields[1], field_double(vals, row, 3)});
    }
    for (const auto& [id, b] : markets) {
      const auto p = profiles.find(id);
      if (p == profiles.end()) continue;
      for (const auto& actor : b.actors)
        if (!seen[id].contains(actor))
          throw IntegrityError(paths.valuations.string() + ": no valuation for trader '" + actor + "' of market '" +
                               id + "'");
    }
  }

  std::map<std::string, std::pair<FeedbackSetting, PriceRule>> treatments;
  const auto treat = read_csv(paths.treatments, kTreatmentsHeader);
  count_blank(treat);
  for (const auto& row : treat.rows) {
    require_id(treat, row, 0);
    if (!markets.contains(row.fields[0])) {
      skip(report, options, treat.where(row) + ": treatment for market '" + row.fields[0] + "' without events");
      continue;
    }
    std::pair<FeedbackSetting, PriceRule> value;
    try {
      value = {parse_feedback(row.fields[1]), parse_price_rule(row.fields[2])};
    } catch (const Error& e) {
      throw SchemaError(treat.where(row) + ": " + e.what());
    }
    if (!treatments.emplace(row.fields[0], value).second)
      throw IntegrityError(treat.where(row) + ": duplicate treatment for market '" + row.fields[0] + "'");
  }

  for (const auto& id : order) {
    auto& b = markets.at(id);
    const auto t = treatments.find(id);
    if (t == treatments.end()) throw IntegrityError(paths.treatments.string() + ": no treatment for market '" + id + "'");
    MarketLog log;
    log.market_id = id;
    if (auto p = profiles.find(id); p != profiles.end()) log.profile = std::move(p->second);
    for (auto& [r, round] : b.rounds) {
      for (const auto& d : round.deals) {
        round.active_traders.insert(d.buyer_id);
        round.active_traders.insert(d.seller_id);
      }
      if (log.profile) {
        for (const auto& v : log.profile->buyers) round.active_traders.insert(v.id);
        for (const auto& v : log.profile->sellers) round.active_traders.insert(v.id);
      }
      log.rounds.push_back(std::move(round));
    }
    log.treatment = {t->second.first, t->second.second, size_class_for(log.rounds.front().active_traders.size())};
    corpus.markets.push_back(std::move(log));
  }
  if (report_out) *report_out = std::move(report);
  return corpus;
}

void export_corpus(const Corpus& corpus, const std::filesystem::path& dir, const FileMeta& meta) {
  CsvWriter events(meta, kEventsHeader), deals(meta, kDealsHeader), vals(meta, kValuationsHeader),
      treat(meta, kTreatmentsHeader);
  bool any_profile = false;
  for (const auto& m : corpus.markets) {
    treat.row({m.market_id, std::string(to_string(m.treatment.feedback)), std::string(to_string(m.treatment.price_rule))});
    for (const auto& r : m.rounds) {
      for (const auto& e : r.events)
        events.row({m.market_id, std::to_string(r.round), format_double(e.time), e.actor_id,
                    e.side == Side::Bid ? "B" : "S", format_double(e.price)});
      for (const auto& d : r.deals)
        deals.row({m.market_id, std::to_string(r.round), format_double(d.time), d.buyer_id, d.seller_id,
                   format_double(d.price), format_double(d.buyer_price), format_double(d.seller_price)});
    }
    if (m.profile) {
      any_profile = true;
      for (const auto& v : m.profile->buyers) vals.row({m.market_id, v.id, "B", format_double(v.value)});
      for (const auto& v : m.profile->sellers) vals.row({m.market_id, v.id, "S", format_double(v.value)});
    }
  }
  events.save(dir / "events.csv");
  deals.save(dir / "deals.csv");
  treat.save(dir / "treatments.csv");
  if (any_profile) vals.save(dir / "valuations.csv");
  else std::filesystem::remove(dir / "valuations.csv");
}

}  // namespace cda
