#include "bargain/event_log.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "bargain/io.hpp"

namespace bargain {
namespace {

constexpr std::array<std::string_view, 10> kKindNames = {
    "List", "Arrival", "Like", "Offer", "Accept",
    "Decline", "Purchase", "Walkaway", "ExogenousSale", "PriceChange"};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  return value;
}

}  // namespace

std::string_view event_kind_name(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  return std::nullopt;
}

void SimOptions::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ValidationError("sim.horizon must be positive and finite");
  if (!(q_D_obs >= 0.0 && q_D_obs <= 1.0)) throw ValidationError("sim.q_D_obs must lie in [0,1]");
}

double EventLog::horizon() const {
  return options ? options->horizon : std::numeric_limits<double>::infinity();
}

void write_event_csv(std::ostream& out, const EventLog& log) {
  out << kEventCsvHeader << '\n';
  for (const auto& e : log.events) {
    out << e.listing_id << ',' << format_double(e.time) << ',' << event_kind_name(e.kind) << ',';
    if (e.buyer_id) out << *e.buyer_id;
    out << ',';
    if (e.price) out << format_double(*e.price);
    out << ',';
    if (e.committed) out << (*e.committed ? '1' : '0');
    out << '\n';
  }
}

EventLog read_event_csv(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEventCsvHeader) throw ParseError(line_no, "unexpected header '" + line + "'");

  std::uint64_t listings = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_commas(line);
    if (f.size() != 6)
      throw ParseError(line_no, "expected 6 fields, found " + std::to_string(f.size()));
    Event e;
    e.listing_id = parse_number<std::uint64_t>(f[0], line_no, "listing_id");
    e.time = parse_number<double>(f[1], line_no, "event_time");
    if (!std::isfinite(e.time) || e.time < 0.0) throw ParseError(line_no, "negative or non-finite event_time");
    auto kind = parse_event_kind(f[2]);
    if (!kind) throw ParseError(line_no, "unknown event_kind '" + std::string(f[2]) + "'");
    e.kind = *kind;
    if (!f[3].empty()) e.buyer_id = parse_number<std::uint64_t>(f[3], line_no, "buyer_id");
    if (!f[4].empty()) e.price = parse_number<double>(f[4], line_no, "price");
    if (f[5] == "1") e.committed = true;
    else if (f[5] == "0") e.committed = false;
    else if (!f[5].empty()) throw ParseError(line_no, "committed_flag must be 0, 1 or empty");
    if (e.kind == EventKind::List) ++listings;
    log.events.push_back(e);
  }
  log.n_listings = listings;
  return log;
}

std::string event_sidecar_json(const EventLog& log, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["schema"] = "bargainlab.event_log";
  j["schema_version"] = kEventLogSchemaVersion;
  j["config_hash"] = config_hash;
  j["n_listings"] = log.n_listings;
  if (log.options) j["sim"] = sim_options_to_json(*log.options);
  if (log.true_params) j["true_params"] = params_to_json(*log.true_params);
  j["seller_value_hidden"] = log.seller_value_hidden;
  return j.dump(2) + "\n";
}

void apply_event_sidecar(EventLog& log, std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError(std::string("event sidecar: ") + err.what());
  }
  check_schema(j, "bargainlab.event_log", kEventLogSchemaVersion);
  if (j.contains("sim")) log.options = sim_options_from_json(j["sim"]);
  if (j.contains("true_params")) log.true_params = params_from_json(j["true_params"]);
  log.seller_value_hidden = j.value("seller_value_hidden", std::vector<double>{});
  const auto n = j.value("n_listings", log.n_listings);
  if (n != log.n_listings)
    throw ValidationError("event sidecar lists " + std::to_string(n) + " listings, CSV has " +
                          std::to_string(log.n_listings));
}

void check_event_log(const EventLog& log) {
  auto fail = [](std::uint64_t id, const std::string& what) {
    throw InvariantViolation("listing " + std::to_string(id) + ": " + what);
  };
  std::size_t k = 0;
  const auto& ev = log.events;
  while (k < ev.size()) {
    const auto id = ev[k].listing_id;
    if (ev[k].kind != EventKind::List || ev[k].time != 0.0) fail(id, "must open with List at time 0");
    std::map<std::uint64_t, std::pair<int, bool>> offers;  // buyer -> (open offers, committed)
    bool terminated = false;
    double last = 0.0;
    for (++k; k < ev.size() && ev[k].listing_id == id; ++k) {
      const auto& e = ev[k];
      if (e.kind == EventKind::List) fail(id, "second List event");
      if (e.time < last) fail(id, "event times decrease");
      if (terminated) fail(id, "event after the listing sold");
      last = e.time;
      switch (e.kind) {
        case EventKind::Offer:
          if (!e.buyer_id || !e.committed) fail(id, "Offer without buyer or committed flag");
          offers[*e.buyer_id] = {1, *e.committed};
          break;
        case EventKind::Accept: {
          if (!e.buyer_id) fail(id, "Accept without buyer");
          auto it = offers.find(*e.buyer_id);
          if (it == offers.end() || it->second.first != 1) fail(id, "Accept without a matching Offer");
          it->second.first = 0;
          break;
        }
        case EventKind::Walkaway: {
          auto it = e.buyer_id ? offers.find(*e.buyer_id) : offers.end();
          if (it != offers.end() && it->second.second) fail(id, "walkaway from a committed offer");
          break;
        }
        case EventKind::Purchase:
        case EventKind::ExogenousSale:
          terminated = true;
          break;
        default:
          break;
      }
    }
  }
}

}  // namespace bargain
