#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bargain/params.hpp"

namespace bargain {

inline constexpr int kEventLogSchemaVersion = 1;

enum class EventKind : std::uint8_t {
  List,
  Arrival,
  Like,
  Offer,
  Accept,
  Decline,
  Purchase,
  Walkaway,
  ExogenousSale,
  PriceChange,
};

std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct Event {
  std::uint64_t listing_id = 0;
  double time = 0.0;  // days since listing
  EventKind kind = EventKind::List;
  std::optional<std::uint64_t> buyer_id;
  std::optional<double> price;
  std::optional<bool> committed;  // set on Offer and Accept

  bool operator==(const Event&) const = default;
};

struct SimOptions {
  std::uint64_t n_listings = 10000;
  double horizon = 365.0;  // days
  std::uint64_t seed = 1;
  double q_D_obs = 0.5;    // chance a declining buyer leaves a visible trace

  void validate() const;
};

// Events sorted by (listing_id, time, emission order). The hidden seller
// values and the generating options travel in a sidecar, never in the CSV.
struct EventLog {
  std::vector<Event> events;
  std::vector<double> seller_value_hidden;  // per listing, empty when unknown
  std::optional<SimOptions> options;
  std::optional<ModelParams> true_params;
  std::uint64_t n_listings = 0;

  // Horizon used for censored listings; +inf when unknown.
  double horizon() const;
};

// Error with the 1-based line number of the offending CSV row.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kEventCsvHeader =
    "listing_id,event_time,event_kind,buyer_id,price,committed_flag";

void write_event_csv(std::ostream& out, const EventLog& log);
EventLog read_event_csv(std::istream& in);

// Sidecar JSON: schema version, SimOptions, true parameters, hidden values.
std::string event_sidecar_json(const EventLog& log, const std::string& config_hash);
// Merges a sidecar into a log read from CSV.
void apply_event_sidecar(EventLog& log, std::string_view json_text);

// Checks the per-listing ordering and offer/accept invariants. Throws
// InvariantViolation on the first failure.
void check_event_log(const EventLog& log);

}  // namespace bargain
