#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bargain/event_log.hpp"
#include "bargain/params.hpp"
#include "bargain/stats.hpp"

namespace bargain {

// Listing-level view of an event log.
struct ObservedArrival {
  double time = 0.0;
  double gap = -1.0;  // time available since the previous observed arrival; <0 for the first
  char action = 'D';  // 'A', 'N' (committed offer), 'S' (noncommitted offer), 'D'
};

struct OfferRecord {
  double offer_time = 0.0;
  double price = 0.0;
  bool committed = false;
  std::optional<double> accepted_at;
  std::optional<double> purchased_at;   // by the offering buyer
  std::optional<double> walked_at;
};

struct ListingRecord {
  std::uint64_t id = 0;
  double p0 = 0.0;
  double end = 0.0;  // sale time, else horizon, else last event
  bool sold = false;
  double sale_time = 0.0;
  double sale_price = 0.0;
  std::vector<ObservedArrival> arrivals;
  std::vector<double> likes;
  std::vector<OfferRecord> offers;
  std::vector<std::pair<double, double>> negotiations;  // [offer, resolution) spells
  std::vector<std::pair<double, bool>> walkaways;       // time, followed by an exogenous sale
  std::vector<double> exogenous_sales;
};

std::vector<ListingRecord> listing_records(const EventLog& log);

struct EstimatorOptions {
  double exposure_cap = 30.0;       // days
  double kappa_window = 1.5;        // days
  double min_interval = 10.0 / 1440.0;
  int price_bins = 50;
  double band_lo = 0.001;
  double band_hi = 0.05;
  double mu_bound = 1e6;            // |mu_B| search range, yen
  double sigma_lo = 1.0, sigma_hi = 1e6;
};

// Arrivals and likes per day of exposure, ratio of totals. Exposure runs from
// listing to sale or horizon, capped, and omits negotiation spells during which
// the listing receives no arrivals. Arrivals after the cap are not counted.
double estimate_lambda_S(std::span<const ListingRecord> listings, double cap = 30.0);

// 2 / mean delay from committed offer to purchase.
double estimate_lambda_R(std::span<const ListingRecord> listings);

double estimate_lambda_B(double lambda_S, long N_S, long N_B);

struct KappaEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
// Share of walkaways from accepted noncommitted offers followed by an
// exogenous sale within the window.
KappaEstimate calibrate_kappa(std::span<const ListingRecord> listings, double window = 1.5);

// Probability that an arrival is observed, q(p0) = 1 / (E[T_obs | p0] lambda_S).
struct SelectionCurve {
  ConditionalCurve log_gap;  // E[log T_obs | p0]
  double smearing = 1.0;
  std::vector<double> q;     // at log_gap.x
  std::size_t intervals = 0;
  std::size_t dropped_short = 0;

  double q_at(double p0) const;
};
SelectionCurve selection_correction(std::span<const ListingRecord> listings, double lambda_S,
                                    const EstimatorOptions& opt = {});

// Unconditional action probabilities by list price, corrected for unobserved declines.
struct ChoiceCurves {
  std::vector<double> x;  // distinct list prices
  std::vector<double> p_A, p_CN, p_CS, p_D;
  ConditionalCurve obs_A, obs_CN, obs_CS;
};
ChoiceCurves choice_probabilities(std::span<const ListingRecord> listings, const SelectionCurve& sel);

// E[p1N | p0] from committed offers, evaluated at the distinct list prices.
ConditionalCurve committed_offer_curve(std::span<const ListingRecord> listings);

// Buyer indifferent between accepting p0 and a committed offer at p1N.
double tau_accept_commit(double p0, double p1N, double delta_R);

// Seller value implied by the discounted sale moments and the committed offer.
// Returns nullopt when the denominator is within 1e-6 of zero.
std::optional<double> pseudovalue(double disc_net_price, double disc, double p1N, double delta_R, double t);

struct FSEstimate {
  ValueDistribution F_S = ValueDistribution::empirical({0.0});
  std::vector<double> pseudovalues;      // one per listing kept
  ConditionalCurve disc_price, disc;     // E[e^{-rT}(1-t)p | p0], E[e^{-rT} | p0]
  std::vector<double> s_at_x;            // pseudovalue at disc.x (NaN when dropped)
  std::size_t dropped = 0;
};
FSEstimate estimate_F_S(std::span<const ListingRecord> listings, const ConditionalCurve& p1N,
                        double lambda_R, double r, double t);

struct NormalFit {
  double mu = 0.0;
  double sigma = 1.0;
  double sse = 0.0;
};
// Least-squares fit of Phi((tau - mu) / sigma) to target, weighted.
NormalFit fit_normal_cdf(std::span<const double> tau, std::span<const double> target,
                         std::span<const double> weight, const EstimatorOptions& opt = {});

struct FBEstimate {
  NormalFit fit;
  std::vector<double> tau_ac;  // at choices.x
};
FBEstimate estimate_F_B(std::span<const ListingRecord> listings, const ChoiceCurves& choices,
                        const ConditionalCurve& p1N, double lambda_R, double r,
                        const EstimatorOptions& opt = {});

struct SearchCostEstimate {
  double c = 0.0;
  double numerator = 0.0;    // integral of the discounted surplus gap
  double denominator = 0.0;  // integral of E[1 - e^{-rT}]
  int bins_used = 0;
  int bins_skipped = 0;
  std::size_t subsample = 0;
  std::vector<double> tau_ns;  // at choices.x
  ConditionalCurve disc_surplus, disc_gap;
};
SearchCostEstimate estimate_search_cost(std::span<const ListingRecord> listings, const ChoiceCurves& choices,
                                        const ConditionalCurve& p1N, const NormalFit& F_B,
                                        double lambda_R, double r, const EstimatorOptions& opt = {});

// Calibrated inputs the pipeline does not estimate.
struct CalibratedInputs {
  double r = 0.05;
  double t = 0.10;
  long N_S = 4545;
  long N_B = 4056;
};

struct EstimationResult {
  double lambda_R = 0.0, lambda_S = 0.0, lambda_B = 0.0;
  KappaEstimate kappa;
  ValueDistribution F_S = ValueDistribution::empirical({0.0});
  double mu_B = 0.0, sigma_B = 0.0;
  double c = 0.0;
  CalibratedInputs inputs;

  std::size_t listings = 0;
  SelectionCurve selection;
  ChoiceCurves choices;
  ConditionalCurve p1N;
  FSEstimate fs;
  FBEstimate fb;
  SearchCostEstimate search;

  double c_over_median_buyer() const { return c / mu_B; }
  // Structural parameters with the estimated F_S and normal F_B.
  ModelParams to_params(const ModelParams& calibrated) const;
};

EstimationResult estimate_all(const EventLog& log, const CalibratedInputs& in,
                              const EstimatorOptions& opt = {});

std::string estimation_json(const EstimationResult& res, const std::string& config_hash);
void write_estimation_diagnostics_csv(std::ostream& out, const EstimationResult& res);

}  // namespace bargain
