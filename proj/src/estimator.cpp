#include "bargain/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "bargain/io.hpp"

namespace bargain {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) { return ValueDistribution::normal(0.0, 1.0).quantile(p); }

// Distinct list prices with the number of listings at each.
struct PriceSupport {
  std::vector<double> x;
  std::vector<double> count;
};

PriceSupport price_support(std::span<const ListingRecord> listings) {
  std::map<double, double> m;
  for (const auto& l : listings) m[l.p0] += 1.0;
  PriceSupport s;
  for (auto [p, n] : m) {
    s.x.push_back(p);
    s.count.push_back(n);
  }
  return s;
}

double overlap(std::pair<double, double> spell, double lo, double hi) {
  return std::max(0.0, std::min(spell.second, hi) - std::max(spell.first, lo));
}

}  // namespace

std::vector<ListingRecord> listing_records(const EventLog& log) {
  std::vector<ListingRecord> out;
  const auto& ev = log.events;
  const double horizon = log.horizon();
  std::size_t k = 0;
  while (k < ev.size()) {
    ListingRecord rec;
    rec.id = ev[k].listing_id;
    if (ev[k].kind != EventKind::List)
      throw ValidationError("listing " + std::to_string(rec.id) + " does not open with List");
    rec.p0 = ev[k].price.value_or(kNaN);
    if (!std::isfinite(rec.p0)) throw ValidationError("listing " + std::to_string(rec.id) + " has no list price");

    std::map<std::uint64_t, std::size_t> offer_of;  // buyer -> offer index
    double last_arrival = -1.0, available = 0.0, last_time = 0.0;
    std::size_t m = k + 1;
    for (; m < ev.size() && ev[m].listing_id == rec.id; ++m) {
      const auto& e = ev[m];
      last_time = e.time;
      auto offer_for = [&]() -> OfferRecord* {
        if (!e.buyer_id) return nullptr;
        auto it = offer_of.find(*e.buyer_id);
        return it == offer_of.end() ? nullptr : &rec.offers[it->second];
      };
      switch (e.kind) {
        case EventKind::Arrival: {
          ObservedArrival a;
          a.time = e.time;
          if (last_arrival >= 0.0) a.gap = e.time - std::max(last_arrival, available);
          const bool has_next = m + 1 < ev.size() && ev[m + 1].listing_id == rec.id;
          if (has_next) {
            const auto& next = ev[m + 1];
            if (next.kind == EventKind::Purchase && next.buyer_id == e.buyer_id) a.action = 'A';
            else if (next.kind == EventKind::Offer) a.action = next.committed.value_or(false) ? 'N' : 'S';
          }
          rec.arrivals.push_back(a);
          last_arrival = e.time;
          break;
        }
        case EventKind::Like:
          rec.likes.push_back(e.time);
          break;
        case EventKind::Offer: {
          OfferRecord o;
          o.offer_time = e.time;
          o.price = e.price.value_or(kNaN);
          o.committed = e.committed.value_or(false);
          if (e.buyer_id) offer_of[*e.buyer_id] = rec.offers.size();
          rec.offers.push_back(o);
          break;
        }
        case EventKind::Accept:
          if (auto* o = offer_for()) o->accepted_at = e.time;
          break;
        case EventKind::Walkaway:
          if (auto* o = offer_for()) o->walked_at = e.time;
          rec.walkaways.emplace_back(e.time, false);
          available = e.time;
          break;
        case EventKind::ExogenousSale:
          rec.exogenous_sales.push_back(e.time);
          rec.sold = true;
          rec.sale_time = e.time;
          rec.sale_price = e.price.value_or(kNaN);
          break;
        case EventKind::Purchase:
          if (auto* o = offer_for()) o->purchased_at = e.time;
          rec.sold = true;
          rec.sale_time = e.time;
          rec.sale_price = e.price.value_or(kNaN);
          break;
        default:
          break;
      }
    }
    rec.end = rec.sold ? rec.sale_time : (std::isfinite(horizon) ? horizon : last_time);
    for (const auto& o : rec.offers) {
      double resolved = rec.end;
      if (o.purchased_at) resolved = *o.purchased_at;
      if (o.walked_at) resolved = *o.walked_at;
      rec.negotiations.emplace_back(o.offer_time, resolved);
    }
    for (auto& w : rec.walkaways)
      for (double t : rec.exogenous_sales)
        if (t >= w.first) w.second = true;
    out.push_back(std::move(rec));
    k = m;
  }
  return out;
}

double estimate_lambda_S(std::span<const ListingRecord> listings, double cap) {
  double arrivals = 0.0, exposure = 0.0;
  for (const auto& l : listings) {
    const double until = std::min(l.end, cap);
    double e = until;
    for (const auto& spell : l.negotiations) e -= overlap(spell, 0.0, until);
    exposure += std::max(0.0, e);
    for (const auto& a : l.arrivals)
      if (a.time <= until) arrivals += 1.0;
    for (double t : l.likes)
      if (t <= until) arrivals += 1.0;
  }
  if (!(exposure > 0.0)) throw ValidationError("estimate_lambda_S: zero exposure");
  return arrivals / exposure;
}

double estimate_lambda_R(std::span<const ListingRecord> listings) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : listings)
    for (const auto& o : l.offers)
      if (o.committed && o.purchased_at) {
        sum += *o.purchased_at - o.offer_time;
        ++n;
      }
  if (n == 0) throw ValidationError("estimate_lambda_R: no completed committed offers");
  if (!(sum > 0.0)) throw ValidationError("estimate_lambda_R: committed delays are all zero");
  return 2.0 / (sum / static_cast<double>(n));
}

double estimate_lambda_B(double lambda_S, long N_S, long N_B) {
  if (N_B <= 0) throw ValidationError("estimate_lambda_B: N_B must be positive");
  return lambda_S * static_cast<double>(N_S) / static_cast<double>(N_B);
}

KappaEstimate calibrate_kappa(std::span<const ListingRecord> listings, double window) {
  KappaEstimate k;
  double hits = 0.0;
  for (const auto& l : listings)
    for (const auto& [t, _] : l.walkaways) {
      ++k.n;
      for (double s : l.exogenous_sales)
        if (s >= t && s - t <= window) {
          hits += 1.0;
          break;
        }
    }
  if (k.n == 0) throw ValidationError("calibrate_kappa: no walkaways from accepted noncommitted offers");
  const double n = static_cast<double>(k.n);
  k.value = hits / n;
  k.se = std::sqrt(k.value * (1.0 - k.value) / n);
  return k;
}

double SelectionCurve::q_at(double p0) const {
  ConditionalCurve c{log_gap.x, q, 0.0, {}};
  return c.at(p0);
}

SelectionCurve selection_correction(std::span<const ListingRecord> listings, double lambda_S,
                                    const EstimatorOptions& opt) {
  std::vector<double> x, y;
  SelectionCurve sel;
  for (const auto& l : listings)
    for (const auto& a : l.arrivals) {
      if (a.gap < 0.0) continue;
      if (a.gap < opt.min_interval) {
        ++sel.dropped_short;
        continue;
      }
      x.push_back(l.p0);
      y.push_back(std::log(a.gap));
    }
  sel.intervals = x.size();
  if (x.size() < 3) throw ValidationError("selection_correction: fewer than 3 usable arrival intervals");
  const auto support = price_support(listings);
  sel.log_gap = local_linear_regress(x, y, support.x);
  std::vector<double> resid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) resid[i] = y[i] - sel.log_gap.at(x[i]);
  sel.smearing = duan_smearing_factor(resid);
  sel.q.resize(support.x.size());
  for (std::size_t k = 0; k < support.x.size(); ++k) {
    const double mean_gap = std::exp(sel.log_gap.fitted[k]) * sel.smearing;
    sel.q[k] = std::clamp(1.0 / (mean_gap * lambda_S), 1e-9, 1.0);
  }
  return sel;
}

ChoiceCurves choice_probabilities(std::span<const ListingRecord> listings, const SelectionCurve& sel) {
  std::vector<double> x, a, n, s;
  for (const auto& l : listings)
    for (const auto& arr : l.arrivals) {
      x.push_back(l.p0);
      a.push_back(arr.action == 'A');
      n.push_back(arr.action == 'N');
      s.push_back(arr.action == 'S');
    }
  if (x.size() < 3) throw ValidationError("choice_probabilities: fewer than 3 observed arrivals");
  ChoiceCurves c;
  c.x = price_support(listings).x;
  c.obs_A = local_linear_regress(x, a, c.x);
  c.obs_CN = local_linear_regress(x, n, c.x);
  c.obs_CS = local_linear_regress(x, s, c.x);
  for (std::size_t k = 0; k < c.x.size(); ++k) {
    const double q = sel.q_at(c.x[k]);
    const double pa = std::clamp(q * c.obs_A.fitted[k], 0.0, 1.0);
    const double pn = std::clamp(q * c.obs_CN.fitted[k], 0.0, 1.0 - pa);
    const double ps = std::clamp(q * c.obs_CS.fitted[k], 0.0, 1.0 - pa - pn);
    c.p_A.push_back(pa);
    c.p_CN.push_back(pn);
    c.p_CS.push_back(ps);
    c.p_D.push_back(1.0 - pa - pn - ps);
  }
  return c;
}

ConditionalCurve committed_offer_curve(std::span<const ListingRecord> listings) {
  std::vector<double> x, y;
  for (const auto& l : listings)
    for (const auto& o : l.offers)
      if (o.committed) {
        x.push_back(l.p0);
        y.push_back(o.price);
      }
  if (x.size() < 3) throw ValidationError("committed_offer_curve: fewer than 3 committed offers");
  return local_linear_regress(x, y, price_support(listings).x);
}

double tau_accept_commit(double p0, double p1N, double delta_R) {
  const double d2 = delta_R * delta_R;
  return (p0 - d2 * p1N) / (1.0 - d2);
}

std::optional<double> pseudovalue(double disc_net_price, double disc, double p1N, double delta_R, double t) {
  const double den = disc - delta_R;
  if (std::abs(den) < 1e-6) return std::nullopt;
  return (disc_net_price - delta_R * (1.0 - t) * p1N) / den;
}

FSEstimate estimate_F_S(std::span<const ListingRecord> listings, const ConditionalCurve& p1N,
                        double lambda_R, double r, double t) {
  std::vector<double> x, y1, y2;
  for (const auto& l : listings) {
    const double d = l.sold ? std::exp(-r * l.sale_time) : 0.0;
    x.push_back(l.p0);
    y1.push_back(l.sold ? d * (1.0 - t) * l.sale_price : 0.0);
    y2.push_back(d);
  }
  const auto support = price_support(listings);
  FSEstimate fs;
  fs.disc_price = local_linear_regress(x, y1, support.x);
  fs.disc = local_linear_regress(x, y2, support.x, fs.disc_price.bandwidth);
  const double dR = lambda_R / (lambda_R + r);
  std::map<double, std::optional<double>> s_of;
  for (std::size_t k = 0; k < support.x.size(); ++k) {
    const auto s = pseudovalue(fs.disc_price.fitted[k], fs.disc.fitted[k], p1N.at(support.x[k]), dR, t);
    s_of[support.x[k]] = s;
    fs.s_at_x.push_back(s.value_or(kNaN));
  }
  for (const auto& l : listings) {
    const auto& s = s_of[l.p0];
    if (s) fs.pseudovalues.push_back(*s);
    else ++fs.dropped;
  }
  if (fs.pseudovalues.empty()) throw ValidationError("estimate_F_S: every pseudovalue was dropped");
  fs.F_S = ValueDistribution::empirical(fs.pseudovalues);
  return fs;
}

NormalFit fit_normal_cdf(std::span<const double> tau, std::span<const double> target,
                         std::span<const double> weight, const EstimatorOptions& opt) {
  if (tau.size() != target.size() || tau.size() != weight.size())
    throw ValidationError("fit_normal_cdf: input lengths differ");
  if (unique_sorted({tau.begin(), tau.end()}).size() < 2)
    throw ValidationError("fit_normal_cdf: needs at least 2 distinct points");
  auto sse = [&](double mu, double log_sigma) {
    const double sigma = std::exp(log_sigma);
    double s = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k) {
      const double e = target[k] - normal_cdf((tau[k] - mu) / sigma);
      s += weight[k] * e * e;
    }
    return s;
  };
  const double ls_lo = std::log(opt.sigma_lo), ls_hi = std::log(opt.sigma_hi);
  constexpr int kGrid = 400;
  const double dmu = 2.0 * opt.mu_bound / kGrid, dls = (ls_hi - ls_lo) / kGrid;
  double best_mu = 0.0, best_ls = ls_lo, best = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= kGrid; ++a)
    for (int b = 0; b <= kGrid; ++b) {
      const double mu = -opt.mu_bound + a * dmu, ls = ls_lo + b * dls;
      const double v = sse(mu, ls);
      if (v < best) {
        best = v;
        best_mu = mu;
        best_ls = ls;
      }
    }
  // coordinate descent with shrinking steps, kept inside the bounds
  double step_mu = dmu, step_ls = dls;
  while (step_mu > 1e-6 || step_ls > 1e-12) {
    bool moved = false;
    for (double cand : {best_mu - step_mu, best_mu + step_mu}) {
      if (std::abs(cand) > opt.mu_bound) continue;
      const double v = sse(cand, best_ls);
      if (v < best) {
        best = v;
        best_mu = cand;
        moved = true;
      }
    }
    for (double cand : {best_ls - step_ls, best_ls + step_ls}) {
      if (cand < ls_lo || cand > ls_hi) continue;
      const double v = sse(best_mu, cand);
      if (v < best) {
        best = v;
        best_ls = cand;
        moved = true;
      }
    }
    if (!moved) {
      step_mu *= 0.5;
      step_ls *= 0.5;
    }
  }
  return {best_mu, std::exp(best_ls), best};
}

FBEstimate estimate_F_B(std::span<const ListingRecord> listings, const ChoiceCurves& choices,
                        const ConditionalCurve& p1N, double lambda_R, double r, const EstimatorOptions& opt) {
  const auto support = price_support(listings);
  const double dR = lambda_R / (lambda_R + r);
  FBEstimate fb;
  std::vector<double> target;
  for (std::size_t k = 0; k < choices.x.size(); ++k) {
    fb.tau_ac.push_back(tau_accept_commit(choices.x[k], p1N.at(choices.x[k]), dR));
    target.push_back(1.0 - choices.p_A[k]);
  }
  fb.fit = fit_normal_cdf(fb.tau_ac, target, support.count, opt);
  return fb;
}

SearchCostEstimate estimate_search_cost(std::span<const ListingRecord> listings, const ChoiceCurves& choices,
                                        const ConditionalCurve& p1N, const NormalFit& F_B,
                                        double lambda_R, double r, const EstimatorOptions& opt) {
  SearchCostEstimate sc;
  for (std::size_t k = 0; k < choices.x.size(); ++k) {
    const double share = std::clamp(1.0 - choices.p_A[k] - choices.p_CN[k], 1e-9, 1.0 - 1e-9);
    sc.tau_ns.push_back(F_B.mu + F_B.sigma * normal_quantile(share));
  }
  ConditionalCurve tau_ns{choices.x, sc.tau_ns, 0.0, {}};

  struct Obs {
    double p0, price, T;
  };
  std::vector<Obs> offers;
  for (const auto& l : listings)
    for (const auto& o : l.offers) {
      if (o.committed) continue;
      // a walkaway is valued at its lower bound: the offer it abandons
      const auto done = o.purchased_at ? o.purchased_at : o.walked_at;
      if (!done) continue;
      offers.push_back({l.p0, o.price, *done - o.offer_time});
    }
  if (offers.empty()) throw ValidationError("estimate_search_cost: no resolved noncommitted offers");

  double lo = offers.front().p0, hi = lo;
  for (const auto& o : offers) {
    lo = std::min(lo, o.p0);
    hi = std::max(hi, o.p0);
  }
  const int nbins = std::max(1, opt.price_bins);
  const double width = (hi - lo) / nbins;
  std::vector<std::vector<const Obs*>> bins(nbins);
  for (const auto& o : offers) {
    int b = width > 0.0 ? static_cast<int>((o.p0 - lo) / width) : 0;
    bins[std::clamp(b, 0, nbins - 1)].push_back(&o);
  }

  std::vector<double> x, y_surplus, y_gap;
  for (const auto& bin : bins) {
    if (bin.empty()) continue;
    std::vector<double> prices;
    for (const auto* o : bin) prices.push_back(o->price);
    std::sort(prices.begin(), prices.end());
    const double band_lo = quantile_sorted(prices, opt.band_lo);
    const double band_hi = quantile_sorted(prices, opt.band_hi);
    std::size_t kept = 0;
    for (const auto* o : bin) {
      if (o->price < band_lo || o->price > band_hi) continue;
      const double d = std::exp(-r * o->T);
      x.push_back(o->p0);
      y_surplus.push_back(d * (tau_ns.at(o->p0) - o->price));
      y_gap.push_back(1.0 - d);
      ++kept;
    }
    if (kept == 0) ++sc.bins_skipped;
    else ++sc.bins_used;
  }
  sc.bins_skipped += static_cast<int>(std::count_if(bins.begin(), bins.end(), [](const auto& b) { return b.empty(); }));
  sc.subsample = x.size();
  if (sc.bins_used == 0) throw ValidationError("estimate_search_cost: every price bin was empty");
  if (x.size() < 3) throw ValidationError("estimate_search_cost: fewer than 3 offers in the quantile band");

  const auto support = price_support(listings);
  sc.disc_surplus = local_linear_regress(x, y_surplus, support.x);
  sc.disc_gap = local_linear_regress(x, y_gap, support.x, sc.disc_surplus.bandwidth);
  const double dR = lambda_R / (lambda_R + r);
  double num = 0.0, den = 0.0, n = 0.0;
  for (std::size_t k = 0; k < support.x.size(); ++k) {
    const double p = support.x[k], w = support.count[k];
    num += w * (sc.disc_surplus.fitted[k] - dR * dR * (tau_ns.at(p) - p1N.at(p)));
    den += w * sc.disc_gap.fitted[k];
    n += w;
  }
  sc.numerator = num / n;
  sc.denominator = den / n;
  if (!(std::abs(sc.denominator) > 1e-12))
    throw ValidationError("estimate_search_cost: discounting denominator is zero (instant purchases)");
  sc.c = r * sc.numerator / sc.denominator;
  return sc;
}

ModelParams EstimationResult::to_params(const ModelParams& calibrated) const {
  ModelParams p = calibrated;
  p.lambda_R = lambda_R;
  p.lambda_S = lambda_S;
  p.lambda_B = lambda_B;
  p.kappa = kappa.value;
  p.c = c;
  p.F_S = F_S;
  p.F_B = ValueDistribution::normal(mu_B, sigma_B);
  return p;
}

EstimationResult estimate_all(const EventLog& log, const CalibratedInputs& in, const EstimatorOptions& opt) {
  EstimationResult res;
  res.inputs = in;
  const auto listings = listing_records(log);
  res.listings = listings.size();
  if (listings.empty()) throw ValidationError("estimate: the log has no listings");
  res.lambda_R = estimate_lambda_R(listings);
  res.lambda_S = estimate_lambda_S(listings, opt.exposure_cap);
  res.lambda_B = estimate_lambda_B(res.lambda_S, in.N_S, in.N_B);
  res.kappa = calibrate_kappa(listings, opt.kappa_window);
  res.selection = selection_correction(listings, res.lambda_S, opt);
  res.choices = choice_probabilities(listings, res.selection);
  res.p1N = committed_offer_curve(listings);
  res.fs = estimate_F_S(listings, res.p1N, res.lambda_R, in.r, in.t);
  res.F_S = res.fs.F_S;
  res.fb = estimate_F_B(listings, res.choices, res.p1N, res.lambda_R, in.r, opt);
  res.mu_B = res.fb.fit.mu;
  res.sigma_B = res.fb.fit.sigma;
  res.search = estimate_search_cost(listings, res.choices, res.p1N, res.fb.fit, res.lambda_R, in.r, opt);
  res.c = res.search.c;
  return res;
}

std::string estimation_json(const EstimationResult& res, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["schema"] = "bargainlab.estimation";
  j["schema_version"] = 1;
  j["config_hash"] = config_hash;
  j["lambda_R"] = res.lambda_R;
  j["lambda_S"] = res.lambda_S;
  j["lambda_B"] = res.lambda_B;
  j["kappa"] = res.kappa.value;
  j["kappa_se"] = res.kappa.se;
  j["mu_B"] = res.mu_B;
  j["sigma_B"] = res.sigma_B;
  j["c"] = res.c;
  j["c_over_median_buyer"] = res.c_over_median_buyer();
  const auto& s = res.F_S;
  j["F_S_quartiles"] = {s.quantile(0.25), s.quantile(0.5), s.quantile(0.75)};
  j["F_S_pseudovalues"] = res.fs.pseudovalues;
  j["calibrated"] = {{"r", res.inputs.r}, {"t", res.inputs.t}, {"N_S", res.inputs.N_S}, {"N_B", res.inputs.N_B}};
  j["diagnostics"] = {
      {"listings", res.listings},
      {"kappa_walkaways", res.kappa.n},
      {"selection_intervals", res.selection.intervals},
      {"selection_dropped_short", res.selection.dropped_short},
      {"selection_smearing", res.selection.smearing},
      {"bandwidth_log_gap", res.selection.log_gap.bandwidth},
      {"bandwidth_choice", res.choices.obs_A.bandwidth},
      {"bandwidth_p1N", res.p1N.bandwidth},
      {"bandwidth_sale_moments", res.fs.disc_price.bandwidth},
      {"bandwidth_search", res.search.disc_surplus.bandwidth},
      {"pseudovalues_dropped", res.fs.dropped},
      {"normal_fit_sse", res.fb.fit.sse},
      {"search_bins_used", res.search.bins_used},
      {"search_bins_skipped", res.search.bins_skipped},
      {"search_subsample", res.search.subsample},
      {"search_numerator", res.search.numerator},
      {"search_denominator", res.search.denominator}};
  return j.dump(2) + "\n";
}

void write_estimation_diagnostics_csv(std::ostream& out, const EstimationResult& res) {
  out << "curve,p0,value\n";
  auto emit = [&](const char* name, const std::vector<double>& x, const std::vector<double>& v) {
    for (std::size_t k = 0; k < x.size() && k < v.size(); ++k)
      out << name << ',' << format_double(x[k]) << ',' << format_double(v[k]) << '\n';
  };
  const auto& c = res.choices;
  emit("log_gap", res.selection.log_gap.x, res.selection.log_gap.fitted);
  emit("q", res.selection.log_gap.x, res.selection.q);
  emit("p_A", c.x, c.p_A);
  emit("p_CN", c.x, c.p_CN);
  emit("p_CS", c.x, c.p_CS);
  emit("p_D", c.x, c.p_D);
  emit("p1N", res.p1N.x, res.p1N.fitted);
  emit("tau_AC", c.x, res.fb.tau_ac);
  emit("tau_NS", c.x, res.search.tau_ns);
  emit("disc_net_price", res.fs.disc_price.x, res.fs.disc_price.fitted);
  emit("disc", res.fs.disc.x, res.fs.disc.fitted);
  emit("pseudovalue", res.fs.disc.x, res.fs.s_at_x);
  emit("disc_surplus", res.search.disc_surplus.x, res.search.disc_surplus.fitted);
  emit("disc_gap", res.search.disc_gap.x, res.search.disc_gap.fitted);
}

}  // namespace bargain
