#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stealth_lqr/analysis.hpp"
#include "stealth_lqr/bound.hpp"

namespace stealth_lqr {

enum class SearchMode { mc, bound, both };

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "mc") return SearchMode::mc;
  if (s == "bound") return SearchMode::bound;
  if (s == "both") return SearchMode::both;
  throw ValidationError("mode must be one of mc, bound, both (got '" + s + "')");
}

struct LambdaEvaluation {
  double lambda = 0.0;
  bool admissible = false;
  std::string note;
  std::optional<DetectionEstimate> mc;
  std::vector<BoundRow> bound;
  double max_mc = 1.0;     // max_t ci_hi
  double max_bound = 1.0;  // max_t bound
  bool pass_mc = false;
  bool pass_bound = false;
};

struct StealthReport {
  double epsilon = 0.0;
  SearchMode mode = SearchMode::mc;
  long long n_paths = 0;
  std::uint64_t master_seed = 0;
  SprtConfig sprt;
  std::vector<LambdaEvaluation> rows;
  std::optional<double> selected_mc;
  std::optional<double> selected_bound;
  std::vector<std::string> notes;

  /// Largest admissible grid point passing at a different tolerance, reusing the stored estimates.
  std::optional<double> select(double epsilon, bool use_bound) const {
    std::optional<double> best;
    for (const auto& r : rows) {
      if (!r.admissible) continue;
      if (use_bound ? r.bound.empty() : !r.mc) continue;
      const double score = use_bound ? r.max_bound : r.max_mc;
      if (score <= epsilon && (!best || r.lambda > *best)) best = r.lambda;
    }
    return best;
  }
};

/// `count` uniform points on [0, lambda_max] where lambda_max closes the well-posedness interval.
inline std::vector<double> default_lambda_grid(const Model& model, int count = 51) {
  const double lmax = wellposedness(model).lambda_max;
  std::vector<double> grid;
  for (int i = 0; i < count; ++i) grid.push_back(count == 1 ? 0.0 : lmax * i / (count - 1));
  return grid;
}

struct SearchOptions {
  double epsilon = 0.02;
  SearchMode mode = SearchMode::mc;
  long long n_paths = 20000;
  std::uint64_t master_seed = 0;
  double confidence_c = 0.05;
};

/// Grid search for the largest intensity meeting P(log L*_t >= log U) <= epsilon for all t.
/// mc mode judges the upper score-interval limit; bound mode judges the analytical bound.
inline StealthReport lambda_search(const Model& base, const std::vector<double>& grid, const SprtConfig& cfg,
                                   const SearchOptions& opts) {
  StealthReport rep;
  rep.epsilon = opts.epsilon;
  rep.mode = opts.mode;
  rep.n_paths = opts.n_paths;
  rep.master_seed = opts.master_seed;
  rep.sprt = cfg;
  const bool want_mc = opts.mode != SearchMode::bound;
  const bool want_bound = opts.mode != SearchMode::mc;
  if (want_bound && !base.offset_free())
    throw ValidationError("bound mode requires f^d == 0");

  int admissible = 0;
  for (double lam : grid) {
    LambdaEvaluation ev;
    ev.lambda = lam;
    if (!(lam >= 0.0)) {
      ev.note = "skipped: negative intensity";
      rep.rows.push_back(std::move(ev));
      continue;
    }
    const Model model = base.with_lambda(lam);
    const WellPosedness w = wellposedness(model);
    if (!w.holds) {
      ev.note = "skipped: outside well-posedness range [0, " + std::to_string(w.lambda_max) + "]";
      rep.rows.push_back(std::move(ev));
      continue;
    }
    ev.admissible = true;
    ++admissible;
    const SolvedPolicy pol = backward_solve(model);
    if (want_mc) {
      ev.mc = mc_detection(model, pol, cfg, opts.n_paths, opts.master_seed, opts.confidence_c);
      ev.max_mc = ev.mc->max_ci_hi();
      ev.pass_mc = ev.max_mc <= opts.epsilon;
    }
    if (want_bound) {
      ev.bound = detection_bounds(model, pol, cfg);
      ev.max_bound = 0.0;
      for (const auto& b : ev.bound) ev.max_bound = std::max(ev.max_bound, b.total_bound);
      ev.pass_bound = ev.max_bound <= opts.epsilon;
    }
    rep.rows.push_back(std::move(ev));
  }
  if (admissible == 0) throw ValidationError("lambda_search: no grid point satisfies the well-posedness condition");
  if (admissible == 1 && grid.size() == 1) rep.notes.push_back("degenerate grid: a single intensity was evaluated");
  if (want_mc) rep.selected_mc = rep.select(opts.epsilon, false);
  if (want_bound) rep.selected_bound = rep.select(opts.epsilon, true);
  return rep;
}

}  // namespace stealth_lqr
