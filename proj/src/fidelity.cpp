#include "conex/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/rng.hpp"

namespace conex {
namespace {

void validate_ordering(const ConceptOrdering& o, std::size_t r) {
  if (o.order.size() != r)
    throw ConfigError("ordering has " + std::to_string(o.order.size()) + " concepts, model has r = " +
                      std::to_string(r));
  std::vector<bool> seen(r, false);
  for (std::size_t k : o.order) {
    if (k >= r || seen[k]) throw ConfigError("ordering is not a permutation of the model's concepts");
    seen[k] = true;
  }
}

FidelityCurve make_curve(const ConceptScorer& scorer, const ConceptOrdering& ordering, CurveKind kind) {
  const std::size_t r = scorer.r();
  require(r >= 1, "fidelity curve needs at least one concept");
  validate_ordering(ordering, r);
  FidelityCurve c;
  c.kind = kind;
  c.ordering = ordering.label();
  c.points = scorer.score_batch(curve_masks(kind, ordering, r));
  c.auc = normalized_auc(c.points);
  return c;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string ConceptOrdering::label() const {
  switch (kind) {
    case OrderingKind::importance: return "importance";
    case OrderingKind::reverse: return "reverse";
    case OrderingKind::random: return "random:" + std::to_string(seed);
    case OrderingKind::custom: break;
  }
  return "custom";
}

ConceptOrdering importance_ordering(const ImportanceReport& report) {
  return {OrderingKind::importance, 0, report.ranking};
}

ConceptOrdering reverse_ordering(const ImportanceReport& report) {
  return {OrderingKind::reverse, 0, std::vector<std::size_t>(report.ranking.rbegin(), report.ranking.rend())};
}

ConceptOrdering random_ordering(std::size_t r, std::uint64_t seed) {
  ConceptOrdering o{OrderingKind::random, seed, std::vector<std::size_t>(r)};
  std::iota(o.order.begin(), o.order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(o.order);
  return o;
}

std::string to_string(CurveKind k) { return k == CurveKind::deletion ? "deletion" : "insertion"; }

double normalized_auc(const std::vector<double>& points) {
  require(points.size() >= 2, "normalized_auc: need at least two points");
  const double dx = 1.0 / static_cast<double>(points.size() - 1);
  double area = 0.0;
  for (std::size_t t = 0; t + 1 < points.size(); ++t) area += 0.5 * (points[t] + points[t + 1]) * dx;
  return area;
}

DenseMatrix curve_masks(CurveKind kind, const ConceptOrdering& ordering, std::size_t r) {
  validate_ordering(ordering, r);
  const double before = kind == CurveKind::deletion ? 0.0 : 1.0;  // value for the first t concepts
  DenseMatrix masks(r + 1, r, 1.0 - before);
  for (std::size_t t = 0; t <= r; ++t)
    for (std::size_t q = 0; q < t; ++q) masks(t, ordering.order[q]) = before;
  return masks;
}

FidelityCurve deletion_curve(const ConceptScorer& scorer, const ConceptOrdering& ordering) {
  return make_curve(scorer, ordering, CurveKind::deletion);
}

FidelityCurve insertion_curve(const ConceptScorer& scorer, const ConceptOrdering& ordering) {
  return make_curve(scorer, ordering, CurveKind::insertion);
}

FidelitySummary compare_orderings(const ConceptScorer& scorer, const ImportanceReport& report,
                                  std::size_t num_random, std::uint64_t seed) {
  if (num_random < 1) throw ConfigError("compare_orderings: num_random must be >= 1");
  const std::size_t r = scorer.r();
  std::vector<ConceptOrdering> orderings{importance_ordering(report), reverse_ordering(report)};
  for (std::size_t i = 0; i < num_random; ++i) orderings.push_back(random_ordering(r, derive_seed(seed, "random-" + std::to_string(i))));

  FidelitySummary s;
  for (CurveKind kind : {CurveKind::deletion, CurveKind::insertion}) {
    AucSummary& auc = kind == CurveKind::deletion ? s.deletion : s.insertion;
    std::vector<double> random_aucs;
    for (const auto& o : orderings) {
      s.curves.push_back(make_curve(scorer, o, kind));
      const double a = s.curves.back().auc;
      if (o.kind == OrderingKind::importance) auc.importance = a;
      else if (o.kind == OrderingKind::reverse) auc.reverse = a;
      else random_aucs.push_back(a);
    }
    auc.random_mean = mean_of(random_aucs);
    auc.random_std = std_of(random_aucs);
  }
  return s;
}

std::vector<CurveBand> aggregate_curves(const std::vector<FidelitySummary>& runs) {
  std::vector<CurveBand> bands;
  if (runs.empty()) return bands;
  const std::size_t n_curves = runs.front().curves.size();
  for (std::size_t c = 0; c < n_curves; ++c) {
    CurveBand b;
    b.kind = runs.front().curves[c].kind;
    b.ordering = runs.front().curves[c].ordering;
    const std::size_t n_pts = runs.front().curves[c].points.size();
    for (std::size_t t = 0; t < n_pts; ++t) {
      std::vector<double> vals;
      for (const auto& run : runs) {
        require(run.curves.size() == n_curves && run.curves[c].points.size() == n_pts,
                "aggregate_curves: runs disagree on curve layout");
        vals.push_back(run.curves[c].points[t]);
      }
      b.mean.push_back(mean_of(vals));
      b.stddev.push_back(std_of(vals));
    }
    bands.push_back(std::move(b));
  }
  return bands;
}

std::vector<DenseMatrix> disjoint_row_subsets(const DenseMatrix& U, std::size_t count, std::size_t size,
                                              std::uint64_t seed) {
  if (count < 1 || size < 1) throw ConfigError("subset count and size must be >= 1");
  if (count * size > U.rows())
    throw ConfigError("cannot draw " + std::to_string(count) + " disjoint subsets of " + std::to_string(size) +
                      " rows from " + std::to_string(U.rows()) + " evaluation excerpts");
  std::vector<std::size_t> idx(U.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<DenseMatrix> out;
  for (std::size_t s = 0; s < count; ++s) {
    DenseMatrix m(size, U.cols());
    for (std::size_t i = 0; i < size; ++i) {
      auto src = U.row(idx[s * size + i]);
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_fidelity_csv(std::ostream& out, const std::vector<CurveBand>& bands) {
  out << "curve,ordering,t,score,std\n";
  char buf[64];
  for (const auto& b : bands) {
    for (std::size_t t = 0; t < b.mean.size(); ++t) {
      out << to_string(b.kind) << ',' << b.ordering << ',' << t << ',';
      std::snprintf(buf, sizeof buf, "%.10g,%.10g", b.mean[t], b.stddev[t]);
      out << buf << '\n';
    }
  }
}

void write_fidelity_json(std::ostream& out, const std::vector<FidelitySummary>& runs,
                         const std::vector<CurveBand>& bands) {
  nlohmann::ordered_json j;
  j["score"] = "class logit, mean over evaluation excerpts";
  j["subsets"] = runs.size();
  auto auc_json = [](const std::vector<FidelitySummary>& rs, CurveKind kind) {
    std::vector<double> imp, rev, rnd;
    for (const auto& r : rs) {
      const AucSummary& a = kind == CurveKind::deletion ? r.deletion : r.insertion;
      imp.push_back(a.importance);
      rev.push_back(a.reverse);
      rnd.push_back(a.random_mean);
    }
    nlohmann::ordered_json o;
    o["importance"] = {{"mean", mean_of(imp)}, {"std", std_of(imp)}};
    o["random"] = {{"mean", mean_of(rnd)}, {"std", std_of(rnd)}};
    o["reverse"] = {{"mean", mean_of(rev)}, {"std", std_of(rev)}};
    if (rs.size() == 1) o["random_std_over_orderings"] = kind == CurveKind::deletion ? rs[0].deletion.random_std
                                                                                      : rs[0].insertion.random_std;
    return o;
  };
  j["auc"] = {{"deletion", auc_json(runs, CurveKind::deletion)}, {"insertion", auc_json(runs, CurveKind::insertion)}};
  auto curves = nlohmann::ordered_json::array();
  for (const auto& b : bands) {
    nlohmann::ordered_json c;
    c["curve"] = to_string(b.kind);
    c["ordering"] = b.ordering;
    c["mean"] = b.mean;
    c["std"] = b.stddev;
    curves.push_back(c);
  }
  j["curves"] = curves;
  out << j.dump(2) << '\n';
}

}  // namespace conex

namespace conex {

std::vector<CurveBand> read_fidelity_bands_json(std::istream& in) {
  std::vector<CurveBand> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& c : j.at("curves")) {
      CurveBand b;
      b.kind = c.at("curve").get<std::string>() == "deletion" ? CurveKind::deletion : CurveKind::insertion;
      b.ordering = c.at("ordering").get<std::string>();
      b.mean = c.at("mean").get<std::vector<double>>();
      b.stddev = c.at("std").get<std::vector<double>>();
      out.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fidelity curves: ") + e.what());
  }
  return out;
}

}  // namespace conex
