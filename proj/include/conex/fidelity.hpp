#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "conex/sobol.hpp"

namespace conex {

enum class OrderingKind { importance, reverse, random, custom };

struct ConceptOrdering {
  OrderingKind kind = OrderingKind::custom;
  std::uint64_t seed = 0;           // random orderings only
  std::vector<std::size_t> order;   // concept ids, most important first

  std::string label() const;
};

ConceptOrdering importance_ordering(const ImportanceReport& report);
ConceptOrdering reverse_ordering(const ImportanceReport& report);
ConceptOrdering random_ordering(std::size_t r, std::uint64_t seed);

enum class CurveKind { deletion, insertion };
std::string to_string(CurveKind k);

// points[t] for t = 0..r concepts removed (deletion) or added (insertion).
struct FidelityCurve {
  CurveKind kind = CurveKind::deletion;
  std::string ordering;
  std::vector<double> points;
  double auc = 0.0;  // trapezoid with x rescaled to [0, 1]
};

double normalized_auc(const std::vector<double>& points);

// Mask row for step t: deletion zeroes the first t concepts of the ordering,
// insertion keeps only them.
DenseMatrix curve_masks(CurveKind kind, const ConceptOrdering& ordering, std::size_t r);

FidelityCurve deletion_curve(const ConceptScorer& scorer, const ConceptOrdering& ordering);
FidelityCurve insertion_curve(const ConceptScorer& scorer, const ConceptOrdering& ordering);

struct AucSummary {
  double importance = 0.0;
  double reverse = 0.0;
  double random_mean = 0.0;
  double random_std = 0.0;
};

struct FidelitySummary {
  AucSummary deletion;
  AucSummary insertion;
  std::vector<FidelityCurve> curves;  // importance, reverse, then random ones; deletion before insertion
};

FidelitySummary compare_orderings(const ConceptScorer& scorer, const ImportanceReport& report,
                                  std::size_t num_random, std::uint64_t seed);

// Mean and standard deviation per point over repeated evaluations (one
// FidelitySummary per disjoint evaluation subset), matched by curve position.
struct CurveBand {
  CurveKind kind = CurveKind::deletion;
  std::string ordering;
  std::vector<double> mean;
  std::vector<double> stddev;
};
std::vector<CurveBand> aggregate_curves(const std::vector<FidelitySummary>& runs);

// `count` disjoint random row subsets of `size` rows each (seeded).
std::vector<DenseMatrix> disjoint_row_subsets(const DenseMatrix& U, std::size_t count, std::size_t size,
                                              std::uint64_t seed);

void write_fidelity_csv(std::ostream& out, const std::vector<CurveBand>& bands);
void write_fidelity_json(std::ostream& out, const std::vector<FidelitySummary>& runs,
                         const std::vector<CurveBand>& bands);

}  // namespace conex

namespace conex {

std::vector<CurveBand> read_fidelity_bands_json(std::istream& in);

}  // namespace conex
