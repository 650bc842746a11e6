#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conex/excerpts.hpp"
#include "conex/nmf.hpp"

namespace conex {

struct AspectAnnotation {
  std::string doc_id;
  std::string aspect;
  std::vector<Span> spans;
};

// Newline-delimited {doc_id, aspect, start, end}; records are grouped by
// (doc_id, aspect) in first-seen order.
std::vector<AspectAnnotation> read_annotations(std::istream& in);

// Rejects spans past the end of their document and overlapping spans within
// one (doc, aspect). Unknown doc ids raise a DataError listing them.
void validate_annotations(const std::vector<AspectAnnotation>& annotations,
                          const std::map<std::string, std::size_t>& doc_lengths);

struct AspectFlags {
  std::vector<std::string> aspects;          // sorted
  std::vector<std::vector<bool>> positive;   // [excerpt][aspect]
};

// An excerpt is positive for an aspect iff it overlaps one of that aspect's
// spans in its document by a positive length that is at least
// overlap_frac × the excerpt length.
AspectFlags label_excerpts(const std::vector<Excerpt>& excerpts, const std::vector<AspectAnnotation>& annotations,
                           const std::map<std::string, std::size_t>& doc_lengths, double overlap_frac = 0.0);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PrfScore {
  double precision = 0.0;  // 0 when tp + fp = 0
  double recall = 0.0;     // 0 when tp + fn = 0
  double f1 = 0.0;         // 2PR/(P+R), 0 when P + R = 0
  double accuracy = 0.0;
};

PrfScore prf(const ConfusionCounts& c);

struct ConceptAlignment {
  std::size_t concept_id = 0;
  ConfusionCounts counts;
  PrfScore score;
};

struct AlignmentResult {
  std::string aspect;
  std::size_t best_concept = 0;   // max F1, ties to the lower id
  PrfScore best;
  std::size_t positives = 0;
  bool undefined_recall = false;  // aspect has no positive excerpt
  std::vector<ConceptAlignment> per_concept;
};

// Concept k predicts an aspect on excerpt i when k is present in U_eval row i.
// The search for the best concept runs over the same excerpts it is scored on,
// so the reported F1 is an upper bound rather than a held-out estimate.
std::vector<AlignmentResult> score_concepts(const ConceptModel& model, const DenseMatrix& U_eval,
                                            const AspectFlags& flags);

// One row laid out as: r, acc, average P/R/F1, then concept/P/R/F1 per aspect.
void write_alignment_csv(std::ostream& out, const std::vector<AlignmentResult>& results, std::size_t r,
                         std::optional<double> model_accuracy);
// Long form: aspect, concept, tp, fp, fn, tn, precision, recall, f1.
void write_alignment_table_csv(std::ostream& out, const std::vector<AlignmentResult>& results);

}  // namespace conex

namespace conex {

void write_alignment_json(std::ostream& out, const std::vector<AlignmentResult>& results);
// Best-concept rows only; per-concept tables are not round-tripped.
std::vector<AlignmentResult> read_alignment_json(std::istream& in);

}  // namespace conex
