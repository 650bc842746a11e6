#include "conex/alignment.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "conex/errors.hpp"

namespace conex {

std::vector<AspectAnnotation> read_annotations(std::istream& in) {
  std::vector<AspectAnnotation> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string doc = j.at("doc_id").get<std::string>();
      const std::string aspect = j.at("aspect").get<std::string>();
      const Span s{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
      if (s.end < s.start) throw DataError("annotation line " + std::to_string(lineno) + ": end < start");
      auto [it, fresh] = slot.try_emplace({doc, aspect}, out.size());
      if (fresh) out.push_back({doc, aspect, {}});
      out[it->second].spans.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("annotation line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void validate_annotations(const std::vector<AspectAnnotation>& annotations,
                          const std::map<std::string, std::size_t>& doc_lengths) {
  std::set<std::string> unknown;
  for (const auto& a : annotations)
    if (!doc_lengths.contains(a.doc_id)) unknown.insert(a.doc_id);
  if (!unknown.empty()) {
    std::string ids;
    for (const auto& d : unknown) ids += (ids.empty() ? "" : ", ") + d;
    throw DataError("annotations reference unknown documents: " + ids);
  }
  for (const auto& a : annotations) {
    const std::size_t len = doc_lengths.at(a.doc_id);
    auto spans = a.spans;
    std::sort(spans.begin(), spans.end(), [](const Span& x, const Span& y) { return x.start < y.start; });
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (spans[i].end > len)
        throw DataError("annotation span [" + std::to_string(spans[i].start) + ", " + std::to_string(spans[i].end) +
                        ") exceeds document " + a.doc_id + " of length " + std::to_string(len));
      if (i > 0 && spans[i].start < spans[i - 1].end)
        throw DataError("overlapping '" + a.aspect + "' spans in document " + a.doc_id);
    }
  }
}

AspectFlags label_excerpts(const std::vector<Excerpt>& excerpts, const std::vector<AspectAnnotation>& annotations,
                           const std::map<std::string, std::size_t>& doc_lengths, double overlap_frac) {
  if (!(overlap_frac >= 0.0 && overlap_frac <= 1.0)) throw ConfigError("overlap_frac must lie in [0, 1]");
  validate_annotations(annotations, doc_lengths);
  AspectFlags flags;
  std::set<std::string> names;
  for (const auto& a : annotations) names.insert(a.aspect);
  flags.aspects.assign(names.begin(), names.end());
  flags.positive.assign(excerpts.size(), std::vector<bool>(flags.aspects.size(), false));
  for (std::size_t i = 0; i < excerpts.size(); ++i) {
    const Excerpt& e = excerpts[i];
    const double len = static_cast<double>(e.span.length());
    for (const auto& a : annotations) {
      if (a.doc_id != e.doc_id) continue;
      const auto col = static_cast<std::size_t>(
          std::lower_bound(flags.aspects.begin(), flags.aspects.end(), a.aspect) - flags.aspects.begin());
      for (const Span& s : a.spans) {
        const std::size_t lo = std::max(s.start, e.span.start), hi = std::min(s.end, e.span.end);
        if (hi <= lo) continue;
        if (static_cast<double>(hi - lo) >= overlap_frac * len) {
          flags.positive[i][col] = true;
          break;
        }
      }
    }
  }
  return flags;
}

PrfScore prf(const ConfusionCounts& c) {
  PrfScore s;
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  if (c.tp + c.fp > 0) s.precision = d(c.tp) / d(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = d(c.tp) / d(c.tp + c.fn);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  const std::size_t total = c.tp + c.fp + c.fn + c.tn;
  if (total > 0) s.accuracy = d(c.tp + c.tn) / d(total);
  return s;
}

std::vector<AlignmentResult> score_concepts(const ConceptModel& model, const DenseMatrix& U_eval,
                                            const AspectFlags& flags) {
  require(U_eval.cols() == model.r, "score_concepts: U_eval has " + std::to_string(U_eval.cols()) +
                                        " columns, model r = " + std::to_string(model.r));
  require(U_eval.rows() == flags.positive.size(), "score_concepts: U_eval rows != labelled excerpts");
  std::vector<std::vector<bool>> present(U_eval.rows());
  for (std::size_t i = 0; i < U_eval.rows(); ++i) present[i] = presence(model, U_eval.row(i));

  std::vector<AlignmentResult> results;
  for (std::size_t a = 0; a < flags.aspects.size(); ++a) {
    AlignmentResult res;
    res.aspect = flags.aspects[a];
    for (const auto& row : flags.positive) res.positives += row[a] ? 1 : 0;
    res.undefined_recall = res.positives == 0;
    for (std::size_t k = 0; k < model.r; ++k) {
      ConceptAlignment ca;
      ca.concept_id = k;
      for (std::size_t i = 0; i < U_eval.rows(); ++i) {
        const bool pred = present[i][k], truth = flags.positive[i][a];
        if (pred && truth) ++ca.counts.tp;
        else if (pred) ++ca.counts.fp;
        else if (truth) ++ca.counts.fn;
        else ++ca.counts.tn;
      }
      ca.score = prf(ca.counts);
      if (k == 0 || ca.score.f1 > res.best.f1) {
        res.best_concept = k;
        res.best = ca.score;
      }
      res.per_concept.push_back(ca);
    }
    results.push_back(std::move(res));
  }
  return results;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

void write_alignment_csv(std::ostream& out, const std::vector<AlignmentResult>& results, std::size_t r,
                         std::optional<double> model_accuracy) {
  out << "r,acc,avg_p,avg_r,avg_f1";
  for (const auto& res : results) out << ',' << res.aspect << "_concept," << res.aspect << "_p," << res.aspect
                                      << "_r," << res.aspect << "_f1";
  out << '\n';
  double p = 0, rc = 0, f = 0;
  for (const auto& res : results) {
    p += res.best.precision;
    rc += res.best.recall;
    f += res.best.f1;
  }
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  out << r << ',' << (model_accuracy ? fmt(*model_accuracy) : "") << ',' << fmt(p / n) << ',' << fmt(rc / n)
      << ',' << fmt(f / n);
  for (const auto& res : results)
    out << ',' << res.best_concept << ',' << fmt(res.best.precision) << ',' << fmt(res.best.recall) << ','
        << fmt(res.best.f1);
  out << '\n';
}

void write_alignment_table_csv(std::ostream& out, const std::vector<AlignmentResult>& results) {
  out << "aspect,concept,tp,fp,fn,tn,precision,recall,f1,undefined_recall\n";
  for (const auto& res : results)
    for (const auto& c : res.per_concept)
      out << res.aspect << ',' << c.concept_id << ',' << c.counts.tp << ',' << c.counts.fp << ',' << c.counts.fn
          << ',' << c.counts.tn << ',' << fmt(c.score.precision) << ',' << fmt(c.score.recall) << ','
          << fmt(c.score.f1) << ',' << (res.undefined_recall ? "true" : "false") << '\n';
}

}  // namespace conex

namespace conex {

void write_alignment_json(std::ostream& out, const std::vector<AlignmentResult>& results) {
  nlohmann::ordered_json j;
  j["protocol"] = "best concept searched over the full annotated set (upper bound, not held-out)";
  j["unit"] = "excerpt";
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json a;
    a["aspect"] = r.aspect;
    a["best_concept"] = r.best_concept;
    a["precision"] = r.best.precision;
    a["recall"] = r.best.recall;
    a["f1"] = r.best.f1;
    a["accuracy"] = r.best.accuracy;
    a["positives"] = r.positives;
    a["undefined_recall"] = r.undefined_recall;
    arr.push_back(a);
  }
  j["aspects"] = arr;
  out << j.dump(2) << '\n';
}

std::vector<AlignmentResult> read_alignment_json(std::istream& in) {
  std::vector<AlignmentResult> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& a : j.at("aspects")) {
      AlignmentResult r;
      r.aspect = a.at("aspect").get<std::string>();
      r.best_concept = a.at("best_concept").get<std::size_t>();
      r.best.precision = a.at("precision").get<double>();
      r.best.recall = a.at("recall").get<double>();
      r.best.f1 = a.at("f1").get<double>();
      r.best.accuracy = a.value("accuracy", 0.0);
      r.positives = a.value("positives", std::size_t{0});
      r.undefined_recall = a.value("undefined_recall", false);
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("alignment results: ") + e.what());
  }
  return out;
}

}  // namespace conex
