#include "conex/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace conex {
namespace {

constexpr std::array<const char*, 20> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#e6550d", "#31a354", "#ad494a", "#756bb1", "#8c6d31", "#de9ed6", "#636363", "#b5cf6b", "#6baed6"};

std::string num(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string rgba(const std::string& hex, double alpha) {
  unsigned r = 0, g = 0, b = 0;
  std::sscanf(hex.c_str(), "#%02x%02x%02x", &r, &g, &b);
  return "rgba(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + "," + num(alpha, 3) + ")";
}

std::string polyline(const std::vector<double>& ys, double x0, double w, double y0, double h, double lo, double hi) {
  std::string pts;
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const double x = x0 + (ys.size() > 1 ? w * static_cast<double>(t) / static_cast<double>(ys.size() - 1) : 0.0);
    const double y = y0 + h - h * (ys[t] - lo) / span;
    pts += num(x, 1) + "," + num(y, 1) + " ";
  }
  return pts;
}

}  // namespace

std::string concept_color(std::size_t concept_id) { return kPalette[concept_id % kPalette.size()]; }

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string importance_svg(const ImportanceReport& report) {
  const double bar_h = 22, left = 90, width = 420, top = 30;
  const double height = top + bar_h * static_cast<double>(report.ranking.size()) + 30;
  double mx = 0.0;
  for (const auto& c : report.indices) mx = std::max(mx, c.s_total);
  if (mx <= 0.0) mx = 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + width + 80, 0) << "\" height=\""
    << num(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << num(left, 0) << "\" y=\"18\" font-weight=\"bold\">Total Sobol index per concept (class "
    << report.class_id << ")</text>\n";
  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    const std::size_t k = report.ranking[i];
    const double v = report.indices[k].s_total;
    const double y = top + bar_h * static_cast<double>(i);
    s << "<text x=\"" << num(left - 8, 0) << "\" y=\"" << num(y + 15, 1) << "\" text-anchor=\"end\">concept " << k
      << "</text>\n";
    s << "<rect x=\"" << num(left, 0) << "\" y=\"" << num(y + 3, 1) << "\" width=\"" << num(width * v / mx, 2)
      << "\" height=\"" << num(bar_h - 6, 0) << "\" fill=\"" << concept_color(k) << "\"/>\n";
    s << "<text x=\"" << num(left + width * v / mx + 6, 2) << "\" y=\"" << num(y + 15, 1) << "\">" << num(v, 3)
      << "</text>\n";
  }
  if (report.degenerate_variance)
    s << "<text x=\"" << num(left, 0) << "\" y=\"" << num(height - 8, 0)
      << "\" fill=\"#a00\">degenerate output variance: all indices reported as 0</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string fidelity_svg(const std::vector<CurveBand>& bands) {
  const double pw = 320, ph = 220, pad = 50, gap = 60;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(2 * (pw + pad) + gap, 0) << "\" height=\""
    << num(ph + 2 * pad, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int panel = 0; panel < 2; ++panel) {
    const CurveKind kind = panel == 0 ? CurveKind::deletion : CurveKind::insertion;
    std::vector<double> imp, rev, rnd_sum;
    std::size_t n_rnd = 0;
    for (const auto& b : bands) {
      if (b.kind != kind) continue;
      if (b.ordering == "importance") imp = b.mean;
      else if (b.ordering == "reverse") rev = b.mean;
      else {
        if (rnd_sum.empty()) rnd_sum.assign(b.mean.size(), 0.0);
        for (std::size_t t = 0; t < b.mean.size() && t < rnd_sum.size(); ++t) rnd_sum[t] += b.mean[t];
        ++n_rnd;
      }
    }
    for (double& v : rnd_sum) v /= static_cast<double>(std::max<std::size_t>(n_rnd, 1));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* c : {&imp, &rev, &rnd_sum})
      for (double v : *c) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double x0 = pad + panel * (pw + pad + gap), y0 = pad;
    s << "<text x=\"" << num(x0, 0) << "\" y=\"" << num(y0 - 18, 0) << "\" font-weight=\"bold\">" << to_string(kind)
      << " curve</text>\n";
    s << "<rect x=\"" << num(x0, 0) << "\" y=\"" << num(y0, 0) << "\" width=\"" << num(pw, 0) << "\" height=\""
      << num(ph, 0) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    if (imp.empty()) {
      s << "<text x=\"" << num(x0 + 10, 0) << "\" y=\"" << num(y0 + 20, 0) << "\">no data</text>\n";
      continue;
    }
    s << "<text x=\"" << num(x0 - 4, 0) << "\" y=\"" << num(y0 + 4, 0) << "\" text-anchor=\"end\">" << num(hi, 2)
      << "</text>\n";
    s << "<text x=\"" << num(x0 - 4, 0) << "\" y=\"" << num(y0 + ph, 0) << "\" text-anchor=\"end\">" << num(lo, 2)
      << "</text>\n";
    s << "<text x=\"" << num(x0 + pw / 2, 0) << "\" y=\"" << num(y0 + ph + 20, 0)
      << "\" text-anchor=\"middle\">concepts " << (kind == CurveKind::deletion ? "removed" : "added") << " (0.."
      << imp.size() - 1 << ")</text>\n";
    auto line = [&](const std::vector<double>& ys, const char* color, const char* dash, const char* label, int row) {
      if (ys.empty()) return;
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash << " points=\""
        << polyline(ys, x0, pw, y0, ph, lo, hi) << "\"/>\n";
      s << "<text x=\"" << num(x0 + pw - 4, 0) << "\" y=\"" << num(y0 + 14 + 14 * row, 0)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << label << " (AUC " << num(normalized_auc(ys), 3)
        << ")</text>\n";
    };
    line(imp, "#d62728", "", "importance", 0);
    line(rnd_sum, "#7f7f7f", " stroke-dasharray=\"2,3\"", "random mean", 1);
    line(rev, "#1f77b4", " stroke-dasharray=\"6,4\"", "reverse", 2);
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_html(const ReportInputs& in) {
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << html_escape(in.title)
    << "</title>\n<style>\n"
    << "body{font-family:sans-serif;max-width:1100px;margin:2em auto;color:#222}\n"
    << "table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:3px 8px;text-align:right}\n"
    << ".excerpt{margin:.6em 0;line-height:1.9}.el{padding:1px 2px;border-radius:3px}\n"
    << ".swatch{display:inline-block;width:12px;height:12px;margin-right:4px;vertical-align:middle}\n"
    << ".muted{color:#888}\n</style>\n</head>\n<body>\n";
  h << "<h1>" << html_escape(in.title) << "</h1>\n";
  if (in.class_id)
    h << "<p>Class under explanation: <b>" << *in.class_id
      << (in.class_name.empty() ? "" : " (" + html_escape(in.class_name) + ")") << "</b></p>\n";

  const bool empty = !in.importance && in.concepts.empty() && in.fidelity.empty() && in.bundles.empty() &&
                     in.alignment.empty();
  if (empty) h << "<p class=\"muted\">No results to display.</p>\n";

  if (in.importance) {
    h << "<h2>Concept importance</h2>\n" << importance_svg(*in.importance);
  }
  if (!in.concepts.empty()) {
    h << "<h2>Concepts</h2>\n<table>\n<tr><th>concept</th><th style=\"text-align:left\">top excerpts</th></tr>\n";
    for (const auto& c : in.concepts) {
      h << "<tr><td><span class=\"swatch\" style=\"background:" << concept_color(c.concept_id) << "\"></span>"
        << c.concept_id << "</td><td style=\"text-align:left\">";
      for (std::size_t i = 0; i < c.excerpts.size(); ++i)
        h << (i ? "<br>" : "") << html_escape(c.excerpts[i]);
      h << "</td></tr>\n";
    }
    h << "</table>\n";
  }
  if (!in.bundles.empty()) {
    h << "<h2>Explanations</h2>\n<p class=\"muted\">Each element takes the colour of the concept it matters most "
         "for; darker means more important.</p>\n";
    for (const auto& b : in.bundles) {
      h << "<div class=\"excerpt\">";
      if (b.unattributed) {
        h << html_escape(b.excerpt.text) << " <span class=\"muted\">(unattributed)</span>";
      } else {
        std::size_t pos = 0;
        for (const auto& el : b.elements) {
          if (el.span.start > pos) h << html_escape(b.excerpt.text.substr(pos, el.span.start - pos));
          const std::string text = b.excerpt.text.substr(el.span.start, el.span.length());
          if (el.concept_id && el.intensity > 0.0) {
            h << "<span class=\"el\" title=\"concept " << *el.concept_id << ", phi " << num(el.phi, 4)
              << "\" style=\"background:" << rgba(concept_color(*el.concept_id), el.intensity) << "\">"
              << html_escape(text) << "</span>";
          } else {
            h << html_escape(text);
          }
          pos = el.span.end;
        }
        if (pos < b.excerpt.text.size()) h << html_escape(b.excerpt.text.substr(pos));
      }
      h << "</div>\n";
    }
  }
  if (!in.fidelity.empty()) {
    h << "<h2>Fidelity</h2>\n" << fidelity_svg(in.fidelity);
  }
  if (!in.alignment.empty()) {
    h << "<h2>Alignment with annotations</h2>\n<p class=\"muted\">Best concept per aspect, searched over the whole "
         "annotated set.</p>\n<table>\n<tr><th>aspect</th><th>concept</th><th>P</th><th>R</th><th>F1</th></tr>\n";
    for (const auto& a : in.alignment) {
      h << "<tr><td>" << html_escape(a.aspect) << "</td><td>" << a.best_concept << "</td><td>"
        << num(a.best.precision, 3) << "</td><td>" << num(a.best.recall, 3) << "</td><td>" << num(a.best.f1, 3)
        << (a.undefined_recall ? " (no positives)" : "") << "</td></tr>\n";
    }
    h << "</table>\n";
  }
  h << "</body>\n</html>\n";
  return h.str();
}

}  // namespace conex
