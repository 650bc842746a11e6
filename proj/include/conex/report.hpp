#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conex/alignment.hpp"
#include "conex/fidelity.hpp"
#include "conex/occlusion.hpp"
#include "conex/sobol.hpp"

namespace conex {

// Fixed palette indexed by concept id, shared by every page and chart.
std::string concept_color(std::size_t concept_id);

std::string html_escape(std::string_view text);

// Horizontal bars of total indices in ranking order.
std::string importance_svg(const ImportanceReport& report);

// Deletion and insertion panels; random orderings are drawn as their mean.
std::string fidelity_svg(const std::vector<CurveBand>& bands);

struct ConceptExamples {
  std::size_t concept_id = 0;
  std::vector<std::string> excerpts;  // highest coefficients first
};

struct ReportInputs {
  std::string title = "Concept explanations";
  std::optional<std::size_t> class_id;
  std::string class_name;
  std::optional<ImportanceReport> importance;
  std::vector<ConceptExamples> concepts;
  std::vector<CurveBand> fidelity;
  std::vector<AttributionBundle> bundles;
  std::vector<AlignmentResult> alignment;
};

// Self-contained static HTML page. Element backgrounds use the colour of the
// winning concept with opacity equal to the element's intensity.
std::string render_html(const ReportInputs& inputs);

}  // namespace conex
