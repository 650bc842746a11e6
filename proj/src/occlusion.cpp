#include "conex/occlusion.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/kernels.hpp"

namespace conex {

double concept_coefficient(std::span<const double> a, const DenseMatrix& W, std::size_t k) {
  require(k < W.cols(), "concept_coefficient: concept " + std::to_string(k) + " out of range");
  require(a.size() == W.rows(), "concept_coefficient: activation length != p");
  double dot = 0.0, norm_sq = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    dot += a[j] * W(j, k);
    norm_sq += W(j, k) * W(j, k);
  }
  if (norm_sq == 0.0) return 0.0;
  return std::max(0.0, dot / norm_sq);
}

double concept_coefficient(const Excerpt& excerpt, const ConceptModel& model, std::size_t k,
                           EmbeddingProvider& provider) {
  const DenseMatrix a = embed_checked(provider, {excerpt.text});
  return concept_coefficient(a.row(0), model.W, k);
}

ExcerptAttribution attribute(const Excerpt& excerpt, std::size_t excerpt_id, const ConceptModel& model,
                             EmbeddingProvider& provider, const GranularitySpec& tau2) {
  ExcerptAttribution out;
  out.elements = elements(excerpt, tau2);
  if (out.elements.empty()) return out;

  const std::string mask = provider.describe().mask_token;
  const DenseMatrix base = embed_checked(provider, {excerpt.text});
  const DenseMatrix u = nmf_transform(base, model);
  out.coefficients.assign(u.row(0).begin(), u.row(0).end());
  const auto flags = presence(model, u.row(0));
  for (std::size_t k = 0; k < flags.size(); ++k)
    if (flags[k]) out.present.push_back(k);
  if (out.present.empty()) return out;

  std::vector<double> base_coef(model.r, 0.0);
  for (std::size_t k : out.present) base_coef[k] = concept_coefficient(base.row(0), model.W, k);

  const std::size_t n_el = out.elements.size(), n_k = out.present.size();
  out.attributions.resize(n_el * n_k);
  kernels::for_each_index(n_el, [&](std::size_t j) {
    const std::string occluded = occlude(excerpt, j, tau2, mask);
    const DenseMatrix a = embed_checked(provider, {occluded});
    for (std::size_t q = 0; q < n_k; ++q) {
      const std::size_t k = out.present[q];
      ElementAttribution& e = out.attributions[j * n_k + q];
      e.excerpt_id = excerpt_id;
      e.element_index = j;
      e.element_text = out.elements[j].text;
      e.span = out.elements[j].span;
      e.concept_id = k;
      e.phi = base_coef[k] - concept_coefficient(a.row(0), model.W, k);
      e.granularity = tau2.mode;
    }
  });
  return out;
}

AttributionBundle bundle(const Excerpt& excerpt, std::size_t excerpt_id, const ExcerptAttribution& attribution) {
  AttributionBundle b;
  b.excerpt_id = excerpt_id;
  b.excerpt = excerpt;
  b.present_concepts = attribution.present;
  b.elements.resize(attribution.elements.size());
  for (std::size_t j = 0; j < attribution.elements.size(); ++j) {
    b.elements[j].element_index = j;
    b.elements[j].text = attribution.elements[j].text;
    b.elements[j].span = attribution.elements[j].span;
  }
  for (const auto& a : attribution.attributions) {
    require(a.element_index < b.elements.size(), "bundle: attribution references unknown element");
    auto& el = b.elements[a.element_index];
    const bool better = !el.concept_id || a.phi > el.phi || (a.phi == el.phi && a.concept_id < *el.concept_id);
    if (better) {
      el.concept_id = a.concept_id;
      el.phi = a.phi;
    }
  }
  double max_phi = 0.0;
  for (const auto& el : b.elements)
    if (el.concept_id) max_phi = std::max(max_phi, el.phi);
  b.unattributed = !(max_phi > 0.0);
  if (!b.unattributed)
    for (auto& el : b.elements)
      if (el.concept_id) el.intensity = std::max(0.0, el.phi) / max_phi;
  return b;
}

void write_bundles_json(std::ostream& out, const std::vector<AttributionBundle>& bundles) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& b : bundles) {
    nlohmann::ordered_json j;
    j["excerpt_id"] = b.excerpt_id;
    j["doc_id"] = b.excerpt.doc_id;
    j["excerpt"] = b.excerpt.text;
    j["span"] = {b.excerpt.span.start, b.excerpt.span.end};
    j["present_concepts"] = b.present_concepts;
    j["unattributed"] = b.unattributed;
    auto els = nlohmann::ordered_json::array();
    for (const auto& el : b.elements) {
      nlohmann::ordered_json e;
      e["text"] = el.text;
      e["span"] = {el.span.start, el.span.end};
      e["concept"] = el.concept_id ? nlohmann::ordered_json(*el.concept_id) : nlohmann::ordered_json(nullptr);
      e["phi"] = el.phi;
      e["intensity"] = el.intensity;
      els.push_back(e);
    }
    j["elements"] = els;
    arr.push_back(j);
  }
  out << arr.dump(2) << '\n';
}

std::vector<AttributionBundle> read_bundles_json(std::istream& in) {
  std::vector<AttributionBundle> out;
  try {
    const auto arr = nlohmann::json::parse(in);
    for (const auto& j : arr) {
      AttributionBundle b;
      b.excerpt_id = j.at("excerpt_id").get<std::size_t>();
      b.excerpt.doc_id = j.value("doc_id", std::string());
      b.excerpt.text = j.at("excerpt").get<std::string>();
      const auto span = j.at("span");
      b.excerpt.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
      b.present_concepts = j.at("present_concepts").get<std::vector<std::size_t>>();
      b.unattributed = j.at("unattributed").get<bool>();
      std::size_t idx = 0;
      for (const auto& e : j.at("elements")) {
        ElementHighlight el;
        el.element_index = idx++;
        el.text = e.at("text").get<std::string>();
        el.span = {e.at("span").at(0).get<std::size_t>(), e.at("span").at(1).get<std::size_t>()};
        if (!e.at("concept").is_null()) el.concept_id = e.at("concept").get<std::size_t>();
        el.phi = e.at("phi").get<double>();
        el.intensity = e.at("intensity").get<double>();
        b.elements.push_back(std::move(el));
      }
      out.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("attribution bundles: ") + e.what());
  }
  return out;
}

}  // namespace conex
