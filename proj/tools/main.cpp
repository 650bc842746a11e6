// conex: concept discovery, ranking and attribution over an embedding provider.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "conex/alignment.hpp"
#include "conex/corpus.hpp"
#include "conex/errors.hpp"
#include "conex/fidelity.hpp"
#include "conex/kernels.hpp"
#include "conex/nmf.hpp"
#include "conex/occlusion.hpp"
#include "conex/planted_corpus.hpp"
#include "conex/report.hpp"
#include "conex/rng.hpp"
#include "conex/sobol.hpp"
#include "conex/toy_model.hpp"
#include "conex/wire.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace conex;
using cli::RunConfig;

namespace {

// Flags that override config file fields. Options left unset keep the file value.
struct Overrides {
  std::string config_path;
  std::optional<std::string> provider, corpus, out_dir, cache_dir, tau1, tau2, mask_law, sampler;
  std::optional<std::size_t> r, class_id, n_designs;
  std::optional<std::uint64_t> seed;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "run config (JSON)");
  cmd->add_option("--provider", o.provider, "model dir, cmd:<command> or tcp:<host>:<port>");
  cmd->add_option("--corpus", o.corpus, "NDJSON corpus");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--cache", o.cache_dir, "embedding cache directory");
  cmd->add_option("--r", o.r, "number of concepts");
  cmd->add_option("--class", o.class_id, "class under explanation");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--n-designs", o.n_designs, "Sobol design size N");
  cmd->add_option("--mask-law", o.mask_law, "uniform | bernoulli");
  cmd->add_option("--sampler", o.sampler, "qmc | random");
  cmd->add_option("--tau1", o.tau1, "excerpt granularity: full, sentence[:min_words], clause");
  cmd->add_option("--tau2", o.tau2, "occlusion granularity: clause, word");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : cli::load_config(o.config_path);
  if (o.provider) c.provider = *o.provider;
  if (o.corpus) c.corpus = *o.corpus;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.cache_dir) c.cache_dir = *o.cache_dir;
  if (o.r) c.r = *o.r;
  if (o.class_id) c.class_id = *o.class_id;
  if (o.seed) c.seed = *o.seed;
  if (o.n_designs) c.n_designs = *o.n_designs;
  if (o.mask_law) c.mask_law = parse_mask_law(*o.mask_law);
  if (o.sampler) c.sampler = parse_sampler(*o.sampler);
  if (o.tau1) c.tau1 = GranularitySpec::parse(*o.tau1);
  if (o.tau2) c.tau2 = GranularitySpec::parse(*o.tau2);
  cli::validate(c);
  return c;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is not set");
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

void require_artifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw ConfigError("missing " + path.string() + "; run `conex " + producer + "` with the same --out first");
}

std::unique_ptr<EmbeddingProvider> open_provider(const RunConfig& c) {
  if (c.provider.empty()) throw ConfigError("provider is not set (--provider or \"provider\" in the config)");
  if (c.provider.rfind("cmd:", 0) != 0 && c.provider.rfind("tcp:", 0) != 0) {
    const std::string dir = c.provider.rfind("builtin:", 0) == 0 ? c.provider.substr(8) : c.provider;
    require_file(dir, "builtin model directory");
  }
  return make_provider(c.provider, c.cache_dir);
}

// Stage record: resolved config plus the seed fan-out. Same inputs give the
// same bytes.
void write_run_record(const RunConfig& c, const std::string& command) {
  fs::create_directories(fs::path(c.out_dir) / "runs");
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = c.to_json();
  j["seeds"] = cli::stage_seeds(c.seed);
  std::ofstream(fs::path(c.out_dir) / "runs" / (command + ".json")) << j.dump(2) << '\n';
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  body(out);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Excerpt> read_excerpt_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_excerpts(in);
}

std::vector<std::string> texts_of(const std::vector<Excerpt>& excerpts) {
  std::vector<std::string> t;
  t.reserve(excerpts.size());
  for (const auto& e : excerpts) t.push_back(e.text);
  return t;
}

std::vector<Excerpt> extract_all(const std::vector<Document>& docs, const GranularitySpec& tau1) {
  std::vector<Excerpt> out;
  for (const auto& d : docs) {
    auto ex = extract(d.text, tau1, d.doc_id);
    out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  return out;
}

std::size_t argmax_row(const DenseMatrix& m, std::size_t i) {
  const auto row = m.row(i);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// ---------------------------------------------------------------------------

int cmd_toy_corpus(const std::string& out, const std::string& annotations, std::size_t docs, std::uint64_t seed) {
  PlantedCorpusConfig pc;
  pc.docs = docs;
  pc.seed = seed;
  const PlantedCorpus corpus = make_planted_corpus(pc);
  write_corpus(out, corpus.docs);
  if (!annotations.empty()) {
    write_file(annotations, [&](std::ostream& os) {
      for (const auto& a : corpus.annotations)
        for (const auto& s : a.spans) {
          nlohmann::ordered_json j{{"doc_id", a.doc_id}, {"aspect", a.aspect}, {"start", s.start}, {"end", s.end}};
          os << j.dump() << '\n';
        }
    });
  }
  std::cout << "wrote " << corpus.docs.size() << " documents to " << out << "\n";
  return 0;
}

int cmd_train_toy(const std::string& corpus_path, const std::string& out, ToyTrainConfig tc) {
  require_file(corpus_path, "corpus");
  const auto docs = read_corpus(corpus_path);
  const auto data = labeled_texts(docs);
  tc.corpus_id = fs::path(corpus_path).filename().string();
  const auto result = train_toy(data, tc);
  save_toy_model(result.model, out);
  std::printf("trained on %zu documents, train accuracy %.4f, model %s\n", data.size(), result.train_accuracy,
              result.model.fingerprint().c_str());
  return 0;
}

int cmd_extract(const RunConfig& c) {
  require_file(c.corpus, "corpus");
  const auto docs = read_corpus(c.corpus);
  const auto excerpts = extract_all(docs, c.tau1);
  if (c.r > excerpts.size())
    throw ConfigError("r = " + std::to_string(c.r) + " exceeds the " + std::to_string(excerpts.size()) +
                      " excerpts in the corpus");

  auto provider = open_provider(c);
  const auto desc = provider->describe();
  if (c.r > desc.p)
    throw ConfigError("r = " + std::to_string(c.r) + " exceeds the activation dimension p = " +
                      std::to_string(desc.p));
  if (c.class_id >= desc.class_names.size())
    throw ConfigError("class " + std::to_string(c.class_id) + " out of range; provider has " +
                      std::to_string(desc.class_names.size()) + " classes");

  const DenseMatrix all = embed_checked(*provider, texts_of(excerpts));
  const DenseMatrix logits = provider->classify(all);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < excerpts.size(); ++i)
    if (argmax_row(logits, i) == c.class_id) keep.push_back(i);
  if (keep.empty())
    throw DataError("no excerpt is predicted as class " + std::to_string(c.class_id) + " (" +
                    desc.class_names[c.class_id] + "); nothing to factorize");
  if (c.r > keep.size())
    throw ConfigError("r = " + std::to_string(c.r) + " exceeds the " + std::to_string(keep.size()) +
                      " excerpts predicted as class " + std::to_string(c.class_id));

  DenseMatrix A(keep.size(), all.cols());
  std::vector<Excerpt> kept;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::copy_n(all.row(keep[i]).begin(), all.cols(), A.row(i).begin());
    kept.push_back(excerpts[keep[i]]);
  }

  NmfConfig nc;
  nc.max_iter = c.nmf_max_iter;
  nc.tol = c.nmf_tol;
  nc.seed = derive_seed(c.seed, "nmf");
  ConceptModel model = nmf_fit(A, c.r, nc);
  model.class_id = c.class_id;
  save_concept_model(model, c.model_dir());
  write_file(c.model_dir() / "excerpts.ndjson", [&](std::ostream& os) { write_excerpts(os, kept); });
  write_run_record(c, "extract-concepts");

  std::printf("%zu of %zu excerpts predicted as class %zu (%s)\n", kept.size(), excerpts.size(), c.class_id,
              desc.class_names[c.class_id].c_str());
  std::printf("NMF r=%zu: %zu iterations, objective %.6g -> %.6g\n", c.r, model.objective_trace.size() - 1,
              model.objective_trace.front(), model.objective_trace.back());
  std::printf("presence thresholds:");
  for (double t : model.presence_threshold) std::printf(" %.4g", t);
  std::printf("\nwrote %s\n", c.model_dir().string().c_str());
  return 0;
}

ConceptModel load_model(const RunConfig& c) {
  require_artifact(c.model_dir() / "meta.json", "extract-concepts");
  return load_concept_model(c.model_dir());
}

int cmd_rank(const RunConfig& c) {
  const ConceptModel model = load_model(c);
  auto provider = open_provider(c);
  const ConceptScorer scorer(*provider, model.U, model.W, model.class_id);
  const MaskDesign design = generate_design(c.n_designs, model.r, c.sampler, c.mask_law, derive_seed(c.seed, "sobol"));
  const ImportanceReport report = estimate_total_indices(scorer, design, model.class_id);

  const fs::path out(c.out_dir);
  write_file(out / "importance.json", [&](std::ostream& os) { write_importance_json(os, report); });
  write_file(out / "importance.svg", [&](std::ostream& os) { os << importance_svg(report); });
  write_run_record(c, "rank-concepts");

  if (report.degenerate_variance) std::printf("warning: output variance is degenerate; indices reported as 0\n");
  std::printf("concept  S_T\n");
  for (std::size_t k : report.ranking) std::printf("%7zu  %.4f\n", k, report.indices[k].s_total);
  return 0;
}

int cmd_explain(const RunConfig& c, const std::vector<std::string>& texts) {
  const ConceptModel model = load_model(c);
  std::vector<Excerpt> excerpts;
  if (!texts.empty()) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto ex = extract(texts[i], c.tau1, "text-" + std::to_string(i));
      excerpts.insert(excerpts.end(), ex.begin(), ex.end());
    }
  } else if (!c.explain_input.empty()) {
    require_file(c.explain_input, "explain input");
    excerpts = extract_all(read_corpus(c.explain_input), c.tau1);
  } else {
    require_artifact(c.model_dir() / "excerpts.ndjson", "extract-concepts");
    excerpts = read_excerpt_file(c.model_dir() / "excerpts.ndjson");
  }
  if (excerpts.size() > c.explain_max) excerpts.resize(c.explain_max);

  auto provider = open_provider(c);
  std::vector<AttributionBundle> bundles;
  std::size_t unattributed = 0;
  for (std::size_t i = 0; i < excerpts.size(); ++i) {
    const auto attribution = attribute(excerpts[i], i, model, *provider, c.tau2);
    bundles.push_back(bundle(excerpts[i], i, attribution));
    unattributed += bundles.back().unattributed;
  }
  write_file(fs::path(c.out_dir) / "bundles.json", [&](std::ostream& os) { write_bundles_json(os, bundles); });
  write_run_record(c, "explain");
  std::printf("explained %zu excerpts (%zu unattributed)\n", bundles.size(), unattributed);
  return 0;
}

int cmd_fidelity(const RunConfig& c) {
  const ConceptModel model = load_model(c);
  const fs::path imp = fs::path(c.out_dir) / "importance.json";
  require_artifact(imp, "rank-concepts");
  std::ifstream in(imp);
  const ImportanceReport report = read_importance_json(in);
  if (report.indices.size() != model.r)
    throw DataError(imp.string() + " ranks " + std::to_string(report.indices.size()) +
                    " concepts but the model has r = " + std::to_string(model.r) + "; rerun rank-concepts");

  auto provider = open_provider(c);
  std::vector<DenseMatrix> subsets;
  if (c.subsets > 1)
    subsets = disjoint_row_subsets(model.U, c.subsets, c.subset_size, derive_seed(c.seed, "subsets"));
  else
    subsets.push_back(model.U);

  std::vector<FidelitySummary> runs;
  for (const auto& U : subsets) {
    const ConceptScorer scorer(*provider, U, model.W, model.class_id);
    runs.push_back(compare_orderings(scorer, report, c.num_random, derive_seed(c.seed, "fidelity")));
  }
  const auto bands = aggregate_curves(runs);
  const fs::path out(c.out_dir);
  write_file(out / "fidelity.csv", [&](std::ostream& os) { write_fidelity_csv(os, bands); });
  write_file(out / "fidelity.json", [&](std::ostream& os) { write_fidelity_json(os, runs, bands); });
  write_file(out / "fidelity.svg", [&](std::ostream& os) { os << fidelity_svg(bands); });
  write_run_record(c, "fidelity");

  auto mean = [&](auto pick) {
    double s = 0.0;
    for (const auto& r : runs) s += pick(r);
    return s / static_cast<double>(runs.size());
  };
  std::printf("AUC        importance  random  reverse\n");
  std::printf("deletion   %10.4f  %6.4f  %7.4f\n", mean([](auto& r) { return r.deletion.importance; }),
              mean([](auto& r) { return r.deletion.random_mean; }), mean([](auto& r) { return r.deletion.reverse; }));
  std::printf("insertion  %10.4f  %6.4f  %7.4f\n", mean([](auto& r) { return r.insertion.importance; }),
              mean([](auto& r) { return r.insertion.random_mean; }),
              mean([](auto& r) { return r.insertion.reverse; }));
  return 0;
}

int cmd_align(const RunConfig& c) {
  const ConceptModel model = load_model(c);
  require_file(c.corpus, "corpus");
  require_file(c.annotations, "annotations");
  const auto docs = read_corpus(c.corpus);
  std::vector<AspectAnnotation> annotations;
  {
    std::ifstream in(c.annotations);
    annotations = read_annotations(in);
  }
  std::map<std::string, std::size_t> lengths;
  for (const auto& d : docs) lengths[d.doc_id] = d.text.size();
  validate_annotations(annotations, lengths);

  std::set<std::string> annotated;
  for (const auto& a : annotations) annotated.insert(a.doc_id);
  std::vector<Document> subset;
  for (const auto& d : docs)
    if (annotated.count(d.doc_id)) subset.push_back(d);
  const auto excerpts = extract_all(subset, c.tau1);
  if (excerpts.empty()) throw DataError("annotated documents produced no excerpts at " + c.tau1.str());

  auto provider = open_provider(c);
  const DenseMatrix A = embed_checked(*provider, texts_of(excerpts));
  const DenseMatrix U_eval = nmf_transform(A, model);
  const AspectFlags flags = label_excerpts(excerpts, annotations, lengths, c.overlap_frac);
  const auto results = score_concepts(model, U_eval, flags);

  std::optional<double> acc;
  std::vector<LabeledText> labeled;
  for (const auto& d : docs)
    if (d.label) labeled.push_back({d.text, *d.label});
  if (!labeled.empty()) {
    std::vector<std::string> t;
    for (const auto& l : labeled) t.push_back(l.text);
    const auto pred = predict(*provider, t);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labeled[i].label;
    acc = static_cast<double>(hit) / static_cast<double>(labeled.size());
  }

  const fs::path out(c.out_dir);
  write_file(out / "alignment.csv", [&](std::ostream& os) { write_alignment_csv(os, results, model.r, acc); });
  write_file(out / "alignment_concepts.csv", [&](std::ostream& os) { write_alignment_table_csv(os, results); });
  write_file(out / "alignment.json", [&](std::ostream& os) { write_alignment_json(os, results); });
  write_run_record(c, "align");

  std::printf("aspect                concept  P      R      F1\n");
  for (const auto& r : results)
    std::printf("%-20s  %7zu  %.3f  %.3f  %.3f%s\n", r.aspect.c_str(), r.best_concept, r.best.precision,
                r.best.recall, r.best.f1, r.undefined_recall ? "  (no positive excerpts)" : "");
  std::printf("best concepts searched over all %zu annotated excerpts (upper bound, not held out)\n",
              excerpts.size());
  return 0;
}

int cmd_report(const RunConfig& c) {
  const fs::path out(c.out_dir);
  ReportInputs in;
  in.title = c.title;
  if (fs::exists(out / "model" / "meta.json")) {
    const ConceptModel model = load_concept_model(out / "model");
    in.class_id = model.class_id;
    if (fs::exists(out / "model" / "excerpts.ndjson")) {
      const auto excerpts = read_excerpt_file(out / "model" / "excerpts.ndjson");
      if (excerpts.size() == model.U.rows()) {
        for (std::size_t k = 0; k < model.r; ++k) {
          std::vector<std::size_t> idx(excerpts.size());
          std::iota(idx.begin(), idx.end(), 0);
          std::stable_sort(idx.begin(), idx.end(),
                           [&](std::size_t a, std::size_t b) { return model.U(a, k) > model.U(b, k); });
          ConceptExamples ce;
          ce.concept_id = k;
          for (std::size_t i = 0; i < std::min(c.examples_per_concept, idx.size()); ++i)
            ce.excerpts.push_back(excerpts[idx[i]].text);
          in.concepts.push_back(std::move(ce));
        }
      }
    }
  }
  if (fs::exists(out / "importance.json")) {
    std::ifstream f(out / "importance.json");
    in.importance = read_importance_json(f);
    if (!in.class_id) in.class_id = in.importance->class_id;
    // Concepts listed in importance order.
    std::vector<ConceptExamples> ordered;
    for (std::size_t k : in.importance->ranking)
      for (const auto& ce : in.concepts)
        if (ce.concept_id == k) ordered.push_back(ce);
    if (ordered.size() == in.concepts.size()) in.concepts = std::move(ordered);
  }
  if (fs::exists(out / "bundles.json")) {
    std::ifstream f(out / "bundles.json");
    in.bundles = read_bundles_json(f);
  }
  if (fs::exists(out / "fidelity.json")) {
    std::ifstream f(out / "fidelity.json");
    in.fidelity = read_fidelity_bands_json(f);
  }
  if (fs::exists(out / "alignment.json")) {
    std::ifstream f(out / "alignment.json");
    in.alignment = read_alignment_json(f);
  }
  fs::create_directories(out);
  write_file(out / "report.html", [&](std::ostream& os) { os << render_html(in); });
  std::printf("wrote %s\n", (out / "report.html").string().c_str());
  return 0;
}

int cmd_serve(const std::string& spec, const std::string& listen) {
  auto provider = make_provider(spec);
  if (listen.empty()) {
    serve_fd(*provider, 0, 1);
    return 0;
  }
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--listen expects host:port, got " + listen);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("invalid port in --listen " + listen);
  }
  serve_tcp(*provider, listen.substr(0, colon), port, [](int bound) {
    std::fprintf(stderr, "listening on port %d\n", bound);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-based explanations for text classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "conex 0.1.0");

  std::string corpus_out = "corpus.ndjson", annotations_out;
  std::size_t toy_docs = 400;
  std::uint64_t toy_seed = 0;
  auto* toy = app.add_subcommand("toy-corpus", "write a synthetic planted-concept review corpus");
  toy->add_option("--out", corpus_out, "corpus path")->capture_default_str();
  toy->add_option("--annotations", annotations_out, "also write sentence-level aspect annotations");
  toy->add_option("--docs", toy_docs, "number of documents")->capture_default_str();
  toy->add_option("--seed", toy_seed, "generator seed")->capture_default_str();

  std::string train_corpus, train_out = "toy-model";
  ToyTrainConfig tc;
  auto* train = app.add_subcommand("train-toy", "train the builtin bag-of-words classifier");
  train->add_option("--corpus", train_corpus, "labeled NDJSON corpus")->required();
  train->add_option("--out", train_out, "model directory")->capture_default_str();
  train->add_option("--d", tc.d, "embedding width")->capture_default_str();
  train->add_option("--p", tc.p, "activation width")->capture_default_str();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--lr", tc.lr)->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_option("--classes", tc.class_names, "class names in label order");

  Overrides o;
  auto* extract_cmd = app.add_subcommand("extract-concepts", "fit the concept base on class excerpts");
  auto* rank_cmd = app.add_subcommand("rank-concepts", "total Sobol indices of the concepts");
  auto* explain_cmd = app.add_subcommand("explain", "occlusion attributions for input texts");
  auto* fidelity_cmd = app.add_subcommand("fidelity", "deletion and insertion curves");
  auto* align_cmd = app.add_subcommand("align", "score concepts against aspect annotations");
  auto* report_cmd = app.add_subcommand("report", "assemble the static HTML report");
  for (auto* cmd : {extract_cmd, rank_cmd, explain_cmd, fidelity_cmd, align_cmd, report_cmd}) add_run_options(cmd, o);

  std::vector<std::string> explain_texts;
  std::optional<std::string> explain_input;
  std::optional<std::size_t> explain_max;
  explain_cmd->add_option("--text", explain_texts, "text to explain (repeatable)");
  explain_cmd->add_option("--input", explain_input, "NDJSON corpus to explain");
  explain_cmd->add_option("--max-excerpts", explain_max, "cap on explained excerpts");

  std::optional<std::size_t> num_random, subsets, subset_size;
  fidelity_cmd->add_option("--num-random", num_random, "random orderings");
  fidelity_cmd->add_option("--subsets", subsets, "disjoint evaluation subsets");
  fidelity_cmd->add_option("--subset-size", subset_size, "excerpts per subset");

  std::optional<std::string> annotations;
  std::optional<double> overlap_frac;
  align_cmd->add_option("--annotations", annotations, "NDJSON aspect annotations");
  align_cmd->add_option("--overlap-frac", overlap_frac, "minimum overlap as a fraction of the excerpt");

  std::string serve_spec, listen;
  auto* serve = app.add_subcommand("serve", "expose a provider over the wire protocol (stdio or TCP)");
  serve->add_option("--provider", serve_spec, "provider spec")->required();
  serve->add_option("--listen", listen, "host:port; stdio when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (toy->parsed()) return cmd_toy_corpus(corpus_out, annotations_out, toy_docs, toy_seed);
    if (train->parsed()) return cmd_train_toy(train_corpus, train_out, tc);
    if (serve->parsed()) return cmd_serve(serve_spec, listen);

    RunConfig c = resolve(o);
    if (explain_input) c.explain_input = *explain_input;
    if (explain_max) c.explain_max = *explain_max;
    if (num_random) c.num_random = *num_random;
    if (subsets) c.subsets = *subsets;
    if (subset_size) c.subset_size = *subset_size;
    if (annotations) c.annotations = *annotations;
    if (overlap_frac) c.overlap_frac = *overlap_frac;
    cli::validate(c);

    if (extract_cmd->parsed()) return cmd_extract(c);
    if (rank_cmd->parsed()) return cmd_rank(c);
    if (explain_cmd->parsed()) return cmd_explain(c, explain_texts);
    if (fidelity_cmd->parsed()) return cmd_fidelity(c);
    if (align_cmd->parsed()) return cmd_align(c);
    if (report_cmd->parsed()) return cmd_report(c);
  } catch (const conex::Error& e) {
    std::cerr << "conex: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "conex: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
