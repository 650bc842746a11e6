#include <doctest.h>

#include <sstream>

#include "conex/alignment.hpp"
#include "conex/errors.hpp"

using namespace conex;

namespace {

Excerpt ex(const std::string& doc, std::size_t start, std::size_t end) {
  return {std::string(end - start, 'x'), doc, {start, end}, Granularity::sentence};
}

// Three concepts over n excerpts with hand-set presence.
ConceptModel presence_model(std::size_t r) {
  ConceptModel m;
  m.r = r;
  m.W = DenseMatrix(2, r, 1.0);
  m.presence_threshold.assign(r, 0.5);
  return m;
}

}  // namespace

TEST_SUITE("alignment") {
  TEST_CASE("precision, recall and F1 from counts") {
    const auto s = prf({30, 20, 10, 40});
    CHECK(std::abs(s.precision - 0.6) <= 1e-9);
    CHECK(std::abs(s.recall - 0.75) <= 1e-9);
    CHECK(std::abs(s.f1 - 2.0 / 3.0) <= 1e-9);
    CHECK(std::abs(s.accuracy - 0.7) <= 1e-9);

    const auto none = prf({0, 0, 5, 5});
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);
    const auto perfect = prf({7, 0, 0, 3});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
  }

  TEST_CASE("overlap fraction is measured against the excerpt length") {
    const std::map<std::string, std::size_t> len{{"d", 100}};
    const std::vector<AspectAnnotation> ann{{"d", "taste", {{0, 6}}}};
    const std::vector<Excerpt> excerpts{ex("d", 0, 10)};  // overlap 6 of 10
    CHECK(label_excerpts(excerpts, ann, len, 0.6).positive[0][0]);
    CHECK(label_excerpts(excerpts, ann, len, 0.4).positive[0][0]);
    CHECK_FALSE(label_excerpts(excerpts, ann, len, 0.61).positive[0][0]);
    CHECK(label_excerpts(excerpts, ann, len, 0.0).positive[0][0]);

    // Touching but not overlapping is negative even at fraction 0.
    const std::vector<Excerpt> adjacent{ex("d", 6, 12)};
    CHECK_FALSE(label_excerpts(adjacent, ann, len, 0.0).positive[0][0]);
    // Other documents never match.
    const std::vector<Excerpt> other{ex("e", 0, 10)};
    CHECK_FALSE(label_excerpts(other, ann, {{"d", 100}, {"e", 100}}, 0.0).positive[0][0]);
  }

  TEST_CASE("annotation validation") {
    const std::vector<AspectAnnotation> unknown{{"zz", "a", {{0, 1}}}, {"yy", "a", {{0, 1}}}};
    try {
      validate_annotations(unknown, {{"d", 10}});
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("yy, zz") != std::string::npos);
    }
    CHECK_THROWS_AS(validate_annotations({{"d", "a", {{5, 20}}}}, {{"d", 10}}), DataError);
    CHECK_THROWS_AS(validate_annotations({{"d", "a", {{0, 5}, {4, 8}}}}, {{"d", 10}}), DataError);
    CHECK_NOTHROW(validate_annotations({{"d", "a", {{0, 5}, {5, 8}}}}, {{"d", 10}}));
    CHECK_THROWS_AS(label_excerpts({}, {}, {}, 1.5), ConfigError);
  }

  TEST_CASE("reading annotations groups spans by document and aspect") {
    std::stringstream in(
        R"({"doc_id":"d1","aspect":"smell","start":0,"end":4})"
        "\n"
        R"({"doc_id":"d1","aspect":"look","start":5,"end":9})"
        "\n\n"
        R"({"doc_id":"d1","aspect":"smell","start":10,"end":12})"
        "\n");
    const auto a = read_annotations(in);
    REQUIRE(a.size() == 2);
    CHECK(a[0].aspect == "smell");
    CHECK(a[0].spans.size() == 2);
    CHECK(a[1].aspect == "look");
    std::stringstream bad(R"({"doc_id":"d1","start":0,"end":4})");
    CHECK_THROWS_AS(read_annotations(bad), FormatError);
  }

  TEST_CASE("best concept is the max-F1 concept") {
    // 10 excerpts; aspect positive on 0..3.
    AspectFlags flags;
    flags.aspects = {"aspect", "empty"};
    flags.positive.assign(10, {false, false});
    for (int i = 0; i < 4; ++i) flags.positive[i][0] = true;

    // concept 0: present on 0..9 → P 0.4, R 1, F1 0.571
    // concept 1: present on 0..2 → P 1, R 0.75, F1 0.857
    // concept 2: present on 2..5 → P 0.5, R 0.5, F1 0.5
    DenseMatrix U(10, 3, 0.0);
    for (int i = 0; i < 10; ++i) U(i, 0) = 1.0;
    for (int i = 0; i < 3; ++i) U(i, 1) = 1.0;
    for (int i = 2; i < 6; ++i) U(i, 2) = 1.0;
    const auto res = score_concepts(presence_model(3), U, flags);
    REQUIRE(res.size() == 2);
    CHECK(res[0].best_concept == 1);
    CHECK(std::abs(res[0].best.f1 - 6.0 / 7.0) <= 1e-9);
    CHECK(std::abs(res[0].per_concept[0].score.f1 - 4.0 / 7.0) <= 1e-9);
    CHECK(std::abs(res[0].per_concept[2].score.f1 - 0.5) <= 1e-9);
    CHECK(res[0].positives == 4);
    CHECK_FALSE(res[0].undefined_recall);
    CHECK(res[1].undefined_recall);
    CHECK(res[1].best_concept == 0);

    std::stringstream csv;
    write_alignment_csv(csv, res, 3, 0.9);
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "r,acc,avg_p,avg_r,avg_f1,aspect_concept,aspect_p,aspect_r,aspect_f1,empty_concept,empty_p,empty_r,"
                    "empty_f1");
    CHECK(row.rfind("3,0.900000,", 0) == 0);

    std::stringstream js;
    write_alignment_json(js, res);
    const auto back = read_alignment_json(js);
    REQUIRE(back.size() == 2);
    CHECK(back[0].best_concept == 1);
    CHECK(back[1].undefined_recall);
  }

  TEST_CASE("presence identical to the aspect gives perfect scores") {
    AspectFlags flags;
    flags.aspects = {"a"};
    DenseMatrix U(6, 1, 0.0);
    for (int i = 0; i < 6; ++i) {
      flags.positive.push_back({i % 2 == 0});
      U(i, 0) = i % 2 == 0 ? 1.0 : 0.0;
    }
    const auto res = score_concepts(presence_model(1), U, flags);
    CHECK(res[0].best.precision == 1.0);
    CHECK(res[0].best.recall == 1.0);
    CHECK(res[0].best.f1 == 1.0);
  }
}
