#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kgr/rules.hpp"
#include "helpers.hpp"

using namespace kgr;

namespace {

// Small drug-repurposing-flavored graph with a pharmacologic class, a
// similarity clique, and a binding/association route. Inverses added so rule
// bodies can walk edges backwards.
KnowledgeGraph hetio_like() {
  std::vector<std::array<std::string, 3>> triples = {
      {"Hydrochlorothiazide", "treats", "Hypertension"},
      {"Chlorothiazide", "treats", "Hypertension"},
      {"PC_Thiazide", "includes", "Hydrochlorothiazide"},
      {"PC_Thiazide", "includes", "Chlorothiazide"},
      {"Sorafenib", "resembles", "Regorafenib"},
      {"Regorafenib", "resembles", "Sorafenib"},
      {"Sorafenib", "treats", "LiverCancer"},
      {"Regorafenib", "treats", "LiverCancer"},
      {"Sorafenib", "binds", "BRAF"},
      {"LiverCancer", "associates", "BRAF"},
  };
  std::vector<std::array<std::string, 2>> types = {
      {"Hydrochlorothiazide", "Compound"}, {"Chlorothiazide", "Compound"},
      {"Sorafenib", "Compound"},           {"Regorafenib", "Compound"},
      {"PC_Thiazide", "Pharmacologic_Class"},
      {"Hypertension", "Disease"},         {"LiverCancer", "Disease"},
      {"BRAF", "Gene"},
  };
  KnowledgeGraph kg = KnowledgeGraph::build(triples, types);
  kg.add_inverse_relations();
  return kg;
}

const std::vector<std::string> kRuleLines = {
    "# mined rules, head: treats",
    "HEAD Compound treats Disease",
    "",
    "SCORE=0.446 Compound -[includes^-1]-> Pharmacologic_Class -[includes]-> Compound -[treats]-> Disease",
    "SCORE=0.265 Compound -[resembles]-> Compound -[resembles]-> Compound -[treats]-> Disease",
    "SCORE=0.184 Compound -[binds]-> Gene -[associates^-1]-> Disease",
};

// n parallel chains C_i -[binds]-> G_i -[causes]-> D_i; the first k of them
// also carry the head edge C_i -[treats]-> D_i. One off-chain treats edge
// keeps the relation in the vocabulary even when k = 0.
KnowledgeGraph chains(int n, int k) {
  std::vector<std::array<std::string, 3>> triples;
  std::vector<std::array<std::string, 2>> types;
  for (int i = 0; i < n; ++i) {
    const std::string c = "C" + std::to_string(i);
    const std::string g = "G" + std::to_string(i);
    const std::string d = "D" + std::to_string(i);
    triples.push_back({c, "binds", g});
    triples.push_back({g, "causes", d});
    if (i < k) triples.push_back({c, "treats", d});
    types.push_back({c, "Compound"});
    types.push_back({g, "Gene"});
    types.push_back({d, "Disease"});
  }
  triples.push_back({"C_lone", "treats", "D_lone"});
  types.push_back({"C_lone", "Compound"});
  types.push_back({"D_lone", "Disease"});
  return KnowledgeGraph::build(triples, types);
}

Rule chain_rule(const KnowledgeGraph& kg, double score = 0.5) {
  const Vocabulary& v = kg.vocab();
  Rule r;
  r.head_source = v.type_id("Compound").value();
  r.head_relation = v.relation_id("treats").value();
  r.head_target = v.type_id("Disease").value();
  r.body.types = {v.type_id("Compound").value(), v.type_id("Gene").value(),
                  v.type_id("Disease").value()};
  r.body.rels = {v.relation_id("binds").value(), v.relation_id("causes").value()};
  r.score = score;
  return r;
}

}  // namespace

TEST_CASE("rule file parses into head plus scored metapath bodies") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  RuleSet set = parse_rules(kRuleLines, v);

  CHECK(set.head_source == v.type_id("Compound").value());
  CHECK(set.head_relation == v.relation_id("treats").value());
  CHECK(set.head_target == v.type_id("Disease").value());
  REQUIRE(set.size() == 3);
  CHECK(set.max_body_length() == 3);

  CHECK(set.rules[0].score == 0.446);
  CHECK(set.rules[1].score == 0.265);
  CHECK(set.rules[2].score == 0.184);

  const Rule& r0 = set.rules[0];
  REQUIRE(r0.body.length() == 3);
  CHECK(r0.body.rels[0] == v.relation_id("includes^-1").value());
  CHECK(r0.body.rels[1] == v.relation_id("includes").value());
  CHECK(r0.body.rels[2] == v.relation_id("treats").value());
  CHECK(r0.body.types[1] == v.type_id("Pharmacologic_Class").value());

  const Rule& r2 = set.rules[2];
  REQUIRE(r2.body.length() == 2);
  CHECK(r2.body.rels[1] == v.relation_id("associates^-1").value());
  CHECK(r2.body.types == std::vector<TypeId>{v.type_id("Compound").value(),
                                             v.type_id("Gene").value(),
                                             v.type_id("Disease").value()});
}

TEST_CASE("serialize then reparse is the identity") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  RuleSet set = parse_rules(kRuleLines, v);

  std::string text = serialize_rules(set, v);
  std::vector<std::string> lines = kgrtest::split_lines_for_test(text);
  RuleSet back = parse_rules(lines, v);
  REQUIRE(back.size() == set.size());
  CHECK(back.head_relation == set.head_relation);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back.rules[i].score == set.rules[i].score);
    CHECK(back.rules[i].body == set.rules[i].body);
  }
  CHECK(serialize_rules(back, v) == text);
}

TEST_CASE("malformed rule files are rejected with the specific error") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  auto with_head = [](std::vector<std::string> body) {
    body.insert(body.begin(), "HEAD Compound treats Disease");
    return body;
  };

  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=1.2 Compound -[treats]-> Disease"}), v),
                  ScoreOutOfRange);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=-0.1 Compound -[treats]-> Disease"}), v),
                  ScoreOutOfRange);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5"}), v), MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Compound treats Disease"}), v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Compound -[treats]->"}), v), MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Compound -[transmutes]-> Disease"}), v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Alchemy -[treats]-> Disease"}), v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Gene -[associates^-1]-> Disease"}), v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"0.5 Compound -[treats]-> Disease"}), v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules(with_head({"SCORE=0.5 Compound -[treats]-> Disease",
                                         "SCORE=0.3 Compound -[treats]-> Disease"}),
                              v),
                  MalformedRule);
  CHECK_THROWS_AS(parse_rules({"SCORE=0.5 Compound -[treats]-> Disease"}, v), MalformedRule);
  CHECK_THROWS_AS(parse_rules({"# only a comment"}, v), MalformedRule);
}

TEST_CASE("instance paths project onto metapaths, dropping stay steps") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  auto e = [&](const char* name) { return v.entity_id(name).value(); };
  auto r = [&](const char* name) { return v.relation_id(name).value(); };

  InstancePath direct{{e("Sorafenib"), e("BRAF"), e("LiverCancer")},
                      {r("binds"), r("associates^-1")}};
  Metapath m = metapath_of(kg, direct);
  CHECK(m.types == std::vector<TypeId>{v.type_id("Compound").value(), v.type_id("Gene").value(),
                                       v.type_id("Disease").value()});
  CHECK(m.rels == std::vector<RelationId>{r("binds"), r("associates^-1")});

  InstancePath padded{{e("Sorafenib"), e("BRAF"), e("BRAF"), e("LiverCancer")},
                      {r("binds"), kg.stay_relation(), r("associates^-1")}};
  CHECK(metapath_of(kg, padded) == m);

  InstancePath all_stay{{e("Sorafenib"), e("Sorafenib")}, {kg.stay_relation()}};
  Metapath trivial = metapath_of(kg, all_stay);
  CHECK(trivial.rels.empty());
  CHECK(trivial.types.size() == 1);

  InstancePath not_an_edge{{e("Sorafenib"), e("Hypertension")}, {r("treats")}};
  CHECK_THROWS_AS(metapath_of(kg, not_an_edge), InvalidPath);
  InstancePath moving_stay{{e("Sorafenib"), e("BRAF")}, {kg.stay_relation()}};
  CHECK_THROWS_AS(metapath_of(kg, moving_stay), InvalidPath);
  InstancePath ragged{{e("Sorafenib")}, {r("treats")}};
  CHECK_THROWS_AS(metapath_of(kg, ragged), InvalidPath);
}

TEST_CASE("rule match is exact on length, types, and relations") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  RuleSet set = parse_rules(kRuleLines, v);
  auto e = [&](const char* name) { return v.entity_id(name).value(); };
  auto r = [&](const char* name) { return v.relation_id(name).value(); };

  InstancePath binding{{e("Sorafenib"), e("BRAF"), e("BRAF"), e("LiverCancer")},
                       {r("binds"), kg.stay_relation(), r("associates^-1")}};
  CHECK(matches(kg, binding, set.rules[2]));
  CHECK(!matches(kg, binding, set.rules[0]));
  CHECK(!matches(kg, binding, set.rules[1]));

  InstancePath classmates{
      {e("Hydrochlorothiazide"), e("PC_Thiazide"), e("Chlorothiazide"), e("Hypertension")},
      {r("includes^-1"), r("includes"), r("treats")}};
  CHECK(matches(kg, classmates, set.rules[0]));

  InstancePath similar{{e("Sorafenib"), e("Regorafenib"), e("Sorafenib"), e("LiverCancer")},
                       {r("resembles"), r("resembles"), r("treats")}};
  CHECK(matches(kg, similar, set.rules[1]));
  // same relations, shorter walk: no match
  InstancePath shorter{{e("Sorafenib"), e("Regorafenib"), e("LiverCancer")},
                       {r("resembles"), r("treats")}};
  CHECK(!matches(kg, shorter, set.rules[1]));
}

TEST_CASE("confidence estimate is exact when every body path is supported") {
  KnowledgeGraph kg = chains(4, 4);
  CHECK(estimate_confidence(kg, chain_rule(kg), 2000, 99) == 1.0);
}

TEST_CASE("confidence estimate is exact when no body path is supported") {
  KnowledgeGraph kg = chains(4, 0);
  CHECK(estimate_confidence(kg, chain_rule(kg), 2000, 99) == 0.0);
}

TEST_CASE("confidence estimate lands within three sigma of the chain ratio") {
  // With disjoint chains every viable source has exactly one body path, so
  // the sampler's per-source draw and the path ratio coincide and the
  // estimator is binomial around k/n.
  const std::size_t samples = 10000;
  for (int k = 0; k <= 4; ++k) {
    KnowledgeGraph kg = chains(4, k);
    const double p = k / 4.0;
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    const double est = estimate_confidence(kg, chain_rule(kg), samples, 1234 + k);
    INFO("k=" << k << " estimate=" << est);
    CHECK(std::abs(est - p) <= 3.0 * sigma);
  }
}

TEST_CASE("confidence estimate is bit-reproducible under a fixed seed") {
  KnowledgeGraph kg = chains(4, 2);
  Rule rule = chain_rule(kg);
  const double a = estimate_confidence(kg, rule, 5000, 77);
  const double b = estimate_confidence(kg, rule, 5000, 77);
  CHECK(a == b);
  const double c = estimate_confidence(kg, rule, 5000, 78);
  CHECK(a != c);
}

TEST_CASE("a body with no instances in the graph is unrealizable") {
  KnowledgeGraph kg = hetio_like();
  const Vocabulary& v = kg.vocab();
  Rule rule;
  rule.head_source = v.type_id("Compound").value();
  rule.head_relation = v.relation_id("treats").value();
  rule.head_target = v.type_id("Compound").value();
  // no Disease node has an outgoing includes edge
  rule.body.types = {v.type_id("Compound").value(), v.type_id("Disease").value(),
                     v.type_id("Compound").value()};
  rule.body.rels = {v.relation_id("treats").value(), v.relation_id("includes").value()};
  rule.score = 0.5;
  CHECK_THROWS_AS(estimate_confidence(kg, rule, 100, 7), UnrealizableBody);
}
