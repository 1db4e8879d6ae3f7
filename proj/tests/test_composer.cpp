#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "condchain/backend_procedural.hpp"
#include "condchain/composer.hpp"
#include "condchain/engine.hpp"
#include "support/fixtures.hpp"

using namespace condchain;
using json = nlohmann::ordered_json;

namespace {

// A procedurally built skeleton of the requested exact depth.
ChainSkeleton procedural_skeleton(int depth, std::uint64_t seed) {
  EngineConfig config;
  config.d_min = depth;
  config.d_max = depth;
  config.rng_seed = seed;
  ProceduralBackend backend(seed);
  InputRef input;
  input.domain = Domain::Natural;
  input.id = "compose-" + std::to_string(seed);
  return build_chain(input, config, backend);
}

}  // namespace

TEST_CASE("deleak rejects subjects carrying tested tokens") {
  Layer layer;
  layer.index = 1;
  layer.subject = "the red car";
  layer.facts = FactMap::parse(R"({"color":"red","position":"left"})");
  layer.pair = PredicatePair::parse("color == \"red\"", "color == \"blue\"");

  SECTION("leaking proposal is regenerated") {
    fixtures::FixtureBuilder fb;
    fb.add("deleaker", {{"safe_subject", "the red car"}});
    fb.add("deleaker", {{"safe_subject", "the car on the left side"}});
    ScriptedBackend backend = fb.backend();
    // "left" is the value of `position`, which p does not read; only "red"
    // and "blue" (literals) plus color's value are forbidden
    CHECK(deleak_subject(layer, backend) == "the car on the left side");
  }
  SECTION("value tokens of tested keys are forbidden") {
    Layer counted;
    counted.index = 1;
    counted.subject = "the 50-item list";
    counted.facts = FactMap::parse(R"({"count":50})");
    counted.pair = PredicatePair::parse("count == 50", "count == 51");
    fixtures::FixtureBuilder fb;
    fb.add("deleaker", {{"safe_subject", "the 50-item list"}});
    fb.add("deleaker", {{"safe_subject", "the list in the sidebar"}});
    ScriptedBackend backend = fb.backend();
    CHECK(deleak_subject(counted, backend) == "the list in the sidebar");
  }
  SECTION("non-tested attributes may appear") {
    fixtures::FixtureBuilder fb;
    fb.add("deleaker", {{"safe_subject", "the vehicle near the curb"}});
    ScriptedBackend backend = fb.backend();
    CHECK(deleak_subject(layer, backend) == "the vehicle near the curb");
  }
  SECTION("retries exhausted surfaces the leaking token") {
    fixtures::FixtureBuilder fb;
    for (int i = 0; i < 3; ++i) fb.add("deleaker", {{"safe_subject", "the red car"}});
    ScriptedBackend backend = fb.backend();
    CHECK_THROWS_AS(deleak_subject(layer, backend), RetriesExhaustedError);
  }
}

TEST_CASE("render_instruction emits the versioned nested template") {
  MultipleChoiceQuestion q;
  q.prompt = "Where is the truck?";
  q.options = {{'A', "left"}, {'B', "right"}};
  q.answer_label = 'B';

  std::string one = render_instruction({{"the vehicle", "the car is red and on the left"}}, q);
  CHECK(one ==
        "If, regarding the vehicle, the car is red and on the left, then\n"
        "  answer the following question;\n"
        "otherwise, answer question Q1.\n"
        "\n"
        "Question: Where is the truck?\n"
        "A. left\n"
        "B. right\n");

  std::string two = render_instruction(
      {{"the vehicle", "it is red"}, {"the sign", "it is round"}}, q);
  CHECK(two ==
        "If, regarding the vehicle, it is red, then\n"
        "  If, regarding the sign, it is round, then\n"
        "    answer the following question;\n"
        "  otherwise, answer question Q2.\n"
        "otherwise, answer question Q1.\n"
        "\n"
        "Question: Where is the truck?\n"
        "A. left\n"
        "B. right\n");

  // byte determinism
  CHECK(render_instruction({{"s", "c"}}, q) == render_instruction({{"s", "c"}}, q));
  CHECK_THROWS_AS(render_instruction({}, q), ComposerError);
}

TEST_CASE("tiny example compiles into a near-isomorphic pair") {
  ScriptedBackend backend = fixtures::tiny_example_backend();
  ChainSkeleton skeleton =
      build_chain(fixtures::tiny_example_input(), fixtures::tiny_example_config(), backend);
  auto [t_inst, f_inst] = compile_pair(skeleton, 7, backend);

  CHECK(t_inst.path_kind == PathKind::TruePath);
  CHECK_FALSE(t_inst.divergence_layer.has_value());
  CHECK(t_inst.instruction_text.find("the car is red and on the left") != std::string::npos);
  CHECK(t_inst.question == skeleton.final_question);

  CHECK(f_inst.path_kind == PathKind::FalsePath);
  REQUIRE(f_inst.divergence_layer.has_value());
  CHECK(*f_inst.divergence_layer == 1);  // single layer
  CHECK(f_inst.instruction_text.find("the car is blue and on the left") != std::string::npos);
  CHECK(f_inst.question == skeleton.layers[0].aux_question);

  IsomorphismCheck iso = near_isomorphism_check(t_inst, f_inst);
  INFO(iso.diff_summary);
  CHECK(iso.passed);
  CHECK(leak_free(skeleton));
  CHECK(skeleton.layers[0].safe_subject == "the vehicle beside the truck");
}

TEST_CASE("T=2 always diverges at layer 1") {
  for (std::uint64_t seed : {1ULL, 77ULL, 31337ULL}) {
    ChainSkeleton skeleton = procedural_skeleton(2, 5000 + seed);
    ProceduralBackend backend(9000 + seed);
    auto [t, f] = compile_pair(skeleton, seed, backend);
    (void)t;
    REQUIRE(f.divergence_layer.has_value());
    CHECK(*f.divergence_layer == 1);
  }
}

TEST_CASE("divergence layers are uniform over {1..T-1}") {
  ChainSkeleton skeleton = procedural_skeleton(5, 123);
  std::map<int, int> histogram;
  for (std::uint64_t seed = 1; seed <= 2000; ++seed) {
    ProceduralBackend backend(42);
    ChainSkeleton copy = skeleton;
    auto [t, f] = compile_pair(copy, seed, backend);
    REQUIRE(f.divergence_layer.has_value());
    histogram[*f.divergence_layer]++;
  }
  REQUIRE(histogram.size() == 4);
  for (const auto& [j, count] : histogram) {
    CHECK(j >= 1);
    CHECK(j <= 4);
    CHECK(count > 400);  // 2000/4 = 500 expected
    CHECK(count < 600);
  }
}

TEST_CASE("equal seeds compile byte-identical instances") {
  ChainSkeleton skeleton = procedural_skeleton(4, 321);
  ProceduralBackend b1(55), b2(55);
  ChainSkeleton s1 = skeleton, s2 = skeleton;
  auto [t1, f1] = compile_pair(s1, 99, b1);
  auto [t2, f2] = compile_pair(s2, 99, b2);
  CHECK(t1.to_json().dump() == t2.to_json().dump());
  CHECK(f1.to_json().dump() == f2.to_json().dump());
}

TEST_CASE("near-isomorphism rejects stray differences") {
  ChainSkeleton skeleton = procedural_skeleton(3, 777);
  ProceduralBackend backend(88);
  auto [t_inst, f_inst] = compile_pair(skeleton, 5, backend);
  CHECK(near_isomorphism_check(t_inst, f_inst).passed);

  SECTION("re-rendered clause outside the divergence layer") {
    BenchmarkInstance tampered = f_inst;
    int other_clause = *f_inst.divergence_layer == 1 ? 2 : 1;
    // regenerate the false text with an extra change in another clause
    std::vector<std::pair<std::string, std::string>> clauses;
    for (int t = 0; t < skeleton.depth(); ++t) {
      const Layer& layer = skeleton.layers[t];
      std::string cond = t + 1 == *f_inst.divergence_layer ? layer.condition_false
                                                           : layer.condition_true;
      if (t + 1 == other_clause) cond += " indeed";
      clauses.emplace_back(*layer.safe_subject, cond);
    }
    tampered.instruction_text = render_instruction(clauses, tampered.question);
    IsomorphismCheck iso = near_isomorphism_check(t_inst, tampered);
    CHECK_FALSE(iso.passed);
    CHECK(iso.diff_summary.find("outside the divergence clause") != std::string::npos);
  }
  SECTION("pair from different skeletons") {
    BenchmarkInstance foreign = f_inst;
    foreign.chain_ref = "someone-else";
    CHECK_FALSE(near_isomorphism_check(t_inst, foreign).passed);
  }
}

TEST_CASE("compile_pair validates its inputs") {
  ChainSkeleton skeleton = procedural_skeleton(2, 4242);
  ProceduralBackend backend(11);

  SECTION("missing aux question") {
    ChainSkeleton broken = skeleton;
    broken.layers[0].aux_question.options.clear();
    CHECK_THROWS_AS(compile_pair(broken, 1, backend), MissingQuestion);
  }
  SECTION("missing final question") {
    ChainSkeleton broken = skeleton;
    broken.final_question.prompt.clear();
    CHECK_THROWS_AS(compile_pair(broken, 1, backend), MissingQuestion);
  }
  SECTION("gate re-check at compile time") {
    ChainSkeleton broken = skeleton;
    // swap the pair so the "true logic" now evaluates false
    std::swap(broken.layers[0].pair.p_ast, broken.layers[0].pair.p_tilde_ast);
    std::swap(broken.layers[0].pair.p_source, broken.layers[0].pair.p_tilde_source);
    CHECK_THROWS_AS(compile_pair(broken, 1, backend), ComposerError);
  }
}
