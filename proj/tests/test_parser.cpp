#include <catch2/catch_amalgamated.hpp>

#include "condchain/eval.hpp"
#include "condchain/parser.hpp"
#include "condchain/unparse.hpp"
#include "support/generators.hpp"

using namespace condchain;
using namespace condchain::vpir;

TEST_CASE("precedence: and binds tighter than or") {
  AstNode n = parse("a and b or c");
  REQUIRE(n.kind == NodeKind::BoolOp);
  CHECK(n.bool_op == BoolKind::Or);
  REQUIRE(n.children.size() == 2);
  CHECK(n.children[0].kind == NodeKind::BoolOp);
  CHECK(n.children[0].bool_op == BoolKind::And);
  CHECK(n.children[1].kind == NodeKind::Identifier);
  CHECK(n.children[1].name == "c");
}

TEST_CASE("chained comparison builds a single Compare node") {
  AstNode n = parse("1 < x <= 5");
  REQUIRE(n.kind == NodeKind::Compare);
  REQUIRE(n.cmp_ops == std::vector<CmpOp>{CmpOp::Lt, CmpOp::Le});
  REQUIRE(n.children.size() == 3);
  CHECK(n.children[1].name == "x");
}

TEST_CASE("chained comparison equals explicit conjunction over a range of x") {
  AstNode chained = parse("1 < x <= 5");
  AstNode expanded = parse("1 < x and x <= 5");
  for (int x = -3; x <= 8; ++x) {
    FactMap facts = FactMap::parse("{\"x\": " + std::to_string(x) + "}");
    CHECK(evaluate(chained, facts) == evaluate(expanded, facts));
  }
}

TEST_CASE("calls outside the whitelist are rejected") {
  try {
    parse("eval(\"x\")");
    FAIL("expected WhitelistError");
  } catch (const WhitelistError& e) {
    CHECK(e.name() == "eval");
  }
}

TEST_CASE("tiny example parse shape") {
  AstNode n = parse("color == \"red\" and position == \"left\"");
  REQUIRE(n.kind == NodeKind::BoolOp);
  CHECK(n.bool_op == BoolKind::And);
  REQUIRE(n.children.size() == 2);
  for (const auto& c : n.children) {
    CHECK(c.kind == NodeKind::Compare);
    CHECK(c.cmp_ops == std::vector<CmpOp>{CmpOp::Eq});
  }
  CHECK(n.children[0].children[0].name == "color");
  CHECK(n.children[0].children[1].literal == "red");
}

TEST_CASE("grammar violations") {
  CHECK_THROWS_AS(parse("a and"), ParseError);
  CHECK_THROWS_AS(parse("(a"), ParseError);
  CHECK_THROWS_AS(parse("a b"), ParseError);
  CHECK_THROWS_AS(parse("for x in y"), ParseError);
  CHECK_THROWS_AS(parse("len(x, y)"), ParseError);
  CHECK_THROWS_AS(parse("round()"), ParseError);
  CHECK_THROWS_AS(parse("len"), ParseError);          // bare builtin
  CHECK_THROWS_AS(parse("x.y"), LexError);            // attribute access not in the language
  CHECK_THROWS_AS(parse("[x, 1]"), ParseError);       // list literals hold literals only
  CHECK_THROWS_AS(parse("any(v for v in xs, 1)"), ParseError);
  CHECK_THROWS_AS(parse("sorted(v for v in xs)"), ParseError);
  CHECK_THROWS_AS(parse("any(v for len in xs)"), ParseError);
}

TEST_CASE("comprehension accepted only as sole argument of reducers") {
  AstNode n = parse("any(o == \"tree\" for o in objects)");
  REQUIRE(n.kind == NodeKind::Call);
  REQUIRE(n.children.size() == 1);
  CHECK(n.children[0].kind == NodeKind::Comprehension);
  CHECK(n.children[0].name == "o");
  CHECK_FALSE(n.children[0].comp_has_filter);

  AstNode f = parse("sum(v for v in xs if v > 0)");
  CHECK(f.children[0].comp_has_filter);
}

TEST_CASE("unparse produces minimal parentheses") {
  CHECK(unparse(parse("(a and b) or c")) == "a and b or c");
  CHECK(unparse(parse("a and (b or c)")) == "a and (b or c)");
  CHECK(unparse(parse("color == \"red\"")) == "color == \"red\"");
  CHECK(unparse(parse("not (a or b)")) == "not (a or b)");
  CHECK(unparse(parse("-(a + b)")) == "-(a + b)");
  CHECK(unparse(parse("a - (b - c)")) == "a - (b - c)");
  CHECK(unparse(parse("(a - b) - c")) == "a - b - c");
  CHECK(unparse(parse("xs[0]")) == "xs[0]");
  CHECK(unparse(parse("len( xs )>=2")) == "len(xs) >= 2");
  CHECK(unparse(parse("x in [1, 2, 3]")) == "x in [1, 2, 3]");
  CHECK(unparse(parse("2.0 * x")) == "2.0 * x");
}

TEST_CASE("whitelist closure holds for every accepted tree") {
  const char* sources[] = {
      "len(xs) >= 2",
      "any(o == \"tree\" for o in objects)",
      "min(a, b) < max(a, b)",
      "sorted(xs)[0] == abs(x)",
      "sum(v for v in xs if v > 0) == round(t, 2)",
  };
  for (const char* src : sources) {
    std::vector<std::string> names;
    collect_call_names(parse(src), names);
    for (const auto& n : names) CHECK(is_builtin(n));
  }
}

TEST_CASE("round-trip: unparse then parse is structurally stable") {
  testgen::Rng rng(0xC0FFEE);
  for (int i = 0; i < 500; ++i) {
    testgen::FuzzCase c = testgen::random_case(rng);
    std::string canon = unparse(c.ast);
    AstNode reparsed;
    INFO("source: " << c.source << "\ncanonical: " << canon);
    REQUIRE_NOTHROW(reparsed = parse(canon));
    CHECK(structurally_equal(c.ast, reparsed));
    CHECK(unparse(reparsed) == canon);
  }
}

TEST_CASE("parse is deterministic") {
  std::string src = "len(objects) >= 2 and any(o == \"tree\" for o in objects)";
  CHECK(structurally_equal(parse(src), parse(src)));
  CHECK(unparse(parse(src)) == unparse(parse(src)));
}
