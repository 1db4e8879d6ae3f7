#include <catch2/catch_amalgamated.hpp>

#include "condchain/adapters.hpp"

using namespace condchain;

TEST_CASE("chart length mismatch truncates to the shorter column") {
  ChartMeta meta = normalize_chart({"a", "b", "c", "d", "e"}, {1, 2, 3, 4}, ChartKind::Bar);
  CHECK(meta.x_labels.size() == 4);
  CHECK(meta.y_values.size() == 4);
  REQUIRE(meta.repair_log.size() == 1);
  CHECK(meta.repair_log[0].action == "truncate");
  CHECK(meta.repair_log[0].detail.find("x length 5") != std::string::npos);
  CHECK(meta.repair_log[0].detail.find("y length 4") != std::string::npos);
}

TEST_CASE("well-formed charts pass through unchanged") {
  ChartMeta meta = normalize_chart({"a", "b"}, {1.5, 2.5}, ChartKind::Line);
  CHECK(meta.x_labels == std::vector<std::string>{"a", "b"});
  CHECK(meta.y_values == std::vector<double>{1.5, 2.5});
  CHECK(meta.repair_log.empty());
}

TEST_CASE("zero placeholders are dropped without a repair hook") {
  ChartMeta meta = normalize_chart({"a", "b", "c", "d"}, {1, 0, 3, 4}, ChartKind::Bar,
                                   {false, true, false, false});
  CHECK(meta.x_labels == std::vector<std::string>{"a", "c", "d"});
  CHECK(meta.y_values == std::vector<double>{1, 3, 4});
  REQUIRE(meta.repair_log.size() == 1);
  CHECK(meta.repair_log[0].action == "drop-placeholder");
}

TEST_CASE("legitimate zeros survive when unflagged") {
  ChartMeta meta = normalize_chart({"a", "b"}, {0, 2}, ChartKind::Bar, {false, false});
  CHECK(meta.y_values == std::vector<double>{0, 2});
  CHECK(meta.repair_log.empty());
}

TEST_CASE("repair hook recovers flagged values") {
  ChartMeta meta = normalize_chart({"a", "b"}, {1, 0}, ChartKind::Bar, {false, true},
                                   [](const std::string& label) -> std::optional<double> {
                                     CHECK(label == "b");
                                     return 7.0;
                                   });
  CHECK(meta.y_values == std::vector<double>{1, 7});
  REQUIRE(meta.repair_log.size() == 1);
  CHECK(meta.repair_log[0].action == "repair-placeholder");
}

TEST_CASE("chart normalization is idempotent") {
  ChartMeta first = normalize_chart({"a", "b", "c", "d", "e"}, {1, 0, 3, 4}, ChartKind::Pie,
                                    {false, true, false, false});
  ChartMeta second = normalize_chart(first.x_labels, first.y_values, first.chart_kind);
  CHECK(second.x_labels == first.x_labels);
  CHECK(second.y_values == first.y_values);
  CHECK(second.repair_log.empty());
}

TEST_CASE("audit: original lengths reconstructible from log and output") {
  std::vector<std::string> x{"a", "b", "c", "d", "e"};
  std::vector<double> y{1, 0, 3, 4};
  ChartMeta meta = normalize_chart(x, y, ChartKind::Bar, {false, true, false, false});
  std::size_t dropped = 0, truncated_from_x = 0;
  for (const auto& entry : meta.repair_log) {
    if (entry.action == "drop-placeholder") ++dropped;
    if (entry.action == "truncate") truncated_from_x = 5 - 4;  // from the recorded lengths
  }
  CHECK(meta.y_values.size() + dropped + truncated_from_x == x.size());
}

TEST_CASE("all entries dropped is an error") {
  CHECK_THROWS_AS(normalize_chart({"a"}, {0}, ChartKind::Bar, {true}), EmptyAfterRepair);
  CHECK_THROWS_AS(normalize_chart({}, {}, ChartKind::Bar), AdapterError);
}

TEST_CASE("trajectory completeness gate") {
  std::vector<std::string> nine(9, "frame");
  std::vector<std::string> actions(9, "click on the Allow button");
  TrajectoryResult ok = validate_trajectory(nine, actions);
  REQUIRE(ok.accepted());
  CHECK(ok.trajectory->parsed_actions.size() == 9);

  std::vector<std::string> eight(8, "click Home");
  TrajectoryResult bad = validate_trajectory(nine, eight);
  CHECK_FALSE(bad.accepted());
  REQUIRE(bad.rejection.has_value());
  CHECK(bad.rejection->code == "LengthMismatch");

  TrajectoryResult empty = validate_trajectory({}, {});
  CHECK_FALSE(empty.accepted());
  CHECK(empty.rejection->code == "EmptyTrajectory");
}

TEST_CASE("CoAT parsing with the default pattern table") {
  StructuredAction click = parse_coat("click on the Allow button");
  CHECK(click.action_type == ActionType::Click);
  REQUIRE(click.target_element.has_value());
  CHECK(*click.target_element == "Allow button");
  CHECK(click.raw == "click on the Allow button");

  StructuredAction scroll = parse_coat("scroll down on the settings page");
  CHECK(scroll.action_type == ActionType::Scroll);
  REQUIRE(scroll.location.has_value());
  CHECK(*scroll.location == "settings page");
  CHECK_FALSE(scroll.target_element.has_value());

  StructuredAction type_text = parse_coat("type \"hello world\" into the search box");
  CHECK(type_text.action_type == ActionType::TypeText);
  CHECK(*type_text.target_element == "hello world");
  CHECK(*type_text.location == "search box");

  StructuredAction press = parse_coat("press the Home button");
  CHECK(press.action_type == ActionType::Press);
  CHECK(*press.target_element == "Home");

  StructuredAction nav = parse_coat("navigate to the profile screen");
  CHECK(nav.action_type == ActionType::Navigate);
  CHECK(*nav.target_element == "profile screen");

  StructuredAction garbled = parse_coat("\xE2\x96\x86\xE2\x96\x86 garbled");
  CHECK(garbled.action_type == ActionType::Other);
  CHECK(garbled.raw == "\xE2\x96\x86\xE2\x96\x86 garbled");
  CHECK_FALSE(garbled.target_element.has_value());
}

TEST_CASE("custom pattern tables take precedence in order") {
  std::vector<CoatPattern> table = {
      {ActionType::Other, R"(^swipe .*$)", 0, 0},
      {ActionType::Click, R"(^swipe (.+)$)", 1, 0},  // unreachable: first match wins
  };
  CHECK(parse_coat("swipe left", table).action_type == ActionType::Other);
}

TEST_CASE("natural passthrough") {
  InputRef r = normalize_natural("sam_000123.jpg");
  CHECK(r.domain == Domain::Natural);
  CHECK(r.id == "sam_000123.jpg");
  CHECK_THROWS_AS(normalize_natural(""), ValidationError);
}

TEST_CASE("adapter outputs embed into input descriptors") {
  ChartMeta meta = normalize_chart({"q1", "q2"}, {10, 20}, ChartKind::Bar);
  InputRef chart = chart_input("chartqa-17", meta);
  CHECK(chart.domain == Domain::Chart);
  CHECK(chart.payload["x_labels"][0] == "q1");

  TrajectoryResult tr = validate_trajectory({"s1", "s2"}, {"click OK", "press Back"});
  InputRef gui = gui_input("aitz-4", *tr.trajectory);
  CHECK(gui.domain == Domain::Gui);
  CHECK(gui.payload["parsed_actions"].size() == 2);
}
