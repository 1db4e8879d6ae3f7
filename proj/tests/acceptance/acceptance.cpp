// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "condchain/condchain.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/naive_oracle.hpp"
#include "support/table2_golden.hpp"

using namespace condchain;

namespace {

struct Criterion {
  int number;
  std::string name;
  double time_limit_seconds;
  std::function<bool(std::string&)> run;
};

bool expect(bool ok, const std::string& what, std::string& detail) {
  if (!ok && detail.empty()) detail = what;
  return ok;
}

// ---------------------------------------------------------------- criterion 1
bool metric_golden(std::string& detail) {
  bool ok = true;
  for (const auto& row : golden::kScoreboard) {
    for (const auto& cell : {row.natural, row.chart, row.gui}) {
      double computed = round2_half_up(path_f1(cell.true_acc, cell.false_acc));
      if (std::fabs(computed - cell.printed_f1) > 0.01 + 1e-9) {
        ok = false;
        detail = std::string(row.model) + ": computed " + format2(computed) + " vs printed " +
                 format2(cell.printed_f1);
      }
    }
    double avg =
        round2_half_up((row.natural.printed_f1 + row.chart.printed_f1 + row.gui.printed_f1) / 3.0);
    if (std::fabs(avg - row.printed_avg_f1) > 0.01 + 1e-9) {
      ok = false;
      detail = std::string(row.model) + ": avg " + format2(avg) + " vs printed " +
               format2(row.printed_avg_f1);
    }
  }
  ok &= expect(std::fabs(round2_half_up(path_f1(83.92, 12.81)) - 22.23) <= 0.01 + 1e-9,
               "anchor (83.92, 12.81)", detail);
  ok &= expect(std::fabs(round2_half_up(path_f1(29.40, 48.24)) - 36.53) <= 0.01 + 1e-9,
               "anchor (29.40, 48.24)", detail);
  ok &= expect(std::fabs(round2_half_up(path_f1(70.00, 62.50)) - 66.04) <= 0.01 + 1e-9,
               "anchor (70.00, 62.50)", detail);
  ok &= expect(std::fabs(round2_half_up((55.91 + 66.04 + 38.05) / 3.0) - 53.33) <= 0.01 + 1e-9,
               "avg anchor", detail);
  if (ok) detail = "27 rows x 3 domains + avg within +/-0.01";
  return ok;
}

// ---------------------------------------------------------------- criterion 2
bool tiny_example(std::string& detail) {
  ScriptedBackend backend = fixtures::tiny_example_backend();
  ChainSkeleton skeleton =
      build_chain(fixtures::tiny_example_input(), fixtures::tiny_example_config(), backend);
  bool ok = expect(skeleton.depth() == 1, "chain depth != 1", detail);
  if (!ok) return false;
  const Layer& layer = skeleton.layers[0];
  ok &= expect(vpir::verify_pair(layer.pair.p_ast, layer.pair.p_tilde_ast, layer.facts).accepted,
               "verify_pair not accepted", detail);

  auto [t_inst, f_inst] = compile_pair(skeleton, 7, backend);
  ok &= expect(t_inst.instruction_text.find("the car is red and on the left") != std::string::npos,
               "true instance lacks the rendered condition", detail);
  ok &= expect(f_inst.instruction_text.find("the car is blue and on the left") != std::string::npos,
               "false instance lacks the counterfactual clause", detail);
  IsomorphismCheck iso = near_isomorphism_check(t_inst, f_inst);
  ok &= expect(iso.passed, "near-isomorphism failed: " + iso.diff_summary, detail);

  // the two texts differ only within the divergence clause and question block
  std::vector<std::string> wt = split_words(t_inst.instruction_text);
  std::vector<std::string> wf = split_words(f_inst.instruction_text);
  ok &= expect(aligned_diff_count(wt, wf) >= 1, "paired texts are identical", detail);
  if (ok) detail = "1-layer pair compiled, gate accepted, near-isomorphic";
  return ok;
}

// ---------------------------------------------------------------- criterion 3
std::string classify(const std::function<bool()>& eval_fn) {
  try {
    return eval_fn() ? "true" : "false";
  } catch (const vpir::EvalError& e) {
    switch (e.kind()) {
      case vpir::EvalErrorKind::UnboundIdentifier: return "err:unbound";
      case vpir::EvalErrorKind::Type: return "err:type";
      case vpir::EvalErrorKind::NonBooleanResult: return "err:nonbool";
      case vpir::EvalErrorKind::BudgetExceeded: return "err:budget";
    }
  }
  return "err:other";
}

bool differential_fuzz(std::string& detail) {
  testgen::Rng rng(20260811);
  int agree = 0;
  const int kCases = 10000;
  for (int i = 0; i < kCases; ++i) {
    testgen::FuzzCase c = testgen::random_case(rng);
    std::string a = classify([&] { return vpir::evaluate(c.ast, c.facts); });
    std::string b = classify([&] { return oracle::naive_oracle_evaluate(c.ast, c.facts); });
    if (a == b) {
      ++agree;
    } else if (detail.empty()) {
      detail = "disagreement on: " + c.source + " facts " + c.facts.dump() + " (" + a + " vs " +
               b + ")";
    }
  }
  if (agree == kCases) detail = std::to_string(agree) + "/" + std::to_string(kCases) + " agree";
  return agree == kCases;
}

// ---------------------------------------------------------------- criterion 4
std::vector<ChainSkeleton> g_chain_corpus;  // built here, reused by criterion 10

bool gate_universality(std::string& detail) {
  std::mt19937_64 seeds(0xACC4);
  int violations = 0;
  g_chain_corpus.clear();
  g_chain_corpus.reserve(1000);
  for (int run = 0; run < 1000; ++run) {
    EngineConfig config;
    config.d_min = 2 + static_cast<int>(seeds() % 5);                          // 2..6
    config.d_max = config.d_min + static_cast<int>(seeds() % (7 - config.d_min));  // <= 6
    config.rng_seed = seeds();
    ProceduralBackend backend(config.rng_seed);
    InputRef input;
    input.domain = Domain::Natural;
    input.id = "gate-" + std::to_string(run);
    ChainSkeleton skeleton = build_chain(input, config, backend, {});
    if (skeleton.depth() < config.d_min || skeleton.depth() > config.d_max) {
      ++violations;
      if (detail.empty())
        detail = input.id + ": depth " + std::to_string(skeleton.depth()) + " outside [" +
                 std::to_string(config.d_min) + ", " + std::to_string(config.d_max) + "]";
    }
    for (const auto& layer : skeleton.layers) {
      vpir::PairVerdict gate =
          vpir::verify_pair(layer.pair.p_ast, layer.pair.p_tilde_ast, layer.facts);
      if (!gate.accepted) {
        ++violations;
        if (detail.empty())
          detail = input.id + " layer " + std::to_string(layer.index) + ": " + gate.reason_code();
      }
    }
    g_chain_corpus.push_back(std::move(skeleton));
  }
  if (violations == 0) detail = "1000 chains re-checked, zero violations";
  return violations == 0;
}

// ---------------------------------------------------------------- criterion 5
bool divergence_uniformity(std::string& detail) {
  EngineConfig config;
  config.d_min = 5;
  config.d_max = 5;
  config.rng_seed = 20250123;
  ProceduralBackend build_backend(config.rng_seed);
  InputRef input;
  input.domain = Domain::Natural;
  input.id = "uniformity";
  ChainSkeleton skeleton = build_chain(input, config, build_backend);

  std::map<int, int> histogram;
  for (std::uint64_t seed = 1; seed <= 9999; ++seed) {
    ChainSkeleton copy = skeleton;
    ProceduralBackend backend(42);
    auto [t_inst, f_inst] = compile_pair(copy, seed, backend);
    (void)t_inst;
    histogram[*f_inst.divergence_layer]++;
  }
  bool ok = expect(histogram.size() == 4, "support is not {1..4}", detail);
  for (const auto& [j, count] : histogram) {
    if (j < 1 || j > 4 || count < 2375 || count > 2625) {
      ok = false;
      detail = "j=" + std::to_string(j) + " count " + std::to_string(count) +
               " outside 2500 +/- 5%";
    }
  }

  ChainSkeleton c1 = skeleton, c2 = skeleton;
  ProceduralBackend b1(42), b2(42);
  auto [t1, f1] = compile_pair(c1, 777, b1);
  auto [t2, f2] = compile_pair(c2, 777, b2);
  ok &= expect(t1.to_json().dump() == t2.to_json().dump() &&
                   f1.to_json().dump() == f2.to_json().dump(),
               "equal seeds produced different bytes", detail);
  if (ok) {
    detail = "counts";
    for (const auto& [j, count] : histogram) detail += " j" + std::to_string(j) + "=" + std::to_string(count);
  }
  return ok;
}

// ---------------------------------------------------------------- criterion 6
bool complexity_profiles(std::string& detail) {
  vpir::ComplexityProfile simple = vpir::ComplexityProfile::simple();
  vpir::ComplexityProfile complex_p = vpir::ComplexityProfile::complex();

  vpir::ComplexityReport basic = vpir::complexity(vpir::parse("a == 1 and b == 2"));
  bool ok = expect(vpir::check_profile(basic, simple).passed, "a==1 and b==2 should pass Simple",
                   detail);
  ok &= expect(!vpir::check_profile(basic, complex_p).passed, "a==1 and b==2 should fail Complex",
               detail);

  vpir::ComplexityReport rich =
      vpir::complexity(vpir::parse("(a == 1 and b == 2) or (c == 3 and d == 4 and a == 5)"));
  ok &= expect(rich.logical_op_count == 4 && rich.fact_key_count == 4 &&
                   rich.nested_group_count == 2,
               "constructed Complex predicate has wrong counts", detail);
  ok &= expect(vpir::check_profile(rich, complex_p).passed,
               "constructed predicate should pass Complex", detail);

  testgen::Rng rng(0xACC6);
  for (int i = 0; i < 1000; ++i) {
    testgen::FuzzCase c = testgen::random_case(rng);
    vpir::ComplexityReport r = vpir::complexity(c.ast);
    if (vpir::check_profile(r, simple).passed && vpir::check_profile(r, complex_p).passed) {
      ok = false;
      detail = "profiles both passed for: " + c.source;
    }
  }
  if (ok) detail = "bounds disjoint over 1000 fuzzed predicates";
  return ok;
}

// ---------------------------------------------------------------- criterion 7
bool answer_extraction(std::string& detail) {
  const std::set<char> labels{'A', 'B', 'C', 'D'};
  bool ok = true;
  {
    ExtractResult r = extract_answer("...therefore \\boxed{B}", labels);
    ok &= expect(r.label == 'B' && r.method == ExtractionMethod::Boxed, "last-boxed example",
                 detail);
  }
  {
    ExtractResult r = extract_answer("\\boxed{A} ... reconsider ... \\boxed{C}", labels);
    ok &= expect(r.label == 'C' && r.method == ExtractionMethod::Boxed, "boxed precedence",
                 detail);
  }
  {
    ExtractResult r = extract_answer("The answer is (D).", labels);
    ok &= expect(r.label == 'D' && r.method == ExtractionMethod::Fallback, "fallback phrase",
                 detail);
  }
  {
    ExtractResult r = extract_answer("no idea", labels);
    ok &= expect(!r.label && r.method == ExtractionMethod::None, "unparseable output", detail);
  }

  std::mt19937_64 rng(0xACC7);
  const char* fillers[] = {"Let me think.", "Checking the conditions again,",
                           "so the options narrow down.", "Actually, reconsidering:"};
  for (int i = 0; i < 100; ++i) {
    int spans = 2 + static_cast<int>(rng() % 5);
    std::string text;
    char last = 'A';
    for (int s = 0; s < spans; ++s) {
      last = static_cast<char>('A' + rng() % 4);
      text += fillers[rng() % 4];
      text += " \\boxed{" + std::string(1, last) + "}";
      if (rng() % 2) text += "\n";
    }
    ExtractResult r = extract_answer(text, labels);
    if (!(r.label == last && r.method == ExtractionMethod::Boxed)) {
      ok = false;
      detail = "adversarial case " + std::to_string(i) + " picked " +
               (r.label ? std::string(1, *r.label) : "none") + " over " + last;
    }
  }
  if (ok) detail = "4 specified examples + 100 adversarial multi-boxed texts";
  return ok;
}

// ---------------------------------------------------------------- criterion 8
bool coverage_oracle(std::string& detail) {
  // planted Zipf-like counts over 40 templates
  std::map<vpir::TemplateKey, long long> counts;
  std::vector<std::pair<std::string, long long>> rows;
  for (int i = 0; i < 40; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "T%02d", i);
    long long count = std::max<long long>(1, 200 / (i + 1));
    counts[{name}] = count;
    rows.emplace_back(name, count);
  }
  vpir::CoverageCurve curve(counts);

  // independent cumulative-sum oracle
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  long long total = 0;
  for (const auto& [name, count] : rows) total += count;
  std::vector<double> cumulative;
  long long running = 0;
  for (const auto& [name, count] : rows) {
    running += count;
    cumulative.push_back(static_cast<double>(running) / static_cast<double>(total));
  }

  bool ok = true;
  for (std::size_t k = 0; k <= rows.size() + 5; ++k) {
    double expected = k == 0 ? 0.0 : cumulative[std::min(k, rows.size()) - 1];
    if (curve.top_k_coverage(k) != expected) {
      ok = false;
      detail = "top_k_coverage(" + std::to_string(k) + ") mismatch";
    }
  }
  for (int grid = 0; grid <= 100; ++grid) {
    double threshold = grid / 100.0;
    int expected = static_cast<int>(rows.size());
    for (std::size_t r = 0; r < cumulative.size(); ++r)
      if (cumulative[r] >= threshold) {
        expected = static_cast<int>(r) + 1;
        break;
      }
    if (curve.min_templates_for(threshold) != expected) {
      ok = false;
      detail = "min_templates_for(" + std::to_string(threshold) + ") = " +
               std::to_string(curve.min_templates_for(threshold)) + ", oracle says " +
               std::to_string(expected);
    }
  }
  if (ok) detail = "all k and the 0.01 threshold grid match the cumulative-sum oracle";
  return ok;
}

// ---------------------------------------------------------------- criterion 9
bool adapter_rules(std::string& detail) {
  bool ok = true;
  {
    ChartMeta meta = normalize_chart({"a", "b", "c", "d", "e"}, {1, 2, 3, 4}, ChartKind::Bar);
    ok &= expect(meta.x_labels.size() == 4 && meta.y_values.size() == 4 &&
                     meta.repair_log.size() == 1 && meta.repair_log[0].action == "truncate",
                 "length-mismatch truncation", detail);
  }
  {
    ChartMeta meta = normalize_chart({"a", "b"}, {1.5, 2.5}, ChartKind::Line);
    ok &= expect(meta.repair_log.empty(), "identity pass-through logged a repair", detail);
  }
  {
    ChartMeta meta = normalize_chart({"a", "b", "c", "d"}, {1, 0, 3, 4}, ChartKind::Bar,
                                     {false, true, false, false});
    ok &= expect(meta.y_values == std::vector<double>{1, 3, 4} && meta.repair_log.size() == 1 &&
                     meta.repair_log[0].action == "drop-placeholder",
                 "placeholder dropping", detail);
    ChartMeta again = normalize_chart(meta.x_labels, meta.y_values, meta.chart_kind);
    ok &= expect(again.x_labels == meta.x_labels && again.y_values == meta.y_values &&
                     again.repair_log.empty(),
                 "idempotence", detail);
  }
  {
    std::vector<std::string> nine(9, "frame"), eight(8, "act"), acts(9, "click on the OK button");
    ok &= expect(validate_trajectory(nine, acts).accepted(), "9 vs 9 should be accepted", detail);
    TrajectoryResult bad = validate_trajectory(nine, eight);
    ok &= expect(!bad.accepted() && bad.rejection->code == "LengthMismatch",
                 "9 vs 8 should reject with LengthMismatch", detail);
    TrajectoryResult empty = validate_trajectory({}, {});
    ok &= expect(!empty.accepted() && empty.rejection->code == "EmptyTrajectory",
                 "0 vs 0 should reject as empty", detail);
  }
  {
    StructuredAction click = parse_coat("click on the Allow button");
    ok &= expect(click.action_type == ActionType::Click && click.target_element &&
                     *click.target_element == "Allow button",
                 "CoAT click parse", detail);
    StructuredAction scroll = parse_coat("scroll down on the settings page");
    ok &= expect(scroll.action_type == ActionType::Scroll && scroll.location &&
                     *scroll.location == "settings page",
                 "CoAT scroll parse", detail);
    StructuredAction other = parse_coat("\xE2\x96\x86\xE2\x96\x86 garbled");
    ok &= expect(other.action_type == ActionType::Other &&
                     other.raw == "\xE2\x96\x86\xE2\x96\x86 garbled",
                 "CoAT fallback", detail);
  }
  if (ok) detail = "chart alignment, placeholder handling, idempotence, GUI gate";
  return ok;
}

// --------------------------------------------------------------- criterion 10
bool leak_freedom(std::string& detail) {
  if (g_chain_corpus.empty()) {
    detail = "chain corpus unavailable (criterion 4 did not run)";
    return false;
  }
  int leaks = 0;
  std::uint64_t seed = 1;
  for (auto& skeleton : g_chain_corpus) {
    ProceduralBackend backend(seed);
    compile_pair(skeleton, seed, backend);
    ++seed;
    if (!leak_free(skeleton)) {
      ++leaks;
      if (detail.empty()) detail = skeleton.id + " leaked a tested token";
    }
  }
  if (leaks == 0)
    detail = std::to_string(g_chain_corpus.size()) + " compiled chains re-checked, zero leaks";
  return leaks == 0;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "metric-golden-tests", 1.0, metric_golden},
      {2, "tiny-example-end-to-end", 1.0, tiny_example},
      {3, "differential-interpreter-fuzz", 30.0, differential_fuzz},
      {4, "gate-universality", 60.0, gate_universality},
      {5, "divergence-uniformity", 10.0, divergence_uniformity},
      {6, "complexity-profiles", 5.0, complexity_profiles},
      {7, "answer-extraction", 1.0, answer_extraction},
      {8, "coverage-curve-oracle", 5.0, coverage_oracle},
      {9, "adapter-rules", 1.0, adapter_rules},
      {10, "leak-freedom", 30.0, leak_freedom},
  };

  int failures = 0;
  for (auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    auto start = std::chrono::steady_clock::now();
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > criterion.time_limit_seconds) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over time limit of ") +
                format2(criterion.time_limit_seconds) + " s";
    }
    if (!ok) ++failures;
    std::printf("[%s] %2d. %-32s %s [%.2f s, limit %.0f s]\n", ok ? "PASS" : "FAIL",
                criterion.number, criterion.name.c_str(), detail.c_str(), elapsed,
                criterion.time_limit_seconds);
  }
  if (failures)
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  else
    std::printf("all %zu criteria passed\n", criteria.size());
  return failures;
}
