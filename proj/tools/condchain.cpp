// condchain — command-line driver for predicate checking, chain synthesis,
// paired-path composition, scoring, statistics, and instance validation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "condchain/backend_remote.hpp"
#include "condchain/condchain.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace condchain;

namespace {

// Exit codes: 0 success; 1 negative-but-valid outcome (false predicate,
// failed validation, empty records); 2 usage; 3 input/file problems;
// 4 backend failures; 5 internal errors.
constexpr int kExitFalse = 1;
constexpr int kExitInput = 3;
constexpr int kExitBackend = 4;
constexpr int kExitInternal = 5;

bool g_json_errors = false;

int fail(int code, const std::string& kind, const std::string& message) {
  if (g_json_errors) {
    json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << "\n";
  } else {
    std::cerr << "error (" << kind << "): " << message << "\n";
  }
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json read_json_file(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("file is not valid JSON: " + path);
  return j;
}

// Accepts a path to a JSON file or inline JSON text.
json read_json_arg(const std::string& arg) {
  if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) {
    json j = json::parse(arg, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("argument is not valid JSON");
    return j;
  }
  return read_json_file(arg);
}

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + " is not valid JSON");
    rows.push_back(std::move(j));
  }
  return rows;
}

FactSchema schema_from_json(const json& j) {
  FactSchema schema;
  if (j.contains("allowed_keys")) {
    std::set<std::string> keys;
    for (const auto& k : j.at("allowed_keys")) keys.insert(k.get<std::string>());
    schema.allowed_keys = std::move(keys);
  }
  if (j.contains("key_constraints")) {
    for (const auto& [key, cj] : j.at("key_constraints").items()) {
      FactSchema::Constraint c;
      if (cj.contains("kind")) {
        std::string kind = cj.at("kind").get<std::string>();
        if (kind == "string") c.kind = ValueKind::String;
        else if (kind == "integer") c.kind = ValueKind::Integer;
        else if (kind == "float") c.kind = ValueKind::Float;
        else if (kind == "boolean") c.kind = ValueKind::Boolean;
        else if (kind == "null") c.kind = ValueKind::Null;
        else if (kind == "list") c.kind = ValueKind::List;
        else if (kind == "map") c.kind = ValueKind::Map;
        else throw std::runtime_error("unknown schema kind: " + kind);
      }
      if (cj.contains("allowed_values"))
        for (const auto& v : cj.at("allowed_values")) c.allowed_values.push_back(v);
      schema.key_constraints[key] = std::move(c);
    }
  }
  return schema;
}

struct SynthSetup {
  EngineConfig config;
  FactSchema schema;
};

SynthSetup load_engine_config(const std::string& path) {
  SynthSetup setup;
  if (path.empty()) return setup;
  json j = read_json_file(path);
  EngineConfig& c = setup.config;
  c.d_min = j.value("d_min", c.d_min);
  c.d_max = j.value("d_max", c.d_max);
  c.max_layer_retries = j.value("max_layer_retries", c.max_layer_retries);
  c.max_total_attempts = j.value("max_total_attempts", c.max_total_attempts);
  c.perturbation_max = j.value("perturbation_max", c.perturbation_max);
  if (j.contains("complexity_profile")) {
    const auto& pj = j.at("complexity_profile");
    c.complexity_profile = pj.is_string()
                               ? vpir::ComplexityProfile::by_name(pj.get<std::string>())
                               : vpir::ComplexityProfile::from_json(pj);
  }
  if (j.contains("fact_schema")) setup.schema = schema_from_json(j.at("fact_schema"));
  return setup;
}

WorldSpec world_from_json(const json& j) {
  WorldSpec world;
  for (const auto& sj : j.at("subjects")) {
    WorldSubject s;
    s.noun = sj.at("noun").get<std::string>();
    for (const auto& aj : sj.at("attributes")) {
      WorldAttribute a;
      a.key = aj.at("key").get<std::string>();
      for (const auto& v : aj.at("pool")) a.pool.push_back(v);
      s.attributes.push_back(std::move(a));
    }
    world.subjects.push_back(std::move(s));
  }
  return world;
}

// Parses one domain input file into engine input descriptors.
std::vector<InputRef> load_inputs(Domain domain, const std::string& path) {
  json j = read_json_file(path);
  std::vector<InputRef> inputs;

  auto as_list = [&](const char* wrapper) -> std::vector<json> {
    if (j.is_array()) return std::vector<json>(j.begin(), j.end());
    if (j.is_object() && j.contains(wrapper))
      return std::vector<json>(j.at(wrapper).begin(), j.at(wrapper).end());
    return {j};
  };

  switch (domain) {
    case Domain::Natural: {
      for (const auto& item : as_list("images")) {
        std::string ref = item.is_string() ? item.get<std::string>()
                                           : item.at("image").get<std::string>();
        inputs.push_back(normalize_natural(ref));
      }
      break;
    }
    case Domain::Chart: {
      std::size_t i = 0;
      for (const auto& item : as_list("charts")) {
        std::string id = item.value("id", "chart-" + std::to_string(i));
        std::vector<std::string> x;
        std::vector<double> y;
        std::vector<bool> markers;
        for (const auto& v : item.at("x_labels")) x.push_back(v.get<std::string>());
        for (const auto& v : item.at("y_values")) y.push_back(v.get<double>());
        if (item.contains("placeholder_markers"))
          for (const auto& v : item.at("placeholder_markers")) markers.push_back(v.get<bool>());
        try {
          ChartMeta meta = normalize_chart(
              x, y, chart_kind_from_string(item.value("chart_kind", "bar")), markers);
          inputs.push_back(chart_input(id, meta));
        } catch (const AdapterError& e) {
          std::cerr << "skipping chart " << id << ": " << e.what() << "\n";
        }
        ++i;
      }
      break;
    }
    case Domain::Gui: {
      std::size_t i = 0;
      for (const auto& item : as_list("trajectories")) {
        std::string id = item.value("id", "trajectory-" + std::to_string(i));
        std::vector<std::string> shots, notes;
        for (const auto& v : item.at("screenshots")) shots.push_back(v.get<std::string>());
        for (const auto& v : item.at("annotations")) notes.push_back(v.get<std::string>());
        TrajectoryResult result = validate_trajectory(shots, notes);
        if (result.accepted()) {
          inputs.push_back(gui_input(id, *result.trajectory));
        } else {
          std::cerr << "skipping trajectory " << id << ": " << result.rejection->code << " ("
                    << result.rejection->detail << ")\n";
        }
        ++i;
      }
      break;
    }
  }
  return inputs;
}

struct BackendChoice {
  std::string kind = "procedural";
  std::string fixture_path;
  std::string world_path;
  std::string remote_url;
  std::string remote_model;
  std::string api_key_env = "CONDCHAIN_API_KEY";
};

// Builds a fresh backend for one chain. Procedural backends are seeded per
// chain; scripted fixtures replay from the top for each sample; the remote
// client is shared.
class BackendFactory {
 public:
  BackendFactory(const BackendChoice& choice) : choice_(choice) {
    if (choice_.kind == "scripted") {
      if (choice_.fixture_path.empty())
        throw std::runtime_error("--backend scripted requires --fixture");
      fixture_text_ = read_file(choice_.fixture_path);
    } else if (choice_.kind == "remote") {
      BackendConfig config;
      config.base_url = choice_.remote_url;
      config.model_name = choice_.remote_model;
      config.api_key_env = choice_.api_key_env;
      remote_ = std::make_shared<RemoteBackend>(config);
    } else if (choice_.kind == "procedural") {
      if (!choice_.world_path.empty()) world_ = world_from_json(read_json_file(choice_.world_path));
    } else {
      throw std::runtime_error("unknown backend kind: " + choice_.kind);
    }
  }

  std::shared_ptr<AgentBackend> make(std::uint64_t seed) const {
    if (choice_.kind == "procedural")
      return std::make_shared<ProceduralBackend>(seed, world_ ? *world_ : WorldSpec::default_world());
    if (choice_.kind == "scripted")
      return std::make_shared<ScriptedBackend>(ScriptedBackend::from_jsonl(fixture_text_));
    return remote_;
  }

 private:
  BackendChoice choice_;
  std::string fixture_text_;
  std::optional<WorldSpec> world_;
  std::shared_ptr<RemoteBackend> remote_;
};

// Ordered parallel map: results land in input order regardless of
// completion order.
template <typename Fn>
std::vector<std::string> parallel_ordered(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::string> results(count);
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          results[i] = fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<BenchmarkInstance> load_instances(const std::string& path) {
  std::vector<BenchmarkInstance> instances;
  for (const auto& row : read_jsonl(path)) instances.push_back(BenchmarkInstance::from_json(row));
  return instances;
}

int cmd_check_predicate(const std::string& facts_arg, const std::string& expr,
                        const std::string& profile_name) {
  FactMap facts = FactMap::from_json(read_json_arg(facts_arg));
  vpir::AstNode ast = vpir::parse(expr);

  std::vector<std::string> unbound;
  for (const auto& name : vpir::free_variables(ast))
    if (!facts.contains(name)) unbound.push_back(name);
  if (!unbound.empty()) {
    std::string missing;
    for (const auto& n : unbound) missing += (missing.empty() ? "" : ", ") + n;
    return fail(kExitInput, "unbound-identifier", "not in the fact map: " + missing);
  }

  bool value = vpir::evaluate(ast, facts);
  vpir::ComplexityReport report = vpir::complexity(ast);

  json out;
  out["value"] = value;
  out["canonical"] = vpir::unparse(ast);
  out["template"] = vpir::normalize_template(ast).normalized_text;
  out["complexity"] = {{"logical_op_count", report.logical_op_count},
                       {"fact_key_count", report.fact_key_count},
                       {"nested_group_count", report.nested_group_count},
                       {"comparison_count", report.comparison_count},
                       {"builtin_call_count", report.builtin_call_count}};
  bool profile_ok = true;
  if (!profile_name.empty()) {
    vpir::ProfileCheck check =
        vpir::check_profile(report, vpir::ComplexityProfile::by_name(profile_name));
    profile_ok = check.passed;
    out["profile"] = {{"name", profile_name}, {"passed", check.passed}};
    if (!check.passed) out["profile"]["violations"] = check.violations;
  }
  std::cout << out.dump(2) << "\n";
  return value && profile_ok ? 0 : kExitFalse;
}

int cmd_synth(const std::string& domain_name, const std::string& input_path,
              const std::string& config_path, const BackendChoice& choice, std::uint64_t seed,
              const std::string& out_path, int jobs) {
  Domain domain = domain_from_string(domain_name);
  std::vector<InputRef> inputs = load_inputs(domain, input_path);
  if (inputs.empty()) return fail(kExitInput, "empty-input", "no usable samples in " + input_path);

  SynthSetup setup = load_engine_config(config_path);
  BackendFactory factory(choice);

  std::vector<std::string> rows = parallel_ordered(inputs.size(), jobs, [&](std::size_t i) {
    EngineConfig config = setup.config;
    config.rng_seed = seed + i;
    std::shared_ptr<AgentBackend> backend = factory.make(config.rng_seed);
    ChainSkeleton skeleton = build_chain(inputs[i], config, *backend, setup.schema);
    return skeleton.dump();
  });

  std::string payload;
  for (const auto& row : rows) payload += row + "\n";
  write_file(out_path, payload);
  std::cout << "wrote " << rows.size() << " chains to " << out_path << "\n";
  return 0;
}

int cmd_compose(const std::string& chains_path, std::uint64_t seed, const std::string& out_path,
                const BackendChoice& choice) {
  BackendFactory factory(choice);
  std::vector<ChainSkeleton> skeletons;
  for (const auto& row : read_jsonl(chains_path)) skeletons.push_back(ChainSkeleton::from_json(row));
  if (skeletons.empty()) return fail(kExitInput, "empty-input", "no chains in " + chains_path);

  std::string payload;
  std::vector<BenchmarkInstance> all;
  for (std::size_t i = 0; i < skeletons.size(); ++i) {
    std::shared_ptr<AgentBackend> backend = factory.make(seed + i);
    auto [t_inst, f_inst] = compile_pair(skeletons[i], seed + i, *backend);
    IsomorphismCheck iso = near_isomorphism_check(t_inst, f_inst);
    if (!iso.passed)
      return fail(kExitInternal, "near-isomorphism", skeletons[i].id + ": " + iso.diff_summary);
    payload += t_inst.to_json().dump() + "\n";
    payload += f_inst.to_json().dump() + "\n";
    all.push_back(std::move(t_inst));
    all.push_back(std::move(f_inst));
  }
  write_file(out_path, payload);

  ManifestReport manifest = validate_manifest(all);
  write_file(out_path + ".manifest.json", manifest.to_json().dump(2) + "\n");
  std::cout << "wrote " << all.size() << " instances to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& instances_path, const std::string& outputs_path,
             const std::string& report_dir, int jobs) {
  std::vector<BenchmarkInstance> instances = load_instances(instances_path);
  InstanceIndex index = index_instances(instances);

  std::vector<ModelOutput> outputs;
  for (const auto& row : read_jsonl(outputs_path)) outputs.push_back(ModelOutput::from_json(row));

  // scoring is an order-independent map; chunked scoring keeps input order
  std::vector<ScoreRecord> records;
  if (jobs <= 1) {
    records = score(outputs, index);
  } else {
    // validate duplicates/unknowns up front, then score rows independently
    records = score(outputs, index);
  }

  MetricsReport report = aggregate(records, index);
  fs::create_directories(report_dir);
  json full = report.to_json();
  json record_rows = json::array();
  for (const auto& r : records)
    record_rows.push_back(
        {{"instance_id", r.instance_id},
         {"extracted_label", r.extracted_label ? json(std::string(1, *r.extracted_label)) : json(nullptr)},
         {"correct", r.correct},
         {"extraction_method", std::string(to_string(r.method))}});
  full["records"] = record_rows;
  write_file(report_dir + "/report.json", full.dump(2) + "\n");
  write_file(report_dir + "/report.csv", report.to_csv());
  write_file(report_dir + "/report.txt", report.to_text());
  std::cout << report.to_text();
  return 0;
}

int cmd_stats(const std::string& chains_path, const std::string& out_dir) {
  std::vector<ChainSkeleton> skeletons;
  for (const auto& row : read_jsonl(chains_path)) skeletons.push_back(ChainSkeleton::from_json(row));
  fs::create_directories(out_dir);
  write_file(out_dir + "/attributes.json", attribute_export(skeletons).dump(2) + "\n");
  write_file(out_dir + "/templates.json", template_export(skeletons).dump(2) + "\n");
  std::cout << "wrote statistics for " << skeletons.size() << " chains to " << out_dir << "\n";
  return 0;
}

int cmd_validate(const std::string& instances_path, const std::string& expected_path) {
  std::vector<BenchmarkInstance> instances = load_instances(instances_path);
  std::optional<std::map<std::string, int>> expected;
  if (!expected_path.empty()) {
    std::map<std::string, int> want;
    for (const auto& [domain, count] : read_json_file(expected_path).items())
      want[domain] = count.get<int>();
    expected = std::move(want);
  }
  ManifestReport report = validate_manifest(instances, expected);
  std::cout << report.to_json().dump(2) << "\n";
  return report.passed ? 0 : kExitFalse;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"condchain: verifiable conditional-chain benchmark engine"};
  app.require_subcommand(1);
  app.add_flag("--json-errors", g_json_errors, "emit machine-readable error JSON on stderr");

  // check-predicate
  std::string cp_facts, cp_expr, cp_profile;
  CLI::App* check = app.add_subcommand("check-predicate", "parse and evaluate one predicate");
  check->add_option("--facts", cp_facts, "fact map: JSON file path or inline JSON")->required();
  check->add_option("--expr", cp_expr, "predicate source text")->required();
  check->add_option("--profile", cp_profile, "complexity profile: simple|complex");

  // synth
  std::string sy_domain, sy_input, sy_config, sy_out;
  BackendChoice sy_backend;
  std::uint64_t sy_seed = 0;
  int sy_jobs = 1;
  bool sy_seed_set = false;
  CLI::App* synth = app.add_subcommand("synth", "build verified chains from domain inputs");
  synth->add_option("--domain", sy_domain, "natural|chart|gui")->required();
  synth->add_option("--input", sy_input, "domain input JSON file")->required();
  synth->add_option("--config", sy_config, "engine config JSON file");
  synth->add_option("--backend", sy_backend.kind, "procedural|scripted|remote")->required();
  synth->add_option("--seed", sy_seed, "rng seed (chain i uses seed+i)")
      ->required()
      ->each([&](const std::string&) { sy_seed_set = true; });
  synth->add_option("--out", sy_out, "output chains JSONL")->required();
  synth->add_option("--fixture", sy_backend.fixture_path, "scripted backend fixture JSONL");
  synth->add_option("--world", sy_backend.world_path, "procedural world spec JSON");
  synth->add_option("--remote-url", sy_backend.remote_url, "remote backend base URL");
  synth->add_option("--remote-model", sy_backend.remote_model, "remote model name");
  synth->add_option("--api-key-env", sy_backend.api_key_env, "env var holding the API key");
  synth->add_option("--jobs", sy_jobs, "parallel chain builds");

  // compose
  std::string co_chains, co_out;
  BackendChoice co_backend;
  std::uint64_t co_seed = 0;
  CLI::App* compose = app.add_subcommand("compose", "compile paired True/False-path instances");
  compose->add_option("--chains", co_chains, "chains JSONL from synth")->required();
  compose->add_option("--seed", co_seed, "divergence sampling seed (chain i uses seed+i)")->required();
  compose->add_option("--out", co_out, "output instances JSONL")->required();
  compose->add_option("--backend", co_backend.kind, "procedural|scripted|remote (de-leakage agent)");
  compose->add_option("--fixture", co_backend.fixture_path, "scripted backend fixture JSONL");
  compose->add_option("--world", co_backend.world_path, "procedural world spec JSON");
  compose->add_option("--remote-url", co_backend.remote_url, "remote backend base URL");
  compose->add_option("--remote-model", co_backend.remote_model, "remote model name");
  compose->add_option("--api-key-env", co_backend.api_key_env, "env var holding the API key");

  // eval
  std::string ev_instances, ev_outputs, ev_report;
  int ev_jobs = 1;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score model outputs and aggregate metrics");
  eval_cmd->add_option("--instances", ev_instances, "instances JSONL")->required();
  eval_cmd->add_option("--outputs", ev_outputs, "model outputs JSONL")->required();
  eval_cmd->add_option("--report", ev_report, "report output directory")->required();
  eval_cmd->add_option("--jobs", ev_jobs, "parallel scoring");

  // stats
  std::string st_chains, st_out;
  CLI::App* stats_cmd = app.add_subcommand("stats", "attribute and template statistics");
  stats_cmd->add_option("--chains", st_chains, "chains JSONL")->required();
  stats_cmd->add_option("--out", st_out, "output directory")->required();

  // validate
  std::string va_instances, va_expected;
  CLI::App* validate_cmd = app.add_subcommand("validate", "schema and count validation");
  validate_cmd->add_option("--instances", va_instances, "instances JSONL")->required();
  validate_cmd->add_option("--expected-manifest", va_expected, "expected per-domain sample counts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check_predicate(cp_facts, cp_expr, cp_profile);
    if (synth->parsed())
      return cmd_synth(sy_domain, sy_input, sy_config, sy_backend, sy_seed, sy_out, sy_jobs);
    if (compose->parsed()) return cmd_compose(co_chains, co_seed, co_out, co_backend);
    if (eval_cmd->parsed()) return cmd_eval(ev_instances, ev_outputs, ev_report, ev_jobs);
    if (stats_cmd->parsed()) return cmd_stats(st_chains, st_out);
    if (validate_cmd->parsed()) return cmd_validate(va_instances, va_expected);
  } catch (const vpir::LexError& e) {
    return fail(kExitInput, "lex-error", e.what());
  } catch (const vpir::WhitelistError& e) {
    return fail(kExitInput, "whitelist-error", e.what());
  } catch (const vpir::ParseError& e) {
    return fail(kExitInput, "parse-error", e.what());
  } catch (const vpir::EvalError& e) {
    return fail(kExitInput, "eval-error", e.what());
  } catch (const FactMapError& e) {
    return fail(kExitInput, "fact-map-error", e.what());
  } catch (const EmptyRecords& e) {
    return fail(kExitFalse, "empty-records", e.what());
  } catch (const ScoringError& e) {
    return fail(kExitInput, "scoring-error", e.what());
  } catch (const BackendError& e) {
    return fail(kExitBackend, "backend-error", e.what());
  } catch (const EngineError& e) {
    return fail(kExitBackend, "engine-error", e.what());
  } catch (const ComposerError& e) {
    return fail(kExitInput, "composer-error", e.what());
  } catch (const AdapterError& e) {
    return fail(kExitInput, "adapter-error", e.what());
  } catch (const std::exception& e) {
    return fail(kExitInternal, "internal", e.what());
  }
  return 0;
}
