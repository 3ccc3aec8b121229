// junglekit command-line front end: simulation runs, workload dumps, cost
// reports and the edge/backend wire-protocol processes.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "junglekit/net/edge_server.hpp"
#include "junglekit/net/http_edge_link.hpp"
#include "junglekit/net/service_config.hpp"
#include "junglekit/sim/report.hpp"
#include "junglekit/sim/simulator.hpp"
#include "junglekit/sim/workload.hpp"

namespace {

using namespace junglekit;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

/// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

struct SimRunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  std::string out;
  std::string ledger_out;
};

int sim_run(const SimRunArgs& a) {
  sim::SimConfig config = sim::load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  sim::SimResult result = sim::Simulator(config).run();
  emit(a.out, a.format == "json" ? sim::report_json(result.report) : sim::report_text(result.report));
  if (!a.ledger_out.empty()) emit(a.ledger_out, ledger_to_json(result.ledger, result.served).dump(2) + "\n");
  sim::check_invariants(result.report);
  return kExitOk;
}

int sim_workload(const std::string& path, std::uint64_t seed, const std::string& out) {
  sim::SimConfig config = sim::load_config(path);
  config.seed = seed;
  const sim::Workload w = sim::generate_workload(config);
  std::ostringstream ss;
  sim::write_workload(ss, config, w);
  emit(out, ss.str());
  return kExitOk;
}

int cost_report(const std::string& ledger_path, const std::string& pricing_path, const std::string& format) {
  const LedgerFile file = load_ledger(ledger_path);
  const PricingTable pricing = load_pricing(pricing_path);

  std::map<std::string, std::pair<ServedVolume, Money>> by_model;
  Money total;
  try {
    for (const CostRecord& r : file.ledger.records()) {
      auto& [tokens, cost] = by_model[r.model_id];
      tokens += ServedVolume{r.input_tokens, r.output_tokens};
      const Money c = record_cost(r, pricing);
      cost += c;
      total += c;
    }
  } catch (const PricingError& e) {
    throw ConfigError(e.what());
  }
  std::optional<Money> mono;
  std::optional<double> ratio;
  if (file.served && file.served->total() > 0) {
    mono = monolithic_cost(*file.served, pricing);
    ratio = cost_ratio(file.ledger, *file.served, pricing);
  }

  if (format == "json") {
    json models = json::object();
    for (const auto& [id, v] : by_model) {
      models[id] = json{{"input_tokens", v.first.input_tokens},
                        {"output_tokens", v.first.output_tokens},
                        {"cost", v.second.to_string()}};
    }
    json j{{"records", file.ledger.size()},
           {"by_model", models},
           {"compound_cost", total.to_string()},
           {"monolithic_cost", mono ? json(mono->to_string()) : json(nullptr)},
           {"cost_ratio", detail::optional_to_json(ratio)}};
    emit("", j.dump(2) + "\n");
    return kExitOk;
  }

  std::string text;
  char line[200];
  for (const auto& [id, v] : by_model) {
    std::snprintf(line, sizeof line, "%-24s in %12llu  out %12llu  cost %s\n", id.c_str(),
                  static_cast<unsigned long long>(v.first.input_tokens),
                  static_cast<unsigned long long>(v.first.output_tokens), v.second.to_string().c_str());
    text += line;
  }
  std::snprintf(line, sizeof line, "compound cost            %s\n", total.to_string().c_str());
  text += line;
  if (mono) {
    std::snprintf(line, sizeof line, "monolithic cost          %s\n", mono->to_string().c_str());
    text += line;
    std::snprintf(line, sizeof line, "cost ratio               %.9f\n", *ratio);
    text += line;
  } else {
    text += "monolithic cost          n/a (ledger has no served volume)\n";
  }
  emit("", text);
  return kExitOk;
}

int serve_edge(const std::string& path) {
  const net::EdgeServiceConfig c = net::edge_service_from_json(parse_json_file(path));
  EdgeNode node(c.node);
  if (!c.snapshot_log.empty()) {
    const std::size_t n = node.attach_log(c.snapshot_log);
    std::cerr << "replayed " << n << " snapshots from " << c.snapshot_log << "\n";
  }
  net::EdgeServer server(node);
  std::cerr << "edge listening on " << c.host << ":" << c.port << "\n";
  if (!server.listen(c.host, c.port)) throw ConfigError("cannot listen on " + c.host + ":" + std::to_string(c.port));
  return kExitOk;
}

int serve_backend(const std::string& path) {
  const net::BackendServiceConfig c = net::backend_service_from_json(parse_json_file(path));
  LlmNode llm(c.registry);
  Updater updater(c.updater, llm);
  std::vector<std::unique_ptr<net::HttpEdgeLink>> links;
  for (const net::EdgeEndpoint& e : c.edges) {
    links.push_back(std::make_unique<net::HttpEdgeLink>(e.name, e.url, c.timeout_ms));
    updater.connect(*links.back());
  }
  std::ofstream log_file;
  if (!c.action_log.empty()) {
    log_file.open(c.action_log, std::ios::app);
    if (!log_file) throw ConfigError("cannot open action_log '" + c.action_log + "'");
    updater.set_action_log(&log_file);
  } else {
    updater.set_action_log(&std::cout);
  }

  auto next = std::chrono::steady_clock::now();
  for (std::uint64_t tick = 0; c.max_ticks == 0 || tick < c.max_ticks; ++tick) {
    updater.tick(net::wall_clock_ms());
    if (log_file.is_open()) log_file.flush();
    std::cout.flush();
    next += std::chrono::milliseconds(c.updater.update_period_ms);
    if (c.max_ticks == 0 || tick + 1 < c.max_ticks) std::this_thread::sleep_until(next);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"junglekit: edge-cached compound LLM serving toolkit"};
  app.require_subcommand(1);

  auto* sim_cmd = app.add_subcommand("sim", "Simulation harness")->require_subcommand(1);
  SimRunArgs run_args;
  std::uint64_t seed_value = 0;
  auto* run_cmd = sim_cmd->add_subcommand("run", "Run a simulation and print the metrics report");
  run_cmd->add_option("--config", run_args.config, "SimConfig JSON file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed_value, "Override the config seed");
  run_cmd->add_option("--format", run_args.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  run_cmd->add_option("--out", run_args.out, "Write the report here instead of stdout");
  run_cmd->add_option("--ledger-out", run_args.ledger_out, "Also write the cost ledger as JSON");

  std::string wl_config;
  std::string wl_out;
  std::uint64_t wl_seed = 0;
  auto* wl_cmd = sim_cmd->add_subcommand("workload", "Dump the generated workload as JSON lines");
  wl_cmd->add_option("--config", wl_config, "SimConfig JSON file")->required();
  wl_cmd->add_option("--seed", wl_seed, "Workload seed")->required();
  wl_cmd->add_option("--out", wl_out, "Write here instead of stdout");

  auto* cost_cmd = app.add_subcommand("cost", "Cost accounting")->require_subcommand(1);
  std::string ledger_path;
  std::string pricing_path;
  std::string cost_format = "text";
  auto* report_cmd = cost_cmd->add_subcommand("report", "Totals and cost ratio for a ledger file");
  report_cmd->add_option("--ledger", ledger_path, "Ledger JSON file")->required();
  report_cmd->add_option("--pricing", pricing_path, "Pricing JSON file")->required();
  report_cmd->add_option("--format", cost_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* serve_cmd = app.add_subcommand("serve", "Run a wire-protocol process")->require_subcommand(1);
  std::string edge_config;
  std::string backend_config;
  auto* edge_cmd = serve_cmd->add_subcommand("edge", "Edge node HTTP server");
  edge_cmd->add_option("--config", edge_config, "Edge service JSON file")->required();
  auto* backend_cmd = serve_cmd->add_subcommand("backend", "Backend updater loop");
  backend_cmd->add_option("--config", backend_config, "Backend service JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      if (*seed_opt) run_args.seed = seed_value;
      return sim_run(run_args);
    }
    if (wl_cmd->parsed()) return sim_workload(wl_config, wl_seed, wl_out);
    if (report_cmd->parsed()) return cost_report(ledger_path, pricing_path, cost_format);
    if (edge_cmd->parsed()) return serve_edge(edge_config);
    if (backend_cmd->parsed()) return serve_backend(backend_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvariantViolation& e) {
    std::cerr << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
