// dart: command line driver for the CoT rewrite pipeline.
//
//   dart synthesize --samples s.jsonl --out cand.jsonl
//   dart score      --samples s.jsonl --candidates cand.jsonl --out scored.jsonl
//   dart filter     --samples s.jsonl --candidates scored.jsonl --accepted acc.jsonl [--rejected rej.jsonl]
//   dart emit-sft   --samples s.jsonl --accepted acc.jsonl --out sft.jsonl
//   dart rollout    --samples s.jsonl --out grpo.jsonl
//   dart nll        --dataset sft.jsonl
//   dart theory     [--n N --k K --rho R] [--json]
//   dart eval       --input responses.jsonl [--k 4] [--json]
//
// Config layers: built-in defaults < --config FILE < DART_* environment < --set key=value.
// Exit status: 0 ok, 1 runtime or per-sample failure, 2 usage or config error.

#include "dart/config.hpp"
#include "dart/errors.hpp"
#include "dart/eval.hpp"
#include "dart/rollout.hpp"
#include "dart/synthesis.hpp"
#include "dart/theory.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string log_level = "info";
  bool dry_run = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_logger_mt("dart");
  logger->set_pattern("ts=%Y-%m-%dT%H:%M:%S.%e level=%l %v");
  auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") throw UsageError("unknown log level '" + level + "'");
  logger->set_level(lvl);
  spdlog::set_default_logger(logger);
}

dart::PipelineConfig resolve(const GlobalOptions& g) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : g.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw dart::ConfigError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  dart::Json file = g.config_file.empty() ? dart::Json() : dart::load_config_file(g.config_file);
  return dart::resolve_config(file, dart::config_environment(), overrides);
}

/// Prints the resolved config plus the command's own arguments.
int dry_run(const std::string& command, const dart::PipelineConfig& cfg, const dart::Json& args) {
  dart::Json out{{"command", command}, {"args", args}, {"config", dart::to_json(cfg, true)}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

dart::PromptTemplate mapper_template(const std::string& path) {
  return path.empty() ? dart::PromptTemplate::mapper() : dart::PromptTemplate::from_file(path);
}

int report_failures(const std::string& stage, std::size_t ok, std::size_t failed) {
  spdlog::info("event=stage_done stage={} ok={} failed={}", stage, ok, failed);
  return failed == 0 ? kExitOk : kExitFailure;
}

void log_sample_error(const std::string& stage, const std::string& error) {
  spdlog::error("event=sample_failed stage={} error={}", stage, dart::Json(error).dump());
}

// ---- subcommands ----

struct StageArgs {
  std::string samples;
  std::string candidates;
  std::string accepted;
  std::string rejected;
  std::string out;
  std::string template_file;
};

int run_synthesize(const GlobalOptions& g, const StageArgs& a) {
  auto cfg = resolve(g);
  if (g.dry_run)
    return dry_run("synthesize", cfg, {{"samples", a.samples}, {"out", a.out}, {"template", a.template_file}});
  auto samples = dart::read_samples(a.samples);
  auto backends = dart::make_backends(cfg);
  auto results = dart::synthesize_all(samples, *backends.generator, mapper_template(a.template_file), cfg.synthesis,
                                      static_cast<std::size_t>(cfg.backend.max_in_flight));
  std::vector<dart::Candidate> ok;
  for (auto& r : results) {
    if (r.candidate)
      ok.push_back(std::move(*r.candidate));
    else
      log_sample_error("synthesize", *r.error);
  }
  dart::write_candidates(a.out, ok);
  return report_failures("synthesize", ok.size(), results.size() - ok.size());
}

int run_score(const GlobalOptions& g, const StageArgs& a) {
  auto cfg = resolve(g);
  if (g.dry_run)
    return dry_run("score", cfg,
                   {{"samples", a.samples}, {"candidates", a.candidates}, {"out", a.out}, {"template", a.template_file}});
  auto samples = dart::read_samples(a.samples);
  auto candidates = dart::read_candidates(a.candidates);
  auto backends = dart::make_backends(cfg);
  auto results = dart::score_candidates(candidates, samples, *backends.scorer, mapper_template(a.template_file),
                                        cfg.reward, static_cast<std::size_t>(cfg.backend.max_in_flight));
  std::vector<dart::Candidate> ok;
  for (auto& r : results) {
    if (r.candidate)
      ok.push_back(std::move(*r.candidate));
    else
      log_sample_error("score", *r.error);
  }
  dart::write_candidates(a.out, ok);
  return report_failures("score", ok.size(), results.size() - ok.size());
}

int run_filter(const GlobalOptions& g, const StageArgs& a) {
  auto cfg = resolve(g);
  if (g.dry_run)
    return dry_run("filter", cfg,
                   {{"samples", a.samples}, {"candidates", a.candidates}, {"accepted", a.accepted},
                    {"rejected", a.rejected}});
  auto samples = dart::read_samples(a.samples);
  auto candidates = dart::read_candidates(a.candidates);
  auto decided = dart::filter_candidates(candidates, samples, cfg.filter);
  std::vector<dart::OptimizedSample> accepted, rejected;
  std::map<std::string, std::size_t> reasons;
  for (auto& d : decided) {
    for (auto r : d.filter.reasons) ++reasons[dart::to_string(r)];
    (d.filter.accepted ? accepted : rejected).push_back(std::move(d));
  }
  dart::write_optimized(a.accepted, accepted);
  if (!a.rejected.empty()) dart::write_optimized(a.rejected, rejected);
  std::string breakdown;
  for (const auto& [name, count] : reasons) breakdown += fmt::format(" {}={}", name, count);
  spdlog::info("event=filter_done accepted={} rejected={}{}", accepted.size(), rejected.size(), breakdown);
  return kExitOk;
}

int run_emit_sft(const GlobalOptions& g, const StageArgs& a) {
  auto cfg = resolve(g);
  if (g.dry_run) return dry_run("emit-sft", cfg, {{"samples", a.samples}, {"accepted", a.accepted}, {"out", a.out}});
  auto samples = dart::read_samples(a.samples);
  auto accepted = dart::read_optimized(a.accepted);
  dart::emit_sft_dataset(accepted, samples, a.out, cfg.tags);
  spdlog::info("event=emit_sft_done records={} out={}", accepted.size(), a.out);
  return kExitOk;
}

int run_rollout(const GlobalOptions& g, const StageArgs& a) {
  auto cfg = resolve(g);
  if (g.dry_run)
    return dry_run("rollout", cfg, {{"samples", a.samples}, {"out", a.out}, {"template", a.template_file}});
  auto samples = dart::read_samples(a.samples);
  auto backends = dart::make_backends(cfg);
  dart::RolloutConfig rc{cfg.group_size, cfg.sampling, cfg.reward};
  auto results = dart::collect_groups(samples, *backends.generator, *backends.scorer, mapper_template(a.template_file),
                                      rc, static_cast<std::size_t>(cfg.backend.max_in_flight));
  std::vector<dart::RolloutGroup> groups;
  for (auto& r : results) {
    if (r.group)
      groups.push_back(std::move(*r.group));
    else
      log_sample_error("rollout", *r.error);
  }
  auto means = dart::batch_mean_rewards(groups, static_cast<std::size_t>(cfg.trainer.global_batch_size));
  for (std::size_t b = 0; b < means.size(); ++b)
    spdlog::info("event=batch_reward batch={} mean_reward={:.6f}", b, means[b]);
  dart::export_grpo_batch(groups, a.out);
  return report_failures("rollout", groups.size(), results.size() - groups.size());
}

int run_nll(const GlobalOptions& g, const std::string& dataset, bool json) {
  auto cfg = resolve(g);
  if (g.dry_run) return dry_run("nll", cfg, {{"dataset", dataset}});
  auto records = dart::read_sft(dataset);
  auto backends = dart::make_backends(cfg);
  auto rep = dart::mean_nll(records, *backends.scorer);
  if (json) {
    std::cout << dart::Json{{"sequences", rep.sequences},
                            {"tokens", rep.tokens},
                            {"nll_per_sequence", rep.per_sequence},
                            {"nll_per_token", rep.per_token}}
                     .dump()
              << "\n";
  } else {
    std::cout << fmt::format("sequences {}\ntokens {}\nnll_per_sequence {:.6f}\nnll_per_token {:.6f}\n", rep.sequences,
                             rep.tokens, rep.per_sequence, rep.per_token);
  }
  return kExitOk;
}

struct TheoryArgs {
  dart::TheoremParams params;
  std::optional<double> rho;
  int grid_steps = 9;
  bool json = false;
};

int run_theory(const GlobalOptions& g, const TheoryArgs& t) {
  const auto& p = t.params;
  dart::Json args{{"c0", p.c0},           {"m0", p.m0},           {"delta_m", p.delta_m}, {"n", p.n_z},
                  {"k", p.k_z},           {"a_minus", p.a_minus}, {"a_plus", p.a_plus},   {"grid_steps", t.grid_steps}};
  if (t.rho) args["rho"] = *t.rho;
  if (g.dry_run) return dry_run("theory", resolve(g), args);

  if (t.rho) {
    double psi = dart::binomial_tail(p.n_z, p.k_z, *t.rho);
    if (t.json)
      std::cout << dart::Json{{"n", p.n_z}, {"k", p.k_z}, {"rho", *t.rho}, {"psi", psi}}.dump() << "\n";
    else
      std::cout << fmt::format("{}", psi) << "\n";
    return kExitOk;
  }

  if (t.grid_steps < 1) throw UsageError("--grid-steps must be >= 1");
  auto rep = dart::check_dominance(p);
  dart::Json rows = dart::Json::array();
  for (int i = 1; i <= t.grid_steps; ++i) {
    double rho = static_cast<double>(i) / (t.grid_steps + 1);
    rows.push_back({{"rho", rho},
                    {"psi", dart::binomial_tail(p.n_z, p.k_z, rho)},
                    {"accuracy", dart::expected_accuracy(p, rho)}});
  }
  if (t.json) {
    dart::Json out{{"params", args},
                   {"grid", rows},
                   {"dominance",
                    {{"rho0", rep.rho0},
                     {"rho_phi", rep.rho_phi},
                     {"acc0", rep.acc0},
                     {"acc_phi", rep.acc_phi},
                     {"gain", rep.gain},
                     {"holds", rep.holds}}}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << fmt::format("n={} k={} a-={} a+={}\n", p.n_z, p.k_z, p.a_minus, p.a_plus);
  std::cout << fmt::format("{:>8}  {:>14}  {:>10}\n", "rho", "psi", "accuracy");
  for (const auto& r : rows)
    std::cout << fmt::format("{:>8.4f}  {:>14.10f}  {:>10.6f}\n", r["rho"].get<double>(), r["psi"].get<double>(),
                             r["accuracy"].get<double>());
  std::cout << fmt::format("original  rho={:.6f} acc={:.10f}\n", rep.rho0, rep.acc0);
  std::cout << fmt::format("optimized rho={:.6f} acc={:.10f}\n", rep.rho_phi, rep.acc_phi);
  std::cout << fmt::format("gain={:.3e} holds={}\n", rep.gain, rep.holds);
  return kExitOk;
}

int run_eval(const GlobalOptions& g, const std::string& input, std::optional<std::size_t> k, bool json) {
  if (g.dry_run) {
    dart::Json args{{"input", input}};
    if (k) args["k"] = *k;
    return dry_run("eval", resolve(g), args);
  }
  auto inputs = dart::read_eval_inputs(input);
  auto records = dart::grade_responses(inputs, k);
  auto summary = dart::summarize(inputs, records);
  if (json) {
    dart::Json arr = dart::Json::array();
    for (const auto& s : summary) arr.push_back(dart::to_json(s));
    std::cout << arr.dump() << "\n";
  } else {
    std::cout << fmt::format("{:<20} {:>8} {:>4} {:>8}\n", "dataset", "samples", "k", "avg@k");
    for (const auto& s : summary)
      std::cout << fmt::format("{:<20} {:>8} {:>4} {:>8}\n", s.dataset, s.samples, s.k, dart::format_percent(s.avg));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dart: CoT rewrite, reward scoring and SFT data tooling"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Override a config key, e.g. --set reward.tau=0.3 (repeatable)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  std::function<int()> action;
  StageArgs a;

  auto* syn = app.add_subcommand("synthesize", "Rewrite each sample's demonstration with the mapper");
  syn->add_option("--samples", a.samples, "Sample JSONL")->required();
  syn->add_option("--out", a.out, "Candidate JSONL")->required();
  syn->add_option("--template", a.template_file, "Mapper prompt template file");
  syn->callback([&] { action = [&] { return run_synthesize(g, a); }; });

  auto* sc = app.add_subcommand("score", "Attach reward breakdowns to candidates");
  sc->add_option("--samples", a.samples, "Sample JSONL")->required();
  sc->add_option("--candidates", a.candidates, "Candidate JSONL")->required();
  sc->add_option("--out", a.out, "Scored candidate JSONL")->required();
  sc->add_option("--template", a.template_file, "Mapper prompt template file");
  sc->callback([&] { action = [&] { return run_score(g, a); }; });

  auto* fl = app.add_subcommand("filter", "Split scored candidates into accepted and rejected");
  fl->add_option("--samples", a.samples, "Sample JSONL")->required();
  fl->add_option("--candidates", a.candidates, "Scored candidate JSONL")->required();
  fl->add_option("--accepted", a.accepted, "Accepted output JSONL")->required();
  fl->add_option("--rejected", a.rejected, "Rejected output JSONL");
  fl->callback([&] { action = [&] { return run_filter(g, a); }; });

  auto* sft = app.add_subcommand("emit-sft", "Write {prompt, target} pairs from accepted records");
  sft->add_option("--samples", a.samples, "Sample JSONL")->required();
  sft->add_option("--accepted", a.accepted, "Accepted JSONL")->required();
  sft->add_option("--out", a.out, "SFT JSONL")->required();
  sft->callback([&] { action = [&] { return run_emit_sft(g, a); }; });

  auto* ro = app.add_subcommand("rollout", "Sample G rewrites per sample, score them, export a GRPO batch");
  ro->add_option("--samples", a.samples, "Sample JSONL")->required();
  ro->add_option("--out", a.out, "GRPO batch JSONL")->required();
  ro->add_option("--template", a.template_file, "Mapper prompt template file");
  ro->callback([&] { action = [&] { return run_rollout(g, a); }; });

  std::string nll_dataset;
  bool nll_json = false;
  auto* nl = app.add_subcommand("nll", "Mean negative log-likelihood of an SFT dataset");
  nl->add_option("--dataset", nll_dataset, "SFT JSONL")->required();
  nl->add_flag("--json", nll_json, "Machine-readable output");
  nl->callback([&] { action = [&] { return run_nll(g, nll_dataset, nll_json); }; });

  TheoryArgs t;
  double rho = 0.0;
  auto* th = app.add_subcommand("theory", "Binomial tail, expected accuracy and the dominance check");
  th->add_option("--c0", t.params.c0, "P(correct) of the original data");
  th->add_option("--m0", t.params.m0, "P(compatible | correct) of the original data");
  th->add_option("--delta-m", t.params.delta_m, "Compatibility gain of the optimized data");
  th->add_option("--n", t.params.n_z, "Samples exhibiting the pattern");
  th->add_option("--k", t.params.k_z, "Effective samples needed");
  th->add_option("--a-minus", t.params.a_minus, "Accuracy without the pattern");
  th->add_option("--a-plus", t.params.a_plus, "Accuracy with the pattern");
  auto* rho_opt = th->add_option("--rho", rho, "Print only the tail probability at this rho");
  th->add_option("--grid-steps", t.grid_steps, "Rows in the rho grid");
  th->add_flag("--json", t.json, "Machine-readable output");
  th->callback([&] {
    if (rho_opt->count() > 0) t.rho = rho;
    action = [&] { return run_theory(g, t); };
  });

  std::string eval_input;
  std::size_t eval_k = 0;
  bool eval_json = false;
  auto* ev = app.add_subcommand("eval", "avg@k over graded responses");
  ev->add_option("--input", eval_input, "JSONL of {sample_id, responses, ground_truth[, dataset]}")->required();
  auto* k_opt = ev->add_option("--k", eval_k, "Required responses per sample");
  ev->add_flag("--json", eval_json, "Machine-readable output");
  ev->callback([&] {
    std::optional<std::size_t> k;
    if (k_opt->count() > 0) k = eval_k;
    action = [&, k] { return run_eval(g, eval_input, k, eval_json); };
  });

  for (auto* sub : {syn, sc, fl, sft, ro, nl, th, ev})
    sub->add_flag("--dry-run", g.dry_run, "Print the resolved config and exit without side effects");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    setup_logging(g.log_level);
    auto start = std::chrono::steady_clock::now();
    int code = action();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    spdlog::debug("event=done exit={} elapsed_ms={}", code, ms.count());
    return code;
  } catch (const UsageError& e) {
    spdlog::error("event=usage_error error={}", dart::Json(e.what()).dump());
    return kExitUsage;
  } catch (const dart::ConfigError& e) {
    spdlog::error("event=config_error error={}", dart::Json(e.what()).dump());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("event=failed error={}", dart::Json(e.what()).dump());
    return kExitFailure;
  }
}
