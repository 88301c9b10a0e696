// Copyright 2026 The plforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// plforge: command-line front end for every stage of the toolkit.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "plforge/corpus/ingest.hpp"
#include "plforge/corpus/pipeline.hpp"
#include "plforge/eval/harness.hpp"
#include "plforge/eval/report.hpp"
#include "plforge/orchestrator/plan.hpp"
#include "plforge/orchestrator/service.hpp"
#include "plforge/orchestrator/store.hpp"
#include "plforge/sft/builder.hpp"
#include "plforge/translate/selector.hpp"

namespace fs = std::filesystem;
using namespace plforge;

namespace {

// Exit codes: 0 success, 1 usage or data error, 2 infrastructure failure.
constexpr int kExitData = 1;
constexpr int kExitInfra = 2;

void write_out(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, text);
}

// ---------------------------------------------------------------------------
// corpus

struct CorpusArgs {
  std::string manifest, input, out, report, tokenizer = "ws";
  bool near_dup = false;
  std::size_t workers = 1;
};

int run_corpus(const CorpusArgs& a) {
  corpus::PipelineConfig cfg;
  cfg.tokenizer = make_tokenizer(a.tokenizer);
  cfg.near_dup.enabled = a.near_dup;
  cfg.workers = a.workers;
  std::vector<corpus::RawDocument> docs;
  if (!a.manifest.empty()) {
    corpus::HttpFetcher fetcher;
    auto ingest = corpus::ingest_sources(corpus::read_manifest(a.manifest), *cfg.tokenizer, &fetcher);
    for (const auto& s : ingest.skipped) std::cerr << "skipped " << s.ref << ": " << s.reason << "\n";
    docs = std::move(ingest.documents);
  }
  if (!a.input.empty()) {
    auto more = corpus::read_corpus(a.input);
    docs.insert(docs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  auto result = corpus::run_pipeline(std::move(docs), cfg);
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "refined.jsonl", corpus::corpus_to_jsonl(result.refined));
  write_file(fs::path(a.out) / "report.txt", result.report.render_table());
  if (!a.report.empty()) write_out(a.report, result.report.to_json().dump(2) + "\n");
  std::cout << result.report.render_table();
  return 0;
}

// ---------------------------------------------------------------------------
// sft

struct SftArgs {
  std::string repos, queue, out, card, tokenizer = "ws", paraphrase = "none", key_env = "PLFORGE_LLM_KEY";
  std::size_t top = 10;
  int in_flight = 4;
};

std::unique_ptr<sft::ParaphraseProvider> paraphrase_provider(const SftArgs& a) {
  if (a.paraphrase == "none") return nullptr;
  if (a.paraphrase == "stub") return std::make_unique<sft::StubParaphraseProvider>();
  return std::make_unique<sft::HttpParaphraseProvider>(HttpEndpoint{a.paraphrase, a.key_env});
}

int run_sft(const SftArgs& a) {
  auto tokenizer = make_tokenizer(a.tokenizer);
  orchestrator::Store store(a.queue);

  std::size_t enqueued = 0, gated = 0;
  if (!a.repos.empty()) {
    auto top = sft::rank_repos(sft::read_repo_manifest(a.repos), a.top);
    std::vector<sft::CodeFile> files;
    for (const auto& repo : top) {
      if (repo.path.empty()) {
        std::cerr << "repo " << repo.name << " has no local path; skipped\n";
        continue;
      }
      for (auto& f : sft::collect_code_files(repo, *tokenizer)) {
        if (sft::token_gate(f)) files.push_back(std::move(f));
        else ++gated;
      }
    }
    std::vector<orchestrator::Mutation> muts;
    for (const auto& t : sft::enqueue_triage(files))
      if (!store.get(orchestrator::RecordKind::review_task, t.id))
        muts.push_back({orchestrator::RecordKind::review_task, t.id, t.to_json(), 0});
    store.commit(muts);
    enqueued = muts.size();
  }

  // Fill empty refinement tasks with the seed prompt plus three paraphrases.
  std::size_t drafted = 0, parked = 0;
  if (auto provider = paraphrase_provider(a)) {
    std::vector<orchestrator::StoreRecord> todo;
    std::vector<std::string> seeds;
    for (const auto& r : store.list(orchestrator::RecordKind::review_task)) {
      auto t = sft::ReviewTask::from_json(r.payload);
      if (t.kind != sft::TaskKind::prompt_refine || t.status != sft::TaskStatus::pending) continue;
      if (!t.payload.value("variants", json::array()).empty()) continue;
      auto seed = t.payload.value("seed_prompt", std::string());
      if (is_blank(seed)) continue;
      todo.push_back(r);
      seeds.push_back(seed);
    }
    auto outcomes = sft::generate_paraphrases_batch(seeds, *provider, sft::kVariantsPerSnippet - 1, {},
                                                    static_cast<std::size_t>(std::max(1, a.in_flight)));
    for (std::size_t i = 0; i < todo.size(); ++i) {
      if (outcomes[i].parked) {
        ++parked;
        std::cerr << todo[i].id << ": paraphrase provider unavailable (" << outcomes[i].error << ")\n";
        continue;
      }
      auto t = sft::ReviewTask::from_json(todo[i].payload);
      json variants = json::array({seeds[i]});
      for (const auto& p : outcomes[i].paraphrases) variants.push_back(p);
      t.payload["variants"] = variants;
      if (outcomes[i].short_of_k) t.payload["warning"] = "fewer than 3 distinct paraphrases";
      store.put(orchestrator::RecordKind::review_task, t.id, t.to_json(), todo[i].version);
      ++drafted;
    }
  }

  std::vector<sft::ReviewTask> tasks;
  for (const auto& r : store.list(orchestrator::RecordKind::review_task))
    tasks.push_back(sft::ReviewTask::from_json(r.payload));
  auto pairs = sft::pairs_from_tasks(tasks);
  std::cout << "enqueued " << enqueued << " triage tasks (" << gated << " files outside the token gate)\n";
  if (drafted || parked) std::cout << "drafted " << drafted << " paraphrase sets, " << parked << " parked\n";
  if (pairs.empty()) {
    std::cout << "no accepted refinement tasks yet; dataset not written\n";
    return 0;
  }
  auto ds = sft::assemble_sft(pairs, *tokenizer);
  write_out(a.out, sft::pairs_to_jsonl(ds.pairs));
  if (!a.card.empty()) write_out(a.card, ds.card.to_json().dump(2) + "\n");
  std::cout << ds.card.render();
  return 0;
}

// ---------------------------------------------------------------------------
// translate

struct TranslateArgs {
  std::string input, out, audit, gaps, langs = "es,de,fr,bn", systems = "a,b,c", mt_url, qe_url, embed_url,
                                        key_env = "PLFORGE_MT_KEY", qe_langs = "es,de,fr", store;
  int candidates = 5;
  std::size_t workers = 4;
};

int run_translate(const TranslateArgs& a) {
  translate::Clients clients;
  for (const auto& name : split(a.systems, ',')) {
    auto n = trim(name);
    if (n.empty()) continue;
    if (a.mt_url.empty())
      clients.systems.push_back(std::make_shared<translate::StubMtClient>(n));
    else
      clients.systems.push_back(std::make_shared<translate::HttpMtClient>(
          n, HttpEndpoint{a.mt_url + "/" + n, a.key_env}));
  }
  std::set<translate::Language> qe_supported;
  for (auto l : translate::parse_language_list(a.qe_langs)) qe_supported.insert(l);
  if (a.qe_url.empty())
    clients.qe = std::make_shared<translate::StubQeClient>(qe_supported);
  else
    clients.qe = std::make_shared<translate::HttpQeClient>(HttpEndpoint{a.qe_url, a.key_env}, qe_supported);
  if (a.embed_url.empty())
    clients.embedder = std::make_shared<translate::HashEmbeddingClient>();
  else
    clients.embedder = std::make_shared<translate::HttpEmbeddingClient>(HttpEndpoint{a.embed_url, a.key_env});

  translate::SelectorConfig cfg;
  cfg.candidates_per_system = a.candidates;
  auto pairs = sft::read_pairs(a.input);
  auto out = translate::build_msft(pairs, translate::parse_language_list(a.langs), clients, cfg, a.workers);

  auto all = pairs;
  all.insert(all.end(), out.records.begin(), out.records.end());
  write_out(a.out, sft::pairs_to_jsonl(all));
  if (!a.audit.empty()) write_out(a.audit, out.audit_jsonl());
  if (!a.gaps.empty()) write_out(a.gaps, out.gap_manifest().dump(2) + "\n");
  if (!a.store.empty()) {
    orchestrator::Store store(a.store);
    std::vector<orchestrator::Mutation> muts;
    for (const auto& r : out.audit)
      muts.push_back({orchestrator::RecordKind::translation_audit,
                      orchestrator::Service::translation_record_id(r.prompt_id, std::string(translate::to_string(r.language))),
                      r.to_json(), std::nullopt});
    store.commit(muts);
  }
  std::cerr << out.records.size() << " translations, " << out.gaps.size() << " escalated\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval / validate

struct EvalArgs {
  std::string bench, adapter, model_cmd, model = "model", model_type = "Open", params = "--", report, store;
  int samples = 1;
  std::vector<int> ks{1};
  std::size_t workers = 4;
  double timeout = 10, gen_timeout = 120;
  std::uint64_t memory_mib = 512;
  bool canonical = false, strict = false;
};

SandboxPolicy policy_from(double timeout, std::uint64_t memory_mib) {
  SandboxPolicy p;
  p.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout * 1000));
  p.memory_bytes = memory_mib << 20;
  p.validate();
  return p;
}

int run_eval(const EvalArgs& a) {
  auto tasks = eval::load_benchmark(a.bench);
  auto adapter = eval::RunnerAdapter::load(a.adapter);
  auto policy = policy_from(a.timeout, a.memory_mib);
  eval::check_toolchain(adapter);
  std::unique_ptr<eval::CompletionGenerator> gen;
  if (a.canonical) gen = std::make_unique<eval::CanonicalGenerator>();
  else if (!a.model_cmd.empty())
    gen = std::make_unique<eval::CommandGenerator>(
        a.model_cmd, std::chrono::milliseconds(static_cast<std::int64_t>(a.gen_timeout * 1000)));
  else
    throw ArgumentError("either --model-cmd or --canonical is required");

  eval::EvalOptions opt;
  opt.model = a.model;
  opt.model_type = a.model_type;
  opt.params = a.params;
  opt.n = a.samples;
  opt.ks = a.ks;
  opt.workers = a.workers;
  opt.strict = a.strict;
  auto report = eval::evaluate_model(*gen, tasks, opt, adapter, policy);
  if (!a.report.empty()) write_out(a.report, report.to_json().dump(2) + "\n");
  if (!a.store.empty()) {
    orchestrator::Store store(a.store);
    store.put(orchestrator::RecordKind::eval_report, a.model, report.to_json());
  }
  std::cout << eval::render_leaderboard(std::vector<eval::EvalReport>{report}).text();
  for (const auto& [k, v] : report.pass_at) std::cout << "pass@" << k << " = " << eval::format_percent(v) << "\n";
  for (const auto& [cls, count] : report.class_counts()) std::cout << "  " << cls << ": " << count << "\n";
  return 0;
}

int run_validate(const EvalArgs& a) {
  auto tasks = eval::load_benchmark(a.bench);
  auto adapter = eval::RunnerAdapter::load(a.adapter);
  eval::check_toolchain(adapter);
  auto report = eval::validate_benchmark(tasks, adapter, policy_from(a.timeout, a.memory_mib), a.workers);
  std::cout << report.summary() << "\n";
  return report.valid() ? 0 : kExitData;
}

struct LeaderboardArgs {
  std::vector<std::string> reports;
  bool as_json = false;
};

int run_leaderboard(const LeaderboardArgs& a) {
  std::vector<eval::EvalReport> reports;
  for (const auto& p : a.reports) reports.push_back(eval::EvalReport::from_json(json::parse(read_file(p))));
  auto board = eval::render_leaderboard(reports);
  std::cout << (a.as_json ? board.to_json().dump(2) + "\n" : board.text());
  return 0;
}

// ---------------------------------------------------------------------------
// plan / grid

struct PlanArgs {
  std::int64_t bd = 0, ga = 0, nd = 1, n = 0, epochs = 1, interval = 250;
  std::string losses, store, id = "plan";
  bool as_json = false;
};

int run_plan(const PlanArgs& a) {
  auto plan = orchestrator::compute_plan(a.bd, a.ga, a.nd, a.n, a.epochs, a.interval);
  json record = plan.to_json();
  std::string text = plan.render();
  if (!a.losses.empty()) {
    orchestrator::CheckpointTracker tracker(plan.interval);
    for (const auto& line : split_lines(read_file(a.losses))) {
      if (is_blank(line)) continue;
      tracker.observe(std::stod(trim(line)));
    }
    record["checkpoints"] = tracker.to_json();
    auto saved = tracker.saved_steps();
    text += "checkpoints saved           " + std::to_string(saved.size()) + "\n";
    if (auto best = tracker.best_step()) text += "retained (lowest loss)      step " + std::to_string(*best) + "\n";
  }
  if (!a.store.empty()) {
    orchestrator::Store store(a.store);
    store.put(orchestrator::RecordKind::plan, a.id, record);
  }
  std::cout << (a.as_json ? record.dump(2) + "\n" : text);
  return 0;
}

struct GridArgs {
  std::string tokens, instructions, store;
};

int run_grid(const GridArgs& a) {
  auto t = a.tokens.empty() ? orchestrator::default_token_axis() : orchestrator::parse_axis(a.tokens);
  auto i = a.instructions.empty() ? orchestrator::default_instruction_axis() : orchestrator::parse_axis(a.instructions);
  auto cells = orchestrator::plan_ablation_grid(t, i);
  json j = json::array();
  for (const auto& c : cells) j.push_back(c.to_json());
  if (!a.store.empty()) {
    orchestrator::Store store(a.store);
    store.put(orchestrator::RecordKind::plan, "ablation-grid", {{"cells", j}});
  }
  for (const auto& c : j) std::cout << c.dump() << "\n";
  std::cerr << cells.size() << " cells\n";
  return 0;
}

// ---------------------------------------------------------------------------
// serve / store

struct ServeArgs {
  std::string store, host = "127.0.0.1", adapter, bench, static_dir, token_env = "PLFORGE_API_TOKEN";
  int port = 8080;
  double timeout = 10;
  std::uint64_t memory_mib = 512;
};

orchestrator::Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  orchestrator::Store store(a.store);
  orchestrator::ServiceConfig cfg;
  cfg.host = a.host;
  cfg.port = a.port;
  cfg.token_env = a.token_env;
  cfg.policy = policy_from(a.timeout, a.memory_mib);
  if (!a.adapter.empty()) cfg.adapter = eval::RunnerAdapter::load(a.adapter);
  if (!a.bench.empty()) cfg.benchmark = eval::load_benchmark(a.bench);
  cfg.static_dir = a.static_dir;
  orchestrator::Service service(store, cfg);
  g_service = &service;
  std::signal(SIGINT, [](int) { if (g_service) g_service->server().stop(); });
  std::signal(SIGTERM, [](int) { if (g_service) g_service->server().stop(); });
  std::cerr << "listening on http://" << a.host << ":" << a.port << "\n";
  bool ok = service.listen();
  g_service = nullptr;
  if (!ok) {
    std::cerr << "error: cannot listen on " << a.host << ":" << a.port << "\n";
    return kExitInfra;
  }
  return 0;
}

struct StoreArgs {
  std::string dir, file;
};

// Tools installed next to this binary (plforge-stubrun) resolve first.
void prepend_own_dir_to_path() {
  std::error_code ec;
  auto self = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return;
  const char* path = std::getenv("PATH");
  std::string value = self.parent_path().string();
  if (path && *path) value += std::string(":") + path;
  ::setenv("PATH", value.c_str(), 1);
}

}  // namespace

int main(int argc, char** argv) {
  prepend_own_dir_to_path();
  CLI::App app{"plforge: corpus, dataset, translation, evaluation and training-plan tooling"};
  app.require_subcommand(1);

  CorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus cleaning");
  corpus_cmd->require_subcommand(1);
  auto* corpus_run = corpus_cmd->add_subcommand("run", "Ingest and filter a corpus");
  corpus_run->add_option("--manifest", corpus_args.manifest, "Line-delimited {ref, origin_kind, license_hint?}");
  corpus_run->add_option("--input", corpus_args.input, "Already-ingested corpus JSONL");
  corpus_run->add_option("--out", corpus_args.out, "Output directory")->required();
  corpus_run->add_option("--report", corpus_args.report, "Write the structured report here");
  corpus_run->add_option("--tokenizer", corpus_args.tokenizer, "ws or plugin:<cmd>");
  corpus_run->add_flag("--near-dup", corpus_args.near_dup, "Also drop near-duplicates");
  corpus_run->add_option("--workers", corpus_args.workers)->check(CLI::PositiveNumber);

  SftArgs sft_args;
  auto* sft_cmd = app.add_subcommand("sft", "Instruction dataset building");
  sft_cmd->require_subcommand(1);
  auto* sft_build = sft_cmd->add_subcommand("build", "Queue triage tasks and assemble reviewed pairs");
  sft_build->add_option("--repos", sft_args.repos, "Repository manifest");
  sft_build->add_option("--top", sft_args.top, "Repositories to keep")->check(CLI::PositiveNumber);
  sft_build->add_option("--queue", sft_args.queue, "Store directory holding the review queue")->required();
  sft_build->add_option("--out", sft_args.out, "Dataset JSONL")->required();
  sft_build->add_option("--card", sft_args.card, "Dataset card JSON");
  sft_build->add_option("--tokenizer", sft_args.tokenizer, "ws or plugin:<cmd>");
  sft_build->add_option("--paraphrase", sft_args.paraphrase, "none, stub or a provider base URL");
  sft_build->add_option("--key-env", sft_args.key_env, "Environment variable holding the provider key");
  sft_build->add_option("--in-flight", sft_args.in_flight, "Concurrent provider calls")->check(CLI::PositiveNumber);

  TranslateArgs tr_args;
  auto* tr_cmd = app.add_subcommand("translate", "Translate instruction prompts");
  tr_cmd->add_option("--in", tr_args.input, "English SFT JSONL")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", tr_args.out, "Multilingual SFT JSONL (default stdout)");
  tr_cmd->add_option("--langs", tr_args.langs, "Target languages");
  tr_cmd->add_option("--systems", tr_args.systems, "MT system names");
  tr_cmd->add_option("--audit", tr_args.audit, "Per prompt-language audit JSONL");
  tr_cmd->add_option("--gaps", tr_args.gaps, "Escalated prompt-language pairs");
  tr_cmd->add_option("--candidates", tr_args.candidates, "Candidates per system")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--mt-url", tr_args.mt_url, "MT base URL; each system is served at <url>/<name>");
  tr_cmd->add_option("--qe-url", tr_args.qe_url, "QE base URL");
  tr_cmd->add_option("--qe-langs", tr_args.qe_langs, "Languages the QE model supports");
  tr_cmd->add_option("--embed-url", tr_args.embed_url, "Embedding base URL");
  tr_cmd->add_option("--key-env", tr_args.key_env, "Environment variable holding the API key");
  tr_cmd->add_option("--store", tr_args.store, "Also record the audit in this store");
  tr_cmd->add_option("--workers", tr_args.workers)->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto add_exec_opts = [&](CLI::App* c) {
    c->add_option("--bench", eval_args.bench, "Benchmark JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--adapter", eval_args.adapter, "Adapter TOML or JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--timeout", eval_args.timeout, "Seconds per execution");
    c->add_option("--memory-mib", eval_args.memory_mib, "Memory cap per execution");
    c->add_option("--workers", eval_args.workers)->check(CLI::PositiveNumber);
  };
  auto* eval_cmd = app.add_subcommand("eval", "Score a model on a benchmark");
  add_exec_opts(eval_cmd);
  eval_cmd->add_option("--samples", eval_args.samples, "Completions per task (n)")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--k", eval_args.ks, "k values for pass@k")->delimiter(',');
  eval_cmd->add_option("--model-cmd", eval_args.model_cmd, "Generator command; prompt on stdin");
  eval_cmd->add_flag("--canonical", eval_args.canonical, "Use each task's canonical solution");
  eval_cmd->add_option("--gen-timeout", eval_args.gen_timeout, "Seconds per generator call");
  eval_cmd->add_option("--model", eval_args.model);
  eval_cmd->add_option("--model-type", eval_args.model_type);
  eval_cmd->add_option("--params", eval_args.params);
  eval_cmd->add_option("--report", eval_args.report, "Write the structured report here");
  eval_cmd->add_option("--store", eval_args.store, "Also record the report in this store");
  eval_cmd->add_flag("--strict", eval_args.strict, "Abort on the first generator failure");

  auto* val_cmd = app.add_subcommand("validate", "Check that every canonical solution passes");
  add_exec_opts(val_cmd);

  LeaderboardArgs lb_args;
  auto* lb_cmd = app.add_subcommand("leaderboard", "Render stored evaluation reports");
  lb_cmd->add_option("reports", lb_args.reports, "Report JSON files")->required()->check(CLI::ExistingFile);
  lb_cmd->add_flag("--json", lb_args.as_json);

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "Batch and step arithmetic for a training run");
  plan_cmd->add_option("--bd", plan_args.bd, "Per-device batch")->required();
  plan_cmd->add_option("--ga", plan_args.ga, "Gradient accumulation steps")->required();
  plan_cmd->add_option("--nd", plan_args.nd, "Devices");
  plan_cmd->add_option("--n", plan_args.n, "Training samples")->required();
  plan_cmd->add_option("--epochs", plan_args.epochs);
  plan_cmd->add_option("--interval", plan_args.interval, "Eval/save interval in steps");
  plan_cmd->add_option("--losses", plan_args.losses, "One evaluation loss per line")->check(CLI::ExistingFile);
  plan_cmd->add_option("--store", plan_args.store, "Record the plan in this store");
  plan_cmd->add_option("--id", plan_args.id, "Plan record id");
  plan_cmd->add_flag("--json", plan_args.as_json);

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand("grid", "Plan the token-budget by instruction-count grid");
  grid_cmd->add_option("--tokens", grid_args.tokens, "Comma-separated, e.g. 0,1M,2M");
  grid_cmd->add_option("--instructions", grid_args.instructions, "Comma-separated");
  grid_cmd->add_option("--store", grid_args.store);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--store", serve_args.store, "Store directory")->required();
  serve_cmd->add_option("--host", serve_args.host);
  serve_cmd->add_option("--port", serve_args.port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--adapter", serve_args.adapter, "Enables /eval/submissions")->check(CLI::ExistingFile);
  serve_cmd->add_option("--bench", serve_args.bench, "Tasks addressable by task_id")->check(CLI::ExistingFile);
  serve_cmd->add_option("--static", serve_args.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--token-env", serve_args.token_env, "Variable holding the bearer token");
  serve_cmd->add_option("--timeout", serve_args.timeout);
  serve_cmd->add_option("--memory-mib", serve_args.memory_mib);

  StoreArgs store_args;
  auto* store_cmd = app.add_subcommand("store", "Store maintenance");
  store_cmd->require_subcommand(1);
  auto* store_export = store_cmd->add_subcommand("export", "Write every record as JSONL");
  store_export->add_option("--dir", store_args.dir)->required();
  store_export->add_option("--out", store_args.file, "Default stdout");
  auto* store_import = store_cmd->add_subcommand("import", "Load records exported elsewhere");
  store_import->add_option("--dir", store_args.dir)->required();
  store_import->add_option("--in", store_args.file)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (corpus_run->parsed()) {
      if (corpus_args.manifest.empty() && corpus_args.input.empty())
        throw ArgumentError("one of --manifest or --input is required");
      return run_corpus(corpus_args);
    }
    if (sft_build->parsed()) return run_sft(sft_args);
    if (tr_cmd->parsed()) return run_translate(tr_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (val_cmd->parsed()) return run_validate(eval_args);
    if (lb_cmd->parsed()) return run_leaderboard(lb_args);
    if (plan_cmd->parsed()) return run_plan(plan_args);
    if (grid_cmd->parsed()) return run_grid(grid_args);
    if (serve_cmd->parsed()) return run_serve(serve_args);
    if (store_export->parsed()) {
      orchestrator::Store store(store_args.dir);
      write_out(store_args.file, store.export_jsonl());
      return 0;
    }
    if (store_import->parsed()) {
      orchestrator::Store store(store_args.dir);
      std::cout << "imported " << store.import_jsonl(read_file(store_args.file)) << " records\n";
      return 0;
    }
  } catch (const eval::InfrastructureError& e) {
    std::cerr << "infrastructure error: " << e.what() << "\n";
    return kExitInfra;
  } catch (const SandboxError& e) {
    std::cerr << "infrastructure error: " << e.what() << "\n";
    return kExitInfra;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitData;
}
