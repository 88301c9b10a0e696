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

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "eval_fixtures.hpp"
#include "plforge/eval/stub_dialect.hpp"

namespace plforge::eval {
namespace {

using namespace testing;

// ---------------------------------------------------------------------------
// pass@k

TEST(PassAtKTest, OracleSelfCheck) {
  // Six 2-subsets of {A, B, x, y}; only {x, y} misses.
  EXPECT_DOUBLE_EQ(brute_force_pass_at_k(4, 2, 2), 5.0 / 6.0);
}

TEST(PassAtKTest, Examples) {
  EXPECT_EQ(pass_at_k(5, 0, 1), 0.0);
  EXPECT_EQ(pass_at_k(5, 5, 1), 1.0);
  EXPECT_NEAR(pass_at_k(4, 2, 2), 5.0 / 6.0, 1e-12);
}

TEST(PassAtKTest, MatchesSubsetEnumerationExhaustively) {
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k)
        EXPECT_NEAR(pass_at_k(n, c, k), brute_force_pass_at_k(n, c, k), 1e-12) << n << " " << c << " " << k;
}

TEST(PassAtKTest, PassAtOneIsFractionCorrect) {
  for (int n = 1; n <= 20; ++n)
    for (int c = 0; c <= n; ++c) EXPECT_NEAR(pass_at_k(n, c, 1), static_cast<double>(c) / n, 1e-12);
}

TEST(PassAtKTest, Monotone) {
  for (int n = 1; n <= 30; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k) {
        double v = pass_at_k(n, c, k);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        if (c < n) EXPECT_LE(v, pass_at_k(n, c + 1, k) + 1e-15);
        if (k < n) EXPECT_LE(v, pass_at_k(n, c, k + 1) + 1e-15);
      }
}

TEST(PassAtKTest, LargeNDoesNotOverflow) {
  double v = pass_at_k(2000, 3, 100);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(PassAtKTest, RejectsBadArguments) {
  EXPECT_THROW(pass_at_k(3, 1, 4), ArgumentError);
  EXPECT_THROW(pass_at_k(3, 4, 1), ArgumentError);
  EXPECT_THROW(pass_at_k(3, -1, 1), ArgumentError);
  EXPECT_THROW(pass_at_k(3, 1, 0), ArgumentError);
  EXPECT_THROW(pass_at_k(0, 0, 1), ArgumentError);
}

// ---------------------------------------------------------------------------
// Stub dialect

struct RunOutcome {
  int code;
  std::string out, err;
};

RunOutcome run_stub(const std::string& src, bool check = false) {
  std::ostringstream out, err;
  int code = stub::run_source(src, check, out, err);
  return {code, out.str(), err.str()};
}

TEST(StubDialectTest, EvaluatesPrograms) {
  auto r = run_stub(
      "fn fib(n: Int) -> Int:\n"
      "    if n < 2:\n"
      "        return n\n"
      "    return fib(n - 1) + fib(n - 2)\n"
      "\n"
      "var xs = []\n"
      "for i in range(8):\n"
      "    xs.append(fib(i))\n"
      "print(xs, len(xs), xs[-1], xs[2:4])\n"
      "print(-7 // 2, -7 % 2, 7 / 2, \"a\" + \"b\", \"ab\" * 2)\n"
      "print(1 < 2 < 3, 3 in xs, \"z\" not in \"abc\", not 0, max([4, 9, 2]), abs(-3))\n");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "[0, 1, 1, 2, 3, 5, 8, 13] 8 13 [1, 2]\n"
            "-4 1 3 ab abab\n"
            "True True True True 9 3\n");
}

TEST(StubDialectTest, LoopsAndControlFlow) {
  auto r = run_stub(
      "var total = 0\n"
      "var i = 0\n"
      "while True:\n"
      "    i += 1\n"
      "    if i > 10:\n"
      "        break\n"
      "    elif i % 2 == 0:\n"
      "        continue\n"
      "    else:\n"
      "        total += i\n"
      "for ch in \"abc\":\n"
      "    pass\n"
      "print(total, ch)\n");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "25 c\n");
}

TEST(StubDialectTest, DocstringsDecoratorsAndAnnotations) {
  auto r = run_stub(
      "@always_inline\n"
      "fn greet(owned name: String) raises -> String:\n"
      "    \"\"\"Say hello.\n"
      "    >>> greet(\"x\")\n"
      "    \"\"\"\n"
      "    let prefix: String = \"hi \"\n"
      "    return prefix + name\n"
      "print(greet(\"mojo\"))\n");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "hi mojo\n");
}

TEST(StubDialectTest, Diagnostics) {
  struct Case {
    const char* src;
    bool check;
    const char* prefix;
  };
  const Case cases[] = {
      {"fn main() {\n    print(1)\n}\nmain()\n", true, "parse error: line 1"},
      {"fn f(:\n    return 1\n", true, "parse error: line 1: unbalanced '('"},
      {"fn f():\nreturn 1\n", true, "parse error: line 2"},
      {"fn f():\n    return g(1)\n", true, "compile error: line 2: use of unknown declaration 'g'"},
      {"fn f(a):\n    return a\nf(1, 2)\n", true, "compile error: line 3"},
      {"return 1\n", true, "compile error: line 1: 'return' outside function"},
      {"break\n", true, "compile error"},
      {"print(1 // 0)\n", false, "runtime error: line 1: division by zero"},
      {"var xs = [1]\nprint(xs[3])\n", false, "runtime error: line 2: index out of range"},
      {"assert 1 == 2, \"boom\"\n", false, "AssertionError: line 1: boom"},
      {"fn f(n):\n    return f(n + 1)\nf(0)\n", false, "runtime error: line 2: maximum recursion depth"},
      {"print(9223372036854775807 + 1)\n", false, "runtime error: line 1: integer overflow"},
  };
  for (const auto& c : cases) {
    auto r = run_stub(c.src, c.check);
    EXPECT_EQ(r.code, 1) << c.src;
    EXPECT_EQ(r.err.rfind(c.prefix, 0), 0u) << c.src << " -> " << r.err;
  }
}

TEST(StubDialectTest, CheckModeDoesNotRun) {
  auto r = run_stub("print(\"side effect\")\nassert False\n", true);
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
}

// ---------------------------------------------------------------------------
// Benchmark files

TEST(BenchmarkTest, LoadsSample) {
  auto tasks = stub_tasks();
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_EQ(tasks[0].task_id, "stub/0");
  EXPECT_EQ(tasks[2].entry_point, "is_palindrome");
  auto again = parse_benchmark(benchmark_to_jsonl(tasks));
  ASSERT_EQ(again.size(), 3u);
  EXPECT_EQ(again[1].to_json(), tasks[1].to_json());
}

TEST(BenchmarkTest, EmptyFileHasNoTasks) {
  try {
    parse_benchmark("\n\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_STREQ(e.what(), "no tasks");
  }
}

TEST(BenchmarkTest, DuplicateIdNamed) {
  auto t = stub_tasks()[0].to_json().dump();
  try {
    parse_benchmark(t + "\n" + t + "\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("stub/0"), std::string::npos) << e.what();
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(BenchmarkTest, MalformedRecordReportsLine) {
  auto t = stub_tasks()[0].to_json();
  auto missing = t;
  missing.erase("test");
  auto wrong_entry = t;
  wrong_entry["entry_point"] = "nowhere";
  for (const auto& bad : {std::string("{not json"), missing.dump(), wrong_entry.dump()}) {
    try {
      parse_benchmark(t.dump() + "\n\n" + bad + "\n");
      FAIL() << bad;
    } catch (const LoadError& e) {
      EXPECT_EQ(e.line(), 3u) << e.what();
    }
  }
}

TEST(BenchmarkTest, MissingFile) { EXPECT_THROW(load_benchmark("/nonexistent/bench.jsonl"), LoadError); }

// ---------------------------------------------------------------------------
// Adapters

TEST(AdapterTest, LoadsSampleAdapters) {
  auto stub = stub_adapter();
  EXPECT_EQ(stub.language, "stub");
  EXPECT_EQ(stub.extension, ".stub");
  ASSERT_TRUE(stub.compile_cmd);
  EXPECT_EQ(stub.classifiers.size(), 5u);
  EXPECT_EQ(stub.classify(Stage::compile, "parse error: line 1: x"), VerdictClass::parse_error);
  EXPECT_EQ(stub.classify(Stage::run, "parse error: line 1: x"), std::nullopt);
  EXPECT_EQ(stub.classify(Stage::run, "ok\nAssertionError: line 4"), VerdictClass::test_failure);

  auto mojo = RunnerAdapter::load(source_path("samples/adapters/mojo.toml"));
  EXPECT_EQ(mojo.language, "mojo");
  EXPECT_EQ(mojo.classify(Stage::compile, "main.mojo:1:11: error: expected ':' in function definition"),
            VerdictClass::parse_error);
  EXPECT_EQ(mojo.classify(Stage::compile, "main.mojo:3:5: error: use of unknown declaration 'logging'"),
            VerdictClass::compile_error);

  auto via_json = RunnerAdapter::from_json(stub.to_json());
  EXPECT_EQ(via_json.to_json(), stub.to_json());
}

TEST(AdapterTest, RejectsInvalidConfig) {
  json base = {{"language", "x"}, {"run_cmd", "run {file}"}};
  EXPECT_NO_THROW(RunnerAdapter::from_json(base));

  auto no_file = base;
  no_file["run_cmd"] = "run main.x";
  EXPECT_THROW(RunnerAdapter::from_json(no_file), ConfigError);

  auto bad_regex = base;
  bad_regex["classifiers"] = {{{"pattern", "(unclosed"}, {"verdict", "PARSE_ERROR"}}};
  EXPECT_THROW(RunnerAdapter::from_json(bad_regex), ConfigError);

  auto bad_verdict = base;
  bad_verdict["classifiers"] = {{{"pattern", "x"}, {"verdict", "MAYBE"}}};
  EXPECT_THROW(RunnerAdapter::from_json(bad_verdict), ConfigError);

  auto bad_stage = base;
  bad_stage["classifiers"] = {{{"pattern", "x"}, {"verdict", "PASSED"}, {"stage", "link"}}};
  EXPECT_THROW(RunnerAdapter::from_json(bad_stage), ConfigError);

  EXPECT_THROW(RunnerAdapter::from_json({{"language", "x"}}), ConfigError);
  EXPECT_THROW(RunnerAdapter::from_toml("language = \"x\"\nrun_cmd = [1]\n"), ConfigError);
  EXPECT_THROW(RunnerAdapter::from_toml("language = \n"), ConfigError);
}

TEST(AdapterTest, AssemblesPromptCompletionTestsCall) {
  auto a = stub_adapter();
  auto program = a.assemble("fn f(x: Int) -> Int:\n", "    return x\n", "def check(c):\n    assert c(1) == 1\n", "f");
  EXPECT_EQ(program, "fn f(x: Int) -> Int:\n    return x\n\ndef check(c):\n    assert c(1) == 1\n\ncheck(f)\n");
  auto argv = RunnerAdapter::expand("tool --in {file} -o {dir}/out", "/scratch/main.x");
  EXPECT_EQ(argv, (std::vector<std::string>{"tool", "--in", "/scratch/main.x", "-o", "/scratch/out"}));
}

// ---------------------------------------------------------------------------
// execute

class ExecuteTest : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!fs_isolation_available()) GTEST_SKIP() << "kernel lacks Landlock";
    adapter_ = stub_adapter();
    tasks_ = stub_tasks();
  }
  EvalVerdict run(const std::string& completion, std::size_t task = 0,
                  std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
    return execute(completion, tasks_[task], adapter_, test_policy(timeout));
  }
  RunnerAdapter adapter_;
  std::vector<BenchmarkTask> tasks_;
};

TEST_F(ExecuteTest, CanonicalSolutionsPass) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    auto v = run(tasks_[i].canonical_solution, i);
    EXPECT_EQ(v.verdict, VerdictClass::passed) << tasks_[i].task_id << ": " << v.output;
    EXPECT_EQ(v.task_id, tasks_[i].task_id);
  }
}

TEST_F(ExecuteTest, VerdictClasses) {
  struct Case {
    const char* completion;
    VerdictClass expected;
  };
  const Case cases[] = {
      {"    return (x + y\n", VerdictClass::parse_error},
      {"    return x +* y\n", VerdictClass::parse_error},
      {"    return helper(x, y)\n", VerdictClass::compile_error},
      {"    return x // 0\n", VerdictClass::runtime_error},
      {"    return x - y\n", VerdictClass::test_failure},
      {"    alloc(1024)\n    return x + y\n", VerdictClass::resource_limit},
  };
  for (const auto& c : cases) {
    auto v = run(c.completion);
    EXPECT_EQ(v.verdict, c.expected) << c.completion << " -> " << to_string(v.verdict) << "\n" << v.output;
  }
}

TEST_F(ExecuteTest, InfiniteLoopTimesOutWithinSlack) {
  const auto timeout = std::chrono::seconds(2);
  auto start = std::chrono::steady_clock::now();
  auto v = run("    while True:\n        pass\n", 0, timeout);
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(v.verdict, VerdictClass::timeout);
  EXPECT_LE(elapsed, 2.5);
}

TEST_F(ExecuteTest, OutputIsCapturedAndClipped) {
  auto v = run("    for i in range(100000):\n        print(\"line\", i)\n    return x + y\n");
  EXPECT_EQ(v.verdict, VerdictClass::passed);
  EXPECT_LE(v.output.size(), kVerdictOutputLimit + 32);
  EXPECT_EQ(v.output.rfind("line 0\n", 0), 0u);
}

TEST_F(ExecuteTest, SandboxSetupFailureIsInfrastructure) {
  adapter_.run_cmd = "/nonexistent/interpreter {file}";
  adapter_.compile_cmd.reset();
  EXPECT_THROW(run(tasks_[0].canonical_solution), InfrastructureError);
  EXPECT_THROW(check_toolchain(adapter_), InfrastructureError);
}

// Programs run through /bin/sh and python3 to probe the sandbox directly.
class ContainmentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!fs_isolation_available()) GTEST_SKIP() << "kernel lacks Landlock";
    task_.task_id = "probe";
    task_.entry_point = "probe";
    task_.prompt = "# probe\n";
  }
  EvalVerdict run(const std::string& interpreter, const std::string& ext, const std::string& body) {
    RunnerAdapter a;
    a.language = interpreter;
    a.extension = ext;
    a.run_cmd = interpreter + " {file}";
    return execute(body, task_, a, test_policy());
  }
  BenchmarkTask task_;
};

TEST_F(ContainmentTest, WritesOutsideScratchDirFail) {
  auto outside = std::filesystem::temp_directory_path() / ("plforge-escape-" + std::to_string(::getpid()));
  std::filesystem::remove(outside);
  auto v = run("/bin/sh", ".sh", "echo inside > inside.txt || exit 3\necho escaped > " + outside.string() + "\n");
  EXPECT_NE(v.verdict, VerdictClass::passed) << v.output;
  EXPECT_FALSE(std::filesystem::exists(outside));
}

TEST_F(ContainmentTest, ScratchDirIsWritableAndRemoved) {
  auto v = run("/bin/sh", ".sh", "echo data > inside.txt && pwd\n");
  EXPECT_EQ(v.verdict, VerdictClass::passed) << v.output;
  auto dir = trim(v.output);
  EXPECT_FALSE(dir.empty());
  EXPECT_FALSE(std::filesystem::exists(dir));
}

TEST_F(ContainmentTest, NetworkSocketsFail) {
  if (::access("/usr/bin/python3", X_OK) != 0) GTEST_SKIP() << "python3 not available";
  auto v = run("/usr/bin/python3", ".py",
               "import socket\n"
               "s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)\n"
               "print('opened')\n");
  EXPECT_NE(v.verdict, VerdictClass::passed) << v.output;
  EXPECT_EQ(v.output.find("opened"), std::string::npos);
  auto local = run("/usr/bin/python3", ".py",
                   "import socket\n"
                   "a, b = socket.socketpair()\n"
                   "print('local ok')\n");
  EXPECT_EQ(local.verdict, VerdictClass::passed) << local.output;
}

// ---------------------------------------------------------------------------
// validate_benchmark

TEST_F(ExecuteTest, ValidationAllPass) {
  auto report = validate_benchmark(tasks_, adapter_, test_policy(), 3);
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.summary(), "3/3 valid");
}

TEST_F(ExecuteTest, ValidationNamesBrokenTask) {
  auto tasks = tasks_;
  tasks[1].canonical_solution = "    return 0\n";
  auto report = validate_benchmark(tasks, adapter_, test_policy(), 2);
  EXPECT_FALSE(report.ok());
  ASSERT_EQ(report.failures.size(), 1u);
  EXPECT_EQ(report.failures[0].task_id, "stub/1");
  EXPECT_EQ(report.failures[0].verdict, VerdictClass::test_failure);
  EXPECT_EQ(report.summary(), "2/3 valid\n  invalid: stub/1 (TEST_FAILURE)");
}

TEST_F(ExecuteTest, ValidationWithoutToolchainIsAnError) {
  auto adapter = adapter_;
  adapter.compile_cmd = "no-such-compiler-xyz --check {file}";
  try {
    validate_benchmark(tasks_, adapter, test_policy());
    FAIL();
  } catch (const InfrastructureError& e) {
    EXPECT_NE(std::string(e.what()).find("no-such-compiler-xyz"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// evaluate_model

// Passes on sample 0 of every task, returns garbage otherwise.
class FirstSampleGenerator final : public CompletionGenerator {
 public:
  std::string complete(const BenchmarkTask& t, int sample) const override {
    return sample == 0 ? t.canonical_solution : "    return 0\n";
  }
};

class FailingGenerator final : public CompletionGenerator {
 public:
  explicit FailingGenerator(std::string bad) : bad_(std::move(bad)) {}
  std::string complete(const BenchmarkTask& t, int) const override {
    if (t.task_id == bad_) throw GeneratorError("model server unavailable");
    return t.canonical_solution;
  }

 private:
  std::string bad_;
};

TEST_F(ExecuteTest, CanonicalGeneratorScoresOne) {
  EvalOptions opt;
  opt.workers = 3;
  auto r = evaluate_model(CanonicalGenerator{}, tasks_, opt, adapter_, test_policy());
  EXPECT_EQ(r.pass_at.at(1), 1.0);
  EXPECT_EQ(r.pass1(), 1.0);
  EXPECT_EQ(r.class_counts().at("PASSED"), 3);
  EXPECT_TRUE(r.flags.empty());
  EXPECT_EQ(r.to_json()["metadata"]["adapter"]["language"], "stub");
  EXPECT_FALSE(r.timestamp.empty());
}

TEST_F(ExecuteTest, GarbageGeneratorScoresZero) {
  EvalOptions opt;
  opt.workers = 3;
  auto r = evaluate_model(FixedGenerator("    return ((\n"), tasks_, opt, adapter_, test_policy());
  EXPECT_EQ(r.pass_at.at(1), 0.0);
  EXPECT_EQ(r.class_counts().at("PARSE_ERROR"), 3);
}

TEST_F(ExecuteTest, MultipleSamplesAggregatePerTask) {
  EvalOptions opt;
  opt.n = 3;
  opt.ks = {1, 2, 3};
  opt.workers = 4;
  auto r = evaluate_model(FirstSampleGenerator{}, tasks_, opt, adapter_, test_policy());
  EXPECT_NEAR(r.pass_at.at(1), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.pass_at.at(2), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.pass_at.at(3), 1.0, 1e-12);
  for (const auto& t : r.tasks) {
    ASSERT_EQ(t.samples.size(), 3u);
    for (int s = 0; s < 3; ++s) EXPECT_EQ(t.samples[s].sample_index, s);
  }
  opt.ks = {4};
  EXPECT_THROW(evaluate_model(FirstSampleGenerator{}, tasks_, opt, adapter_, test_policy()), ArgumentError);
}

TEST_F(ExecuteTest, GeneratorFailureCountsAsZeroWithFlag) {
  EvalOptions opt;
  auto r = evaluate_model(FailingGenerator("stub/2"), tasks_, opt, adapter_, test_policy());
  EXPECT_NEAR(r.pass_at.at(1), 2.0 / 3.0, 1e-12);
  ASSERT_EQ(r.flags.size(), 1u);
  EXPECT_NE(r.flags[0].find("stub/2"), std::string::npos);
  EXPECT_EQ(r.tasks[2].correct(), 0);

  opt.strict = true;
  EXPECT_THROW(evaluate_model(FailingGenerator("stub/2"), tasks_, opt, adapter_, test_policy()), GeneratorError);
}

TEST_F(ExecuteTest, CommandGeneratorReadsPromptOnStdin) {
  // Echoes a fixed body, proving the command ran once per task.
  CommandGenerator gen("/bin/sh -c \"cat > /dev/null; printf '    return x + y\\n'\"");
  EvalOptions opt;
  auto r = evaluate_model(gen, {tasks_[0]}, opt, adapter_, test_policy());
  EXPECT_EQ(r.pass_at.at(1), 1.0);
  EXPECT_EQ(r.decoding["generator"], "command");

  CommandGenerator failing("/bin/sh -c \"exit 4\"");
  auto f = evaluate_model(failing, {tasks_[0]}, opt, adapter_, test_policy());
  EXPECT_EQ(f.pass_at.at(1), 0.0);
  ASSERT_EQ(f.flags.size(), 1u);
}

TEST(ProcessTest, ChildIgnoringStdinDoesNotKillParent) {
  const std::string big(4 << 20, 'x');
  auto r = run_command({"/bin/true"}, big, std::chrono::seconds(5));
  EXPECT_EQ(r.exit_code, 0);
  auto g = run_command({"/bin/sh", "-c", "head -c 10 >/dev/null; printf ok"}, big, std::chrono::seconds(5));
  EXPECT_EQ(g.out, "ok");
}

TEST(AggregateTest, ShuffleInvariant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<TaskResult> tasks(1 + rng() % 40);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      tasks[i].task_id = "t" + std::to_string(i);
      for (int s = 0; s < n; ++s) {
        EvalVerdict v;
        v.verdict = rng() % 3 ? VerdictClass::test_failure : VerdictClass::passed;
        tasks[i].samples.push_back(v);
      }
    }
    for (int k = 1; k <= n; ++k) {
      double before = aggregate_pass_at(tasks, n, k);
      auto shuffled = tasks;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      EXPECT_EQ(aggregate_pass_at(shuffled, n, k), before);
    }
  }
}

TEST(ReportTest, JsonRoundTrip) {
  EvalReport r;
  r.model = "m";
  r.n = 2;
  r.ks = {1, 2};
  r.pass_at = {{1, 0.5}, {2, 0.75}};
  TaskResult t;
  t.task_id = "a";
  EvalVerdict v;
  v.task_id = "a";
  v.verdict = VerdictClass::timeout;
  t.samples = {v, v};
  r.tasks = {t};
  r.timestamp = "2026-01-01T00:00:00Z";
  EXPECT_EQ(EvalReport::from_json(r.to_json()).to_json(), r.to_json());
}

// ---------------------------------------------------------------------------
// Leaderboard

std::vector<std::string> models(const Leaderboard& b) {
  std::vector<std::string> out;
  for (const auto& r : b.rows) out.push_back(r.model);
  return out;
}

TEST(LeaderboardTest, SortsAscending) {
  auto b = render_leaderboard(std::vector<LeaderboardRow>{
      {"a", "Open", "7B", 0.051}, {"b", "Open", "7B", 0.664}, {"c", "Close", "--", 0.255}});
  EXPECT_EQ(models(b), (std::vector<std::string>{"a", "c", "b"}));
  EXPECT_NE(b.text().find("5.1%"), std::string::npos);
  auto lines = split_lines(b.text());
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_NE(lines[2].find("5.1%"), std::string::npos);
  EXPECT_NE(lines[3].find("25.5%"), std::string::npos);
  EXPECT_NE(lines[4].find("66.4%"), std::string::npos);
}

TEST(LeaderboardTest, SingleRow) {
  auto b = render_leaderboard(std::vector<LeaderboardRow>{{"only", "Open", "7B", 0.5}});
  EXPECT_EQ(b.rows.size(), 1u);
  EXPECT_EQ(b.to_json()[0]["model"], "only");
  EXPECT_EQ(b.text(),
            "| Model | Type | Params | Pass@1 |\n"
            "|-------|------|--------|--------|\n"
            "| only  | Open | 7B     |  50.0% |\n");
}

TEST(LeaderboardTest, EqualScoresOrderByName) {
  auto b = render_leaderboard(std::vector<LeaderboardRow>{
      {"zeta", "Open", "7B", 0.3}, {"alpha", "Open", "7B", 0.3}, {"mid", "Open", "7B", 0.3}});
  EXPECT_EQ(models(b), (std::vector<std::string>{"alpha", "mid", "zeta"}));
}

TEST(LeaderboardTest, PublishedOrderFromShuffledReports) {
  std::vector<std::string> expected;
  std::vector<EvalReport> reports;
  for (const auto& row : published_leaderboard()) {
    expected.push_back(row.model);
    reports.push_back(synthetic_report(row));
  }
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(reports.begin(), reports.end(), rng);
    EXPECT_EQ(models(render_leaderboard(reports)), expected);
  }
}

TEST(LeaderboardTest, ParamCounts) {
  EXPECT_EQ(parse_param_count("7B"), 7e9);
  EXPECT_EQ(parse_param_count("350M"), 3.5e8);
  EXPECT_EQ(parse_param_count("--"), std::nullopt);
  EXPECT_EQ(parse_param_count(""), std::nullopt);
}

}  // namespace
}  // namespace plforge::eval
