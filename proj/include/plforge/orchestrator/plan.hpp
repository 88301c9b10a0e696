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

// Training-run arithmetic: batch sizes, step counts, the checkpoint rule
// and the token-budget by instruction-count ablation grid. Nothing here
// trains a model.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plforge/common.hpp"

namespace plforge::orchestrator {

struct TrainingPlan {
  std::uint64_t per_device_batch = 0;  // B_d
  std::uint64_t grad_accum = 0;        // G_a
  std::uint64_t devices = 0;           // N_d
  std::uint64_t samples = 0;           // N
  std::uint64_t epochs = 0;            // E
  std::uint64_t interval = 250;        // eval/save interval in steps

  std::uint64_t effective_batch = 0;  // B_d * G_a * N_d
  std::uint64_t steps_per_epoch = 0;  // floor(N / B_e)
  std::uint64_t total_steps = 0;      // floor(N / (B_d * G_a)) * E
  std::vector<std::string> warnings;

  json to_json() const {
    return {{"per_device_batch", per_device_batch}, {"grad_accum", grad_accum},
            {"devices", devices},                   {"samples", samples},
            {"epochs", epochs},                     {"interval", interval},
            {"effective_batch", effective_batch},   {"steps_per_epoch", steps_per_epoch},
            {"total_steps", total_steps},           {"warnings", warnings}};
  }

  std::string render() const {
    std::string s;
    s += "per-device batch (B_d)      " + std::to_string(per_device_batch) + "\n";
    s += "grad accumulation (G_a)     " + std::to_string(grad_accum) + "\n";
    s += "devices (N_d)               " + std::to_string(devices) + "\n";
    s += "samples (N)                 " + std::to_string(samples) + "\n";
    s += "epochs (E)                  " + std::to_string(epochs) + "\n";
    s += "effective batch (B_e)       " + std::to_string(effective_batch) + "\n";
    s += "steps per epoch (S_e)       " + std::to_string(steps_per_epoch) + "\n";
    s += "total steps (T)             " + std::to_string(total_steps) + "\n";
    s += "eval/save interval          " + std::to_string(interval) + "\n";
    for (const auto& w : warnings) s += "warning: " + w + "\n";
    return s;
  }
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw ArgumentError(std::string(what) + " overflows");
  return r;
}

inline std::uint64_t positive(std::int64_t v, const char* name) {
  if (v < 1) throw ArgumentError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

inline TrainingPlan compute_plan(std::int64_t per_device_batch, std::int64_t grad_accum, std::int64_t devices,
                                 std::int64_t samples, std::int64_t epochs, std::int64_t interval = 250) {
  TrainingPlan p;
  p.per_device_batch = detail::positive(per_device_batch, "per-device batch");
  p.grad_accum = detail::positive(grad_accum, "gradient accumulation steps");
  p.devices = detail::positive(devices, "device count");
  p.samples = detail::positive(samples, "sample count");
  p.epochs = detail::positive(epochs, "epochs");
  p.interval = detail::positive(interval, "interval");

  const auto accum_batch = detail::checked_mul(p.per_device_batch, p.grad_accum, "B_d * G_a");
  p.effective_batch = detail::checked_mul(accum_batch, p.devices, "effective batch");
  p.steps_per_epoch = p.samples / p.effective_batch;
  p.total_steps = detail::checked_mul(p.samples / accum_batch, p.epochs, "total steps");

  if (p.total_steps == 0)
    p.warnings.push_back("sample count " + std::to_string(p.samples) + " is below B_d * G_a = " +
                         std::to_string(accum_batch) + "; no full step fits");
  if (p.steps_per_epoch == 0 && p.total_steps != 0)
    p.warnings.push_back("sample count is below the effective batch; S_e = 0");
  return p;
}

enum class CheckpointAction { save, skip };

inline const char* to_string(CheckpointAction a) { return a == CheckpointAction::save ? "save" : "skip"; }

struct CheckpointDecision {
  std::uint64_t step = 0;
  double loss = 0.0;
  double running_min = 0.0;  // min(L_1..L_s)
  CheckpointAction action = CheckpointAction::skip;
  bool at_interval = false;
  bool new_minimum = false;

  bool save() const { return action == CheckpointAction::save; }

  std::vector<std::string> reasons() const {
    std::vector<std::string> r;
    if (at_interval) r.push_back("interval");
    if (new_minimum) r.push_back("best_loss");
    return r;
  }

  json to_json() const {
    return {{"step", step},
            {"loss", loss},
            {"running_min", running_min},
            {"action", to_string(action)},
            {"reasons", reasons()}};
  }
};

// `history` holds L_1..L_{s-1}. Saves at multiples of the interval and when
// L_s is strictly below every earlier loss; step 1 has no earlier loss and
// always saves. Both reasons are recorded when both hold.
inline CheckpointDecision checkpoint_decision(std::uint64_t step, double loss, const std::vector<double>& history,
                                              std::uint64_t interval = 250) {
  if (step < 1) throw ArgumentError("step must be >= 1");
  if (interval < 1) throw ArgumentError("interval must be >= 1");
  std::optional<double> prior;
  for (double l : history)
    if (!std::isnan(l) && (!prior || l < *prior)) prior = l;

  CheckpointDecision d;
  d.step = step;
  d.loss = loss;
  d.at_interval = step % interval == 0;
  d.new_minimum = !std::isnan(loss) && (!prior || loss < *prior);
  d.running_min = d.new_minimum ? loss : prior.value_or(loss);
  d.action = d.at_interval || d.new_minimum ? CheckpointAction::save : CheckpointAction::skip;
  return d;
}

// Streams losses through checkpoint_decision in O(1) per step and keeps a
// retention pointer to the best checkpoint saved so far.
class CheckpointTracker {
 public:
  explicit CheckpointTracker(std::uint64_t interval = 250) : interval_(interval) {
    if (interval < 1) throw ArgumentError("interval must be >= 1");
  }

  const CheckpointDecision& observe(double loss) {
    CheckpointDecision d;
    d.step = ++step_;
    d.loss = loss;
    d.at_interval = d.step % interval_ == 0;
    d.new_minimum = !std::isnan(loss) && (!min_ || loss < *min_);
    if (d.new_minimum) {
      min_ = loss;
      best_step_ = d.step;
    }
    d.running_min = min_.value_or(loss);
    d.action = d.at_interval || d.new_minimum ? CheckpointAction::save : CheckpointAction::skip;
    decisions_.push_back(d);
    return decisions_.back();
  }

  const std::vector<CheckpointDecision>& decisions() const { return decisions_; }
  std::optional<std::uint64_t> best_step() const { return best_step_; }

  std::vector<std::uint64_t> saved_steps() const {
    std::vector<std::uint64_t> out;
    for (const auto& d : decisions_)
      if (d.save()) out.push_back(d.step);
    return out;
  }

  json to_json() const {
    json j = {{"interval", interval_}, {"best_step", best_step_ ? json(*best_step_) : json(nullptr)}};
    j["saved"] = json::array();
    for (const auto& d : decisions_)
      if (d.save()) j["saved"].push_back(d.to_json());
    return j;
  }

 private:
  std::uint64_t interval_;
  std::uint64_t step_ = 0;
  std::optional<double> min_;
  std::optional<std::uint64_t> best_step_;
  std::vector<CheckpointDecision> decisions_;
};

struct ExperimentCell {
  std::uint64_t tokens = 0;        // pretraining token budget
  std::uint64_t instructions = 0;  // finetuning instruction count
  std::string status = "planned";
  std::optional<double> result;  // pass@1 once measured

  json to_json() const {
    return {{"tokens", tokens},
            {"instructions", instructions},
            {"status", status},
            {"result", result ? json(*result) : json(nullptr)}};
  }
};

inline const std::vector<std::uint64_t>& default_token_axis() {
  static const std::vector<std::uint64_t> axis = {0, 1'000'000, 2'000'000, 3'000'000, 4'000'000, 5'000'000, 6'000'000};
  return axis;
}

inline const std::vector<std::uint64_t>& default_instruction_axis() {
  static const std::vector<std::uint64_t> axis = {0, 500, 1000, 1500, 2000, 2500, 3000, 3200};
  return axis;
}

// Row-major over the instruction axis, then tokens.
inline std::vector<ExperimentCell> plan_ablation_grid(const std::vector<std::uint64_t>& token_axis,
                                                      const std::vector<std::uint64_t>& instruction_axis) {
  auto check = [](const std::vector<std::uint64_t>& axis, const char* name) {
    if (axis.empty()) throw ArgumentError(std::string(name) + " axis is empty");
    std::set<std::uint64_t> seen;
    for (auto v : axis)
      if (!seen.insert(v).second)
        throw ArgumentError(std::string("duplicate ") + name + " axis value " + std::to_string(v));
  };
  check(token_axis, "token");
  check(instruction_axis, "instruction");
  std::vector<ExperimentCell> cells;
  cells.reserve(token_axis.size() * instruction_axis.size());
  for (auto i : instruction_axis)
    for (auto t : token_axis) cells.push_back({t, i, "planned", std::nullopt});
  return cells;
}

// "6M" -> 6000000, "500" -> 500, "1.5K" -> 1500.
inline std::uint64_t parse_axis_value(std::string_view s) {
  s = trim_view(s);
  if (s.empty()) throw ArgumentError("empty axis value");
  double scale = 1;
  switch (s.back()) {
    case 'k': case 'K': scale = 1e3; break;
    case 'm': case 'M': scale = 1e6; break;
    case 'b': case 'B': scale = 1e9; break;
    default: break;
  }
  if (scale != 1) s.remove_suffix(1);
  std::string str(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != str.size() || v < 0 || std::round(v * scale) != v * scale)
    throw ArgumentError("bad axis value '" + std::string(s) + "'");
  return static_cast<std::uint64_t>(v * scale);
}

inline std::vector<std::uint64_t> parse_axis(std::string_view csv) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(csv, ',')) out.push_back(parse_axis_value(part));
  return out;
}

}  // namespace plforge::orchestrator
