#pragma once

#include "gnes/algorithms.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/stepsizes.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace gnes {

/// Graph as {"n": N, "edges": [[i, j, w], ...]}, 0-based; the loader
/// re-validates all invariants via CommGraph::build.
nlohmann::json graph_to_json(const CommGraph& graph);
CommGraph graph_from_json(const nlohmann::json& j);

/// Instance schema v1: per-agent gradient blocks (G_i, g_i), local sets,
/// coupling blocks. Cost closures are not round-tripped; everything the
/// algorithms and the oracle need is.
nlohmann::json game_to_json(const GameProblem& game);
GameProblem game_from_json(const nlohmann::json& j);

nlohmann::json aggregative_to_json(const AggregativeGame& game);
AggregativeGame aggregative_from_json(const nlohmann::json& j);

nlohmann::json step_plan_to_json(const StepPlan& plan);

/// FNV-1a over the canonical (sorted-key, dumped) JSON text; hex string.
/// Keys oracle cache entries.
std::string fnv1a_hex(const std::string& text);

/// One CSV row per iteration; schema is fixed and ends up byte-identical
/// for identical runs (wall_ms is written as given, 0 in deterministic
/// mode).
struct TraceCsvRow {
  int k = 0;
  double dist_x = 0.0;
  double kkt_res = 0.0;
  double disagreement = 0.0;
  double fp_res = 0.0;
  double fejer_gap = 0.0;
  int inner_max = 0;
  double inner_mean = 0.0;
  int comms = 0;
  double wall_ms = 0.0;
};

std::string trace_csv_header();
std::string trace_csv_line(const TraceCsvRow& row);
void write_trace_csv(const std::string& path, const std::vector<TraceCsvRow>& rows);

}  // namespace gnes
