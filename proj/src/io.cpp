#include "gnes/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

namespace gnes {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Vec::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Mat mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Mat m(rows, cols);
  const json& data = j.at("data");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = data.at(r).get<std::vector<double>>();
    require(static_cast<Eigen::Index>(row.size()) == cols, Errc::BadConfig,
            "matrix row length mismatch in JSON");
    m.row(r) = Vec::Map(row.data(), cols).transpose();
  }
  return m;
}

json set_to_json(const LocalSet& s) {
  if (s.is_full_space()) return json{{"type", "full"}};
  if (const auto* b = std::get_if<LocalSet::Box>(&s.v)) {
    return json{{"type", "box"}, {"lo", vec_to_json(b->lo)}, {"hi", vec_to_json(b->hi)}};
  }
  const auto& bh = std::get<LocalSet::BoxHyperplane>(s.v);
  return json{{"type", "box_hyperplane"},
              {"lo", vec_to_json(bh.lo)},
              {"hi", vec_to_json(bh.hi)},
              {"level", bh.level}};
}

LocalSet set_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "full") return LocalSet::full_space();
  if (type == "box") return LocalSet::box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
  if (type == "box_hyperplane") {
    return LocalSet::box_hyperplane(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")),
                                    j.at("level").get<double>());
  }
  fail(Errc::BadConfig, "unknown local set type: " + type);
}

}  // namespace

json graph_to_json(const CommGraph& graph) {
  json edges = json::array();
  for (const auto& e : graph.edges()) edges.push_back(json::array({e.out, e.in, e.w}));
  return json{{"n", graph.num_agents()}, {"edges", edges}};
}

CommGraph graph_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  Mat w = Mat::Zero(n, n);
  for (const auto& e : j.at("edges")) {
    const int i = e.at(0).get<int>(), k = e.at(1).get<int>();
    require(i >= 0 && i < n && k >= 0 && k < n && i != k, Errc::BadConfig,
            "graph JSON: edge endpoints out of range");
    w(i, k) = w(k, i) = e.at(2).get<double>();
  }
  return CommGraph::build(w);
}

json game_to_json(const GameProblem& game) {
  require(game.linear_gradient(), Errc::MissingConstants,
          "only linear-gradient games are serializable");
  json agents = json::array();
  for (int i = 0; i < game.N; ++i) {
    agents.push_back(json{{"dim", game.dims[i]},
                          {"G", mat_to_json(game.G[i])},
                          {"g", vec_to_json(game.g[i])},
                          {"set", set_to_json(game.sets[i])},
                          {"A", mat_to_json(game.A[i])},
                          {"b", vec_to_json(game.b[i])}});
  }
  return json{{"schema", "gnes-instance"}, {"version", 1}, {"m", game.m}, {"agents", agents}};
}

GameProblem game_from_json(const json& j) {
  require(j.value("schema", "") == "gnes-instance" && j.value("version", 0) == 1, Errc::BadConfig,
          "unknown instance schema/version");
  GameProblem game;
  game.m = j.at("m").get<int>();
  for (const auto& a : j.at("agents")) {
    game.dims.push_back(a.at("dim").get<int>());
    game.G.push_back(mat_from_json(a.at("G")));
    game.g.push_back(vec_from_json(a.at("g")));
    game.sets.push_back(set_from_json(a.at("set")));
    game.A.push_back(mat_from_json(a.at("A")));
    game.b.push_back(vec_from_json(a.at("b")));
  }
  game.finalize();
  return game;
}

json aggregative_to_json(const AggregativeGame& game) {
  json agents = json::array();
  for (int i = 0; i < game.N; ++i) {
    agents.push_back(json{{"Qown", mat_to_json(game.Qown[i])},
                          {"lin", vec_to_json(game.lin[i])},
                          {"set", set_to_json(game.sets[i])},
                          {"A", mat_to_json(game.A[i])},
                          {"b", vec_to_json(game.b[i])}});
  }
  return json{{"schema", "gnes-aggregative"},
              {"version", 1},
              {"m", game.m},
              {"nbar", game.nbar},
              {"Qagg", mat_to_json(game.Qagg)},
              {"pconst", vec_to_json(game.pconst)},
              {"agents", agents}};
}

AggregativeGame aggregative_from_json(const json& j) {
  require(j.value("schema", "") == "gnes-aggregative" && j.value("version", 0) == 1,
          Errc::BadConfig, "unknown aggregative schema/version");
  AggregativeGame game;
  game.m = j.at("m").get<int>();
  game.Qagg = mat_from_json(j.at("Qagg"));
  game.pconst = vec_from_json(j.at("pconst"));
  for (const auto& a : j.at("agents")) {
    game.Qown.push_back(mat_from_json(a.at("Qown")));
    game.lin.push_back(vec_from_json(a.at("lin")));
    game.sets.push_back(set_from_json(a.at("set")));
    game.A.push_back(mat_from_json(a.at("A")));
    game.b.push_back(vec_from_json(a.at("b")));
  }
  game.finalize();
  return game;
}

json step_plan_to_json(const StepPlan& plan) {
  json j{{"alpha", plan.alpha},
         {"eta_safe", plan.eta_safe},
         {"tau", vec_to_json(plan.tau)},
         {"delta", vec_to_json(plan.delta)},
         {"nu", vec_to_json(plan.nu)},
         {"mu_fa", plan.mu_fa},
         {"norm_phi_ne", plan.norm_phi_ne}};
  if (plan.beta) j["beta"] = *plan.beta;
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string trace_csv_header() {
  return "k,dist_x,kkt_res,disagreement,fp_res,fejer_gap,inner_max,inner_mean,comms,wall_ms";
}

std::string trace_csv_line(const TraceCsvRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%d,%.17g", row.k,
                row.dist_x, row.kkt_res, row.disagreement, row.fp_res, row.fejer_gap,
                row.inner_max, row.inner_mean, row.comms, row.wall_ms);
  return buf;
}

void write_trace_csv(const std::string& path, const std::vector<TraceCsvRow>& rows) {
  std::ofstream out(path);
  require(out.good(), Errc::BadConfig, "cannot open trace file for writing: " + path);
  out << trace_csv_header() << "\n";
  for (const auto& row : rows) out << trace_csv_line(row) << "\n";
}

}  // namespace gnes
