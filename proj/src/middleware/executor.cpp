#include "polystore/middleware/executor.hpp"

#include <map>

#include "polystore/common/error.hpp"
#include "polystore/common/stopwatch.hpp"

namespace polystore::mw {

namespace {

struct Temp {
  std::string name;
  island::DataModel model;
  Engine engine;
};

struct TempGuard {
  island::Polystore& ps;
  std::vector<Temp> temps;
  void drop_all() {
    for (auto it = temps.rbegin(); it != temps.rend(); ++it) {
      try {
        ps.drop_object(it->name, it->model, it->engine);
      } catch (...) {
      }
    }
    temps.clear();
  }
  ~TempGuard() { drop_all(); }
};

}  // namespace

Execution execute_plan(island::Polystore& ps, const poly::Decomposition& d, const QueryPlan& plan) {
  validate_plan(plan, d);
  Stopwatch total;
  Execution ex;
  std::map<std::string, island::Result> results;
  std::map<std::pair<std::string, Engine>, std::string> staged;  // (node, engine) -> object name
  TempGuard guard{ps, {}};
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    Stopwatch sw;
    try {
      switch (s.kind) {
        case StepKind::execute_container: {
          const auto& c = d.containers.at(std::stoul(s.node.substr(1)));
          results[s.node] = ps.execute(c.island, s.engine, c.text);
          break;
        }
        case StepKind::migrate: {
          if (s.base) {
            ps.cast_migrate(s.node, s.from, s.to, s.spec);
            guard.temps.push_back({s.node, s.spec.target, s.to});
            break;
          }
          const auto name = ps.temp_name("t");
          ps.materialize(results.at(s.node), s.spec.target, s.to, name);
          guard.temps.push_back({name, s.spec.target, s.to});
          staged[{s.node, s.to}] = name;
          break;
        }
        case StepKind::combine: {
          const auto& r = d.remainder.nodes.at(std::stoul(s.node.substr(1)));
          std::string text;
          for (std::size_t k = 0; k < r.slots.size(); ++k) {
            text += r.texts[k] + staged.at({node_id(r.slots[k]), s.engine});
          }
          text += r.texts.back();
          results[s.node] = ps.execute(r.island, s.engine, text);
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(e.code(), "plan " + plan.id + " step " + std::to_string(i) + " (" + s.describe() + "): " + e.what());
    }
    ex.steps.push_back({i, s.describe(), sw.elapsed_ms()});
  }
  ex.result = std::move(results.at(plan.steps.back().node));
  guard.drop_all();
  ex.total_ms = total.elapsed_ms();
  return ex;
}

}  // namespace polystore::mw
